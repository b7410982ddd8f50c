use gaeq::embed::{embed_point, Point3};
use gaeq::layers::{equi_norm, MvChannels, NormConfig, NormVariant};
use gaeq::{AlgebraKind, Multivector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::random_points;
use crate::output::{to_json, write_file};
use crate::{Global, Status};

#[derive(Serialize)]
struct Step {
    iteration: usize,
    max_abs: f64,
    /// Growth over the previous iteration.
    ratio: Option<f64>,
}

/// Normalizes one multivector `iterations` times. The CGA input is
/// `a (1 + I)` for a seeded `a`, whose scalar and pseudoscalar cancel in the
/// inner product; other algebras, or `point`, use an embedded random point.
pub fn run(g: &Global, variant: NormVariant, epsilon: f64, iterations: usize, point: bool) -> anyhow::Result<Status> {
    let kind = g.algebra.unwrap_or(AlgebraKind::Cga);
    let cfg = NormConfig::new(variant, epsilon)?;
    if cfg.check(kind).is_err() {
        log::warn!("{variant} normalization is unstable in the {kind}; probing anyway");
    }
    let alg = kind.algebra();
    let mut rng = ChaCha8Rng::seed_from_u64(g.seed);
    let input = if kind == AlgebraKind::Cga && !point {
        let a: f64 = rng.random_range(0.5..=2.0);
        Multivector::scalar(&alg, a) + Multivector::blade(&alg, alg.pseudoscalar(), a)
    } else {
        embed_point(kind, random_points(&mut rng, 1)[0], Point3::ORIGIN)
    };
    let mut x = MvChannels::from_tokens(&alg, &[vec![input]], &[vec![]])?;
    let mut steps = vec![Step {
        iteration: 0,
        max_abs: x.max_abs(),
        ratio: None,
    }];
    for i in 1..=iterations {
        x = equi_norm(&cfg, &x);
        let prev = steps[i - 1].max_abs;
        let m = x.max_abs();
        steps.push(Step {
            iteration: i,
            max_abs: m,
            ratio: (prev > 0.0).then(|| m / prev),
        });
    }
    let body = if g.json {
        to_json(&steps)?
    } else {
        let mut w = csv::Writer::from_writer(Vec::new());
        for s in &steps {
            w.serialize(s)?;
        }
        String::from_utf8(w.into_inner()?)?
    };
    match &g.out {
        Some(path) => write_file(path, &body)?,
        None => print!("{body}"),
    }
    Ok(Status::Pass)
}
