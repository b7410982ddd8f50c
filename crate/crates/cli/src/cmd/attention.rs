use std::path::Path;

use gaeq::embed::{embed_point, read_points, Point3};
use gaeq::layers::{attn_logits, AttnKind, AttnVariant, MvChannels};
use gaeq::AlgebraKind;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::random_points;
use crate::output::{sci, to_json, write_file, Table};
use crate::{Global, Status};

type Reference<'a> = Box<dyn Fn(usize, usize) -> f64 + 'a>;

#[derive(Serialize)]
struct Pair {
    i: usize,
    j: usize,
    logit: f64,
    reference: f64,
    deviation: f64,
}

#[derive(Serialize)]
struct Report {
    variant: AttnKind,
    algebra: AlgebraKind,
    reference: &'static str,
    points: Vec<[f64; 3]>,
    pairs: Vec<Pair>,
    max_deviation: f64,
    tol: f64,
    passed: bool,
}

pub fn run(g: &Global, kind: AttnKind, points: Option<&Path>, count: usize) -> anyhow::Result<Status> {
    let algebra = match (kind.algebra(), g.algebra) {
        (Some(a), Some(b)) if a != b => anyhow::bail!("{kind} attention needs --algebra {a}"),
        (Some(a), _) => a,
        (None, b) => b.unwrap_or(AlgebraKind::Pga),
    };
    let pts = match points {
        Some(p) => read_points(p)?,
        None => random_points(&mut ChaCha8Rng::seed_from_u64(g.seed), count),
    };
    anyhow::ensure!(!pts.is_empty(), "no points to compare");
    let tol = g.tol.unwrap_or(1e-9);

    let alg = algebra.algebra();
    let mvs: Vec<_> = pts.iter().map(|p| vec![embed_point(algebra, *p, Point3::ORIGIN)]).collect();
    let x = MvChannels::from_tokens(&alg, &mvs, &vec![vec![]; pts.len()])?;
    let point_channels = match kind {
        AttnKind::EgaDistance | AttnKind::IpPgaToCga => vec![0],
        _ => vec![],
    };
    let logits = attn_logits(&AttnVariant::new(kind, point_channels)?, &x, &x)?;

    let (label, reference): (&str, Reference) = match (kind, algebra) {
        (AttnKind::EgaDistance, _) => ("-|p-q|^2", Box::new(|i, j| -pts[i].distance_sq(pts[j]))),
        (AttnKind::PlainInner, AlgebraKind::Pga) => {
            let c = logits[(0, 0)];
            ("constant", Box::new(move |_, _| c))
        }
        (AttnKind::PlainInner, AlgebraKind::Ega) => ("p.q", Box::new(|i, j| pts[i].dot(pts[j]))),
        _ => ("-|p-q|^2/2", Box::new(|i, j| -0.5 * pts[i].distance_sq(pts[j]))),
    };
    let mut pairs = Vec::new();
    for i in 0..pts.len() {
        for j in 0..pts.len() {
            let (logit, r) = (logits[(i, j)], reference(i, j));
            pairs.push(Pair {
                i,
                j,
                logit,
                reference: r,
                deviation: (logit - r).abs() / r.abs().max(1.0),
            });
        }
    }
    let max_deviation = pairs.iter().map(|p| p.deviation).fold(0.0, f64::max);
    let passed = max_deviation <= tol;
    let report = Report {
        variant: kind,
        algebra,
        reference: label,
        points: pts.iter().map(|p| p.to_array()).collect(),
        pairs,
        max_deviation,
        tol,
        passed,
    };
    if let Some(path) = &g.out {
        write_file(path, &to_json(&report)?)?;
    }
    if g.json {
        print!("{}", to_json(&report)?);
    } else {
        println!("{kind} attention in the {algebra}, reference {label}");
        let mut t = Table::new(&["i", "j", "logit", "reference", "deviation"]);
        for p in &report.pairs {
            t.row(vec![
                p.i.to_string(),
                p.j.to_string(),
                format!("{:.9}", p.logit),
                format!("{:.9}", p.reference),
                sci(p.deviation),
            ]);
        }
        print!("{}", t.render());
        println!("max deviation {}", sci(max_deviation));
        println!("{}", if passed { "PASS" } else { "FAIL" });
    }
    Ok(Status::from_bool(passed))
}
