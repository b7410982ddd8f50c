use std::path::Path;

use anyhow::Context as _;
use gaeq::group::{random_group_element_with, Group};
use gaeq::transformer::{build_model, equivariance_error, translation_error, ModelConfig, TokenBatch, Variant};
use gaeq::Versor;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::random_points;
use crate::output::{sci, to_json, write_file, Table};
use crate::{Global, Status};

/// E-GATr under a translation that the centering point does not follow.
#[derive(Serialize)]
struct TranslationProbe {
    translation: [f64; 3],
    uncompensated_error: f64,
    recentered_error: f64,
}

#[derive(Serialize)]
struct Report {
    variant: Variant,
    group: Group,
    samples: usize,
    tokens: usize,
    identity_error: f64,
    max_error: f64,
    mean_error: f64,
    tol: f64,
    passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    translation_probe: Option<TranslationProbe>,
}

pub fn run(
    g: &Global,
    variant: Variant,
    config: Option<&Path>,
    samples: usize,
    tokens: usize,
) -> anyhow::Result<Status> {
    anyhow::ensure!(samples > 0 && tokens > 0, "--samples and --tokens must be positive");
    let cfg: ModelConfig = match config {
        Some(p) => serde_json::from_str(
            &std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?,
        )
        .with_context(|| format!("parsing model config {}", p.display()))?,
        None => ModelConfig {
            seed: g.seed,
            ..ModelConfig::default_for(variant)
        },
    };
    let model = build_model(&cfg)?;
    let alg = cfg.algebra.algebra();
    let group = g.group.unwrap_or(Group::E3);
    let tol = g.tol.unwrap_or(1e-9);

    let mut rng = ChaCha8Rng::seed_from_u64(g.seed);
    let points = random_points(&mut rng, tokens);
    let batch = if cfg.variant == Variant::E {
        TokenBatch::centered(points)?
    } else {
        TokenBatch::new(points)
    };
    let identity_error = equivariance_error(&model, &batch, &Versor::identity(&alg))?;
    let errors = (0..samples)
        .map(|_| {
            let v = random_group_element_with(&alg, group, &mut rng)?;
            Ok(equivariance_error(&model, &batch, &v)?)
        })
        .collect::<anyhow::Result<Vec<f64>>>()?;
    let max_error = errors.iter().copied().fold(identity_error, f64::max);
    let mean_error = errors.iter().sum::<f64>() / samples as f64;
    let passed = max_error.is_finite() && max_error <= tol;

    let translation_probe = if cfg.variant == Variant::E {
        let t = [0.0; 3].map(|_: f64| rng.random_range(-2.0..=2.0));
        Some(TranslationProbe {
            translation: t,
            uncompensated_error: translation_error(&model, &batch, t, false)?,
            recentered_error: translation_error(&model, &batch, t, true)?,
        })
    } else {
        None
    };

    let report = Report {
        variant: cfg.variant,
        group,
        samples,
        tokens,
        identity_error,
        max_error,
        mean_error,
        tol,
        passed,
        translation_probe,
    };
    if let Some(path) = &g.out {
        write_file(path, &to_json(&report)?)?;
    }
    if g.json {
        print!("{}", to_json(&report)?);
    } else {
        let mut t = Table::new(&["quantity", "value"]);
        t.row(vec!["variant".into(), report.variant.to_string()]);
        t.row(vec!["group".into(), group.to_string()]);
        t.row(vec!["samples".into(), samples.to_string()]);
        t.row(vec!["identity error".into(), sci(identity_error)]);
        t.row(vec!["max error".into(), sci(max_error)]);
        t.row(vec!["mean error".into(), sci(mean_error)]);
        t.row(vec!["tolerance".into(), sci(tol)]);
        if let Some(p) = &report.translation_probe {
            t.row(vec!["translation, center fixed".into(), sci(p.uncompensated_error)]);
            t.row(vec!["translation, recentered".into(), sci(p.recentered_error)]);
        }
        print!("{}", t.render());
        if report.translation_probe.is_some() {
            println!("note: E-GATr is only translation equivariant when the center moves with the points");
        }
        println!("{}", if passed { "PASS" } else { "FAIL" });
    }
    Ok(Status::from_bool(passed))
}
