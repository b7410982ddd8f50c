use gaeq::group::Group;
use gaeq::solver::{
    closed_form_basis, closed_form_maps, membership_residual, solve_linear_basis_report, subspace_distance,
    SolverConfig,
};
use gaeq::{Algebra, AlgebraKind, Multivector};
use nalgebra::DMatrix;
use serde::Serialize;

use crate::output::{sci, to_json, write_file, Table};
use crate::{Global, Status};

#[derive(Serialize)]
struct Report {
    algebra: AlgebraKind,
    group: Group,
    dimension: usize,
    threshold: f64,
    gap_ratio: f64,
    spot_check_residual: f64,
    /// E(3) only: distance between the solved and closed-form spans.
    closed_form_distance: Option<f64>,
    /// Worst membership residual of a closed-form map in the solved span.
    closed_form_membership: f64,
    /// Membership residual of `x ↦ I ⟨x⟩_k` for each grade `k`.
    pseudoscalar_membership: Vec<f64>,
    spectrum: Vec<f64>,
    warnings: Vec<String>,
    passed: bool,
}

fn pseudoscalar_grade_map(alg: &std::sync::Arc<Algebra>, k: usize) -> anyhow::Result<DMatrix<f64>> {
    let ps = Multivector::blade(alg, alg.pseudoscalar(), 1.0);
    let mut m = DMatrix::zeros(alg.size(), alg.size());
    for b in alg.blades_of_grade(k) {
        let col = ps.gp(&Multivector::blade(alg, b, 1.0))?;
        for (i, v) in col.coeffs().iter().enumerate() {
            m[(i, b.mask())] = *v;
        }
    }
    Ok(m)
}

pub fn run(g: &Global, rank_tol: Option<f64>) -> anyhow::Result<Status> {
    let kind = g.algebra.unwrap_or(AlgebraKind::Ega);
    let group = g.group.unwrap_or(Group::E3);
    let tol = g.tol.unwrap_or(1e-8);
    let mut config = SolverConfig::default();
    if let Some(t) = rank_tol {
        config.rel_tol = t;
    }
    let alg = kind.algebra();
    let solved = solve_linear_basis_report(&alg, group, &config)?;
    let closed = closed_form_basis(&alg)?;
    let closed_form_distance = (group == Group::E3).then(|| subspace_distance(&solved.basis, &closed));
    let closed_form_membership = closed_form_maps(&alg)?
        .iter()
        .map(|n| membership_residual(&n.matrix, &solved.basis))
        .fold(0.0, f64::max);
    let pseudoscalar_membership = (0..=alg.dim())
        .map(|k| Ok(membership_residual(&pseudoscalar_grade_map(&alg, k)?, &solved.basis)))
        .collect::<anyhow::Result<Vec<_>>>()?;
    let passed = solved.warnings.is_empty()
        && closed_form_membership < tol
        && closed_form_distance.is_none_or(|d| d < tol);

    let mut spectrum = solved.spectrum.clone();
    spectrum.sort_by(|a, b| b.total_cmp(a));
    let report = Report {
        algebra: kind,
        group,
        dimension: solved.basis.dim(),
        threshold: solved.threshold,
        gap_ratio: solved.gap_ratio,
        spot_check_residual: solved.spot_check_residual,
        closed_form_distance,
        closed_form_membership,
        pseudoscalar_membership,
        spectrum,
        warnings: solved.warnings.clone(),
        passed,
    };
    if let Some(path) = &g.out {
        write_file(path, &to_json(&solved.basis)?)?;
    }
    if g.json {
        print!("{}", to_json(&report)?);
    } else {
        print_text(&report, &alg);
    }
    Ok(Status::from_bool(passed))
}

fn print_text(r: &Report, alg: &Algebra) {
    let kept = r.spectrum.iter().filter(|s| **s > r.threshold).count();
    let mut t = Table::new(&["quantity", "value"]);
    t.row(vec!["algebra".into(), r.algebra.to_string()]);
    t.row(vec!["group".into(), r.group.to_string()]);
    t.row(vec!["dimension".into(), r.dimension.to_string()]);
    t.row(vec!["rank threshold".into(), sci(r.threshold)]);
    t.row(vec!["spectral gap ratio".into(), sci(r.gap_ratio)]);
    t.row(vec!["spot-check residual".into(), sci(r.spot_check_residual)]);
    if let Some(d) = r.closed_form_distance {
        t.row(vec!["distance to closed form".into(), sci(d)]);
    }
    t.row(vec!["closed-form membership".into(), sci(r.closed_form_membership)]);
    for (k, m) in r.pseudoscalar_membership.iter().enumerate() {
        if alg.grade_dim(k) > 0 {
            t.row(vec![format!("pseudoscalar x grade {k}"), sci(*m)]);
        }
    }
    t.row(vec!["singular values".into(), r.spectrum.len().to_string()]);
    t.row(vec![
        "smallest kept".into(),
        r.spectrum.get(kept.wrapping_sub(1)).map_or("-".into(), |s| sci(*s)),
    ]);
    t.row(vec![
        "largest dropped".into(),
        r.spectrum.get(kept).map_or("-".into(), |s| sci(*s)),
    ]);
    print!("{}", t.render());
    for w in &r.warnings {
        println!("warning: {w}");
    }
    println!("{}", if r.passed { "PASS" } else { "FAIL" });
}
