use gaeq::solver::{verify_conjecture, ConjectureOutcome, SolverConfig};

use crate::output::{to_json, write_file, Table};
use crate::{Global, Status};

fn verdict(o: &ConjectureOutcome) -> String {
    match o {
        ConjectureOutcome::Pass { case, .. } if case.expect_complete => "equal".into(),
        ConjectureOutcome::Pass { .. } => "gap (expected)".into(),
        ConjectureOutcome::Fail { case, .. } if case.expect_complete => "FAIL: span short".into(),
        ConjectureOutcome::Fail { .. } => "FAIL: no gap".into(),
        ConjectureOutcome::Skipped { reason, .. } => format!("skipped: {reason}"),
    }
}

pub fn run(g: &Global, l_max: usize, rank_tol: Option<f64>) -> anyhow::Result<Status> {
    anyhow::ensure!(l_max >= 2, "--l-max must be at least 2");
    anyhow::ensure!(l_max < 4 || g.long, "l = 4 is long-running; pass --long to run it");
    let mut config = SolverConfig::default();
    if let Some(t) = rank_tol {
        config.rel_tol = t;
    }
    let outcomes = verify_conjecture(l_max, g.long, &config)?;
    let passed = outcomes.iter().all(ConjectureOutcome::passed);
    if let Some(path) = &g.out {
        write_file(path, &to_json(&outcomes)?)?;
    }
    if g.json {
        print!("{}", to_json(&outcomes)?);
        return Ok(Status::from_bool(passed));
    }
    let mut t = Table::new(&["l", "algebra", "group", "join", "span", "null", "seconds", "verdict"]);
    for o in &outcomes {
        let (case, l, dims, secs) = match o {
            ConjectureOutcome::Pass { case, report, seconds } | ConjectureOutcome::Fail { case, report, seconds } => (
                case,
                report.l,
                Some((report.span_dim, report.nullspace_dim)),
                format!("{seconds:.1}"),
            ),
            ConjectureOutcome::Skipped { case, l, .. } => (case, *l, None, "-".into()),
        };
        t.row(vec![
            l.to_string(),
            case.algebra.to_string(),
            case.group.to_string(),
            if case.with_join { "yes" } else { "no" }.into(),
            dims.map_or("-".into(), |d| d.0.to_string()),
            dims.map_or("-".into(), |d| d.1.to_string()),
            secs,
            verdict(o),
        ]);
    }
    print!("{}", t.render());
    Ok(Status::from_bool(passed))
}
