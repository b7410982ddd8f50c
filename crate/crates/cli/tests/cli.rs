use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn gaeq(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gaeq")).args(args).output().expect("binary runs")
}

fn json(args: &[&str]) -> (i32, Value) {
    let mut all = args.to_vec();
    all.push("--json");
    let out = gaeq(&all);
    let stdout = String::from_utf8(out.stdout).unwrap();
    let v = serde_json::from_str(&stdout).unwrap_or_else(|e| panic!("{e}: {stdout}"));
    (out.status.code().unwrap(), v)
}

fn fixture_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

#[test]
fn tables_are_deterministic_and_match_fixtures() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for dir in [a.path(), b.path()] {
        let out = gaeq(&["tables", "--out", dir.to_str().unwrap()]);
        assert!(out.status.success());
    }
    let files = ["cayley_ega.json", "cayley_pga.json", "join_pga.json", "cayley_cga.json"];
    let bless = std::env::var_os("GAEQ_BLESS").is_some();
    for f in files {
        let first = std::fs::read(a.path().join(f)).unwrap();
        assert_eq!(first, std::fs::read(b.path().join(f)).unwrap(), "{f}");
        let golden = fixture_dir().join(f);
        if bless {
            std::fs::write(&golden, &first).unwrap();
        } else {
            assert_eq!(first, std::fs::read(&golden).unwrap(), "{f} differs from its fixture");
        }
    }
    let rows = |f: &str| -> usize {
        let v: Value = serde_json::from_slice(&std::fs::read(a.path().join(f)).unwrap()).unwrap();
        v["rows"].as_array().unwrap().len()
    };
    assert_eq!(rows("cayley_ega.json"), 64);
    assert_eq!(rows("join_pga.json"), 256);
    assert_eq!(rows("cayley_cga.json"), 1024);
}

#[test]
fn worked_product_appears_in_the_ega_table() {
    let (code, v) = json(&["tables", "--algebra", "ega"]);
    assert_eq!(code, 0);
    let rows = v[0]["rows"].as_array().unwrap();
    let row = rows.iter().find(|r| r["left"] == "e23" && r["right"] == "e12").unwrap();
    assert_eq!((row["sign"].as_i64(), row["product"].as_str()), (Some(-1), Some("e13")));
}

#[test]
fn solve_basis_reports_dimensions_and_writes_the_basis() {
    let dir = tempfile::tempdir().unwrap();
    for (alg, dim) in [("ega", 4), ("pga", 9), ("cga", 20)] {
        let path = dir.path().join(format!("{alg}.json"));
        let (code, v) = json(&["solve-basis", "--algebra", alg, "--out", path.to_str().unwrap()]);
        assert_eq!(code, 0, "{v}");
        assert_eq!(v["dimension"], dim);
        assert!(v["closed_form_distance"].as_f64().unwrap() < 1e-8);
        let basis: Value = serde_json::from_slice(&std::fs::read(&path).unwrap()).unwrap();
        assert_eq!(basis["maps"].as_array().unwrap().len(), dim);
    }
    let (code, v) = json(&["solve-basis", "--algebra", "ega", "--group", "se3"]);
    assert_eq!(code, 0);
    assert_eq!(v["dimension"], 8);
    assert!(v["pseudoscalar_membership"].as_array().unwrap().iter().all(|r| r.as_f64().unwrap() < 1e-8));
}

#[test]
fn verify_conjecture_at_two_inputs() {
    let (code, v) = json(&["verify-conjecture", "--l-max", "2"]);
    assert_eq!(code, 0);
    let cases = v.as_array().unwrap();
    assert_eq!(cases.len(), 4);
    assert!(cases.iter().all(|c| c["status"] == "pass"));
    let gap = cases
        .iter()
        .find(|c| c["case"]["algebra"] == "pga" && c["case"]["with_join"] == false)
        .unwrap();
    assert!(gap["report"]["span_dim"].as_u64() < gap["report"]["nullspace_dim"].as_u64());

    let refused = gaeq(&["verify-conjecture", "--l-max", "4"]);
    assert_eq!(refused.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&refused.stderr).contains("--long"));
}

#[test]
fn check_equivariance_passes_and_flags_uncentered_translation() {
    for variant in ["C", "iP"] {
        let (code, v) = json(&["check-equivariance", "--variant", variant, "--samples", "5", "--seed", "3"]);
        assert_eq!(code, 0, "{v}");
        assert_eq!(v["identity_error"], 0.0);
        assert!(v["max_error"].as_f64().unwrap() < 1e-9);
    }
    let (code, v) = json(&["check-equivariance", "--variant", "E", "--samples", "5"]);
    assert_eq!(code, 0);
    assert!(v["translation_probe"]["uncompensated_error"].as_f64().unwrap() > 1e-3);
    assert!(v["translation_probe"]["recentered_error"].as_f64().unwrap() < 1e-9);

    let (code, _) = json(&["check-equivariance", "--variant", "P", "--samples", "5", "--tol", "1e-30"]);
    assert_eq!(code, 1);
}

#[test]
fn check_equivariance_is_deterministic_given_a_seed() {
    let args = ["check-equivariance", "--variant", "P", "--samples", "3", "--seed", "11", "--json"];
    assert_eq!(gaeq(&args).stdout, gaeq(&args).stdout);
}

fn write_points(dir: &Path) -> PathBuf {
    let path = dir.join("points.csv");
    std::fs::write(&path, "x,y,z\n0.5,1.0,-2.0\n1.5,1.0,-2.0\n0.0,0.0,0.0\n").unwrap();
    path
}

#[test]
fn demo_attention_reproduces_distances() {
    let dir = tempfile::tempdir().unwrap();
    let points = write_points(dir.path());
    let p = points.to_str().unwrap();
    for (variant, expected) in [("ega_distance", -1.0), ("cga_inner", -0.5), ("ip_pga_to_cga", -0.5)] {
        let (code, v) = json(&["demo-attention", "--variant", variant, "--points", p]);
        assert_eq!(code, 0, "{v}");
        let pair = v["pairs"].as_array().unwrap().iter().find(|r| r["i"] == 0 && r["j"] == 1).unwrap();
        assert!((pair["logit"].as_f64().unwrap() - expected).abs() < 1e-12, "{variant}");
    }
    let (code, v) = json(&["demo-attention", "--variant", "plain_inner", "--algebra", "pga", "--points", p]);
    assert_eq!(code, 0);
    assert_eq!(v["reference"], "constant");
    assert!(v["max_deviation"].as_f64().unwrap() < 1e-12);

    let wrong = gaeq(&["demo-attention", "--variant", "cga_inner", "--algebra", "pga"]);
    assert_eq!(wrong.status.code(), Some(2));
}

#[test]
fn norm_probe_series() {
    let ratios = |args: &[&str]| -> Vec<f64> {
        let (code, v) = json(args);
        assert_eq!(code, 0);
        v.as_array().unwrap().iter().skip(1).map(|s| s["ratio"].as_f64().unwrap()).collect()
    };
    let plain = ratios(&["norm-probe", "--variant", "plain", "--epsilon", "0.01", "--iterations", "8"]);
    assert!(plain.iter().all(|r| (r / 10.0 - 1.0).abs() < 0.01));

    let (_, v) = json(&["norm-probe", "--variant", "per_grade_abs", "--iterations", "50"]);
    assert!(v.as_array().unwrap().iter().all(|s| s["max_abs"].as_f64().unwrap() < 2.0));

    let (_, v) = json(&["norm-probe", "--algebra", "ega", "--epsilon", "1e-6", "--iterations", "20"]);
    let tail: Vec<f64> = v.as_array().unwrap()[18..].iter().map(|s| s["max_abs"].as_f64().unwrap()).collect();
    assert!((tail[0] - tail[1]).abs() < 1e-12 && tail[1] <= 1.0);

    let dir = tempfile::tempdir().unwrap();
    let csv_path = dir.path().join("series.csv");
    assert!(gaeq(&["norm-probe", "--iterations", "3", "--out", csv_path.to_str().unwrap()]).status.success());
    let text = std::fs::read_to_string(&csv_path).unwrap();
    assert_eq!(text.lines().next(), Some("iteration,max_abs,ratio"));
    assert_eq!(text.lines().count(), 5);
}

#[test]
fn bad_thread_count_is_an_error() {
    let out = Command::new(env!("CARGO_BIN_EXE_gaeq"))
        .env("GAEQ_THREADS", "many")
        .args(["tables", "--algebra", "ega"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}
