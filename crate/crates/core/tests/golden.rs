//! Solved E(3) bases against committed fixtures. Set `GAEQ_BLESS=1` to
//! rewrite them.

use std::path::PathBuf;

use gaeq::group::Group;
use gaeq::solver::{solve_linear_basis, subspace_distance, LinearMapBasis};
use gaeq::AlgebraKind;

fn fixture(kind: AlgebraKind) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join(format!("tests/fixtures/basis_e3_{kind}.json"))
}

#[test]
fn solved_e3_bases_match_fixtures() {
    let bless = std::env::var_os("GAEQ_BLESS").is_some();
    for kind in [AlgebraKind::Ega, AlgebraKind::Pga, AlgebraKind::Cga] {
        let solved = solve_linear_basis(&kind.algebra(), Group::E3).unwrap();
        let path = fixture(kind);
        if bless {
            std::fs::write(&path, serde_json::to_string(&solved).unwrap() + "\n").unwrap();
            continue;
        }
        let text = std::fs::read_to_string(&path)
            .unwrap_or_else(|e| panic!("{}: {e}; run with GAEQ_BLESS=1 to create it", path.display()));
        let stored: LinearMapBasis = serde_json::from_str(&text).unwrap();
        assert_eq!((stored.algebra, stored.group), (kind, Group::E3));
        assert_eq!(stored.dim(), solved.dim(), "{kind}");
        assert!(subspace_distance(&stored, &solved) < 1e-8, "{kind}");
    }
}
