mod common;

use std::sync::{Arc, OnceLock};

use common::random_mv;
use gaeq::embed::{embed_point, embed_point_cga, extract_point, Point3};
use gaeq::group::{drho, generators, rho, rotor, translator, random_group_element, Group};
use gaeq::layers::{equi_norm, MvChannels, NormConfig, NormVariant};
use gaeq::solver::{algebra_span_dim, solve_linear_basis, solve_multilinear_dim, GradeSlice, LinearMapBasis, SolverConfig};
use gaeq::{Algebra, AlgebraKind, Multivector};
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const KINDS: [AlgebraKind; 3] = [AlgebraKind::Ega, AlgebraKind::Pga, AlgebraKind::Cga];

fn kind() -> impl Strategy<Value = AlgebraKind> {
    prop::sample::select(KINDS.to_vec())
}

fn mv(alg: &Arc<Algebra>, seed: u64) -> Multivector {
    random_mv(alg, &mut ChaCha8Rng::seed_from_u64(seed))
}

fn point(range: f64) -> impl Strategy<Value = Point3> {
    (-range..range, -range..range, -range..range).prop_map(|(x, y, z)| Point3::new(x, y, z).unwrap())
}

fn rel(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).norm() / b.norm().max(1e-300)
}

fn rodrigues(axis: [f64; 3], angle: f64, p: Point3) -> Point3 {
    let n = Point3::from_array(axis).unwrap();
    let n = n.scale(1.0 / n.norm_sq().sqrt());
    let cross = Point3 {
        x: n.y * p.z - n.z * p.y,
        y: n.z * p.x - n.x * p.z,
        z: n.x * p.y - n.y * p.x,
    };
    p.scale(angle.cos()) + cross.scale(angle.sin()) + n.scale(n.dot(p) * (1.0 - angle.cos()))
}

fn e3_basis(kind: AlgebraKind) -> &'static LinearMapBasis {
    static CACHE: OnceLock<Vec<LinearMapBasis>> = OnceLock::new();
    let all = CACHE.get_or_init(|| KINDS.iter().map(|k| solve_linear_basis(&k.algebra(), Group::E3).unwrap()).collect());
    &all[KINDS.iter().position(|k| *k == kind).unwrap()]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn geometric_product_is_associative_and_reversal_reverses(k in kind(), s in any::<u64>()) {
        let alg = k.algebra();
        let (x, y, z) = (mv(&alg, s), mv(&alg, s ^ 1), mv(&alg, s ^ 2));
        let l = x.gp(&y).unwrap().gp(&z).unwrap();
        let r = x.gp(&y.gp(&z).unwrap()).unwrap();
        prop_assert!((&l - &r).max_abs() < 1e-12);
        let rev = x.gp(&y).unwrap().reverse();
        prop_assert!((&rev - &y.reverse().gp(&x.reverse()).unwrap()).max_abs() < 1e-12);
    }

    #[test]
    fn rho_is_a_homomorphism(k in kind(), a in any::<u64>(), b in any::<u64>()) {
        let alg = k.algebra();
        let u = random_group_element(&alg, Group::E3, a).unwrap();
        let v = random_group_element(&alg, Group::E3, b).unwrap();
        let uv = rho(&u.compose(&v).unwrap()).matrix;
        prop_assert!(rel(&(rho(&u).matrix * rho(&v).matrix), &uv) < 1e-10);
    }

    #[test]
    fn exponential_of_drho_is_rho_of_exponential(k in kind(), c in prop::collection::vec(-1.0f64..1.0, 6)) {
        let alg = k.algebra();
        let lie = generators(&alg, Group::Se3).unwrap().lie;
        let x = lie.iter().zip(&c).fold(Multivector::zero(&alg), |acc, (g, ci)| acc + g.scale(*ci));
        let u = gaeq::Versor::from_exp(&x).unwrap();
        prop_assert!(rel(&drho(&x).matrix.exp(), &rho(&u).matrix) < 1e-9);
    }

    #[test]
    fn cga_points_are_null_and_inner_products_are_distances(p in point(10.0), q in point(10.0)) {
        let (pp, qq) = (embed_point_cga(p), embed_point_cga(q));
        prop_assert!(pp.inner(&pp).unwrap().abs() <= 1e-12 * (1.0 + p.norm_sq().powi(2)));
        let d2 = p.distance_sq(q);
        let ip = pp.inner(&qq).unwrap();
        prop_assert!((ip + 0.5 * d2).abs() <= 1e-12 * (1.0 + p.norm_sq() + q.norm_sq()).powi(2));
    }

    #[test]
    fn embeddings_follow_rotations_and_translations(
        k in kind(),
        p in point(5.0),
        axis in prop::array::uniform3(-1.0f64..1.0).prop_filter("nonzero", |a| a.iter().map(|x| x * x).sum::<f64>() > 1e-3),
        angle in -3.0f64..3.0,
        t in prop::array::uniform3(-5.0f64..5.0),
    ) {
        let alg = k.algebra();
        let r = rotor(&alg, axis, angle).unwrap();
        let moved = extract_point(&r.sandwich(&embed_point(k, p, Point3::ORIGIN)).unwrap(), Point3::ORIGIN).unwrap();
        prop_assert!(moved.distance_sq(rodrigues(axis, angle, p)).sqrt() < 1e-10 * (1.0 + p.norm_sq().sqrt()));
        if k != AlgebraKind::Ega {
            let tr = translator(&alg, t).unwrap();
            let shifted = extract_point(&tr.sandwich(&embed_point(k, p, Point3::ORIGIN)).unwrap(), Point3::ORIGIN).unwrap();
            let expected = p + Point3::from_array(t).unwrap();
            prop_assert!(shifted.distance_sq(expected).sqrt() < 1e-10 * (1.0 + expected.norm_sq().sqrt()));
        }
    }

    #[test]
    fn solved_maps_commute_with_fresh_group_elements(k in kind(), seed in 1_000u64..) {
        let alg = k.algebra();
        let g = rho(&random_group_element(&alg, Group::E3, seed).unwrap()).matrix;
        for m in &e3_basis(k).maps {
            prop_assert!(rel(&(&g * m), &(m * &g)) < 1e-8);
        }
    }

    #[test]
    fn per_grade_abs_norm_stays_bounded(s in any::<u64>(), scale in 1e-3f64..1e3) {
        let alg = Algebra::cga();
        let cfg = NormConfig::new(NormVariant::PerGradeAbs, 0.01).unwrap();
        let mut x = MvChannels::from_tokens(&alg, &[vec![mv(&alg, s).scale(scale), mv(&alg, !s)]], &[vec![]]).unwrap();
        for _ in 0..50 {
            x = equi_norm(&cfg, &x);
            prop_assert!(x.max_abs() < 10.0);
        }
    }

    #[test]
    fn plain_norm_multiplies_cancelling_multivectors_by_inverse_root_epsilon(a in 1e-2f64..1e2, eps in 1e-4f64..1.0) {
        let alg = Algebra::cga();
        let cfg = NormConfig::new(NormVariant::Plain, eps).unwrap();
        let x0 = Multivector::scalar(&alg, a) + Multivector::blade(&alg, alg.pseudoscalar(), a);
        let x = MvChannels::from_tokens(&alg, &[vec![x0]], &[vec![]]).unwrap();
        let y = equi_norm(&cfg, &x);
        prop_assert!((y.max_abs() / x.max_abs() * eps.sqrt() - 1.0).abs() < 0.01);
    }
}

#[test]
fn se3_admits_at_least_the_e3_maps_on_every_slice() {
    let cfg = SolverConfig::default();
    for k in KINDS {
        let alg = k.algebra();
        let slices = GradeSlice::all(&alg, 1).into_iter().chain(if k == AlgebraKind::Ega { GradeSlice::all(&alg, 2) } else { Vec::new() });
        for s in slices {
            let se3 = solve_multilinear_dim(&alg, Group::Se3, &s, &cfg).unwrap();
            let e3 = solve_multilinear_dim(&alg, Group::E3, &s, &cfg).unwrap();
            assert!(se3 >= e3, "{k} {s:?}: {se3} < {e3}");
        }
    }
}

#[test]
fn adding_the_join_never_shrinks_a_slice_span() {
    let alg = Algebra::pga();
    let cfg = SolverConfig::default();
    let without = algebra_span_dim(&alg, 2, false, Group::Se3, &cfg).unwrap();
    let with = algebra_span_dim(&alg, 2, true, Group::Se3, &cfg).unwrap();
    assert_eq!(without.slices.len(), with.slices.len());
    for (a, b) in without.slices.iter().zip(&with.slices) {
        assert_eq!((&a.inputs, a.output), (&b.inputs, b.output));
        assert!(b.span_dim >= a.span_dim, "{a:?} vs {b:?}");
        assert_eq!(a.nullspace_dim, b.nullspace_dim);
    }
}

#[test]
fn repeated_solves_agree() {
    let alg = Algebra::pga();
    let a = solve_linear_basis(&alg, Group::Se3).unwrap();
    let b = solve_linear_basis(&alg, Group::Se3).unwrap();
    assert_eq!(a.dim(), b.dim());
    assert_eq!(a.maps, b.maps);
}
