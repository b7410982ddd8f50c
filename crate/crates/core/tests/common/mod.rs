#![allow(dead_code)]

use std::sync::Arc;

use gaeq::embed::Point3;
use gaeq::{Algebra, Multivector};
use rand::Rng;

/// Product of two basis blades given as generator bitmasks, computed by
/// writing both as generator lists, bubble-sorting the concatenation while
/// counting swaps, and contracting equal neighbours with their squares.
pub fn brute_blade_product(a: usize, b: usize, squares: &[i8]) -> (f64, usize) {
    let gens = |m: usize| (0..squares.len()).filter(move |i| m >> i & 1 == 1);
    let mut word: Vec<usize> = gens(a).chain(gens(b)).collect();
    let mut sign = 1.0;
    loop {
        let mut changed = false;
        let mut i = 0;
        while i + 1 < word.len() {
            if word[i] > word[i + 1] {
                word.swap(i, i + 1);
                sign = -sign;
                changed = true;
            } else if word[i] == word[i + 1] {
                sign *= f64::from(squares[word[i]]);
                word.drain(i..i + 2);
                changed = true;
                continue;
            }
            i += 1;
        }
        if !changed {
            break;
        }
    }
    (sign, word.iter().map(|g| 1usize << g).sum())
}

pub fn brute_gp(alg: &Algebra, x: &[f64], y: &[f64]) -> Vec<f64> {
    let squares = alg.signature().squares();
    let mut out = vec![0.0; x.len()];
    for (a, xa) in x.iter().enumerate() {
        for (b, yb) in y.iter().enumerate() {
            let (s, m) = brute_blade_product(a, b, squares);
            out[m] += s * xa * yb;
        }
    }
    out
}

pub fn random_mv<R: Rng>(alg: &Arc<Algebra>, rng: &mut R) -> Multivector {
    let c = (0..alg.size()).map(|_| rng.random_range(-1.0..=1.0)).collect();
    Multivector::from_coeffs(alg, c).unwrap()
}

pub fn random_point<R: Rng>(rng: &mut R, half_width: f64) -> Point3 {
    let mut c = || rng.random_range(-half_width..=half_width);
    Point3::new(c(), c(), c()).unwrap()
}

/// `x ↦ I ⟨x⟩_k` as a dense matrix.
pub fn pseudoscalar_grade_map(alg: &Arc<Algebra>, k: usize) -> nalgebra::DMatrix<f64> {
    let ps = Multivector::blade(alg, alg.pseudoscalar(), 1.0);
    let mut m = nalgebra::DMatrix::zeros(alg.size(), alg.size());
    for b in alg.blades_of_grade(k) {
        let col = ps.gp(&Multivector::blade(alg, b, 1.0)).unwrap();
        for (i, v) in col.coeffs().iter().enumerate() {
            m[(i, b.mask())] = *v;
        }
    }
    m
}
