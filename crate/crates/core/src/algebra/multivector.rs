use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use super::join::complement_sign;
use super::{Algebra, Blade};
use crate::error::{GaError, Result};

/// Stopping tolerance for the exponential series.
pub const EXP_TOL: f64 = 1e-15;
/// Maximum number of series terms before [`Multivector::exp`] gives up.
pub const EXP_MAX_TERMS: usize = 64;

/// Relative tolerance below which `<x, x>` counts as zero for inversion.
const INVERTIBILITY_TOL: f64 = 1e-12;

/// Dense multivector: one coefficient per canonical blade, indexed by mask.
#[derive(Clone)]
pub struct Multivector {
    alg: Arc<Algebra>,
    coeffs: Vec<f64>,
}

impl Multivector {
    pub fn zero(alg: &Arc<Algebra>) -> Self {
        Self {
            alg: alg.clone(),
            coeffs: vec![0.0; alg.size()],
        }
    }

    pub fn scalar(alg: &Arc<Algebra>, s: f64) -> Self {
        Self::blade(alg, Blade::SCALAR, s)
    }

    pub fn blade(alg: &Arc<Algebra>, b: Blade, coeff: f64) -> Self {
        let mut m = Self::zero(alg);
        m.coeffs[b.mask()] = coeff;
        m
    }

    /// Basis 1-vector for generator `i`.
    pub fn basis_vector(alg: &Arc<Algebra>, i: usize) -> Self {
        Self::blade(alg, Blade(1 << i), 1.0)
    }

    /// Blade given by name in any generator order, e.g. `e032`.
    pub fn named(alg: &Arc<Algebra>, name: &str) -> Result<Self> {
        if name == "1" {
            return Ok(Self::scalar(alg, 1.0));
        }
        let (sign, b) = alg.parse_blade(name)?;
        Ok(Self::blade(alg, b, sign))
    }

    pub fn from_coeffs(alg: &Arc<Algebra>, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != alg.size() {
            return Err(GaError::InvalidInput(format!(
                "expected {} coefficients, got {}",
                alg.size(),
                coeffs.len()
            )));
        }
        if let Some(c) = coeffs.iter().find(|c| !c.is_finite()) {
            return Err(GaError::InvalidInput(format!("non-finite coefficient {c}")));
        }
        Ok(Self {
            alg: alg.clone(),
            coeffs,
        })
    }

    pub(crate) fn from_coeffs_unchecked(alg: &Arc<Algebra>, coeffs: Vec<f64>) -> Self {
        debug_assert_eq!(coeffs.len(), alg.size());
        Self {
            alg: alg.clone(),
            coeffs,
        }
    }

    pub fn algebra(&self) -> &Arc<Algebra> {
        &self.alg
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    pub fn get(&self, b: Blade) -> f64 {
        self.coeffs[b.mask()]
    }

    pub fn set(&mut self, b: Blade, value: f64) {
        self.coeffs[b.mask()] = value;
    }

    pub fn scalar_part(&self) -> f64 {
        self.coeffs[0]
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    /// Euclidean norm of the coefficient vector (not an algebra norm).
    pub fn coeff_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0.0)
    }

    pub fn same_algebra(&self, other: &Multivector) -> bool {
        Arc::ptr_eq(&self.alg, &other.alg) || self.alg.signature() == other.alg.signature()
    }

    pub(crate) fn check_same(&self, other: &Multivector) -> Result<()> {
        if self.same_algebra(other) {
            Ok(())
        } else {
            Err(GaError::AlgebraMismatch {
                left: self.alg.signature().to_string(),
                right: other.alg.signature().to_string(),
            })
        }
    }

    pub fn scale(&self, s: f64) -> Self {
        self.map(|_, c| c * s)
    }

    fn map(&self, f: impl Fn(Blade, f64) -> f64) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(m, &c)| f(Blade(m as u16), c))
            .collect();
        Self::from_coeffs_unchecked(&self.alg, coeffs)
    }

    /// Geometric product.
    pub fn gp(&self, other: &Multivector) -> Result<Multivector> {
        self.check_same(other)?;
        let mut out = vec![0.0; self.alg.size()];
        gp_into(&self.alg, &self.coeffs, &other.coeffs, &mut out);
        Ok(Self::from_coeffs_unchecked(&self.alg, out))
    }

    /// Outer (wedge) product.
    pub fn wedge(&self, other: &Multivector) -> Result<Multivector> {
        self.check_same(other)?;
        let n = self.alg.size();
        let mut out = vec![0.0; n];
        for (a, &x) in self.coeffs.iter().enumerate() {
            if x == 0.0 {
                continue;
            }
            for (b, &y) in other.coeffs.iter().enumerate() {
                if y == 0.0 || a & b != 0 {
                    continue;
                }
                let e = self.alg.product(Blade(a as u16), Blade(b as u16));
                out[e.out.mask()] += e.sign as f64 * x * y;
            }
        }
        Ok(Self::from_coeffs_unchecked(&self.alg, out))
    }

    /// Join (regressive product); projective algebras only.
    pub fn join(&self, other: &Multivector) -> Result<Multivector> {
        self.check_same(other)?;
        let table = self
            .alg
            .join_table()
            .ok_or_else(|| GaError::NotProjective(self.alg.signature().to_string()))?;
        let mut out = vec![0.0; self.alg.size()];
        join_into(self.alg.dim(), table, &self.coeffs, &other.coeffs, &mut out);
        Ok(Self::from_coeffs_unchecked(&self.alg, out))
    }

    /// Algebra inner product `<x ỹ>_0`.
    pub fn inner(&self, other: &Multivector) -> Result<f64> {
        self.check_same(other)?;
        Ok(inner_coeffs(&self.alg, &self.coeffs, &other.coeffs))
    }

    /// Grade projection `<x>_k`.
    pub fn grade(&self, k: usize) -> Result<Multivector> {
        if k > self.alg.dim() {
            return Err(GaError::GradeOutOfRange {
                grade: k,
                dim: self.alg.dim(),
            });
        }
        Ok(self.map(|b, c| if b.grade() == k { c } else { 0.0 }))
    }

    pub fn reverse(&self) -> Multivector {
        self.map(|b, c| Algebra::reverse_sign(b) * c)
    }

    pub fn involute(&self) -> Multivector {
        self.map(|b, c| Algebra::involute_sign(b) * c)
    }

    /// True when every nonzero coefficient sits on a blade of grade `k`.
    pub fn is_homogeneous(&self, k: usize) -> bool {
        self.coeffs
            .iter()
            .enumerate()
            .all(|(m, &c)| c == 0.0 || Blade(m as u16).grade() == k)
    }

    /// `x̃ / <x, x>`; fails when `|<x, x>| <= 1e-12 * max|coeff|^2`.
    pub fn inverse(&self) -> Result<Multivector> {
        let nn = inner_coeffs(&self.alg, &self.coeffs, &self.coeffs);
        let scale = self.max_abs();
        if scale == 0.0 || nn.abs() <= INVERTIBILITY_TOL * scale * scale {
            return Err(GaError::NotInvertible(nn));
        }
        Ok(self.reverse().scale(1.0 / nn))
    }

    /// Exponential by Taylor series, stopping once the newest term's largest
    /// coefficient drops below `tol * max(1, max|sum|)`.
    pub fn exp(&self, tol: f64) -> Result<Multivector> {
        let n = self.alg.size();
        let mut sum = vec![0.0; n];
        sum[0] = 1.0;
        let mut term = sum.clone();
        let mut next = vec![0.0; n];
        for k in 1..=EXP_MAX_TERMS {
            next.iter_mut().for_each(|c| *c = 0.0);
            gp_into(&self.alg, &term, &self.coeffs, &mut next);
            let inv_k = 1.0 / k as f64;
            let mut term_max = 0.0f64;
            for (t, nx) in term.iter_mut().zip(&next) {
                *t = nx * inv_k;
                term_max = term_max.max(t.abs());
            }
            for (s, t) in sum.iter_mut().zip(&term) {
                *s += t;
            }
            let sum_max = sum.iter().fold(1.0f64, |m, c| m.max(c.abs()));
            if term_max <= tol * sum_max {
                return Ok(Self::from_coeffs_unchecked(&self.alg, sum));
            }
        }
        Err(GaError::ExpNotConverged(EXP_MAX_TERMS))
    }

    /// Coefficient of `blade` read off as `<x ẽ_b>_0 / <e_b, e_b>`
    /// (non-degenerate algebras).
    pub fn coeff_extract_nondegenerate(&self, blade: Blade) -> Result<f64> {
        if self.alg.signature().r() != 0 {
            return Err(GaError::Degenerate(self.alg.signature().to_string()));
        }
        let e = Multivector::blade(&self.alg, blade, 1.0);
        let num = self.gp(&e.reverse())?.scalar_part();
        Ok(num / e.inner(&e)?)
    }

    /// Coefficient of `blade` read off as `<(x ∧ e_{∖b}) ∨ 1>_0` with the
    /// complement ordered so that `e_b ∧ e_{∖b}` is the pseudoscalar
    /// (projective algebras).
    pub fn coeff_extract_pga(&self, blade: Blade) -> Result<f64> {
        if !self.alg.is_projective() {
            return Err(GaError::NotProjective(self.alg.signature().to_string()));
        }
        let full = self.alg.pseudoscalar();
        let comp = Multivector::blade(
            &self.alg,
            Blade(full.0 ^ blade.0),
            complement_sign(blade, self.alg.dim()) as f64,
        );
        let one = Multivector::scalar(&self.alg, 1.0);
        Ok(self.wedge(&comp)?.join(&one)?.scalar_part())
    }

    /// Copy of `self` keeping only the coefficients on blades selected by `keep`.
    pub fn filter_blades(&self, keep: impl Fn(Blade) -> bool) -> Multivector {
        self.map(|b, c| if keep(b) { c } else { 0.0 })
    }
}

/// `out += x * y` (geometric product) on raw coefficient slices.
pub(crate) fn gp_into(alg: &Algebra, x: &[f64], y: &[f64], out: &mut [f64]) {
    let d = alg.dim();
    let table = alg.cayley_table();
    for (a, &xa) in x.iter().enumerate() {
        if xa == 0.0 {
            continue;
        }
        let row = &table[a << d..(a + 1) << d];
        for (e, &yb) in row.iter().zip(y) {
            if yb == 0.0 || e.sign == 0 {
                continue;
            }
            out[e.out.mask()] += e.sign as f64 * xa * yb;
        }
    }
}

/// `out += x ∨ y` on raw coefficient slices.
pub(crate) fn join_into(
    d: usize,
    table: &[super::ProductEntry],
    x: &[f64],
    y: &[f64],
    out: &mut [f64],
) {
    for (a, &xa) in x.iter().enumerate() {
        if xa == 0.0 {
            continue;
        }
        let row = &table[a << d..(a + 1) << d];
        for (e, &yb) in row.iter().zip(y) {
            if yb == 0.0 || e.sign == 0 {
                continue;
            }
            out[e.out.mask()] += e.sign as f64 * xa * yb;
        }
    }
}

/// `<x ỹ>_0` on raw coefficient slices.
pub(crate) fn inner_coeffs(alg: &Algebra, x: &[f64], y: &[f64]) -> f64 {
    x.iter()
        .zip(y)
        .enumerate()
        .filter(|(_, (a, b))| **a != 0.0 && **b != 0.0)
        .map(|(m, (a, b))| {
            let blade = Blade(m as u16);
            let sq = alg.product(blade, blade).sign as f64;
            a * b * sq * Algebra::reverse_sign(blade)
        })
        .sum()
}

impl fmt::Debug for Multivector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Multivector[{}](", self.alg.signature())?;
        let mut first = true;
        for (m, &c) in self.coeffs.iter().enumerate() {
            if c != 0.0 {
                if !first {
                    write!(f, " + ")?;
                }
                write!(f, "{c}*{}", self.alg.blade_name(Blade(m as u16)))?;
                first = false;
            }
        }
        if first {
            write!(f, "0")?;
        }
        write!(f, ")")
    }
}

impl PartialEq for Multivector {
    fn eq(&self, other: &Self) -> bool {
        self.same_algebra(other) && self.coeffs == other.coeffs
    }
}

// Operator impls panic on algebra mismatch; use the `Result` methods for
// checked arithmetic.

impl Add for &Multivector {
    type Output = Multivector;
    fn add(self, rhs: &Multivector) -> Multivector {
        self.check_same(rhs).expect("add");
        let coeffs = self.coeffs.iter().zip(&rhs.coeffs).map(|(a, b)| a + b).collect();
        Multivector::from_coeffs_unchecked(&self.alg, coeffs)
    }
}

impl Add for Multivector {
    type Output = Multivector;
    fn add(self, rhs: Multivector) -> Multivector {
        &self + &rhs
    }
}

impl Sub for &Multivector {
    type Output = Multivector;
    fn sub(self, rhs: &Multivector) -> Multivector {
        self.check_same(rhs).expect("sub");
        let coeffs = self.coeffs.iter().zip(&rhs.coeffs).map(|(a, b)| a - b).collect();
        Multivector::from_coeffs_unchecked(&self.alg, coeffs)
    }
}

impl Sub for Multivector {
    type Output = Multivector;
    fn sub(self, rhs: Multivector) -> Multivector {
        &self - &rhs
    }
}

impl Neg for &Multivector {
    type Output = Multivector;
    fn neg(self) -> Multivector {
        self.scale(-1.0)
    }
}

impl Neg for Multivector {
    type Output = Multivector;
    fn neg(self) -> Multivector {
        self.scale(-1.0)
    }
}

impl Mul<f64> for &Multivector {
    type Output = Multivector;
    fn mul(self, s: f64) -> Multivector {
        self.scale(s)
    }
}

impl Mul<f64> for Multivector {
    type Output = Multivector;
    fn mul(self, s: f64) -> Multivector {
        self.scale(s)
    }
}

impl Mul for &Multivector {
    type Output = Multivector;
    /// Geometric product; panics on algebra mismatch.
    fn mul(self, rhs: &Multivector) -> Multivector {
        self.gp(rhs).expect("geometric product")
    }
}
