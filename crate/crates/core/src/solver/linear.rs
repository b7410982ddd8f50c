use std::sync::Arc;

use log::warn;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::multilinear::{GradeReps, GradeSlice};
use super::{
    full_svd, gap_ratio, near_threshold, row_space, singular_values, SolverConfig, GAP_RATIO,
};
use crate::algebra::{Algebra, AlgebraKind, CgaFrame, Multivector};
use crate::error::{GaError, Result};
use crate::group::{drho, generators, Group};

/// Frobenius-orthonormal basis of a space of linear maps on the algebra.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LinearMapBasis {
    pub algebra: AlgebraKind,
    pub group: Group,
    #[serde(with = "crate::serde_matrix::vec")]
    pub maps: Vec<DMatrix<f64>>,
}

impl LinearMapBasis {
    pub fn dim(&self) -> usize {
        self.maps.len()
    }

    /// Maps as rows of a `dim × size²` matrix, each flattened row-major.
    pub fn flattened(&self) -> DMatrix<f64> {
        flatten(&self.maps)
    }

    /// Block of every map sending grade `from` to grade `to`.
    pub fn restrict(&self, alg: &Algebra, to: usize, from: usize) -> Vec<DMatrix<f64>> {
        let rows = alg.blades_of_grade(to);
        let cols = alg.blades_of_grade(from);
        self.maps
            .iter()
            .map(|m| {
                DMatrix::from_fn(rows.len(), cols.len(), |i, j| {
                    m[(rows[i].mask(), cols[j].mask())]
                })
            })
            .collect()
    }
}

/// Diagnostics of a linear solve.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LinearSolveReport {
    pub basis: LinearMapBasis,
    /// Singular values of every grade block, concatenated in block order.
    pub spectrum: Vec<f64>,
    pub threshold: f64,
    pub gap_ratio: f64,
    /// Worst commutator residual of the basis against a random Lie-algebra
    /// element outside the generator set.
    pub spot_check_residual: f64,
    pub warnings: Vec<String>,
}

/// A closed-form equivariant map with a readable label.
#[derive(Debug, Clone)]
pub struct NamedMap {
    pub name: String,
    pub matrix: DMatrix<f64>,
}

pub(crate) fn flatten(maps: &[DMatrix<f64>]) -> DMatrix<f64> {
    let n = maps.first().map_or(0, |m| m.len());
    let mut out = DMatrix::zeros(maps.len(), n);
    for (r, m) in maps.iter().enumerate() {
        let t = m.transpose();
        out.row_mut(r).copy_from_slice(t.as_slice());
    }
    out
}

fn unflatten(row: &[f64], size: usize) -> DMatrix<f64> {
    DMatrix::from_row_slice(size, size, row)
}

/// Solve for the equivariant linear maps; see [`solve_linear_basis_report`].
pub fn solve_linear_basis(alg: &Arc<Algebra>, group: Group) -> Result<LinearMapBasis> {
    Ok(solve_linear_basis_report(alg, group, &SolverConfig::default())?.basis)
}

/// Null space of the stacked generator constraints, solved per grade block
/// `o ← i` with one threshold `rel_tol · σ_max` over all blocks.
///
/// The constraints never couple different grade blocks, so this is the same
/// null space as the full stacked system.
pub fn solve_linear_basis_report(
    alg: &Arc<Algebra>,
    group: Group,
    config: &SolverConfig,
) -> Result<LinearSolveReport> {
    let kind = alg.require_kind()?;
    let reps = GradeReps::new(alg, group)?;
    let d = alg.dim();
    let mut blocks = Vec::new();
    for o in 0..=d {
        for i in 0..=d {
            let slice = GradeSlice::new(alg, vec![i], o)?;
            let cons = reps.constraints(&slice)?;
            let k = slice.size(alg);
            let mut stacked = DMatrix::zeros(cons.len() * k, k);
            for (g, c) in cons.iter().enumerate() {
                stacked.rows_mut(g * k, k).copy_from(c);
            }
            let (spectrum, v_t) = full_svd(&stacked);
            blocks.push((slice, spectrum, v_t));
        }
    }
    let spectrum: Vec<f64> = blocks.iter().flat_map(|b| b.1.iter().copied()).collect();
    let smax = spectrum.iter().fold(0.0f64, |a, b| a.max(*b));
    let threshold = config.rel_tol * smax;

    let size = alg.size();
    let mut maps = Vec::new();
    for (slice, spec, v_t) in &blocks {
        let rows = alg.blades_of_grade(slice.output);
        let cols = alg.blades_of_grade(slice.inputs[0]);
        for (j, s) in spec.iter().enumerate() {
            if *s > threshold {
                continue;
            }
            let mut m = DMatrix::zeros(size, size);
            for (a, ra) in rows.iter().enumerate() {
                for (b, cb) in cols.iter().enumerate() {
                    m[(ra.mask(), cb.mask())] = v_t[(j, a * cols.len() + b)];
                }
            }
            maps.push(m);
        }
    }

    let mut warnings = Vec::new();
    let gap = gap_ratio(&spectrum, threshold);
    if gap < GAP_RATIO {
        warnings.push(format!("spectral gap {gap:.3e} below {GAP_RATIO:e}"));
    }
    if near_threshold(&spectrum, threshold) {
        warnings.push(format!(
            "singular values within 10x of threshold {threshold:.3e}: {spectrum:?}"
        ));
    }
    let spot_check_residual = spot_check(alg, group, &maps)?;
    if spot_check_residual > 1e-8 {
        warnings.push(format!(
            "random generator spot check residual {spot_check_residual:.3e}"
        ));
    }
    for w in &warnings {
        warn!("{kind} {group}: {w}");
    }
    Ok(LinearSolveReport {
        basis: LinearMapBasis {
            algebra: kind,
            group,
            maps,
        },
        spectrum,
        threshold,
        gap_ratio: gap,
        spot_check_residual,
        warnings,
    })
}

fn spot_check(alg: &Arc<Algebra>, group: Group, maps: &[DMatrix<f64>]) -> Result<f64> {
    let gens = generators(alg, group)?;
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let x = gens
        .lie
        .iter()
        .fold(Multivector::zero(alg), |acc, g| acc + g.scale(rng.random_range(-1.0..=1.0)));
    let dx = drho(&x).matrix;
    let scale = dx.norm();
    Ok(maps
        .iter()
        .map(|m| (&dx * m - m * &dx).norm() / (scale * m.norm()))
        .fold(0.0, f64::max))
}

fn linear_map(alg: &Arc<Algebra>, f: impl Fn(&Multivector) -> Result<Multivector>) -> Result<DMatrix<f64>> {
    let n = alg.size();
    let mut m = DMatrix::zeros(n, n);
    for j in 0..n {
        let e = Multivector::blade(alg, crate::algebra::Blade(j as u16), 1.0);
        let y = f(&e)?;
        m.column_mut(j).copy_from_slice(y.coeffs());
    }
    Ok(m)
}

/// The closed-form E(3)-equivariant linear maps:
///
/// * EGA: `⟨x⟩_k` for k = 0..3;
/// * PGA: `⟨x⟩_k` for k = 0..4 and `⟨e0 x⟩_k` for k = 1..4;
/// * CGA: `⟨x⟩_k` for k = 0..5, `⟨∞⟨x⟩_k⟩_{k−1}` for k = 1..5,
///   `⟨∞⟨x⟩_k⟩_{k+1}` for k = 0..4 and `∞⟨∞⟨x⟩_k⟩_{k−1}` for k = 1..4.
pub fn closed_form_maps(alg: &Arc<Algebra>) -> Result<Vec<NamedMap>> {
    let kind = alg.require_kind()?;
    let d = alg.dim();
    let mut out = Vec::new();
    let mut push = |name: String, m: DMatrix<f64>| out.push(NamedMap { name, matrix: m });
    for k in 0..=d {
        push(format!("<x>_{k}"), linear_map(alg, |x| x.grade(k))?);
    }
    match kind {
        AlgebraKind::Ega => {}
        AlgebraKind::Pga => {
            let e0 = Multivector::named(alg, "e0")?;
            for k in 1..=d {
                push(format!("<e0 x>_{k}"), linear_map(alg, |x| e0.gp(x)?.grade(k))?);
            }
        }
        AlgebraKind::Cga => {
            let inf = CgaFrame::new(alg)?.inf;
            for k in 1..=d {
                push(
                    format!("<inf <x>_{k}>_{}", k - 1),
                    linear_map(alg, |x| inf.gp(&x.grade(k)?)?.grade(k - 1))?,
                );
            }
            for k in 0..d {
                push(
                    format!("<inf <x>_{k}>_{}", k + 1),
                    linear_map(alg, |x| inf.gp(&x.grade(k)?)?.grade(k + 1))?,
                );
            }
            for k in 1..d {
                push(
                    format!("inf <inf <x>_{k}>_{}", k - 1),
                    linear_map(alg, |x| inf.gp(&inf.gp(&x.grade(k)?)?.grade(k - 1)?))?,
                );
            }
        }
    }
    Ok(out)
}

/// Orthonormalized span of [`closed_form_maps`], tagged with E(3).
pub fn closed_form_basis(alg: &Arc<Algebra>) -> Result<LinearMapBasis> {
    let kind = alg.require_kind()?;
    let named = closed_form_maps(alg)?;
    let mats: Vec<DMatrix<f64>> = named.into_iter().map(|n| n.matrix).collect();
    let q = row_space(&flatten(&mats), 1e-12);
    if q.nrows() != mats.len() {
        return Err(GaError::Degenerate(format!(
            "closed-form maps of {kind} are linearly dependent"
        )));
    }
    let size = alg.size();
    Ok(LinearMapBasis {
        algebra: kind,
        group: Group::E3,
        maps: q
            .row_iter()
            .map(|r| unflatten(r.transpose().as_slice(), size))
            .collect(),
    })
}

/// Largest principal-angle sine between the two spans, i.e. `‖P_A − P_B‖₂`;
/// 1 when the dimensions differ.
pub fn subspace_distance(a: &LinearMapBasis, b: &LinearMapBasis) -> f64 {
    let qa = row_space(&a.flattened(), 1e-12);
    let qb = row_space(&b.flattened(), 1e-12);
    if qa.nrows() != qb.nrows() || qa.ncols() != qb.ncols() {
        return 1.0;
    }
    if qa.nrows() == 0 {
        return 0.0;
    }
    let resid = |x: &DMatrix<f64>, y: &DMatrix<f64>| {
        let r = x - (x * y.transpose()) * y;
        singular_values(&r).into_iter().fold(0.0f64, f64::max)
    };
    resid(&qa, &qb).max(resid(&qb, &qa)).min(1.0)
}

/// `‖M − P_S M‖_F / ‖M‖_F` for the Frobenius projection `P_S` onto the span.
pub fn membership_residual(map: &DMatrix<f64>, basis: &LinearMapBasis) -> f64 {
    let norm = map.norm();
    if norm == 0.0 {
        return 0.0;
    }
    let q = row_space(&basis.flattened(), 1e-12);
    let v = DVector::from_row_slice(map.transpose().as_slice());
    let coords = &q * &v;
    (&v - q.transpose() * coords).norm() / norm
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_counts() {
        for (alg, n) in [(Algebra::ega(), 4), (Algebra::pga(), 9), (Algebra::cga(), 20)] {
            assert_eq!(closed_form_maps(&alg).unwrap().len(), n);
            assert_eq!(closed_form_basis(&alg).unwrap().dim(), n);
        }
    }

    #[test]
    fn solved_dims_under_e3() {
        for (alg, n) in [(Algebra::ega(), 4), (Algebra::pga(), 9), (Algebra::cga(), 20)] {
            let rep = solve_linear_basis_report(&alg, Group::E3, &SolverConfig::default()).unwrap();
            assert_eq!(rep.basis.dim(), n, "{:?}", rep.warnings);
            assert!(rep.warnings.is_empty(), "{:?}", rep.warnings);
        }
    }

    #[test]
    fn distance_examples() {
        let alg = Algebra::ega();
        let full = closed_form_basis(&alg).unwrap();
        assert!(subspace_distance(&full, &full) < 1e-14);
        let part = LinearMapBasis {
            maps: vec![full.maps[0].clone()],
            ..full.clone()
        };
        assert_eq!(subspace_distance(&part, &full), 1.0);
        let solved = solve_linear_basis(&alg, Group::E3).unwrap();
        assert!(subspace_distance(&full, &solved) < 1e-8);
    }

    #[test]
    fn membership_of_a_basis_map_and_outsider() {
        let alg = Algebra::ega();
        let basis = closed_form_basis(&alg).unwrap();
        let proj = &closed_form_maps(&alg).unwrap()[2].matrix;
        assert!(membership_residual(proj, &basis) < 1e-12);
        let mut outsider = DMatrix::zeros(8, 8);
        outsider[(1, 2)] = 1.0;
        assert!(membership_residual(&outsider, &basis) > 0.5);
    }

    #[test]
    fn basis_round_trips_through_json() {
        let b = closed_form_basis(&Algebra::ega()).unwrap();
        let back: LinearMapBasis = serde_json::from_str(&serde_json::to_string(&b).unwrap()).unwrap();
        assert_eq!(back.maps, b.maps);
    }
}
