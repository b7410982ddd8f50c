use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{full_svd, gap_ratio, SolverConfig};
use crate::algebra::{binomial, Algebra};
use crate::error::{GaError, Result};
use crate::group::{constraint_rows, drho, generators, rho, Group, RepMatrix, RepPair};

/// Input grades `(i₁, …, i_l)` and output grade `o` of a multilinear map
/// `G^{i₁} ⊗ … ⊗ G^{i_l} → G^o`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GradeSlice {
    pub inputs: Vec<usize>,
    pub output: usize,
}

impl GradeSlice {
    pub fn new(alg: &Algebra, inputs: Vec<usize>, output: usize) -> Result<Self> {
        let d = alg.dim();
        if inputs.is_empty() {
            return Err(GaError::InvalidInput("a slice needs at least one input".into()));
        }
        for &g in inputs.iter().chain(std::iter::once(&output)) {
            if g > d {
                return Err(GaError::GradeOutOfRange { grade: g, dim: d });
            }
        }
        Ok(Self { inputs, output })
    }

    /// Every slice of arity `l`, in mixed-radix order (output slowest, last
    /// input fastest).
    pub fn all(alg: &Algebra, l: usize) -> Vec<GradeSlice> {
        let base = alg.dim() + 1;
        let count = base.pow(l as u32 + 1);
        (0..count)
            .map(|mut idx| {
                let mut digits = vec![0; l + 1];
                for slot in digits.iter_mut().rev() {
                    *slot = idx % base;
                    idx /= base;
                }
                GradeSlice {
                    output: digits[0],
                    inputs: digits[1..].to_vec(),
                }
            })
            .collect()
    }

    pub fn arity(&self) -> usize {
        self.inputs.len()
    }

    pub fn input_dims(&self, alg: &Algebra) -> Vec<usize> {
        self.inputs.iter().map(|g| binomial(alg.dim(), *g)).collect()
    }

    pub fn output_dim(&self, alg: &Algebra) -> usize {
        binomial(alg.dim(), self.output)
    }

    /// Number of entries of a map on this slice.
    pub fn size(&self, alg: &Algebra) -> usize {
        self.output_dim(alg) * self.input_dims(alg).iter().product::<usize>()
    }
}

/// Per-grade blocks of `dρ` for every Lie generator and of `ρ` for every
/// discrete generator of a group.
#[derive(Debug, Clone)]
pub struct GradeReps {
    pub algebra: Arc<Algebra>,
    pub group: Group,
    lie: Vec<Vec<RepMatrix>>,
    discrete: Vec<Vec<RepMatrix>>,
}

impl GradeReps {
    pub fn new(alg: &Arc<Algebra>, group: Group) -> Result<Self> {
        let gens = generators(alg, group)?;
        let d = alg.dim();
        let blocks = |r: RepMatrix| (0..=d).map(|k| r.restrict(alg, k, k)).collect::<Vec<_>>();
        Ok(Self {
            algebra: alg.clone(),
            group,
            lie: gens.lie.iter().map(|x| blocks(drho(x))).collect(),
            discrete: gens.discrete.iter().map(|u| blocks(rho(u))).collect(),
        })
    }

    /// Dense constraint matrices on the slice, Lie generators first, then the
    /// discrete ones.
    pub fn constraints(&self, slice: &GradeSlice) -> Result<Vec<DMatrix<f64>>> {
        self.lie
            .iter()
            .chain(&self.discrete)
            .map(|blocks| {
                constraint_rows(&RepPair {
                    output: blocks[slice.output].clone(),
                    inputs: slice.inputs.iter().map(|g| blocks[*g].clone()).collect(),
                })
            })
            .collect()
    }
}

/// Null space of the equivariance constraints on one slice.
#[derive(Debug, Clone)]
pub struct SliceNullspace {
    /// Orthonormal columns spanning the equivariant maps, each a row-major
    /// `vec(φ)` with the output index slowest.
    pub basis: DMatrix<f64>,
    /// Smallest gap ratio observed over the projection stages.
    pub gap_ratio: f64,
}

impl SliceNullspace {
    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }
}

/// Null space by successive projection: starting from the whole space, each
/// constraint `C` is applied to the current basis `N` and `N` is replaced by
/// `N V₀`, where `V₀` spans the right singular vectors of `C N` with singular
/// values at most `rel_tol` times the largest scale seen so far.
pub fn multilinear_nullspace(
    reps: &GradeReps,
    slice: &GradeSlice,
    config: &SolverConfig,
) -> Result<SliceNullspace> {
    let alg = &reps.algebra;
    let k = slice.size(alg);
    let required = k.saturating_mul(k);
    if required > config.cap {
        return Err(GaError::SliceTooLarge {
            required,
            cap: config.cap,
        });
    }
    let mut basis = DMatrix::<f64>::identity(k, k);
    let mut scale = 0.0f64;
    let mut gap = f64::INFINITY;
    for c in reps.constraints(slice)? {
        if basis.ncols() == 0 {
            break;
        }
        scale = scale.max(c.amax());
        let a = &c * &basis;
        let (spectrum, v_t) = full_svd(&a);
        scale = scale.max(spectrum.first().copied().unwrap_or(0.0));
        let thr = config.rel_tol * scale;
        gap = gap.min(gap_ratio(&spectrum, thr));
        let null: Vec<usize> = (0..basis.ncols())
            .filter(|j| spectrum.get(*j).is_none_or(|s| *s <= thr))
            .collect();
        let v0 = v_t.select_rows(null.iter()).transpose();
        basis = &basis * v0;
    }
    Ok(SliceNullspace {
        basis,
        gap_ratio: gap,
    })
}

/// Dimension of the space of equivariant maps on one grade slice.
pub fn solve_multilinear_dim(
    alg: &Arc<Algebra>,
    group: Group,
    slice: &GradeSlice,
    config: &SolverConfig,
) -> Result<usize> {
    let reps = GradeReps::new(alg, group)?;
    Ok(multilinear_nullspace(&reps, slice, config)?.dim())
}
