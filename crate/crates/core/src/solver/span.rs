use std::sync::Arc;
use std::time::Instant;

use log::info;
use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::linear::{solve_linear_basis_report, LinearMapBasis};
use super::multilinear::{multilinear_nullspace, GradeReps, GradeSlice};
use super::{row_space_scaled, SolverConfig};
use crate::algebra::{binomial, Algebra, AlgebraKind, Blade};
use crate::error::{GaError, Result};
use crate::group::Group;

/// Span and null-space dimensions on one grade slice.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SliceReport {
    pub inputs: Vec<usize>,
    pub output: usize,
    pub span_dim: usize,
    pub nullspace_dim: usize,
}

/// Comparison of constructible multilinear maps with all equivariant ones.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpanReport {
    pub l: usize,
    pub algebra: AlgebraKind,
    pub with_join: bool,
    pub span_dim: usize,
    pub nullspace_dim: usize,
    pub slices: Vec<SliceReport>,
}

impl SpanReport {
    pub fn is_complete(&self) -> bool {
        self.slices.iter().all(|s| s.span_dim == s.nullspace_dim)
    }

    pub fn strict_slices(&self) -> impl Iterator<Item = &SliceReport> {
        self.slices.iter().filter(|s| s.span_dim < s.nullspace_dim)
    }
}

#[derive(Debug, Clone, Copy)]
enum Bilinear {
    Geometric,
    Join,
}

/// Product tensors restricted to grades, indexed `[o][a][b]`. Each block is
/// `(n_o · n_a) × n_b` with entry `(c · n_a + u, v)` the coefficient of the
/// `c`-th grade-`o` blade in the product of the `u`-th grade-`a` and `v`-th
/// grade-`b` blades.
type GradedTensor = Vec<Vec<Vec<Option<DMatrix<f64>>>>>;

fn graded_tensor(alg: &Algebra, which: Bilinear) -> Result<GradedTensor> {
    let d = alg.dim();
    let pos: Vec<usize> = {
        let mut pos = vec![0; alg.size()];
        for k in 0..=d {
            for (i, b) in alg.blades_of_grade(k).iter().enumerate() {
                pos[b.mask()] = i;
            }
        }
        pos
    };
    let mut t: GradedTensor = (0..=d)
        .map(|o| {
            (0..=d)
                .map(|a| {
                    (0..=d)
                        .map(|b| {
                            Some(DMatrix::zeros(
                                binomial(d, o) * binomial(d, a),
                                binomial(d, b),
                            ))
                        })
                        .collect()
                })
                .collect()
        })
        .collect();
    let mut used = vec![vec![vec![false; d + 1]; d + 1]; d + 1];
    for x in 0..alg.size() {
        for y in 0..alg.size() {
            let (bx, by) = (Blade(x as u16), Blade(y as u16));
            let e = match which {
                Bilinear::Geometric => alg.product(bx, by),
                Bilinear::Join => alg.join_entry(bx, by)?,
            };
            if e.sign == 0 {
                continue;
            }
            let (o, a, b) = (e.out.grade(), bx.grade(), by.grade());
            let na = binomial(d, a);
            let m = t[o][a][b].as_mut().expect("allocated");
            m[(pos[e.out.mask()] * na + pos[x], pos[y])] = e.sign as f64;
            used[o][a][b] = true;
        }
    }
    for o in 0..=d {
        for a in 0..=d {
            for b in 0..=d {
                if !used[o][a][b] {
                    t[o][a][b] = None;
                }
            }
        }
    }
    Ok(t)
}

/// Collects candidate rows and periodically compresses them to an
/// orthonormal basis of their span. Candidates are built from orthonormal
/// factors and unit product tensors, so singular values are measured against
/// an absolute scale of at least 1.
struct Accumulator {
    ncols: usize,
    basis: DMatrix<f64>,
    pending: Vec<f64>,
    rel_tol: f64,
}

impl Accumulator {
    fn new(ncols: usize, rel_tol: f64) -> Self {
        Self {
            ncols,
            basis: DMatrix::zeros(0, ncols),
            pending: Vec::new(),
            rel_tol,
        }
    }

    fn push(&mut self, row: &[f64]) {
        debug_assert_eq!(row.len(), self.ncols);
        self.pending.extend_from_slice(row);
        if self.pending.len() / self.ncols >= (2 * self.ncols).max(64) {
            self.compress();
        }
    }

    fn compress(&mut self) {
        if self.pending.is_empty() {
            return;
        }
        let extra = self.pending.len() / self.ncols;
        let mut all = DMatrix::zeros(self.basis.nrows() + extra, self.ncols);
        all.rows_mut(0, self.basis.nrows()).copy_from(&self.basis);
        let new = DMatrix::from_row_slice(extra, self.ncols, &self.pending);
        all.rows_mut(self.basis.nrows(), extra).copy_from(&new);
        self.pending.clear();
        self.basis = row_space_scaled(&all, self.rel_tol, 1.0);
    }

    fn finish(mut self) -> DMatrix<f64> {
        self.compress();
        self.basis
    }
}

struct SpanBuilder {
    alg: Arc<Algebra>,
    tensors: Vec<GradedTensor>,
    /// `levels[a - 1][slice index]` holds an orthonormal row basis of the
    /// constructible maps of arity `a` on that slice.
    levels: Vec<Vec<DMatrix<f64>>>,
    rel_tol: f64,
}

fn slice_index(base: usize, output: usize, inputs: &[usize]) -> usize {
    inputs.iter().fold(output, |acc, g| acc * base + g)
}

impl SpanBuilder {
    fn new(
        alg: &Arc<Algebra>,
        linear: &LinearMapBasis,
        with_join: bool,
        rel_tol: f64,
    ) -> Result<Self> {
        let mut tensors = vec![graded_tensor(alg, Bilinear::Geometric)?];
        if with_join {
            tensors.push(graded_tensor(alg, Bilinear::Join)?);
        }
        let level1 = GradeSlice::all(alg, 1)
            .iter()
            .map(|s| {
                let blocks = linear.restrict(alg, s.output, s.inputs[0]);
                let flat = super::linear::flatten(&blocks);
                row_space_scaled(&flat, rel_tol, 1.0)
            })
            .collect();
        Ok(Self {
            alg: alg.clone(),
            tensors,
            levels: vec![level1],
            rel_tol,
        })
    }

    fn base(&self) -> usize {
        self.alg.dim() + 1
    }

    fn level(&self, arity: usize, output: usize, inputs: &[usize]) -> &DMatrix<f64> {
        &self.levels[arity - 1][slice_index(self.base(), output, inputs)]
    }

    fn build_level(&mut self, arity: usize) {
        let slices = GradeSlice::all(&self.alg, arity);
        let level: Vec<DMatrix<f64>> = slices.par_iter().map(|s| self.span_on(s)).collect();
        self.levels.push(level);
    }

    /// Span of `L ∘ β(S_A(x_A), S_B(x_B))` over ordered splits `(A, B)` of the
    /// inputs, intermediate grades, bilinears `β` and linear maps `L`.
    fn span_on(&self, slice: &GradeSlice) -> DMatrix<f64> {
        let alg = &self.alg;
        let d = alg.dim();
        let l = slice.arity();
        let dims = slice.input_dims(alg);
        let n_in: usize = dims.iter().product();
        let mut mids: Vec<Accumulator> = (0..=d)
            .map(|m| Accumulator::new(binomial(d, m) * n_in, self.rel_tol))
            .collect();

        for mask in 1..(1usize << l) - 1 {
            let a_idx: Vec<usize> = (0..l).filter(|j| mask >> j & 1 == 1).collect();
            let b_idx: Vec<usize> = (0..l).filter(|j| mask >> j & 1 == 0).collect();
            let ga: Vec<usize> = a_idx.iter().map(|j| slice.inputs[*j]).collect();
            let gb: Vec<usize> = b_idx.iter().map(|j| slice.inputs[*j]).collect();
            let n_b: usize = b_idx.iter().map(|j| dims[*j]).product();
            let perm = split_permutation(&dims, &a_idx, &b_idx);
            for ma in 0..=d {
                let sa = self.level(a_idx.len(), ma, &ga);
                if sa.nrows() == 0 {
                    continue;
                }
                for mb in 0..=d {
                    let sb = self.level(b_idx.len(), mb, &gb);
                    if sb.nrows() == 0 {
                        continue;
                    }
                    let (na, nb) = (binomial(d, ma), binomial(d, mb));
                    for tensor in &self.tensors {
                        for (mid, acc) in mids.iter_mut().enumerate() {
                            let Some(t) = &tensor[mid][ma][mb] else {
                                continue;
                            };
                            let nm = binomial(d, mid);
                            let mut row = vec![0.0; nm * n_in];
                            for q in sb.row_iter() {
                                let q = DMatrix::from_iterator(n_b, nb, q.iter().copied())
                                    .transpose();
                                let w = t * q;
                                for p in sa.row_iter() {
                                    let p_t = DMatrix::from_iterator(n_in / n_b, na, p.iter().copied());
                                    for c in 0..nm {
                                        let block = &p_t * w.rows(c * na, na);
                                        // block is n_A × n_B; row-major flattening is A-then-B order
                                        let ab = block.transpose();
                                        let flat = ab.as_slice();
                                        let out = &mut row[c * n_in..(c + 1) * n_in];
                                        for (canon, src) in perm.iter().enumerate() {
                                            out[canon] = flat[*src];
                                        }
                                    }
                                    acc.push(&row);
                                }
                            }
                        }
                    }
                }
            }
        }

        let n_o = binomial(d, slice.output);
        let mut out = Accumulator::new(n_o * n_in, self.rel_tol);
        for (mid, acc) in mids.into_iter().enumerate() {
            let inner = acc.finish();
            if inner.nrows() == 0 {
                continue;
            }
            let outer = self.level(1, slice.output, &[mid]);
            let nm = binomial(d, mid);
            for lrow in outer.row_iter() {
                let lmat = DMatrix::from_row_slice(n_o, nm, lrow.transpose().as_slice());
                for r in inner.row_iter() {
                    let rmat = DMatrix::from_row_slice(nm, n_in, r.transpose().as_slice());
                    let composed = (&lmat * rmat).transpose();
                    out.push(composed.as_slice());
                }
            }
        }
        out.finish()
    }
}

/// `perm[canonical] = position in A-then-B order` for flattened input
/// multi-indices.
fn split_permutation(dims: &[usize], a_idx: &[usize], b_idx: &[usize]) -> Vec<usize> {
    let n: usize = dims.iter().product();
    let order: Vec<usize> = a_idx.iter().chain(b_idx).copied().collect();
    (0..n)
        .map(|mut canon| {
            let mut digits = vec![0; dims.len()];
            for j in (0..dims.len()).rev() {
                digits[j] = canon % dims[j];
                canon /= dims[j];
            }
            order.iter().fold(0, |acc, j| acc * dims[*j] + digits[*j])
        })
        .collect()
}

/// Dimensions of the span of maps built from equivariant linear maps and the
/// geometric product (plus the join when `with_join`), against the full
/// equivariant null space, on every grade slice of arity `l`.
pub fn algebra_span_dim(
    alg: &Arc<Algebra>,
    l: usize,
    with_join: bool,
    group: Group,
    config: &SolverConfig,
) -> Result<SpanReport> {
    let kind = alg.require_kind()?;
    if !(2..=4).contains(&l) {
        return Err(GaError::InvalidInput(format!("arity must be in 2..=4, got {l}")));
    }
    if with_join && kind != AlgebraKind::Pga {
        return Err(GaError::NotProjective(alg.signature().to_string()));
    }
    let slices = GradeSlice::all(alg, l);
    for s in &slices {
        let k = s.size(alg);
        if k.saturating_mul(k) > config.cap {
            return Err(GaError::SliceTooLarge {
                required: k * k,
                cap: config.cap,
            });
        }
    }
    let linear = solve_linear_basis_report(alg, group, config)?.basis;
    let mut builder = SpanBuilder::new(alg, &linear, with_join, config.rel_tol)?;
    for arity in 2..=l {
        builder.build_level(arity);
    }
    let reps = GradeReps::new(alg, group)?;
    let nulls: Vec<usize> = slices
        .par_iter()
        .map(|s| multilinear_nullspace(&reps, s, config).map(|n| n.dim()))
        .collect::<Result<_>>()?;
    let reports: Vec<SliceReport> = slices
        .iter()
        .zip(nulls)
        .enumerate()
        .map(|(i, (s, nullspace_dim))| SliceReport {
            inputs: s.inputs.clone(),
            output: s.output,
            span_dim: builder.levels[l - 1][i].nrows(),
            nullspace_dim,
        })
        .collect();
    Ok(SpanReport {
        l,
        algebra: kind,
        with_join,
        span_dim: reports.iter().map(|r| r.span_dim).sum(),
        nullspace_dim: reports.iter().map(|r| r.nullspace_dim).sum(),
        slices: reports,
    })
}

/// One algebra/bilinear configuration of the expressivity check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConjectureCase {
    pub algebra: AlgebraKind,
    pub group: Group,
    pub with_join: bool,
    /// Whether the constructible span is expected to be everything.
    pub expect_complete: bool,
}

impl ConjectureCase {
    /// EGA and CGA under E(3) with the geometric product only; PGA under
    /// SE(3) without and with the join.
    pub fn standard() -> [ConjectureCase; 4] {
        [
            ConjectureCase {
                algebra: AlgebraKind::Ega,
                group: Group::E3,
                with_join: false,
                expect_complete: true,
            },
            ConjectureCase {
                algebra: AlgebraKind::Cga,
                group: Group::E3,
                with_join: false,
                expect_complete: true,
            },
            ConjectureCase {
                algebra: AlgebraKind::Pga,
                group: Group::Se3,
                with_join: false,
                expect_complete: false,
            },
            ConjectureCase {
                algebra: AlgebraKind::Pga,
                group: Group::Se3,
                with_join: true,
                expect_complete: true,
            },
        ]
    }

    /// Cases beyond `l = 2` are slow except for the EGA.
    pub fn is_long(&self, l: usize) -> bool {
        l >= 4 || (l == 3 && self.algebra != AlgebraKind::Ega)
    }

    pub fn label(&self) -> String {
        format!(
            "{} {}{}",
            self.algebra,
            self.group,
            if self.with_join { " +join" } else { "" }
        )
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum ConjectureOutcome {
    Pass {
        case: ConjectureCase,
        report: SpanReport,
        seconds: f64,
    },
    Fail {
        case: ConjectureCase,
        report: SpanReport,
        seconds: f64,
    },
    Skipped {
        case: ConjectureCase,
        l: usize,
        reason: String,
    },
}

impl ConjectureOutcome {
    pub fn passed(&self) -> bool {
        !matches!(self, ConjectureOutcome::Fail { .. })
    }
}

/// Run every standard case for `l = 2..=l_max`. A case passes when the span
/// equals the null space on every slice (or, for the PGA without join, falls
/// strictly short on at least one slice). Slow cases are skipped unless
/// `long` is set.
pub fn verify_conjecture(
    l_max: usize,
    long: bool,
    config: &SolverConfig,
) -> Result<Vec<ConjectureOutcome>> {
    let mut out = Vec::new();
    for l in 2..=l_max {
        for case in ConjectureCase::standard() {
            if case.is_long(l) && !long {
                out.push(ConjectureOutcome::Skipped {
                    case,
                    l,
                    reason: "long-running; enable with --long".into(),
                });
                continue;
            }
            let start = Instant::now();
            let alg = case.algebra.algebra();
            let report = match algebra_span_dim(&alg, l, case.with_join, case.group, config) {
                Ok(r) => r,
                Err(e @ GaError::SliceTooLarge { .. }) => {
                    out.push(ConjectureOutcome::Skipped {
                        case,
                        l,
                        reason: e.to_string(),
                    });
                    continue;
                }
                Err(e) => return Err(e),
            };
            let seconds = start.elapsed().as_secs_f64();
            let bounded = report.slices.iter().all(|s| s.span_dim <= s.nullspace_dim);
            let ok = bounded
                && if case.expect_complete {
                    report.is_complete()
                } else {
                    report.strict_slices().next().is_some()
                };
            info!(
                "l={l} {}: span {} / null {} in {seconds:.1}s",
                case.label(),
                report.span_dim,
                report.nullspace_dim
            );
            out.push(if ok {
                ConjectureOutcome::Pass {
                    case,
                    report,
                    seconds,
                }
            } else {
                ConjectureOutcome::Fail {
                    case,
                    report,
                    seconds,
                }
            });
        }
    }
    Ok(out)
}
