//! Numerical solving for equivariant linear and multilinear maps, the
//! closed-form linear bases, and span construction for the expressivity check.

use nalgebra::DMatrix;

mod linear;
mod multilinear;
mod span;

pub use linear::{
    closed_form_basis, closed_form_maps, membership_residual, solve_linear_basis,
    solve_linear_basis_report, subspace_distance, LinearMapBasis, LinearSolveReport, NamedMap,
};
pub use multilinear::{
    multilinear_nullspace, solve_multilinear_dim, GradeReps, GradeSlice, SliceNullspace,
};
pub use span::{
    algebra_span_dim, verify_conjecture, ConjectureCase, ConjectureOutcome, SliceReport,
    SpanReport,
};

/// Relative singular-value threshold below which a direction counts as null.
pub const REL_TOL: f64 = 1e-10;
/// Required ratio between the smallest kept and the largest dropped singular value.
pub const GAP_RATIO: f64 = 1e3;
/// Default bound on the number of dense entries of one slice constraint block.
pub const DEFAULT_CAP: usize = 20_000_000;

/// Tolerances and limits shared by the solvers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub rel_tol: f64,
    pub cap: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            rel_tol: REL_TOL,
            cap: DEFAULT_CAP,
        }
    }
}

/// Singular values of `a`, descending, and the full right factor `Vᵀ`
/// (`ncols × ncols`).
pub(crate) fn full_svd(a: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    svd_impl(a, true)
}

/// Singular values and the thin right factor (`min(nrows, ncols) × ncols`).
pub(crate) fn thin_svd(a: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    svd_impl(a, false)
}

/// Singular values, descending.
pub fn singular_values(a: &DMatrix<f64>) -> Vec<f64> {
    lapack_svd(a, Job::None).0
}

#[derive(Clone, Copy, PartialEq)]
enum Job {
    None,
    Thin,
    Full,
}

// Both nalgebra's and faer's SVDs return inaccurate factors on some of the
// highly degenerate constraint matrices met here; LAPACK is reliable on them.
fn svd_impl(a: &DMatrix<f64>, full: bool) -> (Vec<f64>, DMatrix<f64>) {
    let (m, n) = a.shape();
    if n == 0 {
        return (Vec::new(), DMatrix::zeros(0, 0));
    }
    if m == 0 {
        return (Vec::new(), DMatrix::identity(n, n));
    }
    let (s, vt) = lapack_svd(a, if full { Job::Full } else { Job::Thin });
    (s, vt.expect("right factor requested"))
}

/// `dgesvd` with the left factor skipped.
fn lapack_svd(a: &DMatrix<f64>, job: Job) -> (Vec<f64>, Option<DMatrix<f64>>) {
    let (m, n) = a.shape();
    let k = m.min(n);
    if k == 0 {
        return (Vec::new(), None);
    }
    let vt_rows = match job {
        Job::None => 1,
        Job::Thin => k,
        Job::Full => n,
    };
    let (mi, ni) = (m as i32, n as i32);
    let mut data = a.as_slice().to_vec();
    let mut s = vec![0.0; k];
    let mut vt = vec![0.0; vt_rows * n];
    let mut u = [0.0; 1];
    let vj = match job {
        Job::None => b'N',
        Job::Thin => b'S',
        Job::Full => b'A',
    };
    let mut work = vec![0.0; 1];
    let mut info = 0;
    for pass in 0..2 {
        let lwork = if pass == 0 { -1 } else { work.len() as i32 };
        unsafe {
            lapack::dgesvd(
                b'N', vj, mi, ni, &mut data, mi, &mut s, &mut u, 1, &mut vt, vt_rows as i32,
                &mut work, lwork, &mut info,
            );
        }
        assert!(info == 0, "LAPACK gesvd failed with info {info}");
        if pass == 0 {
            work = vec![0.0; work[0] as usize];
        }
    }
    let vt = (job != Job::None).then(|| DMatrix::from_column_slice(vt_rows, n, &vt));
    (s, vt)
}

/// Ratio between the smallest singular value above `thr` and the largest one
/// at or below it; infinite when either side is empty or the drop is exact.
pub(crate) fn gap_ratio(spectrum: &[f64], thr: f64) -> f64 {
    let kept = spectrum.iter().filter(|s| **s > thr).fold(f64::INFINITY, |a, b| a.min(*b));
    let dropped = spectrum.iter().filter(|s| **s <= thr).fold(0.0f64, |a, b| a.max(*b));
    if kept.is_infinite() || dropped == 0.0 {
        f64::INFINITY
    } else {
        kept / dropped
    }
}

/// Whether any singular value lies within a factor 10 of `thr` on either side.
pub(crate) fn near_threshold(spectrum: &[f64], thr: f64) -> bool {
    spectrum.iter().any(|s| *s > thr / 10.0 && *s < thr * 10.0)
}

/// Orthonormal basis (as rows) of the row space of `rows`, keeping singular
/// values above `rel_tol · σ_max`.
pub(crate) fn row_space(rows: &DMatrix<f64>, rel_tol: f64) -> DMatrix<f64> {
    row_space_scaled(rows, rel_tol, 0.0)
}

/// As [`row_space`] with the threshold `rel_tol · max(σ_max, floor)`, so a
/// block of pure round-off is recognized as empty.
pub(crate) fn row_space_scaled(rows: &DMatrix<f64>, rel_tol: f64, floor: f64) -> DMatrix<f64> {
    let n = rows.ncols();
    if rows.nrows() == 0 || n == 0 {
        return DMatrix::zeros(0, n);
    }
    let (spectrum, v_t) = thin_svd(rows);
    let smax = spectrum.iter().fold(floor, |a, b| a.max(*b));
    if smax == 0.0 {
        return DMatrix::zeros(0, n);
    }
    let keep: Vec<usize> = spectrum
        .iter()
        .enumerate()
        .filter(|(_, s)| **s > rel_tol * smax)
        .map(|(i, _)| i)
        .collect();
    v_t.select_rows(keep.iter())
}
