//! Join (regressive product) for projective signatures.
//!
//! The dual of a blade is its complement, signed so that
//! `e_A ∧ dual(e_A) = e_{01..p}`; the join is `undual(dual(x) ∧ dual(y))`.
//! Under this convention `e_{01..p} ∨ 1 = 1`, and `e_A ∨ e_B` is nonzero only
//! when `A ∪ B` covers every generator, in which case it is `±e_{A ∩ B}`.

use super::{Blade, ProductEntry};

/// Sign of the outer product of two disjoint canonical blades.
pub(crate) fn wedge_sign(a: Blade, b: Blade) -> i8 {
    debug_assert_eq!(a.0 & b.0, 0);
    let swaps: u32 = b.generators().map(|g| (a.0 >> (g + 1)).count_ones()).sum();
    if swaps.is_multiple_of(2) {
        1
    } else {
        -1
    }
}

/// `dual(e_A) = complement_sign(A) * e_{Ā}`.
pub(crate) fn complement_sign(a: Blade, dim: usize) -> i8 {
    let full = ((1u32 << dim) - 1) as u16;
    wedge_sign(a, Blade(full ^ a.0))
}

pub(crate) fn join_table(dim: usize) -> Vec<ProductEntry> {
    let n = 1usize << dim;
    let full = (n - 1) as u16;
    let mut table = Vec::with_capacity(n * n);
    for a in 0..n as u16 {
        for b in 0..n as u16 {
            let (a, b) = (Blade(a), Blade(b));
            let out = Blade(a.0 & b.0);
            let (da, db) = (Blade(full ^ a.0), Blade(full ^ b.0));
            let sign = if da.0 & db.0 != 0 {
                0
            } else {
                // undual(e_C) for C = da ∪ db is complement_sign(out) * e_out
                complement_sign(a, dim)
                    * complement_sign(b, dim)
                    * wedge_sign(da, db)
                    * complement_sign(out, dim)
            };
            table.push(ProductEntry { sign, out });
        }
    }
    table
}
