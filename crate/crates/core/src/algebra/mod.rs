//! Dense Clifford algebra arithmetic over an arbitrary signature `(p, q, r)`.
//!
//! Blades are stored as bit masks: bit `i` is set iff generator `i` of the
//! signature appears in the blade, and the canonical blade writes its
//! generators in ascending index order. A multivector is a dense coefficient
//! vector indexed by mask, so `coeffs[mask]` is the coefficient of that blade.
//!
//! The three algebras used for 3D geometry have fixed generator orders:
//!
//! | algebra | signature | generators |
//! |---------|-----------|------------|
//! | EGA     | G(3,0,0)  | e1 e2 e3   |
//! | PGA     | G(3,0,1)  | e0 e1 e2 e3 (e0 at index 0) |
//! | CGA     | G(4,1,0)  | e1 e2 e3 e+ e- |

mod cga;
mod join;
mod multivector;
mod versor;

use std::fmt;
use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Serialize};

use crate::error::{GaError, Result};

pub use cga::CgaFrame;
pub use multivector::{Multivector, EXP_MAX_TERMS, EXP_TOL};
pub(crate) use multivector::{gp_into, inner_coeffs, join_into};
pub use versor::{Parity, Versor};

/// Largest supported base-space dimension.
pub const MAX_DIM: usize = 8;

/// Metric signature plus the fixed ordering of its generators.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Signature {
    squares: Vec<i8>,
    names: Vec<String>,
}

impl Signature {
    /// Signature with generators ordered `+1` squares first, then `-1`, then `0`.
    /// Generators are named `1..=d`.
    pub fn new(p: usize, q: usize, r: usize) -> Result<Self> {
        let mut squares = vec![1i8; p];
        squares.extend(std::iter::repeat_n(-1i8, q));
        squares.extend(std::iter::repeat_n(0i8, r));
        let names = (1..=squares.len()).map(|i| i.to_string()).collect();
        Self::with_order(squares, names)
    }

    /// Signature from an explicit per-generator list of squares and names.
    pub fn with_order(squares: Vec<i8>, names: Vec<String>) -> Result<Self> {
        if squares.len() > MAX_DIM {
            return Err(GaError::InvalidSignature(format!(
                "dimension {} exceeds the maximum of {MAX_DIM}",
                squares.len()
            )));
        }
        if squares.len() != names.len() {
            return Err(GaError::InvalidSignature(
                "one name is required per generator".into(),
            ));
        }
        if let Some(s) = squares.iter().find(|s| !matches!(s, -1..=1)) {
            return Err(GaError::InvalidSignature(format!(
                "generator square {s} is not one of -1, 0, +1"
            )));
        }
        for (i, n) in names.iter().enumerate() {
            if n.is_empty() || names[..i].contains(n) {
                return Err(GaError::InvalidSignature(format!(
                    "generator names must be distinct and non-empty, got {n:?}"
                )));
            }
        }
        Ok(Self { squares, names })
    }

    pub fn ega() -> Self {
        Self::with_order(vec![1, 1, 1], names(&["1", "2", "3"])).unwrap()
    }

    pub fn pga() -> Self {
        Self::with_order(vec![0, 1, 1, 1], names(&["0", "1", "2", "3"])).unwrap()
    }

    pub fn cga() -> Self {
        Self::with_order(vec![1, 1, 1, 1, -1], names(&["1", "2", "3", "+", "-"])).unwrap()
    }

    pub fn dim(&self) -> usize {
        self.squares.len()
    }

    pub fn p(&self) -> usize {
        self.squares.iter().filter(|&&s| s == 1).count()
    }

    pub fn q(&self) -> usize {
        self.squares.iter().filter(|&&s| s == -1).count()
    }

    pub fn r(&self) -> usize {
        self.squares.iter().filter(|&&s| s == 0).count()
    }

    pub fn square(&self, generator: usize) -> i8 {
        self.squares[generator]
    }

    pub fn squares(&self) -> &[i8] {
        &self.squares
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }
}

impl fmt::Display for Signature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "G({},{},{})", self.p(), self.q(), self.r())
    }
}

fn names(ns: &[&str]) -> Vec<String> {
    ns.iter().map(|s| s.to_string()).collect()
}

/// A basis blade, identified by the set of generators it contains.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Blade(pub u16);

impl Blade {
    pub const SCALAR: Blade = Blade(0);

    /// Blade containing exactly the listed generators.
    pub fn from_generators(gens: &[usize]) -> Blade {
        Blade(gens.iter().fold(0u16, |m, &g| m | (1 << g)))
    }

    pub fn mask(self) -> usize {
        self.0 as usize
    }

    pub fn grade(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn contains(self, generator: usize) -> bool {
        self.0 & (1 << generator) != 0
    }

    /// Generators of the blade in ascending order.
    pub fn generators(self) -> impl Iterator<Item = usize> {
        (0..16).filter(move |&g| self.0 & (1 << g) != 0)
    }
}

/// The three algebras for 3D geometry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AlgebraKind {
    Ega,
    Pga,
    Cga,
}

impl AlgebraKind {
    pub fn signature(self) -> Signature {
        match self {
            AlgebraKind::Ega => Signature::ega(),
            AlgebraKind::Pga => Signature::pga(),
            AlgebraKind::Cga => Signature::cga(),
        }
    }

    /// Shared instance of the algebra; built once per process.
    pub fn algebra(self) -> Arc<Algebra> {
        static EGA: OnceLock<Arc<Algebra>> = OnceLock::new();
        static PGA: OnceLock<Arc<Algebra>> = OnceLock::new();
        static CGA: OnceLock<Arc<Algebra>> = OnceLock::new();
        let cell = match self {
            AlgebraKind::Ega => &EGA,
            AlgebraKind::Pga => &PGA,
            AlgebraKind::Cga => &CGA,
        };
        cell.get_or_init(|| Arc::new(Algebra::build(self.signature(), Some(self))))
            .clone()
    }

    pub fn name(self) -> &'static str {
        match self {
            AlgebraKind::Ega => "ega",
            AlgebraKind::Pga => "pga",
            AlgebraKind::Cga => "cga",
        }
    }
}

impl fmt::Display for AlgebraKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for AlgebraKind {
    type Err = GaError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ega" => Ok(AlgebraKind::Ega),
            "pga" => Ok(AlgebraKind::Pga),
            "cga" => Ok(AlgebraKind::Cga),
            other => Err(GaError::InvalidInput(format!("unknown algebra {other:?}"))),
        }
    }
}

/// One entry of a product table: `e_a * e_b = sign * e_out`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ProductEntry {
    pub sign: i8,
    pub out: Blade,
}

/// A Clifford algebra with its precomputed Cayley table (and, for
/// projective signatures, its join table). Immutable after construction.
#[derive(Debug)]
pub struct Algebra {
    signature: Signature,
    kind: Option<AlgebraKind>,
    cayley: Vec<ProductEntry>,
    join: Option<Vec<ProductEntry>>,
}

impl Algebra {
    pub fn new(signature: Signature) -> Arc<Algebra> {
        let kind = [AlgebraKind::Ega, AlgebraKind::Pga, AlgebraKind::Cga]
            .into_iter()
            .find(|k| k.signature() == signature);
        match kind {
            Some(k) => k.algebra(),
            None => Arc::new(Algebra::build(signature, None)),
        }
    }

    pub fn ega() -> Arc<Algebra> {
        AlgebraKind::Ega.algebra()
    }

    pub fn pga() -> Arc<Algebra> {
        AlgebraKind::Pga.algebra()
    }

    pub fn cga() -> Arc<Algebra> {
        AlgebraKind::Cga.algebra()
    }

    fn build(signature: Signature, kind: Option<AlgebraKind>) -> Algebra {
        let n = 1usize << signature.dim();
        let mut cayley = Vec::with_capacity(n * n);
        for a in 0..n {
            for b in 0..n {
                let (sign, out) = blade_product(Blade(a as u16), Blade(b as u16), &signature);
                cayley.push(ProductEntry { sign, out });
            }
        }
        let join = (signature.q() == 0 && signature.r() == 1)
            .then(|| join::join_table(signature.dim()));
        Algebra {
            signature,
            kind,
            cayley,
            join,
        }
    }

    pub fn signature(&self) -> &Signature {
        &self.signature
    }

    pub fn kind(&self) -> Option<AlgebraKind> {
        self.kind
    }

    /// The algebra tag, or an error for signatures outside EGA/PGA/CGA.
    pub fn require_kind(&self) -> Result<AlgebraKind> {
        self.kind.ok_or_else(|| {
            GaError::Unsupported(format!(
                "{} is not one of the EGA, PGA or CGA algebras",
                self.signature
            ))
        })
    }

    /// Base space dimension `d`.
    pub fn dim(&self) -> usize {
        self.signature.dim()
    }

    /// Algebra dimension `2^d`.
    pub fn size(&self) -> usize {
        1 << self.dim()
    }

    pub fn pseudoscalar(&self) -> Blade {
        Blade((self.size() - 1) as u16)
    }

    pub fn is_projective(&self) -> bool {
        self.join.is_some()
    }

    #[inline]
    pub fn product(&self, a: Blade, b: Blade) -> ProductEntry {
        self.cayley[(a.mask() << self.dim()) | b.mask()]
    }

    /// Join table entry `e_a ∨ e_b`, for projective algebras.
    pub fn join_entry(&self, a: Blade, b: Blade) -> Result<ProductEntry> {
        let table = self
            .join
            .as_ref()
            .ok_or_else(|| GaError::NotProjective(self.signature.to_string()))?;
        Ok(table[(a.mask() << self.dim()) | b.mask()])
    }

    pub(crate) fn join_table(&self) -> Option<&[ProductEntry]> {
        self.join.as_deref()
    }

    /// Full Cayley table in row-major `(a, b)` order.
    pub fn cayley_table(&self) -> &[ProductEntry] {
        &self.cayley
    }

    /// Blades of grade `k`, in ascending mask order.
    pub fn blades_of_grade(&self, k: usize) -> Vec<Blade> {
        (0..self.size())
            .map(|m| Blade(m as u16))
            .filter(|b| b.grade() == k)
            .collect()
    }

    pub fn grade_dim(&self, k: usize) -> usize {
        binomial(self.dim(), k)
    }

    /// Sign of the reversal on a blade: `(-1)^(k(k-1)/2)`.
    pub fn reverse_sign(b: Blade) -> f64 {
        let k = b.grade();
        if (k * k.saturating_sub(1) / 2).is_multiple_of(2) {
            1.0
        } else {
            -1.0
        }
    }

    /// Sign of the grade involution on a blade: `(-1)^k`.
    pub fn involute_sign(b: Blade) -> f64 {
        if b.grade().is_multiple_of(2) {
            1.0
        } else {
            -1.0
        }
    }

    /// Human-readable blade name, e.g. `e12`, `e0123`, `e+-`, or `1`.
    pub fn blade_name(&self, b: Blade) -> String {
        if b == Blade::SCALAR {
            return "1".into();
        }
        let mut s = String::from("e");
        for g in b.generators() {
            s.push_str(&self.signature.names()[g]);
        }
        s
    }

    /// Parses a blade written in any generator order (e.g. `e032`) and returns
    /// the sign relating it to the canonical ascending blade.
    pub fn parse_blade(&self, name: &str) -> Result<(f64, Blade)> {
        let body = name
            .strip_prefix('e')
            .ok_or_else(|| GaError::InvalidInput(format!("blade name {name:?} must start with 'e'")))?;
        let names = self.signature.names();
        let mut gens = Vec::new();
        let mut rest = body;
        while !rest.is_empty() {
            let (idx, len) = names
                .iter()
                .enumerate()
                .filter(|(_, n)| rest.starts_with(n.as_str()))
                .map(|(i, n)| (i, n.len()))
                .max_by_key(|&(_, l)| l)
                .ok_or_else(|| GaError::InvalidInput(format!("unknown generator in {name:?}")))?;
            gens.push(idx);
            rest = &rest[len..];
        }
        let mut sign = 1.0;
        let mut mask = Blade::SCALAR;
        for g in gens {
            let e = self.product(mask, Blade(1 << g));
            if mask.contains(g) {
                return Err(GaError::InvalidInput(format!(
                    "repeated generator in blade {name:?}"
                )));
            }
            sign *= e.sign as f64;
            mask = e.out;
        }
        Ok((sign, mask))
    }
}

/// Product of two canonical blades: `e_a e_b = sign * e_(a xor b)`.
///
/// The sign counts the transpositions needed to sort the concatenated
/// generator list and multiplies in the square of every shared generator.
pub fn blade_product(a: Blade, b: Blade, sig: &Signature) -> (i8, Blade) {
    let mut swaps = 0u32;
    for g in b.generators() {
        // generators of `a` with a larger index sit to the right of e_g's target slot
        swaps += (a.0 >> (g + 1)).count_ones();
    }
    let mut sign: i8 = if swaps.is_multiple_of(2) { 1 } else { -1 };
    let shared = Blade(a.0 & b.0);
    for g in shared.generators() {
        sign *= sig.square(g);
    }
    (sign, Blade(a.0 ^ b.0))
}

pub(crate) fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}
