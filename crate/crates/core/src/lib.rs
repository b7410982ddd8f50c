//! Geometric algebra toolkit for E(3)-equivariant transformers over the
//! Euclidean, projective and conformal algebras.

pub mod algebra;
pub mod embed;
pub mod error;
pub mod group;
pub mod layers;
pub mod solver;
pub mod transformer;
mod serde_matrix;

pub use algebra::{Algebra, AlgebraKind, Blade, CgaFrame, Multivector, Parity, Signature, Versor};
pub use error::{GaError, Result};
