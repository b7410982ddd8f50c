use std::sync::Arc;

use super::{Algebra, AlgebraKind, Multivector};
use crate::error::{GaError, Result};

/// Null basis `(∞, o)` of the conformal algebra, expressed over the
/// orthogonal storage generators `e+`, `e-`:
/// `∞ = e- − e+` and `o = (e- + e+) / 2`.
#[derive(Debug, Clone)]
pub struct CgaFrame {
    pub inf: Multivector,
    pub origin: Multivector,
}

impl CgaFrame {
    pub fn new(alg: &Arc<Algebra>) -> Result<Self> {
        if alg.kind() != Some(AlgebraKind::Cga) {
            return Err(GaError::Unsupported(format!(
                "the null frame needs the conformal algebra, got {}",
                alg.signature()
            )));
        }
        let ep = Multivector::named(alg, "e+")?;
        let em = Multivector::named(alg, "e-")?;
        Ok(Self {
            inf: &em - &ep,
            origin: (&em + &ep).scale(0.5),
        })
    }

    /// Frame of the shared CGA instance.
    pub fn standard() -> Self {
        Self::new(&Algebra::cga()).expect("shared CGA instance")
    }
}
