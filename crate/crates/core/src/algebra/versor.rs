use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{Algebra, Blade, Multivector, EXP_TOL};
use crate::error::{GaError, Result};

/// Tolerance on `| |<v, v>| - 1 |` when validating a versor.
const UNIT_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    pub fn compose(self, other: Parity) -> Parity {
        if self == other {
            Parity::Even
        } else {
            Parity::Odd
        }
    }
}

/// A Pin group element: a product of unit 1-vectors acting by twisted
/// conjugation, `u[x] = u x u⁻¹` when even and `u x̂ u⁻¹` when odd.
///
/// Mixed-parity multivectors are rejected.
#[derive(Debug, Clone)]
pub struct Versor {
    value: Multivector,
    inverse: Multivector,
    parity: Parity,
}

impl Versor {
    /// Validates `value`: homogeneous parity, `|<v, v>| ≈ 1`, invertible.
    pub fn new(value: Multivector) -> Result<Self> {
        let scale = value.max_abs().max(1.0);
        let odd_part = value.filter_blades(|b| b.grade() % 2 == 1).max_abs();
        let even_part = value.filter_blades(|b| b.grade() % 2 == 0).max_abs();
        let parity = if odd_part <= 1e-12 * scale {
            Parity::Even
        } else if even_part <= 1e-12 * scale {
            Parity::Odd
        } else {
            return Err(GaError::InvalidVersor(
                "value mixes even and odd grades".into(),
            ));
        };
        let nn = value.inner(&value)?;
        if (nn.abs() - 1.0).abs() > UNIT_TOL * scale * scale {
            return Err(GaError::InvalidVersor(format!(
                "expected |<v, v>| = 1, got {nn}"
            )));
        }
        let inverse = value.inverse()?;
        Ok(Self {
            value,
            inverse,
            parity,
        })
    }

    pub fn identity(alg: &Arc<Algebra>) -> Self {
        Self::new(Multivector::scalar(alg, 1.0)).expect("unit scalar is a versor")
    }

    /// `exp(x)` of an even generator, e.g. a bivector.
    pub fn from_exp(x: &Multivector) -> Result<Self> {
        Self::new(x.exp(EXP_TOL)?)
    }

    /// Reflection in the hyperplane orthogonal to the unit 1-vector `v`.
    pub fn reflection(v: &Multivector) -> Result<Self> {
        if !v.is_homogeneous(1) {
            return Err(GaError::InvalidVersor("reflection needs a 1-vector".into()));
        }
        Self::new(v.clone())
    }

    pub fn value(&self) -> &Multivector {
        &self.value
    }

    pub fn inverse_value(&self) -> &Multivector {
        &self.inverse
    }

    pub fn parity(&self) -> Parity {
        self.parity
    }

    pub fn algebra(&self) -> &Arc<Algebra> {
        self.value.algebra()
    }

    /// Group product `self * other` (apply `other` first, then `self`).
    pub fn compose(&self, other: &Versor) -> Result<Versor> {
        let value = self.value.gp(&other.value)?;
        let inverse = other.inverse.gp(&self.inverse)?;
        Ok(Versor {
            value,
            inverse,
            parity: self.parity.compose(other.parity),
        })
    }

    pub fn inverse(&self) -> Versor {
        Versor {
            value: self.inverse.clone(),
            inverse: self.value.clone(),
            parity: self.parity,
        }
    }

    /// Twisted conjugation `u[x]`.
    pub fn sandwich(&self, x: &Multivector) -> Result<Multivector> {
        let arg = match self.parity {
            Parity::Even => x.clone(),
            Parity::Odd => x.involute(),
        };
        self.value.gp(&arg)?.gp(&self.inverse)
    }

    /// `u[e_b]` for every basis blade, in mask order.
    pub fn act_on_basis(&self) -> Vec<Multivector> {
        let alg = self.algebra().clone();
        (0..alg.size())
            .map(|m| {
                self.sandwich(&Multivector::blade(&alg, Blade(m as u16), 1.0))
                    .expect("same algebra")
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn mv(alg: &Arc<Algebra>, name: &str) -> Multivector {
        Multivector::named(alg, name).unwrap()
    }

    #[test]
    fn identity_sandwich() {
        let alg = Algebra::cga();
        let x = Multivector::from_coeffs(&alg, (0..32).map(|i| (i as f64).sin()).collect()).unwrap();
        let got = Versor::identity(&alg).sandwich(&x).unwrap();
        assert!((&got - &x).max_abs() < 1e-15);
    }

    #[test]
    fn reflection_of_own_axis_negates_it() {
        let alg = Algebra::ega();
        let u = Versor::reflection(&mv(&alg, "e1")).unwrap();
        assert_eq!(u.parity(), Parity::Odd);
        assert_eq!(u.sandwich(&mv(&alg, "e1")).unwrap(), -mv(&alg, "e1"));
        assert_eq!(u.sandwich(&mv(&alg, "e2")).unwrap(), mv(&alg, "e2"));
        // bivector e23 lies in the mirror plane and is preserved
        assert_eq!(u.sandwich(&mv(&alg, "e23")).unwrap(), mv(&alg, "e23"));
    }

    #[test]
    fn rotor_angle_convention() {
        // exp(-θ/2 e12) rotates e1 toward e2 by +θ
        let alg = Algebra::ega();
        let theta = 0.7;
        let r = Versor::from_exp(&mv(&alg, "e12").scale(-theta / 2.0)).unwrap();
        let got = r.sandwich(&mv(&alg, "e1")).unwrap();
        let want = &mv(&alg, "e1").scale(theta.cos()) + &mv(&alg, "e2").scale(theta.sin());
        assert!((&got - &want).max_abs() < 1e-14, "{got:?}");
        let r = Versor::from_exp(&mv(&alg, "e12").scale(PI / 4.0)).unwrap();
        let got = r.sandwich(&mv(&alg, "e1")).unwrap();
        assert!((&got + &mv(&alg, "e2")).max_abs() < 1e-14, "{got:?}");
    }

    #[test]
    fn rejects_mixed_parity_and_non_unit() {
        let alg = Algebra::ega();
        let mixed = &Multivector::scalar(&alg, 1.0) + &mv(&alg, "e1");
        assert!(Versor::new(mixed).is_err());
        assert!(Versor::new(mv(&alg, "e1").scale(2.0)).is_err());
        assert!(Versor::new(mv(&Algebra::pga(), "e0")).is_err());
    }

    #[test]
    fn compose_tracks_parity_and_inverse() {
        let alg = Algebra::ega();
        let a = Versor::reflection(&mv(&alg, "e1")).unwrap();
        let b = Versor::reflection(&mv(&alg, "e2")).unwrap();
        let ab = a.compose(&b).unwrap();
        assert_eq!(ab.parity(), Parity::Even);
        let p = ab.value().gp(ab.inverse_value()).unwrap();
        assert!((&p - &Multivector::scalar(&alg, 1.0)).max_abs() < 1e-15);
    }
}
