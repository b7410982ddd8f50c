//! Matrix representations of the Pin group action, Lie-algebra generators for
//! SE(3) and E(3), and assembly of the linear constraints whose null space is
//! the space of equivariant (multi)linear maps.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::algebra::{Algebra, AlgebraKind, Blade, CgaFrame, Multivector};
use crate::error::{GaError, Result};

pub use crate::algebra::{Parity, Versor};

/// Symmetry group of 3D space that a construction should respect.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Group {
    /// Rotations and translations.
    Se3,
    /// Rotations, translations and mirrors.
    E3,
}

impl fmt::Display for Group {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Group::Se3 => "se3",
            Group::E3 => "e3",
        })
    }
}

impl std::str::FromStr for Group {
    type Err = GaError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "se3" => Ok(Group::Se3),
            "e3" => Ok(Group::E3),
            other => Err(GaError::InvalidInput(format!("unknown group {other:?}"))),
        }
    }
}

/// Whether a matrix represents a group element (ρ) or a Lie algebra element (dρ).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RepFlavor {
    Group,
    Algebra,
}

/// Dense representation matrix acting on coefficient vectors.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RepMatrix {
    pub flavor: RepFlavor,
    #[serde(with = "crate::serde_matrix")]
    pub matrix: DMatrix<f64>,
}

impl RepMatrix {
    /// Block mapping grade `from` to grade `to`, rows and columns in
    /// ascending blade-mask order.
    pub fn restrict(&self, alg: &Algebra, to: usize, from: usize) -> RepMatrix {
        let rows = alg.blades_of_grade(to);
        let cols = alg.blades_of_grade(from);
        let matrix = DMatrix::from_fn(rows.len(), cols.len(), |i, j| {
            self.matrix[(rows[i].mask(), cols[j].mask())]
        });
        RepMatrix {
            flavor: self.flavor,
            matrix,
        }
    }
}

/// `ρ(u)`: column `j` holds `u[e_j]`.
pub fn rho(u: &Versor) -> RepMatrix {
    let images = u.act_on_basis();
    let n = images.len();
    RepMatrix {
        flavor: RepFlavor::Group,
        matrix: DMatrix::from_fn(n, n, |i, j| images[j].coeffs()[i]),
    }
}

/// `dρ(X)`: column `j` holds `X e_j − e_j X`.
pub fn drho(x: &Multivector) -> RepMatrix {
    let alg = x.algebra().clone();
    let n = alg.size();
    let mut matrix = DMatrix::zeros(n, n);
    for j in 0..n {
        let e = Multivector::blade(&alg, Blade(j as u16), 1.0);
        let col = &x.gp(&e).expect("same algebra") - &e.gp(x).expect("same algebra");
        for i in 0..n {
            matrix[(i, j)] = col.coeffs()[i];
        }
    }
    RepMatrix {
        flavor: RepFlavor::Algebra,
        matrix,
    }
}

/// Euclidean basis vector `e_{axis+1}` of a 3D algebra.
pub fn euclidean_axis(alg: &Arc<Algebra>, axis: usize) -> Result<Multivector> {
    alg.require_kind()?;
    Multivector::named(alg, &format!("e{}", axis + 1))
}

/// Lie-algebra and discrete generators of SE(3) or E(3) inside an algebra.
#[derive(Debug, Clone)]
pub struct GeneratorSet {
    pub kind: AlgebraKind,
    pub group: Group,
    pub lie: Vec<Multivector>,
    pub discrete: Vec<Versor>,
}

/// Rotation bivectors `{e12, e23, e13}`, then (PGA) `{e01, e02, e03}` or
/// (CGA) `{∞∧e1, ∞∧e2, ∞∧e3}`; the mirror `e1` is added for E(3).
pub fn generators(alg: &Arc<Algebra>, group: Group) -> Result<GeneratorSet> {
    let kind = alg.require_kind()?;
    let mut lie = Vec::new();
    for name in ["e12", "e23", "e13"] {
        lie.push(Multivector::named(alg, name)?);
    }
    match kind {
        AlgebraKind::Ega => {}
        AlgebraKind::Pga => {
            for name in ["e01", "e02", "e03"] {
                lie.push(Multivector::named(alg, name)?);
            }
        }
        AlgebraKind::Cga => {
            let frame = CgaFrame::new(alg)?;
            for axis in 0..3 {
                lie.push(frame.inf.wedge(&euclidean_axis(alg, axis)?)?);
            }
        }
    }
    let discrete = match group {
        Group::Se3 => Vec::new(),
        Group::E3 => vec![mirror(alg)?],
    };
    Ok(GeneratorSet {
        kind,
        group,
        lie,
        discrete,
    })
}

/// Reflection in the plane through the origin orthogonal to `e1`.
pub fn mirror(alg: &Arc<Algebra>) -> Result<Versor> {
    Versor::reflection(&euclidean_axis(alg, 0)?)
}

/// Rotation about the unit `axis` through the origin by `angle` radians,
/// counter-clockwise when looking down the axis: `exp(−angle/2 · B)` with
/// `B = n1 e23 + n2 e31 + n3 e12`.
pub fn rotor(alg: &Arc<Algebra>, axis: [f64; 3], angle: f64) -> Result<Versor> {
    let norm = axis.iter().map(|a| a * a).sum::<f64>().sqrt();
    if norm == 0.0 || !norm.is_finite() {
        return Err(GaError::InvalidInput("rotation axis must be nonzero".into()));
    }
    let planes = [
        Multivector::named(alg, "e23")?,
        Multivector::named(alg, "e31")?,
        Multivector::named(alg, "e12")?,
    ];
    let b = planes
        .iter()
        .zip(axis)
        .fold(Multivector::zero(alg), |acc, (p, a)| acc + p.scale(a / norm));
    Versor::from_exp(&b.scale(-angle / 2.0))
}

/// Translation by `t`: `exp(−½ Σ t_i e0i)` in the PGA and
/// `exp(½ Σ t_i ∞∧e_i)` in the CGA. The EGA cannot represent translations.
pub fn translator(alg: &Arc<Algebra>, t: [f64; 3]) -> Result<Versor> {
    let (dirs, factor) = match alg.require_kind()? {
        AlgebraKind::Ega => {
            return Err(GaError::Unsupported(
                "the Euclidean algebra has no translations".into(),
            ))
        }
        AlgebraKind::Pga => (
            ["e01", "e02", "e03"]
                .iter()
                .map(|n| Multivector::named(alg, n))
                .collect::<Result<Vec<_>>>()?,
            -0.5,
        ),
        AlgebraKind::Cga => {
            let frame = CgaFrame::new(alg)?;
            (
                (0..3)
                    .map(|i| frame.inf.wedge(&euclidean_axis(alg, i)?))
                    .collect::<Result<Vec<_>>>()?,
                0.5,
            )
        }
    };
    let x = dirs
        .iter()
        .zip(t)
        .fold(Multivector::zero(alg), |acc, (d, ti)| acc + d.scale(factor * ti));
    Versor::from_exp(&x)
}

/// Random group element from a seeded generator; see [`random_group_element_with`].
pub fn random_group_element(alg: &Arc<Algebra>, group: Group, seed: u64) -> Result<Versor> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_group_element_with(alg, group, &mut rng)
}

/// `exp` of a combination of the Lie generators with coefficients uniform in
/// `[-1, 1]`; for E(3) the mirror is composed on with probability 1/2.
pub fn random_group_element_with<R: Rng + ?Sized>(
    alg: &Arc<Algebra>,
    group: Group,
    rng: &mut R,
) -> Result<Versor> {
    let gens = generators(alg, group)?;
    let x = gens
        .lie
        .iter()
        .fold(Multivector::zero(alg), |acc, g| acc + g.scale(rng.random_range(-1.0..=1.0)));
    let u = Versor::from_exp(&x)?;
    match gens.discrete.first() {
        Some(m) if rng.random_bool(0.5) => m.compose(&u),
        _ => Ok(u),
    }
}

/// Representation matrices of one generator on every tensor factor of a
/// multilinear map `V_in1 ⊗ … ⊗ V_inl → V_out`.
#[derive(Debug, Clone)]
pub struct RepPair {
    pub output: RepMatrix,
    pub inputs: Vec<RepMatrix>,
}

/// Constraint matrix on `vec(φ)` (row-major, output index slowest) for one
/// generator:
///
/// * Lie algebra element: `dρ_out ⊗ 1 − 1 ⊗ dρ_inᵀ` where
///   `dρ_in = Σ_j 1 ⊗ … ⊗ dρ_j ⊗ … ⊗ 1`;
/// * group element: `ρ_out ⊗ (⊗_j ρ_j⁻¹)ᵀ − 1`.
pub fn constraint_rows(pair: &RepPair) -> Result<DMatrix<f64>> {
    let flavor = pair.output.flavor;
    if pair.inputs.iter().any(|r| r.flavor != flavor) {
        return Err(GaError::InvalidInput(
            "all factors of a constraint must share one flavor".into(),
        ));
    }
    let in_dims: Vec<usize> = pair.inputs.iter().map(|r| r.matrix.ncols()).collect();
    let n_in: usize = in_dims.iter().product();
    let n_out = pair.output.matrix.nrows();
    match flavor {
        RepFlavor::Algebra => {
            let mut din_t = DMatrix::zeros(n_in, n_in);
            for (j, r) in pair.inputs.iter().enumerate() {
                let mut term = DMatrix::identity(1, 1);
                for (k, dim) in in_dims.iter().enumerate() {
                    term = if k == j {
                        term.kronecker(&r.matrix.transpose())
                    } else {
                        term.kronecker(&DMatrix::identity(*dim, *dim))
                    };
                }
                din_t += term;
            }
            Ok(pair.output.matrix.kronecker(&DMatrix::identity(n_in, n_in))
                - DMatrix::<f64>::identity(n_out, n_out).kronecker(&din_t))
        }
        RepFlavor::Group => {
            let mut acc = pair.output.matrix.clone();
            for r in &pair.inputs {
                let inv = r.matrix.clone().try_inverse().ok_or_else(|| {
                    GaError::InvalidInput("group representation matrix is singular".into())
                })?;
                acc = acc.kronecker(&inv.transpose());
            }
            let k = acc.nrows();
            Ok(acc - DMatrix::identity(k, k))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn mv(alg: &Arc<Algebra>, name: &str) -> Multivector {
        Multivector::named(alg, name).unwrap()
    }

    fn max_abs(m: &DMatrix<f64>) -> f64 {
        m.iter().fold(0.0, |a, b| a.max(b.abs()))
    }

    #[test]
    fn rho_identity_and_reflection_square() {
        let alg = Algebra::pga();
        let id = rho(&Versor::identity(&alg)).matrix;
        assert_eq!(id, DMatrix::identity(16, 16));
        let r = rho(&mirror(&alg).unwrap()).matrix;
        assert!(max_abs(&(&r * &r - DMatrix::identity(16, 16))) < 1e-15);
    }

    #[test]
    fn rho_full_turn_on_vectors() {
        // exp(π e12) is a rotation by 2π under our convention: identity on 1-vectors
        let alg = Algebra::ega();
        let u = Versor::from_exp(&mv(&alg, "e12").scale(PI)).unwrap();
        let r = rho(&u).restrict(&alg, 1, 1).matrix;
        assert!(max_abs(&(r - DMatrix::identity(3, 3))) < 1e-12);
    }

    #[test]
    fn drho_examples() {
        let ega = Algebra::ega();
        assert_eq!(drho(&Multivector::zero(&ega)).matrix, DMatrix::zeros(8, 8));
        let d = drho(&mv(&ega, "e12")).matrix;
        let e1 = ega.parse_blade("e1").unwrap().1.mask();
        let e2 = ega.parse_blade("e2").unwrap().1.mask();
        // e12 e1 − e1 e12 = −2 e2
        assert_eq!(d[(e2, e1)], -2.0);
        assert_eq!(d.column(e1).iter().filter(|c| **c != 0.0).count(), 1);
        let pga = Algebra::pga();
        let d = drho(&mv(&pga, "e01")).matrix;
        assert!(d.column(1).iter().all(|c| *c == 0.0));
    }

    #[test]
    fn generator_sets() {
        let g = generators(&Algebra::ega(), Group::E3).unwrap();
        assert_eq!((g.lie.len(), g.discrete.len()), (3, 1));
        let g = generators(&Algebra::pga(), Group::Se3).unwrap();
        assert_eq!((g.lie.len(), g.discrete.len()), (6, 0));
        let g = generators(&Algebra::cga(), Group::E3).unwrap();
        assert_eq!((g.lie.len(), g.discrete.len()), (6, 1));
        assert!(g.lie.iter().all(|x| x.is_homogeneous(2)));
    }

    #[test]
    fn random_elements_are_deterministic() {
        let alg = Algebra::cga();
        let a = random_group_element(&alg, Group::E3, 7).unwrap();
        let b = random_group_element(&alg, Group::E3, 7).unwrap();
        assert_eq!(a.value(), b.value());
        assert_eq!(a.parity(), b.parity());
    }

    #[test]
    fn translation_fixes_e0() {
        let alg = Algebra::pga();
        let t = translator(&alg, [0.3, -1.2, 2.0]).unwrap();
        let e0 = mv(&alg, "e0");
        assert!((&t.sandwich(&e0).unwrap() - &e0).max_abs() < 1e-15);
        assert!(translator(&Algebra::ega(), [1.0, 0.0, 0.0]).is_err());
    }

    #[test]
    fn constraint_rows_trivial_cases() {
        let alg = Algebra::ega();
        let zero = drho(&Multivector::zero(&alg));
        let pair = RepPair {
            output: zero.clone(),
            inputs: vec![zero],
        };
        assert_eq!(constraint_rows(&pair).unwrap(), DMatrix::zeros(64, 64));
        let id = rho(&Versor::identity(&alg));
        let pair = RepPair {
            output: id.clone(),
            inputs: vec![id.clone(), id],
        };
        assert_eq!(constraint_rows(&pair).unwrap(), DMatrix::zeros(512, 512));
    }

    #[test]
    fn stacked_ega_linear_constraints_have_rank_60() {
        let alg = Algebra::ega();
        let gens = generators(&alg, Group::E3).unwrap();
        let mut blocks: Vec<DMatrix<f64>> = gens
            .lie
            .iter()
            .map(|x| {
                let d = drho(x);
                constraint_rows(&RepPair {
                    output: d.clone(),
                    inputs: vec![d],
                })
                .unwrap()
            })
            .collect();
        let r = rho(&gens.discrete[0]);
        blocks.push(
            constraint_rows(&RepPair {
                output: r.clone(),
                inputs: vec![r],
            })
            .unwrap(),
        );
        let rows: usize = blocks.iter().map(|b| b.nrows()).sum();
        let mut stacked = DMatrix::zeros(rows, 64);
        let mut at = 0;
        for b in &blocks {
            stacked.rows_mut(at, b.nrows()).copy_from(b);
            at += b.nrows();
        }
        let rank = crate::solver::singular_values(&stacked)
            .iter()
            .filter(|s| **s > 1e-9)
            .count();
        assert_eq!(rank, 60);
    }

    #[test]
    fn flavors_cannot_mix() {
        let alg = Algebra::ega();
        let pair = RepPair {
            output: rho(&Versor::identity(&alg)),
            inputs: vec![drho(&mv(&alg, "e12"))],
        };
        assert!(constraint_rows(&pair).is_err());
    }
}
