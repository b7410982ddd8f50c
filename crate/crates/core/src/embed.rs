//! Points and planes in the three algebras, and point-set IO.

use std::fs::File;
use std::io::{BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::algebra::{Algebra, AlgebraKind, Blade, CgaFrame, Multivector};
use crate::error::{GaError, Result};

/// Relative size of the homogeneous normalizer below which a representative
/// is treated as a point at infinity.
const INFINITY_TOL: f64 = 1e-12;
const UNIT_NORMAL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    pub const ORIGIN: Point3 = Point3 {
        x: 0.0,
        y: 0.0,
        z: 0.0,
    };

    pub fn new(x: f64, y: f64, z: f64) -> Result<Self> {
        let p = Self { x, y, z };
        if !p.is_finite() {
            return Err(GaError::InvalidInput(format!("non-finite point {p:?}")));
        }
        Ok(p)
    }

    pub fn from_array(a: [f64; 3]) -> Result<Self> {
        Self::new(a[0], a[1], a[2])
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn scale(self, s: f64) -> Point3 {
        Point3 {
            x: self.x * s,
            y: self.y * s,
            z: self.z * s,
        }
    }

    pub fn dot(self, o: Point3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    pub fn distance_sq(self, o: Point3) -> f64 {
        (self - o).norm_sq()
    }
}

impl std::ops::Add for Point3 {
    type Output = Point3;

    fn add(self, o: Point3) -> Point3 {
        Point3 {
            x: self.x + o.x,
            y: self.y + o.y,
            z: self.z + o.z,
        }
    }
}

impl std::ops::Sub for Point3 {
    type Output = Point3;

    fn sub(self, o: Point3) -> Point3 {
        Point3 {
            x: self.x - o.x,
            y: self.y - o.y,
            z: self.z - o.z,
        }
    }
}

/// Plane `{x : n·x = offset}` with unit normal `n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Plane3 {
    normal: [f64; 3],
    offset: f64,
}

impl Plane3 {
    pub fn new(normal: [f64; 3], offset: f64) -> Result<Self> {
        let n2: f64 = normal.iter().map(|c| c * c).sum();
        if (n2.sqrt() - 1.0).abs() > UNIT_NORMAL_TOL || !offset.is_finite() {
            return Err(GaError::InvalidInput(format!(
                "plane needs a unit normal and finite offset, got |n| = {}",
                n2.sqrt()
            )));
        }
        Ok(Self { normal, offset })
    }

    pub fn normal(&self) -> [f64; 3] {
        self.normal
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    /// Mirror image of `p`: `p − 2(n·p − δ) n`.
    pub fn reflect(&self, p: Point3) -> Point3 {
        let n = Point3 {
            x: self.normal[0],
            y: self.normal[1],
            z: self.normal[2],
        };
        p - n.scale(2.0 * (n.dot(p) - self.offset))
    }
}

fn vector(alg: &std::sync::Arc<Algebra>, v: [f64; 3]) -> Multivector {
    let mut m = Multivector::zero(alg);
    for (i, c) in v.into_iter().enumerate() {
        m.set(euclidean_blade(alg, &[i]), c);
    }
    m
}

/// Storage blade for a set of Euclidean generators `e1..e3` (0-based).
fn euclidean_blade(alg: &Algebra, axes: &[usize]) -> Blade {
    let shift = usize::from(alg.is_projective());
    Blade::from_generators(&axes.iter().map(|a| a + shift).collect::<Vec<_>>())
}

/// `p − center` as a 1-vector of the EGA.
pub fn embed_point_ega(p: Point3, center: Point3) -> Multivector {
    vector(&Algebra::ega(), (p - center).to_array())
}

/// Trivector `x e032 + y e013 + z e021 + e123`, stored as
/// `−x e023 + y e013 − z e012 + e123`.
pub fn embed_point_pga(p: Point3) -> Multivector {
    let alg = Algebra::pga();
    let mut m = Multivector::zero(&alg);
    m.set(Blade::from_generators(&[0, 2, 3]), -p.x);
    m.set(Blade::from_generators(&[0, 1, 3]), p.y);
    m.set(Blade::from_generators(&[0, 1, 2]), -p.z);
    m.set(Blade::from_generators(&[1, 2, 3]), 1.0);
    m
}

/// Null 1-vector `o + p + ‖p‖² ∞ / 2`.
pub fn embed_point_cga(p: Point3) -> Multivector {
    let frame = CgaFrame::standard();
    let alg = frame.inf.algebra().clone();
    let v = vector(&alg, p.to_array());
    &(&frame.origin + &v) + &frame.inf.scale(0.5 * p.norm_sq())
}

fn require(m: &Multivector, kind: AlgebraKind) -> Result<()> {
    let got = m.algebra().require_kind()?;
    if got != kind {
        return Err(GaError::AlgebraMismatch {
            left: got.to_string(),
            right: kind.to_string(),
        });
    }
    Ok(())
}

fn point(c: [f64; 3]) -> Result<Point3> {
    Point3::from_array(c)
}

/// Grade-1 Euclidean part of an EGA multivector.
pub fn extract_point_ega(m: &Multivector) -> Result<Point3> {
    require(m, AlgebraKind::Ega)?;
    let alg = m.algebra();
    point([0, 1, 2].map(|i| m.get(euclidean_blade(alg, &[i]))))
}

/// Inverse of [`embed_point_pga`] for any nonzero multiple of the embedding.
pub fn extract_point_pga(m: &Multivector) -> Result<Point3> {
    require(m, AlgebraKind::Pga)?;
    let w = m.get(Blade::from_generators(&[1, 2, 3]));
    if w.abs() <= INFINITY_TOL * m.coeff_norm() || w == 0.0 {
        return Err(GaError::PointAtInfinity(w));
    }
    point([
        -m.get(Blade::from_generators(&[0, 2, 3])) / w,
        m.get(Blade::from_generators(&[0, 1, 3])) / w,
        -m.get(Blade::from_generators(&[0, 1, 2])) / w,
    ])
}

/// Inverse of [`embed_point_cga`], normalizing the `o` coefficient
/// `−<m, ∞>` to one.
pub fn extract_point_cga(m: &Multivector) -> Result<Point3> {
    require(m, AlgebraKind::Cga)?;
    let frame = CgaFrame::standard();
    let w = -m.inner(&frame.inf)?;
    if w.abs() <= INFINITY_TOL * m.coeff_norm() || w == 0.0 {
        return Err(GaError::PointAtInfinity(w));
    }
    let alg = m.algebra();
    point([0, 1, 2].map(|i| m.get(euclidean_blade(alg, &[i])) / w))
}

/// Embed a point into the algebra of `kind`; `center` is only used by the EGA.
pub fn embed_point(kind: AlgebraKind, p: Point3, center: Point3) -> Multivector {
    match kind {
        AlgebraKind::Ega => embed_point_ega(p, center),
        AlgebraKind::Pga => embed_point_pga(p),
        AlgebraKind::Cga => embed_point_cga(p),
    }
}

/// Inverse of [`embed_point`]; the EGA result is shifted back by `center`.
pub fn extract_point(m: &Multivector, center: Point3) -> Result<Point3> {
    match m.algebra().require_kind()? {
        AlgebraKind::Ega => Ok(extract_point_ega(m)? + center),
        AlgebraKind::Pga => extract_point_pga(m),
        AlgebraKind::Cga => extract_point_cga(m),
    }
}

/// `n − δ e0`.
pub fn embed_plane_pga(pl: &Plane3) -> Multivector {
    let alg = Algebra::pga();
    let mut m = vector(&alg, pl.normal);
    m.set(Blade::from_generators(&[0]), -pl.offset);
    m
}

/// `n + δ ∞`, the plane `n·x = δ` under `<o, ∞> = −1`.
pub fn embed_plane_cga(pl: &Plane3) -> Multivector {
    let frame = CgaFrame::standard();
    let alg = frame.inf.algebra().clone();
    &vector(&alg, pl.normal) + &frame.inf.scale(pl.offset)
}

/// CGA point of the same location as a PGA point; the PGA representative is
/// normalized first, so the output is always the canonical embedding.
pub fn pga_point_to_cga_point(m: &Multivector) -> Result<Multivector> {
    Ok(embed_point_cga(extract_point_pga(m)?))
}

/// Division-free variant of [`pga_point_to_cga_point`] on the grade-3 part
/// `w e123 + …` of any PGA multivector: `w² o + w x + ‖x‖²/2 ∞`, i.e. the CGA
/// point scaled by `w²`. Quadratic, so the sign flip of oriented points
/// under mirrors cancels; points at infinity map to `‖x‖²/2 ∞`.
pub fn pga_to_cga_homogeneous(m: &Multivector) -> Result<Multivector> {
    require(m, AlgebraKind::Pga)?;
    let w = m.get(Blade::from_generators(&[1, 2, 3]));
    let x = [
        -m.get(Blade::from_generators(&[0, 2, 3])),
        m.get(Blade::from_generators(&[0, 1, 3])),
        -m.get(Blade::from_generators(&[0, 1, 2])),
    ];
    let frame = CgaFrame::standard();
    let alg = frame.inf.algebra().clone();
    let x2: f64 = x.iter().map(|c| c * c).sum();
    let v = vector(&alg, x.map(|c| c * w));
    Ok(&(&frame.origin.scale(w * w) + &v) + &frame.inf.scale(0.5 * x2))
}

/// Points from a CSV file (`x,y,z` per row, optional header) or a JSON array
/// of `[x, y, z]` triples, chosen by extension.
pub fn read_points(path: &Path) -> Result<Vec<Point3>> {
    let is_json = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("json"));
    let raw: Vec<[f64; 3]> = if is_json {
        serde_json::from_reader(BufReader::new(File::open(path)?))?
    } else {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_path(path)?;
        let mut out = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let parsed: std::result::Result<Vec<f64>, _> =
                rec.iter().map(|f| f.parse::<f64>()).collect();
            match parsed {
                Ok(v) if v.len() == 3 => out.push([v[0], v[1], v[2]]),
                Err(_) if i == 0 => continue,
                _ => {
                    return Err(GaError::InvalidInput(format!(
                        "row {} of {} is not an x,y,z triple",
                        i + 1,
                        path.display()
                    )))
                }
            }
        }
        out
    };
    raw.into_iter().map(Point3::from_array).collect()
}

pub fn write_points_csv<W: Write>(out: W, points: &[Point3]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["x", "y", "z"])?;
    for p in points {
        w.serialize(p.to_array())?;
    }
    w.flush()?;
    Ok(())
}
