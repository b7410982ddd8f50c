use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::MvChannels;
use crate::algebra::{inner_coeffs, AlgebraKind, Blade, Multivector};
use crate::embed::pga_to_cga_homogeneous;
use crate::error::{GaError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttnKind {
    PlainInner,
    EgaDistance,
    CgaInner,
    IpPgaToCga,
}

impl AttnKind {
    /// Algebra the kind is defined for; `None` when any algebra works.
    pub fn algebra(self) -> Option<AlgebraKind> {
        match self {
            AttnKind::PlainInner => None,
            AttnKind::EgaDistance => Some(AlgebraKind::Ega),
            AttnKind::CgaInner => Some(AlgebraKind::Cga),
            AttnKind::IpPgaToCga => Some(AlgebraKind::Pga),
        }
    }
}

impl std::fmt::Display for AttnKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            AttnKind::PlainInner => "plain_inner",
            AttnKind::EgaDistance => "ega_distance",
            AttnKind::CgaInner => "cga_inner",
            AttnKind::IpPgaToCga => "ip_pga_to_cga",
        })
    }
}

impl std::str::FromStr for AttnKind {
    type Err = GaError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "plain_inner" | "plain" => Ok(AttnKind::PlainInner),
            "ega_distance" => Ok(AttnKind::EgaDistance),
            "cga_inner" => Ok(AttnKind::CgaInner),
            "ip_pga_to_cga" => Ok(AttnKind::IpPgaToCga),
            other => Err(GaError::InvalidInput(format!("unknown attention variant {other:?}"))),
        }
    }
}

/// Logit kind plus the channels holding points. Point channels contribute
/// only through the distance construction of `ega_distance` and
/// `ip_pga_to_cga`; the other kinds take no point channels.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttnVariant {
    pub kind: AttnKind,
    #[serde(default)]
    pub point_channels: Vec<usize>,
}

impl AttnVariant {
    pub fn new(kind: AttnKind, point_channels: Vec<usize>) -> Result<Self> {
        let uses_points = matches!(kind, AttnKind::EgaDistance | AttnKind::IpPgaToCga);
        if !uses_points && !point_channels.is_empty() {
            return Err(GaError::InvalidInput(format!("{kind} takes no point channels")));
        }
        Ok(Self { kind, point_channels })
    }

    pub fn plain() -> Self {
        Self {
            kind: AttnKind::PlainInner,
            point_channels: Vec::new(),
        }
    }

    pub fn check(&self, algebra: AlgebraKind) -> Result<()> {
        match self.kind.algebra() {
            Some(a) if a != algebra => Err(GaError::Unsupported(format!(
                "{} attention needs the {a}, got the {algebra}",
                self.kind
            ))),
            _ => Ok(()),
        }
    }
}

fn grade_one_vector(m: &[f64]) -> [f64; 3] {
    [m[Blade(1).mask()], m[Blade(2).mask()], m[Blade(4).mask()]]
}

/// Query/key features of one token for the distance constructions.
enum Feature {
    /// `(‖x‖², x)`; the logit term is `−‖q‖² + 2 q·k − ‖k‖²`.
    Ega(f64, [f64; 3]),
    Cga(Multivector),
}

fn point_features(variant: &AttnVariant, x: &MvChannels, t: usize) -> Result<Vec<Feature>> {
    variant
        .point_channels
        .iter()
        .map(|&c| match variant.kind {
            AttnKind::EgaDistance => {
                let v = grade_one_vector(x.mv(t, c));
                Ok(Feature::Ega(v.iter().map(|a| a * a).sum(), v))
            }
            _ => Ok(Feature::Cga(pga_to_cga_homogeneous(&x.get(t, c))?)),
        })
        .collect()
}

/// Raw invariant logits `T_q × T_k`, before the [`logit_scale`] factor:
/// `Σ_c <q_c, k_c>` over ordinary channels, the scalar dot product, and the
/// distance construction on point channels.
pub fn attn_logits(variant: &AttnVariant, q: &MvChannels, k: &MvChannels) -> Result<DMatrix<f64>> {
    q.same_algebra(k)?;
    variant.check(q.algebra().require_kind()?)?;
    if q.channels() != k.channels() || q.scalar_channels() != k.scalar_channels() {
        return Err(GaError::InvalidInput("queries and keys need the same channels".into()));
    }
    if let Some(&c) = variant.point_channels.iter().find(|&&c| c >= q.channels()) {
        return Err(GaError::InvalidInput(format!("point channel {c} out of range")));
    }
    let alg = q.algebra();
    let plain: Vec<usize> = (0..q.channels()).filter(|c| !variant.point_channels.contains(c)).collect();
    let qf = (0..q.tokens()).map(|t| point_features(variant, q, t)).collect::<Result<Vec<_>>>()?;
    let kf = (0..k.tokens()).map(|t| point_features(variant, k, t)).collect::<Result<Vec<_>>>()?;
    let mut out = DMatrix::zeros(q.tokens(), k.tokens());
    for i in 0..q.tokens() {
        for j in 0..k.tokens() {
            let mut l: f64 = plain.iter().map(|&c| inner_coeffs(alg, q.mv(i, c), k.mv(j, c))).sum();
            l += q.scalars(i).iter().zip(k.scalars(j)).map(|(a, b)| a * b).sum::<f64>();
            for (a, b) in qf[i].iter().zip(&kf[j]) {
                l += match (a, b) {
                    (Feature::Ega(qq, qv), Feature::Ega(kk, kv)) => {
                        let dot: f64 = qv.iter().zip(kv).map(|(x, y)| x * y).sum();
                        // (‖q‖², 2q, 1) · (−1, k, −‖k‖²)
                        -qq + 2.0 * dot - kk
                    }
                    (Feature::Cga(a), Feature::Cga(b)) => a.inner(b)?,
                    _ => unreachable!("features share one kind"),
                };
            }
            out[(i, j)] = l;
        }
    }
    Ok(out)
}

/// `1/√(C·n + S)`, with `n` the number of blades that have a nonzero square,
/// i.e. the dimension the inner product sees.
pub fn logit_scale(x: &MvChannels) -> f64 {
    let alg = x.algebra();
    let n = (0..alg.size()).filter(|&b| alg.product(Blade(b as u16), Blade(b as u16)).sign != 0).count();
    let dim = x.channels() * n + x.scalar_channels();
    1.0 / (dim.max(1) as f64).sqrt()
}

/// Row-softmax of the scaled logits.
pub fn attention_weights(variant: &AttnVariant, q: &MvChannels, k: &MvChannels) -> Result<DMatrix<f64>> {
    let mut w = attn_logits(variant, q, k)? * logit_scale(q);
    for mut row in w.row_iter_mut() {
        let m = row.max();
        row.iter_mut().for_each(|v| *v = (*v - m).exp());
        let s = row.sum();
        row /= s;
    }
    Ok(w)
}

/// `out_i = Σ_j softmax_j(logit_ij) v_j` on every channel.
pub fn attention(variant: &AttnVariant, q: &MvChannels, k: &MvChannels, v: &MvChannels) -> Result<MvChannels> {
    k.same_algebra(v)?;
    if k.tokens() != v.tokens() {
        return Err(GaError::InvalidInput("keys and values need the same tokens".into()));
    }
    let w = attention_weights(variant, q, k)?;
    let mut out = MvChannels::zeros(v.algebra(), q.tokens(), v.channels(), v.scalar_channels());
    for i in 0..q.tokens() {
        for j in 0..v.tokens() {
            let a = w[(i, j)];
            for c in 0..v.channels() {
                out.mv_mut(i, c).iter_mut().zip(v.mv(j, c)).for_each(|(o, x)| *o += a * x);
            }
            out.scalars_mut(i).iter_mut().zip(v.scalars(j)).for_each(|(o, x)| *o += a * x);
        }
    }
    Ok(out)
}
