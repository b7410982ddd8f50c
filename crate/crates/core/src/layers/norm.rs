use serde::{Deserialize, Serialize};

use super::MvChannels;
use crate::algebra::{inner_coeffs, AlgebraKind, Blade};
use crate::error::{GaError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormVariant {
    /// `(1/C) Σ_c <x_c, x_c>`.
    Plain,
    /// `(1/C) Σ_c |<x_c, x_c>|`.
    Abs,
    /// `(1/C) Σ_c Σ_k |<<x_c>_k, <x_c>_k>|`.
    PerGradeAbs,
}

impl std::fmt::Display for NormVariant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            NormVariant::Plain => "plain",
            NormVariant::Abs => "abs",
            NormVariant::PerGradeAbs => "per_grade_abs",
        })
    }
}

impl std::str::FromStr for NormVariant {
    type Err = GaError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "plain" => Ok(NormVariant::Plain),
            "abs" => Ok(NormVariant::Abs),
            "per_grade_abs" => Ok(NormVariant::PerGradeAbs),
            other => Err(GaError::InvalidInput(format!("unknown norm variant {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormConfig {
    pub variant: NormVariant,
    pub epsilon: f64,
}

impl NormConfig {
    /// Any variant with `epsilon > 0`, without checking it against an algebra.
    pub fn new(variant: NormVariant, epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(GaError::InvalidInput(format!("epsilon must be positive, got {epsilon}")));
        }
        Ok(Self { variant, epsilon })
    }

    /// As [`NormConfig::new`], rejecting the plain variant for the CGA, whose
    /// null vectors make it blow up.
    pub fn for_algebra(kind: AlgebraKind, variant: NormVariant, epsilon: f64) -> Result<Self> {
        let cfg = Self::new(variant, epsilon)?;
        cfg.check(kind)?;
        Ok(cfg)
    }

    pub fn check(&self, kind: AlgebraKind) -> Result<()> {
        if kind == AlgebraKind::Cga && self.variant == NormVariant::Plain {
            return Err(GaError::Unsupported(
                "plain normalization is unstable in the CGA; use per_grade_abs".into(),
            ));
        }
        Ok(())
    }

    pub fn default_for(kind: AlgebraKind) -> Self {
        match kind {
            AlgebraKind::Ega => Self::new(NormVariant::Plain, 1e-6),
            AlgebraKind::Pga => Self::new(NormVariant::Plain, 0.01),
            AlgebraKind::Cga => Self::new(NormVariant::PerGradeAbs, 0.01),
        }
        .expect("positive epsilon")
    }
}

/// Denominator `sqrt(mean + ε)` of token `t`. A negative plain mean is
/// clamped at zero, so the denominator never drops below `√ε`.
pub fn norm_denominator(cfg: &NormConfig, x: &MvChannels, t: usize) -> f64 {
    let alg = x.algebra();
    let c = x.channels();
    if c == 0 {
        return cfg.epsilon.sqrt();
    }
    let total: f64 = (0..c)
        .map(|ch| {
            let m = x.mv(t, ch);
            match cfg.variant {
                NormVariant::Plain => inner_coeffs(alg, m, m),
                NormVariant::Abs => inner_coeffs(alg, m, m).abs(),
                NormVariant::PerGradeAbs => (0..=alg.dim())
                    .map(|k| {
                        let g: Vec<f64> = m
                            .iter()
                            .enumerate()
                            .map(|(b, v)| if Blade(b as u16).grade() == k { *v } else { 0.0 })
                            .collect();
                        inner_coeffs(alg, &g, &g).abs()
                    })
                    .sum(),
            }
        })
        .sum();
    (total / c as f64 + cfg.epsilon).max(cfg.epsilon).sqrt()
}

/// Each token's multivector channels divided by [`norm_denominator`]; scalar
/// channels by their own RMS with the same ε.
pub fn equi_norm(cfg: &NormConfig, x: &MvChannels) -> MvChannels {
    let mut out = x.clone();
    for t in 0..x.tokens() {
        let d = norm_denominator(cfg, x, t);
        for c in 0..x.channels() {
            out.mv_mut(t, c).iter_mut().for_each(|v| *v /= d);
        }
        let s = x.scalar_channels();
        if s > 0 {
            let ms: f64 = x.scalars(t).iter().map(|v| v * v).sum::<f64>() / s as f64;
            let ds = (ms + cfg.epsilon).sqrt();
            out.scalars_mut(t).iter_mut().for_each(|v| *v /= ds);
        }
    }
    out
}
