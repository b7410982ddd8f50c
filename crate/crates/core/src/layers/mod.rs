//! Equivariant building blocks acting on token sequences of multivector
//! channels with auxiliary scalar channels.

use std::sync::Arc;

use crate::algebra::{Algebra, Multivector, Versor};
use crate::error::{GaError, Result};
use crate::group::rho;

mod attention;
mod bilinear;
mod linear;
mod norm;

pub use attention::{attention, attention_weights, attn_logits, logit_scale, AttnKind, AttnVariant};
pub use bilinear::{geometric_bilinear, geometric_bilinear_with_reference, pseudoscalar_reference, BilinearParams};
pub use linear::{basis_maps, equi_linear, EquiLinearParams, Init};
pub use norm::{equi_norm, norm_denominator, NormConfig, NormVariant};

/// `T × C` multivectors plus `T × S` scalars, stored densely by token.
#[derive(Debug, Clone)]
pub struct MvChannels {
    algebra: Arc<Algebra>,
    tokens: usize,
    channels: usize,
    scalars: usize,
    mv: Vec<f64>,
    s: Vec<f64>,
}

impl MvChannels {
    pub fn zeros(alg: &Arc<Algebra>, tokens: usize, channels: usize, scalars: usize) -> Self {
        Self {
            algebra: alg.clone(),
            tokens,
            channels,
            scalars,
            mv: vec![0.0; tokens * channels * alg.size()],
            s: vec![0.0; tokens * scalars],
        }
    }

    /// From raw coefficient buffers laid out token-major.
    pub fn from_raw(
        alg: &Arc<Algebra>,
        tokens: usize,
        channels: usize,
        scalars: usize,
        mv: Vec<f64>,
        s: Vec<f64>,
    ) -> Result<Self> {
        if mv.len() != tokens * channels * alg.size() || s.len() != tokens * scalars {
            return Err(GaError::InvalidInput(format!(
                "buffer sizes {} / {} do not fit {tokens} tokens × {channels} channels × {scalars} scalars",
                mv.len(),
                s.len()
            )));
        }
        let out = Self {
            algebra: alg.clone(),
            tokens,
            channels,
            scalars,
            mv,
            s,
        };
        if !out.is_finite() {
            return Err(GaError::InvalidInput("non-finite channel entries".into()));
        }
        Ok(out)
    }

    /// One row of multivectors and one row of scalars per token.
    pub fn from_tokens(
        alg: &Arc<Algebra>,
        mvs: &[Vec<Multivector>],
        scalars: &[Vec<f64>],
    ) -> Result<Self> {
        let tokens = mvs.len();
        let channels = mvs.first().map_or(0, Vec::len);
        let s = scalars.first().map_or(0, Vec::len);
        if scalars.len() != tokens
            || mvs.iter().any(|r| r.len() != channels)
            || scalars.iter().any(|r| r.len() != s)
        {
            return Err(GaError::InvalidInput("ragged token rows".into()));
        }
        let mut mv = Vec::with_capacity(tokens * channels * alg.size());
        for m in mvs.iter().flatten() {
            if m.algebra().signature() != alg.signature() {
                return Err(GaError::AlgebraMismatch {
                    left: m.algebra().signature().to_string(),
                    right: alg.signature().to_string(),
                });
            }
            mv.extend_from_slice(m.coeffs());
        }
        Self::from_raw(alg, tokens, channels, s, mv, scalars.concat())
    }

    pub fn algebra(&self) -> &Arc<Algebra> {
        &self.algebra
    }

    pub fn tokens(&self) -> usize {
        self.tokens
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn scalar_channels(&self) -> usize {
        self.scalars
    }

    fn offset(&self, t: usize, c: usize) -> usize {
        (t * self.channels + c) * self.algebra.size()
    }

    pub fn mv(&self, t: usize, c: usize) -> &[f64] {
        let o = self.offset(t, c);
        &self.mv[o..o + self.algebra.size()]
    }

    pub fn mv_mut(&mut self, t: usize, c: usize) -> &mut [f64] {
        let o = self.offset(t, c);
        let n = self.algebra.size();
        &mut self.mv[o..o + n]
    }

    pub fn scalars(&self, t: usize) -> &[f64] {
        &self.s[t * self.scalars..(t + 1) * self.scalars]
    }

    pub fn scalars_mut(&mut self, t: usize) -> &mut [f64] {
        let s = self.scalars;
        &mut self.s[t * s..(t + 1) * s]
    }

    pub fn get(&self, t: usize, c: usize) -> Multivector {
        Multivector::from_coeffs(&self.algebra, self.mv(t, c).to_vec()).expect("sized by the algebra")
    }

    pub fn set(&mut self, t: usize, c: usize, m: &Multivector) {
        self.mv_mut(t, c).copy_from_slice(m.coeffs());
    }

    pub fn mv_data(&self) -> &[f64] {
        &self.mv
    }

    pub fn scalar_data(&self) -> &[f64] {
        &self.s
    }

    pub fn is_finite(&self) -> bool {
        self.mv.iter().chain(&self.s).all(|v| v.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.mv.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub(crate) fn same_shape(&self, other: &MvChannels) -> Result<()> {
        self.same_algebra(other)?;
        if (self.tokens, self.channels, self.scalars) != (other.tokens, other.channels, other.scalars) {
            return Err(GaError::InvalidInput(format!(
                "shape mismatch: {}×{}+{} vs {}×{}+{}",
                self.tokens, self.channels, self.scalars, other.tokens, other.channels, other.scalars
            )));
        }
        Ok(())
    }

    pub(crate) fn same_algebra(&self, other: &MvChannels) -> Result<()> {
        if self.algebra.signature() != other.algebra.signature() {
            return Err(GaError::AlgebraMismatch {
                left: self.algebra.signature().to_string(),
                right: other.algebra.signature().to_string(),
            });
        }
        Ok(())
    }

    /// Tokenwise action `u[x]` on every multivector channel; scalars are
    /// invariant.
    pub fn act(&self, u: &Versor) -> Result<MvChannels> {
        if u.algebra().signature() != self.algebra.signature() {
            return Err(GaError::AlgebraMismatch {
                left: u.algebra().signature().to_string(),
                right: self.algebra.signature().to_string(),
            });
        }
        let r = rho(u).matrix;
        let n = self.algebra.size();
        let mut out = self.clone();
        for (src, dst) in self.mv.chunks(n).zip(out.mv.chunks_mut(n)) {
            for (i, d) in dst.iter_mut().enumerate() {
                *d = (0..n).map(|j| r[(i, j)] * src[j]).sum();
            }
        }
        Ok(out)
    }

    /// Elementwise sum, as used by residual connections.
    pub fn add(&self, other: &MvChannels) -> Result<MvChannels> {
        self.same_shape(other)?;
        let mut out = self.clone();
        out.mv.iter_mut().zip(&other.mv).for_each(|(a, b)| *a += b);
        out.s.iter_mut().zip(&other.s).for_each(|(a, b)| *a += b);
        Ok(out)
    }

    /// Channels of `self` followed by those of `other`, token by token.
    pub fn concat_channels(&self, other: &MvChannels) -> Result<MvChannels> {
        self.same_algebra(other)?;
        if self.tokens != other.tokens {
            return Err(GaError::InvalidInput("token counts differ".into()));
        }
        let n = self.algebra.size();
        let mut mv = Vec::with_capacity(self.mv.len() + other.mv.len());
        let mut s = Vec::with_capacity(self.s.len() + other.s.len());
        for t in 0..self.tokens {
            mv.extend_from_slice(&self.mv[t * self.channels * n..(t + 1) * self.channels * n]);
            mv.extend_from_slice(&other.mv[t * other.channels * n..(t + 1) * other.channels * n]);
            s.extend_from_slice(self.scalars(t));
            s.extend_from_slice(other.scalars(t));
        }
        Ok(MvChannels {
            algebra: self.algebra.clone(),
            tokens: self.tokens,
            channels: self.channels + other.channels,
            scalars: self.scalars + other.scalars,
            mv,
            s,
        })
    }

    /// Token `i` of the result is token `perm[i]` of `self`.
    pub fn permute_tokens(&self, perm: &[usize]) -> Result<MvChannels> {
        let mut seen = vec![false; self.tokens];
        if perm.len() != self.tokens || perm.iter().any(|&p| p >= self.tokens || std::mem::replace(&mut seen[p], true)) {
            return Err(GaError::InvalidInput("not a permutation of the tokens".into()));
        }
        let mut out = MvChannels::zeros(&self.algebra, self.tokens, self.channels, self.scalars);
        let block = self.channels * self.algebra.size();
        for (i, &p) in perm.iter().enumerate() {
            out.mv[i * block..(i + 1) * block].copy_from_slice(&self.mv[p * block..(p + 1) * block]);
            out.scalars_mut(i).copy_from_slice(self.scalars(p));
        }
        Ok(out)
    }

    /// `‖a − b‖ / max(‖b‖, 1e-300)` over all entries.
    pub fn rel_error(a: &MvChannels, b: &MvChannels) -> Result<f64> {
        a.same_shape(b)?;
        let diff: f64 = a.mv.iter().zip(&b.mv).chain(a.s.iter().zip(&b.s)).map(|(x, y)| (x - y).powi(2)).sum();
        let norm: f64 = b.mv.iter().chain(&b.s).map(|y| y * y).sum();
        Ok(diff.sqrt() / norm.sqrt().max(1e-300))
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// GELU, tanh approximation.
fn gelu(x: f64) -> f64 {
    const C: f64 = 0.797_884_560_802_865_4; // sqrt(2/π)
    0.5 * x * (1.0 + (C * (x + 0.044_715 * x * x * x)).tanh())
}

/// Each multivector channel times `sigmoid(<x>_0)`; scalar channels through
/// GELU.
pub fn gated_nonlinearity(x: &MvChannels) -> MvChannels {
    let mut out = x.clone();
    for t in 0..x.tokens {
        for c in 0..x.channels {
            let m = out.mv_mut(t, c);
            let g = sigmoid(m[0]);
            m.iter_mut().for_each(|v| *v *= g);
        }
        out.scalars_mut(t).iter_mut().for_each(|v| *v = gelu(*v));
    }
    out
}

#[cfg(test)]
pub(crate) mod testutil {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    pub fn random_channels(alg: &Arc<Algebra>, t: usize, c: usize, s: usize, seed: u64) -> MvChannels {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mv = (0..t * c * alg.size()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let sc = (0..t * s).map(|_| rng.random_range(-1.0..1.0)).collect();
        MvChannels::from_raw(alg, t, c, s, mv, sc).unwrap()
    }
}

#[cfg(test)]
mod tests {
    use super::testutil::random_channels;
    use super::*;
    use crate::group::{random_group_element, Group};

    #[test]
    fn gate_halves_channels_with_zero_scalar_part() {
        let alg = Algebra::pga();
        let mut x = random_channels(&alg, 2, 3, 1, 1);
        x.mv_mut(1, 2)[0] = 0.0;
        let y = gated_nonlinearity(&x);
        for (a, b) in y.mv(1, 2).iter().zip(x.mv(1, 2)) {
            assert!((a - 0.5 * b).abs() < 1e-15);
        }
    }

    #[test]
    fn gate_is_monotone_in_the_scalar_part() {
        let alg = Algebra::ega();
        let mut x = random_channels(&alg, 1, 1, 0, 2);
        x.mv_mut(0, 0)[0] = 0.0;
        x.mv_mut(0, 0)[1] = 1.0;
        let mut last = f64::NEG_INFINITY;
        for i in -20..=20 {
            x.mv_mut(0, 0)[0] = i as f64 * 0.25;
            let v = gated_nonlinearity(&x).mv(0, 0)[1];
            assert!(v > last);
            last = v;
        }
    }

    #[test]
    fn gate_is_equivariant() {
        for alg in [Algebra::ega(), Algebra::pga(), Algebra::cga()] {
            let x = random_channels(&alg, 3, 2, 2, 3);
            for seed in 0..20 {
                let g = random_group_element(&alg, Group::E3, seed).unwrap();
                let a = gated_nonlinearity(&x.act(&g).unwrap());
                let b = gated_nonlinearity(&x).act(&g).unwrap();
                assert!(MvChannels::rel_error(&a, &b).unwrap() < 1e-10);
            }
        }
    }

    #[test]
    fn permutation_and_concat() {
        let alg = Algebra::ega();
        let x = random_channels(&alg, 3, 2, 1, 4);
        let p = x.permute_tokens(&[2, 0, 1]).unwrap();
        assert_eq!(p.mv(0, 1), x.mv(2, 1));
        assert_eq!(p.scalars(1), x.scalars(0));
        assert!(x.permute_tokens(&[0, 0, 1]).is_err());
        let c = x.concat_channels(&p).unwrap();
        assert_eq!((c.channels(), c.scalar_channels()), (4, 2));
        assert_eq!(c.mv(1, 3), p.mv(1, 1));
    }
}
