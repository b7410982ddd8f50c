use std::sync::OnceLock;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::MvChannels;
use crate::algebra::AlgebraKind;
use crate::error::{GaError, Result};
use crate::solver::closed_form_maps;

/// Weight initialization of an [`EquiLinearParams`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Init {
    /// Independent Gaussian weights on every basis map.
    Kaiming,
    /// Grade projections only, all sharing one Gaussian channel-mixing
    /// weight, so each channel pair acts as a multiple of the identity.
    AlgebraIdentity,
    /// Exact identity on the leading `min(in, out)` channels.
    Identity,
}

impl Init {
    pub fn default_for(kind: AlgebraKind) -> Init {
        match kind {
            AlgebraKind::Cga => Init::AlgebraIdentity,
            _ => Init::Kaiming,
        }
    }
}

/// The E(3)-equivariant basis maps of an algebra, grade projections first.
pub fn basis_maps(kind: AlgebraKind) -> &'static [DMatrix<f64>] {
    static CACHE: [OnceLock<Vec<DMatrix<f64>>>; 3] = [OnceLock::new(), OnceLock::new(), OnceLock::new()];
    let slot = match kind {
        AlgebraKind::Ega => 0,
        AlgebraKind::Pga => 1,
        AlgebraKind::Cga => 2,
    };
    CACHE[slot].get_or_init(|| {
        closed_form_maps(&kind.algebra())
            .expect("closed-form maps of a standard algebra")
            .into_iter()
            .map(|m| m.matrix)
            .collect()
    })
}

/// Weights of an equivariant linear layer.
///
/// `weight[(o * mv_in + i) * B + b]` multiplies basis map `b` from input
/// channel `i` to output channel `o`. Scalars mix densely and couple to the
/// grade-0 parts of the multivector channels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquiLinearParams {
    pub algebra: AlgebraKind,
    pub basis_size: usize,
    pub mv_in: usize,
    pub mv_out: usize,
    pub s_in: usize,
    pub s_out: usize,
    pub weight: Vec<f64>,
    /// `s_out × s_in`.
    pub scalar_weight: Vec<f64>,
    /// `mv_out × s_in`, into grade 0.
    pub scalar_to_mv: Vec<f64>,
    /// `s_out × mv_in`, from grade 0.
    pub mv_to_scalar: Vec<f64>,
}

fn gaussian<R: Rng + ?Sized>(rng: &mut R, len: usize, std: f64) -> Vec<f64> {
    if std == 0.0 || !std.is_finite() {
        return vec![0.0; len];
    }
    let d = Normal::new(0.0, std).expect("positive std");
    (0..len).map(|_| d.sample(rng)).collect()
}

impl EquiLinearParams {
    pub fn new<R: Rng + ?Sized>(
        algebra: AlgebraKind,
        (mv_in, mv_out): (usize, usize),
        (s_in, s_out): (usize, usize),
        init: Init,
        rng: &mut R,
    ) -> Self {
        let maps = basis_maps(algebra);
        let b = maps.len();
        let grades = algebra.algebra().dim() + 1;
        let mut weight = vec![0.0; mv_out * mv_in * b];
        let mut scalar_weight = vec![0.0; s_out * s_in];
        let mut scalar_to_mv = vec![0.0; mv_out * s_in];
        let mut mv_to_scalar = vec![0.0; s_out * mv_in];
        let fan = (mv_in + s_in).max(1) as f64;
        match init {
            Init::Identity => {
                for c in 0..mv_in.min(mv_out) {
                    for k in 0..grades {
                        weight[(c * mv_in + c) * b + k] = 1.0;
                    }
                }
                for c in 0..s_in.min(s_out) {
                    scalar_weight[c * s_in + c] = 1.0;
                }
            }
            Init::Kaiming => {
                // each output grade is reached by about B / grades maps
                let per_grade = b as f64 / grades as f64;
                weight = gaussian(rng, weight.len(), (1.0 / (mv_in.max(1) as f64 * per_grade)).sqrt());
                scalar_weight = gaussian(rng, scalar_weight.len(), (1.0 / fan).sqrt());
                scalar_to_mv = gaussian(rng, scalar_to_mv.len(), (1.0 / fan).sqrt());
                mv_to_scalar = gaussian(rng, mv_to_scalar.len(), (1.0 / fan).sqrt());
            }
            Init::AlgebraIdentity => {
                let mix = gaussian(rng, mv_out * mv_in, (1.0 / mv_in.max(1) as f64).sqrt());
                for (pair, w) in mix.into_iter().enumerate() {
                    for k in 0..grades {
                        weight[pair * b + k] = w;
                    }
                }
                scalar_weight = gaussian(rng, scalar_weight.len(), (1.0 / fan).sqrt());
                scalar_to_mv = gaussian(rng, scalar_to_mv.len(), (1.0 / fan).sqrt());
                mv_to_scalar = gaussian(rng, mv_to_scalar.len(), (1.0 / fan).sqrt());
            }
        }
        Self {
            algebra,
            basis_size: b,
            mv_in,
            mv_out,
            s_in,
            s_out,
            weight,
            scalar_weight,
            scalar_to_mv,
            mv_to_scalar,
        }
    }

    /// Checks sizes against the manifest fields and the algebra's basis.
    pub fn validate(&self) -> Result<()> {
        let b = basis_maps(self.algebra).len();
        if self.basis_size != b {
            return Err(GaError::InvalidInput(format!(
                "basis size {} does not match the {} basis of size {b}",
                self.basis_size, self.algebra
            )));
        }
        let sizes = [
            (self.weight.len(), self.mv_out * self.mv_in * b, "weight"),
            (self.scalar_weight.len(), self.s_out * self.s_in, "scalar_weight"),
            (self.scalar_to_mv.len(), self.mv_out * self.s_in, "scalar_to_mv"),
            (self.mv_to_scalar.len(), self.s_out * self.mv_in, "mv_to_scalar"),
        ];
        for (got, want, name) in sizes {
            if got != want {
                return Err(GaError::InvalidInput(format!("{name} has {got} entries, expected {want}")));
            }
        }
        let all = [&self.weight, &self.scalar_weight, &self.scalar_to_mv, &self.mv_to_scalar];
        if all.iter().any(|v| v.iter().any(|x| !x.is_finite())) {
            return Err(GaError::InvalidInput("non-finite weights".into()));
        }
        Ok(())
    }

    pub fn parameter_count(&self) -> usize {
        self.weight.len() + self.scalar_weight.len() + self.scalar_to_mv.len() + self.mv_to_scalar.len()
    }
}

/// `y_{t,o} = Σ_{i,b} w[o,i,b] M_b(x_{t,i})` plus the scalar blocks.
pub fn equi_linear(params: &EquiLinearParams, x: &MvChannels) -> Result<MvChannels> {
    params.validate()?;
    let kind = x.algebra().require_kind()?;
    if kind != params.algebra {
        return Err(GaError::AlgebraMismatch {
            left: params.algebra.to_string(),
            right: kind.to_string(),
        });
    }
    if x.channels() != params.mv_in || x.scalar_channels() != params.s_in {
        return Err(GaError::InvalidInput(format!(
            "layer expects {}+{} channels, got {}+{}",
            params.mv_in,
            params.s_in,
            x.channels(),
            x.scalar_channels()
        )));
    }
    let maps = basis_maps(kind);
    let b = maps.len();
    let n = x.algebra().size();
    let mut y = MvChannels::zeros(x.algebra(), x.tokens(), params.mv_out, params.s_out);
    let mut images = vec![0.0; params.mv_in * b * n];
    for t in 0..x.tokens() {
        for i in 0..params.mv_in {
            let v = nalgebra::DVectorView::from_slice(x.mv(t, i), n);
            for (k, m) in maps.iter().enumerate() {
                let img = m * v;
                images[(i * b + k) * n..(i * b + k + 1) * n].copy_from_slice(img.as_slice());
            }
        }
        for o in 0..params.mv_out {
            let out = y.mv_mut(t, o);
            for i in 0..params.mv_in {
                for k in 0..b {
                    let w = params.weight[(o * params.mv_in + i) * b + k];
                    if w == 0.0 {
                        continue;
                    }
                    let img = &images[(i * b + k) * n..(i * b + k + 1) * n];
                    out.iter_mut().zip(img).for_each(|(a, v)| *a += w * v);
                }
            }
            out[0] += (0..params.s_in)
                .map(|j| params.scalar_to_mv[o * params.s_in + j] * x.scalars(t)[j])
                .sum::<f64>();
        }
        for so in 0..params.s_out {
            let dense: f64 = (0..params.s_in)
                .map(|j| params.scalar_weight[so * params.s_in + j] * x.scalars(t)[j])
                .sum();
            let from_mv: f64 = (0..params.mv_in)
                .map(|i| params.mv_to_scalar[so * params.mv_in + i] * x.mv(t, i)[0])
                .sum();
            y.scalars_mut(t)[so] = dense + from_mv;
        }
    }
    Ok(y)
}
