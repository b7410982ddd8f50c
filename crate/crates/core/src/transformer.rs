//! Forward-only E/P/iP/C transformer models over point sets.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::algebra::{AlgebraKind, Multivector, Versor};
use crate::embed::{embed_point, extract_point, Point3};
use crate::error::{GaError, Result};
use crate::layers::{
    attention, equi_linear, equi_norm, gated_nonlinearity, geometric_bilinear, AttnKind, AttnVariant,
    BilinearParams, EquiLinearParams, Init, MvChannels, NormConfig,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Variant {
    E,
    P,
    #[serde(rename = "iP")]
    IP,
    C,
}

impl Variant {
    pub const ALL: [Variant; 4] = [Variant::E, Variant::P, Variant::IP, Variant::C];

    pub fn algebra(self) -> AlgebraKind {
        match self {
            Variant::E => AlgebraKind::Ega,
            Variant::P | Variant::IP => AlgebraKind::Pga,
            Variant::C => AlgebraKind::Cga,
        }
    }

    pub fn uses_join(self) -> bool {
        self == Variant::IP
    }

    pub fn default_attention(self) -> AttnVariant {
        let v = match self {
            Variant::E => AttnVariant::new(AttnKind::EgaDistance, vec![0]),
            Variant::P => Ok(AttnVariant::plain()),
            Variant::IP => AttnVariant::new(AttnKind::IpPgaToCga, vec![0]),
            Variant::C => AttnVariant::new(AttnKind::CgaInner, vec![]),
        };
        v.expect("valid default attention")
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Variant::E => "E",
            Variant::P => "P",
            Variant::IP => "iP",
            Variant::C => "C",
        })
    }
}

impl std::str::FromStr for Variant {
    type Err = GaError;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim_end_matches("-GATr").trim_end_matches("-gatr");
        match t.to_ascii_lowercase().as_str() {
            "e" => Ok(Variant::E),
            "p" => Ok(Variant::P),
            "ip" => Ok(Variant::IP),
            "c" => Ok(Variant::C),
            _ => Err(GaError::InvalidInput(format!("unknown model variant {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub algebra: AlgebraKind,
    pub variant: Variant,
    pub blocks: usize,
    pub mv_channels: usize,
    pub scalar_channels: usize,
    pub heads: usize,
    pub norm: NormConfig,
    pub attention: AttnVariant,
    /// Initialization of every linear layer; `None` picks the algebra default.
    #[serde(default)]
    pub init: Option<Init>,
    #[serde(default)]
    pub input_scalars: usize,
    #[serde(default = "one")]
    pub output_scalars: usize,
    pub seed: u64,
}

fn one() -> usize {
    1
}

impl ModelConfig {
    /// 4 blocks, 8 multivector and 16 scalar channels, 2 heads.
    pub fn default_for(variant: Variant) -> Self {
        let algebra = variant.algebra();
        Self {
            algebra,
            variant,
            blocks: 4,
            mv_channels: 8,
            scalar_channels: 16,
            heads: 2,
            norm: NormConfig::default_for(algebra),
            attention: variant.default_attention(),
            init: None,
            input_scalars: 0,
            output_scalars: 1,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.algebra != self.variant.algebra() {
            return Err(GaError::InvalidInput(format!(
                "{}-GATr runs on the {}, not the {}",
                self.variant,
                self.variant.algebra(),
                self.algebra
            )));
        }
        if self.mv_channels == 0 || self.scalar_channels == 0 || self.heads == 0 {
            return Err(GaError::InvalidInput("channel and head counts must be at least 1".into()));
        }
        if self.variant == Variant::IP && self.attention.kind != AttnKind::IpPgaToCga {
            return Err(GaError::InvalidInput("iP-GATr uses ip_pga_to_cga attention".into()));
        }
        if let Some(&c) = self.attention.point_channels.iter().find(|&&c| c >= self.mv_channels) {
            return Err(GaError::InvalidInput(format!("point channel {c} out of range")));
        }
        self.norm.check(self.algebra)?;
        self.attention.check(self.algebra)
    }

    fn init(&self) -> Init {
        self.init.unwrap_or_else(|| Init::default_for(self.algebra))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Head {
    pub q: EquiLinearParams,
    pub k: EquiLinearParams,
    pub v: EquiLinearParams,
}

/// `x + attn(norm x)`, then `x + mlp(norm x)` with
/// `mlp = out ∘ gate ∘ bilinear(left, right)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Block {
    pub heads: Vec<Head>,
    pub attn_out: EquiLinearParams,
    pub left: EquiLinearParams,
    pub right: EquiLinearParams,
    pub bilinear: BilinearParams,
    pub mlp_out: EquiLinearParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Model {
    pub config: ModelConfig,
    /// One point channel plus the input scalars to the working width.
    pub embed: EquiLinearParams,
    pub blocks: Vec<Block>,
    /// Working width to one point channel plus the scalar heads.
    pub readout: EquiLinearParams,
}

/// Parameters drawn from a generator seeded with `cfg.seed`.
pub fn build_model(cfg: &ModelConfig) -> Result<Model> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (kind, c, s, init) = (cfg.algebra, cfg.mv_channels, cfg.scalar_channels, cfg.init());
    let square = |rng: &mut ChaCha8Rng| EquiLinearParams::new(kind, (c, c), (s, s), init, rng);
    let embed = EquiLinearParams::new(kind, (1, c), (cfg.input_scalars, s), init, &mut rng);
    let mut blocks = Vec::with_capacity(cfg.blocks);
    for _ in 0..cfg.blocks {
        let heads = (0..cfg.heads)
            .map(|_| Head {
                q: square(&mut rng),
                k: square(&mut rng),
                v: square(&mut rng),
            })
            .collect();
        let attn_out = EquiLinearParams::new(kind, (cfg.heads * c, c), (cfg.heads * s, s), init, &mut rng);
        let left = square(&mut rng);
        let right = square(&mut rng);
        let bilinear = BilinearParams::new(kind, c, s, cfg.variant.uses_join(), init, &mut rng)?;
        let mlp_out = square(&mut rng);
        blocks.push(Block {
            heads,
            attn_out,
            left,
            right,
            bilinear,
            mlp_out,
        });
    }
    let readout = EquiLinearParams::new(kind, (c, 1), (s, cfg.output_scalars), init, &mut rng);
    Ok(Model {
        config: cfg.clone(),
        embed,
        blocks,
        readout,
    })
}

/// Input point set with optional per-token scalars and, for the EGA, the
/// point positions are measured from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenBatch {
    pub points: Vec<Point3>,
    #[serde(default)]
    pub scalars: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub center: Option<Point3>,
}

impl TokenBatch {
    pub fn new(points: Vec<Point3>) -> Self {
        Self {
            points,
            scalars: None,
            center: None,
        }
    }

    /// Batch centered on the unit-mass center of its points.
    pub fn centered(points: Vec<Point3>) -> Result<Self> {
        let c = center_of_mass(&points, None)?;
        Ok(Self {
            center: Some(c),
            ..Self::new(points)
        })
    }

    /// Point map applied to every token, keeping scalars and center.
    pub fn map_points(&self, f: impl Fn(Point3) -> Result<Point3>) -> Result<Self> {
        Ok(Self {
            points: self.points.iter().map(|p| f(*p)).collect::<Result<_>>()?,
            ..self.clone()
        })
    }
}

#[derive(Debug, Clone)]
pub struct ModelOutput {
    pub points: Vec<Point3>,
    pub scalars: Vec<Vec<f64>>,
    /// Readout channels before point extraction.
    pub raw: MvChannels,
}

/// Mass-weighted mean; unit masses when `masses` is `None`.
pub fn center_of_mass(points: &[Point3], masses: Option<&[f64]>) -> Result<Point3> {
    if points.is_empty() {
        return Err(GaError::InvalidInput("center of mass of no points".into()));
    }
    let unit = vec![1.0; points.len()];
    let m = masses.unwrap_or(&unit);
    if m.len() != points.len() {
        return Err(GaError::InvalidInput("one mass per point".into()));
    }
    let total: f64 = m.iter().sum();
    if total <= 0.0 || !total.is_finite() {
        return Err(GaError::InvalidInput(format!("total mass must be positive, got {total}")));
    }
    let sum = points.iter().zip(m).fold(Point3::ORIGIN, |acc, (p, w)| acc + p.scale(*w));
    Ok(sum.scale(1.0 / total))
}

impl Model {
    fn center(&self, batch: &TokenBatch) -> Result<Point3> {
        match (self.config.variant, batch.center) {
            (Variant::E, None) => Err(GaError::InvalidInput("E-GATr needs a centering point".into())),
            (_, c) => Ok(c.unwrap_or(Point3::ORIGIN)),
        }
    }

    /// Embedded input channels of a batch.
    pub fn embed_batch(&self, batch: &TokenBatch) -> Result<MvChannels> {
        if batch.points.is_empty() {
            return Err(GaError::InvalidInput("a batch needs at least one token".into()));
        }
        let center = self.center(batch)?;
        let alg = self.config.algebra.algebra();
        let s = self.config.input_scalars;
        let scalars = match &batch.scalars {
            Some(rows) if rows.len() == batch.points.len() && rows.iter().all(|r| r.len() == s) => rows.clone(),
            Some(_) => {
                return Err(GaError::InvalidInput(format!("expected {s} scalars for each token")));
            }
            None => vec![vec![0.0; s]; batch.points.len()],
        };
        let mvs: Vec<Vec<Multivector>> = batch
            .points
            .iter()
            .map(|p| vec![embed_point(self.config.algebra, *p, center)])
            .collect();
        MvChannels::from_tokens(&alg, &mvs, &scalars)
    }

    fn block(&self, b: &Block, x: &MvChannels) -> Result<MvChannels> {
        let cfg = &self.config;
        let h = equi_norm(&cfg.norm, x);
        let mut heads: Option<MvChannels> = None;
        for head in &b.heads {
            let q = equi_linear(&head.q, &h)?;
            let k = equi_linear(&head.k, &h)?;
            let v = equi_linear(&head.v, &h)?;
            let a = attention(&cfg.attention, &q, &k, &v)?;
            heads = Some(match heads {
                None => a,
                Some(prev) => prev.concat_channels(&a)?,
            });
        }
        let attn = equi_linear(&b.attn_out, &heads.expect("at least one head"))?;
        let x = x.add(&attn)?;
        let h = equi_norm(&cfg.norm, &x);
        let l = equi_linear(&b.left, &h)?;
        let r = equi_linear(&b.right, &h)?;
        let z = gated_nonlinearity(&geometric_bilinear(&b.bilinear, &l, &r)?);
        x.add(&equi_linear(&b.mlp_out, &z)?)
    }

    /// Embedding through readout on raw channels; the trace holds the largest
    /// multivector coefficient after the embedding and after every block.
    pub fn forward_channels(&self, x: &MvChannels) -> Result<(MvChannels, Vec<f64>)> {
        let mut h = equi_linear(&self.embed, x)?;
        let mut trace = vec![h.max_abs()];
        for b in &self.blocks {
            h = self.block(b, &h)?;
            trace.push(h.max_abs());
        }
        Ok((equi_linear(&self.readout, &h)?, trace))
    }
}

pub fn forward(model: &Model, batch: &TokenBatch) -> Result<ModelOutput> {
    let x = model.embed_batch(batch)?;
    forward_embedded(model, &x, model.center(batch)?)
}

/// [`forward`] from already embedded channels; `center` is added back to EGA
/// outputs.
pub fn forward_embedded(model: &Model, x: &MvChannels, center: Point3) -> Result<ModelOutput> {
    let (raw, _) = model.forward_channels(x)?;
    let points = (0..raw.tokens())
        .map(|t| {
            extract_point(&raw.get(t, 0), center).map_err(|e| match e {
                GaError::PointAtInfinity(_) => GaError::TokenAtInfinity { token: t },
                other => other,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let scalars = (0..raw.tokens()).map(|t| raw.scalars(t).to_vec()).collect();
    Ok(ModelOutput { points, scalars, raw })
}

/// Action of `g` on a point: through the embedding for the PGA and CGA,
/// about `center` for the EGA.
pub fn act_on_point(g: &Versor, p: Point3, center: Point3) -> Result<Point3> {
    let kind = g.algebra().require_kind()?;
    let c = if kind == AlgebraKind::Ega { center } else { Point3::ORIGIN };
    extract_point(&g.sandwich(&embed_point(kind, p, c))?, c)
}

fn output_error(a: &ModelOutput, b_points: &[Point3], b_scalars: &[Vec<f64>]) -> f64 {
    let mut diff = 0.0;
    let mut norm = 0.0;
    for (p, q) in a.points.iter().zip(b_points) {
        diff += p.distance_sq(*q);
        norm += q.norm_sq();
    }
    for (r, s) in a.scalars.iter().zip(b_scalars) {
        for (x, y) in r.iter().zip(s) {
            diff += (x - y).powi(2);
            norm += y * y;
        }
    }
    diff.sqrt() / norm.sqrt().max(1e-300)
}

/// Relative discrepancy between `forward(g·batch)` and `g·forward(batch)`
/// over output points and scalars. `g` acts on the embedded inputs, so PGA
/// points keep the orientation flip a mirror gives them; EGA inputs are
/// measured from the batch center and so turn about it.
pub fn equivariance_error(model: &Model, batch: &TokenBatch, g: &Versor) -> Result<f64> {
    let kind = g.algebra().require_kind()?;
    if kind != model.config.algebra {
        return Err(GaError::AlgebraMismatch {
            left: kind.to_string(),
            right: model.config.algebra.to_string(),
        });
    }
    let center = model.center(batch)?;
    let x = model.embed_batch(batch)?;
    let out_moved = forward_embedded(model, &x.act(g)?, center)?;
    let out = forward_embedded(model, &x, center)?;
    let expected = out
        .points
        .iter()
        .map(|p| act_on_point(g, *p, center))
        .collect::<Result<Vec<_>>>()?;
    Ok(output_error(&out_moved, &expected, &out.scalars))
}

/// As [`equivariance_error`] for a translation by `t`. With `recenter` the
/// EGA center moves along with the points; without it, it stays put.
pub fn translation_error(model: &Model, batch: &TokenBatch, t: [f64; 3], recenter: bool) -> Result<f64> {
    let shift = Point3::from_array(t)?;
    let mut moved = batch.map_points(|p| Ok(p + shift))?;
    if recenter {
        moved.center = batch.center.map(|c| c + shift);
    }
    let out_moved = forward(model, &moved)?;
    let out = forward(model, batch)?;
    let expected: Vec<Point3> = out.points.iter().map(|p| *p + shift).collect();
    Ok(output_error(&out_moved, &expected, &out.scalars))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::{mirror, random_group_element, Group};
    use rand::Rng;

    fn random_points(n: usize, seed: u64) -> Vec<Point3> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| Point3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)).unwrap())
            .collect()
    }

    fn small(variant: Variant) -> ModelConfig {
        ModelConfig {
            blocks: 2,
            mv_channels: 3,
            scalar_channels: 2,
            ..ModelConfig::default_for(variant)
        }
    }

    #[test]
    fn config_consistency() {
        for v in Variant::ALL {
            ModelConfig::default_for(v).validate().unwrap();
            assert_eq!(v.to_string().parse::<Variant>().unwrap(), v);
        }
        let mut bad = ModelConfig::default_for(Variant::IP);
        bad.attention = AttnVariant::plain();
        assert!(bad.validate().is_err());
        let mut bad = ModelConfig::default_for(Variant::C);
        bad.algebra = AlgebraKind::Pga;
        assert!(bad.validate().is_err());
        let mut bad = ModelConfig::default_for(Variant::P);
        bad.heads = 0;
        assert!(bad.validate().is_err());
    }

    #[test]
    fn same_seed_same_parameters() {
        let cfg = small(Variant::C);
        assert_eq!(build_model(&cfg).unwrap(), build_model(&cfg).unwrap());
        let other = ModelConfig { seed: 1, ..cfg.clone() };
        assert_ne!(build_model(&other).unwrap(), build_model(&cfg).unwrap());
        let json = serde_json::to_string(&build_model(&cfg).unwrap()).unwrap();
        let back: Model = serde_json::from_str(&json).unwrap();
        assert_eq!(back, build_model(&cfg).unwrap());
    }

    #[test]
    fn ip_model_uses_the_join() {
        let m = build_model(&small(Variant::IP)).unwrap();
        assert!(m.blocks.iter().all(|b| b.bilinear.use_join));
        assert_eq!(m.config.attention.kind, AttnKind::IpPgaToCga);
    }

    #[test]
    fn zero_block_identity_model_returns_its_input() {
        let pts = random_points(5, 3);
        for v in Variant::ALL {
            let cfg = ModelConfig {
                blocks: 0,
                init: Some(Init::Identity),
                ..ModelConfig::default_for(v)
            };
            let m = build_model(&cfg).unwrap();
            let out = forward(&m, &TokenBatch::centered(pts.clone()).unwrap()).unwrap();
            for (a, b) in out.points.iter().zip(&pts) {
                assert!(a.distance_sq(*b) < 1e-24, "{v}");
            }
        }
    }

    #[test]
    fn single_token_attention_passes_values() {
        let cfg = small(Variant::P);
        let m = build_model(&cfg).unwrap();
        let x = m.embed_batch(&TokenBatch::new(random_points(1, 0))).unwrap();
        let h = equi_linear(&m.embed, &x).unwrap();
        let head = &m.blocks[0].heads[0];
        let v = equi_linear(&head.v, &h).unwrap();
        let a = attention(&cfg.attention, &equi_linear(&head.q, &h).unwrap(), &equi_linear(&head.k, &h).unwrap(), &v).unwrap();
        assert!(MvChannels::rel_error(&a, &v).unwrap() < 1e-15);
    }

    #[test]
    fn outputs_respond_to_inputs() {
        let pts = random_points(4, 5);
        for v in Variant::ALL {
            let m = build_model(&small(v)).unwrap();
            let base = TokenBatch::centered(pts.clone()).unwrap();
            let mut nudged = base.clone();
            nudged.points[1].x += 1e-4;
            let a = forward(&m, &base).unwrap();
            let b = forward(&m, &nudged).unwrap();
            assert!(a.points.iter().all(|p| p.is_finite()));
            let d: f64 = a.points.iter().zip(&b.points).map(|(p, q)| p.distance_sq(*q)).sum();
            assert!(d > 0.0, "{v}");
        }
    }

    #[test]
    fn models_are_equivariant() {
        let pts = random_points(5, 7);
        for v in Variant::ALL {
            let m = build_model(&small(v)).unwrap();
            let alg = v.algebra().algebra();
            let batch = TokenBatch::centered(pts.clone()).unwrap();
            assert!(equivariance_error(&m, &batch, &Versor::identity(&alg)).unwrap() < 1e-15);
            for seed in 0..5 {
                let g = random_group_element(&alg, Group::E3, seed).unwrap();
                let err = equivariance_error(&m, &batch, &g).unwrap();
                assert!(err < 1e-9, "{v} seed {seed}: {err}");
            }
            let err = equivariance_error(&m, &batch, &mirror(&alg).unwrap()).unwrap();
            assert!(err < 1e-9, "{v} mirror: {err}");
        }
    }

    #[test]
    fn ega_model_needs_recentering_under_translation() {
        let m = build_model(&small(Variant::E)).unwrap();
        let batch = TokenBatch::centered(random_points(5, 8)).unwrap();
        assert!(translation_error(&m, &batch, [0.5, -1.0, 2.0], true).unwrap() < 1e-12);
        assert!(translation_error(&m, &batch, [0.5, -1.0, 2.0], false).unwrap() > 1e-3);
        assert!(forward(&m, &TokenBatch::new(random_points(2, 0))).is_err());
    }

    #[test]
    fn token_permutation_permutes_outputs() {
        let pts = random_points(4, 9);
        let perm = [2, 0, 3, 1];
        for v in Variant::ALL {
            let m = build_model(&small(v)).unwrap();
            let a = forward(&m, &TokenBatch::centered(pts.clone()).unwrap()).unwrap();
            let b = forward(&m, &TokenBatch::centered(perm.iter().map(|&i| pts[i]).collect()).unwrap()).unwrap();
            for (i, &p) in perm.iter().enumerate() {
                assert!(b.points[i].distance_sq(a.points[p]) < 1e-20, "{v}");
            }
        }
    }

    #[test]
    fn center_of_mass_cases() {
        let p = Point3::new(1.0, 2.0, 3.0).unwrap();
        assert_eq!(center_of_mass(&[p], None).unwrap(), p);
        let q = Point3::new(3.0, 0.0, -1.0).unwrap();
        assert_eq!(center_of_mass(&[p, q], None).unwrap(), Point3::new(2.0, 1.0, 1.0).unwrap());
        assert_eq!(center_of_mass(&[p, q], Some(&[3.0, 1.0])).unwrap(), Point3::new(1.5, 1.5, 2.0).unwrap());
        assert!(center_of_mass(&[], None).is_err());
    }

    #[test]
    fn mirror_flips_raw_pga_outputs() {
        let batch = TokenBatch::new(random_points(4, 10));
        for v in [Variant::P, Variant::IP] {
            let m = build_model(&small(v)).unwrap();
            let g = mirror(&v.algebra().algebra()).unwrap();
            let x = m.embed_batch(&batch).unwrap();
            let (raw, _) = m.forward_channels(&x).unwrap();
            let (raw_g, _) = m.forward_channels(&x.act(&g).unwrap()).unwrap();
            assert!(MvChannels::rel_error(&raw_g, &raw.act(&g).unwrap()).unwrap() < 1e-12);
            let e123 = crate::Blade::from_generators(&[1, 2, 3]).mask();
            for t in 0..4 {
                assert!((raw_g.mv(t, 0)[e123] + raw.mv(t, 0)[e123]).abs() < 1e-12, "{v}");
            }
        }
    }

    #[test]
    fn deep_cga_stack_stays_bounded() {
        let cfg = ModelConfig {
            blocks: 20,
            mv_channels: 4,
            scalar_channels: 4,
            heads: 1,
            ..ModelConfig::default_for(Variant::C)
        };
        let m = build_model(&cfg).unwrap();
        let x = m.embed_batch(&TokenBatch::new(random_points(6, 11))).unwrap();
        let (_, trace) = m.forward_channels(&x).unwrap();
        assert_eq!(trace.len(), 21);
        assert!(trace.iter().all(|v| *v < 1e3), "{trace:?}");
    }
}
