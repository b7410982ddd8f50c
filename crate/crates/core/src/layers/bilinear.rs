use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{equi_linear, EquiLinearParams, Init, MvChannels};
use crate::algebra::{gp_into, join_into, AlgebraKind};
use crate::error::{GaError, Result};

/// Output projection of a bilinear layer. With the join, the projection sees
/// the `C` geometric products followed by the `C` joins.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BilinearParams {
    pub use_join: bool,
    pub proj: EquiLinearParams,
}

impl BilinearParams {
    pub fn new<R: Rng + ?Sized>(
        algebra: AlgebraKind,
        channels: usize,
        scalars: usize,
        use_join: bool,
        init: Init,
        rng: &mut R,
    ) -> Result<Self> {
        if use_join && algebra != AlgebraKind::Pga {
            return Err(GaError::NotProjective(format!("no join in the {algebra}")));
        }
        let mv_in = if use_join { 2 * channels } else { channels };
        Ok(Self {
            use_join,
            proj: EquiLinearParams::new(algebra, (mv_in, channels), (scalars, scalars), init, rng),
        })
    }
}

/// Mean pseudoscalar coefficient over all tokens and channels. It flips sign
/// under mirrors exactly like the join, so their product is E(3)-equivariant.
pub fn pseudoscalar_reference(x: &MvChannels) -> f64 {
    let top = x.algebra().size() - 1;
    let count = x.tokens() * x.channels();
    if count == 0 {
        return 0.0;
    }
    let sum: f64 = (0..x.tokens())
        .flat_map(|t| (0..x.channels()).map(move |c| (t, c)))
        .map(|(t, c)| x.mv(t, c)[top])
        .sum();
    sum / count as f64
}

/// Channelwise `x_c y_c` (and `ref · (x_c ∨ y_c)` with the join, `ref` from
/// [`pseudoscalar_reference`] of `x`), then the projection. Scalar channels
/// are multiplied elementwise before projecting.
pub fn geometric_bilinear(params: &BilinearParams, x: &MvChannels, y: &MvChannels) -> Result<MvChannels> {
    geometric_bilinear_with_reference(params, x, y, pseudoscalar_reference(x))
}

pub fn geometric_bilinear_with_reference(
    params: &BilinearParams,
    x: &MvChannels,
    y: &MvChannels,
    reference: f64,
) -> Result<MvChannels> {
    x.same_shape(y)?;
    let alg = x.algebra();
    let join_table = if params.use_join {
        Some(alg.join_table().ok_or_else(|| GaError::NotProjective(alg.signature().to_string()))?)
    } else {
        None
    };
    let c = x.channels();
    let width = if params.use_join { 2 * c } else { c };
    let mut z = MvChannels::zeros(alg, x.tokens(), width, x.scalar_channels());
    for t in 0..x.tokens() {
        for ch in 0..c {
            gp_into(alg, x.mv(t, ch), y.mv(t, ch), z.mv_mut(t, ch));
            if let Some(table) = join_table {
                let out = z.mv_mut(t, c + ch);
                join_into(alg.dim(), table, x.mv(t, ch), y.mv(t, ch), out);
                out.iter_mut().for_each(|v| *v *= reference);
            }
        }
        let prod: Vec<f64> = x.scalars(t).iter().zip(y.scalars(t)).map(|(a, b)| a * b).collect();
        z.scalars_mut(t).copy_from_slice(&prod);
    }
    equi_linear(&params.proj, &z)
}

#[cfg(test)]
mod tests {
    use super::super::testutil::random_channels;
    use super::*;
    use crate::algebra::{Algebra, Multivector};
    use crate::group::{random_group_element, Group};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn unit_left_factor_projects_the_right() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for kind in [AlgebraKind::Ega, AlgebraKind::Cga] {
            let alg = kind.algebra();
            let p = BilinearParams::new(kind, 2, 1, false, Init::Kaiming, &mut rng).unwrap();
            let y = random_channels(&alg, 3, 2, 1, 8);
            let mut one = MvChannels::zeros(&alg, 3, 2, 1);
            for t in 0..3 {
                for c in 0..2 {
                    one.mv_mut(t, c)[0] = 1.0;
                }
                one.scalars_mut(t)[0] = 1.0;
            }
            let got = geometric_bilinear(&p, &one, &y).unwrap();
            let want = equi_linear(&p.proj, &y).unwrap();
            assert!(MvChannels::rel_error(&got, &want).unwrap() < 1e-15);
        }
    }

    #[test]
    fn join_of_pseudoscalar_and_one_is_scalar() {
        let alg = Algebra::pga();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let p = BilinearParams::new(AlgebraKind::Pga, 1, 0, true, Init::Identity, &mut rng).unwrap();
        let x = MvChannels::from_tokens(&alg, &[vec![Multivector::named(&alg, "e0123").unwrap()]], &[vec![]]).unwrap();
        let y = MvChannels::from_tokens(&alg, &[vec![Multivector::scalar(&alg, 1.0)]], &[vec![]]).unwrap();
        // identity projection keeps the product channel; read the join channel directly
        let mut only_join = p.clone();
        only_join.proj.weight.iter_mut().for_each(|w| *w = 0.0);
        only_join.proj.weight[9] = 1.0; // input channel 1, grade-0 projection
        let got = geometric_bilinear(&only_join, &x, &y).unwrap().get(0, 0);
        assert_eq!(got, Multivector::scalar(&alg, 1.0));
        assert!(BilinearParams::new(AlgebraKind::Cga, 1, 0, true, Init::Identity, &mut rng).is_err());
    }

    #[test]
    fn bilinear_layers_are_equivariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for (kind, join) in [
            (AlgebraKind::Ega, false),
            (AlgebraKind::Pga, false),
            (AlgebraKind::Pga, true),
            (AlgebraKind::Cga, false),
        ] {
            let alg = kind.algebra();
            let p = BilinearParams::new(kind, 2, 2, join, Init::Kaiming, &mut rng).unwrap();
            let x = random_channels(&alg, 2, 2, 2, 11);
            let y = random_channels(&alg, 2, 2, 2, 12);
            for seed in 0..20 {
                let g = random_group_element(&alg, Group::E3, seed).unwrap();
                let a = geometric_bilinear(&p, &x.act(&g).unwrap(), &y.act(&g).unwrap()).unwrap();
                let b = geometric_bilinear(&p, &x, &y).unwrap().act(&g).unwrap();
                let err = MvChannels::rel_error(&a, &b).unwrap();
                assert!(err < 1e-10, "{kind} join={join}: {err}");
            }
        }
    }
}
