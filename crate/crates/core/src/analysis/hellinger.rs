use crate::error::{Error, Result};
use crate::model::{density, NuisancePair};
use crate::nuisance_oracle::joint_knots;
use crate::quadrature::Quadrature;

/// Density over `[0,1]^dim × {0, .., labels−1}`.
pub type DensityFn<'a> = &'a (dyn Fn(&[f64], usize) -> f64 + Sync);

/// `½ Σ_label ∫ (√p − √q)²` with nodes cut at `knots`.
pub fn hellinger_general(
    dim: usize,
    knots: &[Vec<f64>],
    labels: usize,
    p: DensityFn<'_>,
    q: DensityFn<'_>,
    quad: &Quadrature,
) -> Result<f64> {
    quad.validate()?;
    let nodes = quad.unit_nodes(dim, knots);
    let mut acc = crate::sum::CompensatedSum::new();
    for (x, wt, _) in nodes.iter() {
        for l in 0..labels {
            let (a, b) = (p(x, l), q(x, l));
            for v in [a, b] {
                if !(v >= 0.0) {
                    return Err(Error::InvalidDensity { point: x.to_vec(), value: v });
                }
            }
            acc.add(wt * (a.sqrt() - b.sqrt()).powi(2));
        }
    }
    Ok(0.5 * acc.value())
}

/// Squared Hellinger distance between the one-sample laws of two nuisance pairs.
pub fn hellinger_single(p: &NuisancePair, q: &NuisancePair, quad: &Quadrature) -> Result<f64> {
    if p.dim() != q.dim() {
        return Err(Error::invalid("densities must share a dimension"));
    }
    let knots = joint_knots(&[&p.m, &p.g0, &p.g1, &q.m, &q.g0, &q.g1]);
    let dens = |pair: &NuisancePair, x: &[f64], l: usize| density(pair, x, (l >> 1) as u8, (l & 1) as u8);
    hellinger_general(p.dim(), &knots, 4, &|x, l| dens(p, x, l), &|x, l| dens(q, x, l), quad)
}

/// `(1 − √(δ(1 − δ/4)))/2`.
pub fn fano_floor(delta: f64) -> Result<f64> {
    if !(0.0..=2.0).contains(&delta) {
        return Err(Error::invalid(format!("delta = {delta} must lie in [0, 2]")));
    }
    Ok(0.5 * (1.0 - (delta * (1.0 - delta / 4.0)).max(0.0).sqrt()))
}
