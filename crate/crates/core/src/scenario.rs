//! Bundled centers and weights used by the CLI, the demo and the test suites.

use std::f64::consts::PI;

use crate::error::Result;
use crate::func::Func;
use crate::model::NuisancePair;

/// Piecewise-constant K = 1 center on a 2^6-cell grid with values in [0.15, 0.85], c = 0.1.
pub fn grid_center() -> Result<NuisancePair> {
    let res = 64;
    let t = |i: usize| (i as f64 + 0.5) / res as f64;
    let m = (0..res).map(|i| 0.5 + 0.3 * (2.0 * PI * t(i)).sin()).collect();
    let g0 = (0..res).map(|i| 0.35 + 0.2 * (3.0 * PI * t(i)).cos()).collect();
    let g1 = (0..res).map(|i| 0.6 + 0.25 * (5.0 * PI * t(i) + 0.3).sin()).collect();
    NuisancePair::new(Func::grid(1, res, m), Func::grid(1, res, g0), Func::grid(1, res, g1), 0.1)
}

/// Piecewise-constant weight on 2^3 cells with values in [0.4, 1.2].
pub fn grid_weight() -> Func {
    Func::grid(1, 8, vec![0.4, 0.7, 1.2, 1.0, 0.5, 0.9, 1.1, 0.6])
}

/// Constant center with every nuisance equal to `v`.
pub fn flat_center(dim: usize, v: f64, c: f64) -> Result<NuisancePair> {
    NuisancePair::constant(dim, v, v, v, c)
}

/// Smooth K-dimensional center, bounded in [0.2, 0.8].
pub fn smooth_center(dim: usize) -> Result<NuisancePair> {
    let m = Func::new(dim, |x| 0.5 + 0.25 * (2.0 * PI * x.iter().sum::<f64>() / x.len() as f64).sin());
    let g0 = Func::new(dim, |x| 0.4 + 0.2 * x[0] - 0.1 * x[x.len() - 1]);
    let g1 = Func::new(dim, |x| 0.55 + 0.2 * (PI * x[0]).cos() * 0.5 + 0.1 * x[x.len() - 1]);
    NuisancePair::new(m, g0, g1, 0.1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::Quadrature;

    #[test]
    fn grid_center_is_bounded() {
        let c = grid_center().unwrap();
        assert!(c.is_bounded(&Quadrature::default_for(1)));
        for x in [0.0, 0.3, 0.77, 1.0] {
            for v in [c.m.eval(&[x]), c.g0.eval(&[x]), c.g1.eval(&[x])] {
                assert!((0.15..=0.85).contains(&v));
            }
        }
    }

    #[test]
    fn smooth_center_is_bounded() {
        for dim in 1..=3 {
            assert!(smooth_center(dim).unwrap().is_bounded(&Quadrature::default_for(dim)));
        }
    }
}
