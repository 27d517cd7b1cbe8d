use rand::Rng;
use serde::Serialize;

use crate::adversary::{cell_sign, PerturbedFamily, RademacherAssignment};
use crate::error::{Error, Result};
use crate::model::{density, density_from, sample_dataset_stream, Dataset};
use crate::rng::{stream_id, stream_rng};

use super::hellinger::fano_floor;
use super::par_map;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DistinguishReport {
    pub n: usize,
    #[serde(rename = "M")]
    pub m: usize,
    pub trials: usize,
    pub errors: usize,
    pub empirical_test_error: f64,
    pub delta: f64,
    pub fano_floor: f64,
}

/// Statistics this close to zero count as "no evidence" and select the center.
const TIE_TOL: f64 = 1e-12;

fn log_mean_exp(a: f64, b: f64) -> f64 {
    let hi = a.max(b);
    hi + (0.5 * ((a - hi).exp() + (b - hi).exp())).ln()
}

/// `log(E_λ Π_i q_λ(z_i) / Π_i p̂(z_i))`, factorized over sign pairs.
pub fn cellwise_log_lr(family: &PerturbedFamily, data: &Dataset) -> f64 {
    let half = family.lambda_len();
    let mut plus = vec![0.0; half];
    let mut minus = vec![0.0; half];
    let mut touched = vec![false; half];
    for i in 0..data.len() {
        let x = data.x(i);
        let (d, y) = (data.d[i], data.y[i]);
        let cell = family.partition.locate(x);
        let j = cell / 2;
        let l = family.local(x);
        let p0 = density_from(l.m, if d == 1 { l.g1 } else { l.g0 }, d, y);
        let s = cell_sign(cell);
        let q = |delta: f64| {
            let [m, g0, g1] = family.point_local(&l, delta);
            density_from(m, if d == 1 { g1 } else { g0 }, d, y)
        };
        plus[j] += (q(s) / p0).ln();
        minus[j] += (q(-s) / p0).ln();
        touched[j] = true;
    }
    (0..half).filter(|&j| touched[j]).map(|j| log_mean_exp(plus[j], minus[j])).sum()
}

/// Same statistic by enumerating every `λ ∈ {±1}^{M/2}`; for checking only.
pub fn brute_force_log_lr(family: &PerturbedFamily, data: &Dataset) -> Result<f64> {
    let half = family.lambda_len();
    if half > 20 {
        return Err(Error::invalid(format!("brute force over 2^{half} sign vectors is too large")));
    }
    let center = &family.center;
    let logs: Vec<f64> = (0..1usize << half)
        .map(|bits| {
            let lambda = RademacherAssignment {
                lambda: (0..half).map(|j| if bits >> j & 1 == 1 { 1 } else { -1 }).collect(),
                seed: 0,
            };
            (0..data.len())
                .map(|i| {
                    let x = data.x(i);
                    let (d, y) = (data.d[i], data.y[i]);
                    let [m, g0, g1] = family.point(x, family.delta(&lambda, x));
                    (density_from(m, if d == 1 { g1 } else { g0 }, d, y) / density(center, x, d, y)).ln()
                })
                .sum()
        })
        .collect();
    let hi = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mean = logs.iter().map(|v| (v - hi).exp()).sum::<f64>() / logs.len() as f64;
    Ok(hi + mean.ln())
}

/// Fair-coin test of `p̂^⊗n` against the mixture `E_λ Q_λ^⊗n`. Trial `t` uses streams
/// `stream_id(t, 0..3)` for the coin, the sample and `λ`.
pub fn distinguishability_experiment(
    family: &PerturbedFamily,
    n: usize,
    trials: usize,
    seed: u64,
    delta: f64,
) -> Result<DistinguishReport> {
    if n == 0 || trials == 0 {
        return Err(Error::invalid("n and trials must be positive"));
    }
    let floor = fano_floor(delta)?;
    let outcomes: Vec<Result<bool>> = par_map(trials, |t| {
        let alt = stream_rng(seed, stream_id(t, 0)).random::<bool>();
        let data_stream = stream_id(t, 1);
        let data = if alt {
            let lambda = family.random_lambda(seed, stream_id(t, 2));
            sample_dataset_stream(&family.pair(&lambda), n, seed, data_stream)
        } else {
            sample_dataset_stream(&family.center, n, seed, data_stream)
        }
        .map_err(|e| Error::Replication { index: t, source: Box::new(e) })?;
        let says_alt = cellwise_log_lr(family, &data) > TIE_TOL;
        Ok(says_alt != alt)
    });
    let mut errors = 0;
    for o in outcomes {
        errors += usize::from(o?);
    }
    Ok(DistinguishReport {
        n,
        m: family.partition.len(),
        trials,
        errors,
        empirical_test_error: errors as f64 / trials as f64,
        delta,
        fano_floor: floor,
    })
}
