//! Quantile risk, rate fitting, Hellinger distances and the distinguishability experiment.

mod distinguish;
mod hellinger;
mod risk;

pub use distinguish::{
    brute_force_log_lr, cellwise_log_lr, distinguishability_experiment, DistinguishReport,
};
pub use hellinger::{fano_floor, hellinger_general, hellinger_single, DensityFn};
pub use risk::{
    estimate, fit_loglog, order_statistic, quantile_risk, rate_sweep, shifted_truth_scenario, EstimatorTag,
    PowerLaw, QuantileRisk, RiskReport, RiskRow, Scenario,
};

/// Maps `f` over `0..len` in index order, in parallel when the `parallel` feature is on.
pub(crate) fn par_map<T: Send>(len: usize, f: impl Fn(usize) -> T + Sync + Send) -> Vec<T> {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..len).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..len).map(f).collect()
    }
}
