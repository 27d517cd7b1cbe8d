use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{dr_att, dr_wate, plug_in_att, plug_in_wate};
use crate::func::Func;
use crate::model::{sample_dataset_stream, true_att, true_wate, Dataset, NuisancePair};
use crate::nuisance_oracle::{lp_norm, synthesize_estimates, Direction, ErrorBudget};
use crate::quadrature::Quadrature;
use crate::rng::stream_id;

use super::par_map;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EstimatorTag {
    PlugInWate,
    DrWate,
    PlugInAtt,
    DrAtt,
}

impl EstimatorTag {
    pub const ALL: [EstimatorTag; 4] = [Self::PlugInWate, Self::DrWate, Self::PlugInAtt, Self::DrAtt];

    pub fn is_att(self) -> bool {
        matches!(self, Self::PlugInAtt | Self::DrAtt)
    }
}

impl fmt::Display for EstimatorTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::PlugInWate => "plug_in_wate",
            Self::DrWate => "dr_wate",
            Self::PlugInAtt => "plug_in_att",
            Self::DrAtt => "dr_att",
        })
    }
}

impl FromStr for EstimatorTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|t| t.to_string() == s)
            .ok_or_else(|| Error::invalid(format!("unknown estimator `{s}`")))
    }
}

/// True law, fixed nuisance estimates and the targets they are scored against.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub truth: NuisancePair,
    pub hat: NuisancePair,
    pub w: Func,
    pub theta_wate: f64,
    pub theta_att: f64,
}

impl Scenario {
    pub fn new(truth: NuisancePair, hat: NuisancePair, w: Func, quad: &Quadrature) -> Result<Self> {
        let theta_wate = true_wate(&truth, &w, quad)?;
        let theta_att = true_att(&truth, quad)?;
        Ok(Scenario {
            truth,
            hat,
            w,
            theta_wate,
            theta_att,
        })
    }

    pub fn target(&self, tag: EstimatorTag) -> f64 {
        if tag.is_att() {
            self.theta_att
        } else {
            self.theta_wate
        }
    }
}

pub fn estimate(tag: EstimatorTag, data: &Dataset, hat: &NuisancePair, w: &Func) -> Result<f64> {
    Ok(match tag {
        EstimatorTag::PlugInWate => plug_in_wate(data, hat, w)?,
        EstimatorTag::DrWate => dr_wate(data, hat, w)?,
        EstimatorTag::PlugInAtt => plug_in_att(data, hat)?,
        EstimatorTag::DrAtt => dr_att(data, hat)?,
    }
    .value)
}

/// Upper order statistic at index `⌈γR⌉` (1-based) of an ascending sample.
pub fn order_statistic(sorted: &[f64], gamma: f64) -> f64 {
    let r = sorted.len();
    let k = ((gamma * r as f64).ceil() as usize).clamp(1, r);
    sorted[k - 1]
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QuantileRisk {
    pub quantile_risk: f64,
    /// Squared errors in replication order.
    pub errors: Vec<f64>,
}

impl QuantileRisk {
    pub fn at(&self, gamma: f64) -> f64 {
        let mut s = self.errors.clone();
        s.sort_by(f64::total_cmp);
        order_statistic(&s, gamma)
    }
}

fn check_gamma(gamma: f64) -> Result<()> {
    if gamma > 0.0 && gamma < 1.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("gamma = {gamma} must lie in (0, 1)")))
    }
}

/// Squared errors over `reps` replications, rep `r` drawn on stream `stream_id(outer, r)`.
fn squared_errors(tag: EstimatorTag, s: &Scenario, n: usize, reps: usize, seed: u64, outer: usize) -> Result<Vec<f64>> {
    let target = s.target(tag);
    par_map(reps, |r| {
        let wrap = |e: Error| Error::Replication { index: r, source: Box::new(e) };
        let data = sample_dataset_stream(&s.truth, n, seed, stream_id(outer, r)).map_err(wrap)?;
        let v = estimate(tag, &data, &s.hat, &s.w).map_err(wrap)?;
        Ok((v - target).powi(2))
    })
    .into_iter()
    .collect()
}

pub fn quantile_risk(
    tag: EstimatorTag,
    scenario: &Scenario,
    n: usize,
    reps: usize,
    gamma: f64,
    seed: u64,
) -> Result<QuantileRisk> {
    if reps < 20 {
        return Err(Error::invalid(format!("reps = {reps} must be at least 20")));
    }
    check_gamma(gamma)?;
    let errors = squared_errors(tag, scenario, n, reps, seed, 0)?;
    let mut sorted = errors.clone();
    sorted.sort_by(f64::total_cmp);
    Ok(QuantileRisk {
        quantile_risk: order_statistic(&sorted, gamma),
        errors,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RiskRow {
    pub n: usize,
    pub gamma: f64,
    pub quantile_risk: f64,
    pub reps: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RiskReport {
    pub estimator: EstimatorTag,
    /// Sorted by `n`, then `gamma`.
    pub rows: Vec<RiskRow>,
    /// Slope of `log(risk)` on `log(n)` at the first gamma; NaN when some risk is zero.
    pub fitted_slope: f64,
    pub slope_stderr: f64,
}

impl RiskReport {
    /// Fit restricted to one gamma.
    pub fn fit_for(&self, gamma: f64) -> Result<(f64, f64)> {
        let pts: Vec<(f64, f64)> = self
            .rows
            .iter()
            .filter(|r| r.gamma == gamma)
            .map(|r| (r.n as f64, r.quantile_risk))
            .collect();
        fit_loglog(&pts)
    }
}

/// OLS slope of `log y` on `log x` and its standard error.
pub fn fit_loglog(points: &[(f64, f64)]) -> Result<(f64, f64)> {
    if points.len() < 3 {
        return Err(Error::invalid("slope fit needs at least 3 points"));
    }
    if points.iter().any(|&(x, y)| !(x > 0.0 && y > 0.0 && y.is_finite())) {
        return Err(Error::invalid("log-log fit needs positive finite values"));
    }
    let k = points.len() as f64;
    let lx: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ly: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let mx = lx.iter().sum::<f64>() / k;
    let my = ly.iter().sum::<f64>() / k;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let rss: f64 = lx.iter().zip(&ly).map(|(x, y)| (y - my - slope * (x - mx)).powi(2)).sum();
    Ok((slope, (rss / (k - 2.0) / sxx).sqrt()))
}

/// One replication batch per `n`; batch `i` uses streams `stream_id(i, r)`.
pub fn rate_sweep(
    family: impl Fn(usize) -> Result<Scenario>,
    ns: &[usize],
    tag: EstimatorTag,
    gammas: &[f64],
    reps: usize,
    seed: u64,
) -> Result<RiskReport> {
    let mut sorted = ns.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() < 4 {
        return Err(Error::invalid("rate sweep needs at least 4 distinct n values"));
    }
    if gammas.is_empty() {
        return Err(Error::invalid("rate sweep needs at least one gamma"));
    }
    for &g in gammas {
        check_gamma(g)?;
    }
    if reps < 20 {
        return Err(Error::invalid(format!("reps = {reps} must be at least 20")));
    }
    let mut rows = Vec::new();
    for (i, &n) in sorted.iter().enumerate() {
        let scenario = family(n)?;
        let mut errs = squared_errors(tag, &scenario, n, reps, seed, i)?;
        errs.sort_by(f64::total_cmp);
        for &gamma in gammas {
            rows.push(RiskRow {
                n,
                gamma,
                quantile_risk: order_statistic(&errs, gamma),
                reps,
            });
        }
    }
    let mut report = RiskReport {
        estimator: tag,
        rows,
        fitted_slope: f64::NAN,
        slope_stderr: f64::NAN,
    };
    let (s, se) = report.fit_for(gammas[0]).unwrap_or((f64::NAN, f64::NAN));
    report.fitted_slope = s;
    report.slope_stderr = se;
    Ok(report)
}

/// `coef · n^exponent`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerLaw {
    pub coef: f64,
    pub exponent: f64,
}

impl PowerLaw {
    pub fn constant(v: f64) -> Self {
        PowerLaw { coef: v, exponent: 0.0 }
    }

    pub fn eval(&self, n: usize) -> f64 {
        if self.coef == 0.0 {
            0.0
        } else {
            self.coef * (n as f64).powf(self.exponent)
        }
    }
}

impl FromStr for PowerLaw {
    type Err = Error;

    /// Accepts `0.01`, `n^-0.25`, `2*n^-0.5` and `2 * n ^ (-0.5)`.
    fn from_str(s: &str) -> Result<Self> {
        let t: String = s.chars().filter(|c| !c.is_whitespace() && *c != '(' && *c != ')').collect();
        let bad = || Error::invalid(format!("cannot parse budget expression `{s}`"));
        let num = |v: &str| v.parse::<f64>().ok().filter(|x| x.is_finite()).ok_or_else(bad);
        let (coef, rest) = match t.split_once('*') {
            Some((c, r)) => (num(c)?, r.to_string()),
            None if t.starts_with('n') => (1.0, t.clone()),
            None => return Ok(PowerLaw::constant(num(&t)?)),
        };
        let exponent = match rest.as_str() {
            "n" => 1.0,
            r => num(r.strip_prefix("n^").ok_or_else(bad)?)?,
        };
        Ok(PowerLaw { coef, exponent })
    }
}

/// Scenario whose truth is `center` pulled back along `direction` so that the oracle
/// estimates from [`synthesize_estimates`] land on `center`: with `u = direction/‖direction‖₂`,
/// `m = m̂ − √f·u`, `g(0,·) = ĝ(0,·) − √e·u`, `g(1,·) = ĝ(1,·) − √e'·u`.
///
/// Shifting all three components the same way makes the treated and control
/// product-bias terms of the DR WATE estimator add up instead of cancelling.
pub fn shifted_truth_scenario(
    center: &NuisancePair,
    w: &Func,
    budget: &ErrorBudget,
    direction: &Func,
    quad: &Quadrature,
) -> Result<Scenario> {
    let norm = lp_norm(direction, 2.0, quad);
    if !(norm > 0.0) {
        return Err(Error::invalid("direction must have positive L2 norm"));
    }
    let u = direction.scale(1.0 / norm);
    let shift = |f: &Func, b: f64| f.sub(&u.scale(b.sqrt()));
    let truth = NuisancePair {
        m: shift(&center.m, budget.f),
        g0: shift(&center.g0, budget.e),
        g1: shift(&center.g1, budget.e_prime),
        c: center.c,
    };
    truth.check_range(quad)?;
    let hat = synthesize_estimates(&truth, budget, &Direction::Custom(direction.clone()), quad)?;
    Scenario::new(truth, hat, w.clone(), quad)
}
