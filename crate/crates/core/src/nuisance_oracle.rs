//! Black-box nuisance estimates at prescribed L² error, and membership in the
//! constraint set `F_{e,e',f}`.

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::func::{merge_sorted, Func};
use crate::model::NuisancePair;
use crate::quadrature::Quadrature;
use crate::rng::stream_rng;

/// Squared L² budgets: `e` for `g(0,·)`, `e_prime` for `g(1,·)`, `f` for `m`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ErrorBudget {
    pub e: f64,
    pub e_prime: f64,
    pub f: f64,
}

impl ErrorBudget {
    pub fn new(e: f64, e_prime: f64, f: f64) -> Result<Self> {
        let b = ErrorBudget { e, e_prime, f };
        if [e, e_prime, f].iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::invalid(format!("budgets must be finite and non-negative: {b:?}")));
        }
        Ok(b)
    }

    pub fn uniform(v: f64) -> Result<Self> {
        ErrorBudget::new(v, v, v)
    }

    pub fn zero() -> Self {
        ErrorBudget::default()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Component {
    Propensity,
    Outcome0,
    Outcome1,
}

impl fmt::Display for Component {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Component::Propensity => "m",
            Component::Outcome0 => "g(0,.)",
            Component::Outcome1 => "g(1,.)",
        })
    }
}

/// Shape of the synthetic estimation error.
#[derive(Clone, Debug)]
pub enum Direction {
    /// `±1` checkerboard on the dyadic grid with `2^levels` cells per axis.
    Checkerboard { levels: u32 },
    Constant,
    /// Independent `±1` signs per cell of a `2^levels` grid.
    RandomSigns { levels: u32, seed: u64 },
    Custom(Func),
}

impl Default for Direction {
    fn default() -> Self {
        Direction::Checkerboard { levels: 6 }
    }
}

impl Direction {
    pub fn func(&self, dim: usize) -> Func {
        match self {
            Direction::Checkerboard { levels } => Func::checkerboard(dim, *levels),
            Direction::Constant => Func::constant(dim, 1.0),
            Direction::RandomSigns { levels, seed } => {
                let res = 1usize << levels;
                let mut rng = stream_rng(*seed, 0);
                let values = (0..res.pow(dim as u32))
                    .map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 })
                    .collect();
                Func::grid(dim, res, values)
            }
            Direction::Custom(f) => f.clone(),
        }
    }
}

/// Returns `(m̂, ĝ)` with `‖m̂ − m‖² = f`, `‖ĝ(0,·) − g(0,·)‖² = e`,
/// `‖ĝ(1,·) − g(1,·)‖² = e'`, each error a multiple of `direction`.
pub fn synthesize_estimates(
    truth: &NuisancePair,
    budget: &ErrorBudget,
    direction: &Direction,
    quad: &Quadrature,
) -> Result<NuisancePair> {
    let dir = direction.func(truth.dim());
    let dir_norm = lp_norm(&dir, 2.0, quad);
    let shift = |f: &Func, b: f64, comp: Component| -> Result<Func> {
        if b == 0.0 {
            return Ok(f.clone());
        }
        if dir_norm == 0.0 {
            return Err(Error::invalid("direction has zero L2 norm"));
        }
        let amp = b.sqrt() / dir_norm;
        let out = f.add(&dir.scale(amp));
        check_slack(&out, truth.c, amp, comp, quad)?;
        Ok(out)
    };
    NuisancePair::new(
        shift(&truth.m, budget.f, Component::Propensity)?,
        shift(&truth.g0, budget.e, Component::Outcome0)?,
        shift(&truth.g1, budget.e_prime, Component::Outcome1)?,
        truth.c,
    )
}

fn check_slack(f: &Func, c: f64, amplitude: f64, component: Component, quad: &Quadrature) -> Result<()> {
    let nodes = quad.unit_nodes(f.dim(), f.knots());
    for (x, _, _) in nodes.iter() {
        let v = f.eval(x);
        if !(c..=1.0 - c).contains(&v) {
            return Err(Error::BudgetInfeasible {
                component,
                amplitude,
                lower: c,
                upper: 1.0 - c,
                detail: format!("value {v} at x = {x:?}"),
            });
        }
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum NormKind {
    #[default]
    L2,
    /// Sup-norm variant: distances are squared grid suprema.
    LInf,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidityReport {
    pub dist_g0_sq: f64,
    pub dist_g1_sq: f64,
    pub dist_m_sq: f64,
    pub range_ok: bool,
    pub member: bool,
}

/// Relative slack absorbing quadrature round-off when a budget is met with equality.
const BUDGET_SLACK: f64 = 1e-9;

pub fn verify_membership(
    candidate: &NuisancePair,
    center: &NuisancePair,
    budget: &ErrorBudget,
    quad: &Quadrature,
) -> ValidityReport {
    verify_membership_with(candidate, center, budget, quad, NormKind::L2)
}

pub fn verify_membership_with(
    candidate: &NuisancePair,
    center: &NuisancePair,
    budget: &ErrorBudget,
    quad: &Quadrature,
    norm: NormKind,
) -> ValidityReport {
    let r = match norm {
        NormKind::L2 => 2.0,
        NormKind::LInf => f64::INFINITY,
    };
    let dist_m_sq = lp_distance(&candidate.m, &center.m, r, quad).powi(2);
    let dist_g0_sq = lp_distance(&candidate.g0, &center.g0, r, quad).powi(2);
    let dist_g1_sq = lp_distance(&candidate.g1, &center.g1, r, quad).powi(2);
    let range_ok = candidate.check_range(quad).is_ok();
    let within = |d: f64, b: f64| d <= b * (1.0 + BUDGET_SLACK) + 1e-15;
    let member = range_ok
        && within(dist_g0_sq, budget.e)
        && within(dist_g1_sq, budget.e_prime)
        && within(dist_m_sq, budget.f);
    ValidityReport {
        dist_g0_sq,
        dist_g1_sq,
        dist_m_sq,
        range_ok,
        member,
    }
}

/// `‖f − g‖_{P_X,r}` under uniform `P_X`; `r = f64::INFINITY` gives the grid supremum.
pub fn lp_distance(f: &Func, g: &Func, r: f64, quad: &Quadrature) -> f64 {
    lp_norm(&f.sub(g), r, quad)
}

pub fn lp_norm(f: &Func, r: f64, quad: &Quadrature) -> f64 {
    assert!(r >= 1.0, "norm order must be >= 1");
    let nodes = quad.unit_nodes(f.dim(), f.knots());
    if r.is_infinite() {
        return nodes.sup_abs(|x| f.eval(x));
    }
    if r == 2.0 {
        return nodes.integrate(|x| f.eval(x).powi(2)).max(0.0).sqrt();
    }
    nodes.integrate(|x| f.eval(x).abs().powf(r)).max(0.0).powf(1.0 / r)
}

/// Knot union for integrating several functions together.
pub fn joint_knots(funcs: &[&Func]) -> Vec<Vec<f64>> {
    let dim = funcs[0].dim();
    (0..dim)
        .map(|a| funcs.iter().fold(Vec::new(), |acc, f| merge_sorted(&acc, &f.knots()[a])))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q() -> Quadrature {
        Quadrature::default_for(1)
    }

    #[test]
    fn zero_budget_returns_truth() {
        let t = NuisancePair::constant(1, 0.4, 0.3, 0.6, 0.1).unwrap();
        let h = synthesize_estimates(&t, &ErrorBudget::zero(), &Direction::default(), &q()).unwrap();
        for x in [0.1, 0.5, 0.93] {
            assert_eq!(h.m.eval(&[x]), t.m.eval(&[x]));
            assert_eq!(h.g1.eval(&[x]), t.g1.eval(&[x]));
        }
    }

    #[test]
    fn constant_direction_amplitude() {
        let t = NuisancePair::constant(1, 0.5, 0.5, 0.5, 0.1).unwrap();
        let b = ErrorBudget::new(0.0, 0.0, 0.01).unwrap();
        let h = synthesize_estimates(&t, &b, &Direction::Constant, &q()).unwrap();
        assert!((h.m.eval(&[0.3]) - 0.6).abs() < 1e-15);
        assert!((lp_distance(&h.m, &t.m, 2.0, &q()).powi(2) - 0.01).abs() < 1e-15);
    }

    #[test]
    fn oversized_budget_is_infeasible() {
        let t = NuisancePair::constant(1, 0.5, 0.5, 0.5, 0.1).unwrap();
        let b = ErrorBudget::new(0.0, 0.0, 1.0).unwrap();
        let err = synthesize_estimates(&t, &b, &Direction::default(), &q()).unwrap_err();
        assert!(matches!(err, Error::BudgetInfeasible { component: Component::Propensity, .. }));
    }

    #[test]
    fn lp_examples() {
        let z = Func::constant(1, 0.0);
        assert!((lp_distance(&Func::constant(1, 0.3), &z, 2.0, &q()) - 0.3).abs() < 1e-15);
        let gl = Quadrature::new(2, crate::quadrature::Rule::GaussLegendre(2)).unwrap();
        let v = lp_distance(&Func::new(1, |x| x[0]), &z, 2.0, &gl);
        assert!((v - (1.0f64 / 3.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn range_violation_detected() {
        let c = NuisancePair::constant(1, 0.5, 0.5, 0.5, 0.1).unwrap();
        let bad = NuisancePair::constant(1, 1.2, 0.5, 0.5, 0.1).unwrap();
        let r = verify_membership(&bad, &c, &ErrorBudget::uniform(10.0).unwrap(), &q());
        assert!(!r.range_ok && !r.member);
        let same = verify_membership(&c, &c, &ErrorBudget::zero(), &q());
        assert!(same.member && same.dist_m_sq == 0.0);
    }
}
