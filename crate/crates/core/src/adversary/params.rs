//! Perturbation sizes `(α, β, ξ)` for each construction.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nuisance_oracle::ErrorBudget;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Case {
    /// WATE, `e' >= f`: perturbs `m` and `g(1,·)`.
    Case1,
    /// WATE, `f >= e'`: perturbs `m` and `g(1,·)`.
    Case2,
    /// WATE, `e >= f`: perturbs `m` and `g(0,·)`.
    Case3,
    /// WATE, `f >= e`: perturbs `m` and `g(0,·)`.
    Case4,
    Att,
    /// Single shifted alternative for the `1/n` term.
    OracleShift,
}

impl Case {
    pub const MIXTURES: [Case; 5] = [Case::Case1, Case::Case2, Case::Case3, Case::Case4, Case::Att];

    pub fn is_mixture(self) -> bool {
        self != Case::OracleShift
    }
}

impl fmt::Display for Case {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Case::Case1 => "case1",
            Case::Case2 => "case2",
            Case::Case3 => "case3",
            Case::Case4 => "case4",
            Case::Att => "att",
            Case::OracleShift => "oracle_shift",
        })
    }
}

impl FromStr for Case {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_lowercase().as_str() {
            "case1" => Case::Case1,
            "case2" => Case::Case2,
            "case3" => Case::Case3,
            "case4" => Case::Case4,
            "att" => Case::Att,
            "oracle_shift" | "oracleshift" => Case::OracleShift,
            other => return Err(Error::invalid(format!("unknown construction case `{other}`"))),
        })
    }
}

/// What to do when the sufficient "n large enough" inequality fails.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum SmallnessPolicy {
    /// Refuse with [`Error::NTooSmall`].
    #[default]
    Enforce,
    /// Record the inequality and continue; the verifiers then certify the family.
    Record,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InequalityCheck {
    pub condition: String,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

impl InequalityCheck {
    fn new(condition: &str, lhs: f64, rhs: f64) -> Self {
        InequalityCheck {
            condition: condition.into(),
            lhs,
            rhs,
            holds: lhs <= rhs,
        }
    }

    fn into_error(self) -> Error {
        Error::NTooSmall {
            condition: self.condition,
            lhs: self.lhs,
            rhs: self.rhs,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerturbationParams {
    pub case: Case,
    pub alpha: f64,
    pub beta: f64,
    pub xi: f64,
    pub smallness: Vec<InequalityCheck>,
    pub premises: Vec<InequalityCheck>,
}

impl PerturbationParams {
    /// Hand-set sizes with no feasibility bookkeeping.
    pub fn manual(case: Case, alpha: f64, beta: f64, xi: f64) -> Self {
        PerturbationParams {
            case,
            alpha,
            beta,
            xi,
            smallness: Vec::new(),
            premises: Vec::new(),
        }
    }

    pub fn smallness_holds(&self) -> bool {
        self.smallness.iter().all(|c| c.holds)
    }
}

/// Center-dependent quantities the selection formulas and their side conditions use.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamInputs {
    /// Overlap constant.
    pub c: f64,
    /// `‖ŵ‖_{P_X,2}`.
    pub what_l2: f64,
    /// `‖w‖_{P_X,∞}`.
    pub w_sup: f64,
    /// The case's curvature moment: `E[wŵ²/ĝ(1,·)]` (Case 1), `E[ĝ(1,·)wŵ²]` (Case 2),
    /// `E[wŵ²/ĝ(0,·)]` (Case 3), `E[ĝ(0,·)wŵ²]` (Case 4).
    pub moment: f64,
    /// `c_u` from the ATT auxiliary.
    pub c_u: f64,
    /// `C_u` from the ATT auxiliary.
    pub big_c_u: f64,
    /// Sample size (oracle shift).
    pub n: usize,
    /// `‖w‖_{P_X,2}` (oracle shift).
    pub w_l2: f64,
}

impl ParamInputs {
    pub fn new(what_l2: f64, c: f64) -> Self {
        ParamInputs {
            c,
            what_l2,
            w_sup: 1.0,
            moment: 1.0,
            c_u: 1.0,
            big_c_u: 1.0,
            n: 1,
            w_l2: 1.0,
        }
    }
}

pub fn select_params(
    case: Case,
    budget: &ErrorBudget,
    inputs: &ParamInputs,
    policy: SmallnessPolicy,
) -> Result<PerturbationParams> {
    let c = inputs.c;
    if !(c > 0.0 && c < 0.5) {
        return Err(Error::invalid(format!("overlap constant c = {c} must lie in (0, 1/2)")));
    }
    let mismatch = |detail: String| Err(Error::CaseMismatch { case: case.to_string(), detail });
    let wn = inputs.what_l2;
    let needs_what = !matches!(case, Case::Att | Case::OracleShift);
    if needs_what && !(wn > 0.0) {
        return Err(Error::invalid("‖ŵ‖₂ must be positive"));
    }
    let ws = inputs.w_sup;
    let w1 = ws.max(1.0);
    let curvature = 0.25 * c * c * (1.0 + ws).powi(-4) * inputs.moment.min(1.0);
    let (alpha, beta, xi, smallness, premises) = match case {
        Case::Case1 | Case::Case3 => {
            let e = if case == Case::Case1 { budget.e_prime } else { budget.e };
            if e < budget.f {
                let name = if case == Case::Case1 { "e'" } else { "e" };
                return mismatch(format!("needs {name} >= f, got {e} < {}", budget.f));
            }
            let a = e.sqrt() / (4.0 * wn);
            let b = c * budget.f.sqrt() / (4.0 * wn);
            (
                a,
                b,
                0.0,
                vec![InequalityCheck::new("max(α,β) <= c²(1+‖w‖∞)⁻⁴ min(1, moment)/4", a.max(b), curvature)],
                vec![InequalityCheck::new("β <= c/(2‖w‖∞)", b, c / (2.0 * ws))],
            )
        }
        Case::Case2 | Case::Case4 => {
            let e = if case == Case::Case2 { budget.e_prime } else { budget.e };
            if budget.f < e {
                let name = if case == Case::Case2 { "e'" } else { "e" };
                return mismatch(format!("needs f >= {name}, got {} < {e}", budget.f));
            }
            let a = budget.f.sqrt() / (4.0 * wn);
            let b = c * e.sqrt() / (4.0 * wn);
            (
                a,
                b,
                0.0,
                vec![InequalityCheck::new("max(α,β) <= c²(1+‖w‖∞)⁻⁴ min(1, moment)/4", a.max(b), curvature)],
                vec![
                    InequalityCheck::new("α <= 1/max(1,‖w‖∞)", a, 1.0 / w1),
                    InequalityCheck::new("β <= c/(4 max(1,‖w‖∞)²)", b, c / (4.0 * w1 * w1)),
                ],
            )
        }
        Case::Att => {
            let (cu, big) = (inputs.c_u, inputs.big_c_u);
            if !(cu > 0.0 && big > 0.0) {
                return Err(Error::invalid("ATT selection needs positive c_u and C_u"));
            }
            let a = 0.25 * c * budget.e.sqrt();
            let b = 0.25 * c.min(cu) * budget.f.sqrt();
            (
                a,
                b,
                0.0,
                vec![
                    InequalityCheck::new("α <= c/4", a, c / 4.0),
                    InequalityCheck::new("β <= c_u c³ C_u⁻²/4", b, cu * c.powi(3) / (4.0 * big * big)),
                ],
                vec![
                    InequalityCheck::new("α <= 1", a, 1.0),
                    InequalityCheck::new("β <= 1/(4 C_u)", b, 1.0 / (4.0 * big)),
                ],
            )
        }
        Case::OracleShift => {
            if inputs.n == 0 || !(inputs.w_l2 > 0.0) {
                return Err(Error::invalid("oracle shift needs n >= 1 and ‖w‖₂ > 0"));
            }
            let xi = 1.0 / ((inputs.n as f64).sqrt() * inputs.w_l2);
            (0.0, 0.0, xi, Vec::new(), Vec::new())
        }
    };
    if let Some(bad) = premises.iter().find(|p| !p.holds) {
        return Err(bad.clone().into_error());
    }
    if policy == SmallnessPolicy::Enforce {
        if let Some(bad) = smallness.iter().find(|p| !p.holds) {
            return Err(bad.clone().into_error());
        }
    }
    Ok(PerturbationParams {
        case,
        alpha,
        beta,
        xi,
        smallness,
        premises,
    })
}
