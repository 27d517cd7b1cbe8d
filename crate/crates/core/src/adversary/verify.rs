//! Checks every family must pass: the bump identities, mixture equality,
//! membership, radius bounds, functional separation and the premises of the
//! Hellinger bound for mixtures of products.

use serde::Serialize;

use crate::func::Func;
use crate::model::{density_from, true_att, true_wate, NuisancePair};
use crate::nuisance_oracle::{lp_norm, verify_membership_with, ErrorBudget, NormKind, ValidityReport};
use crate::quadrature::Quadrature;
use crate::sum::CompensatedSum;

use super::bump::{bump, cell_sign, RademacherAssignment};
use super::construct::PerturbedFamily;
use super::params::Case;
use super::partition::Partition;

const DY: [(u8, u8); 4] = [(0, 0), (0, 1), (1, 0), (1, 1)];

#[derive(Clone, Copy, Debug, Serialize)]
pub struct DeltaIdentities {
    /// `max_x |E_λ Δ(λ,x)|`.
    pub max_mean: f64,
    /// `max_x |Δ(λ,x)² − 1|`.
    pub max_square_dev: f64,
    /// `max_λ |E_X[w ŵ Δ(λ,X)]|`.
    pub max_weighted_mean: f64,
}

/// The three bump identities at `points` and for each `λ` in `lambdas`.
pub fn verify_delta_identities(
    partition: &Partition,
    w: &Func,
    what: &Func,
    lambdas: &[RademacherAssignment],
    points: &[Vec<f64>],
    quad: &Quadrature,
) -> DeltaIdentities {
    let half = partition.len() / 2;
    let plus = RademacherAssignment::all_plus(half);
    let minus = RademacherAssignment { lambda: vec![-1; half], seed: 0 };
    let mut max_mean: f64 = 0.0;
    let mut max_sq: f64 = 0.0;
    for x in points {
        // Only the coordinate owning x's cell matters, so two assignments cover both signs.
        let mean = 0.5 * (bump(&plus, partition, x) + bump(&minus, partition, x));
        max_mean = max_mean.max(mean.abs());
        for l in lambdas {
            let d = bump(l, partition, x);
            max_sq = max_sq.max((d * d - 1.0).abs());
        }
    }
    let knots = super::partition::union_knots(partition, &[w, what]);
    let nodes = quad.unit_nodes(partition.dim(), &knots);
    // Integrate per cell once, then combine per λ.
    let mut per_cell = vec![CompensatedSum::new(); partition.len()];
    for (x, wt, _) in nodes.iter() {
        per_cell[partition.locate(x)].add(wt * w.eval(x) * what.eval(x));
    }
    let per_cell: Vec<f64> = per_cell.iter().map(CompensatedSum::value).collect();
    let mut max_weighted: f64 = 0.0;
    for l in lambdas {
        let v: CompensatedSum = per_cell
            .iter()
            .enumerate()
            .map(|(i, c)| f64::from(l.lambda[i / 2]) * cell_sign(i) * c)
            .collect();
        max_weighted = max_weighted.max(v.value().abs());
    }
    DeltaIdentities {
        max_mean,
        max_square_dev: max_sq,
        max_weighted_mean: max_weighted,
    }
}

/// `max |E_λ q_λ(x,d,y) − p̂(x,d,y)|` over the grid. The λ-average at `x` only
/// involves the sign of the coordinate owning `x`'s cell, so it is exact.
pub fn verify_mixture_equality(family: &PerturbedFamily, quad: &Quadrature) -> f64 {
    let mut dev: f64 = 0.0;
    for (x, _, _) in family.nodes(quad).iter() {
        let l = family.local(x);
        let plus = family.point_local(&l, 1.0);
        let minus = family.point_local(&l, -1.0);
        for (d, y) in DY {
            let g = |v: &[f64; 3]| if d == 1 { v[2] } else { v[1] };
            let p = density_from(l.m, if d == 1 { l.g1 } else { l.g0 }, d, y);
            let q = if family.case.is_mixture() {
                0.5 * (density_from(plus[0], g(&plus), d, y) + density_from(minus[0], g(&minus), d, y))
            } else {
                density_from(plus[0], g(&plus), d, y)
            };
            dev = dev.max((q - p).abs());
        }
    }
    dev
}

#[derive(Clone, Debug, Serialize)]
pub struct MembershipSummary {
    pub checked: usize,
    pub members: usize,
    pub max_dist_g0_sq: f64,
    pub max_dist_g1_sq: f64,
    pub max_dist_m_sq: f64,
    pub all_member: bool,
}

pub fn verify_family_membership(
    family: &PerturbedFamily,
    budget: &ErrorBudget,
    lambdas: &[RademacherAssignment],
    quad: &Quadrature,
    norm: NormKind,
) -> MembershipSummary {
    let reports: Vec<ValidityReport> = lambdas
        .iter()
        .map(|l| verify_membership_with(&family.pair(l), &family.center, budget, quad, norm))
        .collect();
    let max = |f: fn(&ValidityReport) -> f64| reports.iter().map(f).fold(0.0, f64::max);
    MembershipSummary {
        checked: reports.len(),
        members: reports.iter().filter(|r| r.member).count(),
        max_dist_g0_sq: max(|r| r.dist_g0_sq),
        max_dist_g1_sq: max(|r| r.dist_g1_sq),
        max_dist_m_sq: max(|r| r.dist_m_sq),
        all_member: reports.iter().all(|r| r.member),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RadiusCheck {
    pub component: &'static str,
    /// Norm order; `inf` for the sup-norm.
    pub r: f64,
    pub observed: f64,
    pub bound: f64,
    pub holds: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct RadiusReport {
    pub checks: Vec<RadiusCheck>,
    /// ATT only: `β‖u‖_r`, the exact size of `m_λ − m̂`.
    pub att_beta_u: Vec<(f64, f64)>,
    pub pass: bool,
}

/// Worst-case `‖g_λ − ĝ‖_r` and `‖m_λ − m̂‖_r` over `lambdas` against the radius bounds,
/// for `r ∈ {2, ∞}`.
pub fn verify_radii(family: &PerturbedFamily, lambdas: &[RademacherAssignment], quad: &Quadrature) -> RadiusReport {
    let (a, b, c) = (family.params.alpha, family.params.beta, family.center.c);
    let mut checks = Vec::new();
    let mut att_beta_u = Vec::new();
    for r in [2.0, f64::INFINITY] {
        let what_r = lp_norm(&family.what, r, quad);
        // (component, bound)
        let bounds: Vec<(&'static str, f64)> = match family.case {
            Case::Case1 => vec![("g1", 2.0 * (a + b / c) * what_r), ("m", b / c * what_r)],
            Case::Case2 => vec![("g1", 2.0 * b * what_r), ("m", 2.0 * (a + b / c) * what_r)],
            Case::Case3 => vec![("g0", 2.0 * (a + b / c) * what_r), ("m", b / c * what_r)],
            Case::Case4 => vec![("g0", 2.0 * b * what_r), ("m", 2.0 * (a + b / c) * what_r)],
            Case::Att => {
                att_beta_u.push((r, b * what_r));
                vec![("g0", 2.0 * a / c), ("m", b / c)]
            }
            Case::OracleShift => {
                let w_r = lp_norm(&family.w, r, quad);
                vec![("g1", family.params.xi * w_r)]
            }
        };
        for (component, bound) in bounds {
            let observed = lambdas
                .iter()
                .map(|l| {
                    let pair = family.pair(l);
                    let (f, g) = match component {
                        "m" => (&pair.m, &family.center.m),
                        "g0" => (&pair.g0, &family.center.g0),
                        _ => (&pair.g1, &family.center.g1),
                    };
                    lp_norm(&f.sub(g).with_knots(family.knots()), r, quad)
                })
                .fold(0.0, f64::max);
            checks.push(RadiusCheck {
                component,
                r,
                observed,
                bound,
                holds: observed <= bound * (1.0 + 1e-12) + 1e-15,
            });
        }
    }
    let pass = checks.iter().all(|c| c.holds);
    RadiusReport { checks, att_beta_u, pass }
}

#[derive(Clone, Debug, Serialize)]
pub struct SeparationReport {
    /// Functional gap in the direction the construction guarantees, per λ.
    pub gaps: Vec<f64>,
    /// Displayed lower bound on the gap.
    pub required: f64,
    pub min_margin: f64,
    pub pass: bool,
}

/// Slack allowed on separation inequalities.
pub const SEPARATION_SLACK: f64 = 1e-12;

/// Gap between the center's functional and each member's:
/// Case 1/2 `E[w g_λ1] − E[w ĝ1]`, Case 3 `E[w ĝ0] − E[w g_λ0]`, Case 4 `E[w g_λ0] − E[w ĝ0]`,
/// ATT `θ_ml − θ_λ`, oracle shift `θ(shifted) − θ(center)`.
pub fn verify_separation(family: &PerturbedFamily, lambdas: &[RademacherAssignment], quad: &Quadrature) -> SeparationReport {
    let (a, b) = (family.params.alpha, family.params.beta);
    let nodes = family.nodes(quad);
    let center = &family.center;
    let w = &family.w;
    let what = &family.what;
    let moment = |f: &dyn Fn(&[f64]) -> f64| nodes.integrate(|x| w.eval(x) * what.eval(x).powi(2) * f(x));
    let required = match family.case {
        Case::Case1 => 0.5 * a * b * moment(&|x| 1.0 / center.g1.eval(x)),
        Case::Case2 => 0.5 * a * b * moment(&|x| center.g1.eval(x)),
        Case::Case3 => 0.5 * a * b * moment(&|x| 1.0 / center.g0.eval(x)),
        Case::Case4 => 0.5 * a * b * moment(&|x| center.g0.eval(x)),
        Case::Att => 0.5 * family.aux.as_ref().map_or(0.0, |u| u.c_u) * a * b,
        Case::OracleShift => family.params.xi * nodes.integrate(|x| w.eval(x).powi(2)),
    };
    let base_g1 = nodes.integrate(|x| w.eval(x) * center.g1.eval(x));
    let base_g0 = nodes.integrate(|x| w.eval(x) * center.g0.eval(x));
    let gaps: Vec<f64> = lambdas
        .iter()
        .map(|l| {
            let eval = |k: usize| nodes.integrate(|x| w.eval(x) * family.point(x, family.delta(l, x))[k]);
            match family.case {
                Case::Case1 | Case::Case2 => eval(2) - base_g1,
                Case::Case3 => base_g0 - eval(1),
                Case::Case4 => eval(1) - base_g0,
                Case::Att => {
                    let pair = family.pair(l);
                    let theta_ml = family.aux.as_ref().map_or(f64::NAN, |u| u.theta_ml);
                    theta_ml - true_att(&pair, quad).unwrap_or(f64::NAN)
                }
                Case::OracleShift => {
                    let pair = family.pair(l);
                    true_wate(&pair, w, quad).unwrap_or(f64::NAN) - true_wate(center, w, quad).unwrap_or(f64::NAN)
                }
            }
        })
        .collect();
    let margins = gaps.iter().map(|g| g - required);
    let (min_margin, pass) = if family.case == Case::OracleShift {
        let worst = margins.map(f64::abs).fold(0.0, f64::max);
        (-worst, worst <= 1e-9)
    } else {
        let m = margins.fold(f64::INFINITY, f64::min);
        (m, m >= -SEPARATION_SLACK)
    };
    SeparationReport {
        gaps,
        required,
        min_margin,
        pass,
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct Lemma1Report {
    /// `(M/2)·max_j max_{λ_j} Σ_{d,y} ∫_{X_j} (q_λ − p̂)²/p̂`.
    pub b: f64,
    pub max_pj: f64,
    pub min_pj: f64,
    /// `4/c²`.
    pub b_bound: f64,
    pub bound_ok: bool,
}

/// Premises of the Hellinger bound for mixtures of products, with `X_j = B_{2j−1} ∪ B_{2j}`.
pub fn lemma1_premises(family: &PerturbedFamily, quad: &Quadrature) -> Lemma1Report {
    let m = family.partition.len();
    let pairs = m / 2;
    // chi[j][s]: s = 0 for λ_j = +1, 1 for λ_j = −1.
    let mut chi = vec![[CompensatedSum::new(); 2]; pairs];
    let mut mass = vec![CompensatedSum::new(); pairs];
    for (x, wt, _) in family.nodes(quad).iter() {
        let i = family.partition.locate(x);
        let j = i / 2;
        mass[j].add(wt);
        let l = family.local(x);
        for (s, lam) in [1.0, -1.0].into_iter().enumerate() {
            let v = family.point_local(&l, lam * cell_sign(i));
            let mut acc = 0.0;
            for (d, y) in DY {
                let p = density_from(l.m, if d == 1 { l.g1 } else { l.g0 }, d, y);
                let q = density_from(v[0], if d == 1 { v[2] } else { v[1] }, d, y);
                if p > 0.0 {
                    acc += (q - p).powi(2) / p;
                } else if q != 0.0 {
                    acc = f64::INFINITY;
                }
            }
            chi[j][s].add(wt * acc);
        }
    }
    let worst = chi
        .iter()
        .map(|c| c[0].value().max(c[1].value()))
        .fold(0.0, f64::max);
    let b = pairs as f64 * worst;
    let pj: Vec<f64> = mass.iter().map(CompensatedSum::value).collect();
    let max_pj = pj.iter().copied().fold(0.0, f64::max);
    let min_pj = pj.iter().copied().fold(f64::INFINITY, f64::min);
    let c = family.center.c;
    let b_bound = 4.0 / (c * c);
    let target = 2.0 / m as f64;
    let bound_ok = b <= b_bound && (max_pj - target).abs() <= 1e-12 && (min_pj - target).abs() <= 1e-12;
    Lemma1Report {
        b,
        max_pj,
        min_pj,
        b_bound,
        bound_ok,
    }
}

/// Member functionals `θ(Q_λ)` for WATE (`w` weighting) or ATT.
pub fn member_functional(family: &PerturbedFamily, lambda: &RademacherAssignment, quad: &Quadrature) -> f64 {
    let pair: NuisancePair = family.pair(lambda);
    match family.case {
        Case::Att => true_att(&pair, quad).unwrap_or(f64::NAN),
        _ => true_wate(&pair, &family.w, quad).unwrap_or(f64::NAN),
    }
}
