//! The perturbed families `λ ↦ (m_λ, g_λ)`.
//!
//! Every construction is a pointwise map of the center values, `ŵ` (or `u, v`
//! for ATT) and `Δ(λ,x) ∈ {−1, +1}`. Because `Δ` only depends on the sign of
//! the cell's own coordinate of `λ`, the family is fully described by
//! [`PerturbedFamily::point`] evaluated at both signs.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::func::Func;
use crate::model::NuisancePair;
use crate::nuisance_oracle::lp_norm;
use crate::quadrature::{Nodes, Quadrature};

use super::bump::{cell_sign, sup_norm, truncate_weight, RademacherAssignment};
use super::choose_u::AttAuxiliary;
use super::params::{Case, ParamInputs, PerturbationParams};
use super::partition::{union_knots, Partition};

/// Per-formula multipliers on `α` and `β`, for mutation testing. Formulas that
/// share a coefficient each hold their own copy, so one copy can be perturbed alone.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tweak {
    pub alpha_m: f64,
    pub beta_m: f64,
    pub alpha_g: f64,
    pub beta_g: f64,
}

impl Default for Tweak {
    fn default() -> Self {
        Tweak {
            alpha_m: 1.0,
            beta_m: 1.0,
            alpha_g: 1.0,
            beta_g: 1.0,
        }
    }
}

/// Center quantities at one point.
#[derive(Clone, Copy, Debug)]
pub struct Local {
    pub m: f64,
    pub g0: f64,
    pub g1: f64,
    /// `ŵ(x)` for WATE cases, `u(x)` for ATT.
    pub what: f64,
    /// `w(x)`.
    pub w: f64,
}

#[derive(Clone, Debug)]
pub struct PerturbedFamily {
    pub case: Case,
    pub center: NuisancePair,
    pub partition: Arc<Partition>,
    pub params: PerturbationParams,
    /// Weight of the functional (`1` for ATT).
    pub w: Func,
    /// Truncated weight `ŵ`, or `u` for ATT.
    pub what: Func,
    pub aux: Option<AttAuxiliary>,
    pub tweak: Tweak,
    knots: Vec<Vec<f64>>,
}

/// `(m_λ, g_λ(0,·), g_λ(1,·))` at a point with bump value `delta`.
pub fn perturb_point(case: Case, p: &PerturbationParams, t: &Tweak, l: &Local, delta: f64) -> [f64; 3] {
    let (a, b) = (p.alpha, p.beta);
    let (am, bm, ag, bg) = (a * t.alpha_m, b * t.beta_m, a * t.alpha_g, b * t.beta_g);
    let wd = l.what * delta;
    let w2 = l.what * l.what;
    match case {
        Case::Case1 => {
            let m = l.m * (1.0 - bm * wd / l.g1);
            let mg = l.m * (1.0 - bg * wd / l.g1);
            [m, l.g0, l.m / mg * (l.g1 + ag * wd)]
        }
        Case::Case2 => {
            let g1 = l.g1 / (1.0 + bg * wd / l.g1 - ag * bg * w2);
            let ratio = 1.0 + bm * wd / l.g1 - am * bm * w2;
            [ratio * (l.m + am * l.m * l.g1 * wd), l.g0, g1]
        }
        Case::Case3 => {
            let m = l.m + (1.0 - l.m) * bm * wd / l.g0;
            let mg = l.m + (1.0 - l.m) * bg * wd / l.g0;
            [m, (1.0 - l.m) / (1.0 - mg) * (l.g0 - ag * wd), l.g1]
        }
        Case::Case4 => {
            let g0 = l.g0 / (1.0 + bg * wd / l.g0 - ag * bg * w2);
            let ratio = 1.0 + bm * wd / l.g0 - am * bm * w2;
            [1.0 - ratio * (1.0 - l.m) * (1.0 + am * l.g0 * wd), g0, l.g1]
        }
        Case::Att => {
            // `what` holds u here; v = (1 − m̂)/m̂.
            let v = (1.0 - l.m) / l.m;
            let m = l.m - bm * l.what * delta;
            let mg = l.m - bg * l.what * delta;
            [m, l.g0 - ag * v * delta / (1.0 - mg), l.g1]
        }
        Case::OracleShift => [l.m, l.g0, l.g1 + p.xi * t.alpha_g * l.w],
    }
}

/// Builds the family and checks that every member stays in `[0,1]` on the grid.
///
/// For WATE cases `w` must be the oriented weight the partition was balanced for
/// (see [`super::partition::WeightedPartition`]); for ATT, `aux` is required and its
/// partition is used.
pub fn construct(
    case: Case,
    center: &NuisancePair,
    partition: Arc<Partition>,
    params: &PerturbationParams,
    w: Option<&Func>,
    aux: Option<&AttAuxiliary>,
    quad: &Quadrature,
) -> Result<PerturbedFamily> {
    if params.case != case {
        return Err(Error::CaseMismatch {
            case: case.to_string(),
            detail: format!("parameters were selected for {}", params.case),
        });
    }
    let dim = center.dim();
    let (w, what, partition, aux) = match case {
        Case::Att => {
            let aux = aux.ok_or_else(|| Error::invalid("ATT construction needs the auxiliary u"))?;
            (Func::constant(dim, 1.0), aux.u.clone(), aux.partition.clone(), Some(aux.clone()))
        }
        _ => {
            let w = w.ok_or_else(|| Error::invalid("WATE constructions need a weight"))?.clone();
            let what = truncate_weight(&w, quad)?;
            (w, what, partition, None)
        }
    };
    if partition.dim() != dim {
        return Err(Error::invalid("partition dimension differs from the center"));
    }
    let knots = union_knots(&partition, &[&center.m, &center.g0, &center.g1, &what, &w]);
    let family = PerturbedFamily {
        case,
        center: center.clone(),
        partition,
        params: params.clone(),
        w,
        what,
        aux,
        tweak: Tweak::default(),
        knots,
    };
    family.check_range(quad)?;
    Ok(family)
}

impl PerturbedFamily {
    pub fn dim(&self) -> usize {
        self.center.dim()
    }

    /// Length of `λ`, i.e. `M/2`.
    pub fn lambda_len(&self) -> usize {
        self.partition.len() / 2
    }

    pub fn knots(&self) -> &[Vec<f64>] {
        &self.knots
    }

    /// Quadrature nodes cut at all family knots, so every node lies inside one cell.
    pub fn nodes(&self, quad: &Quadrature) -> Nodes {
        quad.unit_nodes(self.dim(), &self.knots)
    }

    /// Same family with multiplied coefficients; skips the range check.
    pub fn with_tweak(&self, tweak: Tweak) -> Self {
        PerturbedFamily { tweak, ..self.clone() }
    }

    #[inline]
    pub fn local(&self, x: &[f64]) -> Local {
        Local {
            m: self.center.m.eval(x),
            g0: self.center.g0.eval(x),
            g1: self.center.g1.eval(x),
            what: self.what.eval(x),
            w: self.w.eval(x),
        }
    }

    /// `(m, g0, g1)` at `x` for bump value `delta`.
    #[inline]
    pub fn point(&self, x: &[f64], delta: f64) -> [f64; 3] {
        perturb_point(self.case, &self.params, &self.tweak, &self.local(x), delta)
    }

    #[inline]
    pub fn point_local(&self, l: &Local, delta: f64) -> [f64; 3] {
        perturb_point(self.case, &self.params, &self.tweak, l, delta)
    }

    #[inline]
    pub fn delta(&self, lambda: &RademacherAssignment, x: &[f64]) -> f64 {
        let i = self.partition.locate(x);
        f64::from(lambda.lambda[i / 2]) * cell_sign(i)
    }

    pub fn random_lambda(&self, seed: u64, stream: u64) -> RademacherAssignment {
        RademacherAssignment::random(self.lambda_len(), seed, stream)
    }

    /// The member `(m_λ, g_λ)` as a nuisance pair.
    pub fn pair(&self, lambda: &RademacherAssignment) -> NuisancePair {
        assert_eq!(lambda.lambda.len(), self.lambda_len(), "λ must have M/2 entries");
        let fam = Arc::new(self.clone());
        let lam = Arc::new(lambda.clone());
        let comp = |k: usize| {
            let (f, l) = (fam.clone(), lam.clone());
            Func::new(self.dim(), move |x| f.point(x, f.delta(&l, x))[k]).with_knots(&self.knots)
        };
        NuisancePair {
            m: comp(0),
            g0: comp(1),
            g1: comp(2),
            c: self.center.c,
        }
    }

    fn check_range(&self, quad: &Quadrature) -> Result<()> {
        let names = ["m_λ", "g_λ(0,·)", "g_λ(1,·)"];
        for (x, _, _) in self.nodes(quad).iter() {
            let l = self.local(x);
            for delta in [-1.0, 1.0] {
                for (k, v) in self.point_local(&l, delta).into_iter().enumerate() {
                    if !(0.0..=1.0).contains(&v) {
                        return Err(Error::ConstructionInvalid {
                            what: format!("{} (Δ = {delta:+})", names[k]),
                            point: x.to_vec(),
                            value: v,
                        });
                    }
                }
            }
        }
        Ok(())
    }
}

/// Quantities [`super::params::select_params`] needs for `case`, computed from the center.
/// `w` is the oriented weight (ignored for ATT), `aux` is required for ATT and `n` for the
/// oracle shift.
pub fn param_inputs(
    case: Case,
    center: &NuisancePair,
    w: &Func,
    aux: Option<&AttAuxiliary>,
    n: usize,
    quad: &Quadrature,
) -> Result<ParamInputs> {
    let mut p = ParamInputs::new(1.0, center.c);
    p.n = n;
    if case == Case::Att {
        let aux = aux.ok_or_else(|| Error::invalid("ATT parameters need the auxiliary u"))?;
        p.c_u = aux.c_u;
        p.big_c_u = aux.big_c_u;
        return Ok(p);
    }
    let what = truncate_weight(w, quad)?;
    p.what_l2 = lp_norm(&what, 2.0, quad);
    p.w_sup = sup_norm(w, quad);
    p.w_l2 = lp_norm(w, 2.0, quad);
    let knots = crate::nuisance_oracle::joint_knots(&[w, &what, &center.g0, &center.g1]);
    let nodes = quad.unit_nodes(center.dim(), &knots);
    let base = |x: &[f64]| w.eval(x) * what.eval(x).powi(2);
    p.moment = match case {
        Case::Case1 => nodes.integrate(|x| base(x) / center.g1.eval(x)),
        Case::Case2 => nodes.integrate(|x| base(x) * center.g1.eval(x)),
        Case::Case3 => nodes.integrate(|x| base(x) / center.g0.eval(x)),
        Case::Case4 => nodes.integrate(|x| base(x) * center.g0.eval(x)),
        _ => 1.0,
    };
    Ok(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adversary::partition::Partition;

    fn local() -> Local {
        Local { m: 0.5, g0: 0.3, g1: 0.5, what: 1.0, w: 1.0 }
    }

    #[test]
    fn case1_substitution() {
        let p = PerturbationParams::manual(Case::Case1, 0.05, 0.0025, 0.0);
        let [m, g0, g1] = perturb_point(Case::Case1, &p, &Tweak::default(), &local(), 1.0);
        assert!((m - 0.4975).abs() < 1e-15);
        assert_eq!(g0, 0.3);
        assert!((g1 - 0.55 * 0.5 / 0.4975).abs() < 1e-15);
        assert!((g1 - 0.552764).abs() < 1e-6);
    }

    #[test]
    fn null_perturbation_is_identity() {
        for case in Case::MIXTURES {
            let p = PerturbationParams::manual(case, 0.0, 0.0, 0.0);
            for d in [-1.0, 1.0] {
                let v = perturb_point(case, &p, &Tweak::default(), &local(), d);
                assert!((v[0] - 0.5).abs() < 1e-15 && (v[1] - 0.3).abs() < 1e-15 && (v[2] - 0.5).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn oracle_shift_substitution() {
        let p = PerturbationParams::manual(Case::OracleShift, 0.0, 0.0, 0.1);
        let v = perturb_point(Case::OracleShift, &p, &Tweak::default(), &local(), 1.0);
        assert_eq!(v, [0.5, 0.3, 0.6]);
    }

    #[test]
    fn out_of_range_family_is_rejected() {
        let c = NuisancePair::constant(1, 0.5, 0.5, 0.5, 0.1).unwrap();
        let q = Quadrature::default_for(1);
        let p = PerturbationParams::manual(Case::Case1, 0.6, 0.0, 0.0);
        let part = Arc::new(Partition::uniform(1, 4).unwrap());
        let r = construct(Case::Case1, &c, part, &p, Some(&Func::constant(1, 1.0)), None, &q);
        assert!(matches!(r, Err(Error::ConstructionInvalid { .. })));
    }
}
