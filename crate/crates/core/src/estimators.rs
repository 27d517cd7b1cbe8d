//! Plug-in and doubly robust estimators of WATE and ATT.
//!
//! Nuisance estimates are assumed to come from data independent of `data`,
//! so there is no internal sample splitting.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::func::Func;
use crate::model::{Dataset, NuisancePair};
use crate::sum::CompensatedSum;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EstimateResult {
    pub value: f64,
    pub n_used: usize,
    /// Mean of the inverse-propensity factor magnitude (0 for plug-in estimators).
    pub mean_ipw: f64,
    pub treated: usize,
}

fn nonempty(data: &Dataset) -> Result<()> {
    if data.is_empty() {
        Err(Error::invalid("empty dataset"))
    } else {
        Ok(())
    }
}

fn treated(data: &Dataset) -> Result<usize> {
    let t = data.d.iter().filter(|&&d| d == 1).count();
    if t == 0 {
        Err(Error::NoTreated)
    } else {
        Ok(t)
    }
}

/// `(1/n) Σ w(X)(ĝ(1,X) − ĝ(0,X))`.
pub fn plug_in_wate(data: &Dataset, hat: &NuisancePair, w: &Func) -> Result<EstimateResult> {
    nonempty(data)?;
    let mut s = CompensatedSum::new();
    for i in 0..data.len() {
        let x = data.x(i);
        s.add(w.eval(x) * (hat.g1.eval(x) - hat.g0.eval(x)));
    }
    Ok(EstimateResult {
        value: s.value() / data.len() as f64,
        n_used: data.len(),
        mean_ipw: 0.0,
        treated: data.d.iter().filter(|&&d| d == 1).count(),
    })
}

/// Augmented inverse-propensity-weighted estimator of `E[w(g(1,X) − g(0,X))]`.
pub fn dr_wate(data: &Dataset, hat: &NuisancePair, w: &Func) -> Result<EstimateResult> {
    nonempty(data)?;
    let mut s = CompensatedSum::new();
    let mut ipw = CompensatedSum::new();
    let mut t = 0;
    for i in 0..data.len() {
        let x = data.x(i);
        let m = hat.m.eval(x);
        if !(m > 0.0 && m < 1.0) {
            return Err(Error::OverlapViolation { row: i, value: m });
        }
        let (g0, g1) = (hat.g0.eval(x), hat.g1.eval(x));
        let d = data.d[i];
        t += d as usize;
        let gd = if d == 1 { g1 } else { g0 };
        let factor = (f64::from(d) - m) / (m * (1.0 - m));
        ipw.add(factor.abs());
        s.add(w.eval(x) * (g1 - g0 + factor * (f64::from(data.y[i]) - gd)));
    }
    let n = data.len() as f64;
    Ok(EstimateResult {
        value: s.value() / n,
        n_used: data.len(),
        mean_ipw: ipw.value() / n,
        treated: t,
    })
}

/// Treated-sample mean of `Y − ĝ(0,X)`.
pub fn plug_in_att(data: &Dataset, hat: &NuisancePair) -> Result<EstimateResult> {
    let t = treated(data)?;
    let mut s = CompensatedSum::new();
    for i in 0..data.len() {
        if data.d[i] == 1 {
            s.add(f64::from(data.y[i]) - hat.g0.eval(data.x(i)));
        }
    }
    Ok(EstimateResult {
        value: s.value() / t as f64,
        n_used: data.len(),
        mean_ipw: 0.0,
        treated: t,
    })
}

/// `(Σ D)^{-1} Σ [D(Y − ĝ(0,X)) − m̂/(1−m̂)·(1−D)(Y − ĝ(0,X))]`.
pub fn dr_att(data: &Dataset, hat: &NuisancePair) -> Result<EstimateResult> {
    let t = treated(data)?;
    let mut s = CompensatedSum::new();
    let mut ipw = CompensatedSum::new();
    for i in 0..data.len() {
        let x = data.x(i);
        let resid = f64::from(data.y[i]) - hat.g0.eval(x);
        if data.d[i] == 1 {
            s.add(resid);
        } else {
            let m = hat.m.eval(x);
            if !(m < 1.0) {
                return Err(Error::OverlapViolation { row: i, value: m });
            }
            let odds = m / (1.0 - m);
            ipw.add(odds.abs());
            s.add(-odds * resid);
        }
    }
    Ok(EstimateResult {
        value: s.value() / t as f64,
        n_used: data.len(),
        mean_ipw: ipw.value() / data.len() as f64,
        treated: t,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pair(m: f64, g0: f64, g1: f64) -> NuisancePair {
        NuisancePair::constant(1, m, g0, g1, 0.1).unwrap()
    }

    #[test]
    fn dr_wate_single_row() {
        let data = Dataset::from_rows(1, &[(vec![0.5], 1, 1)]).unwrap();
        let r = dr_wate(&data, &pair(0.5, 0.2, 0.6), &Func::constant(1, 1.0)).unwrap();
        assert!((r.value - 1.2).abs() < 1e-15);
    }

    #[test]
    fn plug_in_wate_hand_mean() {
        let data = Dataset::from_rows(1, &[(vec![0.25], 0, 0), (vec![0.75], 1, 1)]).unwrap();
        let g1 = Func::grid(1, 2, vec![0.4, 0.8]);
        let hat = NuisancePair::new(Func::constant(1, 0.5), Func::constant(1, 0.2), g1, 0.1).unwrap();
        let r = plug_in_wate(&data, &hat, &Func::constant(1, 1.0)).unwrap();
        assert!((r.value - 0.4).abs() < 1e-15);
        let zero = plug_in_wate(&data, &hat, &Func::constant(1, 0.0)).unwrap();
        assert_eq!(zero.value, 0.0);
    }

    #[test]
    fn att_examples() {
        let data = Dataset::from_rows(1, &[(vec![0.2], 1, 1), (vec![0.7], 0, 0)]).unwrap();
        assert!((plug_in_att(&data, &pair(0.5, 0.3, 0.5)).unwrap().value - 0.7).abs() < 1e-15);
        let g0 = Func::grid(1, 2, vec![0.3, 0.4]);
        let hat = NuisancePair::new(Func::constant(1, 0.5), g0, Func::constant(1, 0.5), 0.1).unwrap();
        assert!((dr_att(&data, &hat).unwrap().value - 1.1).abs() < 1e-15);
        let none = Dataset::from_rows(1, &[(vec![0.2], 0, 1)]).unwrap();
        assert_eq!(plug_in_att(&none, &hat), Err(Error::NoTreated));
    }

    #[test]
    fn overlap_violation() {
        let data = Dataset::from_rows(1, &[(vec![0.2], 0, 1)]).unwrap();
        assert!(matches!(
            dr_wate(&data, &pair(1.0, 0.3, 0.5), &Func::constant(1, 1.0)),
            Err(Error::OverlapViolation { row: 0, .. })
        ));
    }
}
