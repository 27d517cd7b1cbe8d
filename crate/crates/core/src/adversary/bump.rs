//! Rademacher signs, the bump `Δ(λ,x)` and the truncated weight `ŵ`.

use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::func::Func;
use crate::quadrature::Quadrature;
use crate::rng::stream_rng;

use super::partition::Partition;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RademacherAssignment {
    pub lambda: Vec<i8>,
    pub seed: u64,
}

impl RademacherAssignment {
    pub fn new(lambda: Vec<i8>) -> Result<Self> {
        if lambda.iter().any(|&s| s != 1 && s != -1) {
            return Err(Error::invalid("Rademacher signs must be +1 or -1"));
        }
        Ok(RademacherAssignment { lambda, seed: 0 })
    }

    /// `len` i.i.d. signs from stream `stream` of `seed`.
    pub fn random(len: usize, seed: u64, stream: u64) -> Self {
        let mut rng = stream_rng(seed, stream);
        let lambda = (0..len).map(|_| if rng.random::<bool>() { 1 } else { -1 }).collect();
        RademacherAssignment { lambda, seed }
    }

    pub fn all_plus(len: usize) -> Self {
        RademacherAssignment { lambda: vec![1; len], seed: 0 }
    }
}

/// Sign of cell `i` (0-based) inside its pair: `+1` for `B_{2j}`, `−1` for `B_{2j−1}`.
#[inline]
pub fn cell_sign(i: usize) -> f64 {
    if i % 2 == 1 {
        1.0
    } else {
        -1.0
    }
}

/// `Δ(λ, x) = Σ_j λ_j (1{x ∈ B_{2j}} − 1{x ∈ B_{2j−1}})`.
pub fn bump(assignment: &RademacherAssignment, partition: &Partition, x: &[f64]) -> f64 {
    let i = partition.locate(x);
    f64::from(assignment.lambda[i / 2]) * cell_sign(i)
}

/// `Δ(λ, ·)` as a function with the partition boundaries as knots.
pub fn bump_func(assignment: &RademacherAssignment, partition: Arc<Partition>) -> Func {
    assert_eq!(assignment.lambda.len() * 2, partition.len(), "λ must have M/2 entries");
    let knots = partition.knots();
    let lambda = Arc::new(assignment.lambda.clone());
    let p = partition.clone();
    Func::new(partition.dim(), move |x| {
        let i = p.locate(x);
        f64::from(lambda[i / 2]) * cell_sign(i)
    })
    .with_knots(&knots)
}

/// Supremum of `|w|` over the quadrature nodes and the grid vertices `j/res`,
/// plus both sides of every knot when K = 1.
pub fn sup_norm(w: &Func, quad: &Quadrature) -> f64 {
    let mut s = quad.unit_nodes(w.dim(), w.knots()).sup_abs(|x| w.eval(x));
    let dim = w.dim();
    let side = quad.res + 1;
    let mut x = vec![0.0; dim];
    for idx in 0..side.pow(dim as u32) {
        let mut rem = idx;
        for v in x.iter_mut() {
            *v = (rem % side) as f64 / quad.res as f64;
            rem /= side;
        }
        s = s.max(w.eval(&x).abs());
    }
    if dim == 1 {
        for &k in &w.knots()[0] {
            for t in [k - 1e-12, k, k + 1e-12] {
                if (0.0..=1.0).contains(&t) {
                    s = s.max(w.eval(&[t]).abs());
                }
            }
        }
    }
    s
}

/// Returns `w` itself when `P[w > ‖w‖∞/2] > 0` on the grid, otherwise `−w`.
pub fn orient_weight(w: &Func, quad: &Quadrature) -> Result<(Func, f64)> {
    let sup = sup_norm(w, quad);
    if !(sup > 0.0) {
        return Err(Error::invalid("weight must have a positive sup-norm"));
    }
    let nodes = quad.unit_nodes(w.dim(), w.knots());
    let positive = nodes.integrate(|x| f64::from(u8::from(w.eval(x) > sup / 2.0)));
    if positive > 0.0 {
        Ok((w.clone(), 1.0))
    } else {
        Ok((w.neg(), -1.0))
    }
}

/// `ŵ(x) = w(x)·1{w(x) > ‖w‖∞/2}`. For K = 1 the threshold crossings become knots.
pub fn truncate_weight(w: &Func, quad: &Quadrature) -> Result<Func> {
    let sup = sup_norm(w, quad);
    if !(sup > 0.0) {
        return Err(Error::invalid("weight must have a positive sup-norm"));
    }
    let thr = sup / 2.0;
    let extra = if w.dim() == 1 { threshold_crossings(w, thr, quad) } else { vec![Vec::new(); w.dim()] };
    let inner = w.clone();
    Ok(Func::new(w.dim(), move |x| {
        let v = inner.eval(x);
        if v > thr {
            v
        } else {
            0.0
        }
    })
    .with_knots(w.knots())
    .with_knots(&extra))
}

fn threshold_crossings(w: &Func, thr: f64, quad: &Quadrature) -> Vec<Vec<f64>> {
    let nodes = quad.unit_nodes(1, w.knots());
    let mut pts: Vec<f64> = nodes.iter().map(|(x, _, _)| x[0]).collect();
    pts.insert(0, 0.0);
    pts.push(1.0);
    let above = |t: f64| w.eval(&[t]) > thr;
    let mut out = Vec::new();
    for pair in pts.windows(2) {
        let (mut a, mut b) = (pair[0], pair[1]);
        let sa = above(a);
        if sa == above(b) {
            continue;
        }
        for _ in 0..64 {
            let mid = 0.5 * (a + b);
            if above(mid) == sa {
                a = mid;
            } else {
                b = mid;
            }
        }
        out.push(0.5 * (a + b));
    }
    vec![out]
}
