//! Evaluable real functions on `[0,1]^K`.
//!
//! Every nuisance function, weight and perturbation in the crate is a [`Func`]:
//! a shared closure plus per-axis *knots*, the coordinates where the function may
//! jump or change its polynomial piece. Quadrature splits integration cells at the
//! knots, which is what makes integrals of piecewise inputs exact.

use std::fmt;
use std::sync::Arc;

/// How a function was built. Composition keeps the tag when it can.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Representation {
    Analytic,
    /// Constant on each cell of a dyadic tensor grid with `res` cells per axis.
    PiecewiseConstant { res: usize },
    PiecewiseLinear,
}

type EvalFn = dyn Fn(&[f64]) -> f64 + Send + Sync;

#[derive(Clone)]
pub struct Func {
    dim: usize,
    repr: Representation,
    eval: Arc<EvalFn>,
    knots: Arc<Vec<Vec<f64>>>,
}

impl fmt::Debug for Func {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Func")
            .field("dim", &self.dim)
            .field("repr", &self.repr)
            .field("knots", &self.knots.iter().map(Vec::len).collect::<Vec<_>>())
            .finish()
    }
}

impl Func {
    /// A closed-form function without interior knots.
    pub fn new(dim: usize, f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        assert!((1..=3).contains(&dim), "dimension must be 1, 2 or 3");
        Func {
            dim,
            repr: Representation::Analytic,
            eval: Arc::new(f),
            knots: Arc::new(vec![Vec::new(); dim]),
        }
    }

    pub fn constant(dim: usize, value: f64) -> Self {
        let mut f = Func::new(dim, move |_| value);
        f.repr = Representation::PiecewiseConstant { res: 1 };
        f
    }

    /// Piecewise constant on the `res^dim` tensor grid. `values` is indexed
    /// lexicographically with axis 0 most significant (see [`grid_index`]).
    pub fn grid(dim: usize, res: usize, values: Vec<f64>) -> Self {
        assert!(res >= 1);
        assert_eq!(values.len(), res.pow(dim as u32), "grid value count");
        let values = Arc::new(values);
        let knots: Vec<f64> = (0..=res).map(|j| j as f64 / res as f64).collect();
        let mut f = Func::new(dim, move |x| values[grid_index(x, res)]);
        f.repr = Representation::PiecewiseConstant { res };
        f.knots = Arc::new(vec![knots; dim]);
        f
    }

    /// Continuous piecewise-linear interpolant on `[0,1]` (K = 1). `nodes` must be
    /// strictly increasing with `nodes[0] = 0` and last node `1`.
    pub fn piecewise_linear(nodes: Vec<f64>, values: Vec<f64>) -> Self {
        assert_eq!(nodes.len(), values.len());
        assert!(nodes.len() >= 2);
        assert!(nodes.windows(2).all(|w| w[0] < w[1]), "nodes must increase");
        let ns = Arc::new(nodes.clone());
        let vs = Arc::new(values);
        let mut f = Func::new(1, move |x| {
            let t = x[0].clamp(ns[0], ns[ns.len() - 1]);
            let i = match ns.partition_point(|&v| v <= t) {
                0 => 0,
                p if p >= ns.len() => ns.len() - 2,
                p => p - 1,
            };
            let (a, b) = (ns[i], ns[i + 1]);
            let s = (t - a) / (b - a);
            vs[i] * (1.0 - s) + vs[i + 1] * s
        });
        f.repr = Representation::PiecewiseLinear;
        f.knots = Arc::new(vec![nodes]);
        f
    }

    /// `(-1)^(i_0 + ... + i_{K-1})` on the dyadic grid with `2^levels` cells per axis.
    pub fn checkerboard(dim: usize, levels: u32) -> Self {
        let res = 1usize << levels;
        let n = res.pow(dim as u32);
        let values = (0..n)
            .map(|idx| {
                let mut rem = idx;
                let mut parity = 0;
                for _ in 0..dim {
                    parity += rem % res;
                    rem /= res;
                }
                if parity % 2 == 0 {
                    1.0
                } else {
                    -1.0
                }
            })
            .collect();
        Func::grid(dim, res, values)
    }

    /// Adds interior knots (e.g. the boundaries of a partition the function depends on).
    pub fn with_knots(mut self, extra: &[Vec<f64>]) -> Self {
        assert_eq!(extra.len(), self.dim);
        let merged = self
            .knots
            .iter()
            .zip(extra)
            .map(|(a, b)| merge_sorted(a, b))
            .collect();
        self.knots = Arc::new(merged);
        self
    }

    pub fn with_representation(mut self, repr: Representation) -> Self {
        self.repr = repr;
        self
    }

    #[inline]
    pub fn eval(&self, x: &[f64]) -> f64 {
        (self.eval)(x)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn representation(&self) -> Representation {
        self.repr
    }

    pub fn knots(&self) -> &[Vec<f64>] {
        &self.knots
    }

    pub fn map(&self, op: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Func {
        let inner = self.clone();
        let repr = match self.repr {
            Representation::PiecewiseConstant { res } => Representation::PiecewiseConstant { res },
            _ => Representation::Analytic,
        };
        Func {
            dim: self.dim,
            repr,
            eval: Arc::new(move |x| op(inner.eval(x))),
            knots: self.knots.clone(),
        }
    }

    pub fn zip(&self, other: &Func, op: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Func {
        assert_eq!(self.dim, other.dim, "dimension mismatch");
        let (a, b) = (self.clone(), other.clone());
        let repr = match (self.repr, other.repr) {
            (
                Representation::PiecewiseConstant { res: r1 },
                Representation::PiecewiseConstant { res: r2 },
            ) if r1.max(r2) % r1.min(r2) == 0 => Representation::PiecewiseConstant { res: r1.max(r2) },
            _ => Representation::Analytic,
        };
        let knots = self
            .knots
            .iter()
            .zip(other.knots.iter())
            .map(|(p, q)| merge_sorted(p, q))
            .collect();
        Func {
            dim: self.dim,
            repr,
            eval: Arc::new(move |x| op(a.eval(x), b.eval(x))),
            knots: Arc::new(knots),
        }
    }

    pub fn add(&self, other: &Func) -> Func {
        self.zip(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Func) -> Func {
        self.zip(other, |a, b| a - b)
    }

    pub fn mul(&self, other: &Func) -> Func {
        self.zip(other, |a, b| a * b)
    }

    pub fn scale(&self, k: f64) -> Func {
        self.map(move |v| k * v)
    }

    pub fn neg(&self) -> Func {
        self.map(|v| -v)
    }
}

/// Lexicographic cell index of `x` on the `res^K` grid, axis 0 most significant.
/// Points on the upper face belong to the last cell.
#[inline]
pub fn grid_index(x: &[f64], res: usize) -> usize {
    x.iter().fold(0usize, |acc, &xi| {
        let i = ((xi * res as f64).floor() as isize).clamp(0, res as isize - 1) as usize;
        acc * res + i
    })
}

pub(crate) fn merge_sorted(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        let v = if j >= b.len() || (i < a.len() && a[i] <= b[j]) {
            i += 1;
            a[i - 1]
        } else {
            j += 1;
            b[j - 1]
        };
        if out.last() != Some(&v) {
            out.push(v);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_lookup_is_lexicographic() {
        let f = Func::grid(2, 2, vec![0.0, 1.0, 2.0, 3.0]);
        assert_eq!(f.eval(&[0.1, 0.1]), 0.0);
        assert_eq!(f.eval(&[0.1, 0.9]), 1.0);
        assert_eq!(f.eval(&[0.9, 0.1]), 2.0);
        assert_eq!(f.eval(&[1.0, 1.0]), 3.0);
    }

    #[test]
    fn piecewise_linear_interpolates() {
        let f = Func::piecewise_linear(vec![0.0, 0.5, 1.0], vec![0.0, 1.0, 0.0]);
        assert!((f.eval(&[0.25]) - 0.5).abs() < 1e-15);
        assert!((f.eval(&[0.75]) - 0.5).abs() < 1e-15);
        assert_eq!(f.eval(&[1.0]), 0.0);
    }

    #[test]
    fn checkerboard_alternates() {
        let f = Func::checkerboard(1, 2);
        let v: Vec<f64> = [0.1, 0.3, 0.6, 0.9].iter().map(|&x| f.eval(&[x])).collect();
        assert_eq!(v, vec![1.0, -1.0, 1.0, -1.0]);
    }

    #[test]
    fn zip_merges_knots_and_keeps_grid_tag() {
        let a = Func::grid(1, 2, vec![1.0, 2.0]);
        let b = Func::grid(1, 4, vec![1.0, 1.0, 3.0, 3.0]);
        let c = a.mul(&b);
        assert_eq!(c.representation(), Representation::PiecewiseConstant { res: 4 });
        assert_eq!(c.knots()[0], vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(c.eval(&[0.8]), 6.0);
    }
}
