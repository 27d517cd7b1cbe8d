//! Tensor-product quadrature over hyperrectangles in `[0,1]^K`.
//!
//! Each box is cut along every axis at the dyadic grid lines `j / res` and at
//! the knots of the integrand, then a fixed rule is applied on every piece.
//! Piecewise-constant integrands are integrated exactly by the midpoint rule;
//! an `n`-point Gauss–Legendre rule is exact for piecewise polynomials of degree
//! below `2n`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::func::Func;
use crate::sum::CompensatedSum;

/// Axis-aligned closed box `[lo_0, hi_0] x ... x [lo_{K-1}, hi_{K-1}]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl Rect {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Self {
        assert_eq!(lo.len(), hi.len());
        Rect { lo, hi }
    }

    pub fn unit(dim: usize) -> Self {
        Rect::new(vec![0.0; dim], vec![1.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn measure(&self) -> f64 {
        self.lo.iter().zip(&self.hi).map(|(a, b)| (b - a).max(0.0)).product()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(&v, (&a, &b))| a <= v && v <= b)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Rule {
    Midpoint,
    /// Gauss–Legendre with 1 to 4 points per axis and piece.
    GaussLegendre(u8),
}

impl Rule {
    fn reference(self) -> &'static [(f64, f64)] {
        // (node on [-1, 1], weight)
        const G1: [(f64, f64); 1] = [(0.0, 2.0)];
        const G2: [(f64, f64); 2] = [(-0.577_350_269_189_625_8, 1.0), (0.577_350_269_189_625_8, 1.0)];
        const G3: [(f64, f64); 3] = [
            (-0.774_596_669_241_483_4, 0.555_555_555_555_555_6),
            (0.0, 0.888_888_888_888_888_9),
            (0.774_596_669_241_483_4, 0.555_555_555_555_555_6),
        ];
        const G4: [(f64, f64); 4] = [
            (-0.861_136_311_594_052_6, 0.347_854_845_137_453_9),
            (-0.339_981_043_584_856_3, 0.652_145_154_862_546_1),
            (0.339_981_043_584_856_3, 0.652_145_154_862_546_1),
            (0.861_136_311_594_052_6, 0.347_854_845_137_453_9),
        ];
        match self {
            Rule::Midpoint | Rule::GaussLegendre(1) => &G1,
            Rule::GaussLegendre(2) => &G2,
            Rule::GaussLegendre(3) => &G3,
            Rule::GaussLegendre(_) => &G4,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Quadrature {
    /// Dyadic grid lines per axis at which every box is cut.
    pub res: usize,
    pub rule: Rule,
}

impl Quadrature {
    pub fn new(res: usize, rule: Rule) -> Result<Self> {
        let q = Quadrature { res, rule };
        q.validate()?;
        Ok(q)
    }

    pub fn midpoint(res: usize) -> Result<Self> {
        Quadrature::new(res, Rule::Midpoint)
    }

    /// Midpoint rule with `2^10` cells per axis for K = 1, `2^5` for K = 2, `2^4` for K = 3.
    pub fn default_for(dim: usize) -> Self {
        let res = match dim {
            1 => 1 << 10,
            2 => 1 << 5,
            _ => 1 << 4,
        };
        Quadrature { res, rule: Rule::Midpoint }
    }

    pub fn validate(&self) -> Result<()> {
        if self.res == 0 {
            return Err(Error::invalid("quadrature resolution must be positive"));
        }
        if let Rule::GaussLegendre(n) = self.rule {
            if !(1..=4).contains(&n) {
                return Err(Error::invalid("Gauss-Legendre order must be 1..=4"));
            }
        }
        Ok(())
    }

    /// Quadrature nodes over `boxes`; `owner[i]` is the index of the box node `i` lies in.
    pub fn nodes(&self, boxes: &[Rect], knots: &[Vec<f64>]) -> Nodes {
        let dim = boxes.first().map_or(knots.len(), Rect::dim);
        let mut nodes = Nodes {
            dim,
            points: Vec::new(),
            weights: Vec::new(),
            owner: Vec::new(),
        };
        for (bi, b) in boxes.iter().enumerate() {
            self.push_box_nodes(b, knots, bi, &mut nodes);
        }
        nodes
    }

    pub fn unit_nodes(&self, dim: usize, knots: &[Vec<f64>]) -> Nodes {
        self.nodes(&[Rect::unit(dim)], knots)
    }

    /// `∫_{[0,1]^K} f dx`.
    pub fn integrate(&self, f: &Func) -> f64 {
        self.unit_nodes(f.dim(), f.knots()).integrate(|x| f.eval(x))
    }

    /// Integral of `f` over one box, cut at `knots`.
    pub fn integrate_box(&self, b: &Rect, knots: &[Vec<f64>], f: impl Fn(&[f64]) -> f64) -> f64 {
        self.nodes(std::slice::from_ref(b), knots).integrate(f)
    }

    fn push_box_nodes(&self, b: &Rect, knots: &[Vec<f64>], owner: usize, out: &mut Nodes) {
        let dim = b.dim();
        let reference = self.rule.reference();
        let axes: Vec<Vec<(f64, f64)>> = (0..dim)
            .map(|a| {
                let empty = Vec::new();
                let axis_knots = knots.get(a).unwrap_or(&empty);
                let cuts = breakpoints(b.lo[a], b.hi[a], self.res, axis_knots);
                let mut pts = Vec::with_capacity((cuts.len() - 1) * reference.len());
                for w in cuts.windows(2) {
                    let (lo, hi) = (w[0], w[1]);
                    let half = 0.5 * (hi - lo);
                    if half <= 0.0 {
                        continue;
                    }
                    let mid = 0.5 * (lo + hi);
                    for &(t, wt) in reference {
                        pts.push((mid + half * t, half * wt));
                    }
                }
                pts
            })
            .collect();
        if axes.iter().any(Vec::is_empty) {
            return;
        }
        let mut idx = vec![0usize; dim];
        loop {
            let mut w = 1.0;
            for a in 0..dim {
                let (p, wt) = axes[a][idx[a]];
                out.points.push(p);
                w *= wt;
            }
            out.weights.push(w);
            out.owner.push(owner);
            // odometer increment, last axis fastest
            let mut a = dim;
            loop {
                if a == 0 {
                    return;
                }
                a -= 1;
                idx[a] += 1;
                if idx[a] < axes[a].len() {
                    break;
                }
                idx[a] = 0;
            }
        }
    }
}

fn breakpoints(a: f64, b: f64, res: usize, knots: &[f64]) -> Vec<f64> {
    let mut cuts = vec![a];
    if b > a {
        let r = res as f64;
        let first = (a * r).floor() as i64 + 1;
        let last = (b * r).ceil() as i64 - 1;
        let grid = (first..=last).map(|j| j as f64 / r).filter(|&v| v > a && v < b);
        let lo = knots.partition_point(|&k| k <= a);
        let hi = knots.partition_point(|&k| k < b);
        let inner = &knots[lo..hi.max(lo)];
        let mut g = grid.peekable();
        let mut k = inner.iter().copied().peekable();
        loop {
            let next = match (g.peek(), k.peek()) {
                (Some(&x), Some(&y)) => {
                    if x <= y {
                        g.next()
                    } else {
                        k.next()
                    }
                }
                (Some(_), None) => g.next(),
                (None, Some(_)) => k.next(),
                (None, None) => break,
            };
            let v = next.expect("peeked");
            if v > *cuts.last().expect("non-empty") {
                cuts.push(v);
            }
        }
    }
    cuts.push(b);
    cuts
}

/// Flattened quadrature nodes with weights (which sum to the covered measure).
#[derive(Clone, Debug)]
pub struct Nodes {
    dim: usize,
    points: Vec<f64>,
    weights: Vec<f64>,
    owner: Vec<usize>,
}

impl Nodes {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    #[inline]
    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    #[inline]
    pub fn owner(&self, i: usize) -> usize {
        self.owner[i]
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[f64], f64, usize)> + '_ {
        (0..self.len()).map(move |i| (self.point(i), self.weights[i], self.owner[i]))
    }

    pub fn integrate(&self, f: impl Fn(&[f64]) -> f64) -> f64 {
        let mut s = CompensatedSum::new();
        for (x, w, _) in self.iter() {
            s.add(w * f(x));
        }
        s.value()
    }

    pub fn sup_abs(&self, f: impl Fn(&[f64]) -> f64) -> f64 {
        self.iter().map(|(x, _, _)| f(x).abs()).fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn midpoint_exact_on_grid_functions() {
        let f = Func::grid(1, 4, vec![1.0, 2.0, 3.0, 4.0]);
        let q = Quadrature::midpoint(3).unwrap();
        assert!((q.integrate(&f) - 2.5).abs() < 1e-15);
    }

    #[test]
    fn gauss_exact_for_cubic_over_knotted_box() {
        let q = Quadrature::new(1, Rule::GaussLegendre(2)).unwrap();
        let b = Rect::new(vec![0.1], vec![0.7]);
        let v = q.integrate_box(&b, &[vec![0.3]], |x| x[0].powi(3));
        let exact = (0.7f64.powi(4) - 0.1f64.powi(4)) / 4.0;
        assert!((v - exact).abs() < 1e-15);
    }

    #[test]
    fn weights_sum_to_measure_in_3d() {
        let q = Quadrature::default_for(3);
        let n = q.nodes(&[Rect::new(vec![0.0, 0.2, 0.5], vec![0.5, 0.9, 0.75])], &[vec![], vec![0.33], vec![]]);
        let total: f64 = n.iter().map(|(_, w, _)| w).sum();
        assert!((total - 0.5 * 0.7 * 0.25).abs() < 1e-14);
    }

    #[test]
    fn zero_resolution_rejected() {
        assert!(Quadrature::midpoint(0).is_err());
    }
}
