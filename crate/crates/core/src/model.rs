//! Binary-outcome data-generating processes.
//!
//! A process is a [`NuisancePair`]: propensity `m(x) = P[D=1 | X=x]` and outcome
//! regression `g(d,x) = P[Y=1 | D=d, X=x]`, with `X ~ Uniform[0,1]^K`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::func::{merge_sorted, Func};
use crate::quadrature::{Nodes, Quadrature};
use crate::rng::stream_rng;

#[derive(Clone, Debug)]
pub struct NuisancePair {
    pub m: Func,
    pub g0: Func,
    pub g1: Func,
    /// Overlap constant.
    pub c: f64,
}

impl NuisancePair {
    pub fn new(m: Func, g0: Func, g1: Func, c: f64) -> Result<Self> {
        if m.dim() != g0.dim() || m.dim() != g1.dim() {
            return Err(Error::invalid("m, g0 and g1 must share a dimension"));
        }
        if !(c > 0.0 && c < 0.5) {
            return Err(Error::invalid(format!("overlap constant c = {c} must lie in (0, 1/2)")));
        }
        Ok(NuisancePair { m, g0, g1, c })
    }

    pub fn constant(dim: usize, m: f64, g0: f64, g1: f64, c: f64) -> Result<Self> {
        NuisancePair::new(
            Func::constant(dim, m),
            Func::constant(dim, g0),
            Func::constant(dim, g1),
            c,
        )
    }

    pub fn dim(&self) -> usize {
        self.m.dim()
    }

    #[inline]
    pub fn g(&self, d: u8, x: &[f64]) -> f64 {
        if d == 1 {
            self.g1.eval(x)
        } else {
            self.g0.eval(x)
        }
    }

    /// Union of the knots of all three functions.
    pub fn knots(&self) -> Vec<Vec<f64>> {
        (0..self.dim())
            .map(|a| {
                let k = merge_sorted(&self.m.knots()[a], &self.g0.knots()[a]);
                merge_sorted(&k, &self.g1.knots()[a])
            })
            .collect()
    }

    pub fn nodes(&self, quad: &Quadrature) -> Nodes {
        quad.unit_nodes(self.dim(), &self.knots())
    }

    /// `0 <= m, g <= 1` at every quadrature node.
    pub fn check_range(&self, quad: &Quadrature) -> Result<()> {
        for (x, _, _) in self.nodes(quad).iter() {
            for (what, v) in [("m", self.m.eval(x)), ("g(0,x)", self.g0.eval(x)), ("g(1,x)", self.g1.eval(x))] {
                if !(0.0..=1.0).contains(&v) {
                    return Err(Error::ConstructionInvalid {
                        what: what.into(),
                        point: x.to_vec(),
                        value: v,
                    });
                }
            }
        }
        Ok(())
    }

    /// `c <= m, g <= 1 - c` at every quadrature node.
    pub fn is_bounded(&self, quad: &Quadrature) -> bool {
        let (lo, hi) = (self.c, 1.0 - self.c);
        self.nodes(quad).iter().all(|(x, _, _)| {
            [self.m.eval(x), self.g0.eval(x), self.g1.eval(x)]
                .iter()
                .all(|v| (lo..=hi).contains(v))
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FunctionalKind {
    Wate,
    Att,
}

#[derive(Clone, Debug)]
pub struct FunctionalSpec {
    pub kind: FunctionalKind,
    pub w: Option<Func>,
}

impl FunctionalSpec {
    pub fn wate(w: Func) -> Self {
        FunctionalSpec { kind: FunctionalKind::Wate, w: Some(w) }
    }

    pub fn att() -> Self {
        FunctionalSpec { kind: FunctionalKind::Att, w: None }
    }

    pub fn truth(&self, pair: &NuisancePair, quad: &Quadrature) -> Result<f64> {
        match (&self.kind, &self.w) {
            (FunctionalKind::Wate, Some(w)) => true_wate(pair, w, quad),
            (FunctionalKind::Wate, None) => Err(Error::invalid("WATE needs a weight function")),
            (FunctionalKind::Att, _) => true_att(pair, quad),
        }
    }
}

/// Rows stored column-wise; `x` is flattened with stride `dim`.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub dim: usize,
    pub x: Vec<f64>,
    pub d: Vec<u8>,
    pub y: Vec<u8>,
    pub seed: u64,
}

impl Dataset {
    pub fn from_rows(dim: usize, rows: &[(Vec<f64>, u8, u8)]) -> Result<Self> {
        let mut x = Vec::with_capacity(rows.len() * dim);
        let mut d = Vec::with_capacity(rows.len());
        let mut y = Vec::with_capacity(rows.len());
        for (xi, di, yi) in rows {
            if xi.len() != dim || xi.iter().any(|v| !(0.0..=1.0).contains(v)) {
                return Err(Error::invalid(format!("covariate {xi:?} outside [0,1]^{dim}")));
            }
            if *di > 1 || *yi > 1 {
                return Err(Error::invalid("d and y must be 0 or 1"));
            }
            x.extend_from_slice(xi);
            d.push(*di);
            y.push(*yi);
        }
        Ok(Dataset { dim, x, d, y, seed: 0 })
    }

    pub fn len(&self) -> usize {
        self.d.len()
    }

    pub fn is_empty(&self) -> bool {
        self.d.is_empty()
    }

    #[inline]
    pub fn x(&self, i: usize) -> &[f64] {
        &self.x[i * self.dim..(i + 1) * self.dim]
    }
}

/// Draws `n` i.i.d. rows. Identical `(pair, n, seed)` give identical data.
pub fn sample_dataset(pair: &NuisancePair, n: usize, seed: u64) -> Result<Dataset> {
    sample_dataset_stream(pair, n, seed, 0)
}

/// Like [`sample_dataset`] but on an explicit replication stream.
pub fn sample_dataset_stream(pair: &NuisancePair, n: usize, seed: u64, stream: u64) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::invalid("n must be positive"));
    }
    let dim = pair.dim();
    let mut rng = stream_rng(seed, stream);
    let mut data = Dataset {
        dim,
        x: Vec::with_capacity(n * dim),
        d: Vec::with_capacity(n),
        y: Vec::with_capacity(n),
        seed,
    };
    let mut x = vec![0.0; dim];
    for _ in 0..n {
        for v in x.iter_mut() {
            *v = rng.random::<f64>();
        }
        let m = checked("m", &x, pair.m.eval(&x))?;
        let d = u8::from(rng.random::<f64>() < m);
        let g = checked(if d == 1 { "g(1,x)" } else { "g(0,x)" }, &x, pair.g(d, &x))?;
        let y = u8::from(rng.random::<f64>() < g);
        data.x.extend_from_slice(&x);
        data.d.push(d);
        data.y.push(y);
    }
    Ok(data)
}

fn checked(what: &str, x: &[f64], v: f64) -> Result<f64> {
    if (0.0..=1.0).contains(&v) {
        Ok(v)
    } else {
        Err(Error::ConstructionInvalid {
            what: what.into(),
            point: x.to_vec(),
            value: v,
        })
    }
}

/// Joint density of `(x, d, y)` with respect to Lebesgue x counting measure.
#[inline]
pub fn density(pair: &NuisancePair, x: &[f64], d: u8, y: u8) -> f64 {
    density_from(pair.m.eval(x), pair.g(d, x), d, y)
}

#[inline]
pub fn density_from(m: f64, g: f64, d: u8, y: u8) -> f64 {
    let pd = if d == 1 { m } else { 1.0 - m };
    let py = if y == 1 { g } else { 1.0 - g };
    pd * py
}

/// `E[w(X)(g(1,X) - g(0,X))]`.
pub fn true_wate(pair: &NuisancePair, w: &Func, quad: &Quadrature) -> Result<f64> {
    quad.validate()?;
    let knots: Vec<Vec<f64>> = pair
        .knots()
        .iter()
        .zip(w.knots())
        .map(|(a, b)| merge_sorted(a, b))
        .collect();
    let nodes = quad.unit_nodes(pair.dim(), &knots);
    Ok(nodes.integrate(|x| w.eval(x) * (pair.g1.eval(x) - pair.g0.eval(x))))
}

/// `E[(g(1,X) - g(0,X)) m(X)] / E[m(X)]`.
pub fn true_att(pair: &NuisancePair, quad: &Quadrature) -> Result<f64> {
    quad.validate()?;
    let nodes = pair.nodes(quad);
    let num = nodes.integrate(|x| (pair.g1.eval(x) - pair.g0.eval(x)) * pair.m.eval(x));
    let den = nodes.integrate(|x| pair.m.eval(x));
    if den < 1e-12 {
        return Err(Error::DegeneratePropensity(den));
    }
    Ok(num / den)
}
