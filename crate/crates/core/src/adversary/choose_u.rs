//! The ATT auxiliary weight `u` and its grid-aligned partition.

use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::func::Func;
use crate::model::NuisancePair;
use crate::quadrature::{Quadrature, Rect};

use super::partition::{grid_cell, Partition};

#[derive(Clone, Debug)]
pub struct AttAuxiliary {
    /// Non-negative, constant on each partition cell.
    pub u: Func,
    /// `C_u = δ₀⁻¹(2 + |θ_ml|)`.
    pub big_c_u: f64,
    /// `c_u = 0.1(1 − α₀)`.
    pub c_u: f64,
    pub delta0: f64,
    /// `v = (1 − m̂)/m̂`.
    pub v: Func,
    pub theta_ml: f64,
    /// Grid fraction where `ĝ(1,·) − ĝ(0,·) = θ_ml`.
    pub alpha0: f64,
    /// Number of cells placed inside `E_{δ₀}`.
    pub m_alpha: usize,
    /// `+1` if the positive branch was used, `−1` for the mirrored one.
    pub branch: f64,
    pub partition: Arc<Partition>,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct AuxSummary {
    pub big_c_u: f64,
    pub c_u: f64,
    pub delta0: f64,
    pub theta_ml: f64,
    pub alpha0: f64,
    pub m_alpha: usize,
    pub branch: f64,
}

impl AttAuxiliary {
    pub fn summary(&self) -> AuxSummary {
        AuxSummary {
            big_c_u: self.big_c_u,
            c_u: self.c_u,
            delta0: self.delta0,
            theta_ml: self.theta_ml,
            alpha0: self.alpha0,
            m_alpha: self.m_alpha,
            branch: self.branch,
        }
    }
}

/// `θ_ml = E[m̂(ĝ(1,·) − ĝ(0,·))] / E[m̂]`.
pub fn theta_ml(center: &NuisancePair, quad: &Quadrature) -> Result<f64> {
    crate::model::true_att(center, quad)
}

const ZERO_TOL: f64 = 1e-12;
const DELTA_FLOOR: f64 = 1e-6;

/// Builds `u` on a fine grid of `res^K` cells, grouped into `m` cells of equal measure.
pub fn choose_u(center: &NuisancePair, m: usize, res: usize, quad: &Quadrature) -> Result<AttAuxiliary> {
    let dim = center.dim();
    let fine = res.pow(dim as u32);
    if m < 2 || m % 2 != 0 || fine % m != 0 {
        return Err(Error::invalid(format!("M = {m} must be even and divide the {fine} fine cells")));
    }
    let k = fine / m;
    let theta = theta_ml(center, quad)?;
    let h = center.g1.sub(&center.g0).map(move |v| v - theta);
    let v = center.m.map(|m| (1.0 - m) / m);
    let cells: Vec<Rect> = (0..fine).map(|i| grid_cell(dim, res, i)).collect();
    let mid: Vec<f64> = cells.iter().map(|c| h.eval(&centre(c))).collect();

    let alpha0 = mid.iter().filter(|v| v.abs() <= ZERO_TOL).count() as f64 / fine as f64;
    let lex = |i: usize| i / k;
    if alpha0 >= 1.0 - 1e-12 {
        let partition = Arc::new(Partition::from_grid(dim, res, (0..fine).map(lex).collect())?);
        return Ok(AttAuxiliary {
            u: Func::constant(dim, 1.0),
            big_c_u: 1.0,
            c_u: 1.0,
            delta0: 0.0,
            v,
            theta_ml: theta,
            alpha0,
            m_alpha: 0,
            branch: 1.0,
            partition,
        });
    }
    let m_alpha = 2 * ((1.0 - alpha0) * m as f64 / 6.0).floor() as usize;
    if m_alpha < 2 {
        return Err(Error::invalid(format!(
            "M = {m} too small: M_α = 2⌊(1−α)M/6⌋ = {m_alpha} < 2 with α = {alpha0}"
        )));
    }
    let positive = mid.iter().filter(|&&v| v > ZERO_TOL).count() as f64 / fine as f64;
    let branch = if positive >= (1.0 - alpha0) / 2.0 { 1.0 } else { -1.0 };
    // Conservative per-cell value: minimum over the centre and inward-pulled corners.
    let low: Vec<f64> = cells.iter().map(|c| probe_min(&h, c, branch)).collect();

    let needed = ((1.0 - alpha0) / 3.0 * fine as f64).ceil() as usize;
    let needed = needed.max(m_alpha * k);
    let mut delta = mid.iter().map(|v| branch * v).fold(f64::NEG_INFINITY, f64::max);
    let inside = loop {
        delta /= 2.0;
        if !(delta >= DELTA_FLOOR) {
            return Err(Error::DegenerateConstruction(format!(
                "no δ₀ >= {DELTA_FLOOR:e} with P[E_δ] >= (1−α)/3"
            )));
        }
        let inside: Vec<usize> = (0..fine).filter(|&i| low[i] > delta).collect();
        if inside.len() >= needed {
            break inside;
        }
    };

    let mut map = vec![usize::MAX; fine];
    for (pos, &i) in inside.iter().take(m_alpha * k).enumerate() {
        map[i] = pos / k;
    }
    let mut next = m_alpha * k;
    for slot in map.iter_mut() {
        if *slot == usize::MAX {
            *slot = next / k;
            next += 1;
        }
    }
    let partition = Arc::new(Partition::from_grid(dim, res, map.clone())?);

    let mut cell_int = vec![0.0; m_alpha];
    for (i, &c) in map.iter().enumerate() {
        if c < m_alpha {
            cell_int[c] += quad.integrate_box(&cells[i], h.knots(), |x| h.eval(x));
        }
    }
    let mut u_cell = vec![0.0; m];
    for j in 0..m_alpha / 2 {
        u_cell[2 * j] = 1.0;
        u_cell[2 * j + 1] = cell_int[2 * j] / cell_int[2 * j + 1];
    }
    let u_fine: Vec<f64> = map.iter().map(|&c| u_cell[c]).collect();
    Ok(AttAuxiliary {
        u: Func::grid(dim, res, u_fine),
        big_c_u: (2.0 + theta.abs()) / delta,
        c_u: 0.1 * (1.0 - alpha0),
        delta0: delta,
        v,
        theta_ml: theta,
        alpha0,
        m_alpha,
        branch,
        partition,
    })
}

fn centre(r: &Rect) -> Vec<f64> {
    r.lo.iter().zip(&r.hi).map(|(a, b)| 0.5 * (a + b)).collect()
}

fn probe_min(h: &Func, r: &Rect, branch: f64) -> f64 {
    let dim = r.dim();
    let c = centre(r);
    let mut lo = branch * h.eval(&c);
    for corner in 0..(1usize << dim) {
        let p: Vec<f64> = (0..dim)
            .map(|a| {
                let edge = if corner >> a & 1 == 1 { r.hi[a] } else { r.lo[a] };
                edge + 1e-9 * (c[a] - edge)
            })
            .collect();
        lo = lo.min(branch * h.eval(&p));
    }
    lo
}
