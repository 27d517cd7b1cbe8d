//! Equal-measure, weight-balanced partitions of `[0,1]^K`.
//!
//! Splits slide a half-length window along the last axis of every box, so a
//! partition grown from the unit cube consists of slabs `[0,1]^{K-1} x [a,b]`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::func::{merge_sorted, Func};
use crate::quadrature::{Quadrature, Rect};

use super::bump::{orient_weight, truncate_weight};

pub const SPLIT_MAX_ITER: usize = 200;

/// Finite union of boxes, disjoint up to measure zero.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RectCollection {
    pub boxes: Vec<Rect>,
}

impl RectCollection {
    pub fn new(boxes: Vec<Rect>) -> Self {
        RectCollection { boxes }
    }

    pub fn unit(dim: usize) -> Self {
        RectCollection::new(vec![Rect::unit(dim)])
    }

    pub fn measure(&self) -> f64 {
        self.boxes.iter().map(Rect::measure).sum()
    }

    pub fn integrate(&self, f: &Func, quad: &Quadrature) -> f64 {
        quad.nodes(&self.boxes, f.knots()).integrate(|x| f.eval(x))
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.boxes.iter().any(|b| b.contains(x))
    }
}

/// Window `T_α` of a box on its last axis: `[(1−α/2)a + (α/2)b, ((1−α)/2)a + ((1+α)/2)b]`.
fn window(b: &Rect, alpha: f64) -> Rect {
    let k = b.dim() - 1;
    let (lo, hi) = (b.lo[k], b.hi[k]);
    let mut w = b.clone();
    w.lo[k] = (1.0 - alpha / 2.0) * lo + (alpha / 2.0) * hi;
    w.hi[k] = (1.0 - alpha) / 2.0 * lo + (1.0 + alpha) / 2.0 * hi;
    w
}

fn complement(b: &Rect, alpha: f64) -> [Rect; 2] {
    let k = b.dim() - 1;
    let w = window(b, alpha);
    let mut left = b.clone();
    left.hi[k] = w.lo[k];
    let mut right = b.clone();
    right.lo[k] = w.hi[k];
    [left, right]
}

/// Drops empty boxes and merges boxes that abut along the last axis.
fn coalesce(mut boxes: Vec<Rect>) -> Vec<Rect> {
    boxes.retain(|b| b.measure() > 0.0);
    let k = match boxes.first() {
        Some(b) => b.dim() - 1,
        None => return boxes,
    };
    boxes.sort_by(|a, b| {
        a.lo[..k]
            .partial_cmp(&b.lo[..k])
            .unwrap()
            .then(a.hi[..k].partial_cmp(&b.hi[..k]).unwrap())
            .then(a.lo[k].total_cmp(&b.lo[k]))
    });
    let mut out: Vec<Rect> = Vec::with_capacity(boxes.len());
    for b in boxes {
        if let Some(last) = out.last_mut() {
            if last.lo[..k] == b.lo[..k] && last.hi[..k] == b.hi[..k] && last.hi[k] == b.lo[k] {
                last.hi[k] = b.hi[k];
                continue;
            }
        }
        out.push(b);
    }
    out
}

/// Halves `s` in measure with `|∫_{S1} w − ½∫_S w| <= tol`.
pub fn split_half(
    s: &RectCollection,
    w: &Func,
    tol: f64,
    quad: &Quadrature,
) -> Result<(RectCollection, RectCollection)> {
    split_half_alpha(s, w, tol, quad).map(|(a, b, _)| (a, b))
}

/// [`split_half`], also returning the accepted window position `α`.
pub fn split_half_alpha(
    s: &RectCollection,
    w: &Func,
    tol: f64,
    quad: &Quadrature,
) -> Result<(RectCollection, RectCollection, f64)> {
    let total = s.integrate(w, quad);
    if !(total > 0.0) {
        return Err(Error::invalid(format!("split_half needs positive weight mass, got {total}")));
    }
    let half = 0.5 * total;
    let resid = |alpha: f64| {
        let boxes: Vec<Rect> = s.boxes.iter().map(|b| window(b, alpha)).collect();
        quad.nodes(&boxes, w.knots()).integrate(|x| w.eval(x)) - half
    };
    let finish = |alpha: f64| {
        let first = coalesce(s.boxes.iter().map(|b| window(b, alpha)).collect());
        let second = coalesce(s.boxes.iter().flat_map(|b| complement(b, alpha)).collect());
        Ok((RectCollection::new(first), RectCollection::new(second), alpha))
    };
    let r0 = resid(0.0);
    if r0.abs() <= tol {
        return finish(0.0);
    }
    let r1 = resid(1.0);
    if r1.abs() <= tol {
        return finish(1.0);
    }
    // ψ(0) + ψ(1) = ∫_S w, so the residual changes sign on [0, 1].
    let (mut lo, mut hi, lo_sign) = (0.0, 1.0, r0.signum());
    let mut best = r0.abs().min(r1.abs());
    for _ in 0..SPLIT_MAX_ITER {
        let mid = 0.5 * (lo + hi);
        let r = resid(mid);
        if r.abs() <= tol {
            return finish(mid);
        }
        best = best.min(r.abs());
        if r.signum() == lo_sign {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::Nonconvergence {
        iterations: SPLIT_MAX_ITER,
        residual: best,
    })
}

#[derive(Clone, Debug)]
enum Locator {
    /// Intervals on the last axis sorted by start: `(lo, hi, cell)`.
    Slabs(Vec<(f64, f64, usize)>),
    /// Cell index of every fine grid cell.
    Grid { res: usize, map: Vec<usize> },
}

#[derive(Clone, Debug)]
pub struct Partition {
    dim: usize,
    cells: Vec<RectCollection>,
    levels: u32,
    locator: Locator,
}

impl Partition {
    /// Cells made of slabs `[0,1]^{K-1} x [a,b]`.
    pub fn from_slabs(dim: usize, cells: Vec<RectCollection>) -> Result<Self> {
        let mut slabs = Vec::new();
        for (i, c) in cells.iter().enumerate() {
            for b in &c.boxes {
                let full = (0..dim - 1).all(|a| b.lo[a] == 0.0 && b.hi[a] == 1.0);
                if b.dim() != dim || !full {
                    return Err(Error::invalid("partition cells must be slabs along the last axis"));
                }
                slabs.push((b.lo[dim - 1], b.hi[dim - 1], i));
            }
        }
        slabs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.2.cmp(&b.2)));
        Self::finish(dim, cells, Locator::Slabs(slabs))
    }

    /// Cells made of fine grid cells; `map[i]` is the cell of fine cell `i`
    /// (lexicographic order, axis 0 most significant).
    pub fn from_grid(dim: usize, res: usize, map: Vec<usize>) -> Result<Self> {
        let count = map.iter().max().map_or(0, |m| m + 1);
        let mut cells = vec![RectCollection::default(); count];
        for (i, &c) in map.iter().enumerate() {
            cells[c].boxes.push(grid_cell(dim, res, i));
        }
        Self::finish(dim, cells, Locator::Grid { res, map })
    }

    /// `M` slabs of width `1/M` on the last axis.
    pub fn uniform(dim: usize, m: usize) -> Result<Self> {
        let cells = (0..m)
            .map(|i| {
                let mut b = Rect::unit(dim);
                b.lo[dim - 1] = i as f64 / m as f64;
                b.hi[dim - 1] = (i + 1) as f64 / m as f64;
                RectCollection::new(vec![b])
            })
            .collect();
        Self::from_slabs(dim, cells)
    }

    fn finish(dim: usize, cells: Vec<RectCollection>, locator: Locator) -> Result<Self> {
        let m = cells.len();
        if m < 2 || m % 2 != 0 {
            return Err(Error::invalid(format!("partition needs an even number of cells, got {m}")));
        }
        let levels = if m.is_power_of_two() { m.trailing_zeros() } else { 0 };
        Ok(Partition { dim, cells, levels, locator })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of cells `M`.
    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// `log2 M` when `M` is a power of two, else 0.
    pub fn levels(&self) -> u32 {
        self.levels
    }

    pub fn cells(&self) -> &[RectCollection] {
        &self.cells
    }

    /// Index of the cell containing `x`; shared boundaries go to the lowest index.
    pub fn locate(&self, x: &[f64]) -> usize {
        match &self.locator {
            Locator::Slabs(slabs) => {
                let t = x[self.dim - 1];
                let start = slabs.partition_point(|s| s.1 < t);
                let mut best = usize::MAX;
                for s in &slabs[start.min(slabs.len())..] {
                    if s.0 > t {
                        break;
                    }
                    best = best.min(s.2);
                }
                if best == usize::MAX {
                    // Outside [0,1]: clamp to the nearest slab.
                    let i = start.min(slabs.len() - 1);
                    slabs[i].2
                } else {
                    best
                }
            }
            Locator::Grid { res, map } => map[crate::func::grid_index(x, *res)],
        }
    }

    /// Per-axis coordinates of all cell boundaries.
    pub fn knots(&self) -> Vec<Vec<f64>> {
        match &self.locator {
            Locator::Slabs(slabs) => {
                let mut k: Vec<f64> = slabs.iter().flat_map(|s| [s.0, s.1]).collect();
                k.sort_by(f64::total_cmp);
                k.dedup();
                let mut out = vec![Vec::new(); self.dim];
                out[self.dim - 1] = k;
                out
            }
            Locator::Grid { res, .. } => {
                let k: Vec<f64> = (0..=*res).map(|j| j as f64 / *res as f64).collect();
                vec![k; self.dim]
            }
        }
    }
}

pub(crate) fn grid_cell(dim: usize, res: usize, index: usize) -> Rect {
    let mut lo = vec![0.0; dim];
    let mut hi = vec![0.0; dim];
    let mut rem = index;
    for a in (0..dim).rev() {
        let i = rem % res;
        rem /= res;
        lo[a] = i as f64 / res as f64;
        hi[a] = (i + 1) as f64 / res as f64;
    }
    Rect::new(lo, hi)
}

/// A partition balanced for `∫ w·ŵ`, with the oriented weight it was built from.
#[derive(Clone, Debug)]
pub struct WeightedPartition {
    pub partition: Partition,
    /// `w` or `−w`, whichever has `P[w > ‖w‖∞/2] > 0`.
    pub w: Func,
    pub what: Func,
    /// `+1` or `−1`.
    pub orientation: f64,
}

/// Recursively halves `[0,1]^K` `levels` times, balancing `∫ w·ŵ`. Leaves are
/// ordered depth-first with the window half first.
pub fn build_partition(w: &Func, levels: u32, tol: f64, quad: &Quadrature) -> Result<WeightedPartition> {
    if levels == 0 {
        return Err(Error::invalid("partition needs at least one level"));
    }
    let (oriented, orientation) = orient_weight(w, quad)?;
    let what = truncate_weight(&oriented, quad)?;
    let target = oriented.mul(&what);
    let mut cells = Vec::with_capacity(1 << levels);
    grow(RectCollection::unit(w.dim()), levels, &target, tol, quad, &mut cells)?;
    Ok(WeightedPartition {
        partition: Partition::from_slabs(w.dim(), cells)?,
        w: oriented,
        what,
        orientation,
    })
}

fn grow(
    s: RectCollection,
    depth: u32,
    w: &Func,
    tol: f64,
    quad: &Quadrature,
    out: &mut Vec<RectCollection>,
) -> Result<()> {
    if depth == 0 {
        out.push(s);
        return Ok(());
    }
    let (a, b) = split_half(&s, w, tol, quad)?;
    grow(a, depth - 1, w, tol, quad, out)?;
    grow(b, depth - 1, w, tol, quad, out)
}

/// Merged knots of a partition and any number of functions.
pub fn union_knots(partition: &Partition, funcs: &[&Func]) -> Vec<Vec<f64>> {
    let mut k = partition.knots();
    for f in funcs {
        for (a, ka) in k.iter_mut().enumerate() {
            *ka = merge_sorted(ka, &f.knots()[a]);
        }
    }
    k
}
