//! The `W_1` projection of a distribution onto the set of distributions
//! dominating a benchmark in the second order.
//!
//! With `h = Q_y - Q_x` and `l(p) = int_0^p h = L_y(p) - L_x(p)`, the
//! projection keeps the quantile of `x` except on the increasing set
//!
//! ```text
//! A = { p in (0, 1] : l(q) < l(p) for all q in [0, p) },
//! ```
//!
//! where it switches to the quantile of `y`. On every cell of the merged
//! grid `l` is linear, so `A` restricted to a cell is either empty, the
//! whole cell, or an upper piece `(p*, hi]` starting where `l` climbs past
//! its running maximum. Those crossing points are solved in closed form.

use serde::{Deserialize, Serialize};

use crate::curve::PiecewiseLinear;
use crate::dist::{from_cells, merged_cells, Distribution};
use crate::dominance::{dist_to_dominating, dominates_first, dominates_second, scale};
use crate::error::{Error, Result};
use crate::transport::wasserstein;

/// Relative tolerance on `W_1(x, zhat) = dist` in the post-construction check.
pub const PROJECTION_RTOL: f64 = 1e-9;

/// A left-continuous step function on `(0, 1]`: `values[i]` on
/// `(grid[i], grid[i + 1]]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepFunction {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
}

impl StepFunction {
    pub fn eval(&self, p: f64) -> Result<f64> {
        if !(p > 0.0 && p <= 1.0) {
            return Err(Error::out_of_range("p", p, "0 < p <= 1"));
        }
        let i = self.grid.partition_point(|&g| g < p);
        Ok(self.values[i.clamp(1, self.values.len()) - 1])
    }

    /// Number of strict sign changes, ignoring zero pieces.
    pub fn sign_changes(&self) -> usize {
        let mut last = 0.0f64;
        let mut changes = 0;
        for &v in &self.values {
            if v != 0.0 {
                if last != 0.0 && (v > 0.0) != (last > 0.0) {
                    changes += 1;
                }
                last = v;
            }
        }
        changes
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GapFunctions {
    /// `Q_y - Q_x` on the merged grid.
    pub h: StepFunction,
    /// `L_y - L_x`, with `l(0) = 0`.
    pub l: PiecewiseLinear,
}

pub fn gap_functions(x: &Distribution, y: &Distribution) -> GapFunctions {
    let cells = merged_cells(x, y);
    let mut grid = Vec::with_capacity(cells.len() + 1);
    let mut ls = Vec::with_capacity(cells.len() + 1);
    grid.push(0.0);
    ls.push(0.0);
    let values = cells
        .iter()
        .map(|c| {
            grid.push(c.hi);
            ls.push(y.lorenz_unchecked(c.hi) - x.lorenz_unchecked(c.hi));
            c.second - c.first
        })
        .collect::<Vec<_>>();
    let left = values[0];
    let right = values[values.len() - 1];
    GapFunctions {
        l: PiecewiseLinear::from_parts_unchecked(grid.clone(), ls, left, right),
        h: StepFunction { grid, values },
    }
}

/// A finite union of disjoint half-open intervals `(lo, hi]` in `(0, 1]`,
/// sorted and with adjacent pieces merged.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct IncreasingSet {
    pub intervals: Vec<(f64, f64)>,
}

impl IncreasingSet {
    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn contains(&self, p: f64) -> bool {
        self.intervals.iter().any(|&(lo, hi)| lo < p && p <= hi)
    }

    pub fn measure(&self) -> f64 {
        self.intervals.iter().map(|(lo, hi)| hi - lo).sum()
    }

    fn push(&mut self, lo: f64, hi: f64) {
        if !(hi > lo) {
            return;
        }
        match self.intervals.last_mut() {
            Some(last) if last.1 == lo => last.1 = hi,
            _ => self.intervals.push((lo, hi)),
        }
    }
}

/// One piece of the spliced quantile function: `value` on `(lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplicedCell {
    pub lo: f64,
    pub hi: f64,
    pub value: f64,
    pub in_increasing_set: bool,
}

/// Walks the merged grid once, returning the spliced quantile function of
/// the projection together with the increasing set.
pub fn splice(x: &Distribution, y: &Distribution) -> Result<(Vec<SplicedCell>, IncreasingSet)> {
    let gaps = gap_functions(x, y);
    // h changes sign at most once per cell; more changes than cells would
    // mean the step representation is broken
    if gaps.h.sign_changes() > gaps.h.values.len() {
        return Err(Error::PreconditionViolated(
            "gap function has infinitely many sign changes".into(),
        ));
    }
    let grid = gaps.l.breakpoints();
    let ls = gaps.l.values();
    let cells = merged_cells(x, y);
    let mut out = Vec::with_capacity(cells.len() + 1);
    let mut set = IncreasingSet::default();
    let mut running_max = 0.0f64;
    for (i, c) in cells.iter().enumerate() {
        let (l0, l1) = (ls[i], ls[i + 1]);
        let (lo, hi) = (grid[i], grid[i + 1]);
        let rising = c.second > c.first;
        if rising && l1 > running_max {
            let cross = if l0 >= running_max {
                lo
            } else {
                // l is linear on the cell: l0 + (p - lo) * slope
                let slope = (l1 - l0) / (hi - lo);
                (lo + (running_max - l0) / slope).clamp(lo, hi)
            };
            if cross > lo {
                out.push(SplicedCell {
                    lo,
                    hi: cross,
                    value: c.first,
                    in_increasing_set: false,
                });
            }
            if hi > cross {
                out.push(SplicedCell {
                    lo: cross,
                    hi,
                    value: c.second,
                    in_increasing_set: true,
                });
                set.push(cross, hi);
            }
            running_max = l1;
        } else {
            out.push(SplicedCell {
                lo,
                hi,
                value: c.first,
                in_increasing_set: false,
            });
            running_max = running_max.max(l1);
        }
    }
    Ok((out, set))
}

pub fn increasing_set(x: &Distribution, y: &Distribution) -> Result<IncreasingSet> {
    splice(x, y).map(|(_, set)| set)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Projection {
    pub zhat: Distribution,
    pub distance: f64,
    pub increasing_set: IncreasingSet,
}

/// Projects `x` onto the distributions dominating `y` in the second order.
///
/// The result is checked after construction: it must dominate `y` in the
/// second order and `x` in the first, its quantile must be nondecreasing,
/// and its `W_1` distance to `x` must match the closed-form distance.
/// Any failure is an [`Error::InternalInconsistency`].
pub fn project(x: &Distribution, y: &Distribution) -> Result<Projection> {
    let distance = dist_to_dominating(x, y)?;
    let (cells, increasing_set) = splice(x, y)?;
    if cells.windows(2).any(|w| w[1].value < w[0].value) {
        return Err(Error::InternalInconsistency(
            "spliced quantile function decreases".into(),
        ));
    }
    let zhat = from_cells(cells.iter().map(|c| (c.hi - c.lo, c.value)))?;
    if !dominates_second(&zhat, y) {
        return Err(Error::InternalInconsistency(
            "projection does not dominate the benchmark".into(),
        ));
    }
    if !dominates_first(&zhat, x) {
        return Err(Error::InternalInconsistency(
            "projection does not dominate the input in the first order".into(),
        ));
    }
    let w1 = wasserstein(x, &zhat, 1.0)?;
    if (w1 - distance).abs() > PROJECTION_RTOL * (1.0 + scale(x, y)) {
        return Err(Error::InternalInconsistency(format!(
            "W1 to the projection is {w1}, closed form gives {distance}"
        )));
    }
    Ok(Projection {
        zhat,
        distance,
        increasing_set,
    })
}
