//! Piecewise-linear curves given by their breakpoints.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A continuous piecewise-linear function on the real line.
///
/// Between breakpoints the function is the linear interpolant; outside the
/// breakpoint range it continues with the stored end slopes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseLinear {
    xs: Vec<f64>,
    ys: Vec<f64>,
    left_slope: f64,
    right_slope: f64,
}

impl PiecewiseLinear {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>, left_slope: f64, right_slope: f64) -> Result<Self> {
        if xs.is_empty() {
            return Err(Error::EmptyInput);
        }
        if xs.len() != ys.len() {
            return Err(Error::LengthMismatch(format!(
                "{} breakpoints but {} values",
                xs.len(),
                ys.len()
            )));
        }
        if xs.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::PreconditionViolated(
                "breakpoints must be strictly increasing".into(),
            ));
        }
        for &v in xs
            .iter()
            .chain(ys.iter())
            .chain([&left_slope, &right_slope])
        {
            if !v.is_finite() {
                return Err(Error::NonFinite(v));
            }
        }
        Ok(Self {
            xs,
            ys,
            left_slope,
            right_slope,
        })
    }

    pub(crate) fn from_parts_unchecked(
        xs: Vec<f64>,
        ys: Vec<f64>,
        left_slope: f64,
        right_slope: f64,
    ) -> Self {
        debug_assert_eq!(xs.len(), ys.len());
        debug_assert!(xs.windows(2).all(|w| w[0] < w[1]));
        Self {
            xs,
            ys,
            left_slope,
            right_slope,
        }
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.xs
    }

    pub fn values(&self) -> &[f64] {
        &self.ys
    }

    pub fn left_slope(&self) -> f64 {
        self.left_slope
    }

    pub fn right_slope(&self) -> f64 {
        self.right_slope
    }

    /// Slopes of every linear piece, left tail first and right tail last.
    pub fn slopes(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.xs.len() + 1);
        out.push(self.left_slope);
        for i in 1..self.xs.len() {
            out.push((self.ys[i] - self.ys[i - 1]) / (self.xs[i] - self.xs[i - 1]));
        }
        out.push(self.right_slope);
        out
    }

    /// Evaluates the curve; O(log n).
    pub fn eval(&self, t: f64) -> f64 {
        let n = self.xs.len();
        if t <= self.xs[0] {
            return self.ys[0] + self.left_slope * (t - self.xs[0]);
        }
        if t >= self.xs[n - 1] {
            return self.ys[n - 1] + self.right_slope * (t - self.xs[n - 1]);
        }
        // first index with xs[i] > t; 1 <= i <= n - 1
        let i = self.xs.partition_point(|&x| x <= t);
        let (x0, x1) = (self.xs[i - 1], self.xs[i]);
        let (y0, y1) = (self.ys[i - 1], self.ys[i]);
        if t == x0 {
            return y0;
        }
        y0 + (y1 - y0) * ((t - x0) / (x1 - x0))
    }

    /// True when the slopes never decrease (within `tol`).
    pub fn is_convex(&self, tol: f64) -> bool {
        self.slopes().windows(2).all(|w| w[1] >= w[0] - tol)
    }
}
