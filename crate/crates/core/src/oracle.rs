//! Brute-force LP formulation of the projection problem, used to cross-check
//! the closed-form distance and the explicit projection.
//!
//! The unknown is the quantile function of `Z`, restricted to be constant on
//! the cells `(p_{i-1}, p_i]` of the merged grid of `x` and `y`:
//!
//! ```text
//! min  sum_i w_i z_i - E[x]
//! s.t. z_i <= z_{i+1}                        (z is a quantile function)
//!      z_i >= Q_x on cell i                  (Z dominates x, first order)
//!      sum_{j <= i} w_j z_j >= L_y(p_i)       (Z dominates y, second order)
//!      z_m <= max atom + 1                   (boundedness; never binds)
//! ```
//!
//! Checking the Lorenz inequality only at grid points is exact: both sides
//! are linear between consecutive grid points. Restricting `z` to the grid
//! loses nothing either, since averaging any feasible quantile function over
//! each cell keeps it feasible and leaves the objective unchanged.

use crate::dist::{from_cells, merged_cells, Distribution};
use crate::error::{Error, Result};
use crate::lp::{solve_lp, LpProblem, LpStatus};

/// Optimal cell values `z` and cell widths of the oracle LP.
fn solve_grid(x: &Distribution, y: &Distribution) -> Result<(Vec<f64>, Vec<f64>, f64)> {
    let cells = merged_cells(x, y);
    let m = cells.len();
    let widths: Vec<f64> = cells.iter().map(|c| c.width()).collect();
    let mut p = LpProblem::new(widths.clone());
    for (i, c) in cells.iter().enumerate() {
        p.set_bounds(i, c.first, f64::INFINITY);
    }
    p.upper[m - 1] = x.max_value().max(y.max_value()) + 1.0;
    for i in 0..m.saturating_sub(1) {
        let mut row = vec![0.0; m];
        row[i] = 1.0;
        row[i + 1] = -1.0;
        p.add_le(row, 0.0);
    }
    for (i, c) in cells.iter().enumerate() {
        let mut row = vec![0.0; m];
        row[..=i].copy_from_slice(&widths[..=i]);
        p.add_ge(row, y.lorenz_unchecked(c.hi));
    }
    let sol = solve_lp(&p).map_err(|e| Error::OracleFailure(e.to_string()))?;
    if sol.status != LpStatus::Optimal {
        return Err(Error::OracleFailure(format!(
            "oracle LP is {:?}",
            sol.status
        )));
    }
    let value = (sol.objective_value - x.mean()).max(0.0);
    Ok((sol.x, widths, value))
}

/// `min { E[Z] - E[X] : Z dominates y (second order), Z dominates x (first order) }`.
pub fn oracle_distance(x: &Distribution, y: &Distribution) -> Result<f64> {
    solve_grid(x, y).map(|(_, _, v)| v)
}

/// A minimizer of the oracle LP assembled into a distribution. Minimizers
/// need not be unique, so this may differ from the explicit projection.
pub fn oracle_projection(x: &Distribution, y: &Distribution) -> Result<Distribution> {
    let (z, widths, _) = solve_grid(x, y)?;
    from_cells(widths.into_iter().zip(z))
}
