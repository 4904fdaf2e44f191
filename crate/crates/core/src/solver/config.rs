use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Solver parameters; every field has a default, so `{}` is a valid config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    /// Penalty weight on the transport distance.
    pub alpha: f64,
    pub max_iter: usize,
    /// Relative tolerance on `f(x) - theta_f`.
    pub eps_f: f64,
    /// Distance below which a point counts as dominating; scaled by
    /// `1 + max |atom of Y|`.
    pub eps_d: f64,
    /// Relative tolerance on `D(x) - theta_p`.
    pub eps_p: f64,
    /// Grow `alpha` every iteration by [`crate::solver::alpha_schedule`].
    pub adaptive_alpha: bool,
    pub gamma: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            max_iter: 500,
            eps_f: 1e-7,
            eps_d: 1e-8,
            eps_p: 1e-7,
            adaptive_alpha: false,
            gamma: 2.0,
        }
    }
}

impl SolverConfig {
    pub fn with_alpha(alpha: f64) -> Self {
        Self {
            alpha,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha >= 0.0) || !self.alpha.is_finite() {
            return Err(Error::out_of_range("alpha", self.alpha, "0 <= alpha < inf"));
        }
        for (name, v) in [
            ("eps_f", self.eps_f),
            ("eps_d", self.eps_d),
            ("eps_p", self.eps_p),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::out_of_range(name, v, "finite and nonnegative"));
            }
        }
        if self.max_iter == 0 {
            return Err(Error::out_of_range("max_iter", 0.0, "max_iter >= 1"));
        }
        if self.adaptive_alpha && !(self.gamma > 1.0) {
            return Err(Error::out_of_range("gamma", self.gamma, "gamma > 1"));
        }
        Ok(())
    }
}
