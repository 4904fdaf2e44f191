//! Kelley cutting planes for `F(x) = f(x) + alpha * D(x)`.
//!
//! `D(x) = sup_eta (E[(eta - G(x))+] - E[(eta - Y)+])` is the transport
//! distance from the outcome distribution `G(x)` to the set of
//! distributions dominating `Y` in the second order. For each fixed `eta`
//! the map `x -> E[(eta - G(x))+]` is convex because every `g_s` is concave,
//! so `D` is convex and a subgradient comes from any maximizing `eta`:
//!
//! ```text
//! s_D = sum_s p_s xi_s s_g(s),   xi_s = -1 if g_s(x) <= eta, else 0,
//! ```
//!
//! with `s_g(s)` a supergradient of `g_s`. The master problem
//!
//! ```text
//! min theta_f + alpha theta_p
//! s.t. f(x_j) + s_f^j (x - x_j) <= theta_f   (objective cuts)
//!      D(x_j) + s_D^j (x - x_j) <= theta_p   (distance cuts)
//!      x in X, theta_p >= 0
//! ```
//!
//! is re-solved after every evaluation; each iteration adds only the cuts
//! whose stopping test failed.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::SolverConfig;
use super::problem::{dot, ConvexPwl, Polytope, ScenarioProblem};
use crate::curve::PiecewiseLinear;
use crate::dist::Distribution;
use crate::dominance::{scale, shortfall_gap_profile};
use crate::error::{Error, Result};
use crate::lp::{solve_lp, LpProblem, LpStatus};

/// Relative threshold below which `D(x)` is treated as zero when collecting
/// the maximizer set.
pub const J_RTOL: f64 = 1e-9;
/// Relative slack for counting a threshold as a maximizer.
const ARGMAX_RTOL: f64 = 1e-12;

/// `v(eta) = E[(eta - Y)+]` as a curve.
pub fn benchmark_shortfall(y: &Distribution) -> PiecewiseLinear {
    y.shortfall2_curve()
}

/// `D(x)` together with everything needed for a subgradient.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceEval {
    pub value: f64,
    /// Maximizing thresholds in increasing order; empty when `D(x)` is
    /// numerically zero.
    pub maximizers: Vec<f64>,
    /// `g_s(x)` in scenario order.
    pub outcomes: Vec<f64>,
    pub outcome_dist: Distribution,
}

fn scenario_values(x: &[f64], prob: &ScenarioProblem) -> Result<Vec<f64>> {
    let values: Vec<f64> = prob
        .scenarios
        .par_iter()
        .map(|s| s.outcome.eval(x))
        .collect();
    if let Some((s, v)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
        return Err(Error::OracleFailure(format!("scenario {s} returned {v}")));
    }
    Ok(values)
}

pub fn evaluate_d(x: &[f64], prob: &ScenarioProblem, y: &Distribution) -> Result<DistanceEval> {
    if x.len() != prob.dim {
        return Err(Error::LengthMismatch(format!(
            "point has {} entries, problem has dimension {}",
            x.len(),
            prob.dim
        )));
    }
    let outcomes = scenario_values(x, prob)?;
    let outcome_dist = Distribution::from_samples(&outcomes, Some(&prob.probs()))?;
    let profile = shortfall_gap_profile(&outcome_dist, y);
    let value = profile.iter().map(|p| p.1).fold(0.0, f64::max);
    let s = 1.0 + scale(&outcome_dist, y);
    let maximizers = if value > J_RTOL * s {
        profile
            .iter()
            .filter(|p| p.1 >= value - ARGMAX_RTOL * s)
            .map(|p| p.0)
            .collect()
    } else {
        Vec::new()
    };
    Ok(DistanceEval {
        value,
        maximizers,
        outcomes,
        outcome_dist,
    })
}

/// Subgradient of `x -> E[(eta - G(x))+]` at `x`, given the outcomes there.
fn shortfall_subgradient(
    x: &[f64],
    prob: &ScenarioProblem,
    outcomes: &[f64],
    eta: f64,
) -> Vec<f64> {
    let parts: Vec<Option<Vec<f64>>> = prob
        .scenarios
        .par_iter()
        .zip(outcomes)
        .map(|(s, &g)| (g <= eta).then(|| s.outcome.eval_supergradient(x).1))
        .collect();
    let mut out = vec![0.0; prob.dim];
    for (s, part) in prob.scenarios.iter().zip(parts) {
        if let Some(sg) = part {
            for (o, a) in out.iter_mut().zip(sg) {
                *o -= s.prob * a;
            }
        }
    }
    out
}

fn d_subgradient(x: &[f64], prob: &ScenarioProblem, eval: &DistanceEval) -> Vec<f64> {
    match eval.maximizers.first() {
        None => vec![0.0; prob.dim],
        Some(&eta) => shortfall_subgradient(x, prob, &eval.outcomes, eta),
    }
}

/// A subgradient of `D` at `x` built from the smallest element of `j`,
/// which must be a maximizer set produced by [`evaluate_d`] at the same `x`.
pub fn subgrad_d(
    x: &[f64],
    prob: &ScenarioProblem,
    y: &Distribution,
    j: &[f64],
) -> Result<Vec<f64>> {
    let Some(&eta) = j.first() else {
        return Ok(vec![0.0; prob.dim]);
    };
    let eval = evaluate_d(x, prob, y)?;
    let s = 1.0 + scale(&eval.outcome_dist, y);
    let gap = eval.outcome_dist.shortfall2(eta) - y.shortfall2(eta);
    if eval.maximizers.is_empty() || gap < eval.value - 1e-9 * s {
        return Err(Error::MismatchedState(format!(
            "threshold {eta} does not maximize the shortfall gap at this point"
        )));
    }
    Ok(shortfall_subgradient(x, prob, &eval.outcomes, eta))
}

/// An affine minorant `value + slope . (x - point)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cut {
    pub point: Vec<f64>,
    pub value: f64,
    pub slope: Vec<f64>,
}

impl Cut {
    pub fn eval(&self, x: &[f64]) -> f64 {
        self.value + dot(&self.slope, x) - dot(&self.slope, &self.point)
    }

    /// `slope . x - theta <= slope . point - value`, i.e. the cut lies below
    /// `theta`, with `theta` at column `theta_col`.
    fn row(&self, width: usize, theta_col: usize) -> (Vec<f64>, f64) {
        let mut row = vec![0.0; width];
        row[..self.slope.len()].copy_from_slice(&self.slope);
        row[theta_col] = -1.0;
        (row, dot(&self.slope, &self.point) - self.value)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CutModel {
    pub f_cuts: Vec<Cut>,
    pub p_cuts: Vec<Cut>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    /// Converged at a point whose outcome dominates the benchmark.
    OptimalFeasible,
    /// Converged at a point that trades objective against distance.
    OptimalRelaxed,
    IterationLimit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterateRecord {
    pub k: usize,
    pub x: Vec<f64>,
    pub theta_f: f64,
    pub theta_p: f64,
    pub f: f64,
    pub distance: f64,
    pub alpha: f64,
    /// Master optimal value `theta_f + alpha * theta_p`.
    pub lower_bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub status: SolveStatus,
    pub x_star: Vec<f64>,
    pub f_star: f64,
    pub distance_star: f64,
    /// Final penalty weight (differs from the configured one only with the
    /// adaptive schedule).
    pub alpha: f64,
    /// `E[G(x_star)]`.
    pub outcome_mean: f64,
    /// Number of master problems solved.
    pub iterations: usize,
    pub wall_seconds: f64,
    pub iterates: Vec<IterateRecord>,
    pub alpha_trace: Vec<f64>,
    #[serde(skip)]
    pub cuts: CutModel,
}

/// `max(gamma * alpha, max_j ||s_f^j||)`.
pub fn alpha_schedule(alpha: f64, cuts: &CutModel, gamma: f64) -> Result<f64> {
    if !(gamma > 1.0) {
        return Err(Error::out_of_range("gamma", gamma, "gamma > 1"));
    }
    let norm = cuts
        .f_cuts
        .iter()
        .map(|c| dot(&c.slope, &c.slope).sqrt())
        .fold(0.0, f64::max);
    Ok((gamma * alpha).max(norm))
}

/// A point deep inside the polytope: maximizes the smallest slack over all
/// rows and bounds, each row scaled by its norm.
pub fn interior_point(poly: &Polytope) -> Result<Vec<f64>> {
    let n = poly.dim();
    let t = n;
    let mut objective = vec![0.0; n + 1];
    objective[t] = -1.0;
    let mut lp = LpProblem::new(objective);
    for (row, b) in poly.le_rows.iter().zip(&poly.le_rhs) {
        let mut r = row.clone();
        r.push(dot(row, row).sqrt());
        lp.add_le(r, *b);
    }
    for (row, b) in poly.eq_rows.iter().zip(&poly.eq_rhs) {
        let mut r = row.clone();
        r.push(0.0);
        lp.add_eq(r, *b);
    }
    for j in 0..n {
        lp.set_bounds(j, poly.lower[j], poly.upper[j]);
        let mut r = vec![0.0; n + 1];
        r[j] = -1.0;
        r[t] = 1.0;
        lp.add_le(r.clone(), -poly.lower[j]);
        r[j] = 1.0;
        lp.add_le(r, poly.upper[j]);
    }
    let sol = solve_lp(&lp)?;
    match sol.status {
        LpStatus::Optimal => Ok(sol.x[..n].to_vec()),
        _ => Err(Error::MasterInfeasible),
    }
}

/// Master problem over `[x, theta_f, theta_p]`; `theta_p` is pinned to zero
/// when the penalty is off.
fn solve_master(
    poly: &Polytope,
    cuts: &CutModel,
    alpha: f64,
    penalty: bool,
) -> Result<(Vec<f64>, f64, f64)> {
    let n = poly.dim();
    let width = n + 2;
    let mut objective = vec![0.0; width];
    objective[n] = 1.0;
    objective[n + 1] = alpha;
    let mut lp = LpProblem::new(objective);
    poly.install(&mut lp);
    lp.set_bounds(n, f64::NEG_INFINITY, f64::INFINITY);
    lp.set_bounds(n + 1, 0.0, if penalty { f64::INFINITY } else { 0.0 });
    for c in &cuts.f_cuts {
        let (row, rhs) = c.row(width, n);
        lp.add_le(row, rhs);
    }
    for c in &cuts.p_cuts {
        let (row, rhs) = c.row(width, n + 1);
        lp.add_le(row, rhs);
    }
    let sol = solve_lp(&lp)?;
    match sol.status {
        LpStatus::Optimal => Ok((sol.x[..n].to_vec(), sol.x[n], sol.x[n + 1])),
        LpStatus::Infeasible => Err(Error::MasterInfeasible),
        LpStatus::Unbounded => Err(Error::Numerical("master problem is unbounded".into())),
    }
}

/// Everything a run accumulates besides its current point.
struct Trace {
    start: Instant,
    iterates: Vec<IterateRecord>,
    alpha_trace: Vec<f64>,
    cuts: CutModel,
}

impl Trace {
    fn new(start: Instant, alpha: f64) -> Self {
        Self {
            start,
            iterates: Vec::new(),
            alpha_trace: vec![alpha],
            cuts: CutModel::default(),
        }
    }

    fn finish(
        self,
        status: SolveStatus,
        x: Vec<f64>,
        f: f64,
        eval: &DistanceEval,
        alpha: f64,
    ) -> SolveReport {
        SolveReport {
            status,
            x_star: x,
            f_star: f,
            distance_star: eval.value,
            alpha,
            outcome_mean: eval.outcome_dist.mean(),
            iterations: self.iterates.len(),
            wall_seconds: self.start.elapsed().as_secs_f64(),
            iterates: self.iterates,
            alpha_trace: self.alpha_trace,
            cuts: self.cuts,
        }
    }
}

struct Incumbent {
    x: Vec<f64>,
    f: f64,
    eval: DistanceEval,
    objective: f64,
}

/// Minimizes `f(x) + alpha * D(x)` over the feasible polytope.
///
/// With `alpha = 0` (and no adaptive schedule) distance cuts are omitted
/// and `theta_p` stays at zero; the status still reports whether the final
/// point happens to dominate the benchmark. At the iteration cap the best
/// point evaluated so far is returned.
pub fn solve_relaxed(
    prob: &ScenarioProblem,
    y: &Distribution,
    cfg: &SolverConfig,
) -> Result<SolveReport> {
    cfg.validate()?;
    prob.validate()?;
    let start = Instant::now();
    let eps_d = cfg.eps_d * (1.0 + y.max_abs());
    let penalty = cfg.alpha > 0.0 || cfg.adaptive_alpha;
    let mut alpha = cfg.alpha;
    let mut trace = Trace::new(start, alpha);

    let x0 = interior_point(&prob.feasible)?;
    let (f0, s0) = prob.objective.eval_subgradient(&x0);
    let e0 = evaluate_d(&x0, prob, y)?;
    trace.cuts.f_cuts.push(Cut {
        point: x0.clone(),
        value: f0,
        slope: s0,
    });
    if penalty {
        trace.cuts.p_cuts.push(Cut {
            point: x0.clone(),
            value: e0.value,
            slope: d_subgradient(&x0, prob, &e0),
        });
    }
    let mut best = Incumbent {
        objective: f0 + alpha * e0.value,
        x: x0,
        f: f0,
        eval: e0,
    };

    for k in 1..=cfg.max_iter {
        let (x, theta_f, theta_p) = solve_master(&prob.feasible, &trace.cuts, alpha, penalty)?;
        let (f, sf) = prob.objective.eval_subgradient(&x);
        let eval = evaluate_d(&x, prob, y)?;
        let d = eval.value;
        trace.iterates.push(IterateRecord {
            k,
            x: x.clone(),
            theta_f,
            theta_p,
            f,
            distance: d,
            alpha,
            lower_bound: theta_f + alpha * theta_p,
        });
        log::debug!("iteration {k}: f = {f}, D = {d}, theta_f = {theta_f}, theta_p = {theta_p}");

        let f_ok = f - theta_f <= cfg.eps_f * (1.0 + f.abs());
        let d_ok = !penalty || d <= eps_d || d - theta_p <= cfg.eps_p * (1.0 + d);
        if f_ok && d_ok {
            let status = if d <= eps_d {
                SolveStatus::OptimalFeasible
            } else {
                SolveStatus::OptimalRelaxed
            };
            return Ok(trace.finish(status, x, f, &eval, alpha));
        }
        if f + alpha * d < best.objective {
            best = Incumbent {
                x: x.clone(),
                f,
                objective: f + alpha * d,
                eval: eval.clone(),
            };
        }
        if !f_ok {
            trace.cuts.f_cuts.push(Cut {
                point: x.clone(),
                value: f,
                slope: sf,
            });
        }
        if !d_ok {
            trace.cuts.p_cuts.push(Cut {
                slope: d_subgradient(&x, prob, &eval),
                point: x,
                value: d,
            });
        }
        if cfg.adaptive_alpha {
            alpha = alpha_schedule(alpha, &trace.cuts, cfg.gamma)?;
            trace.alpha_trace.push(alpha);
            best.objective = best.f + alpha * best.eval.value;
        }
    }
    log::warn!("iteration limit {} reached", cfg.max_iter);
    Ok(trace.finish(
        SolveStatus::IterationLimit,
        best.x,
        best.f,
        &best.eval,
        alpha,
    ))
}

/// Reference solver for `min f(x) s.t. G(x) dominates Y` (second order).
///
/// First minimizes `D` alone; if its minimum exceeds the feasibility
/// tolerance the problem is reported infeasible. Otherwise runs Kelley's
/// method on `f` with one shortfall constraint per atom `eta` of `Y`,
/// `E[(eta - G(x))+] <= E[(eta - Y)+]`, which together are equivalent to
/// dominance; violated constraints are linearized at every iterate.
pub fn solve_dominance_constrained(
    prob: &ScenarioProblem,
    y: &Distribution,
    cfg: &SolverConfig,
) -> Result<SolveReport> {
    cfg.validate()?;
    prob.validate()?;
    let start = Instant::now();
    let eps_d = cfg.eps_d * (1.0 + y.max_abs());

    let phase_a = ScenarioProblem {
        objective: ConvexPwl::linear(vec![0.0; prob.dim], 0.0),
        ..prob.clone()
    };
    let feas_cfg = SolverConfig {
        alpha: 1.0,
        adaptive_alpha: false,
        ..cfg.clone()
    };
    let a = solve_relaxed(&phase_a, y, &feas_cfg)?;
    if a.distance_star > eps_d {
        return Err(Error::Infeasible {
            min_distance: a.distance_star,
        });
    }

    let n = prob.dim;
    let thresholds: Vec<(f64, f64)> = y.values().map(|eta| (eta, y.shortfall2(eta))).collect();
    let mut trace = Trace::new(start, 0.0);
    trace.alpha_trace.clear();
    let mut g_cuts: Vec<(Vec<f64>, f64)> = Vec::new();
    let mut x = a.x_star.clone();
    let (f, s) = prob.objective.eval_subgradient(&x);
    trace.cuts.f_cuts.push(Cut {
        point: x.clone(),
        value: f,
        slope: s,
    });

    for k in 1..=cfg.max_iter {
        let width = n + 1;
        let mut objective = vec![0.0; width];
        objective[n] = 1.0;
        let mut lp = LpProblem::new(objective);
        prob.feasible.install(&mut lp);
        lp.set_bounds(n, f64::NEG_INFINITY, f64::INFINITY);
        for c in &trace.cuts.f_cuts {
            let (row, rhs) = c.row(width, n);
            lp.add_le(row, rhs);
        }
        for (row, rhs) in &g_cuts {
            let mut r = row.clone();
            r.push(0.0);
            lp.add_le(r, *rhs);
        }
        let sol = solve_lp(&lp)?;
        match sol.status {
            LpStatus::Optimal => {}
            LpStatus::Infeasible => {
                return Err(Error::Infeasible {
                    min_distance: a.distance_star,
                })
            }
            LpStatus::Unbounded => {
                return Err(Error::Numerical("master problem is unbounded".into()))
            }
        }
        x = sol.x[..n].to_vec();
        let theta_f = sol.x[n];
        let (f, sf) = prob.objective.eval_subgradient(&x);
        let eval = evaluate_d(&x, prob, y)?;
        trace.iterates.push(IterateRecord {
            k,
            x: x.clone(),
            theta_f,
            theta_p: 0.0,
            f,
            distance: eval.value,
            alpha: 0.0,
            lower_bound: theta_f,
        });
        let f_ok = f - theta_f <= cfg.eps_f * (1.0 + f.abs());
        if f_ok && eval.value <= eps_d {
            return Ok(trace.finish(SolveStatus::OptimalFeasible, x, f, &eval, 0.0));
        }
        if !f_ok {
            trace.cuts.f_cuts.push(Cut {
                point: x.clone(),
                value: f,
                slope: sf,
            });
        }
        for &(eta, v) in &thresholds {
            let phi = eval.outcome_dist.shortfall2(eta);
            if phi - v > eps_d {
                let slope = shortfall_subgradient(&x, prob, &eval.outcomes, eta);
                let rhs = v - phi + dot(&slope, &x);
                g_cuts.push((slope, rhs));
            }
        }
    }
    let eval = evaluate_d(&x, prob, y)?;
    let f = prob.objective.eval(&x);
    Ok(trace.finish(SolveStatus::IterationLimit, x, f, &eval, 0.0))
}
