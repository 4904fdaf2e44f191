//! A dense two-phase primal simplex solver.
//!
//! Problems are stated with `<=` rows, `=` rows and per-variable bounds
//! (infinite bounds allowed) and are brought to standard form
//! `A x = b, x >= 0, b >= 0` by shifting, reflecting or splitting variables
//! and adding slacks. Phase one minimizes the sum of artificials; phase two
//! optimizes the real objective from the feasible basis it leaves behind.
//! Pricing is Dantzig's rule until a run of degenerate pivots is seen, after
//! which the solver falls back to Bland's least-index rule, which cannot
//! cycle. The final basic solution is recomputed from the original data by
//! a fresh factorization to shed accumulated pivoting error.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest magnitude accepted as a pivot element.
pub const PIVOT_TOL: f64 = 1e-9;
/// Relative primal feasibility tolerance.
pub const FEAS_TOL: f64 = 1e-8;
/// Consecutive degenerate pivots tolerated before switching to Bland's rule.
const DEGENERATE_STREAK: usize = 50;

/// `min c.x` subject to `le_rows`, `eq_rows` and `lower <= x <= upper`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpProblem {
    pub objective: Vec<f64>,
    /// Rows `(a, b)` meaning `a.x <= b`.
    pub le_rows: Vec<(Vec<f64>, f64)>,
    /// Rows `(a, b)` meaning `a.x = b`.
    pub eq_rows: Vec<(Vec<f64>, f64)>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl LpProblem {
    /// A problem over nonnegative variables with no rows.
    pub fn new(objective: Vec<f64>) -> Self {
        let n = objective.len();
        Self {
            objective,
            le_rows: Vec::new(),
            eq_rows: Vec::new(),
            lower: vec![0.0; n],
            upper: vec![f64::INFINITY; n],
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn add_le(&mut self, row: Vec<f64>, rhs: f64) {
        self.le_rows.push((row, rhs));
    }

    pub fn add_ge(&mut self, row: Vec<f64>, rhs: f64) {
        self.le_rows
            .push((row.into_iter().map(|a| -a).collect(), -rhs));
    }

    pub fn add_eq(&mut self, row: Vec<f64>, rhs: f64) {
        self.eq_rows.push((row, rhs));
    }

    pub fn set_bounds(&mut self, j: usize, lower: f64, upper: f64) {
        self.lower[j] = lower;
        self.upper[j] = upper;
    }

    fn validate(&self) -> Result<()> {
        let n = self.num_vars();
        if n == 0 {
            return Err(Error::Malformed("no variables".into()));
        }
        if self.lower.len() != n || self.upper.len() != n {
            return Err(Error::Malformed(format!(
                "{n} variables but {} lower and {} upper bounds",
                self.lower.len(),
                self.upper.len()
            )));
        }
        if self.objective.iter().any(|c| !c.is_finite()) {
            return Err(Error::Malformed("non-finite objective coefficient".into()));
        }
        for (k, (row, rhs)) in self.le_rows.iter().chain(&self.eq_rows).enumerate() {
            if row.len() != n {
                return Err(Error::Malformed(format!(
                    "row {k} has {} entries, expected {n}",
                    row.len()
                )));
            }
            if !rhs.is_finite() || row.iter().any(|a| !a.is_finite()) {
                return Err(Error::Malformed(format!("row {k} has non-finite entries")));
            }
        }
        for j in 0..n {
            let (lo, hi) = (self.lower[j], self.upper[j]);
            if lo.is_nan()
                || hi.is_nan()
                || lo > hi
                || lo == f64::INFINITY
                || hi == f64::NEG_INFINITY
            {
                return Err(Error::Malformed(format!(
                    "variable {j} has bounds [{lo}, {hi}]"
                )));
            }
        }
        Ok(())
    }

    /// Largest violation of any row or bound at `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let dot = |a: &[f64]| a.iter().zip(x).map(|(a, x)| a * x).sum::<f64>();
        let rows = self.le_rows.iter().map(|(a, b)| (dot(a) - b).max(0.0));
        let eqs = self.eq_rows.iter().map(|(a, b)| (dot(a) - b).abs());
        let bounds =
            (0..x.len()).map(|j| (self.lower[j] - x[j]).max(x[j] - self.upper[j]).max(0.0));
        rows.chain(eqs).chain(bounds).fold(0.0, f64::max)
    }

    /// `1 + ||rhs||_inf` over rows and finite bounds.
    pub fn rhs_scale(&self) -> f64 {
        let rows = self
            .le_rows
            .iter()
            .chain(&self.eq_rows)
            .map(|(_, b)| b.abs());
        let bounds = self
            .lower
            .iter()
            .chain(&self.upper)
            .filter(|b| b.is_finite())
            .map(|b| b.abs());
        1.0 + rows.chain(bounds).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpSolution {
    pub status: LpStatus,
    /// The optimal point; empty unless `status` is optimal.
    pub x: Vec<f64>,
    pub objective_value: f64,
    pub iterations: usize,
}

/// Seam for substituting another LP engine.
pub trait LpBackend {
    fn solve(&self, problem: &LpProblem) -> Result<LpSolution>;
}

/// The bundled dense simplex.
#[derive(Debug, Clone, Copy, Default)]
pub struct DenseSimplex;

impl LpBackend for DenseSimplex {
    fn solve(&self, problem: &LpProblem) -> Result<LpSolution> {
        problem.validate()?;
        let std = StandardForm::build(problem);
        let mut tab = Tableau::new(&std);
        let mut iterations = 0;

        let phase1_tol = FEAS_TOL * std.rhs_scale;
        iterations += tab.run(Phase::One)?.1;
        if tab.objective_value() > phase1_tol {
            return Ok(LpSolution {
                status: LpStatus::Infeasible,
                x: Vec::new(),
                objective_value: f64::NAN,
                iterations,
            });
        }
        tab.drive_out_artificials();
        tab.load_objective(&std.cost);
        let (outcome, it) = tab.run(Phase::Two)?;
        iterations += it;
        if outcome == Outcome::Unbounded {
            return Ok(LpSolution {
                status: LpStatus::Unbounded,
                x: Vec::new(),
                objective_value: f64::NEG_INFINITY,
                iterations,
            });
        }
        let xs = tab.basic_solution(&std);
        let x = std.recover(&xs);
        let violation = problem.max_violation(&x);
        if violation > FEAS_TOL * problem.rhs_scale() {
            return Err(Error::Numerical(format!(
                "optimal basis violates the constraints by {violation:e}"
            )));
        }
        let objective_value = problem.objective.iter().zip(&x).map(|(c, x)| c * x).sum();
        Ok(LpSolution {
            status: LpStatus::Optimal,
            x,
            objective_value,
            iterations,
        })
    }
}

pub fn solve_lp(problem: &LpProblem) -> Result<LpSolution> {
    DenseSimplex.solve(problem)
}

/// How an original variable is expressed through standard-form columns.
#[derive(Debug, Clone, Copy)]
enum VarMap {
    /// `x = lo + s`
    Shift { col: usize, lo: f64 },
    /// `x = hi - s`
    Reflect { col: usize, hi: f64 },
    /// `x = s+ - s-`
    Split { pos: usize, neg: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum RowKind {
    Le,
    Eq,
}

struct StandardForm {
    /// Structural columns.
    ncols: usize,
    rows: Vec<(Vec<f64>, f64, RowKind)>,
    cost: Vec<f64>,
    maps: Vec<VarMap>,
    rhs_scale: f64,
}

impl StandardForm {
    fn build(p: &LpProblem) -> Self {
        let n = p.num_vars();
        let mut maps = Vec::with_capacity(n);
        let mut ncols = 0;
        for j in 0..n {
            let (lo, hi) = (p.lower[j], p.upper[j]);
            let map = if lo.is_finite() {
                VarMap::Shift { col: ncols, lo }
            } else if hi.is_finite() {
                VarMap::Reflect { col: ncols, hi }
            } else {
                ncols += 1;
                VarMap::Split {
                    pos: ncols - 1,
                    neg: ncols,
                }
            };
            ncols += 1;
            maps.push(map);
        }
        let substitute = |a: &[f64], rhs: f64| -> (Vec<f64>, f64) {
            let mut row = vec![0.0; ncols];
            let mut b = rhs;
            for (j, &aj) in a.iter().enumerate() {
                if aj == 0.0 {
                    continue;
                }
                match maps[j] {
                    VarMap::Shift { col, lo } => {
                        row[col] += aj;
                        b -= aj * lo;
                    }
                    VarMap::Reflect { col, hi } => {
                        row[col] -= aj;
                        b -= aj * hi;
                    }
                    VarMap::Split { pos, neg } => {
                        row[pos] += aj;
                        row[neg] -= aj;
                    }
                }
            }
            (row, b)
        };
        let mut rows = Vec::new();
        for (a, b) in &p.le_rows {
            let (row, b) = substitute(a, *b);
            rows.push((row, b, RowKind::Le));
        }
        for (a, b) in &p.eq_rows {
            let (row, b) = substitute(a, *b);
            rows.push((row, b, RowKind::Eq));
        }
        for (j, map) in maps.iter().enumerate() {
            if let VarMap::Shift { col, lo } = *map {
                if p.upper[j].is_finite() {
                    let mut row = vec![0.0; ncols];
                    row[col] = 1.0;
                    rows.push((row, p.upper[j] - lo, RowKind::Le));
                }
            }
        }
        let (cost, _) = substitute(&p.objective, 0.0);
        let rhs_scale = 1.0 + rows.iter().map(|r| r.1.abs()).fold(0.0, f64::max);
        Self {
            ncols,
            rows,
            cost,
            maps,
            rhs_scale,
        }
    }

    fn recover(&self, s: &[f64]) -> Vec<f64> {
        self.maps
            .iter()
            .map(|m| match *m {
                VarMap::Shift { col, lo } => lo + s[col],
                VarMap::Reflect { col, hi } => hi - s[col],
                VarMap::Split { pos, neg } => s[pos] - s[neg],
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Phase {
    One,
    Two,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Outcome {
    Optimal,
    Unbounded,
}

/// Column layout: structural | slacks | artificials | rhs.
struct Tableau {
    m: usize,
    width: usize,
    /// First artificial column.
    art_start: usize,
    data: Vec<f64>,
    /// Reduced costs; the last entry is minus the objective value.
    d: Vec<f64>,
    basis: Vec<usize>,
    /// Original standard-form matrix and rhs, for the final refactorization.
    a0: Vec<f64>,
    b0: Vec<f64>,
    /// Artificial columns never re-enter once they leave.
    barred: Vec<bool>,
    iter_cap: usize,
}

impl Tableau {
    fn new(std: &StandardForm) -> Self {
        let m = std.rows.len();
        let nslack = std.rows.iter().filter(|r| r.2 == RowKind::Le).count();
        let needs_art: Vec<bool> = std
            .rows
            .iter()
            .map(|(_, b, kind)| *kind == RowKind::Eq || *b < 0.0)
            .collect();
        let nart = needs_art.iter().filter(|&&a| a).count();
        let ncols = std.ncols + nslack + nart;
        let width = ncols + 1;
        let art_start = std.ncols + nslack;
        let mut data = vec![0.0; m * width];
        let mut basis = vec![0; m];
        let mut slack = std.ncols;
        let mut art = art_start;
        for (i, (row, b, kind)) in std.rows.iter().enumerate() {
            let sign = if *b < 0.0 { -1.0 } else { 1.0 };
            let r = &mut data[i * width..(i + 1) * width];
            for (k, &a) in row.iter().enumerate() {
                r[k] = sign * a;
            }
            r[ncols] = sign * b;
            if *kind == RowKind::Le {
                r[slack] = sign;
                if !needs_art[i] {
                    basis[i] = slack;
                }
                slack += 1;
            }
            if needs_art[i] {
                r[art] = 1.0;
                basis[i] = art;
                art += 1;
            }
        }
        let mut a0 = Vec::with_capacity(m * ncols);
        let mut b0 = Vec::with_capacity(m);
        for i in 0..m {
            a0.extend_from_slice(&data[i * width..i * width + ncols]);
            b0.push(data[i * width + ncols]);
        }
        // phase-one costs: one per artificial, priced out against the basis
        let mut d = vec![0.0; width];
        for c in &mut d[art_start..ncols] {
            *c = 1.0;
        }
        for i in 0..m {
            if basis[i] >= art_start {
                for k in 0..width {
                    d[k] -= data[i * width + k];
                }
            }
        }
        Self {
            m,
            width,
            art_start,
            data,
            d,
            basis,
            a0,
            b0,
            barred: vec![false; ncols],
            iter_cap: 20_000 + 50 * (m + ncols),
        }
    }

    fn ncols(&self) -> usize {
        self.width - 1
    }

    fn at(&self, i: usize, k: usize) -> f64 {
        self.data[i * self.width + k]
    }

    fn rhs(&self, i: usize) -> f64 {
        self.at(i, self.width - 1)
    }

    fn objective_value(&self) -> f64 {
        -self.d[self.width - 1]
    }

    fn pivot(&mut self, r: usize, e: usize) {
        let w = self.width;
        let piv = self.data[r * w + e];
        for k in 0..w {
            self.data[r * w + k] /= piv;
        }
        self.data[r * w + e] = 1.0;
        let (before, rest) = self.data.split_at_mut(r * w);
        let (prow, after) = rest.split_at_mut(w);
        for row in before.chunks_exact_mut(w).chain(after.chunks_exact_mut(w)) {
            let f = row[e];
            if f != 0.0 {
                for k in 0..w {
                    row[k] -= f * prow[k];
                }
                row[e] = 0.0;
            }
        }
        let f = self.d[e];
        if f != 0.0 {
            for (dk, pk) in self.d.iter_mut().zip(prow.iter()) {
                *dk -= f * pk;
            }
            self.d[e] = 0.0;
        }
        for i in 0..self.m {
            let v = &mut self.data[i * w + w - 1];
            if *v < 0.0 && *v > -PIVOT_TOL {
                *v = 0.0;
            }
        }
        let leaving = self.basis[r];
        if leaving >= self.art_start {
            self.barred[leaving] = true;
        }
        self.basis[r] = e;
    }

    fn entering(&self, phase: Phase, bland: bool, tol: f64) -> Option<usize> {
        let last = if phase == Phase::Two {
            self.art_start
        } else {
            self.ncols()
        };
        let candidates = (0..last).filter(|&k| !self.barred[k] && self.d[k] < -tol);
        if bland {
            candidates.min()
        } else {
            candidates.min_by(|&a, &b| self.d[a].total_cmp(&self.d[b]).then(a.cmp(&b)))
        }
    }

    fn leaving(&self, e: usize, bland: bool) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for i in 0..self.m {
            let a = self.at(i, e);
            if a <= PIVOT_TOL {
                continue;
            }
            let ratio = self.rhs(i) / a;
            best = match best {
                None => Some((i, ratio)),
                Some((j, r)) => {
                    let tie = (ratio - r).abs() <= 1e-12 * (1.0 + r.abs());
                    let better = if tie {
                        if bland {
                            self.basis[i] < self.basis[j]
                        } else {
                            a > self.at(j, e)
                        }
                    } else {
                        ratio < r
                    };
                    if better {
                        Some((i, ratio))
                    } else {
                        Some((j, r))
                    }
                }
            };
        }
        best.map(|(i, _)| i)
    }

    fn run(&mut self, phase: Phase) -> Result<(Outcome, usize)> {
        let cmax = self.d[..self.ncols()]
            .iter()
            .fold(0.0f64, |m, c| m.max(c.abs()));
        let tol = PIVOT_TOL * (1.0 + cmax);
        let mut bland = false;
        let mut streak = 0;
        for it in 0..self.iter_cap {
            let Some(e) = self.entering(phase, bland, tol) else {
                return Ok((Outcome::Optimal, it));
            };
            let Some(r) = self.leaving(e, bland) else {
                if phase == Phase::One {
                    return Err(Error::Numerical("phase one reported unbounded".into()));
                }
                return Ok((Outcome::Unbounded, it));
            };
            if self.rhs(r) <= 1e-12 {
                streak += 1;
                if streak >= DEGENERATE_STREAK {
                    bland = true;
                }
            } else {
                streak = 0;
            }
            self.pivot(r, e);
        }
        Err(Error::Numerical(format!(
            "simplex did not converge in {} pivots",
            self.iter_cap
        )))
    }

    /// Pivots basic artificials (all at zero after a successful phase one)
    /// out of the basis where possible. Rows where no pivot exists are
    /// redundant; their artificial stays basic at zero and is never priced.
    fn drive_out_artificials(&mut self) {
        for r in 0..self.m {
            if self.basis[r] < self.art_start {
                continue;
            }
            let e = (0..self.art_start)
                .filter(|&k| self.at(r, k).abs() > PIVOT_TOL)
                .max_by(|&a, &b| self.at(r, a).abs().total_cmp(&self.at(r, b).abs()));
            if let Some(e) = e {
                self.pivot(r, e);
            }
        }
    }

    fn load_objective(&mut self, cost: &[f64]) {
        self.d.iter_mut().for_each(|v| *v = 0.0);
        self.d[..cost.len()].copy_from_slice(cost);
        for i in 0..self.m {
            let c = self.d[self.basis[i]];
            if c != 0.0 {
                for k in 0..self.width {
                    self.d[k] -= c * self.data[i * self.width + k];
                }
            }
        }
    }

    /// Basic values recomputed from the original matrix when the basis
    /// factorizes cleanly, otherwise read from the tableau.
    fn basic_solution(&self, std: &StandardForm) -> Vec<f64> {
        let n = self.ncols();
        let m = self.m;
        let mut s = vec![0.0; n];
        let mut bmat = vec![0.0; m * m];
        for i in 0..m {
            for (c, &col) in self.basis.iter().enumerate() {
                bmat[i * m + c] = self.a0[i * n + col];
            }
        }
        let tableau_values: Vec<f64> = (0..m).map(|i| self.rhs(i)).collect();
        let values = match solve_dense(bmat, self.b0.clone(), m) {
            Some(v) if v.iter().all(|&x| x >= -FEAS_TOL * std.rhs_scale) => v,
            _ => tableau_values,
        };
        for (i, &col) in self.basis.iter().enumerate() {
            s[col] = values[i].max(0.0);
        }
        s.truncate(std.ncols);
        s
    }
}

/// Solves `a x = b` by Gaussian elimination with partial pivoting; `None`
/// when the matrix is numerically singular.
fn solve_dense(mut a: Vec<f64>, mut b: Vec<f64>, m: usize) -> Option<Vec<f64>> {
    for k in 0..m {
        let p = (k..m).max_by(|&i, &j| a[i * m + k].abs().total_cmp(&a[j * m + k].abs()))?;
        if a[p * m + k].abs() < 1e-12 {
            return None;
        }
        if p != k {
            for c in 0..m {
                a.swap(k * m + c, p * m + c);
            }
            b.swap(k, p);
        }
        for i in k + 1..m {
            let f = a[i * m + k] / a[k * m + k];
            if f != 0.0 {
                for c in k..m {
                    a[i * m + c] -= f * a[k * m + c];
                }
                b[i] -= f * b[k];
            }
        }
    }
    let mut x = vec![0.0; m];
    for k in (0..m).rev() {
        let s: f64 = (k + 1..m).map(|c| a[k * m + c] * x[c]).sum();
        x[k] = (b[k] - s) / a[k * m + k];
    }
    Some(x)
}
