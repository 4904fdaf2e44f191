//! Problem data for the cutting-plane solver.
//!
//! Objectives and scenario outcomes are polyhedral: a linear part plus
//! nonnegative multiples of pointwise maxima (convex) or minima (concave)
//! of affine pieces. This covers both test families and serializes to a
//! plain JSON format with dense, row-major coefficient vectors.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lp::LpProblem;

/// `a.x + b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Affine {
    pub a: Vec<f64>,
    pub b: f64,
}

impl Affine {
    pub fn eval(&self, x: &[f64]) -> f64 {
        dot(&self.a, x) + self.b
    }
}

/// `weight * max_k pieces[k](x)` inside a convex function, or
/// `weight * min_k pieces[k](x)` inside a concave one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub weight: f64,
    pub pieces: Vec<Affine>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Curvature {
    Convex,
    Concave,
}

/// Index of the active piece: the first maximizer (convex) or minimizer
/// (concave).
fn active(pieces: &[Affine], x: &[f64], curvature: Curvature) -> (usize, f64) {
    let mut best = (0, pieces[0].eval(x));
    for (k, p) in pieces.iter().enumerate().skip(1) {
        let v = p.eval(x);
        let better = match curvature {
            Curvature::Convex => v > best.1,
            Curvature::Concave => v < best.1,
        };
        if better {
            best = (k, v);
        }
    }
    best
}

fn eval_with_gradient(
    linear: &[f64],
    constant: f64,
    terms: &[Term],
    x: &[f64],
    curvature: Curvature,
) -> (f64, Vec<f64>) {
    let mut value = dot(linear, x) + constant;
    let mut grad = linear.to_vec();
    for t in terms {
        let (k, v) = active(&t.pieces, x, curvature);
        value += t.weight * v;
        for (g, a) in grad.iter_mut().zip(&t.pieces[k].a) {
            *g += t.weight * a;
        }
    }
    (value, grad)
}

fn eval_only(
    linear: &[f64],
    constant: f64,
    terms: &[Term],
    x: &[f64],
    curvature: Curvature,
) -> f64 {
    dot(linear, x)
        + constant
        + terms
            .iter()
            .map(|t| t.weight * active(&t.pieces, x, curvature).1)
            .sum::<f64>()
}

fn check_terms(linear: &[f64], terms: &[Term], dim: usize, what: &str) -> Result<()> {
    if linear.len() != dim {
        return Err(Error::InvalidSpec(format!(
            "{what}: linear part has {} entries, expected {dim}",
            linear.len()
        )));
    }
    for t in terms {
        if !(t.weight >= 0.0) || !t.weight.is_finite() {
            return Err(Error::InvalidSpec(format!(
                "{what}: term weight {} must be finite and nonnegative",
                t.weight
            )));
        }
        if t.pieces.is_empty() {
            return Err(Error::InvalidSpec(format!("{what}: term without pieces")));
        }
        if t.pieces.iter().any(|p| p.a.len() != dim) {
            return Err(Error::InvalidSpec(format!(
                "{what}: piece of wrong dimension"
            )));
        }
    }
    Ok(())
}

/// `linear.x + constant + sum_t weight_t * max_k (a_k.x + b_k)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvexPwl {
    pub linear: Vec<f64>,
    #[serde(default)]
    pub constant: f64,
    #[serde(default)]
    pub terms: Vec<Term>,
}

impl ConvexPwl {
    pub fn linear(linear: Vec<f64>, constant: f64) -> Self {
        Self {
            linear,
            constant,
            terms: Vec::new(),
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        eval_only(
            &self.linear,
            self.constant,
            &self.terms,
            x,
            Curvature::Convex,
        )
    }

    /// Value and a subgradient.
    pub fn eval_subgradient(&self, x: &[f64]) -> (f64, Vec<f64>) {
        eval_with_gradient(
            &self.linear,
            self.constant,
            &self.terms,
            x,
            Curvature::Convex,
        )
    }
}

/// `linear.x + constant + sum_t weight_t * min_k (a_k.x + b_k)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcavePwl {
    pub linear: Vec<f64>,
    #[serde(default)]
    pub constant: f64,
    #[serde(default)]
    pub terms: Vec<Term>,
}

impl ConcavePwl {
    pub fn linear(linear: Vec<f64>, constant: f64) -> Self {
        Self {
            linear,
            constant,
            terms: Vec::new(),
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        eval_only(
            &self.linear,
            self.constant,
            &self.terms,
            x,
            Curvature::Concave,
        )
    }

    /// Value and a supergradient.
    pub fn eval_supergradient(&self, x: &[f64]) -> (f64, Vec<f64>) {
        eval_with_gradient(
            &self.linear,
            self.constant,
            &self.terms,
            x,
            Curvature::Concave,
        )
    }

    /// The convex function `-self`.
    pub fn negated(&self) -> ConvexPwl {
        let neg = |v: &[f64]| v.iter().map(|a| -a).collect::<Vec<_>>();
        ConvexPwl {
            linear: neg(&self.linear),
            constant: -self.constant,
            terms: self
                .terms
                .iter()
                .map(|t| Term {
                    weight: t.weight,
                    pieces: t
                        .pieces
                        .iter()
                        .map(|p| Affine {
                            a: neg(&p.a),
                            b: -p.b,
                        })
                        .collect(),
                })
                .collect(),
        }
    }
}

/// `{ x : le_rows x <= le_rhs, eq_rows x = eq_rhs, lower <= x <= upper }`
/// with every bound finite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polytope {
    #[serde(default)]
    pub le_rows: Vec<Vec<f64>>,
    #[serde(default)]
    pub le_rhs: Vec<f64>,
    #[serde(default)]
    pub eq_rows: Vec<Vec<f64>>,
    #[serde(default)]
    pub eq_rhs: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Polytope {
    pub fn boxed(lower: Vec<f64>, upper: Vec<f64>) -> Self {
        Self {
            le_rows: Vec::new(),
            le_rhs: Vec::new(),
            eq_rows: Vec::new(),
            eq_rhs: Vec::new(),
            lower,
            upper,
        }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn add_le(&mut self, row: Vec<f64>, rhs: f64) {
        self.le_rows.push(row);
        self.le_rhs.push(rhs);
    }

    fn validate(&self, dim: usize) -> Result<()> {
        if self.lower.len() != dim || self.upper.len() != dim {
            return Err(Error::InvalidSpec(format!(
                "bounds must have {dim} entries"
            )));
        }
        for j in 0..dim {
            let (lo, hi) = (self.lower[j], self.upper[j]);
            if !lo.is_finite() || !hi.is_finite() || lo > hi {
                return Err(Error::InvalidSpec(format!(
                    "variable {j} needs finite bounds lo <= hi, got [{lo}, {hi}]"
                )));
            }
        }
        if self.le_rows.len() != self.le_rhs.len() || self.eq_rows.len() != self.eq_rhs.len() {
            return Err(Error::InvalidSpec("row and rhs counts differ".into()));
        }
        if self
            .le_rows
            .iter()
            .chain(&self.eq_rows)
            .any(|r| r.len() != dim)
        {
            return Err(Error::InvalidSpec(format!("rows must have {dim} entries")));
        }
        Ok(())
    }

    /// Copies the rows and bounds into `lp`, whose first `dim` variables are
    /// the decision; remaining variables get zero coefficients.
    pub(crate) fn install(&self, lp: &mut LpProblem) {
        let n = lp.num_vars();
        let pad = |r: &Vec<f64>| {
            let mut row = r.clone();
            row.resize(n, 0.0);
            row
        };
        for (r, b) in self.le_rows.iter().zip(&self.le_rhs) {
            lp.add_le(pad(r), *b);
        }
        for (r, b) in self.eq_rows.iter().zip(&self.eq_rhs) {
            lp.add_eq(pad(r), *b);
        }
        for j in 0..self.dim() {
            lp.set_bounds(j, self.lower[j], self.upper[j]);
        }
    }

    /// Largest constraint violation at `x`.
    pub fn violation(&self, x: &[f64]) -> f64 {
        let rows = self
            .le_rows
            .iter()
            .zip(&self.le_rhs)
            .map(|(r, b)| (dot(r, x) - b).max(0.0));
        let eqs = self
            .eq_rows
            .iter()
            .zip(&self.eq_rhs)
            .map(|(r, b)| (dot(r, x) - b).abs());
        let bounds =
            (0..x.len()).map(|j| (self.lower[j] - x[j]).max(x[j] - self.upper[j]).max(0.0));
        rows.chain(eqs).chain(bounds).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub prob: f64,
    pub outcome: ConcavePwl,
}

/// `min f(x) + alpha * dist(G(x), A(Y))` data: a bounded polytope, a convex
/// objective and concave scenario outcomes `g_s` with probabilities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioProblem {
    pub dim: usize,
    pub feasible: Polytope,
    pub objective: ConvexPwl,
    pub scenarios: Vec<Scenario>,
}

impl ScenarioProblem {
    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::InvalidSpec(
                "decision dimension must be positive".into(),
            ));
        }
        self.feasible.validate(self.dim)?;
        check_terms(
            &self.objective.linear,
            &self.objective.terms,
            self.dim,
            "objective",
        )?;
        if self.scenarios.is_empty() {
            return Err(Error::InvalidSpec(
                "at least one scenario is required".into(),
            ));
        }
        let mut total = 0.0;
        for (s, sc) in self.scenarios.iter().enumerate() {
            if !(sc.prob >= 0.0) || !sc.prob.is_finite() {
                return Err(Error::InvalidSpec(format!(
                    "scenario {s} has probability {}",
                    sc.prob
                )));
            }
            total += sc.prob;
            check_terms(&sc.outcome.linear, &sc.outcome.terms, self.dim, "scenario")?;
        }
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidSpec(format!(
                "scenario probabilities sum to {total}"
            )));
        }
        Ok(())
    }

    pub fn probs(&self) -> Vec<f64> {
        self.scenarios.iter().map(|s| s.prob).collect()
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(a, b)| a * b).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hinge() -> ConvexPwl {
        ConvexPwl {
            linear: vec![0.5],
            constant: 1.0,
            terms: vec![Term {
                weight: 2.0,
                pieces: vec![
                    Affine {
                        a: vec![0.0],
                        b: 0.0,
                    },
                    Affine {
                        a: vec![1.0],
                        b: -1.0,
                    },
                ],
            }],
        }
    }

    #[test]
    fn convex_value_and_subgradient() {
        let f = hinge();
        assert_eq!(f.eval_subgradient(&[0.0]), (1.0, vec![0.5]));
        assert_eq!(f.eval_subgradient(&[3.0]), (1.0 + 1.5 + 4.0, vec![2.5]));
        // at the kink the first maximizer is reported
        assert_eq!(f.eval_subgradient(&[1.0]).1, vec![0.5]);
    }

    #[test]
    fn negation_flips_curvature() {
        let g = ConcavePwl {
            linear: vec![1.0, -1.0],
            constant: 0.5,
            terms: vec![Term {
                weight: 1.5,
                pieces: vec![
                    Affine {
                        a: vec![1.0, 0.0],
                        b: 0.0,
                    },
                    Affine {
                        a: vec![0.0, 1.0],
                        b: 1.0,
                    },
                ],
            }],
        };
        let f = g.negated();
        for x in [[0.0, 0.0], [2.0, -1.0], [-1.0, 3.0]] {
            assert_eq!(f.eval(&x), -g.eval(&x));
            let (_, sg) = g.eval_supergradient(&x);
            let (_, sf) = f.eval_subgradient(&x);
            assert_eq!(sf, sg.iter().map(|v| -v).collect::<Vec<_>>());
        }
    }

    #[test]
    fn validation() {
        let mut p = ScenarioProblem {
            dim: 1,
            feasible: Polytope::boxed(vec![0.0], vec![1.0]),
            objective: ConvexPwl::linear(vec![-1.0], 0.0),
            scenarios: vec![Scenario {
                prob: 1.0,
                outcome: ConcavePwl::linear(vec![1.0], 0.0),
            }],
        };
        assert!(p.validate().is_ok());
        p.feasible.upper[0] = f64::INFINITY;
        assert!(p.validate().is_err());
        p.feasible.upper[0] = 1.0;
        p.scenarios[0].prob = 0.5;
        assert!(p.validate().is_err());
    }

    #[test]
    fn json_round_trip() {
        let p = ScenarioProblem {
            dim: 1,
            feasible: Polytope::boxed(vec![0.0], vec![0.5]),
            objective: hinge(),
            scenarios: vec![Scenario {
                prob: 1.0,
                outcome: ConcavePwl::linear(vec![1.0], 0.0),
            }],
        };
        let text = serde_json::to_string(&p).unwrap();
        assert_eq!(serde_json::from_str::<ScenarioProblem>(&text).unwrap(), p);
    }
}
