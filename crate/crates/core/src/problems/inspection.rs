//! Inspection design: split a time budget across `N` searches to trade
//! search cost against a concave, scenario-dependent quality reward.
//!
//! Sampling ranges (all uniform, per search `n` and scenario `s`):
//! time weights `w_n` in [0.5, 2]; costs `c_n` in [0.5, 2] scaled by
//! `0.1 / N`; quality pieces `min(e_s.x, 0.25 e_s.x + beta_s, cap_s)` with
//! `e_sn` in [0, 2/N], `beta_s` in [0.2, 0.6], `cap_s` in [0.6, 1.2].
//! Scenarios are equally likely.
//!
//! The benchmark is the outcome distribution of a cautious reference
//! decision, the maximizer of the worst scenario outcome.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::benchmark::{make_benchmark, BenchmarkMode};
use super::DEFAULT_SEED;
use crate::dist::Distribution;
use crate::error::{Error, Result};
use crate::solver::{
    solve_relaxed, Affine, ConcavePwl, ConvexPwl, Polytope, Scenario, ScenarioProblem,
    SolverConfig, Term,
};

const COST_SCALE: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InspectionSpec {
    /// Number of searches.
    pub n: usize,
    pub scenarios: usize,
    /// Weight of expected quality in the objective.
    pub kappa: f64,
    /// Time budget. `None` means one unit per search.
    pub budget: Option<f64>,
    pub seed: u64,
    /// Pull the benchmark's bad outcomes toward its mean by this factor.
    /// `None` keeps the achievable benchmark.
    pub tighten: Option<f64>,
}

impl Default for InspectionSpec {
    fn default() -> Self {
        Self {
            n: 20,
            scenarios: 100,
            kappa: 1.0,
            budget: None,
            seed: DEFAULT_SEED,
            tighten: None,
        }
    }
}

impl InspectionSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.scenarios == 0 {
            return Err(Error::InvalidSpec(
                "n and scenarios must be at least 1".into(),
            ));
        }
        if !(self.kappa > 0.0) || !self.kappa.is_finite() {
            return Err(Error::InvalidSpec(format!(
                "kappa must be positive, got {}",
                self.kappa
            )));
        }
        if let Some(m) = self.budget {
            if !(m > 0.0) || !m.is_finite() {
                return Err(Error::InvalidSpec(format!(
                    "budget must be positive, got {m}"
                )));
            }
        }
        if let Some(s) = self.tighten {
            if !(0.0..=1.0).contains(&s) {
                return Err(Error::InvalidSpec(format!(
                    "tighten must lie in [0, 1], got {s}"
                )));
            }
        }
        Ok(())
    }
}

/// Instance data. `quality[s]` lists the affine pieces whose minimum is the
/// quality in scenario `s`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InspectionData {
    pub cost: Vec<f64>,
    pub time: Vec<f64>,
    pub budget: f64,
    pub kappa: f64,
    pub probs: Vec<f64>,
    pub quality: Vec<Vec<Affine>>,
}

impl InspectionData {
    pub fn generate(spec: &InspectionSpec) -> Result<Self> {
        spec.validate()?;
        let n = spec.n;
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let time: Vec<f64> = (0..n).map(|_| rng.gen_range(0.5..=2.0)).collect();
        let cost: Vec<f64> = (0..n)
            .map(|_| rng.gen_range(0.5..=2.0) * COST_SCALE / n as f64)
            .collect();
        let quality = (0..spec.scenarios)
            .map(|_| {
                let e: Vec<f64> = (0..n)
                    .map(|_| rng.gen_range(0.0..=2.0 / n as f64))
                    .collect();
                let beta = rng.gen_range(0.2..=0.6);
                let cap = rng.gen_range(0.6..=1.2);
                vec![
                    Affine {
                        a: e.clone(),
                        b: 0.0,
                    },
                    Affine {
                        a: e.iter().map(|v| 0.25 * v).collect(),
                        b: beta,
                    },
                    Affine {
                        a: vec![0.0; n],
                        b: cap,
                    },
                ]
            })
            .collect();
        Ok(Self {
            cost,
            time,
            budget: spec.budget.unwrap_or(n as f64),
            kappa: spec.kappa,
            probs: vec![1.0 / spec.scenarios as f64; spec.scenarios],
            quality,
        })
    }

    pub fn dim(&self) -> usize {
        self.cost.len()
    }

    /// `f(x) = c.x - kappa E[q(x)]` and `g_s(x) = q_s(x) - c.x` over
    /// `{x >= 0, w.x <= M}` with the implied box `x_n <= M / w_n`.
    pub fn to_problem(&self) -> ScenarioProblem {
        let n = self.dim();
        let mut feasible = Polytope::boxed(
            vec![0.0; n],
            self.time.iter().map(|w| self.budget / w).collect(),
        );
        feasible.add_le(self.time.clone(), self.budget);
        let objective = ConvexPwl {
            linear: self.cost.clone(),
            constant: 0.0,
            terms: self
                .quality
                .iter()
                .zip(&self.probs)
                .map(|(pieces, p)| Term {
                    weight: self.kappa * p,
                    pieces: pieces.iter().map(negate).collect(),
                })
                .collect(),
        };
        let scenarios = self
            .quality
            .iter()
            .zip(&self.probs)
            .map(|(pieces, p)| Scenario {
                prob: *p,
                outcome: ConcavePwl {
                    linear: self.cost.iter().map(|c| -c).collect(),
                    constant: 0.0,
                    terms: vec![Term {
                        weight: 1.0,
                        pieces: pieces.clone(),
                    }],
                },
            })
            .collect();
        ScenarioProblem {
            dim: n,
            feasible,
            objective,
            scenarios,
        }
    }

    /// Maximizer of `min_s g_s(x)`. The worst-case loss
    /// `max_{s,k} (c - a_sk).x - b_sk` is a single polyhedral term, so the
    /// cutting-plane solver handles it with the penalty switched off.
    pub fn reference_decision(&self) -> Result<Vec<f64>> {
        let pieces = self
            .quality
            .iter()
            .flatten()
            .map(|q| Affine {
                a: self.cost.iter().zip(&q.a).map(|(c, a)| c - a).collect(),
                b: -q.b,
            })
            .collect();
        let worst = ScenarioProblem {
            objective: ConvexPwl {
                linear: vec![0.0; self.dim()],
                constant: 0.0,
                terms: vec![Term {
                    weight: 1.0,
                    pieces,
                }],
            },
            ..self.to_problem()
        };
        // q_s >= 0 on the feasible set, so every decision dominates a point
        // mass below -c.x_max
        let floor = -self
            .cost
            .iter()
            .zip(&self.time)
            .map(|(c, w)| c * self.budget / w)
            .sum::<f64>();
        let r = solve_relaxed(
            &worst,
            &Distribution::degenerate(floor - 1.0)?,
            &SolverConfig::with_alpha(0.0),
        )?;
        Ok(r.x_star)
    }

    /// Outcome distribution of the reference decision, made slightly worse
    /// (achievable) or tightened toward its mean by `tighten`.
    pub fn benchmark(&self, tighten: Option<f64>) -> Result<Distribution> {
        let prob = self.to_problem();
        let x = self.reference_decision()?;
        let loss: Vec<f64> = prob.scenarios.iter().map(|s| -s.outcome.eval(&x)).collect();
        let loss = Distribution::from_samples(&loss, Some(&self.probs))?;
        let b = match tighten {
            None => make_benchmark(&loss, BenchmarkMode::Achievable, 0.0)?,
            Some(s) => make_benchmark(&loss, BenchmarkMode::Tightened, s)?,
        };
        Ok(b.negate())
    }
}

fn negate(a: &Affine) -> Affine {
    Affine {
        a: a.a.iter().map(|v| -v).collect(),
        b: -a.b,
    }
}

/// Generates the scenario problem and its outcome benchmark.
pub fn inspection_problem(spec: &InspectionSpec) -> Result<(ScenarioProblem, Distribution)> {
    let data = InspectionData::generate(spec)?;
    let y = data.benchmark(spec.tighten)?;
    Ok((data.to_problem(), y))
}
