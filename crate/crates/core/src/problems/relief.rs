//! Emergency relief: deploy capacity at `I` centers and ship to `T` targets
//! under random demand and random route throughput; unmet demand costs `L`
//! per unit.
//!
//! The shortfall variables are eliminated analytically: for a fixed
//! shipment plan the cheapest shortfall in scenario `(s, r)` at target `j`
//! is `max(0, d_j^s - sum_i a_ij^r v_ij)`. The decision is therefore
//! `(x, v)` of dimension `I + I*T`, and each scenario cost is convex
//! piecewise linear. [`ReliefData::flattened_lp`] builds the equivalent
//! single LP over `(x, v, sigma)` for cross-checks on small instances.
//!
//! Sampling ranges: capacities `C_i` in [5, 15], deployment costs `c_i` and
//! shipping costs `q_ij` in [0.5, 2]. Demands take values in {1, ..., 5}.
//! When `S = k^T` for some `k <= 5`, every target gets `k` distinct levels
//! and the scenarios enumerate their full product; otherwise each scenario
//! draws every target's demand independently.
//!
//! Two benchmarks are derived from solved instances. The achievable one
//! starts from a cautious reference decision, the expected-cost minimizer
//! when unmet demand is priced [`RISK_AVERSE_FACTOR`] times higher. The
//! tightened one starts from the risk-neutral cost.

use rand::seq::index::sample;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::benchmark::{make_benchmark, BenchmarkMode};
use super::DEFAULT_SEED;
use crate::dist::Distribution;
use crate::error::{Error, Result};
use crate::lp::LpProblem;
use crate::solver::{
    solve_relaxed, Affine, ConcavePwl, ConvexPwl, Polytope, Scenario, ScenarioProblem, SolveReport,
    SolverConfig, Term,
};

const MAX_DEMAND: usize = 5;

/// Markup on the shortfall cost used to pick the reference decision.
pub const RISK_AVERSE_FACTOR: f64 = 1.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReliefSpec {
    pub centers: usize,
    pub targets: usize,
    pub demand_scenarios: usize,
    pub route_scenarios: usize,
    /// Cost per unit of unmet demand.
    pub shortfall_cost: f64,
    pub fail_prob: f64,
    /// Fraction of a shipment that arrives on a failed route.
    pub fail_throughput: f64,
    pub seed: u64,
}

impl Default for ReliefSpec {
    fn default() -> Self {
        Self {
            centers: 2,
            targets: 3,
            demand_scenarios: 27,
            route_scenarios: 100,
            shortfall_cost: 10.0,
            fail_prob: 0.3,
            fail_throughput: 0.5,
            seed: DEFAULT_SEED,
        }
    }
}

impl ReliefSpec {
    pub fn validate(&self) -> Result<()> {
        if self.centers == 0
            || self.targets == 0
            || self.demand_scenarios == 0
            || self.route_scenarios == 0
        {
            return Err(Error::InvalidSpec("all counts must be at least 1".into()));
        }
        for (name, v) in [
            ("fail_prob", self.fail_prob),
            ("fail_throughput", self.fail_throughput),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidSpec(format!(
                    "{name} must lie in [0, 1], got {v}"
                )));
            }
        }
        if !(self.shortfall_cost >= 0.0) || !self.shortfall_cost.is_finite() {
            return Err(Error::InvalidSpec(format!(
                "shortfall_cost must be finite and nonnegative, got {}",
                self.shortfall_cost
            )));
        }
        Ok(())
    }
}

/// Instance data. `ship_cost` and each `throughput[r]` are `I x T`,
/// row-major; `demand[s]` has one entry per target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReliefData {
    pub capacity: Vec<f64>,
    pub deploy_cost: Vec<f64>,
    pub ship_cost: Vec<f64>,
    pub shortfall_cost: f64,
    pub demand: Vec<Vec<f64>>,
    pub throughput: Vec<Vec<f64>>,
}

impl ReliefData {
    pub fn generate(spec: &ReliefSpec) -> Result<Self> {
        spec.validate()?;
        let (ni, nt) = (spec.centers, spec.targets);
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let capacity = (0..ni).map(|_| rng.gen_range(5.0..=15.0)).collect();
        let deploy_cost = (0..ni).map(|_| rng.gen_range(0.5..=2.0)).collect();
        let ship_cost = (0..ni * nt).map(|_| rng.gen_range(0.5..=2.0)).collect();
        let demand = demands(&mut rng, nt, spec.demand_scenarios);
        let throughput = (0..spec.route_scenarios)
            .map(|_| {
                (0..ni * nt)
                    .map(|_| {
                        if rng.gen::<f64>() < spec.fail_prob {
                            spec.fail_throughput
                        } else {
                            1.0
                        }
                    })
                    .collect()
            })
            .collect();
        Ok(Self {
            capacity,
            deploy_cost,
            ship_cost,
            shortfall_cost: spec.shortfall_cost,
            demand,
            throughput,
        })
    }

    pub fn centers(&self) -> usize {
        self.capacity.len()
    }

    pub fn targets(&self) -> usize {
        self.ship_cost.len() / self.centers()
    }

    /// Index of `v_ij` in the decision vector.
    pub fn ship_index(&self, i: usize, j: usize) -> usize {
        self.centers() + i * self.targets() + j
    }

    pub fn dim(&self) -> usize {
        self.centers() * (1 + self.targets())
    }

    fn scenario_prob(&self) -> f64 {
        1.0 / (self.demand.len() * self.throughput.len()) as f64
    }

    fn linear_cost(&self) -> Vec<f64> {
        let mut c = self.deploy_cost.clone();
        c.extend_from_slice(&self.ship_cost);
        c
    }

    fn feasible(&self) -> Polytope {
        let (ni, nt) = (self.centers(), self.targets());
        let mut upper = self.capacity.clone();
        for i in 0..ni {
            upper.extend(std::iter::repeat_n(self.capacity[i], nt));
        }
        let mut poly = Polytope::boxed(vec![0.0; self.dim()], upper);
        for i in 0..ni {
            let mut row = vec![0.0; self.dim()];
            row[i] = -1.0;
            for j in 0..nt {
                row[self.ship_index(i, j)] = 1.0;
            }
            poly.add_le(row, 0.0);
        }
        poly
    }

    /// Affine pieces `0` and `d_j^s - sum_i a_ij^r v_ij` of the shortfall at
    /// target `j`.
    fn shortfall_pieces(&self, s: usize, r: usize, j: usize) -> Vec<Affine> {
        let mut a = vec![0.0; self.dim()];
        for i in 0..self.centers() {
            a[self.ship_index(i, j)] = -self.throughput[r][i * self.targets() + j];
        }
        vec![
            Affine {
                a: vec![0.0; self.dim()],
                b: 0.0,
            },
            Affine {
                a,
                b: self.demand[s][j],
            },
        ]
    }

    fn scenario_pairs(&self) -> impl Iterator<Item = (usize, usize)> {
        let nr = self.throughput.len();
        (0..self.demand.len()).flat_map(move |s| (0..nr).map(move |r| (s, r)))
    }

    /// `f` is the expected cost; `g_sr` is the negated cost of scenario
    /// `(s, r)`.
    pub fn to_problem(&self) -> ScenarioProblem {
        let p = self.scenario_prob();
        let l = self.shortfall_cost;
        let linear = self.linear_cost();
        let mut objective_terms = Vec::new();
        let mut scenarios = Vec::new();
        for (s, r) in self.scenario_pairs() {
            let mut terms = Vec::with_capacity(self.targets());
            for j in 0..self.targets() {
                let pieces = self.shortfall_pieces(s, r, j);
                objective_terms.push(Term {
                    weight: p * l,
                    pieces: pieces.clone(),
                });
                terms.push(Term { weight: l, pieces });
            }
            let cost = ConvexPwl {
                linear: linear.clone(),
                constant: 0.0,
                terms,
            };
            scenarios.push(Scenario {
                prob: p,
                outcome: negate_convex(&cost),
            });
        }
        ScenarioProblem {
            dim: self.dim(),
            feasible: self.feasible(),
            objective: ConvexPwl {
                linear,
                constant: 0.0,
                terms: objective_terms,
            },
            scenarios,
        }
    }

    /// Cost of decision `(x, v)` in scenario `(s, r)`.
    pub fn scenario_cost(&self, xv: &[f64], s: usize, r: usize) -> f64 {
        let fixed: f64 = self.linear_cost().iter().zip(xv).map(|(c, v)| c * v).sum();
        let short: f64 = (0..self.targets())
            .map(|j| {
                let arrived: f64 = (0..self.centers())
                    .map(|i| self.throughput[r][i * self.targets() + j] * xv[self.ship_index(i, j)])
                    .sum();
                (self.demand[s][j] - arrived).max(0.0)
            })
            .sum();
        fixed + self.shortfall_cost * short
    }

    /// Distribution of the cost of `(x, v)` over all scenarios.
    pub fn cost_distribution(&self, xv: &[f64]) -> Result<Distribution> {
        let costs: Vec<f64> = self
            .scenario_pairs()
            .map(|(s, r)| self.scenario_cost(xv, s, r))
            .collect();
        Distribution::from_samples(&costs, None)
    }

    /// Point mass below every attainable outcome, so any decision
    /// dominates it.
    pub fn worst_case_outcome(&self) -> Result<Distribution> {
        let (ni, nt) = (self.centers(), self.targets());
        let deploy: f64 = (0..ni)
            .map(|i| {
                self.capacity[i]
                    * (self.deploy_cost[i]
                        + self.ship_cost[i * nt..(i + 1) * nt].iter().sum::<f64>())
            })
            .sum();
        let short: f64 = (0..nt)
            .map(|j| self.demand.iter().map(|d| d[j]).fold(0.0, f64::max))
            .sum();
        Distribution::degenerate(-(deploy + self.shortfall_cost * short))
    }

    /// Single LP over `(x, v, sigma)` with `sigma_j^{sr}` at index
    /// `dim() + (s * N + r) * T + j`. Its size grows with `T * S * N`, so it
    /// is meant for small instances.
    pub fn flattened_lp(&self) -> LpProblem {
        let (nt, nr) = (self.targets(), self.throughput.len());
        let base = self.dim();
        let n_sigma = nt * self.demand.len() * nr;
        let p = self.scenario_prob();
        let mut objective = self.linear_cost();
        objective.extend(std::iter::repeat_n(p * self.shortfall_cost, n_sigma));
        let mut lp = LpProblem::new(objective);
        self.feasible().install(&mut lp);
        for (s, r) in self.scenario_pairs() {
            for j in 0..nt {
                let mut row = vec![0.0; base + n_sigma];
                for i in 0..self.centers() {
                    row[self.ship_index(i, j)] = self.throughput[r][i * nt + j];
                }
                row[base + (s * nr + r) * nt + j] = 1.0;
                lp.add_ge(row, self.demand[s][j]);
            }
        }
        lp
    }
}

fn negate_convex(c: &ConvexPwl) -> ConcavePwl {
    let flip = |a: &Affine| Affine {
        a: a.a.iter().map(|v| -v).collect(),
        b: -a.b,
    };
    ConcavePwl {
        linear: c.linear.iter().map(|v| -v).collect(),
        constant: -c.constant,
        terms: c
            .terms
            .iter()
            .map(|t| Term {
                weight: t.weight,
                pieces: t.pieces.iter().map(flip).collect(),
            })
            .collect(),
    }
}

fn demands(rng: &mut ChaCha8Rng, targets: usize, scenarios: usize) -> Vec<Vec<f64>> {
    let levels_per_target = (1..=MAX_DEMAND).find(|k| {
        u32::try_from(targets)
            .ok()
            .and_then(|t| k.checked_pow(t))
            .is_some_and(|total| total == scenarios)
    });
    match levels_per_target {
        Some(k) => {
            let levels: Vec<Vec<f64>> = (0..targets)
                .map(|_| {
                    let mut l: Vec<f64> = sample(rng, MAX_DEMAND, k)
                        .into_iter()
                        .map(|v| (v + 1) as f64)
                        .collect();
                    l.sort_by(f64::total_cmp);
                    l
                })
                .collect();
            (0..scenarios)
                .map(|mut s| {
                    (0..targets)
                        .map(|j| {
                            let d = levels[j][s % k];
                            s /= k;
                            d
                        })
                        .collect()
                })
                .collect()
        }
        None => (0..scenarios)
            .map(|_| {
                (0..targets)
                    .map(|_| rng.gen_range(1..=MAX_DEMAND) as f64)
                    .collect()
            })
            .collect(),
    }
}

/// A generated relief instance with its risk-neutral and reference
/// solutions.
#[derive(Debug, Clone)]
pub struct ReliefInstance {
    pub data: ReliefData,
    pub problem: ScenarioProblem,
    /// Minimizer of expected cost (`alpha = 0`).
    pub risk_neutral: SolveReport,
    pub risk_neutral_cost: Distribution,
    pub reference_decision: Vec<f64>,
    pub reference_cost: Distribution,
}

impl ReliefInstance {
    /// Outcome benchmark `-B`. Achievable mode builds `B` from the
    /// reference cost, tightened mode from the risk-neutral cost.
    pub fn benchmark(&self, mode: BenchmarkMode, shrink: f64) -> Result<Distribution> {
        let source = match mode {
            BenchmarkMode::Achievable => &self.reference_cost,
            BenchmarkMode::Tightened => &self.risk_neutral_cost,
        };
        Ok(make_benchmark(source, mode, shrink)?.negate())
    }
}

fn min_expected_cost(data: &ReliefData, cfg: &SolverConfig) -> Result<SolveReport> {
    solve_relaxed(
        &data.to_problem(),
        &data.worst_case_outcome()?,
        &SolverConfig {
            alpha: 0.0,
            adaptive_alpha: false,
            ..cfg.clone()
        },
    )
}

/// Generates the instance and solves the risk-neutral and reference
/// problems.
pub fn relief_problem(spec: &ReliefSpec, cfg: &SolverConfig) -> Result<ReliefInstance> {
    let data = ReliefData::generate(spec)?;
    let risk_neutral = min_expected_cost(&data, cfg)?;
    let risk_neutral_cost = data.cost_distribution(&risk_neutral.x_star)?;
    let cautious = ReliefData {
        shortfall_cost: data.shortfall_cost * RISK_AVERSE_FACTOR,
        ..data.clone()
    };
    let reference_decision = min_expected_cost(&cautious, cfg)?.x_star;
    let reference_cost = data.cost_distribution(&reference_decision)?;
    Ok(ReliefInstance {
        problem: data.to_problem(),
        data,
        risk_neutral,
        risk_neutral_cost,
        reference_decision,
        reference_cost,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lp::{solve_lp, LpStatus};
    use crate::solver::SolveStatus;

    fn hand_instance() -> ReliefData {
        ReliefData {
            capacity: vec![10.0],
            deploy_cost: vec![1.0],
            ship_cost: vec![1.0],
            shortfall_cost: 10.0,
            demand: vec![vec![5.0]],
            throughput: vec![vec![1.0]],
        }
    }

    fn small_spec(seed: u64) -> ReliefSpec {
        ReliefSpec {
            centers: 2,
            targets: 2,
            demand_scenarios: 4,
            route_scenarios: 3,
            seed,
            ..Default::default()
        }
    }

    #[test]
    fn hand_instance_costs_ten() {
        let data = hand_instance();
        let lp = solve_lp(&data.flattened_lp()).unwrap();
        assert_eq!(lp.status, LpStatus::Optimal);
        assert!((lp.objective_value - 10.0).abs() < 1e-9);
        assert!((lp.x[0] - 5.0).abs() < 1e-9 && (lp.x[1] - 5.0).abs() < 1e-9);
        assert!(lp.x[2].abs() < 1e-9);

        let prob = data.to_problem();
        let r = solve_relaxed(
            &prob,
            &Distribution::degenerate(0.0).unwrap(),
            &SolverConfig::with_alpha(0.0),
        )
        .unwrap();
        assert!((r.f_star - 10.0).abs() < 1e-7);
        assert!((data.scenario_cost(&[5.0, 5.0], 0, 0) - 10.0).abs() < 1e-15);
    }

    #[test]
    fn eliminated_and_flattened_forms_agree() {
        for seed in 0..5 {
            let data = ReliefData::generate(&small_spec(seed)).unwrap();
            let lp = solve_lp(&data.flattened_lp()).unwrap();
            assert_eq!(lp.status, LpStatus::Optimal);
            let prob = data.to_problem();
            let r = solve_relaxed(
                &prob,
                &Distribution::degenerate(0.0).unwrap(),
                &SolverConfig::with_alpha(0.0),
            )
            .unwrap();
            assert_ne!(r.status, SolveStatus::IterationLimit);
            let tol = 1e-6 * (1.0 + lp.objective_value.abs());
            assert!(
                (r.f_star - lp.objective_value).abs() <= tol,
                "seed {seed}: {} vs {}",
                r.f_star,
                lp.objective_value
            );
            // the LP's (x, v) evaluated through the scenario costs gives the
            // LP value back
            let xv = &lp.x[..data.dim()];
            let mean = data.cost_distribution(xv).unwrap().mean();
            assert!((mean - lp.objective_value).abs() <= tol);
            assert!((prob.objective.eval(xv) - mean).abs() <= 1e-9 * (1.0 + mean));
        }
    }

    #[test]
    fn scenario_outcomes_are_negated_costs() {
        let data = ReliefData::generate(&small_spec(3)).unwrap();
        let prob = data.to_problem();
        let xv: Vec<f64> = prob.feasible.upper.iter().map(|u| 0.3 * u).collect();
        for (k, (s, r)) in data.scenario_pairs().enumerate() {
            let g = prob.scenarios[k].outcome.eval(&xv);
            assert!((g + data.scenario_cost(&xv, s, r)).abs() < 1e-12);
        }
    }

    #[test]
    fn paper_scale_shape() {
        let data = ReliefData::generate(&ReliefSpec::default()).unwrap();
        let prob = data.to_problem();
        prob.validate().unwrap();
        assert_eq!(prob.scenarios.len(), 2700);
        assert_eq!(prob.dim, 8);
        // 27 = 3^3: three distinct levels per target, full product
        let mut seen = data.demand.clone();
        seen.sort_by(|a, b| a.partial_cmp(b).unwrap());
        seen.dedup();
        assert_eq!(seen.len(), 27);
        for j in 0..3 {
            let mut levels: Vec<f64> = data.demand.iter().map(|d| d[j]).collect();
            levels.sort_by(f64::total_cmp);
            levels.dedup();
            assert_eq!(levels.len(), 3);
            assert!(levels.iter().all(|d| (1.0..=5.0).contains(d)));
        }
        let fails = data
            .throughput
            .iter()
            .flatten()
            .filter(|a| **a == 0.5)
            .count();
        let frac = fails as f64 / (100 * 6) as f64;
        assert!((frac - 0.3).abs() < 0.06, "{frac}");
    }

    #[test]
    fn seeded_generation_is_reproducible() {
        let a = ReliefData::generate(&small_spec(9)).unwrap();
        assert_eq!(a, ReliefData::generate(&small_spec(9)).unwrap());
        assert_ne!(a, ReliefData::generate(&small_spec(10)).unwrap());
    }

    #[test]
    fn invalid_specs_are_rejected() {
        for spec in [
            ReliefSpec {
                centers: 0,
                ..Default::default()
            },
            ReliefSpec {
                route_scenarios: 0,
                ..Default::default()
            },
            ReliefSpec {
                fail_prob: 1.5,
                ..Default::default()
            },
            ReliefSpec {
                fail_throughput: -0.1,
                ..Default::default()
            },
        ] {
            assert!(matches!(
                ReliefData::generate(&spec),
                Err(Error::InvalidSpec(_))
            ));
        }
    }

    #[test]
    fn risk_neutral_solve_is_optimal_feasible() {
        let inst = relief_problem(&small_spec(4), &SolverConfig::default()).unwrap();
        assert_eq!(inst.risk_neutral.status, SolveStatus::OptimalFeasible);
        assert_eq!(
            inst.risk_neutral
                .iterates
                .iter()
                .map(|r| r.theta_p)
                .fold(0.0, f64::max),
            0.0
        );
        let achievable = inst.benchmark(BenchmarkMode::Achievable, 0.0).unwrap();
        let e = crate::solver::evaluate_d(&inst.reference_decision, &inst.problem, &achievable)
            .unwrap();
        assert!(e.value <= 1e-12 * (1.0 + achievable.max_abs()));
        let tight = inst.benchmark(BenchmarkMode::Tightened, 0.5).unwrap();
        let e =
            crate::solver::evaluate_d(&inst.risk_neutral.x_star, &inst.problem, &tight).unwrap();
        assert!(e.value > 0.0);
    }

    #[test]
    fn outcomes_pass_a_concavity_probe() {
        let data = ReliefData::generate(&small_spec(5)).unwrap();
        super::super::tests::concavity_probe(&data.to_problem(), 5);
    }
}
