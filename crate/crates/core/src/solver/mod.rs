//! Cutting-plane solver for `min f(x) + alpha * dist(G(x), A(Y))` over a
//! polytope, and a reference solver for the dominance-constrained problem.

mod config;
mod cutting_plane;
mod problem;

pub use config::SolverConfig;
pub use cutting_plane::{
    alpha_schedule, benchmark_shortfall, evaluate_d, interior_point, solve_dominance_constrained,
    solve_relaxed, subgrad_d, Cut, CutModel, DistanceEval, IterateRecord, SolveReport, SolveStatus,
};
pub use problem::{Affine, ConcavePwl, ConvexPwl, Polytope, Scenario, ScenarioProblem, Term};
