//! Transport distances to second-order stochastic dominance sets.
//!
//! The crate covers four layers:
//!
//! * [`dist`] and [`curve`]: finitely supported distributions and their
//!   cdf, quantile, shortfall and Lorenz transforms;
//! * [`transport`], [`dominance`] and [`projection`]: Wasserstein distances
//!   on the line, dominance predicates, the closed-form distance of a
//!   distribution to the set of distributions dominating a benchmark, and
//!   the explicit projection onto that set;
//! * [`lp`] and [`oracle`]: a dense simplex solver and an independent
//!   LP formulation of the projection problem used for cross-checks;
//! * [`solver`] and [`problems`]: the cutting-plane method for
//!   `min f(x) + alpha * dist(G(x), A(Y))` over a polytope and generators
//!   for the inspection-design and emergency-relief test families.

// `!(x > 0.0)` is used on purpose so NaN lands in the rejecting branch.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod curve;
pub mod dist;
pub mod dominance;
pub mod error;
pub mod io;
pub mod lp;
pub mod oracle;
pub mod problems;
pub mod projection;
pub mod solver;
pub mod transport;

#[cfg(test)]
pub(crate) mod testutil;

pub use curve::PiecewiseLinear;
pub use dist::{Atom, Distribution};
pub use error::{Error, Result};
