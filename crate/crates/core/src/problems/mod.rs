//! Seeded generators for the two test families: inspection design and
//! emergency relief.

mod benchmark;
mod inspection;
mod relief;

pub use benchmark::{make_benchmark, BenchmarkMode, ACHIEVABLE_MARGIN};
pub use inspection::{inspection_problem, InspectionData, InspectionSpec};
pub use relief::{relief_problem, ReliefData, ReliefInstance, ReliefSpec};

/// Default seed for every generator.
pub const DEFAULT_SEED: u64 = 20240284;
