use serde::{Deserialize, Serialize};

use crate::dist::{Atom, Distribution};
use crate::error::{Error, Result};

/// Shift applied to an achievable cost benchmark, as a fraction of the
/// spread (max minus min atom) of the source distribution.
pub const ACHIEVABLE_MARGIN: f64 = 0.02;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BenchmarkMode {
    /// The source cost shifted up by [`ACHIEVABLE_MARGIN`] times its
    /// spread, so the decision that produced it stays feasible.
    Achievable,
    /// Atoms above the mean pulled toward the mean by the factor `shrink`.
    Tightened,
}

/// Builds a cost benchmark from a cost distribution.
///
/// `shrink` only matters for [`BenchmarkMode::Tightened`]: 0 leaves the
/// distribution unchanged and 1 collapses every above-mean atom onto the
/// mean.
pub fn make_benchmark(
    cost: &Distribution,
    mode: BenchmarkMode,
    shrink: f64,
) -> Result<Distribution> {
    if !(0.0..=1.0).contains(&shrink) {
        return Err(Error::out_of_range("shrink", shrink, "0 <= shrink <= 1"));
    }
    match mode {
        BenchmarkMode::Achievable => {
            cost.shifted(ACHIEVABLE_MARGIN * (cost.max_value() - cost.min_value()))
        }
        BenchmarkMode::Tightened => {
            let mean = cost.mean();
            let atoms = cost
                .atoms()
                .iter()
                .map(|a| Atom {
                    value: if a.value > mean {
                        a.value - shrink * (a.value - mean)
                    } else {
                        a.value
                    },
                    prob: a.prob,
                })
                .collect();
            Distribution::from_atoms(atoms)
        }
    }
}
