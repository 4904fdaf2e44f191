//! Random instances for unit tests.

use proptest::prelude::*;
use rand::Rng;

use crate::dist::Distribution;

/// A random distribution with 1..=max_atoms atoms. About a third of the
/// draws use values on a coarse grid so that ties and shared atoms occur.
pub(crate) fn random_distribution<R: Rng>(rng: &mut R, max_atoms: usize) -> Distribution {
    let n = rng.gen_range(1..=max_atoms);
    let on_grid = rng.gen_bool(0.35);
    let shift: f64 = rng.gen_range(-3.0..3.0);
    let values: Vec<f64> = (0..n)
        .map(|_| {
            if on_grid {
                rng.gen_range(-8i32..=8) as f64 / 2.0
            } else {
                rng.gen_range(-5.0..5.0) + shift
            }
        })
        .collect();
    let weights: Vec<f64> = (0..n).map(|_| rng.gen_range(0.05..1.0)).collect();
    Distribution::from_samples(&values, Some(&weights)).unwrap()
}

pub(crate) fn arb_distribution(max_atoms: usize) -> impl Strategy<Value = Distribution> {
    let grid = (-8i32..=8).prop_map(|v| v as f64 / 2.0);
    let cont = -10.0f64..10.0;
    let value = prop_oneof![grid, cont];
    prop::collection::vec((value, 0.05f64..1.0), 1..=max_atoms).prop_map(|pairs| {
        let (v, w): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        Distribution::from_samples(&v, Some(&w)).unwrap()
    })
}
