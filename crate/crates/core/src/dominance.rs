//! Stochastic dominance predicates and the closed-form transport distance to
//! the set of distributions dominating a benchmark in the second order.
//!
//! For finitely supported `X` and `Y` both shortfall functions are piecewise
//! linear with breakpoints at the atoms, and both Lorenz functions are
//! piecewise linear with breakpoints at the cumulative probabilities. Every
//! supremum below is therefore an exact maximum over a finite candidate set.
//! Below the smallest atom both shortfall functions vanish; beyond the
//! largest atom both have slope one, so their difference is constant and
//! equal to its asymptote `E[Y] - E[X]`.

use serde::{Deserialize, Serialize};

use crate::dist::{from_cells, merged_cells, merged_support, Distribution};
use crate::error::{Error, Result};

/// Relative tolerance of the dominance predicates.
pub const PREDICATE_RTOL: f64 = 1e-10;
/// Relative tolerance when cross-checking the two distance formulae.
pub const FORMULA_RTOL: f64 = 1e-9;
/// Absolute slack on cdf comparisons (cumulative sums carry rounding).
pub const CDF_TOL: f64 = 1e-12;
/// Points inserted per cell when checking orders other than 1 and 2.
pub const REFINEMENT: usize = 32;

/// Magnitude used to scale tolerances: the largest absolute atom value.
pub fn scale(x: &Distribution, y: &Distribution) -> f64 {
    x.max_abs().max(y.max_abs())
}

fn predicate_tol(x: &Distribution, y: &Distribution) -> f64 {
    PREDICATE_RTOL * (1.0 + scale(x, y))
}

/// First-order dominance: `F_x <= F_y` everywhere.
///
/// Both cdfs are right-continuous step functions, so checking the merged
/// atoms suffices.
pub fn dominates_first(x: &Distribution, y: &Distribution) -> bool {
    merged_support(x, y)
        .into_iter()
        .all(|eta| x.cdf(eta) <= y.cdf(eta) + CDF_TOL)
}

/// Second-order dominance: `E[(eta - x)+] <= E[(eta - y)+]` for all `eta`.
pub fn dominates_second(x: &Distribution, y: &Distribution) -> bool {
    let tol = predicate_tol(x, y);
    shortfall_gap_profile(x, y)
        .iter()
        .all(|&(_, gap)| gap <= tol)
}

/// Dominance of order `r >= 1` through the fractional transform.
///
/// Orders 1 and 2 are decided exactly. For other orders the transform is
/// compared on the merged atoms refined with [`REFINEMENT`] points per cell
/// plus a geometric sweep of the right tail; this is a numerical check.
pub fn dominates_r(x: &Distribution, y: &Distribution, r: f64) -> Result<bool> {
    if !(r >= 1.0) || !r.is_finite() {
        return Err(Error::out_of_range("r", r, "r >= 1"));
    }
    if r == 1.0 {
        return Ok(dominates_first(x, y));
    }
    if r == 2.0 {
        return Ok(dominates_second(x, y));
    }
    let support = merged_support(x, y);
    let lo = support[0];
    let hi = support[support.len() - 1];
    let span = (hi - lo).max(1.0);
    let mut grid = Vec::with_capacity(support.len() * REFINEMENT + 40);
    for w in support.windows(2) {
        for k in 0..REFINEMENT {
            grid.push(w[0] + (w[1] - w[0]) * k as f64 / REFINEMENT as f64);
        }
    }
    grid.push(hi);
    let mut step = span / 8.0;
    for _ in 0..30 {
        grid.push(hi + step);
        step *= 2.0;
    }
    // beyond the support the leading term of the difference is proportional
    // to eta^(r-2) (E[y] - E[x]); for r > 2 it must not be positive
    if r > 2.0 && x.mean() < y.mean() - predicate_tol(x, y) {
        return Ok(false);
    }
    for eta in grid {
        let fx = x.shortfall_r(eta, r)?;
        let fy = y.shortfall_r(eta, r)?;
        if fx > fy + PREDICATE_RTOL * (1.0 + fx.abs().max(fy.abs())) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Increasing convex order: `x` is ico-smaller than `y` iff `-x` dominates
/// `-y` in the second order.
pub fn ico_smaller(x: &Distribution, y: &Distribution) -> bool {
    dominates_second(&x.negate(), &y.negate())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GapSide {
    /// Supremum over probability levels `p` of the Lorenz gap.
    Lorenz,
    /// Supremum over thresholds `eta` of the shortfall gap.
    Shortfall,
}

/// A supremum of a gap function and where it is attained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapReport {
    pub sup_value: f64,
    /// A probability level for [`GapSide::Lorenz`], a threshold for
    /// [`GapSide::Shortfall`].
    pub argmax_location: f64,
    pub side: GapSide,
}

/// `sup_p (L_y(p) - L_x(p))` over `[0, 1]`, exact on the merged grid of
/// cumulative probabilities; ties go to the smallest `p`.
pub fn lorenz_gap_sup(x: &Distribution, y: &Distribution) -> GapReport {
    let mut best = GapReport {
        sup_value: 0.0,
        argmax_location: 0.0,
        side: GapSide::Lorenz,
    };
    for cell in merged_cells(x, y) {
        let p = cell.hi;
        let gap = y.lorenz_unchecked(p) - x.lorenz_unchecked(p);
        if gap > best.sup_value {
            best.sup_value = gap;
            best.argmax_location = p;
        }
    }
    best
}

/// Shortfall gap `E[(eta - x)+] - E[(eta - y)+]` at every merged atom, in
/// increasing order of `eta`.
pub fn shortfall_gap_profile(x: &Distribution, y: &Distribution) -> Vec<(f64, f64)> {
    let cx = x.shortfall2_curve();
    let cy = y.shortfall2_curve();
    merged_support(x, y)
        .into_iter()
        .map(|eta| (eta, cx.eval(eta) - cy.eval(eta)))
        .collect()
}

/// `sup_eta (E[(eta - x)+] - E[(eta - y)+])` over the real line; ties go to
/// the smallest `eta`.
///
/// The gap vanishes at the smallest merged atom and is constant beyond the
/// largest, so the maximum over merged atoms is the supremum.
pub fn shortfall_gap_sup(x: &Distribution, y: &Distribution) -> GapReport {
    let profile = shortfall_gap_profile(x, y);
    let mut best = GapReport {
        sup_value: profile[0].1,
        argmax_location: profile[0].0,
        side: GapSide::Shortfall,
    };
    for &(eta, gap) in &profile[1..] {
        if gap > best.sup_value {
            best.sup_value = gap;
            best.argmax_location = eta;
        }
    }
    best
}

/// `W_1` distance from `x` to the set of distributions dominating `y` in
/// the second order.
///
/// Both closed forms (Lorenz and shortfall) are evaluated and must agree;
/// a disagreement beyond [`FORMULA_RTOL`] is reported as an internal error.
pub fn dist_to_dominating(x: &Distribution, y: &Distribution) -> Result<f64> {
    let lorenz = lorenz_gap_sup(x, y).sup_value.max(0.0);
    let shortfall = shortfall_gap_sup(x, y).sup_value.max(0.0);
    let tol = FORMULA_RTOL * (1.0 + scale(x, y));
    if (lorenz - shortfall).abs() > tol {
        return Err(Error::InternalInconsistency(format!(
            "lorenz formula gives {lorenz}, shortfall formula gives {shortfall}"
        )));
    }
    Ok(lorenz)
}

/// The distribution whose quantile function is `max(Q_z, Q_x)`.
///
/// It dominates both inputs in the first order and is at least as close to
/// `x` as `z` is in every `W_l`.
pub fn monotone_envelope(z: &Distribution, x: &Distribution) -> Result<Distribution> {
    from_cells(
        merged_cells(z, x)
            .into_iter()
            .map(|c| (c.width(), c.first.max(c.second))),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::{arb_distribution, random_distribution};
    use crate::transport::wasserstein;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn spread() -> Distribution {
        Distribution::from_samples(&[0.0, 2.0], None).unwrap()
    }

    fn det(v: f64) -> Distribution {
        Distribution::degenerate(v).unwrap()
    }

    /// Brute-force supremum of the shortfall gap on a dense grid that
    /// contains every atom, using the defining sums directly.
    fn brute_shortfall_sup(x: &Distribution, y: &Distribution) -> f64 {
        let lo = x.min_value().min(y.min_value()) - 1.0;
        let hi = x.max_value().max(y.max_value()) + 1.0;
        let mut pts: Vec<f64> = (0..=2000)
            .map(|k| lo + (hi - lo) * k as f64 / 2000.0)
            .collect();
        pts.extend(x.values());
        pts.extend(y.values());
        pts.into_iter()
            .map(|eta| x.shortfall2(eta) - y.shortfall2(eta))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    #[test]
    fn first_order_examples() {
        let x = spread();
        assert!(dominates_first(&x, &x));
        assert!(dominates_first(&det(1.0), &det(0.0)));
        assert!(!dominates_first(&x, &det(1.0)));
    }

    #[test]
    fn second_order_examples() {
        assert!(dominates_second(&det(1.0), &spread()));
        assert!(dominates_second(&spread(), &spread()));
        assert!(!dominates_second(&spread(), &det(1.0)));
    }

    #[test]
    fn ico_examples() {
        let x = spread();
        assert!(ico_smaller(&x, &x));
        assert!(ico_smaller(&det(0.0), &det(1.0)));
        assert!(!ico_smaller(&x, &det(1.0)));
        assert!(!ico_smaller(&det(1.0), &x) || dominates_second(&det(-1.0), &x.negate()));
    }

    #[test]
    fn order_r_reduces_to_first_and_second() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..200 {
            let x = random_distribution(&mut rng, 8);
            let y = random_distribution(&mut rng, 8);
            assert_eq!(dominates_r(&x, &y, 1.0).unwrap(), dominates_first(&x, &y));
            assert_eq!(dominates_r(&x, &y, 2.0).unwrap(), dominates_second(&x, &y));
        }
        assert!(dominates_r(&det(0.0), &det(0.0), 0.5).is_err());
    }

    #[test]
    fn lorenz_sup_examples() {
        let x = spread();
        let r = lorenz_gap_sup(&x, &x);
        assert_eq!((r.sup_value, r.argmax_location), (0.0, 0.0));
        let r = lorenz_gap_sup(&x, &det(1.0));
        assert_eq!((r.sup_value, r.argmax_location), (0.5, 0.5));
        assert_eq!(lorenz_gap_sup(&det(1.0), &x).sup_value, 0.0);
    }

    #[test]
    fn shortfall_sup_examples() {
        let x = spread();
        assert_eq!(shortfall_gap_sup(&x, &x).sup_value, 0.0);
        let r = shortfall_gap_sup(&x, &det(1.0));
        assert_eq!((r.sup_value, r.argmax_location), (0.5, 1.0));
        let r = shortfall_gap_sup(&det(0.0), &det(1.0));
        assert_eq!((r.sup_value, r.argmax_location), (1.0, 1.0));
    }

    #[test]
    fn distance_examples() {
        assert_eq!(dist_to_dominating(&det(1.0), &spread()).unwrap(), 0.0);
        assert_eq!(dist_to_dominating(&det(0.0), &det(1.0)).unwrap(), 1.0);
        assert_eq!(dist_to_dominating(&spread(), &det(1.0)).unwrap(), 0.5);
    }

    #[test]
    fn envelope_examples() {
        let z = Distribution::from_samples(&[0.0, 3.0], None).unwrap();
        let x = Distribution::from_samples(&[1.0, 2.0], None).unwrap();
        let e = monotone_envelope(&z, &x).unwrap();
        assert_eq!(e, Distribution::from_samples(&[1.0, 3.0], None).unwrap());
        assert_eq!(monotone_envelope(&det(0.0), &det(1.0)).unwrap(), det(1.0));
        let above = Distribution::from_samples(&[2.0, 5.0], None).unwrap();
        assert_eq!(monotone_envelope(&above, &x).unwrap(), above);
    }

    #[test]
    fn shortfall_sup_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        for _ in 0..300 {
            let x = random_distribution(&mut rng, 20);
            let y = random_distribution(&mut rng, 20);
            let exact = shortfall_gap_sup(&x, &y).sup_value;
            let brute = brute_shortfall_sup(&x, &y);
            assert!((exact - brute).abs() <= 1e-10 * (1.0 + scale(&x, &y)));
        }
    }

    #[test]
    fn gap_reports_reevaluate() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..300 {
            let x = random_distribution(&mut rng, 20);
            let y = random_distribution(&mut rng, 20);
            let l = lorenz_gap_sup(&x, &y);
            let p = l.argmax_location;
            let again = y.lorenz(p).unwrap() - x.lorenz(p).unwrap();
            assert!((again - l.sup_value).abs() <= 1e-12 * (1.0 + scale(&x, &y)));
            let s = shortfall_gap_sup(&x, &y);
            let eta = s.argmax_location;
            let again = x.shortfall2(eta) - y.shortfall2(eta);
            assert!((again - s.sup_value).abs() <= 1e-12 * (1.0 + scale(&x, &y)));
        }
    }

    #[test]
    fn formulas_agree_on_random_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(24);
        for _ in 0..1000 {
            let x = random_distribution(&mut rng, 50);
            let y = random_distribution(&mut rng, 50);
            let l = lorenz_gap_sup(&x, &y).sup_value.max(0.0);
            let s = shortfall_gap_sup(&x, &y).sup_value.max(0.0);
            assert!((l - s).abs() <= FORMULA_RTOL * (1.0 + scale(&x, &y)));
        }
    }

    /// A random distribution dominating `y` in the second order: a
    /// mean-preserving contraction of `y` shifted up, then lifted over `x`.
    fn random_feasible<R: Rng>(rng: &mut R, x: &Distribution, y: &Distribution) -> Distribution {
        let blocks = rng.gen_range(1..=8);
        let shift: f64 = rng.gen_range(0.0..1.5);
        let z = y
            .conditional_coarsen(blocks)
            .unwrap()
            .shifted(shift)
            .unwrap();
        assert!(dominates_second(&z, y));
        monotone_envelope(&z, x).unwrap()
    }

    #[test]
    fn distance_is_a_lower_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(25);
        for _ in 0..100 {
            let x = random_distribution(&mut rng, 15);
            let y = random_distribution(&mut rng, 15);
            let d = dist_to_dominating(&x, &y).unwrap();
            for _ in 0..50 {
                let z = random_feasible(&mut rng, &x, &y);
                assert!(dominates_second(&z, &y));
                assert!(d <= wasserstein(&x, &z, 1.0).unwrap() + 1e-9);
            }
        }
    }

    #[test]
    fn mean_gap_bounds_distance_from_below_only() {
        let mut rng = ChaCha8Rng::seed_from_u64(26);
        for _ in 0..200 {
            let x = random_distribution(&mut rng, 10);
            let y = random_distribution(&mut rng, 10);
            let d = dist_to_dominating(&x, &y).unwrap();
            assert!(d >= y.mean() - x.mean() - 1e-12);
        }
        // equal means, positive distance: no upper bound by the mean gap
        let x = Distribution::from_samples(&[0.0, 2.0], None).unwrap();
        let y = Distribution::degenerate(1.0).unwrap();
        assert_eq!(x.mean(), y.mean());
        assert!((dist_to_dominating(&x, &y).unwrap() - 0.5).abs() < 1e-14);
    }

    #[test]
    fn mixtures_of_dominating_stay_dominating() {
        let mut rng = ChaCha8Rng::seed_from_u64(26);
        for _ in 0..200 {
            let x = random_distribution(&mut rng, 10);
            let y = random_distribution(&mut rng, 10);
            let z1 = random_feasible(&mut rng, &x, &y);
            let z2 = random_feasible(&mut rng, &x, &y);
            for lambda in [0.25, 0.5, 0.75] {
                let mut values: Vec<f64> = z1.values().collect();
                values.extend(z2.values());
                let mut weights: Vec<f64> = z1.probs().map(|p| lambda * p).collect();
                weights.extend(z2.probs().map(|p| (1.0 - lambda) * p));
                let mix = Distribution::from_samples(&values, Some(&weights)).unwrap();
                assert!(dominates_second(&mix, &y));
            }
        }
    }

    #[test]
    fn order_inclusions() {
        let mut rng = ChaCha8Rng::seed_from_u64(27);
        let mut hits = [0usize; 3];
        for _ in 0..400 {
            let y = random_distribution(&mut rng, 8);
            // bias towards dominating pairs so the implications get exercised
            let x = if rng.gen_bool(0.5) {
                let shift: f64 = rng.gen_range(-0.3..1.0);
                y.conditional_coarsen(rng.gen_range(1..=4))
                    .unwrap()
                    .shifted(shift)
                    .unwrap()
            } else {
                random_distribution(&mut rng, 8)
            };
            let d: Vec<bool> = [1.0, 2.0, 3.0]
                .iter()
                .map(|&r| dominates_r(&x, &y, r).unwrap())
                .collect();
            for (k, &b) in d.iter().enumerate() {
                hits[k] += b as usize;
            }
            assert!(!d[0] || d[1], "first without second");
            assert!(!d[1] || d[2], "second without third");
        }
        assert!(hits.iter().all(|&h| h > 10), "{hits:?}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(300))]

        #[test]
        fn ico_is_reflected_ssd(x in arb_distribution(10), y in arb_distribution(10)) {
            prop_assert_eq!(ico_smaller(&x, &y), dominates_second(&x.negate(), &y.negate()));
        }

        #[test]
        fn zero_distance_iff_dominating(x in arb_distribution(10), y in arb_distribution(10)) {
            let d = dist_to_dominating(&x, &y).unwrap();
            let tol = PREDICATE_RTOL * (1.0 + scale(&x, &y));
            prop_assert_eq!(d <= tol, dominates_second(&x, &y));
        }

        #[test]
        fn first_order_implies_second(x in arb_distribution(10), y in arb_distribution(10)) {
            let up = monotone_envelope(&x, &y).unwrap();
            prop_assert!(dominates_first(&up, &y));
            prop_assert!(dominates_second(&up, &y));
        }

        #[test]
        fn envelope_is_closer(z in arb_distribution(10), x in arb_distribution(10)) {
            let e = monotone_envelope(&z, &x).unwrap();
            prop_assert!(dominates_first(&e, &z));
            prop_assert!(dominates_first(&e, &x));
            for l in [1.0, 2.0] {
                prop_assert!(
                    wasserstein(&x, &e, l).unwrap() <= wasserstein(&x, &z, l).unwrap() + 1e-10
                );
            }
        }
    }
}
