//! Finitely supported distributions and their one-dimensional transforms.
//!
//! A [`Distribution`] stores its atoms sorted by value together with prefix
//! sums of probabilities and of probability-weighted values. Every transform
//! (cdf, quantile, shortfall, Lorenz) is answered from those prefix sums by
//! binary search.

use serde::{Deserialize, Serialize};

use crate::curve::PiecewiseLinear;
use crate::error::{Error, Result};

/// Probabilities may deviate from summing to one by at most this much before
/// they are renormalized.
pub const PROB_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub value: f64,
    pub prob: f64,
}

/// A finitely supported probability distribution on the real line.
///
/// Invariants: at least one atom; values strictly increasing; every
/// probability positive; probabilities sum to one within [`PROB_TOL`].
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution {
    atoms: Vec<Atom>,
    /// `cum[i] = P(X <= atoms[i].value)`; the last entry is exactly 1.
    cum: Vec<f64>,
    /// `partial_mean[i] = sum_{j <= i} p_j v_j`.
    partial_mean: Vec<f64>,
    renormalized: bool,
}

impl Distribution {
    /// Builds the empirical distribution of `values`, optionally weighted.
    ///
    /// Equal values are merged and weights are normalized to sum to one.
    pub fn from_samples(values: &[f64], weights: Option<&[f64]>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyInput);
        }
        if let Some(w) = weights {
            if w.len() != values.len() {
                return Err(Error::LengthMismatch(format!(
                    "{} values but {} weights",
                    values.len(),
                    w.len()
                )));
            }
        }
        let mut pairs = Vec::with_capacity(values.len());
        for (i, &v) in values.iter().enumerate() {
            let w = weights.map_or(1.0, |w| w[i]);
            check_finite(v)?;
            check_finite(w)?;
            if w < 0.0 {
                return Err(Error::NegativeWeight(w));
            }
            pairs.push(Atom { value: v, prob: w });
        }
        let mut merged = sort_and_merge(pairs);
        let total: f64 = merged.iter().map(|a| a.prob).sum();
        if total <= 0.0 {
            return Err(Error::ZeroTotalWeight);
        }
        for a in &mut merged {
            a.prob /= total;
        }
        Ok(Self::from_normalized(merged, false))
    }

    /// Builds a distribution from explicit atoms.
    ///
    /// Atoms are sorted and equal values merged. Zero-probability atoms are
    /// dropped. Probabilities that miss a unit sum by more than [`PROB_TOL`]
    /// are rescaled and the result is flagged (see [`Self::was_renormalized`]);
    /// otherwise they are kept bit for bit.
    pub fn from_atoms(atoms: Vec<Atom>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::EmptyInput);
        }
        for a in &atoms {
            check_finite(a.value)?;
            check_finite(a.prob)?;
            if a.prob < 0.0 {
                return Err(Error::NegativeWeight(a.prob));
            }
        }
        let mut merged = sort_and_merge(atoms);
        let total: f64 = merged.iter().map(|a| a.prob).sum();
        if total <= 0.0 {
            return Err(Error::ZeroTotalWeight);
        }
        let renormalized = (total - 1.0).abs() > PROB_TOL;
        if renormalized {
            log::warn!("atom probabilities sum to {total}; renormalizing");
            for a in &mut merged {
                a.prob /= total;
            }
        }
        Ok(Self::from_normalized(merged, renormalized))
    }

    /// Point mass at `value`.
    pub fn degenerate(value: f64) -> Result<Self> {
        check_finite(value)?;
        Ok(Self::from_normalized(
            vec![Atom { value, prob: 1.0 }],
            false,
        ))
    }

    fn from_normalized(atoms: Vec<Atom>, renormalized: bool) -> Self {
        let n = atoms.len();
        let mut cum = Vec::with_capacity(n);
        let mut partial_mean = Vec::with_capacity(n);
        let (mut c, mut m) = (0.0, 0.0);
        for a in &atoms {
            c += a.prob;
            m += a.prob * a.value;
            cum.push(c);
            partial_mean.push(m);
        }
        cum[n - 1] = 1.0;
        Self {
            atoms,
            cum,
            partial_mean,
            renormalized,
        }
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.atoms.iter().map(|a| a.value)
    }

    pub fn probs(&self) -> impl Iterator<Item = f64> + '_ {
        self.atoms.iter().map(|a| a.prob)
    }

    /// Cumulative probabilities at the atoms; the last entry is exactly 1.
    pub fn cumulative(&self) -> &[f64] {
        &self.cum
    }

    /// True when construction had to rescale the probabilities.
    pub fn was_renormalized(&self) -> bool {
        self.renormalized
    }

    pub fn min_value(&self) -> f64 {
        self.atoms[0].value
    }

    pub fn max_value(&self) -> f64 {
        self.atoms[self.atoms.len() - 1].value
    }

    /// Largest absolute atom value.
    pub fn max_abs(&self) -> f64 {
        self.min_value().abs().max(self.max_value().abs())
    }

    /// Right-continuous distribution function `P(X <= eta)`.
    pub fn cdf(&self, eta: f64) -> f64 {
        let k = self.atoms.partition_point(|a| a.value <= eta);
        if k == 0 {
            0.0
        } else {
            self.cum[k - 1]
        }
    }

    /// Index of the atom holding the smallest `p`-quantile.
    fn quantile_index(&self, p: f64) -> usize {
        let i = self.cum.partition_point(|&c| c < p);
        i.min(self.atoms.len() - 1)
    }

    /// Smallest `p`-quantile `inf { eta : F(eta) >= p }` for `p` in `(0, 1]`.
    pub fn quantile(&self, p: f64) -> Result<f64> {
        if !(p > 0.0 && p <= 1.0) {
            return Err(Error::out_of_range("p", p, "0 < p <= 1"));
        }
        Ok(self.atoms[self.quantile_index(p)].value)
    }

    /// Expected shortfall below a threshold, `E[max(eta - X, 0)]`.
    pub fn shortfall2(&self, eta: f64) -> f64 {
        self.atoms
            .iter()
            .take_while(|a| a.value < eta)
            .map(|a| a.prob * (eta - a.value))
            .sum()
    }

    /// The whole shortfall function as a curve with breakpoints at the atoms.
    pub fn shortfall2_curve(&self) -> PiecewiseLinear {
        let n = self.atoms.len();
        let xs: Vec<f64> = self.values().collect();
        let mut ys = Vec::with_capacity(n);
        let mut y = 0.0;
        ys.push(y);
        for k in 1..n {
            y += self.cum[k - 1] * (xs[k] - xs[k - 1]);
            ys.push(y);
        }
        PiecewiseLinear::from_parts_unchecked(xs, ys, 0.0, 1.0)
    }

    /// Expected excess over a threshold, `E[max(X - eta, 0)]`.
    pub fn excess2(&self, eta: f64) -> f64 {
        self.atoms
            .iter()
            .rev()
            .take_while(|a| a.value > eta)
            .map(|a| a.prob * (a.value - eta))
            .sum()
    }

    /// Absolute Lorenz function `int_0^p quantile(t) dt` for `p` in `[0, 1]`,
    /// zero at `p = 0`.
    pub fn lorenz(&self, p: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::out_of_range("p", p, "0 <= p <= 1"));
        }
        Ok(self.lorenz_unchecked(p))
    }

    pub(crate) fn lorenz_unchecked(&self, p: f64) -> f64 {
        if p <= 0.0 {
            return 0.0;
        }
        let i = self.quantile_index(p);
        if p == self.cum[i] {
            return self.partial_mean[i];
        }
        let (base, lower) = if i == 0 {
            (0.0, 0.0)
        } else {
            (self.partial_mean[i - 1], self.cum[i - 1])
        };
        base + (p - lower) * self.atoms[i].value
    }

    /// The Lorenz function as a curve on `[0, 1]` with breakpoints at the
    /// cumulative probabilities. Its end slopes are the extreme atoms.
    pub fn lorenz_curve(&self) -> PiecewiseLinear {
        let mut xs = vec![0.0];
        let mut ys = vec![0.0];
        for (c, m) in self.cum.iter().zip(&self.partial_mean) {
            if *c > *xs.last().unwrap() {
                xs.push(*c);
                ys.push(*m);
            }
        }
        PiecewiseLinear::from_parts_unchecked(xs, ys, self.min_value(), self.max_value())
    }

    /// Fractional-order transform `E[max(0, eta - X)^(r-1)] / Gamma(r)`.
    ///
    /// For `r = 1` the power is read as the indicator of `X <= eta`, so the
    /// result is the cdf.
    pub fn shortfall_r(&self, eta: f64, r: f64) -> Result<f64> {
        if !(r >= 1.0) || !r.is_finite() {
            return Err(Error::out_of_range("r", r, "r >= 1"));
        }
        if r == 1.0 {
            return Ok(self.cdf(eta));
        }
        if r == 2.0 {
            return Ok(self.shortfall2(eta));
        }
        let s: f64 = self
            .atoms
            .iter()
            .take_while(|a| a.value < eta)
            .map(|a| a.prob * (eta - a.value).powf(r - 1.0))
            .sum();
        Ok(s / gamma(r))
    }

    pub fn mean(&self) -> f64 {
        self.partial_mean[self.atoms.len() - 1]
    }

    /// Reflection through zero: the distribution of `-X`.
    pub fn negate(&self) -> Self {
        let atoms = self
            .atoms
            .iter()
            .rev()
            .map(|a| Atom {
                value: -a.value,
                prob: a.prob,
            })
            .collect();
        Self::from_normalized(atoms, self.renormalized)
    }

    /// Translation by `shift`.
    pub fn shifted(&self, shift: f64) -> Result<Self> {
        check_finite(shift)?;
        let atoms = self
            .atoms
            .iter()
            .map(|a| Atom {
                value: a.value + shift,
                prob: a.prob,
            })
            .collect();
        Self::from_atoms(atoms)
    }

    /// Averages the quantile function over `blocks` equal-probability blocks.
    ///
    /// The `i`-th atom is `N * int_{i/N}^{(i+1)/N} quantile(t) dt` with
    /// probability `1/N`, i.e. the conditional expectation of `X` given the
    /// block of the uniform variable generating it. The mean is preserved and
    /// the result dominates `X` in the second order.
    pub fn conditional_coarsen(&self, blocks: usize) -> Result<Self> {
        if blocks == 0 {
            return Err(Error::out_of_range("blocks", 0.0, "blocks >= 1"));
        }
        let n = blocks as f64;
        let mut atoms = Vec::with_capacity(blocks);
        let mut prev = 0.0;
        for i in 1..=blocks {
            let cur = self.lorenz_unchecked(i as f64 / n);
            atoms.push(Atom {
                value: (cur - prev) * n,
                prob: 1.0 / n,
            });
            prev = cur;
        }
        Self::from_atoms(atoms)
    }

    /// Half-open probability cells `(lo, hi]` on which the quantile function
    /// is constant.
    pub fn cells(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        let mut lo = 0.0;
        self.atoms.iter().zip(&self.cum).filter_map(move |(a, &c)| {
            let cell = (c > lo).then_some((lo, c, a.value));
            lo = lo.max(c);
            cell
        })
    }
}

/// A probability cell `(lo, hi]` of the merged quantile grid of two
/// distributions, carrying both quantile values on it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub lo: f64,
    pub hi: f64,
    pub first: f64,
    pub second: f64,
}

impl Cell {
    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

/// Splits `(0, 1]` at the cumulative probabilities of both distributions.
/// Both quantile functions are constant on each resulting cell.
pub fn merged_cells(a: &Distribution, b: &Distribution) -> Vec<Cell> {
    let (ca, cb) = (a.cumulative(), b.cumulative());
    let mut cells = Vec::with_capacity(ca.len() + cb.len());
    let (mut i, mut j) = (0, 0);
    let mut lo = 0.0;
    while i < ca.len() && j < cb.len() {
        let hi = ca[i].min(cb[j]);
        if hi > lo {
            cells.push(Cell {
                lo,
                hi,
                first: a.atoms[i].value,
                second: b.atoms[j].value,
            });
            lo = hi;
        }
        if ca[i] <= hi {
            i += 1;
        }
        if cb[j] <= hi {
            j += 1;
        }
    }
    cells
}

/// Sorted union of the atom values of both distributions.
pub fn merged_support(a: &Distribution, b: &Distribution) -> Vec<f64> {
    let mut out: Vec<f64> = a.values().chain(b.values()).collect();
    out.sort_by(f64::total_cmp);
    out.dedup();
    out
}

/// Assembles a distribution from quantile cells `(width, value)`.
pub(crate) fn from_cells(cells: impl IntoIterator<Item = (f64, f64)>) -> Result<Distribution> {
    let atoms: Vec<Atom> = cells
        .into_iter()
        .filter(|(w, _)| *w > 0.0)
        .map(|(w, v)| Atom { value: v, prob: w })
        .collect();
    Distribution::from_atoms(atoms)
}

fn check_finite(v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::NonFinite(v))
    }
}

fn sort_and_merge(mut atoms: Vec<Atom>) -> Vec<Atom> {
    atoms.sort_by(|a, b| a.value.total_cmp(&b.value));
    let mut out: Vec<Atom> = Vec::with_capacity(atoms.len());
    for a in atoms {
        match out.last_mut() {
            Some(last) if last.value == a.value => last.prob += a.prob,
            _ => out.push(a),
        }
    }
    out.retain(|a| a.prob > 0.0);
    out
}

/// Gamma function via the Lanczos approximation (relative error below
/// about 1e-13 on the range used here).
pub fn gamma(r: f64) -> f64 {
    statrs::function::gamma::gamma(r)
}

#[derive(Serialize, Deserialize)]
struct DistributionRepr {
    atoms: Vec<Atom>,
}

impl Serialize for Distribution {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        DistributionRepr {
            atoms: self.atoms.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Distribution {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let repr = DistributionRepr::deserialize(d)?;
        Distribution::from_atoms(repr.atoms).map_err(serde::de::Error::custom)
    }
}
