//! Probability scores in the negative natural-log domain.
//!
//! Every probability in the crate is carried as a [`LogScore`]: the value
//! `-ln p`. Multiplying probabilities is adding scores, and summing
//! probabilities is [`log_add`]. Probability zero is `LogScore::INFINITY`,
//! which is absorbing under score addition and the identity of `log_add`.

use std::cmp::Ordering;
use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign};

/// A probability stored as its negative natural logarithm.
///
/// Lower is more probable: `LogScore::ZERO` is certainty and
/// `LogScore::INFINITY` is probability zero. Ordinary probabilities have
/// non-negative values; the sentence-end odds factor of the
/// transducer-to-segmental rewrite may exceed probability one, so negative
/// finite values are allowed and simply denote factors greater than one.
#[derive(Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(transparent)]
pub struct LogScore(f64);

impl LogScore {
    /// Probability 1.
    pub const ZERO: Self = LogScore(0.0);
    /// Probability 0. Absorbing under score addition.
    pub const INFINITY: Self = LogScore(f64::INFINITY);

    pub fn new(value: f64) -> Self {
        debug_assert!(!value.is_nan(), "LogScore must not be NaN");
        LogScore(value)
    }

    /// Score of a linear-domain probability (or nonnegative factor).
    pub fn from_prob(p: f64) -> Self {
        debug_assert!(p >= 0.0, "probability must be nonnegative, got {p}");
        if p == 0.0 {
            Self::INFINITY
        } else {
            LogScore(-p.ln())
        }
    }

    /// Linear-domain value `e^{-score}`.
    pub fn prob(self) -> f64 {
        if self.0.is_infinite() {
            0.0
        } else {
            (-self.0).exp()
        }
    }

    /// The raw negative-log value.
    pub fn value(self) -> f64 {
        self.0
    }

    /// True iff this score denotes probability zero.
    pub fn is_impossible(self) -> bool {
        self.0.is_infinite()
    }

    /// Score of `1 - p` for a probability `p <= 1`, evaluated stably:
    /// `ln(1 - e^{-x})` goes through `ln_1p` for large `x` and `exp_m1`
    /// for small `x`.
    pub fn one_minus(self) -> Self {
        debug_assert!(self.0 >= 0.0, "one_minus needs a probability <= 1");
        if self.0 == 0.0 {
            return Self::INFINITY;
        }
        if self.0.is_infinite() {
            return Self::ZERO;
        }
        let x = self.0;
        let log1m = if x > std::f64::consts::LN_2 {
            (-(-x).exp()).ln_1p()
        } else {
            (-(-x).exp_m1()).ln()
        };
        LogScore(-log1m)
    }

    /// Probability ratio `self / denom` as a score difference.
    ///
    /// A zero-probability denominator has no meaningful ratio; callers must
    /// guard it (the transform module maps it to an unreachable row).
    pub fn ratio(self, denom: Self) -> Self {
        debug_assert!(
            !denom.is_impossible() || self.is_impossible(),
            "ratio with zero denominator"
        );
        if self.is_impossible() {
            return Self::INFINITY;
        }
        LogScore(self.0 - denom.0)
    }

    /// Deterministic total order: smaller score (more probable) first.
    pub fn total_cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// A probability as stored in model tables: the exact linear-domain value
/// (the serialization currency, written to and read from files verbatim)
/// paired with its negative-log score (the arithmetic currency). Carrying
/// both keeps canonical files byte-stable across load/save cycles, since
/// `exp` and `ln` do not invert each other exactly.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TableProb {
    linear: f64,
    score: LogScore,
}

impl TableProb {
    pub const ZERO: Self = TableProb {
        linear: 0.0,
        score: LogScore::INFINITY,
    };

    pub fn from_linear(p: f64) -> Self {
        TableProb {
            linear: p,
            score: LogScore::from_prob(p),
        }
    }

    pub fn from_score(score: LogScore) -> Self {
        TableProb {
            linear: score.prob(),
            score,
        }
    }

    pub fn linear(self) -> f64 {
        self.linear
    }

    pub fn score(self) -> LogScore {
        self.score
    }

    pub fn is_zero(self) -> bool {
        self.linear == 0.0
    }
}

/// Sum of two probabilities: `-ln(e^{-x} + e^{-y})`, factoring out the
/// more probable term so the exponential never overflows.
pub fn log_add(x: LogScore, y: LogScore) -> LogScore {
    if x.is_impossible() {
        return y;
    }
    if y.is_impossible() {
        return x;
    }
    let (best, rest) = if x.0 <= y.0 { (x.0, y.0) } else { (y.0, x.0) };
    LogScore(best - (-(rest - best)).exp().ln_1p())
}

/// `log_add` over an iterator; empty input is probability zero.
pub fn log_sum<I: IntoIterator<Item = LogScore>>(scores: I) -> LogScore {
    scores
        .into_iter()
        .fold(LogScore::INFINITY, |acc, s| log_add(acc, s))
}

impl Add for LogScore {
    type Output = LogScore;

    /// Product of probabilities (score addition). Infinity absorbs.
    fn add(self, rhs: LogScore) -> LogScore {
        if self.is_impossible() || rhs.is_impossible() {
            LogScore::INFINITY
        } else {
            LogScore(self.0 + rhs.0)
        }
    }
}

impl AddAssign for LogScore {
    fn add_assign(&mut self, rhs: LogScore) {
        *self = *self + rhs;
    }
}

impl Sum for LogScore {
    fn sum<I: Iterator<Item = LogScore>>(iter: I) -> LogScore {
        iter.fold(LogScore::ZERO, |acc, s| acc + s)
    }
}

impl Eq for LogScore {}

impl PartialOrd for LogScore {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.total_cmp(other))
    }
}

impl Ord for LogScore {
    fn cmp(&self, other: &Self) -> Ordering {
        self.total_cmp(other)
    }
}

impl fmt::Debug for LogScore {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_infinite() {
            write!(f, "LogScore(inf)")
        } else {
            write!(f, "LogScore({})", self.0)
        }
    }
}

impl fmt::Display for LogScore {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_infinite() {
            write!(f, "inf")
        } else {
            write!(f, "{}", self.0)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(p: f64) -> LogScore {
        LogScore::from_prob(p)
    }

    #[test]
    fn log_add_zero_probability_identity() {
        let half = s(0.5);
        assert_eq!(log_add(LogScore::INFINITY, half), half);
        assert_eq!(log_add(half, LogScore::INFINITY), half);
    }

    #[test]
    fn log_add_halves_sum_to_one() {
        let r = log_add(s(0.5), s(0.5));
        assert!((r.value() - 0.0).abs() < 1e-15);
    }

    #[test]
    fn log_add_linear_domain_check() {
        // 0.36 + 0.288 = 0.648
        let r = log_add(s(0.36), s(0.288));
        assert!((r.value() - s(0.648).value()).abs() < 1e-12);
    }

    #[test]
    fn product_absorbs_infinity() {
        assert!((s(0.5) + LogScore::INFINITY).is_impossible());
        assert!((LogScore::INFINITY + s(0.5)).is_impossible());
        let r = s(0.5) + s(0.25);
        assert!((r.prob() - 0.125).abs() < 1e-15);
    }

    #[test]
    fn one_minus_edge_cases() {
        assert!(LogScore::ZERO.one_minus().is_impossible());
        assert_eq!(LogScore::INFINITY.one_minus(), LogScore::ZERO);
        assert!((s(0.6).one_minus().prob() - 0.4).abs() < 1e-15);
        // tiny probability: 1 - p stays accurate
        let tiny = s(1e-300);
        assert!((tiny.one_minus().prob() - 1.0).abs() < 1e-15);
        // near-one probability: result is the small remainder
        let near_one = LogScore::new(1e-12);
        let rem = near_one.one_minus();
        assert!((rem.prob() / 1e-12 - 1.0).abs() < 1e-3);
    }

    #[test]
    fn ratio_matches_linear_division() {
        let r = s(0.5).ratio(s(0.8));
        assert!((r.prob() - 0.625).abs() < 1e-15);
    }

    #[test]
    fn ordering_places_infinity_last() {
        let mut v = vec![LogScore::INFINITY, s(0.9), s(0.1)];
        v.sort();
        assert_eq!(v[0], s(0.9));
        assert!(v[2].is_impossible());
    }
}

#[cfg(test)]
mod properties {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn log_add_commutative(a in 0.0f64..50.0, b in 0.0f64..50.0) {
            let x = LogScore::new(a);
            let y = LogScore::new(b);
            let d = (log_add(x, y).value() - log_add(y, x).value()).abs();
            prop_assert!(d < 1e-12);
        }

        #[test]
        fn log_add_associative(a in 0.0f64..50.0, b in 0.0f64..50.0, c in 0.0f64..50.0) {
            let (x, y, z) = (LogScore::new(a), LogScore::new(b), LogScore::new(c));
            let l = log_add(log_add(x, y), z).value();
            let r = log_add(x, log_add(y, z)).value();
            prop_assert!((l - r).abs() < 1e-12);
        }

        #[test]
        fn round_trip_prob(p in 1e-12f64..1.0) {
            let r = LogScore::from_prob(p).prob();
            prop_assert!((r - p).abs() <= p * 1e-12);
        }
    }
}
