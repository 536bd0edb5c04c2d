//! Symbolic monotone sequences `limit ± coefficient · (start + stride·i)^(-exponent)`
//! pushed through a chain of monotone rational maps.

use std::cmp::Ordering;

use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::exact::{pow_u64, to_f64, Q};

/// Side from which the base sequence approaches its limit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Direction {
    /// Terms strictly above the limit, decreasing towards it.
    FromAbove,
    /// Terms strictly below the limit, increasing towards it.
    FromBelow,
}

impl Direction {
    pub fn flip(self) -> Self {
        match self {
            Direction::FromAbove => Direction::FromBelow,
            Direction::FromBelow => Direction::FromAbove,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TailError {
    #[error("tail coefficient must be positive, got {0}")]
    NonPositiveCoefficient(Q),
    #[error("tail exponent must be at least 1")]
    ZeroExponent,
    #[error("tail start index must be at least 1")]
    ZeroStart,
    #[error("tail stride must be at least 1")]
    ZeroStride,
    #[error("tail limit must be nonnegative, got {0}")]
    NegativeLimit(Q),
    #[error("tail has a negative term {term} at index {index}")]
    NegativeTerm { index: u64, term: Q },
    #[error("reciprocal needs strictly positive terms (infimum {0})")]
    ReciprocalDomain(Q),
    #[error("squaring needs nonnegative terms (infimum {0})")]
    SquareDomain(Q),
}

/// Base sequence `limit ± coefficient · n^(-exponent)` for `n = start_index + stride·i`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TailRule {
    limit: Q,
    direction: Direction,
    coefficient: Q,
    exponent: u32,
    start_index: u64,
    stride: u64,
}

impl TailRule {
    pub fn new(
        limit: Q,
        direction: Direction,
        coefficient: Q,
        exponent: u32,
        start_index: u64,
    ) -> Result<Self, TailError> {
        Self::with_stride(limit, direction, coefficient, exponent, start_index, 1)
    }

    pub fn with_stride(
        limit: Q,
        direction: Direction,
        coefficient: Q,
        exponent: u32,
        start_index: u64,
        stride: u64,
    ) -> Result<Self, TailError> {
        if !coefficient.is_positive() {
            return Err(TailError::NonPositiveCoefficient(coefficient));
        }
        if exponent == 0 {
            return Err(TailError::ZeroExponent);
        }
        if start_index == 0 {
            return Err(TailError::ZeroStart);
        }
        if stride == 0 {
            return Err(TailError::ZeroStride);
        }
        if limit.is_negative() {
            return Err(TailError::NegativeLimit(limit));
        }
        let rule = Self {
            limit,
            direction,
            coefficient,
            exponent,
            start_index,
            stride,
        };
        if direction == Direction::FromBelow {
            let first = rule.term(0);
            if first.is_negative() {
                return Err(TailError::NegativeTerm {
                    index: start_index,
                    term: first,
                });
            }
        }
        Ok(rule)
    }

    pub fn limit(&self) -> &Q {
        &self.limit
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    pub fn coefficient(&self) -> &Q {
        &self.coefficient
    }

    pub fn exponent(&self) -> u32 {
        self.exponent
    }

    pub fn start_index(&self) -> u64 {
        self.start_index
    }

    pub fn stride(&self) -> u64 {
        self.stride
    }

    /// Sequence index `n` of the `i`-th term.
    pub fn index(&self, i: u64) -> u64 {
        self.start_index + self.stride * i
    }

    pub fn term(&self, i: u64) -> Q {
        let offset = &self.coefficient / pow_u64(self.index(i), self.exponent);
        match self.direction {
            Direction::FromAbove => &self.limit + offset,
            Direction::FromBelow => &self.limit - offset,
        }
    }

    fn subsequence(&self, offset: u64, step: u64) -> Self {
        Self {
            start_index: self.index(offset),
            stride: self.stride * step,
            ..self.clone()
        }
    }
}

/// Monotone rational map applied to every term of a tail.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TermMap {
    /// `x ↦ scale·x + shift`, `scale ≠ 0`.
    Affine { scale: Q, shift: Q },
    /// `x ↦ 1/x` on strictly positive terms.
    Reciprocal,
    /// `x ↦ x²` on nonnegative terms.
    Square,
}

impl TermMap {
    fn apply(&self, x: Q) -> Q {
        match self {
            TermMap::Affine { scale, shift } => scale * x + shift,
            TermMap::Reciprocal => x.recip(),
            TermMap::Square => &x * &x,
        }
    }

    fn reverses_order(&self) -> bool {
        match self {
            TermMap::Affine { scale, .. } => scale.is_negative(),
            TermMap::Reciprocal => true,
            TermMap::Square => false,
        }
    }
}

/// A strictly monotone sequence of exact rationals with an exact limit.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Tail {
    rule: TailRule,
    maps: Vec<TermMap>,
}

impl From<TailRule> for Tail {
    fn from(rule: TailRule) -> Self {
        Self {
            rule,
            maps: Vec::new(),
        }
    }
}

impl Tail {
    pub fn rule(&self) -> &TailRule {
        &self.rule
    }

    pub fn maps(&self) -> &[TermMap] {
        &self.maps
    }

    pub fn from_parts(rule: TailRule, maps: Vec<TermMap>) -> Result<Self, TailError> {
        let mut tail = Tail::from(rule);
        for map in maps {
            tail = match map {
                TermMap::Affine { scale, shift } => tail.then_affine(scale, shift),
                TermMap::Reciprocal => tail.then_reciprocal()?,
                TermMap::Square => tail.then_square()?,
            };
        }
        Ok(tail)
    }

    fn map_value(&self, x: Q) -> Q {
        self.maps.iter().fold(x, |acc, m| m.apply(acc))
    }

    pub fn term(&self, i: u64) -> Q {
        self.map_value(self.rule.term(i))
    }

    pub fn first(&self) -> Q {
        self.term(0)
    }

    pub fn limit(&self) -> Q {
        self.map_value(self.rule.limit.clone())
    }

    /// Effective approach direction after all maps.
    pub fn direction(&self) -> Direction {
        self.maps
            .iter()
            .filter(|m| m.reverses_order())
            .fold(self.rule.direction, |d, _| d.flip())
    }

    pub fn is_increasing(&self) -> bool {
        self.direction() == Direction::FromBelow
    }

    pub fn inf(&self) -> Q {
        if self.is_increasing() {
            self.first()
        } else {
            self.limit()
        }
    }

    pub fn sup(&self) -> Q {
        if self.is_increasing() {
            self.limit()
        } else {
            self.first()
        }
    }

    /// Whether the infimum is a term (increasing tails realize it at `i = 0`).
    pub fn attains_inf(&self) -> bool {
        self.is_increasing()
    }

    pub fn attains_sup(&self) -> bool {
        !self.is_increasing()
    }

    /// Position `i` with `term(i) == value`, if any.
    pub fn position_of(&self, value: &Q) -> Option<u64> {
        let increasing = self.is_increasing();
        let first = self.first();
        let limit = self.limit();
        // Terms lie in [first, limit) or (limit, first].
        let inside = if increasing {
            *value >= first && *value < limit
        } else {
            *value <= first && *value > limit
        };
        if !inside {
            return None;
        }
        // `reached(i)` is monotone in i: false up to the crossing, true after.
        let reached = |i: u64| -> Ordering {
            let t = self.term(i);
            if increasing {
                t.cmp(value)
            } else {
                value.cmp(&t)
            }
        };
        if let Some(guess) = self.estimate_position(value) {
            let lo = guess.saturating_sub(1);
            let hi = guess.saturating_add(1);
            let bracketed =
                (lo == 0 || reached(lo - 1) == Ordering::Less) && reached(hi) != Ordering::Less;
            if bracketed {
                return (lo..=hi).find(|&i| reached(i) == Ordering::Equal);
            }
        }
        let mut hi: u64 = 1;
        while reached(hi) == Ordering::Less {
            hi = hi.checked_mul(2)?;
        }
        let mut lo: u64 = 0;
        while lo < hi {
            let mid = lo + (hi - lo) / 2;
            if reached(mid) == Ordering::Less {
                lo = mid + 1;
            } else {
                hi = mid;
            }
        }
        (reached(lo) == Ordering::Equal).then_some(lo)
    }

    /// Floating-point guess for `position_of`, found by undoing the maps.
    fn estimate_position(&self, value: &Q) -> Option<u64> {
        let mut x = to_f64(value);
        for map in self.maps.iter().rev() {
            x = match map {
                TermMap::Affine { scale, shift } => (x - to_f64(shift)) / to_f64(scale),
                TermMap::Reciprocal => x.recip(),
                TermMap::Square => x.sqrt(),
            };
        }
        let rule = &self.rule;
        let gap = (x - to_f64(&rule.limit)).abs();
        let n = (to_f64(&rule.coefficient) / gap).powf(1.0 / rule.exponent as f64);
        let i = ((n - rule.start_index as f64) / rule.stride as f64).round();
        (i.is_finite() && (0.0..1e18).contains(&i)).then_some(i as u64)
    }

    /// Number of terms strictly below `bound`; `None` if infinitely many.
    pub fn count_below(&self, bound: &Q) -> Option<u64> {
        self.count_where(bound, true)
    }

    /// Number of terms strictly above `bound`; `None` if infinitely many.
    pub fn count_above(&self, bound: &Q) -> Option<u64> {
        self.count_where(bound, false)
    }

    fn count_where(&self, bound: &Q, below: bool) -> Option<u64> {
        let increasing = self.is_increasing();
        let limit = self.limit();
        let infinite = match (below, increasing) {
            (true, true) => limit <= *bound,
            (true, false) => limit < *bound,
            (false, true) => limit > *bound,
            (false, false) => limit >= *bound,
        };
        if infinite {
            return None;
        }
        let satisfies = |i: u64| {
            let t = self.term(i);
            if below {
                t < *bound
            } else {
                t > *bound
            }
        };
        if !satisfies(0) {
            return Some(0);
        }
        let mut hi: u64 = 1;
        while satisfies(hi) {
            hi = hi.checked_mul(2)?;
        }
        let mut lo: u64 = 0;
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            if satisfies(mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Some(hi)
    }

    pub fn then_affine(&self, scale: Q, shift: Q) -> Self {
        assert!(!scale.is_zero(), "affine term map needs a nonzero scale");
        let mut maps = self.maps.clone();
        let (scale, shift) = match maps.last() {
            Some(TermMap::Affine {
                scale: s0,
                shift: b0,
            }) => {
                let combined = (&scale * s0, &scale * b0 + &shift);
                maps.pop();
                combined
            }
            _ => (scale, shift),
        };
        if !(scale.is_one() && shift.is_zero()) {
            maps.push(TermMap::Affine { scale, shift });
        }
        Self {
            rule: self.rule.clone(),
            maps,
        }
    }

    pub fn then_reciprocal(&self) -> Result<Self, TailError> {
        let inf = self.inf();
        if !inf.is_positive() {
            return Err(TailError::ReciprocalDomain(inf));
        }
        let mut maps = self.maps.clone();
        if maps.last() == Some(&TermMap::Reciprocal) {
            maps.pop();
        } else {
            maps.push(TermMap::Reciprocal);
        }
        Ok(Self {
            rule: self.rule.clone(),
            maps,
        })
    }

    pub fn then_square(&self) -> Result<Self, TailError> {
        let inf = self.inf();
        if inf.is_negative() {
            return Err(TailError::SquareDomain(inf));
        }
        let mut maps = self.maps.clone();
        maps.push(TermMap::Square);
        Ok(Self {
            rule: self.rule.clone(),
            maps,
        })
    }

    /// Terms `offset, offset + step, offset + 2·step, …` as a new tail.
    pub fn subsequence(&self, offset: u64, step: u64) -> Self {
        assert!(step >= 1);
        Self {
            rule: self.rule.subsequence(offset, step),
            maps: self.maps.clone(),
        }
    }

    /// Drops the first `count` terms.
    pub fn skip(&self, count: u64) -> Self {
        self.subsequence(count, 1)
    }
}
