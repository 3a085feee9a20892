//! Closed intervals with exact rational endpoints.

use crate::rational::Rational;
use serde::{Deserialize, Serialize};
use std::fmt;

/// Closed interval `[lo, hi]` with `lo <= hi`. Degenerate point intervals
/// (`lo == hi`) are permitted.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Interval {
    lo: Rational,
    hi: Rational,
}

impl Interval {
    pub fn new(lo: Rational, hi: Rational) -> Option<Self> {
        if lo <= hi {
            Some(Interval { lo, hi })
        } else {
            None
        }
    }

    pub fn point(x: Rational) -> Self {
        Interval { lo: x.clone(), hi: x }
    }

    /// Interval from machine-integer rational literals, for code and tests.
    pub fn ratio(lo_num: i64, lo_den: i64, hi_num: i64, hi_den: i64) -> Self {
        Interval::new(Rational::ratio(lo_num, lo_den), Rational::ratio(hi_num, hi_den))
            .expect("interval literal out of order")
    }

    pub fn lo(&self) -> &Rational {
        &self.lo
    }

    pub fn hi(&self) -> &Rational {
        &self.hi
    }

    pub fn width(&self) -> Rational {
        &self.hi - &self.lo
    }

    pub fn midpoint(&self) -> Rational {
        (&self.lo + &self.hi) / Rational::from_int(2)
    }

    pub fn is_degenerate(&self) -> bool {
        self.lo == self.hi
    }

    pub fn contains(&self, x: &Rational) -> bool {
        &self.lo <= x && x <= &self.hi
    }

    pub fn contains_interval(&self, other: &Interval) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    /// True when `x` lies strictly between the endpoints.
    pub fn interior_contains(&self, x: &Rational) -> bool {
        &self.lo < x && x < &self.hi
    }

    pub fn intersect(&self, other: &Interval) -> Option<Interval> {
        let lo = self.lo.clone().max(other.lo.clone());
        let hi = self.hi.clone().min(other.hi.clone());
        Interval::new(lo, hi)
    }

    pub fn intersects(&self, other: &Interval) -> bool {
        self.lo <= other.hi && other.lo <= self.hi
    }

    /// Closed intervals that overlap in more than one point.
    pub fn overlaps_interior(&self, other: &Interval) -> bool {
        match self.intersect(other) {
            Some(i) => !i.is_degenerate(),
            None => false,
        }
    }

    pub fn hull(&self, other: &Interval) -> Interval {
        Interval {
            lo: self.lo.clone().min(other.lo.clone()),
            hi: self.hi.clone().max(other.hi.clone()),
        }
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

impl fmt::Debug for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}
