//! Closed integer intervals over `i64` bounds.

use std::fmt;

/// `[lo, hi]` with `lo <= hi`, or the empty interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct IntInterval {
    bounds: Option<(i64, i64)>,
}

impl IntInterval {
    pub const BOTTOM: IntInterval = IntInterval { bounds: None };

    /// Builds `[lo, hi]`; an inverted pair yields bottom.
    pub fn new(lo: i64, hi: i64) -> IntInterval {
        if lo <= hi {
            IntInterval {
                bounds: Some((lo, hi)),
            }
        } else {
            IntInterval::BOTTOM
        }
    }

    pub fn singleton(c: i64) -> IntInterval {
        IntInterval::new(c, c)
    }

    /// Clamps an `i128` range into `i64` before building.
    pub fn from_i128(lo: i128, hi: i128) -> IntInterval {
        let clamp = |v: i128| v.clamp(i64::MIN as i128, i64::MAX as i128) as i64;
        IntInterval::new(clamp(lo), clamp(hi))
    }

    pub fn is_bottom(&self) -> bool {
        self.bounds.is_none()
    }

    pub fn bounds(&self) -> Option<(i64, i64)> {
        self.bounds
    }

    pub fn lo(&self) -> Option<i64> {
        self.bounds.map(|b| b.0)
    }

    pub fn hi(&self) -> Option<i64> {
        self.bounds.map(|b| b.1)
    }

    pub fn as_singleton(&self) -> Option<i64> {
        match self.bounds {
            Some((a, b)) if a == b => Some(a),
            _ => None,
        }
    }

    /// Number of members, saturating.
    pub fn cardinality(&self) -> u128 {
        match self.bounds {
            None => 0,
            Some((a, b)) => (b as i128 - a as i128 + 1) as u128,
        }
    }

    pub fn contains(&self, c: i64) -> bool {
        matches!(self.bounds, Some((a, b)) if a <= c && c <= b)
    }

    pub fn join(&self, other: &IntInterval) -> IntInterval {
        match (self.bounds, other.bounds) {
            (None, _) => *other,
            (_, None) => *self,
            (Some((a, b)), Some((c, d))) => IntInterval::new(a.min(c), b.max(d)),
        }
    }

    pub fn meet(&self, other: &IntInterval) -> IntInterval {
        match (self.bounds, other.bounds) {
            (Some((a, b)), Some((c, d))) => IntInterval::new(a.max(c), b.min(d)),
            _ => IntInterval::BOTTOM,
        }
    }

    pub fn leq(&self, other: &IntInterval) -> bool {
        match (self.bounds, other.bounds) {
            (None, _) => true,
            (_, None) => false,
            (Some((a, b)), Some((c, d))) => c <= a && b <= d,
        }
    }

    /// Threshold widening: an unstable bound jumps to the nearest enclosing
    /// threshold, or to the outermost threshold when none encloses it.
    ///
    /// `thresholds` must be sorted ascending and non-empty.
    pub fn widen(&self, new: &IntInterval, thresholds: &[i64]) -> IntInterval {
        let joined = self.join(new);
        let (Some((a, b)), Some((c, d))) = (self.bounds, joined.bounds) else {
            return joined;
        };
        let lo = if c < a {
            thresholds
                .iter()
                .rev()
                .find(|&&t| t <= c)
                .copied()
                .unwrap_or(c.min(thresholds[0]))
        } else {
            a
        };
        let hi = if d > b {
            thresholds
                .iter()
                .find(|&&t| t >= d)
                .copied()
                .unwrap_or(d.max(*thresholds.last().unwrap()))
        } else {
            b
        };
        IntInterval::new(lo, hi)
    }

    /// Removes a single value, which only shrinks the interval at a bound.
    pub fn remove(&self, c: i64) -> IntInterval {
        match self.bounds {
            Some((a, b)) if a == c && b == c => IntInterval::BOTTOM,
            Some((a, b)) if a == c => IntInterval::new(a + 1, b),
            Some((a, b)) if b == c => IntInterval::new(a, b - 1),
            _ => *self,
        }
    }
}

impl fmt::Display for IntInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.bounds {
            None => f.write_str("⊥"),
            Some((a, b)) => write!(f, "[{a}, {b}]"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hull_and_intersection() {
        let a = IntInterval::new(0, 5);
        let b = IntInterval::new(3, 10);
        assert_eq!(a.join(&b), IntInterval::new(0, 10));
        assert_eq!(a.meet(&b), IntInterval::new(3, 5));
        assert!(IntInterval::new(0, 2)
            .meet(&IntInterval::new(5, 9))
            .is_bottom());
        assert_eq!(IntInterval::BOTTOM.join(&a), a);
    }

    #[test]
    fn widening_jumps_to_thresholds() {
        let w = IntInterval::new(0, 1).widen(&IntInterval::new(0, 2), &[0, 10, i32::MAX as i64]);
        assert_eq!(w, IntInterval::new(0, 10));
        let w = IntInterval::new(0, 1).widen(&IntInterval::new(0, 1), &[0, 10]);
        assert_eq!(w, IntInterval::new(0, 1));
        let w = IntInterval::new(0, 10).widen(&IntInterval::new(-1, 12), &[-128, 0, 10, 127]);
        assert_eq!(w, IntInterval::new(-128, 127));
    }

    #[test]
    fn remove_trims_only_bounds() {
        assert_eq!(IntInterval::new(0, 5).remove(0), IntInterval::new(1, 5));
        assert_eq!(IntInterval::new(-1, 1).remove(0), IntInterval::new(-1, 1));
        assert!(IntInterval::singleton(0).remove(0).is_bottom());
    }
}
