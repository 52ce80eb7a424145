//! Float intervals with `f32`-representable bounds.
//!
//! Bounds are stored as `f64` but always hold values exactly representable
//! as finite `f32`. NaN and infinities are never members.

use std::fmt;

/// Largest finite `f32`, as `f64`.
pub const FLOAT_MAX: f64 = f32::MAX as f64;

/// Smallest exact value whose `f32` rounding is infinite (ties to even
/// round the midpoint above `f32::MAX` up).
pub const FLOAT_OVERFLOW: f64 = FLOAT_MAX + 10141204801825835211973625643008.0; // 2^103

/// Largest `f32` that is `<= v`. `v` must be finite and within range.
pub fn f32_floor(v: f64) -> f64 {
    if v <= -FLOAT_MAX {
        return -FLOAT_MAX;
    }
    if v >= FLOAT_MAX {
        return FLOAT_MAX;
    }
    let mut f = v as f32;
    if (f as f64) > v {
        f = f.next_down();
    }
    norm_zero(f as f64)
}

/// Smallest `f32` that is `>= v`.
pub fn f32_ceil(v: f64) -> f64 {
    norm_zero(-f32_floor(-v))
}

fn norm_zero(v: f64) -> f64 {
    if v == 0.0 {
        0.0
    } else {
        v
    }
}

/// `[lo, hi]` over finite floats, or the empty interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FloatInterval {
    bounds: Option<(f64, f64)>,
}

impl FloatInterval {
    pub const BOTTOM: FloatInterval = FloatInterval { bounds: None };

    /// Builds `[lo, hi]`, rounding bounds outward to `f32` and clamping into
    /// the finite range. Inverted or NaN bounds yield bottom.
    pub fn new(lo: f64, hi: f64) -> FloatInterval {
        if lo.is_nan() || hi.is_nan() || lo > hi || lo > FLOAT_MAX || hi < -FLOAT_MAX {
            return FloatInterval::BOTTOM;
        }
        let lo = f32_floor(lo.max(-FLOAT_MAX));
        let hi = f32_ceil(hi.min(FLOAT_MAX));
        FloatInterval {
            bounds: Some((lo, hi)),
        }
    }

    pub fn full() -> FloatInterval {
        FloatInterval::new(-FLOAT_MAX, FLOAT_MAX)
    }

    pub fn singleton(c: f64) -> FloatInterval {
        FloatInterval::new(c, c)
    }

    pub fn is_bottom(&self) -> bool {
        self.bounds.is_none()
    }

    pub fn bounds(&self) -> Option<(f64, f64)> {
        self.bounds
    }

    pub fn contains(&self, c: f64) -> bool {
        matches!(self.bounds, Some((a, b)) if a <= c && c <= b)
    }

    pub fn join(&self, other: &FloatInterval) -> FloatInterval {
        match (self.bounds, other.bounds) {
            (None, _) => *other,
            (_, None) => *self,
            (Some((a, b)), Some((c, d))) => FloatInterval {
                bounds: Some((a.min(c), b.max(d))),
            },
        }
    }

    pub fn meet(&self, other: &FloatInterval) -> FloatInterval {
        match (self.bounds, other.bounds) {
            (Some((a, b)), Some((c, d))) => {
                let (lo, hi) = (a.max(c), b.min(d));
                if lo <= hi {
                    FloatInterval {
                        bounds: Some((lo, hi)),
                    }
                } else {
                    FloatInterval::BOTTOM
                }
            }
            _ => FloatInterval::BOTTOM,
        }
    }

    pub fn leq(&self, other: &FloatInterval) -> bool {
        match (self.bounds, other.bounds) {
            (None, _) => true,
            (_, None) => false,
            (Some((a, b)), Some((c, d))) => c <= a && b <= d,
        }
    }

    pub fn widen(&self, new: &FloatInterval, thresholds: &[f64]) -> FloatInterval {
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
                .unwrap_or(-FLOAT_MAX)
        } else {
            a
        };
        let hi = if d > b {
            thresholds
                .iter()
                .find(|&&t| t >= d)
                .copied()
                .unwrap_or(FLOAT_MAX)
        } else {
            b
        };
        FloatInterval::new(lo, hi)
    }
}

impl fmt::Display for FloatInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.bounds {
            None => f.write_str("⊥"),
            Some((a, b)) => write!(f, "[{a:?}, {b:?}]"),
        }
    }
}
