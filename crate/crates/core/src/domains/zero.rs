//! The zero domain: tracks only whether an integer is zero.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ZeroValue {
    Bottom,
    Zero,
    NonZero,
    Top,
}

#[allow(clippy::should_implement_trait)]
impl ZeroValue {
    pub fn abstract_of(c: i64) -> ZeroValue {
        if c == 0 {
            ZeroValue::Zero
        } else {
            ZeroValue::NonZero
        }
    }

    pub fn join(self, other: ZeroValue) -> ZeroValue {
        use ZeroValue::*;
        match (self, other) {
            (Bottom, x) | (x, Bottom) => x,
            (a, b) if a == b => a,
            _ => Top,
        }
    }

    pub fn meet(self, other: ZeroValue) -> ZeroValue {
        use ZeroValue::*;
        match (self, other) {
            (Top, x) | (x, Top) => x,
            (a, b) if a == b => a,
            _ => Bottom,
        }
    }

    pub fn leq(self, other: ZeroValue) -> bool {
        self.join(other) == other
    }

    pub fn contains(self, c: i64) -> bool {
        match self {
            ZeroValue::Bottom => false,
            ZeroValue::Zero => c == 0,
            ZeroValue::NonZero => c != 0,
            ZeroValue::Top => true,
        }
    }

    /// Addition table. Bottom is the identity here, not absorbing.
    pub fn add(self, other: ZeroValue) -> ZeroValue {
        use ZeroValue::*;
        match (self, other) {
            (Bottom, x) | (x, Bottom) => x,
            (Top, _) | (_, Top) => Top,
            (Zero, x) | (x, Zero) => x,
            (NonZero, NonZero) => Top,
        }
    }

    pub fn sub(self, other: ZeroValue) -> ZeroValue {
        self.add(other)
    }

    pub fn mul(self, other: ZeroValue) -> ZeroValue {
        use ZeroValue::*;
        match (self, other) {
            (Bottom, _) | (_, Bottom) => Bottom,
            (Zero, _) | (_, Zero) => Zero,
            (NonZero, NonZero) => NonZero,
            _ => Top,
        }
    }

    /// Quotient of `self / divisor` with zero divisors removed.
    pub fn div(self, divisor: ZeroValue) -> ZeroValue {
        use ZeroValue::*;
        match (self, divisor.meet(NonZero)) {
            (Bottom, _) | (_, Bottom) => Bottom,
            (Zero, _) => Zero,
            _ => Top,
        }
    }

    pub fn rem(self, divisor: ZeroValue) -> ZeroValue {
        self.div(divisor)
    }
}
