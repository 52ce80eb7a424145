use serde::{Deserialize, Serialize};

use super::float::FLOAT_MAX;
use super::set::DEFAULT_SET_CAP;

/// Scalar types as seen by the abstract operations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ScalarType {
    Signed {
        bits: u8,
    },
    Unsigned {
        bits: u8,
    },
    /// Enumerations are integers restricted to `[lo, hi]`.
    Enum {
        lo: i64,
        hi: i64,
    },
    Float,
}

impl ScalarType {
    pub fn is_float(&self) -> bool {
        matches!(self, ScalarType::Float)
    }

    pub fn is_unsigned(&self) -> bool {
        matches!(self, ScalarType::Unsigned { .. })
    }

    /// Representable integer range; `None` for floats.
    pub fn int_range(&self) -> Option<(i64, i64)> {
        match *self {
            ScalarType::Signed { bits } => {
                let half = 1i64 << (bits - 1);
                Some((-half, half - 1))
            }
            ScalarType::Unsigned { bits } => Some((0, (1i64 << bits) - 1)),
            ScalarType::Enum { lo, hi } => Some((lo, hi)),
            ScalarType::Float => None,
        }
    }

    /// Width used for shift-count checks.
    pub fn bit_width(&self, int_bits: u8) -> u32 {
        match *self {
            ScalarType::Signed { bits } | ScalarType::Unsigned { bits } => bits as u32,
            _ => int_bits as u32,
        }
    }
}

/// Which representation integer values use during analysis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum IntDomain {
    #[default]
    Interval,
    FiniteSet,
}

/// Analyzer-wide settings. The same configuration is used for every stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainConfig {
    /// Width of `int`, between 8 and 32.
    pub int_bits: u8,
    /// Extra integer widening thresholds on top of the per-type defaults.
    pub thresholds: Vec<i64>,
    /// Extra float widening thresholds.
    pub float_thresholds: Vec<f64>,
    /// Finite-set cap `K`.
    pub set_cap: usize,
    /// Loop iterations analyzed exactly before widening kicks in.
    pub unroll: u32,
    pub int_domain: IntDomain,
    /// Calls nested deeper than this are summarized instead of inlined.
    pub max_inline_depth: u32,
    /// Statement-visit budget per analysis.
    pub visit_budget: u64,
}

impl Default for DomainConfig {
    fn default() -> Self {
        DomainConfig {
            int_bits: 32,
            thresholds: Vec::new(),
            float_thresholds: Vec::new(),
            set_cap: DEFAULT_SET_CAP,
            unroll: 1,
            int_domain: IntDomain::Interval,
            max_inline_depth: 8,
            visit_budget: 5_000_000,
        }
    }
}

impl DomainConfig {
    pub fn with_int_bits(bits: u8) -> Self {
        DomainConfig {
            int_bits: bits,
            ..DomainConfig::default()
        }
    }

    pub fn int_type(&self) -> ScalarType {
        ScalarType::Signed {
            bits: self.int_bits,
        }
    }

    /// Sorted thresholds for `ty`: type bounds, -1, 0, 1 and the configured
    /// constants that fall inside the type.
    pub fn int_thresholds(&self, ty: ScalarType) -> Vec<i64> {
        let (lo, hi) = ty
            .int_range()
            .unwrap_or_else(|| self.int_type().int_range().unwrap());
        let mut t: Vec<i64> = [lo, -1, 0, 1, hi]
            .into_iter()
            .chain(self.thresholds.iter().copied())
            .filter(|&c| lo <= c && c <= hi)
            .collect();
        t.sort_unstable();
        t.dedup();
        t
    }

    pub fn float_thresholds(&self) -> Vec<f64> {
        let mut t: Vec<f64> = [-FLOAT_MAX, -1.0, 0.0, 1.0, FLOAT_MAX]
            .into_iter()
            .chain(self.float_thresholds.iter().copied())
            .filter(|c| c.is_finite() && c.abs() <= FLOAT_MAX)
            .collect();
        t.sort_by(|a, b| a.partial_cmp(b).unwrap());
        t.dedup();
        t
    }
}
