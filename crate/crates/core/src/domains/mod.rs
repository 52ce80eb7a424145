//! Abstract domains: zero/non-zero, integer intervals, `f32` intervals and
//! capped finite sets, plus the operations the analyzer needs on them.

pub mod concrete;
mod config;
mod float;
mod interval;
mod ops;
mod set;
mod value;
mod zero;

use thiserror::Error;

pub use config::{DomainConfig, IntDomain, ScalarType};
pub use float::{f32_ceil, f32_floor, FloatInterval, FLOAT_MAX, FLOAT_OVERFLOW};
pub use interval::IntInterval;
pub use ops::{
    abs_binop, compare, convert, refine_against, refine_by_comparison, truth_of, BinOp,
    BinopOutcome, CmpOp, Truth,
};
pub use set::{FiniteSet, DEFAULT_SET_CAP};
pub use value::{AbstractValue, Scalar};
pub use zero::ZeroValue;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DomainError {
    #[error("cannot combine a {left} value with a {right} value")]
    VariantMismatch {
        left: &'static str,
        right: &'static str,
    },
}
