//! Concrete scalar semantics of Mini-C operators.
//!
//! Every runtime error stops the concrete execution. Unsigned overflow is an
//! error too, but the wrapped value is reported so abstract operations can
//! keep it as a continuation value.

use crate::alarm::AlarmClass;

use super::config::ScalarType;
use super::ops::{BinOp, CmpOp};

/// Failure of a concrete operation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConcreteError {
    pub class: AlarmClass,
    /// Modular result for unsigned overflow.
    pub wrapped: Option<i64>,
}

impl ConcreteError {
    fn of(class: AlarmClass) -> ConcreteError {
        ConcreteError {
            class,
            wrapped: None,
        }
    }
}

/// Checks `r` against the range of `ty`.
pub fn fit_int(r: i128, ty: ScalarType) -> Result<i64, ConcreteError> {
    let (lo, hi) = ty.int_range().expect("integer type");
    if (lo as i128) <= r && r <= hi as i128 {
        Ok(r as i64)
    } else {
        let wrapped = match ty {
            ScalarType::Unsigned { bits } => Some(r.rem_euclid(1i128 << bits) as i64),
            _ => None,
        };
        Err(ConcreteError {
            class: AlarmClass::IRO,
            wrapped,
        })
    }
}

/// Integer operator in type `ty`; `int_bits` sizes shift checks for enums.
pub fn int_binop(
    op: BinOp,
    x: i64,
    y: i64,
    ty: ScalarType,
    int_bits: u8,
) -> Result<i64, ConcreteError> {
    let (x, y) = (x as i128, y as i128);
    let r = match op {
        BinOp::Add => x + y,
        BinOp::Sub => x - y,
        BinOp::Mul => x * y,
        BinOp::Div | BinOp::Rem => {
            if y == 0 {
                return Err(ConcreteError::of(AlarmClass::DMZ));
            }
            if op == BinOp::Div {
                x / y
            } else {
                let (lo, _) = ty.int_range().unwrap();
                if y == -1 && x == lo as i128 && !ty.is_unsigned() {
                    return Err(ConcreteError::of(AlarmClass::IRO));
                }
                x % y
            }
        }
        BinOp::Shl | BinOp::Shr => {
            let w = ty.bit_width(int_bits) as i128;
            if y < 0 || y >= w {
                return Err(ConcreteError::of(AlarmClass::ISA));
            }
            if op == BinOp::Shl {
                x * (1i128 << y)
            } else {
                x >> y
            }
        }
    };
    fit_int(r, ty)
}

/// Float operator with `f32` rounding.
pub fn float_binop(op: BinOp, x: f32, y: f32) -> Result<f32, ConcreteError> {
    let r = match op {
        BinOp::Add => x + y,
        BinOp::Sub => x - y,
        BinOp::Mul => x * y,
        BinOp::Div => {
            if y == 0.0 {
                return Err(ConcreteError::of(AlarmClass::DMZ));
            }
            x / y
        }
        BinOp::Rem | BinOp::Shl | BinOp::Shr => {
            debug_assert!(false, "operator {op:?} is not defined on floats");
            return Err(ConcreteError::of(AlarmClass::IRO));
        }
    };
    if r.is_finite() {
        Ok(if r == 0.0 { 0.0 } else { r })
    } else {
        Err(ConcreteError::of(AlarmClass::IRO))
    }
}

/// Float to integer conversion (truncation toward zero).
pub fn float_to_int(x: f32, ty: ScalarType) -> Result<i64, ConcreteError> {
    let t = (x as f64).trunc();
    let (lo, hi) = ty.int_range().unwrap();
    if t < lo as f64 || t > hi as f64 {
        return Err(ConcreteError::of(AlarmClass::IRO));
    }
    Ok(t as i64)
}

pub fn compare<T: PartialOrd>(op: CmpOp, x: T, y: T) -> bool {
    match op {
        CmpOp::Lt => x < y,
        CmpOp::Le => x <= y,
        CmpOp::Gt => x > y,
        CmpOp::Ge => x >= y,
        CmpOp::Eq => x == y,
        CmpOp::Ne => x != y,
    }
}
