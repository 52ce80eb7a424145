use std::fmt;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::{json, Value};

use super::config::{DomainConfig, IntDomain, ScalarType};
use super::float::FloatInterval;
use super::interval::IntInterval;
use super::set::{FiniteSet, DEFAULT_SET_CAP};
use super::zero::ZeroValue;
use super::DomainError;

/// A concrete scalar.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Scalar {
    Int(i64),
    Float(f64),
}

impl Scalar {
    pub fn as_f64(self) -> f64 {
        match self {
            Scalar::Int(i) => i as f64,
            Scalar::Float(f) => f,
        }
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scalar::Int(i) => write!(f, "{i}"),
            Scalar::Float(x) => write!(f, "{x:?}"),
        }
    }
}

/// An element of one of the supported lattices.
#[derive(Debug, Clone, PartialEq)]
pub enum AbstractValue {
    Zero(ZeroValue),
    Int(IntInterval),
    Float(FloatInterval),
    Set(FiniteSet),
}

impl AbstractValue {
    /// Full range of `ty` in the representation selected by `cfg`.
    pub fn top_of(ty: ScalarType, cfg: &DomainConfig) -> AbstractValue {
        match ty.int_range() {
            None => AbstractValue::Float(FloatInterval::full()),
            Some((lo, hi)) => AbstractValue::int_range(lo, hi, cfg),
        }
    }

    /// Bottom in the representation used for `ty`.
    pub fn bottom_of(ty: ScalarType, cfg: &DomainConfig) -> AbstractValue {
        if ty.is_float() {
            AbstractValue::Float(FloatInterval::BOTTOM)
        } else {
            match cfg.int_domain {
                IntDomain::Interval => AbstractValue::Int(IntInterval::BOTTOM),
                IntDomain::FiniteSet => AbstractValue::Set(FiniteSet::bottom()),
            }
        }
    }

    pub fn int_range(lo: i64, hi: i64, cfg: &DomainConfig) -> AbstractValue {
        let itv = IntInterval::new(lo, hi);
        match cfg.int_domain {
            IntDomain::Interval => AbstractValue::Int(itv),
            IntDomain::FiniteSet => AbstractValue::Set(FiniteSet::from_interval(itv, cfg.set_cap)),
        }
    }

    pub fn constant(c: Scalar, cfg: &DomainConfig) -> AbstractValue {
        match c {
            Scalar::Int(i) => AbstractValue::int_range(i, i, cfg),
            Scalar::Float(f) => AbstractValue::Float(FloatInterval::singleton(f)),
        }
    }

    pub fn is_bottom(&self) -> bool {
        match self {
            AbstractValue::Zero(z) => *z == ZeroValue::Bottom,
            AbstractValue::Int(i) => i.is_bottom(),
            AbstractValue::Float(f) => f.is_bottom(),
            AbstractValue::Set(s) => s.is_bottom(),
        }
    }

    pub fn is_float(&self) -> bool {
        matches!(self, AbstractValue::Float(_))
    }

    /// Same variant, bottom element.
    pub fn to_bottom(&self) -> AbstractValue {
        match self {
            AbstractValue::Zero(_) => AbstractValue::Zero(ZeroValue::Bottom),
            AbstractValue::Int(_) => AbstractValue::Int(IntInterval::BOTTOM),
            AbstractValue::Float(_) => AbstractValue::Float(FloatInterval::BOTTOM),
            AbstractValue::Set(_) => AbstractValue::Set(FiniteSet::bottom()),
        }
    }

    /// Integer hull of an integer-valued element.
    pub fn int_hull(&self) -> Option<IntInterval> {
        match self {
            AbstractValue::Int(i) => Some(*i),
            AbstractValue::Set(s) => Some(s.hull()),
            _ => None,
        }
    }

    /// Float bounds of a numeric element (integers widened exactly).
    pub fn float_hull(&self) -> Option<FloatInterval> {
        match self {
            AbstractValue::Float(f) => Some(*f),
            AbstractValue::Int(_) | AbstractValue::Set(_) => {
                let h = self.int_hull().unwrap();
                Some(match h.bounds() {
                    None => FloatInterval::BOTTOM,
                    Some((a, b)) => FloatInterval::new(a as f64, b as f64),
                })
            }
            AbstractValue::Zero(_) => None,
        }
    }

    /// Numeric bounds as `f64`, for either integer or float elements.
    pub fn numeric_bounds(&self) -> Option<(f64, f64)> {
        match self {
            AbstractValue::Float(f) => f.bounds(),
            _ => self
                .int_hull()
                .and_then(|h| h.bounds())
                .map(|(a, b)| (a as f64, b as f64)),
        }
    }

    /// The single concrete member, when there is exactly one.
    pub fn as_singleton(&self) -> Option<Scalar> {
        match self {
            AbstractValue::Int(i) => i.as_singleton().map(Scalar::Int),
            AbstractValue::Set(s) => match s.members() {
                Some(m) if m.len() == 1 => m.first().copied().map(Scalar::Int),
                _ => None,
            },
            AbstractValue::Float(f) => match f.bounds() {
                Some((a, b)) if a == b => Some(Scalar::Float(a)),
                _ => None,
            },
            AbstractValue::Zero(ZeroValue::Zero) => Some(Scalar::Int(0)),
            AbstractValue::Zero(_) => None,
        }
    }

    pub fn contains(&self, c: Scalar) -> bool {
        match (self, c) {
            (AbstractValue::Zero(z), Scalar::Int(i)) => z.contains(i),
            (AbstractValue::Int(itv), Scalar::Int(i)) => itv.contains(i),
            (AbstractValue::Set(s), Scalar::Int(i)) => s.contains(i),
            (AbstractValue::Float(f), c) => f.contains(c.as_f64()),
            (_, Scalar::Float(x)) => {
                x.fract() == 0.0 && x.abs() < 9.2e18 && self.contains(Scalar::Int(x as i64))
            }
        }
    }

    pub fn join(&self, other: &AbstractValue) -> Result<AbstractValue, DomainError> {
        self.join_with(other, DEFAULT_SET_CAP)
    }

    pub fn join_with(
        &self,
        other: &AbstractValue,
        cap: usize,
    ) -> Result<AbstractValue, DomainError> {
        Ok(match (self, other) {
            (AbstractValue::Zero(a), AbstractValue::Zero(b)) => AbstractValue::Zero(a.join(*b)),
            (AbstractValue::Int(a), AbstractValue::Int(b)) => AbstractValue::Int(a.join(b)),
            (AbstractValue::Float(a), AbstractValue::Float(b)) => AbstractValue::Float(a.join(b)),
            (AbstractValue::Set(a), AbstractValue::Set(b)) => AbstractValue::Set(a.join(b, cap)),
            _ => return Err(mismatch(self, other)),
        })
    }

    pub fn meet(&self, other: &AbstractValue) -> Result<AbstractValue, DomainError> {
        self.meet_with(other, DEFAULT_SET_CAP)
    }

    pub fn meet_with(
        &self,
        other: &AbstractValue,
        cap: usize,
    ) -> Result<AbstractValue, DomainError> {
        Ok(match (self, other) {
            (AbstractValue::Zero(a), AbstractValue::Zero(b)) => AbstractValue::Zero(a.meet(*b)),
            (AbstractValue::Int(a), AbstractValue::Int(b)) => AbstractValue::Int(a.meet(b)),
            (AbstractValue::Float(a), AbstractValue::Float(b)) => AbstractValue::Float(a.meet(b)),
            (AbstractValue::Set(a), AbstractValue::Set(b)) => AbstractValue::Set(a.meet(b, cap)),
            _ => return Err(mismatch(self, other)),
        })
    }

    /// Partial order; elements of different variants are incomparable.
    pub fn leq(&self, other: &AbstractValue) -> bool {
        match (self, other) {
            (AbstractValue::Zero(a), AbstractValue::Zero(b)) => a.leq(*b),
            (AbstractValue::Int(a), AbstractValue::Int(b)) => a.leq(b),
            (AbstractValue::Float(a), AbstractValue::Float(b)) => a.leq(b),
            (AbstractValue::Set(a), AbstractValue::Set(b)) => a.leq(b),
            _ => false,
        }
    }

    /// Widening with the thresholds `cfg` defines for `int`.
    pub fn widen(
        &self,
        new: &AbstractValue,
        cfg: &DomainConfig,
    ) -> Result<AbstractValue, DomainError> {
        self.widen_for(new, cfg.int_type(), cfg)
    }

    /// Widening with the thresholds of `ty`.
    pub fn widen_for(
        &self,
        new: &AbstractValue,
        ty: ScalarType,
        cfg: &DomainConfig,
    ) -> Result<AbstractValue, DomainError> {
        Ok(match (self, new) {
            // finite height, the join is already a widening
            (AbstractValue::Zero(a), AbstractValue::Zero(b)) => AbstractValue::Zero(a.join(*b)),
            (AbstractValue::Int(a), AbstractValue::Int(b)) => {
                AbstractValue::Int(a.widen(b, &cfg.int_thresholds(ty)))
            }
            (AbstractValue::Float(a), AbstractValue::Float(b)) => {
                AbstractValue::Float(a.widen(b, &cfg.float_thresholds()))
            }
            (AbstractValue::Set(a), AbstractValue::Set(b)) => {
                AbstractValue::Set(a.widen(b, &cfg.int_thresholds(ty), cfg.set_cap))
            }
            _ => return Err(mismatch(self, new)),
        })
    }

    /// Canonical JSON form used by the summary database.
    pub fn to_json(&self) -> Value {
        match self {
            AbstractValue::Zero(z) => json!({"domain": "zero", "value": z}),
            AbstractValue::Int(i) => match i.bounds() {
                None => json!({"domain": "int", "bottom": true}),
                Some((a, b)) => json!({"domain": "int", "lo": a, "hi": b}),
            },
            AbstractValue::Float(f) => match f.bounds() {
                None => json!({"domain": "float", "bottom": true}),
                Some((a, b)) => json!({"domain": "float", "lo": a, "hi": b}),
            },
            AbstractValue::Set(FiniteSet::Members(m)) => {
                json!({"domain": "set", "members": m.iter().collect::<Vec<_>>()})
            }
            AbstractValue::Set(FiniteSet::Range(r)) => match r.bounds() {
                None => json!({"domain": "set", "members": []}),
                Some((a, b)) => json!({"domain": "set", "lo": a, "hi": b}),
            },
        }
    }

    pub fn from_json(v: &Value) -> Result<AbstractValue, String> {
        let domain = v
            .get("domain")
            .and_then(Value::as_str)
            .ok_or("missing domain tag")?;
        let bottom = v.get("bottom").and_then(Value::as_bool).unwrap_or(false);
        let int_field = |k: &str| -> Result<i64, String> {
            v.get(k)
                .and_then(Value::as_i64)
                .ok_or_else(|| format!("missing integer field `{k}`"))
        };
        let float_field = |k: &str| -> Result<f64, String> {
            v.get(k)
                .and_then(Value::as_f64)
                .ok_or_else(|| format!("missing float field `{k}`"))
        };
        match domain {
            "zero" => {
                let z: ZeroValue =
                    serde_json::from_value(v.get("value").cloned().unwrap_or(Value::Null))
                        .map_err(|e| e.to_string())?;
                Ok(AbstractValue::Zero(z))
            }
            "int" if bottom => Ok(AbstractValue::Int(IntInterval::BOTTOM)),
            "int" => Ok(AbstractValue::Int(IntInterval::new(
                int_field("lo")?,
                int_field("hi")?,
            ))),
            "float" if bottom => Ok(AbstractValue::Float(FloatInterval::BOTTOM)),
            "float" => Ok(AbstractValue::Float(FloatInterval::new(
                float_field("lo")?,
                float_field("hi")?,
            ))),
            "set" => {
                if let Some(members) = v.get("members").and_then(Value::as_array) {
                    let m = members
                        .iter()
                        .map(|x| x.as_i64().ok_or("non-integer set member"))
                        .collect::<Result<std::collections::BTreeSet<i64>, _>>()?;
                    Ok(AbstractValue::Set(FiniteSet::Members(m)))
                } else {
                    Ok(AbstractValue::Set(FiniteSet::Range(IntInterval::new(
                        int_field("lo")?,
                        int_field("hi")?,
                    ))))
                }
            }
            other => Err(format!("unknown domain `{other}`")),
        }
    }
}

fn mismatch(a: &AbstractValue, b: &AbstractValue) -> DomainError {
    DomainError::VariantMismatch {
        left: a.variant_name(),
        right: b.variant_name(),
    }
}

impl AbstractValue {
    pub fn variant_name(&self) -> &'static str {
        match self {
            AbstractValue::Zero(_) => "zero",
            AbstractValue::Int(_) => "int",
            AbstractValue::Float(_) => "float",
            AbstractValue::Set(_) => "set",
        }
    }
}

impl fmt::Display for AbstractValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AbstractValue::Zero(z) => write!(f, "{z:?}"),
            AbstractValue::Int(i) => write!(f, "{i}"),
            AbstractValue::Float(x) => write!(f, "{x}"),
            AbstractValue::Set(s) => write!(f, "{s}"),
        }
    }
}

impl Serialize for AbstractValue {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.to_json().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for AbstractValue {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let v = Value::deserialize(deserializer)?;
        AbstractValue::from_json(&v).map_err(D::Error::custom)
    }
}
