//! Module-level static analysis of Mini-C programs.

pub mod alarm;
pub mod analyzer;
pub mod domains;
pub mod frontend;
pub mod harness;
pub mod ifacespec;
pub mod inference;

pub use alarm::AlarmClass;
pub use analyzer::{Alarm, AnalysisResult};
pub use domains::{AbstractValue, DomainConfig, Scalar, ScalarType};
pub use frontend::{Contract, Loc, Program};
