//! Alarm classes shared by the domains, the analyzer and the reports.

use std::fmt;

use serde::{Deserialize, Serialize};

/// Runtime error classes reported by the analyzer.
///
/// DCF and CPP exist in the reference tool but are never emitted here.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum AlarmClass {
    /// Invalid usage of pointers or arrays.
    IPA,
    /// Invalid shift argument.
    ISA,
    /// Invalid ranges and overflows.
    IRO,
    /// Division or modulo by zero.
    DMZ,
    /// Uninitialized variable read.
    UIV,
    /// Unknown function called.
    UFC,
    /// Failed assertion (including contract checks).
    ASR,
}

impl AlarmClass {
    pub const ALL: [AlarmClass; 7] = [
        AlarmClass::IPA,
        AlarmClass::ISA,
        AlarmClass::IRO,
        AlarmClass::DMZ,
        AlarmClass::UIV,
        AlarmClass::UFC,
        AlarmClass::ASR,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            AlarmClass::IPA => "IPA",
            AlarmClass::ISA => "ISA",
            AlarmClass::IRO => "IRO",
            AlarmClass::DMZ => "DMZ",
            AlarmClass::UIV => "UIV",
            AlarmClass::UFC => "UFC",
            AlarmClass::ASR => "ASR",
        }
    }

    pub fn parse(s: &str) -> Option<AlarmClass> {
        AlarmClass::ALL.into_iter().find(|c| c.as_str() == s)
    }
}

impl fmt::Display for AlarmClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// An error condition detected by an abstract operation.
///
/// `definite` is set when every concrete operand combination triggers it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AlarmCondition {
    pub class: AlarmClass,
    pub definite: bool,
    pub detail: String,
}

impl AlarmCondition {
    pub fn new(class: AlarmClass, definite: bool, detail: impl Into<String>) -> Self {
        AlarmCondition {
            class,
            definite,
            detail: detail.into(),
        }
    }
}
