//! Abstract interpreter for Mini-C.
//!
//! Functions are analyzed by inlining from an entry point. Loops run a few
//! exact iterations, then widen to a post-fixpoint and narrow once. Every
//! runtime error class is checked at the operation that can fail; a definite
//! alarm stops the path, a possible one continues with the failing values
//! removed.

mod concrete;
pub(crate) mod env;
mod interp;
mod state;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::alarm::AlarmClass;
use crate::domains::{AbstractValue, DomainConfig};
use crate::frontend::{ContractSet, ExprKind, Init as Initializer, Loc, Program, StmtKind, Type};

pub use concrete::{concrete_run, ConcreteStop, RuntimeError};
pub use state::{Init, EXACT_ARRAY_LIMIT};

/// Name of the generated driver function.
pub const DRIVER: &str = "__driver";
/// Name of the generated harness module.
pub const HARNESS: &str = "__harness";

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SourcePos {
    pub file: String,
    pub loc: Loc,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CallSite {
    pub function: String,
    pub file: String,
    pub loc: Loc,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Alarm {
    pub class: AlarmClass,
    pub definite: bool,
    pub file: String,
    pub loc: Loc,
    pub message: String,
    /// Contract behind the generated check that raised the alarm, filled in
    /// from harness provenance.
    pub contract: Option<String>,
    /// Directive responsible for a watch-triggered assertion.
    pub origin: Option<SourcePos>,
    /// Innermost call sites first, at most three.
    pub call_stack: Vec<CallSite>,
}

impl Alarm {
    pub fn key(&self) -> (AlarmClass, &str, Loc) {
        (self.class, &self.file, self.loc)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Coverage {
    pub total: u32,
    /// Ids of statements reached with a reachable state.
    pub reached: BTreeSet<u32>,
}

impl Coverage {
    pub fn ratio(&self) -> f64 {
        if self.total == 0 {
            1.0
        } else {
            self.reached.len() as f64 / self.total as f64
        }
    }
}

/// Values recorded while analyzing a harness in inference mode.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Extracted {
    /// Return value of each function called by the driver.
    pub returns: BTreeMap<String, AbstractValue>,
    /// Argument values at calls of each stub, per parameter.
    pub params: BTreeMap<String, BTreeMap<String, AbstractValue>>,
    /// Value of each global written by a driver-called function, at the
    /// exit of that call.
    pub globals_after: BTreeMap<String, BTreeMap<String, AbstractValue>>,
    /// Functions whose driver case completed at least once.
    pub observed: BTreeSet<String>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct AnalysisResult {
    /// Sorted by file, location and class.
    pub alarms: Vec<Alarm>,
    pub coverage: BTreeMap<String, Coverage>,
    pub extracted: Extracted,
    pub visits: u64,
}

impl AnalysisResult {
    pub fn alarms_of(&self, class: AlarmClass) -> impl Iterator<Item = &Alarm> {
        self.alarms.iter().filter(move |a| a.class == class)
    }

    pub fn count(&self, class: AlarmClass) -> usize {
        self.alarms_of(class).count()
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AnalysisError {
    #[error("entry function `{0}` is not defined")]
    UnknownEntry(String),
    #[error("analysis budget of {0} statement visits exceeded")]
    Budget(u64),
}

/// Analyzes `program` from `entry`. `contracts` summarize calls that are not
/// inlined: ensures clauses refine the return value of such calls.
///
/// Widening uses the configured thresholds plus the program's [`landmarks`].
pub fn analyze(
    program: &Program,
    entry: &str,
    contracts: &ContractSet,
    cfg: &DomainConfig,
) -> Result<AnalysisResult, AnalysisError> {
    let (ints, floats) = landmarks(program);
    let mut cfg = cfg.clone();
    cfg.thresholds.extend(ints);
    cfg.float_thresholds.extend(floats);
    interp::run(program, entry, contracts, &cfg)
}

/// Widening thresholds read off the program text: every numeric literal with
/// both signs, and `n - 1` and `n` for every array length `n`.
pub fn landmarks(program: &Program) -> (Vec<i64>, Vec<f64>) {
    let mut ints = BTreeSet::new();
    let mut floats: Vec<f64> = Vec::new();
    let ty = |t: &Type, ints: &mut BTreeSet<i64>| {
        let mut t = t;
        while let Type::Array(elem, n) = t {
            ints.insert(*n as i64 - 1);
            ints.insert(*n as i64);
            t = elem;
        }
    };
    for m in &program.modules {
        for sd in &m.structs {
            for f in &sd.fields {
                ty(&f.ty, &mut ints);
            }
        }
        let mut exprs = Vec::new();
        for g in &m.globals {
            ty(&g.ty, &mut ints);
            match &g.init {
                Some(Initializer::Expr(e)) => exprs.push(e),
                Some(Initializer::List(l)) => exprs.extend(l.iter()),
                None => {}
            }
        }
        for f in &m.functions {
            for p in &f.sig.params {
                ty(&p.ty, &mut ints);
            }
            for s in &f.body {
                s.visit(&mut |s| {
                    if let StmtKind::Decl { ty: t, .. } = &s.kind {
                        ty(t, &mut ints);
                    }
                    exprs.extend(s.exprs());
                });
            }
        }
        for e in exprs {
            e.visit(&mut |e| match e.kind {
                ExprKind::Int(c) => {
                    ints.insert(c);
                    ints.insert(-c);
                }
                ExprKind::Float(c) => {
                    let c = c as f32 as f64;
                    floats.push(c);
                    floats.push(-c);
                }
                _ => {}
            });
        }
    }
    floats.retain(|c| c.is_finite());
    floats.sort_by(f64::total_cmp);
    floats.dedup();
    (ints.into_iter().collect(), floats)
}
