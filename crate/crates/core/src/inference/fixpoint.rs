use std::collections::BTreeMap;

use crate::domains::DomainConfig;
use crate::frontend::{ContractSet, Program};
use crate::harness::{verify_module, HarnessOptions, ModuleRun};

use super::{
    contract_diff, derive_contracts, extract_summary, fingerprint, merge, InferError,
    SummaryDatabase,
};

pub const DEFAULT_MAX_PASSES: u32 = 20;

#[derive(Debug, Clone)]
pub struct FixpointOptions {
    pub max_passes: u32,
}

impl Default for FixpointOptions {
    fn default() -> Self {
        FixpointOptions {
            max_passes: DEFAULT_MAX_PASSES,
        }
    }
}

#[derive(Debug, Clone)]
pub struct FixpointResult {
    pub passes: u32,
    /// Inferred contracts at the fixpoint.
    pub inferred: ContractSet,
    /// Module runs of the last pass.
    pub runs: BTreeMap<String, ModuleRun>,
    /// Number of contract ids that changed during each pass.
    pub changes: Vec<usize>,
}

/// Analyzes every module in turn with `base ⊕ inferred`, stores its summary
/// and re-derives the inferred contracts after each module, until a whole
/// pass leaves them unchanged. Inferred contracts start from whatever the
/// database already holds for the program's modules.
pub fn run_fixpoint(
    program: &Program,
    base: &ContractSet,
    db: &mut SummaryDatabase,
    cfg: &DomainConfig,
    opts: &FixpointOptions,
) -> Result<FixpointResult, InferError> {
    let mut inferred = derive_contracts(db, program, cfg)?;
    let mut changes = Vec::new();
    let mut runs = BTreeMap::new();
    for pass in 1..=opts.max_passes.max(1) {
        let start = inferred.clone();
        for m in &program.modules {
            let contracts = merge(base, &inferred);
            let run = verify_module(
                program,
                &m.name,
                &contracts,
                HarnessOptions { infer: true },
                cfg,
            )?;
            let summary = extract_summary(&run, program, &fingerprint(&contracts), cfg)?;
            db.put(summary)?;
            inferred = derive_contracts(db, program, cfg)?;
            runs.insert(m.name.clone(), run);
        }
        let diff = contract_diff(&start, &inferred);
        changes.push(diff.len());
        log::debug!("fixpoint pass {pass}: {} contract changes", diff.len());
        if diff.is_empty() {
            return Ok(FixpointResult {
                passes: pass,
                inferred,
                runs,
                changes,
            });
        }
        if pass == opts.max_passes.max(1) {
            return Err(InferError::NoConvergence { passes: pass, diff });
        }
    }
    unreachable!("the last pass either converges or reports")
}
