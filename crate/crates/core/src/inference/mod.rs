//! Contract inference from analysis results.
//!
//! After each module analysis the values observed by the harness are stored
//! as a [`ModuleSummary`]. Summaries of all modules are joined into a
//! [`GlobalSummary`], which is translated back into contracts with origin
//! `inferred`. [`run_fixpoint`] repeats this over all modules until the
//! inferred contracts stop changing.

mod db;
mod fixpoint;

use std::collections::{BTreeMap, BTreeSet};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::analyzer::env::{Env, Layout};
use crate::domains::{AbstractValue, DomainConfig, ScalarType, FLOAT_MAX};
use crate::frontend::{
    contracts_to_string, parse_condition, Contract, ContractBody, ContractKind, ContractSet, Loc,
    Origin, Program, Storage,
};
use crate::harness::{ModuleRun, VerifyError};

pub use db::{record_json, DbError, SummaryDatabase, SCHEMA_VERSION};
pub use fixpoint::{run_fixpoint, FixpointOptions, FixpointResult, DEFAULT_MAX_PASSES};

/// File name recorded on inferred contracts.
pub const INFERRED_FILE: &str = "inferred.contracts";

#[derive(Debug, thiserror::Error)]
pub enum InferError {
    #[error("module `{0}` was analyzed without extraction markers")]
    NoExtraction(String),
    #[error("module `{module}`: value of `{key}` does not match the other records")]
    Mismatch { module: String, key: String },
    #[error(transparent)]
    Verify(#[from] VerifyError),
    #[error(transparent)]
    Db(#[from] DbError),
    #[error("no fixpoint after {passes} passes; still changing:\n{}", diff.join("\n"))]
    NoConvergence { passes: u32, diff: Vec<String> },
}

/// Values observed while analyzing one module.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModuleSummary {
    pub module: String,
    /// Value of each global (or `global.field`) at the exit of each
    /// function that wrote it. Missing entries are bottom.
    pub values: BTreeMap<String, BTreeMap<String, AbstractValue>>,
    /// Initializer values of globals defined by the module.
    pub initial: BTreeMap<String, AbstractValue>,
    /// Joined argument values at calls of each stubbed function.
    pub params: BTreeMap<String, BTreeMap<String, AbstractValue>>,
    pub returns: BTreeMap<String, AbstractValue>,
    /// Functions whose driver case ran to completion.
    pub observed: BTreeSet<String>,
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
    /// Hash of the contract set the module was analyzed with.
    pub fingerprint: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct GlobalSummary {
    pub values: BTreeMap<String, AbstractValue>,
    pub params: BTreeMap<String, BTreeMap<String, AbstractValue>>,
    pub returns: BTreeMap<String, AbstractValue>,
    /// Modules that contributed a record.
    pub modules: BTreeSet<String>,
}

pub fn fingerprint(contracts: &ContractSet) -> String {
    hex::encode(Sha256::digest(contracts_to_string(contracts).as_bytes()))
}

fn now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

/// Reads the extracted values out of an inference-mode module run.
pub fn extract_summary(
    run: &ModuleRun,
    program: &Program,
    fingerprint: &str,
    cfg: &DomainConfig,
) -> Result<ModuleSummary, InferError> {
    let module = run.harness.module.clone();
    if !run.harness.infer {
        return Err(InferError::NoExtraction(module));
    }
    let ex = &run.result.extracted;
    Ok(ModuleSummary {
        initial: initial_values(program, &module, cfg),
        module,
        values: ex.globals_after.clone(),
        params: ex.params.clone(),
        returns: ex.returns.clone(),
        observed: ex.observed.clone(),
        timestamp: now(),
        fingerprint: fingerprint.to_string(),
    })
}

fn initial_values(
    program: &Program,
    module: &str,
    cfg: &DomainConfig,
) -> BTreeMap<String, AbstractValue> {
    let mut out = BTreeMap::new();
    let Some(mi) = program.modules.iter().position(|m| m.name == module) else {
        return out;
    };
    let env = Env::new(program, cfg);
    for g in &program.modules[mi].globals {
        if g.storage != Storage::Public || g.is_const {
            continue;
        }
        let Some(cells) = env.initial_values(mi, g) else {
            continue;
        };
        let consts: Vec<AbstractValue> = cells
            .into_iter()
            .map(|c| AbstractValue::constant(c, cfg))
            .collect();
        match env.layout(mi, &g.ty) {
            Layout::Struct(fields) => {
                for ((f, _), v) in fields.iter().zip(consts) {
                    out.insert(format!("{}.{f}", g.name), v);
                }
            }
            _ => {
                if let Some(v) = consts
                    .into_iter()
                    .reduce(|a, b| a.join_with(&b, cfg.set_cap).unwrap_or(a))
                {
                    out.insert(g.name.clone(), v);
                }
            }
        }
    }
    out
}

fn join_into(
    acc: &mut BTreeMap<String, AbstractValue>,
    key: &str,
    v: &AbstractValue,
    module: &str,
    cfg: &DomainConfig,
) -> Result<(), InferError> {
    let joined = match acc.get(key) {
        Some(old) => old
            .join_with(v, cfg.set_cap)
            .map_err(|_| InferError::Mismatch {
                module: module.to_string(),
                key: key.to_string(),
            })?,
        None => v.clone(),
    };
    acc.insert(key.to_string(), joined);
    Ok(())
}

/// `Value_m`: per global, the join over the module's writers, plus the
/// initializer when the module defines the global.
pub fn aggregate_module(
    s: &ModuleSummary,
    cfg: &DomainConfig,
) -> Result<BTreeMap<String, AbstractValue>, InferError> {
    let mut out = BTreeMap::new();
    for per_fn in s.values.values() {
        for (g, v) in per_fn {
            join_into(&mut out, g, v, &s.module, cfg)?;
        }
    }
    for (g, v) in &s.initial {
        join_into(&mut out, g, v, &s.module, cfg)?;
    }
    Ok(out)
}

/// `Value`, `Param` and `Return`: joins over all module summaries.
pub fn aggregate_global<'a>(
    records: impl IntoIterator<Item = &'a ModuleSummary>,
    cfg: &DomainConfig,
) -> Result<GlobalSummary, InferError> {
    let mut gs = GlobalSummary::default();
    for s in records {
        gs.modules.insert(s.module.clone());
        for (g, v) in aggregate_module(s, cfg)? {
            join_into(&mut gs.values, &g, &v, &s.module, cfg)?;
        }
        for (f, ps) in &s.params {
            let acc = gs.params.entry(f.clone()).or_default();
            for (p, v) in ps {
                join_into(acc, p, v, &s.module, cfg)?;
            }
        }
        for (f, v) in &s.returns {
            join_into(&mut gs.returns, f, v, &s.module, cfg)?;
        }
    }
    Ok(gs)
}

/// Condition text stating that `target` lies in `v`, or `None` when `v` is
/// bottom or covers the whole of `ty`.
pub fn value_condition(target: &str, v: &AbstractValue, ty: ScalarType) -> Option<String> {
    if v.is_bottom() {
        return None;
    }
    if let AbstractValue::Set(s) = v {
        if let Some(ms) = s.members() {
            let (tlo, thi) = ty.int_range()?;
            let full = ms.len() as i128 == thi as i128 - tlo as i128 + 1;
            if full {
                return None;
            }
            let parts: Vec<String> = ms.iter().map(|m| format!("{target} == {m}")).collect();
            return Some(parts.join(" || "));
        }
    }
    let mut parts = Vec::new();
    match (v, ty.int_range()) {
        (AbstractValue::Float(f), None) => {
            let (lo, hi) = f.bounds()?;
            if lo > -FLOAT_MAX {
                parts.push(format!("{target} >= {lo:?}"));
            }
            if hi < FLOAT_MAX {
                parts.push(format!("{target} <= {hi:?}"));
            }
        }
        (_, Some((tlo, thi))) => {
            let (lo, hi) = v.int_hull()?.bounds()?;
            if lo == hi {
                return Some(format!("{target} == {lo}"));
            }
            if lo > tlo {
                parts.push(format!("{target} >= {lo}"));
            }
            if hi < thi {
                parts.push(format!("{target} <= {hi}"));
            }
        }
        _ => return None,
    }
    if parts.is_empty() {
        None
    } else {
        Some(parts.join(" && "))
    }
}

fn inferred(kind: ContractKind, subject: &str, text: &str) -> Option<Contract> {
    let e = parse_condition(text).ok()?;
    Some(Contract {
        kind,
        subject: subject.to_string(),
        body: ContractBody::Cond(e),
        origin: Origin::Inferred,
        file: INFERRED_FILE.to_string(),
        loc: Loc::new(1, 1),
    })
}

/// Scalar type of a global or `global.field` path, with the global's name.
fn global_type(env: &Env, program: &Program, path: &str) -> Option<(String, ScalarType)> {
    let (name, field) = match path.split_once('.') {
        Some((n, f)) => (n, Some(f)),
        None => (path, None),
    };
    let (mi, g) = program
        .modules
        .iter()
        .enumerate()
        .filter_map(|(i, m)| m.global(name).map(|g| (i, g)))
        .min_by_key(|(_, g)| g.storage == Storage::Extern)?;
    if g.storage == Storage::Static || g.is_const {
        return None;
    }
    let ty = match (env.layout(mi, &g.ty), field) {
        (Layout::Scalar(t), None) => t,
        (Layout::Struct(fs), Some(f)) => fs.into_iter().find(|(n, _)| n == f)?.1,
        _ => return None,
    };
    Some((name.to_string(), ty))
}

/// Translates aggregated values into contracts: invariants for globals,
/// ensures for return values and requires for parameters whose every
/// calling module has been analyzed.
pub fn summary_to_contracts(
    gs: &GlobalSummary,
    program: &Program,
    cfg: &DomainConfig,
) -> ContractSet {
    let env = Env::new(program, cfg);
    let mut out = ContractSet::new();
    for (path, v) in &gs.values {
        let Some((name, ty)) = global_type(&env, program, path) else {
            continue;
        };
        if let Some(c) =
            value_condition(path, v, ty).and_then(|t| inferred(ContractKind::Invariant, &name, &t))
        {
            out.add(c);
        }
    }
    let defined = |f: &str| {
        program
            .modules
            .iter()
            .enumerate()
            .find_map(|(i, m)| m.function(f).filter(|d| !d.sig.is_static).map(|d| (i, d)))
    };
    for (f, v) in &gs.returns {
        let Some((mi, def)) = defined(f) else {
            continue;
        };
        if !def.sig.ret.is_scalar() {
            continue;
        }
        let ty = env.scalar_ty(mi, &def.sig.ret);
        if let Some(c) =
            value_condition("return", v, ty).and_then(|t| inferred(ContractKind::Ensures, f, &t))
        {
            out.add(c);
        }
    }
    for (f, ps) in &gs.params {
        let Some((mi, def)) = defined(f) else {
            continue;
        };
        if program.entry.as_deref() == Some(f.as_str()) {
            continue;
        }
        let all_seen = program
            .modules
            .iter()
            .filter(|m| m.external(f).is_some())
            .all(|m| gs.modules.contains(&m.name));
        if !all_seen {
            continue;
        }
        for p in &def.sig.params {
            let Some(v) = ps.get(&p.name) else { continue };
            if !p.ty.is_scalar() {
                continue;
            }
            let ty = env.scalar_ty(mi, &p.ty);
            if let Some(c) = value_condition(&p.name, v, ty)
                .and_then(|t| inferred(ContractKind::Requires, f, &t))
            {
                out.add(c);
            }
        }
    }
    out
}

/// `base ⊕ inferred`: inferred contracts are added only where `base` has no
/// contract of the same kind on the same subject and target.
pub fn merge(base: &ContractSet, inferred: &ContractSet) -> ContractSet {
    let mut out = base.clone();
    for c in inferred.iter() {
        let existing = if c.kind == ContractKind::Invariant {
            base.for_variable(&c.subject)
        } else {
            base.for_function(&c.subject)
        };
        let target = c.target();
        if !existing
            .iter()
            .any(|b| b.kind == c.kind && b.target() == target)
        {
            out.add(c.clone());
        }
    }
    out
}

/// Contract ids present in exactly one of the two sets, prefixed `-` for
/// `old` and `+` for `new`.
pub fn contract_diff(old: &ContractSet, new: &ContractSet) -> Vec<String> {
    let a: BTreeSet<String> = old.iter().map(Contract::id).collect();
    let b: BTreeSet<String> = new.iter().map(Contract::id).collect();
    a.difference(&b)
        .map(|x| format!("- {x}"))
        .chain(b.difference(&a).map(|x| format!("+ {x}")))
        .collect()
}

/// Contracts derived from the records of the program's modules.
pub fn derive_contracts(
    db: &SummaryDatabase,
    program: &Program,
    cfg: &DomainConfig,
) -> Result<ContractSet, InferError> {
    let records = db.records().filter(|s| program.module(&s.module).is_some());
    let gs = aggregate_global(records, cfg)?;
    Ok(summary_to_contracts(&gs, program, cfg))
}

#[cfg(test)]
mod tests;
