//! Machine- and human-readable reports.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use modcheck_core::alarm::AlarmClass;
use modcheck_core::analyzer::Alarm;
use modcheck_core::domains::DomainConfig;
use modcheck_core::frontend::{ContractSet, Origin};

use crate::stages::{stage_label, StageRun};
use crate::CliError;

pub const REPORT_SCHEMA: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlarmEntry {
    pub class: AlarmClass,
    pub definite: bool,
    pub file: String,
    pub line: u32,
    pub col: u32,
    pub message: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub contract: Option<String>,
    /// `file:line` of the directive behind a watch alarm.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub origin: Option<String>,
}

impl AlarmEntry {
    pub fn key(&self) -> (AlarmClass, String, u32, u32) {
        (self.class, self.file.clone(), self.line, self.col)
    }
}

impl From<&Alarm> for AlarmEntry {
    fn from(a: &Alarm) -> AlarmEntry {
        AlarmEntry {
            class: a.class,
            definite: a.definite,
            file: a.file.clone(),
            line: a.loc.line,
            col: a.loc.col,
            message: a.message.clone(),
            contract: a.contract.clone(),
            origin: a
                .origin
                .as_ref()
                .map(|o| format!("{}:{}", o.file, o.loc.line)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Counts {
    pub total: usize,
    /// Every class, zero counts included.
    pub by_class: BTreeMap<AlarmClass, usize>,
    pub definite: usize,
    /// Percentage of statements reached.
    pub coverage: f64,
}

impl Counts {
    fn of(alarms: &[AlarmEntry], reached: usize, total_stmts: u32) -> Counts {
        let mut by_class: BTreeMap<AlarmClass, usize> =
            AlarmClass::ALL.iter().map(|c| (*c, 0)).collect();
        for a in alarms {
            *by_class.get_mut(&a.class).unwrap() += 1;
        }
        let coverage = if total_stmts == 0 {
            100.0
        } else {
            (reached as f64 * 10000.0 / total_stmts as f64).round() / 100.0
        };
        Counts {
            total: alarms.len(),
            by_class,
            definite: alarms.iter().filter(|a| a.definite).count(),
            coverage,
        }
    }

    pub fn class(&self, c: AlarmClass) -> usize {
        self.by_class.get(&c).copied().unwrap_or(0)
    }

    /// Total excluding ASR.
    pub fn non_asr(&self) -> usize {
        self.total - self.class(AlarmClass::ASR)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModuleReport {
    pub module: String,
    pub file: String,
    pub counts: Counts,
    pub statements: u32,
    pub reached: usize,
    pub alarms: Vec<AlarmEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContractCounts {
    pub manual: usize,
    pub interface: usize,
    pub inferred: usize,
}

/// Everything that may differ between identical runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunInfo {
    pub timestamp: u64,
    pub total_seconds: f64,
    pub module_seconds: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub passes: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: u32,
    pub stage: u8,
    pub stage_label: String,
    pub config: DomainConfig,
    pub contracts: ContractCounts,
    pub modules: Vec<ModuleReport>,
    pub totals: Counts,
    pub run: RunInfo,
}

fn count(cs: &ContractSet, o: Origin) -> usize {
    cs.iter().filter(|c| c.origin == o).count()
}

impl Report {
    pub fn build(run: &StageRun, cfg: &DomainConfig) -> Report {
        let modules: Vec<ModuleReport> = run
            .modules
            .iter()
            .map(|m| {
                let alarms: Vec<AlarmEntry> = m.alarms.iter().map(AlarmEntry::from).collect();
                ModuleReport {
                    module: m.module.clone(),
                    file: m.file.clone(),
                    counts: Counts::of(&alarms, m.coverage.reached.len(), m.coverage.total),
                    statements: m.coverage.total,
                    reached: m.coverage.reached.len(),
                    alarms,
                }
            })
            .collect();
        let all: Vec<AlarmEntry> = modules
            .iter()
            .flat_map(|m| m.alarms.iter().cloned())
            .collect();
        let reached = modules.iter().map(|m| m.reached).sum();
        let stmts = modules.iter().map(|m| m.statements).sum();
        Report {
            schema_version: REPORT_SCHEMA,
            stage: run.stage,
            stage_label: stage_label(run.stage).to_string(),
            config: cfg.clone(),
            contracts: ContractCounts {
                manual: count(&run.contracts, Origin::Manual),
                interface: count(&run.contracts, Origin::Interface),
                inferred: count(&run.contracts, Origin::Inferred),
            },
            totals: Counts::of(&all, reached, stmts),
            modules,
            run: RunInfo {
                timestamp: SystemTime::now()
                    .duration_since(UNIX_EPOCH)
                    .map(|d| d.as_secs())
                    .unwrap_or(0),
                total_seconds: run.seconds,
                module_seconds: run
                    .modules
                    .iter()
                    .filter_map(|m| m.seconds.map(|s| (m.module.clone(), s)))
                    .collect(),
                passes: run.passes,
            },
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }

    /// JSON without the `run` section, for comparing runs.
    pub fn deterministic_json(&self) -> String {
        let mut v = serde_json::to_value(self).expect("report serializes");
        v.as_object_mut().unwrap().remove("run");
        serde_json::to_string_pretty(&v).unwrap()
    }

    pub fn from_json(text: &str) -> Result<Report, CliError> {
        let v: serde_json::Value =
            serde_json::from_str(text).map_err(|e| CliError::Report(e.to_string()))?;
        let found = v
            .get("schema_version")
            .and_then(|x| x.as_u64())
            .unwrap_or(0) as u32;
        if found != REPORT_SCHEMA {
            return Err(CliError::Schema {
                found,
                expected: REPORT_SCHEMA,
            });
        }
        serde_json::from_value(v).map_err(|e| CliError::Report(e.to_string()))
    }

    /// Fixed-width table: one row per module and a total row, then module
    /// timing statistics.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "Stage {}: {}", self.stage, self.stage_label);
        let _ = writeln!(
            out,
            "Contracts: {} manual, {} interface, {} inferred",
            self.contracts.manual, self.contracts.interface, self.contracts.inferred
        );
        let width = self
            .modules
            .iter()
            .map(|m| m.module.len())
            .max()
            .unwrap_or(0)
            .max(6);
        let mut header = format!("{:<width$} {:>6}", "Module", "Total");
        for c in AlarmClass::ALL {
            let _ = write!(header, " {:>4}", c.as_str());
        }
        let _ = write!(
            header,
            " {:>8} {:>11} {:>9}",
            "Definite", "Coverage[%]", "Time[s]"
        );
        let _ = writeln!(out, "{header}");
        let _ = writeln!(out, "{}", "-".repeat(header.len()));
        let row = |out: &mut String, name: &str, c: &Counts, secs: Option<f64>| {
            let _ = write!(out, "{name:<width$} {:>6}", c.total);
            for cl in AlarmClass::ALL {
                let _ = write!(out, " {:>4}", c.class(cl));
            }
            let t = secs
                .map(|s| format!("{s:.3}"))
                .unwrap_or_else(|| "-".into());
            let _ = writeln!(out, " {:>8} {:>11.1} {t:>9}", c.definite, c.coverage);
        };
        for m in &self.modules {
            row(
                &mut out,
                &m.module,
                &m.counts,
                self.run.module_seconds.get(&m.module).copied(),
            );
        }
        let _ = writeln!(out, "{}", "-".repeat(header.len()));
        row(
            &mut out,
            "Total",
            &self.totals,
            Some(self.run.total_seconds),
        );
        let times: Vec<f64> = self.run.module_seconds.values().copied().collect();
        if let Some(s) = TimingSummary::of(&times) {
            let _ = writeln!(
                out,
                "Module times: median {:.3}s, avg {:.3}s, max {:.3}s, outliers {}, |T| {}, sum {:.3}s",
                s.median, s.avg, s.max, s.outliers, s.count, s.sum
            );
        }
        if let Some(p) = self.run.passes {
            let _ = writeln!(out, "Inference passes: {p}");
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimingSummary {
    pub median: f64,
    pub avg: f64,
    pub max: f64,
    /// Values outside Tukey's fences with k = 1.5.
    pub outliers: usize,
    pub count: usize,
    pub sum: f64,
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

impl TimingSummary {
    pub fn of(times: &[f64]) -> Option<TimingSummary> {
        if times.is_empty() {
            return None;
        }
        let mut t = times.to_vec();
        t.sort_by(f64::total_cmp);
        let (q1, q3) = (quantile(&t, 0.25), quantile(&t, 0.75));
        let k = 1.5 * (q3 - q1);
        let sum: f64 = t.iter().sum();
        Some(TimingSummary {
            median: quantile(&t, 0.5),
            avg: sum / t.len() as f64,
            max: *t.last().unwrap(),
            outliers: t.iter().filter(|x| **x < q1 - k || **x > q3 + k).count(),
            count: t.len(),
            sum,
        })
    }
}

/// One alarm that is only in one of two reports, with the report it came
/// from and its module.
#[derive(Debug, Clone, PartialEq)]
pub struct DiffEntry {
    pub module: String,
    pub alarm: AlarmEntry,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ReportDiff {
    /// `b - a` per class.
    pub class_deltas: BTreeMap<AlarmClass, i64>,
    /// In `b` only.
    pub added: Vec<DiffEntry>,
    /// In `a` only.
    pub removed: Vec<DiffEntry>,
}

impl ReportDiff {
    pub fn is_empty(&self) -> bool {
        self.added.is_empty()
            && self.removed.is_empty()
            && self.class_deltas.values().all(|d| *d == 0)
    }

    pub fn to_text(&self, a_label: &str, b_label: &str) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "Alarm delta {a_label} -> {b_label}");
        for (c, d) in &self.class_deltas {
            if *d != 0 {
                let _ = writeln!(out, "  {c}: {d:+}");
            }
        }
        for (sign, list) in [("-", &self.removed), ("+", &self.added)] {
            for e in list {
                let a = &e.alarm;
                let _ = writeln!(
                    out,
                    "{sign} {} {}:{}:{} [{}] {}",
                    a.class, a.file, a.line, a.col, e.module, a.message
                );
            }
        }
        if self.is_empty() {
            out.push_str("  no differences\n");
        }
        out
    }
}

type Key = (AlarmClass, String, u32, u32);

fn keyed(r: &Report) -> BTreeMap<Key, DiffEntry> {
    let mut out = BTreeMap::new();
    for m in &r.modules {
        for a in &m.alarms {
            out.entry(a.key()).or_insert_with(|| DiffEntry {
                module: m.module.clone(),
                alarm: a.clone(),
            });
        }
    }
    out
}

/// Alarms added and removed going from `a` to `b`, keyed by class and
/// location.
pub fn diff_reports(a: &Report, b: &Report) -> Result<ReportDiff, CliError> {
    if a.schema_version != b.schema_version {
        return Err(CliError::Schema {
            found: b.schema_version,
            expected: a.schema_version,
        });
    }
    let (ka, kb) = (keyed(a), keyed(b));
    let keys: BTreeSet<&Key> = ka.keys().chain(kb.keys()).collect();
    let mut d = ReportDiff::default();
    for c in AlarmClass::ALL {
        d.class_deltas
            .insert(c, b.totals.class(c) as i64 - a.totals.class(c) as i64);
    }
    for k in keys {
        match (ka.get(k), kb.get(k)) {
            (Some(x), None) => d.removed.push(x.clone()),
            (None, Some(y)) => d.added.push(y.clone()),
            _ => {}
        }
    }
    Ok(d)
}
