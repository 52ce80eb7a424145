//! Command-line parsing and the command implementations.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use modcheck_core::domains::{DomainConfig, IntDomain};
use modcheck_core::frontend::{contracts_to_string, ContractKind};
use modcheck_core::harness::{verify_module, HarnessOptions};
use modcheck_core::inference::{
    derive_contracts, extract_summary, fingerprint, merge, run_fixpoint, FixpointOptions,
    SummaryDatabase, DEFAULT_MAX_PASSES,
};

use crate::project::{load_project, Project};
use crate::report::{diff_reports, Report};
use crate::stages::{base_contracts, run_stage, ModuleOutcome, StageOptions, StageRun};
use crate::CliError;

pub const EXIT_CLEAN: i32 = 0;
pub const EXIT_ALARMS: i32 = 1;
pub const EXIT_ERROR: i32 = 2;
pub const EXIT_NO_FIXPOINT: i32 = 3;

const DEFAULT_DB: &str = ".modcheck-db";

#[derive(Debug, Parser)]
#[command(
    name = "modcheck",
    version,
    about = "Module-level runtime error analysis with contracts"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Domain {
    Interval,
    Set,
}

#[derive(Debug, Clone, Args)]
pub struct Inputs {
    /// Source files or directories searched for `*.c`.
    pub paths: Vec<PathBuf>,
    /// Extra contract files.
    #[arg(long = "contracts", value_name = "FILE", num_args = 1..)]
    pub contracts: Vec<PathBuf>,
    /// Interface descriptions (`.ifx.xml`).
    #[arg(long = "interface", value_name = "FILE", num_args = 1..)]
    pub interface: Vec<PathBuf>,
    /// Width of `int`.
    #[arg(long, default_value_t = 32, value_parser = clap::value_parser!(u8).range(8..=32))]
    pub int_bits: u8,
    /// Integer representation.
    #[arg(long, value_enum, default_value = "interval")]
    pub domain: Domain,
}

impl Inputs {
    pub fn config(&self) -> DomainConfig {
        DomainConfig {
            int_domain: match self.domain {
                Domain::Interval => IntDomain::Interval,
                Domain::Set => IntDomain::FiniteSet,
            },
            ..DomainConfig::with_int_bits(self.int_bits)
        }
    }

    fn load(&self, entry: Option<String>) -> Result<Project, CliError> {
        let p = load_project(&self.paths, &self.contracts, &self.interface, entry)?;
        for w in &p.warnings {
            log::warn!("{w}");
        }
        Ok(p)
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one analysis stage and write a report.
    Analyze {
        #[command(flatten)]
        inputs: Inputs,
        /// 0 integration, 1 no contracts, 2 interface and inferred, 3 all.
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u8).range(0..=3))]
        stage: u8,
        /// Entry function for stage 0.
        #[arg(long)]
        entry: Option<String>,
        /// Summary database; in memory when absent.
        #[arg(long, env = "MODCHECK_DB")]
        db: Option<PathBuf>,
        /// Directory receiving the generated harnesses.
        #[arg(long, value_name = "DIR")]
        emit_harness: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        #[arg(long, default_value_t = DEFAULT_MAX_PASSES)]
        max_passes: u32,
        /// Report path; the text table goes next to it with `.txt`.
        #[arg(long, default_value = "report.json")]
        json: PathBuf,
    },
    /// Infer contracts up to a fixpoint and export them.
    Infer {
        #[command(flatten)]
        inputs: Inputs,
        #[arg(long, env = "MODCHECK_DB", default_value = DEFAULT_DB)]
        db: PathBuf,
        #[arg(long, default_value_t = DEFAULT_MAX_PASSES)]
        max_passes: u32,
        /// Output `.contracts` file; defaults to `inferred.contracts` in the database.
        #[arg(long)]
        export: Option<PathBuf>,
    },
    /// Re-analyze one module against the database and update its record.
    Single {
        /// Module name (file stem).
        #[arg(long)]
        module: String,
        #[command(flatten)]
        inputs: Inputs,
        #[arg(long, env = "MODCHECK_DB")]
        db: Option<PathBuf>,
        #[arg(long, default_value = "report.json")]
        json: PathBuf,
    },
    /// Compare two reports.
    Diff { a: PathBuf, b: PathBuf },
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|source| CliError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
    }
    fs::write(path, text).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn write_report(report: &Report, json: &Path, out: &mut dyn Write) -> Result<i32, CliError> {
    write_file(json, &report.to_json())?;
    let text = report.to_text();
    write_file(&json.with_extension("txt"), &text)?;
    let _ = out.write_all(text.as_bytes());
    Ok(if report.totals.total > 0 {
        EXIT_ALARMS
    } else {
        EXIT_CLEAN
    })
}

/// Runs a parsed command line; returns the process exit code.
pub fn run(cli: Cli, out: &mut dyn Write) -> i32 {
    match dispatch(cli.command, out) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(cmd: Command, out: &mut dyn Write) -> Result<i32, CliError> {
    match cmd {
        Command::Analyze {
            inputs,
            stage,
            entry,
            db,
            emit_harness,
            jobs,
            max_passes,
            json,
        } => {
            if stage == 0 && entry.is_none() {
                return Err(CliError::Usage("stage 0 needs --entry".into()));
            }
            let cfg = inputs.config();
            let project = inputs.load(entry.clone())?;
            let mut db = match &db {
                Some(dir) => SummaryDatabase::open(dir)?,
                None => SummaryDatabase::in_memory(),
            };
            let opts = StageOptions {
                stage,
                entry,
                jobs,
                max_passes,
                emit_harness,
            };
            let run = run_stage(&project, &opts, &cfg, &mut db)?;
            write_report(&Report::build(&run, &cfg), &json, out)
        }
        Command::Infer {
            inputs,
            db,
            max_passes,
            export,
        } => {
            let cfg = inputs.config();
            let project = inputs.load(None)?;
            let mut store = SummaryDatabase::open(&db)?;
            let base = base_contracts(&project, 3);
            let fx = run_fixpoint(
                &project.program,
                &base,
                &mut store,
                &cfg,
                &FixpointOptions { max_passes },
            )?;
            let inferred =
                merge(&base, &fx.inferred).with_origin(modcheck_core::frontend::Origin::Inferred);
            let path = export.unwrap_or_else(|| db.join("inferred.contracts"));
            write_file(&path, &contracts_to_string(&inferred))?;
            let by_kind = |k: ContractKind| inferred.iter().filter(|c| c.kind == k).count();
            let _ = writeln!(out, "Fixpoint after {} passes", fx.passes);
            let _ = writeln!(
                out,
                "Inferred {} contracts ({} requires, {} ensures, {} invariant)",
                inferred.len(),
                by_kind(ContractKind::Requires),
                by_kind(ContractKind::Ensures),
                by_kind(ContractKind::Invariant)
            );
            let _ = writeln!(out, "Exported to {}", path.display());
            Ok(EXIT_CLEAN)
        }
        Command::Single {
            module,
            inputs,
            db,
            json,
        } => {
            let db =
                db.ok_or_else(|| CliError::Usage("single needs --db or MODCHECK_DB".into()))?;
            let cfg = inputs.config();
            let project = inputs.load(None)?;
            let Some(m) = project.program.module(&module) else {
                return Err(CliError::Usage(format!(
                    "module `{module}` is not among the sources"
                )));
            };
            let mut store = SummaryDatabase::open(&db)?;
            let base = base_contracts(&project, 3);
            let contracts = merge(&base, &derive_contracts(&store, &project.program, &cfg)?);
            let start = Instant::now();
            let run = verify_module(
                &project.program,
                &module,
                &contracts,
                HarnessOptions { infer: true },
                &cfg,
            )?;
            let seconds = start.elapsed().as_secs_f64();
            store.put(extract_summary(
                &run,
                &project.program,
                &fingerprint(&contracts),
                &cfg,
            )?)?;
            let stage_run = StageRun {
                stage: 3,
                modules: vec![ModuleOutcome {
                    module: module.clone(),
                    file: m.file.clone(),
                    coverage: run
                        .result
                        .coverage
                        .get(&module)
                        .cloned()
                        .unwrap_or_default(),
                    alarms: run.result.alarms,
                    seconds: Some(seconds),
                }],
                contracts,
                passes: None,
                seconds,
            };
            write_report(&Report::build(&stage_run, &cfg), &json, out)
        }
        Command::Diff { a, b } => {
            let read = |p: &Path| {
                fs::read_to_string(p).map_err(|source| CliError::Io {
                    path: p.to_path_buf(),
                    source,
                })
            };
            let ra = Report::from_json(&read(&a)?)?;
            let rb = Report::from_json(&read(&b)?)?;
            let d = diff_reports(&ra, &rb)?;
            let _ = out.write_all(
                d.to_text(&a.display().to_string(), &b.display().to_string())
                    .as_bytes(),
            );
            Ok(EXIT_CLEAN)
        }
    }
}
