//! The four analysis stages.

use std::fs;
use std::path::PathBuf;
use std::time::Instant;

use rayon::prelude::*;

use modcheck_core::analyzer::{analyze, Alarm, Coverage};
use modcheck_core::domains::DomainConfig;
use modcheck_core::frontend::ContractSet;
use modcheck_core::harness::{verify_module, HarnessOptions};
use modcheck_core::inference::{
    merge, run_fixpoint, FixpointOptions, SummaryDatabase, DEFAULT_MAX_PASSES,
};

use crate::project::Project;
use crate::CliError;

#[derive(Debug, Clone)]
pub struct StageOptions {
    pub stage: u8,
    pub entry: Option<String>,
    pub jobs: usize,
    pub max_passes: u32,
    pub emit_harness: Option<PathBuf>,
}

impl Default for StageOptions {
    fn default() -> Self {
        StageOptions {
            stage: 1,
            entry: None,
            jobs: 1,
            max_passes: DEFAULT_MAX_PASSES,
            emit_harness: None,
        }
    }
}

pub fn stage_label(stage: u8) -> &'static str {
    match stage {
        0 => "integration analysis",
        1 => "module-level, implicit type contracts",
        2 => "module-level, interface and inferred contracts",
        _ => "module-level, manual, interface and inferred contracts",
    }
}

#[derive(Debug, Clone)]
pub struct ModuleOutcome {
    pub module: String,
    pub file: String,
    pub alarms: Vec<Alarm>,
    pub coverage: Coverage,
    /// Wall-clock analysis time; `None` when the module was analyzed as part
    /// of an integration run.
    pub seconds: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct StageRun {
    pub stage: u8,
    pub modules: Vec<ModuleOutcome>,
    /// Contracts the module analyses used, inferred ones included.
    pub contracts: ContractSet,
    pub passes: Option<u32>,
    pub seconds: f64,
}

impl StageRun {
    pub fn inferred(&self) -> ContractSet {
        self.contracts
            .with_origin(modcheck_core::frontend::Origin::Inferred)
    }
}

/// Contracts given to the module analyses of `stage`, before inference.
pub fn base_contracts(project: &Project, stage: u8) -> ContractSet {
    match stage {
        0 | 1 => ContractSet::new(),
        2 => project.interface.clone(),
        _ => merge(&project.manual, &project.interface),
    }
}

pub fn run_stage(
    project: &Project,
    opts: &StageOptions,
    cfg: &DomainConfig,
    db: &mut SummaryDatabase,
) -> Result<StageRun, CliError> {
    if opts.stage > 3 {
        return Err(CliError::Usage(format!("unknown stage {}", opts.stage)));
    }
    let start = Instant::now();
    if opts.stage == 0 {
        let mut run = integration(project, opts, cfg)?;
        run.seconds = start.elapsed().as_secs_f64();
        return Ok(run);
    }
    let base = base_contracts(project, opts.stage);
    let (contracts, passes) = if opts.stage >= 2 {
        let fx = run_fixpoint(
            &project.program,
            &base,
            db,
            cfg,
            &FixpointOptions {
                max_passes: opts.max_passes,
            },
        )?;
        log::info!("fixpoint reached after {} passes", fx.passes);
        (merge(&base, &fx.inferred), Some(fx.passes))
    } else {
        (base, None)
    };
    let modules = module_level(project, &contracts, opts, cfg)?;
    Ok(StageRun {
        stage: opts.stage,
        modules,
        contracts,
        passes,
        seconds: start.elapsed().as_secs_f64(),
    })
}

fn pool(jobs: usize) -> Result<rayon::ThreadPool, CliError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start {jobs} jobs: {e}")))
}

/// Analyzes every module against `contracts`, in parallel with `opts.jobs`.
pub fn module_level(
    project: &Project,
    contracts: &ContractSet,
    opts: &StageOptions,
    cfg: &DomainConfig,
) -> Result<Vec<ModuleOutcome>, CliError> {
    let program = &project.program;
    let results: Vec<_> = pool(opts.jobs)?.install(|| {
        program
            .modules
            .par_iter()
            .map(|m| {
                let t = Instant::now();
                let run =
                    verify_module(program, &m.name, contracts, HarnessOptions::default(), cfg)?;
                log::info!("{}: {} alarms", m.name, run.result.alarms.len());
                Ok::<_, CliError>((m, run, t.elapsed().as_secs_f64()))
            })
            .collect()
    });
    let mut out = Vec::new();
    for r in results {
        let (m, run, seconds) = r?;
        if let Some(dir) = &opts.emit_harness {
            emit(dir, &m.name, &run.harness.text)?;
        }
        out.push(ModuleOutcome {
            module: m.name.clone(),
            file: m.file.clone(),
            coverage: run
                .result
                .coverage
                .get(&m.name)
                .cloned()
                .unwrap_or_default(),
            alarms: run.result.alarms,
            seconds: Some(seconds),
        });
    }
    Ok(out)
}

fn emit(dir: &PathBuf, module: &str, text: &str) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|source| CliError::Io {
        path: dir.clone(),
        source,
    })?;
    let path = dir.join(format!("{module}.harness.c"));
    fs::write(&path, text).map_err(|source| CliError::Io { path, source })
}

fn integration(
    project: &Project,
    opts: &StageOptions,
    cfg: &DomainConfig,
) -> Result<StageRun, CliError> {
    let entry = opts
        .entry
        .clone()
        .or_else(|| project.program.entry.clone())
        .ok_or_else(|| CliError::Usage("stage 0 needs --entry".into()))?;
    let program = project.program.clone().with_entry(Some(entry.clone()));
    let contracts = ContractSet::new();
    let result = analyze(&program, &entry, &contracts, cfg)?;
    log::info!("integration from `{entry}`: {} alarms", result.alarms.len());
    let modules = program
        .modules
        .iter()
        .map(|m| ModuleOutcome {
            module: m.name.clone(),
            file: m.file.clone(),
            alarms: result
                .alarms
                .iter()
                .filter(|a| a.file == m.file)
                .cloned()
                .collect(),
            coverage: result.coverage.get(&m.name).cloned().unwrap_or(Coverage {
                total: m.stmt_count,
                reached: Default::default(),
            }),
            seconds: None,
        })
        .collect();
    Ok(StageRun {
        stage: 0,
        modules,
        contracts,
        passes: None,
        seconds: 0.0,
    })
}
