//! Batch driver: staged analyses, contract inference, single-module updates
//! and report comparison.

pub mod commands;
pub mod project;
pub mod report;
pub mod stages;

use std::path::PathBuf;

use modcheck_core::analyzer::AnalysisError;
use modcheck_core::frontend::FrontendError;
use modcheck_core::harness::VerifyError;
use modcheck_core::ifacespec::IfaceError;
use modcheck_core::inference::{DbError, InferError};

pub use commands::{run, Cli, EXIT_ALARMS, EXIT_CLEAN, EXIT_ERROR, EXIT_NO_FIXPOINT};
pub use project::{load_project, Project};
pub use report::{diff_reports, Report, ReportDiff};
pub use stages::{run_stage, StageOptions, StageRun};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Frontend(FrontendError),
    #[error("{file}: {source}")]
    Interface {
        file: String,
        #[source]
        source: IfaceError,
    },
    #[error(transparent)]
    Verify(#[from] VerifyError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error(transparent)]
    Infer(#[from] InferError),
    #[error(transparent)]
    Db(#[from] DbError),
    #[error("{0}")]
    Usage(String),
    #[error("report: {0}")]
    Report(String),
    #[error("report schema version {found}, expected {expected}")]
    Schema { found: u32, expected: u32 },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Infer(InferError::NoConvergence { .. }) => EXIT_NO_FIXPOINT,
            _ => EXIT_ERROR,
        }
    }
}
