//! Loading sources, contract files and interface descriptions.

use std::fs;
use std::path::{Path, PathBuf};

use modcheck_core::frontend::{
    parse_contracts, parse_module, resolve_project, ContractSet, Origin, Program,
};
use modcheck_core::ifacespec::{constraints_to_contracts, parse_interface};

use crate::CliError;

/// A resolved project with its contracts split by origin.
#[derive(Debug, Clone)]
pub struct Project {
    pub program: Program,
    /// Contracts annotated in the sources plus `--contracts` files.
    pub manual: ContractSet,
    pub interface: ContractSet,
    pub warnings: Vec<String>,
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn file_name(path: &Path) -> String {
    path.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

fn walk(dir: &Path, out: &mut Vec<PathBuf>) -> Result<(), CliError> {
    let entries = fs::read_dir(dir).map_err(|source| CliError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    for e in entries {
        let path = e
            .map_err(|source| CliError::Io {
                path: dir.to_path_buf(),
                source,
            })?
            .path();
        if path.is_dir() {
            walk(&path, out)?;
        } else if path.extension().is_some_and(|x| x == "c") {
            out.push(path);
        }
    }
    Ok(())
}

/// Source files named directly or found (recursively, `*.c`) under the
/// given directories, sorted by module name.
pub fn collect_sources(paths: &[PathBuf]) -> Result<Vec<PathBuf>, CliError> {
    let mut out = Vec::new();
    for p in paths {
        if p.is_dir() {
            walk(p, &mut out)?;
        } else {
            out.push(p.clone());
        }
    }
    out.sort_by_key(|p| (file_name(p), p.clone()));
    out.dedup();
    Ok(out)
}

pub fn load_project(
    paths: &[PathBuf],
    contract_files: &[PathBuf],
    interface_files: &[PathBuf],
    entry: Option<String>,
) -> Result<Project, CliError> {
    let mut modules = Vec::new();
    for path in collect_sources(paths)? {
        let name = file_name(&path);
        let m =
            parse_module(&read(&path)?, &name).map_err(|e| CliError::Frontend(e.in_file(&name)))?;
        modules.push(m);
    }
    let program = resolve_project(modules)
        .map_err(CliError::Frontend)?
        .with_entry(entry);
    let mut manual = ContractSet::new();
    for m in &program.modules {
        manual.extend(&m.contracts);
    }
    for path in contract_files {
        let name = file_name(path);
        let cs = parse_contracts(&read(path)?, &name, Origin::Manual)
            .map_err(|e| CliError::Frontend(e.in_file(&name)))?;
        manual.extend(&cs);
    }
    let mut interface = ContractSet::new();
    let mut warnings = Vec::new();
    for path in interface_files {
        let name = file_name(path);
        let spec = parse_interface(&read(path)?).map_err(|e| CliError::Interface {
            file: name.clone(),
            source: e,
        })?;
        let import =
            constraints_to_contracts(&spec, &program, &name).map_err(|e| CliError::Interface {
                file: name.clone(),
                source: e,
            })?;
        interface.extend(&import.contracts);
        warnings.extend(import.warnings.into_iter().map(|w| format!("{name}: {w}")));
    }
    Ok(Project {
        program,
        manual,
        interface,
        warnings,
    })
}
