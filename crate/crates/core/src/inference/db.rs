//! File-backed store of module summaries.
//!
//! Layout: `index.json` plus `modules/<name>.json`, both canonical JSON with
//! a schema version. Writers hold an exclusive lock on `.lock` and replace
//! files by renaming a fully written temporary file.

use std::collections::BTreeMap;
use std::fs::{self, File, OpenOptions, TryLockError};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::ModuleSummary;

pub const SCHEMA_VERSION: u32 = 1;
const LOCK_TIMEOUT: Duration = Duration::from_secs(30);
const LOCK_POLL: Duration = Duration::from_millis(10);

#[derive(Debug, thiserror::Error)]
pub enum DbError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("corrupt record for module `{module}`: {message}")]
    Corrupt { module: String, message: String },
    #[error("database schema version {found}, expected {expected}")]
    Schema { found: u32, expected: u32 },
    #[error("timed out waiting for the database lock at {}", .0.display())]
    LockTimeout(PathBuf),
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
struct Index {
    schema_version: u32,
    modules: BTreeMap<String, IndexEntry>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct IndexEntry {
    file: String,
    fingerprint: String,
    timestamp: u64,
}

#[derive(Serialize, Deserialize)]
struct Record {
    schema_version: u32,
    summary: ModuleSummary,
}

#[derive(Serialize)]
struct RecordRef<'a> {
    schema_version: u32,
    summary: &'a ModuleSummary,
}

/// Module summaries keyed by module name, optionally mirrored on disk.
#[derive(Debug, Clone, Default)]
pub struct SummaryDatabase {
    root: Option<PathBuf>,
    records: BTreeMap<String, ModuleSummary>,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> DbError + '_ {
    move |source| DbError::Io {
        path: path.to_path_buf(),
        source,
    }
}

struct Lock(File);

impl Drop for Lock {
    fn drop(&mut self) {
        let _ = self.0.unlock();
    }
}

fn lock(root: &Path, exclusive: bool) -> Result<Lock, DbError> {
    let path = root.join(".lock");
    let file = OpenOptions::new()
        .create(true)
        .truncate(false)
        .write(true)
        .open(&path)
        .map_err(io_err(&path))?;
    let start = Instant::now();
    loop {
        let r = if exclusive {
            file.try_lock()
        } else {
            file.try_lock_shared()
        };
        match r {
            Ok(()) => return Ok(Lock(file)),
            Err(TryLockError::WouldBlock) if start.elapsed() < LOCK_TIMEOUT => {
                thread::sleep(LOCK_POLL)
            }
            Err(TryLockError::WouldBlock) => return Err(DbError::LockTimeout(path)),
            Err(TryLockError::Error(e)) => return Err(io_err(&path)(e)),
        }
    }
}

fn write_atomic(path: &Path, text: &str) -> Result<(), DbError> {
    let tmp = path.with_extension("json.tmp");
    let mut f = File::create(&tmp).map_err(io_err(&tmp))?;
    f.write_all(text.as_bytes()).map_err(io_err(&tmp))?;
    f.sync_all().map_err(io_err(&tmp))?;
    fs::rename(&tmp, path).map_err(io_err(path))
}

fn check_schema(found: u32) -> Result<(), DbError> {
    if found == SCHEMA_VERSION {
        Ok(())
    } else {
        Err(DbError::Schema {
            found,
            expected: SCHEMA_VERSION,
        })
    }
}

impl SummaryDatabase {
    pub fn in_memory() -> SummaryDatabase {
        SummaryDatabase::default()
    }

    /// Opens (creating if needed) the database in `dir` and loads a snapshot
    /// of all records.
    pub fn open(dir: &Path) -> Result<SummaryDatabase, DbError> {
        let modules = dir.join("modules");
        fs::create_dir_all(&modules).map_err(io_err(&modules))?;
        let mut db = SummaryDatabase {
            root: Some(dir.to_path_buf()),
            records: BTreeMap::new(),
        };
        db.reload()?;
        Ok(db)
    }

    pub fn root(&self) -> Option<&Path> {
        self.root.as_deref()
    }

    /// Re-reads every record from disk.
    pub fn reload(&mut self) -> Result<(), DbError> {
        let Some(root) = self.root.clone() else {
            return Ok(());
        };
        let _guard = lock(&root, false)?;
        let index = read_index(&root)?;
        let mut records = BTreeMap::new();
        for (name, entry) in &index.modules {
            let path = root.join(&entry.file);
            let text = fs::read_to_string(&path).map_err(io_err(&path))?;
            let rec: Record = serde_json::from_str(&text).map_err(|e| DbError::Corrupt {
                module: name.clone(),
                message: e.to_string(),
            })?;
            check_schema(rec.schema_version)?;
            if rec.summary.module != *name {
                return Err(DbError::Corrupt {
                    module: name.clone(),
                    message: format!("record names module `{}`", rec.summary.module),
                });
            }
            records.insert(name.clone(), rec.summary);
        }
        self.records = records;
        Ok(())
    }

    pub fn get(&self, module: &str) -> Option<&ModuleSummary> {
        self.records.get(module)
    }

    pub fn contains(&self, module: &str) -> bool {
        self.records.contains_key(module)
    }

    pub fn records(&self) -> impl Iterator<Item = &ModuleSummary> {
        self.records.values()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Replaces the record of `summary.module`.
    pub fn put(&mut self, summary: ModuleSummary) -> Result<(), DbError> {
        if let Some(root) = self.root.clone() {
            let _guard = lock(&root, true)?;
            let mut index = read_index(&root)?;
            let file = format!("modules/{}.json", summary.module);
            write_atomic(&root.join(&file), &record_json(&summary))?;
            index.modules.insert(
                summary.module.clone(),
                IndexEntry {
                    file,
                    fingerprint: summary.fingerprint.clone(),
                    timestamp: summary.timestamp,
                },
            );
            index.schema_version = SCHEMA_VERSION;
            let text = serde_json::to_string_pretty(&index).expect("index serializes") + "\n";
            write_atomic(&root.join("index.json"), &text)?;
        }
        self.records.insert(summary.module.clone(), summary);
        Ok(())
    }
}

fn read_index(root: &Path) -> Result<Index, DbError> {
    let path = root.join("index.json");
    if !path.exists() {
        return Ok(Index {
            schema_version: SCHEMA_VERSION,
            modules: BTreeMap::new(),
        });
    }
    let text = fs::read_to_string(&path).map_err(io_err(&path))?;
    let index: Index = serde_json::from_str(&text).map_err(|e| DbError::Corrupt {
        module: "index".to_string(),
        message: e.to_string(),
    })?;
    check_schema(index.schema_version)?;
    Ok(index)
}

/// Canonical on-disk form of one module record.
pub fn record_json(summary: &ModuleSummary) -> String {
    let rec = RecordRef {
        schema_version: SCHEMA_VERSION,
        summary,
    };
    serde_json::to_string_pretty(&rec).expect("summary serializes") + "\n"
}
