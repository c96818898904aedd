//! Output directories, CSV formatting and the run manifest.

use std::fs::{self, File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use kagome_vqe::lattice::KagomePatch;

use crate::CliError;

/// Fixed-width scientific notation with 17 significant digits, which
/// round-trips every `f64`.
pub fn num(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        format!("{v}")
    }
}

pub fn opt_num(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

/// Content hash in the style of a git blob: the payload is prefixed with
/// `blob <len>\0` before hashing.
pub fn blob_hash(content: &str) -> String {
    let mut h = Sha256::new();
    h.update(format!("blob {}\0", content.len()));
    h.update(content);
    format!("{:x}", h.finalize())
}

pub struct OutDir {
    pub root: PathBuf,
    files: Vec<String>,
}

impl OutDir {
    pub fn create(root: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(root)
            .map_err(|e| CliError::Config(format!("cannot create output directory {}: {e}", root.display())))?;
        let probe = root.join(".write-test");
        File::create(&probe)
            .and_then(|_| fs::remove_file(&probe))
            .map_err(|e| CliError::Config(format!("output directory {} is not writable: {e}", root.display())))?;
        Ok(Self {
            root: root.to_path_buf(),
            files: Vec::new(),
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    fn record(&mut self, name: &str) {
        if !self.files.iter().any(|f| f == name) {
            self.files.push(name.to_string());
        }
    }

    pub fn files(&self) -> &[String] {
        &self.files
    }

    pub fn write_text(&mut self, name: &str, text: &str) -> Result<PathBuf, CliError> {
        let path = self.path(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|e| io_err(&path, e))?;
        }
        fs::write(&path, text).map_err(|e| io_err(&path, e))?;
        self.record(name);
        Ok(path)
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<PathBuf, CliError> {
        let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Task(e.to_string()))?;
        self.write_text(name, &(text + "\n"))
    }

    /// Write a CSV with the given header and pre-formatted rows.
    pub fn write_csv(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<PathBuf, CliError> {
        let path = self.path(name);
        let mut w = csv::Writer::from_path(&path).map_err(|e| CliError::Task(format!("{}: {e}", path.display())))?;
        let flush = |w: &mut csv::Writer<File>| -> Result<(), csv::Error> {
            w.write_record(header)?;
            for r in rows {
                w.write_record(r)?;
            }
            w.flush()?;
            Ok(())
        };
        flush(&mut w).map_err(|e| CliError::Task(format!("{}: {e}", path.display())))?;
        self.record(name);
        Ok(path)
    }

    pub fn mark(&mut self, name: &str) {
        self.record(name);
    }
}

pub fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Task(format!("{}: {e}", path.display()))
}

/// Line-oriented file that is only ever appended to and flushed per line.
pub struct AppendLog {
    w: BufWriter<File>,
}

impl AppendLog {
    pub fn open(path: &Path) -> Result<Self, CliError> {
        let f = OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(|e| io_err(path, e))?;
        Ok(Self { w: BufWriter::new(f) })
    }

    pub fn line(&mut self, line: &str) -> std::io::Result<()> {
        writeln!(self.w, "{line}")?;
        self.w.flush()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TaskStatus {
    pub task: String,
    pub ok: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl TaskStatus {
    pub fn ok(task: impl Into<String>) -> Self {
        Self {
            task: task.into(),
            ok: true,
            error: None,
        }
    }

    pub fn failed(task: impl Into<String>, error: impl ToString) -> Self {
        Self {
            task: task.into(),
            ok: false,
            error: Some(error.to_string()),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct Manifest<'a> {
    pub tool: &'static str,
    pub version: &'static str,
    pub experiment: &'a str,
    pub config: &'a serde_json::Value,
    pub config_hash: String,
    pub patch_hashes: Vec<(String, String)>,
    pub runtime_s: f64,
    pub tasks: &'a [TaskStatus],
    pub outputs: &'a [String],
}

pub fn patch_hashes(patches: &[KagomePatch]) -> Vec<(String, String)> {
    patches
        .iter()
        .map(|p| (p.name.clone(), blob_hash(&p.to_json())))
        .collect()
}
