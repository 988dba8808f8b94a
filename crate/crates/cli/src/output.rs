//! CSV tables and TOML summaries, each opened by a `#` comment block with
//! the program version and the resolved configuration.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::{Format, RunConfig};
use crate::error::CliError;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub struct Output {
    dir: PathBuf,
    format: Format,
    header: String,
    written: Vec<PathBuf>,
}

impl Output {
    /// Creates the output directory and renders the header block.
    pub fn new(cfg: &RunConfig, command: &str) -> Result<Self, CliError> {
        let dir = cfg.output.dir.clone();
        fs::create_dir_all(&dir)
            .map_err(|e| CliError::Config(format!("cannot create output directory {}: {e}", dir.display())))?;
        let mut header = format!("# staloha {VERSION} {command}\n");
        for line in cfg.provenance_toml().lines() {
            if line.is_empty() {
                header.push_str("#\n");
            } else {
                header.push_str("# ");
                header.push_str(line);
                header.push('\n');
            }
        }
        Ok(Self {
            dir,
            format: cfg.output.format,
            header,
            written: Vec::new(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }

    fn create(&self, name: &str) -> Result<(PathBuf, fs::File), CliError> {
        let path = self.dir.join(name);
        let mut file = fs::File::create(&path).map_err(|e| CliError::io(format!("create {}", path.display()), e))?;
        file.write_all(self.header.as_bytes())
            .map_err(|e| CliError::io(format!("write {}", path.display()), e))?;
        Ok((path, file))
    }

    /// Writes `<stem>.csv` (or `.tsv`).
    pub fn table(&mut self, stem: &str, columns: &[&str], rows: &[Vec<String>]) -> Result<PathBuf, CliError> {
        let (path, file) = self.create(&format!("{stem}.{}", self.format.extension()))?;
        let mut w = csv::WriterBuilder::new()
            .delimiter(self.format.delimiter())
            .from_writer(file);
        w.write_record(columns)?;
        for row in rows {
            w.write_record(row)?;
        }
        w.flush()
            .map_err(|e| CliError::io(format!("write {}", path.display()), e))?;
        self.written.push(path.clone());
        Ok(path)
    }

    /// Writes `summary.toml`.
    pub fn summary<T: Serialize>(&mut self, body: &T) -> Result<PathBuf, CliError> {
        let text = toml::to_string(body).map_err(|e| CliError::Config(format!("summary: {e}")))?;
        let (path, mut file) = self.create("summary.toml")?;
        file.write_all(text.as_bytes())
            .map_err(|e| CliError::io(format!("write {}", path.display()), e))?;
        self.written.push(path.clone());
        Ok(path)
    }
}

/// Shortest round-trip decimal, switching to exponent form for tiny values.
pub fn num(v: f64) -> String {
    if v != 0.0 && v.abs() < 1e-4 {
        format!("{v:e}")
    } else {
        format!("{v}")
    }
}

/// Empty cell for a missing value.
pub fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}
