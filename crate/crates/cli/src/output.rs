//! CSV and metadata writers.
//!
//! CSVs are UTF-8, comma separated, with one header row. Floats are written
//! with 17 significant digits so every value round-trips exactly.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::error::CliError;

pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub struct CsvWriter {
    path: PathBuf,
    out: BufWriter<File>,
}

impl CsvWriter {
    pub fn create(path: &Path, header: &[&str]) -> Result<Self, CliError> {
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir).map_err(CliError::io(dir))?;
        }
        let file = File::create(path).map_err(CliError::io(path))?;
        let mut w = Self {
            path: path.to_path_buf(),
            out: BufWriter::new(file),
        };
        w.line(header.iter().map(|s| s.to_string()))?;
        Ok(w)
    }

    fn line(&mut self, cells: impl IntoIterator<Item = String>) -> Result<(), CliError> {
        let row = cells.into_iter().collect::<Vec<_>>().join(",");
        writeln!(self.out, "{row}").map_err(CliError::io(&self.path))
    }

    pub fn row(&mut self, cells: &[Cell]) -> Result<(), CliError> {
        self.line(cells.iter().map(Cell::render))
    }

    pub fn finish(mut self) -> Result<PathBuf, CliError> {
        self.out.flush().map_err(CliError::io(&self.path))?;
        Ok(self.path)
    }
}

pub enum Cell {
    Num(f64),
    Int(usize),
    Text(String),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Num(v) => fmt_f64(*v),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }
}

/// Git-style content hash (`blob <len>\0<bytes>`) of the canonical config JSON.
pub fn config_hash(config: &RunConfig) -> String {
    let body = serde_json::to_string(config).expect("config serializes");
    let mut hasher = Sha256::new();
    hasher.update(format!("blob {}\0", body.len()).as_bytes());
    hasher.update(body.as_bytes());
    hex::encode(hasher.finalize())
}

#[derive(Debug, Serialize)]
pub struct Metadata<'a, S: Serialize> {
    pub command: &'a str,
    pub version: &'a str,
    pub config: &'a RunConfig,
    pub input_hash: String,
    pub wall_clock_seconds: f64,
    pub summary: S,
}

pub fn write_metadata<S: Serialize>(
    dir: &Path,
    command: &str,
    config: &RunConfig,
    wall_clock_seconds: f64,
    summary: S,
) -> Result<PathBuf, CliError> {
    let meta = Metadata {
        command,
        version: env!("CARGO_PKG_VERSION"),
        config,
        input_hash: config_hash(config),
        wall_clock_seconds,
        summary,
    };
    write_json(&dir.join("metadata.json"), &meta)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<PathBuf, CliError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(CliError::io(dir))?;
    }
    let text = serde_json::to_string_pretty(value).expect("metadata serializes");
    fs::write(path, text + "\n").map_err(CliError::io(path))?;
    Ok(path.to_path_buf())
}
