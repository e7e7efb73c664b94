//! Artifact writing and the run manifest.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::PathBuf;
use std::time::Instant;

use serde::Serialize;

use super::{CliError, Format};

/// One CSV cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    F(f64),
    U(u64),
    S(String),
    Empty,
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::F(x)
    }
}

impl From<Option<f64>> for Cell {
    fn from(x: Option<f64>) -> Self {
        x.map_or(Cell::Empty, Cell::F)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::U(x as u64)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::S(s.to_string())
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::S(s)
    }
}

/// 17 significant digits, so values round-trip.
pub fn fmt_float(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.16e}")
    }
}

fn fmt_cell(c: &Cell) -> String {
    match c {
        Cell::F(x) => fmt_float(*x),
        Cell::U(n) => n.to_string(),
        Cell::S(s) if s.contains([',', '"', '\n']) => format!("\"{}\"", s.replace('"', "\"\"")),
        Cell::S(s) => s.clone(),
        Cell::Empty => String::new(),
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut s = self.header.join(",");
        s.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(fmt_cell).collect();
            let _ = writeln!(s, "{}", cells.join(","));
        }
        s
    }
}

pub fn to_json<T: Serialize + ?Sized>(value: &T) -> Result<String, CliError> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub config: serde_json::Value,
    pub seed: Option<u64>,
    pub jobs: usize,
    pub tool_version: String,
    pub wall_time_seconds: f64,
    pub outputs: Vec<String>,
}

/// Collects artifacts for one run.
pub struct Sink {
    out: Option<PathBuf>,
    format: Option<Format>,
    written: Vec<String>,
    started: Instant,
}

impl Sink {
    pub fn new(out: Option<PathBuf>, format: Option<Format>) -> Result<Self, CliError> {
        if let Some(dir) = &out {
            std::fs::create_dir_all(dir)?;
        }
        Ok(Sink { out, format, written: Vec::new(), started: Instant::now() })
    }

    /// Whether an artifact of kind `kind` goes out. With `--format` only that kind
    /// is written; otherwise everything goes to the output directory, and only
    /// `stdout_default` to stdout.
    fn wants(&self, kind: Format, stdout_default: Format) -> bool {
        match (self.format, &self.out) {
            (Some(f), _) => f == kind,
            (None, Some(_)) => true,
            (None, None) => kind == stdout_default,
        }
    }

    pub fn emit(&mut self, name: &str, kind: Format, stdout_default: Format, contents: &str) -> Result<(), CliError> {
        if !self.wants(kind, stdout_default) {
            return Ok(());
        }
        match &self.out {
            Some(dir) => {
                let path = dir.join(name);
                std::fs::write(&path, contents)?;
                self.written.push(path.display().to_string());
            }
            None => {
                let mut stdout = std::io::stdout().lock();
                stdout.write_all(contents.as_bytes())?;
                stdout.flush()?;
                self.written.push("<stdout>".into());
            }
        }
        Ok(())
    }

    pub fn finish(self, command: &str, config: serde_json::Value, seed: Option<u64>) -> Result<(), CliError> {
        let manifest = RunManifest {
            command: command.to_string(),
            config,
            seed,
            jobs: rayon::current_num_threads(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            wall_time_seconds: self.started.elapsed().as_secs_f64(),
            outputs: self.written,
        };
        let text = to_json(&manifest)?;
        match &self.out {
            Some(dir) => std::fs::write(dir.join("manifest.json"), text)?,
            None => eprint!("{text}"),
        }
        Ok(())
    }
}
