//! Tables, float formatting, atomic file writes and the run manifest.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use num_rational::BigRational;
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

pub const TOOL: &str = "signlab";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Shortest representation that parses back to the same f64.
pub fn format_float(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || !x.is_finite() || (1e-5..1e16).contains(&a) {
        x.to_string()
    } else {
        format!("{x:e}")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    /// Decimal integer of any width.
    Int(String),
    Float(f64),
    Text(String),
    Bool(bool),
    Empty,
}

impl Cell {
    pub fn int(v: impl ToString) -> Cell {
        Cell::Int(v.to_string())
    }

    pub fn text(v: impl ToString) -> Cell {
        Cell::Text(v.to_string())
    }

    pub fn opt<T>(v: Option<T>, f: impl FnOnce(T) -> Cell) -> Cell {
        v.map_or(Cell::Empty, f)
    }

    pub fn render(&self) -> String {
        match self {
            Cell::Int(s) | Cell::Text(s) => s.clone(),
            Cell::Float(x) => format_float(*x),
            Cell::Bool(b) => b.to_string(),
            Cell::Empty => String::new(),
        }
    }

    fn to_json(&self) -> Value {
        match self {
            Cell::Int(s) => s
                .parse::<i64>()
                .map(Value::from)
                .or_else(|_| s.parse::<u64>().map(Value::from))
                .unwrap_or_else(|_| Value::String(s.clone())),
            Cell::Float(x) if x.is_finite() => json!(x),
            Cell::Float(x) => Value::String(format_float(*x)),
            Cell::Text(s) => Value::String(s.clone()),
            Cell::Bool(b) => Value::Bool(*b),
            Cell::Empty => Value::Null,
        }
    }
}

/// Numerator and denominator cells of a reduced rational.
pub fn ratio_cells(r: &BigRational) -> [Cell; 2] {
    [Cell::int(r.numer()), Cell::int(r.denom())]
}

pub fn ratio_string(r: &BigRational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Table {
        Table {
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.header.len(), "row width");
        self.rows.push(row);
    }

    pub fn render(&self, format: Format) -> Vec<u8> {
        match format {
            Format::Csv => {
                let mut w = csv::Writer::from_writer(Vec::new());
                w.write_record(&self.header).expect("in-memory write");
                for row in &self.rows {
                    w.write_record(row.iter().map(Cell::render)).expect("in-memory write");
                }
                w.into_inner().expect("in-memory flush")
            }
            Format::Json => {
                let rows: Vec<Value> = self
                    .rows
                    .iter()
                    .map(|row| {
                        let obj: Map<String, Value> =
                            self.header.iter().zip(row).map(|(h, c)| (h.to_string(), c.to_json())).collect();
                        Value::Object(obj)
                    })
                    .collect();
                let mut out = serde_json::to_vec_pretty(&rows).expect("serializable");
                out.push(b'\n');
                out
            }
        }
    }
}

/// What a subcommand produced, before anything touches the disk.
pub struct Outcome {
    /// Main table, written to `--out` or stdout.
    pub primary: Table,
    /// Extra tables written next to `--out` as `PATH.<suffix>.<ext>`.
    pub tables: Vec<(&'static str, Table)>,
    /// Extra JSON documents written as `PATH.<suffix>.json`.
    pub documents: Vec<(&'static str, Value)>,
    pub summary: String,
}

/// Hash over everything that determines the output bodies. Threads, paths and
/// timestamps are left out, so reruns on any worker count share a hash.
pub fn manifest_hash(subcommand: &str, params: &Value, seed: u64) -> String {
    let canonical = json!({
        "tool": TOOL,
        "version": VERSION,
        "subcommand": subcommand,
        "params": params,
        "seed": seed,
    });
    let digest = Sha256::digest(canonical.to_string().as_bytes());
    digest[..8].iter().map(|b| format!("{b:02x}")).collect()
}

pub fn unix_now() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0)
}

fn sidecar(base: &Path, suffix: &str) -> PathBuf {
    let mut s = base.as_os_str().to_owned();
    s.push(".");
    s.push(suffix);
    PathBuf::from(s)
}

/// Writes every file to a temporary sibling first and renames only once all
/// of them are on disk.
pub fn write_all_atomic(files: &[(PathBuf, Vec<u8>)]) -> io::Result<()> {
    let mut staged = Vec::with_capacity(files.len());
    let result = (|| {
        for (path, bytes) in files {
            let tmp = sidecar(path, &format!("tmp{}", std::process::id()));
            staged.push((tmp.clone(), path.clone()));
            let mut f = fs::File::create(&tmp)?;
            f.write_all(bytes)?;
            f.sync_all()?;
        }
        for (tmp, path) in &staged {
            fs::rename(tmp, path)?;
        }
        Ok(())
    })();
    if result.is_err() {
        for (tmp, _) in &staged {
            let _ = fs::remove_file(tmp);
        }
    }
    result
}

pub struct RunInfo<'a> {
    pub subcommand: &'a str,
    pub params: &'a Value,
    pub seed: u64,
    pub threads: usize,
    pub format: Format,
    pub hash: &'a str,
    pub started: f64,
}

/// Lays out the output files for `--out PATH`, manifest last.
pub fn output_files(base: &Path, outcome: &Outcome, run: &RunInfo) -> Vec<(PathBuf, Vec<u8>)> {
    let mut files = vec![(base.to_path_buf(), outcome.primary.render(run.format))];
    for (suffix, table) in &outcome.tables {
        let path = sidecar(base, &format!("{suffix}.{}", run.format.extension()));
        files.push((path, table.render(run.format)));
    }
    for (suffix, doc) in &outcome.documents {
        let mut bytes = serde_json::to_vec_pretty(doc).expect("serializable");
        bytes.push(b'\n');
        files.push((sidecar(base, &format!("{suffix}.json")), bytes));
    }
    let manifest_path = sidecar(base, "manifest.json");
    let outputs: Vec<String> = files.iter().map(|(p, _)| p.display().to_string()).collect();
    let manifest = json!({
        "tool": TOOL,
        "version": VERSION,
        "subcommand": run.subcommand,
        "params": run.params,
        "seed": run.seed,
        "threads": run.threads,
        "format": run.format.extension(),
        "manifest_hash": run.hash,
        "started_unix": run.started,
        "finished_unix": unix_now(),
        "outputs": outputs,
        "manifest": manifest_path.display().to_string(),
    });
    let mut bytes = serde_json::to_vec_pretty(&manifest).expect("serializable");
    bytes.push(b'\n');
    files.push((manifest_path, bytes));
    files
}
