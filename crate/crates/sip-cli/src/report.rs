//! Report structure shared by all subcommands, with CSV and JSON renderers.
//!
//! CSV files carry `#`-prefixed metadata lines (parameter echo, scalars,
//! check outcomes) followed by one or more named tables; every float is
//! printed with 17 significant digits so re-parsing is lossless. JSON output
//! serializes the whole report.

use crate::config::{OutputFormat, RateSpec, RunConfig};
use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::path::PathBuf;

/// One table cell. Absent values (mode not run) stay empty, not zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Cell {
    Empty(Option<()>),
    Int(i64),
    Float(f64),
    Text(String),
}

impl Cell {
    pub fn empty() -> Self {
        Cell::Empty(None)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<i64> for Cell {
    fn from(v: i64) -> Self {
        Cell::Int(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

/// A named table with a fixed column order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Self {
            name: name.to_string(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

/// Outcome of one verification check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    /// Measured figure (residual, statistic, worst z-score ...).
    pub value: f64,
    /// The limit the figure was held against.
    pub threshold: f64,
    pub detail: String,
}

/// Parameter echo carried by every report.
#[derive(Debug, Clone, Serialize)]
pub struct ParamsEcho {
    pub n_sites: usize,
    pub m: f64,
    pub b1: f64,
    pub d1: f64,
    pub b_n: f64,
    pub d_n: f64,
    pub rates: RateSpec,
    pub seed: u64,
    pub version: &'static str,
}

impl ParamsEcho {
    pub fn from_config(cfg: &RunConfig) -> Self {
        Self {
            n_sites: cfg.params.n_sites(),
            m: cfg.params.m(),
            b1: cfg.params.b1(),
            d1: cfg.params.d1(),
            b_n: cfg.params.b_n(),
            d_n: cfg.params.d_n(),
            rates: cfg.rates,
            seed: cfg.seed,
            version: env!("CARGO_PKG_VERSION"),
        }
    }
}

/// The full output of a subcommand.
#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub command: String,
    pub params: ParamsEcho,
    /// Named scalar results with a short note each.
    pub scalars: Vec<(String, f64, String)>,
    pub tables: Vec<Table>,
    pub checks: Vec<CheckResult>,
}

impl Report {
    pub fn new(command: &str, cfg: &RunConfig) -> Self {
        Self {
            command: command.to_string(),
            params: ParamsEcho::from_config(cfg),
            scalars: Vec::new(),
            tables: Vec::new(),
            checks: Vec::new(),
        }
    }

    pub fn scalar(&mut self, name: &str, value: f64, note: &str) {
        self.scalars.push((name.to_string(), value, note.to_string()));
    }

    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    /// Renders in the requested format.
    pub fn render(&self, format: OutputFormat) -> String {
        match format {
            OutputFormat::Csv => self.to_csv(),
            OutputFormat::Json => {
                let mut s = serde_json::to_string_pretty(self).expect("serializable report");
                s.push('\n');
                s
            }
        }
    }

    fn to_csv(&self) -> String {
        let mut out = String::new();
        let p = &self.params;
        let _ = writeln!(out, "# sip {} v{}", self.command, p.version);
        let _ = writeln!(
            out,
            "# params: N={} m={} b1={} d1={} bN={} dN={} seed={}",
            p.n_sites,
            fmt17(p.m),
            fmt17(p.b1),
            fmt17(p.d1),
            fmt17(p.b_n),
            fmt17(p.d_n),
            p.seed
        );
        for (name, value, note) in &self.scalars {
            let _ = writeln!(out, "# {} = {}  ({})", name, fmt17(*value), note);
        }
        for check in &self.checks {
            let _ = writeln!(
                out,
                "# check: {} {} value={} threshold={} {}",
                check.name,
                if check.passed { "PASS" } else { "FAIL" },
                fmt17(check.value),
                fmt17(check.threshold),
                check.detail
            );
        }
        for table in &self.tables {
            let _ = writeln!(out, "# table: {}", table.name);
            let _ = writeln!(out, "{}", table.columns.join(","));
            for row in &table.rows {
                let cells: Vec<String> = row.iter().map(render_cell).collect();
                let _ = writeln!(out, "{}", cells.join(","));
            }
        }
        out
    }

    /// Writes to the configured destination (file or stdout).
    pub fn emit(&self, cfg: &RunConfig) -> Result<()> {
        let text = self.render(cfg.format);
        match resolve_out_path(cfg.out.clone()) {
            Some(path) => {
                if let Some(parent) = path.parent() {
                    if !parent.as_os_str().is_empty() {
                        std::fs::create_dir_all(parent)
                            .with_context(|| format!("creating {}", parent.display()))?;
                    }
                }
                std::fs::write(&path, text)
                    .with_context(|| format!("writing {}", path.display()))?;
                eprintln!("wrote {}", path.display());
            }
            None => print!("{text}"),
        }
        Ok(())
    }
}

/// Relative output paths land in `SIP_OUT_DIR` when that is set.
fn resolve_out_path(out: Option<PathBuf>) -> Option<PathBuf> {
    let out = out?;
    if out.is_relative() {
        if let Ok(dir) = std::env::var("SIP_OUT_DIR") {
            if !dir.is_empty() {
                return Some(PathBuf::from(dir).join(out));
            }
        }
    }
    Some(out)
}

/// 17 significant digits: enough for a lossless f64 round trip.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

fn render_cell(cell: &Cell) -> String {
    match cell {
        Cell::Empty(_) => String::new(),
        Cell::Int(v) => v.to_string(),
        Cell::Float(v) => fmt17(*v),
        Cell::Text(s) => s.clone(),
    }
}

/// Parses the tables back out of a CSV rendering (metadata lines are
/// skipped); used to verify the round trip.
pub fn parse_csv_tables(text: &str) -> Vec<Table> {
    let mut tables = Vec::new();
    let mut current: Option<Table> = None;
    let mut want_header = false;
    for line in text.lines() {
        if let Some(name) = line.strip_prefix("# table: ") {
            if let Some(t) = current.take() {
                tables.push(t);
            }
            current = Some(Table {
                name: name.to_string(),
                columns: Vec::new(),
                rows: Vec::new(),
            });
            want_header = true;
            continue;
        }
        if line.starts_with('#') || line.is_empty() {
            continue;
        }
        if let Some(table) = current.as_mut() {
            if want_header {
                table.columns = line.split(',').map(str::to_string).collect();
                want_header = false;
            } else {
                let row = line
                    .split(',')
                    .map(|field| {
                        if field.is_empty() {
                            Cell::empty()
                        } else if let Ok(int) = field.parse::<i64>() {
                            Cell::Int(int)
                        } else if let Ok(float) = field.parse::<f64>() {
                            Cell::Float(float)
                        } else {
                            Cell::Text(field.to_string())
                        }
                    })
                    .collect();
                table.rows.push(row);
            }
        }
    }
    if let Some(t) = current.take() {
        tables.push(t);
    }
    tables
}
