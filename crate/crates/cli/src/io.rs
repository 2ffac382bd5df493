use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use liplab::counterexample::Budget;
use liplab::rational::{format_rational, parse_rational, to_decimal};
use liplab::{Interval, IntervalSet, PiecewiseLinear, Rational};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] liplab::Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {message}")]
    Json { path: PathBuf, message: String },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(liplab::Error::Budget(_)) => 3,
            _ => 2,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// Reads a JSON value of type `T`, or the first of the wrapper keys
/// `function`, `result`, `set` holding one.
pub fn read_json<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Io { path: path.into(), source })?;
    let v: Value =
        serde_json::from_str(&text).map_err(|e| CliError::Json { path: path.into(), message: e.to_string() })?;
    let direct = serde_json::from_value::<T>(v.clone());
    let err = match direct {
        Ok(t) => return Ok(t),
        Err(e) => e,
    };
    for key in ["function", "result", "set"] {
        if let Some(inner) = v.get(key) {
            if let Ok(t) = serde_json::from_value::<T>(inner.clone()) {
                return Ok(t);
            }
        }
    }
    Err(CliError::Json { path: path.into(), message: err.to_string() })
}

pub fn read_set(path: &Path) -> CliResult<IntervalSet> {
    read_json(path)
}

pub fn read_function(path: &Path) -> CliResult<PiecewiseLinear> {
    read_json(path)
}

pub fn parse_window(s: &str) -> CliResult<Interval> {
    let (a, b) = s.split_once(',').ok_or_else(|| CliError::Usage(format!("window must be lo,hi: {s:?}")))?;
    Ok(Interval::new(parse_rational(a)?, parse_rational(b)?)?)
}

pub fn parse_rat(s: &str) -> CliResult<Rational> {
    Ok(parse_rational(s)?)
}

/// `start,factor,count`.
pub fn parse_grid(s: &str) -> CliResult<Vec<Rational>> {
    let parts: Vec<&str> = s.split(',').collect();
    let [start, factor, count] = parts.as_slice() else {
        return Err(CliError::Usage(format!("r-grid must be start,factor,count: {s:?}")));
    };
    let count: usize = count.trim().parse().map_err(|_| CliError::Usage(format!("bad count in r-grid {s:?}")))?;
    Ok(liplab::density::geometric_grid(&parse_rational(start)?, &parse_rational(factor)?, count)?)
}

pub fn budget_from_env() -> CliResult<Budget> {
    let mut b = Budget::default();
    for (key, slot) in [("LIPLAB_MAX_BLOCKS", &mut b.max_blocks), ("LIPLAB_MAX_PAIRS", &mut b.max_pairs)] {
        if let Ok(v) = std::env::var(key) {
            *slot = v.trim().parse().map_err(|_| CliError::Usage(format!("{key} must be an integer, got {v:?}")))?;
        }
    }
    Ok(b)
}

pub fn emit_json<T: Serialize>(value: &T, out: Option<&Path>) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).expect("reports serialize");
    text.push('\n');
    match out {
        Some(p) => fs::write(p, text).map_err(|source| CliError::Io { path: p.into(), source }),
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            lock.write_all(text.as_bytes()).map_err(|source| CliError::Io { path: "<stdout>".into(), source })
        }
    }
}

/// A CSV table whose rational columns also get a decimal rendering.
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

pub enum Cell {
    Text(String),
    Exact(Rational),
}

impl Table {
    pub fn new(cols: &[&str]) -> Self {
        Table { header: cols.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        self.rows.push(row);
    }

    pub fn write(&self, path: &Path, precision: usize) -> CliResult<()> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_path(path)?;
        let mut head = Vec::new();
        for (i, h) in self.header.iter().enumerate() {
            head.push(h.clone());
            if self.rows.first().is_some_and(|r| matches!(r[i], Cell::Exact(_))) {
                head.push(format!("{h}_decimal"));
            }
        }
        w.write_record(&head)?;
        for r in &self.rows {
            let mut rec = Vec::new();
            for c in r {
                match c {
                    Cell::Text(t) => rec.push(t.clone()),
                    Cell::Exact(x) => {
                        rec.push(format_rational(x));
                        rec.push(to_decimal(x, precision));
                    }
                }
            }
            w.write_record(&rec)?;
        }
        w.flush().map_err(|source| CliError::Io { path: path.into(), source })
    }
}

pub fn set_table(s: &IntervalSet) -> Table {
    let mut t = Table::new(&["lo", "hi"]);
    for iv in s.intervals() {
        t.push(vec![Cell::Exact(iv.lo().clone()), Cell::Exact(iv.hi().clone())]);
    }
    t
}

pub fn function_table(f: &PiecewiseLinear) -> Table {
    let mut t = Table::new(&["x", "y"]);
    for (x, y) in f.breakpoints().iter().zip(f.values()) {
        t.push(vec![Cell::Exact(x.clone()), Cell::Exact(y.clone())]);
    }
    t
}
