//! Result tables with the fixed column set `a, m, t, value, stderr`.
//!
//! Rows with `m >= 1` are concentrations of the class `(a, m)`; mono-disperse
//! models use `a = 0`. Rows with `m = 0` carry scalar statistics:
//!
//! | `a`   | value                                         |
//! |-------|-----------------------------------------------|
//! | `-1`  | fraction of atoms in solution `m_t`           |
//! | `-2`  | truncation leak of an integrator run          |
//! | `-3`  | criticality statistic `sum k (k - 2) pi_t(k)` |
//! | `k>=0`| used-arm law `pi_t(k)`                        |
//!
//! CSV floats use the shortest representation that reads back to the same
//! bits, with `inf` for infinity. JSON is an array of row objects with
//! `null` in place of infinity.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Format, HarnessError};

pub const SOLUTION_MASS: i64 = -1;
pub const TRUNCATION_LEAK: i64 = -2;
pub const CRITICALITY: i64 = -3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub a: i64,
    pub m: u64,
    pub t: f64,
    pub value: f64,
    pub stderr: f64,
}

impl Row {
    pub fn key(&self) -> (i64, u64, u64) {
        (self.a, self.m, self.t.to_bits())
    }

    pub fn is_sentinel(&self) -> bool {
        self.m == 0
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
struct JsonRow {
    a: i64,
    m: u64,
    t: Option<f64>,
    value: Option<f64>,
    stderr: Option<f64>,
}

fn to_json(x: f64) -> Option<f64> {
    (x != f64::INFINITY).then_some(x)
}

fn from_json(x: Option<f64>) -> f64 {
    x.unwrap_or(f64::INFINITY)
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub rows: Vec<Row>,
}

impl Table {
    pub fn push(&mut self, a: i64, m: u64, t: f64, value: f64, stderr: f64) {
        self.rows.push(Row {
            a,
            m,
            t,
            value,
            stderr,
        });
    }

    pub fn get(&self, a: i64, m: u64, t: f64) -> Option<&Row> {
        self.rows.iter().find(|r| r.key() == (a, m, t.to_bits()))
    }

    pub fn filter(&self, keep: impl Fn(&Row) -> bool) -> Table {
        Table {
            rows: self.rows.iter().copied().filter(|r| keep(r)).collect(),
        }
    }

    pub fn to_csv(&self) -> Result<Vec<u8>, HarnessError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        if self.rows.is_empty() {
            w.write_record(["a", "m", "t", "value", "stderr"])?;
        }
        for r in &self.rows {
            w.serialize(r)?;
        }
        w.into_inner().map_err(|e| HarnessError::Table(e.to_string()))
    }

    pub fn to_json(&self) -> Result<Vec<u8>, HarnessError> {
        let rows: Vec<JsonRow> = self
            .rows
            .iter()
            .map(|r| JsonRow {
                a: r.a,
                m: r.m,
                t: to_json(r.t),
                value: to_json(r.value),
                stderr: to_json(r.stderr),
            })
            .collect();
        let mut out = serde_json::to_vec_pretty(&rows)?;
        out.push(b'\n');
        Ok(out)
    }

    pub fn from_csv(bytes: &[u8]) -> Result<Table, HarnessError> {
        let mut r = csv::Reader::from_reader(bytes);
        let header: Vec<String> = r.headers()?.iter().map(str::to_owned).collect();
        if header != ["a", "m", "t", "value", "stderr"] {
            return Err(HarnessError::Table(format!(
                "expected columns a,m,t,value,stderr, got {}",
                header.join(",")
            )));
        }
        let rows = r.deserialize().collect::<Result<Vec<Row>, _>>()?;
        Ok(Table { rows })
    }

    pub fn from_json(bytes: &[u8]) -> Result<Table, HarnessError> {
        let rows: Vec<JsonRow> = serde_json::from_slice(bytes)?;
        Ok(Table {
            rows: rows
                .into_iter()
                .map(|r| Row {
                    a: r.a,
                    m: r.m,
                    t: from_json(r.t),
                    value: from_json(r.value),
                    stderr: from_json(r.stderr),
                })
                .collect(),
        })
    }

    pub fn encode(&self, format: Format) -> Result<Vec<u8>, HarnessError> {
        match format {
            Format::Csv => self.to_csv(),
            Format::Json => self.to_json(),
        }
    }

    /// Reads a table, choosing the format from the extension (`.json`, else CSV).
    pub fn read(path: &Path) -> Result<Table, HarnessError> {
        let bytes = fs::read(path).map_err(|e| HarnessError::io(path, e))?;
        match format_of(path) {
            Format::Json => Self::from_json(&bytes),
            Format::Csv => Self::from_csv(&bytes),
        }
    }

    /// Writes through a temporary file in the target directory, so the
    /// destination either holds the complete table or is left untouched.
    pub fn write(&self, path: &Path, format: Format) -> Result<(), HarnessError> {
        write_atomic(path, &self.encode(format)?)
    }
}

pub fn format_of(path: &Path) -> Format {
    match path.extension().and_then(|e| e.to_str()) {
        Some("json") => Format::Json,
        _ => Format::Csv,
    }
}

pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), HarnessError> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| HarnessError::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| HarnessError::io(path, e))?;
    tmp.persist(path).map_err(|e| HarnessError::io(path, e.error))?;
    Ok(())
}
