use std::collections::BTreeMap;

use serde::Serialize;

use super::table::{Row, Table, TRUNCATION_LEAK};
use super::HarnessError;

/// Rows whose |z| exceeds this are flagged.
pub const Z_FLAG: f64 = 3.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub a: i64,
    pub m: u64,
    pub t: f64,
    pub reference: f64,
    pub estimate: f64,
    pub stderr: f64,
    /// `None` when the standard error vanishes but the values differ.
    pub z: Option<f64>,
}

impl ComparisonRow {
    pub fn flagged(&self) -> bool {
        self.z.is_none_or(|z| z.abs() > Z_FLAG)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub rows: Vec<ComparisonRow>,
    pub max_abs_z: f64,
    pub sup_gap: f64,
    /// Largest truncation leak recorded in either table.
    pub truncation_leak: Option<f64>,
}

impl ComparisonReport {
    pub fn flagged(&self) -> impl Iterator<Item = &ComparisonRow> {
        self.rows.iter().filter(|r| r.flagged())
    }

    pub fn passes(&self) -> bool {
        self.flagged().next().is_none()
    }
}

/// Row-wise comparison over the shared keys `(a, m, t)`. The standard error
/// combines both tables' errors in quadrature. Leak rows are reported in the
/// summary rather than compared.
pub fn compare(reference: &Table, estimate: &Table) -> Result<ComparisonReport, HarnessError> {
    let leak = reference
        .rows
        .iter()
        .chain(&estimate.rows)
        .filter(|r| r.m == 0 && r.a == TRUNCATION_LEAK)
        .map(|r| r.value)
        .reduce(f64::max);
    let keyed = |t: &Table| -> BTreeMap<_, Row> {
        t.rows
            .iter()
            .filter(|r| !(r.m == 0 && r.a == TRUNCATION_LEAK))
            .map(|r| (r.key(), *r))
            .collect()
    };
    let est = keyed(estimate);
    let mut rows = Vec::new();
    for r in reference.rows.iter().filter(|r| !(r.m == 0 && r.a == TRUNCATION_LEAK)) {
        let Some(e) = est.get(&r.key()) else { continue };
        let stderr = r.stderr.hypot(e.stderr);
        let gap = e.value - r.value;
        let z = if gap == 0.0 {
            Some(0.0)
        } else if stderr > 0.0 {
            Some(gap / stderr)
        } else {
            None
        };
        rows.push(ComparisonRow {
            a: r.a,
            m: r.m,
            t: r.t,
            reference: r.value,
            estimate: e.value,
            stderr,
            z,
        });
    }
    if rows.is_empty() {
        return Err(HarnessError::DisjointKeys);
    }
    let max_abs_z = rows
        .iter()
        .map(|r| r.z.map_or(f64::INFINITY, f64::abs))
        .fold(0.0, f64::max);
    let sup_gap = rows
        .iter()
        .map(|r| (r.estimate - r.reference).abs())
        .fold(0.0, f64::max);
    Ok(ComparisonReport {
        rows,
        max_abs_z,
        sup_gap,
        truncation_leak: leak,
    })
}
