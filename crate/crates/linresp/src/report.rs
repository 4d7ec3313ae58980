//! JSON reports and CSV tables.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use linresp_core::spectral::SpectralReport;
use serde_json::{json, Value};

/// A table written as comma-separated values with a header row.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

/// Shortest form that keeps 17 significant digits, so values round-trip.
pub fn format_number(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v:.16e}")
    }
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Table { columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn write_to(&self, mut w: impl Write) -> io::Result<()> {
        writeln!(w, "{}", self.columns.join(","))?;
        for r in &self.rows {
            let line: Vec<String> = r.iter().map(|v| format_number(*v)).collect();
            writeln!(w, "{}", line.join(","))?;
        }
        Ok(())
    }
}

/// Everything a command produces.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub report: Value,
    pub tables: Vec<(String, Table)>,
    /// Set when the run detected a violated hypothesis; the report is still
    /// written.
    pub hypothesis_violation: Option<String>,
}

impl Outcome {
    pub fn new(report: Value) -> Self {
        Outcome { report, tables: Vec::new(), hypothesis_violation: None }
    }

    pub fn table(mut self, name: &str, t: Table) -> Self {
        self.tables.push((name.to_string(), t));
        self
    }

    /// Writes `<stem>.json` and one CSV per table into `dir`; returns the
    /// paths written.
    pub fn write(&self, dir: &Path, stem: &str) -> io::Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        let path = dir.join(format!("{stem}.json"));
        let mut text = serde_json::to_string_pretty(&self.report).map_err(io::Error::other)?;
        text.push('\n');
        fs::write(&path, text)?;
        written.push(path);
        for (name, t) in &self.tables {
            let path = dir.join(format!("{name}.csv"));
            let mut buf = Vec::new();
            t.write_to(&mut buf)?;
            fs::write(&path, buf)?;
            written.push(path);
        }
        Ok(written)
    }
}

/// JSON numbers cannot hold NaN or infinities; those become strings.
pub fn num(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else {
        json!(format_number(v))
    }
}

pub fn spectral(s: &SpectralReport) -> Value {
    json!({
        "eigenvalue_1": num(s.eigenvalue_1),
        "second_modulus": num(s.second_modulus),
        "gap": num(s.gap),
        "iterations": s.iterations,
        "dense_check": s.dense_check.map(|d| json!({
            "eigenvalue_1": num(d.eigenvalue_1),
            "second_modulus": num(d.second_modulus),
        })),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn csv_numbers_round_trip(v in any::<f64>().prop_filter("finite", |v| v.is_finite())) {
            let s = format_number(v);
            prop_assert_eq!(s.parse::<f64>().unwrap().to_bits(), v.to_bits());
            let mantissa = s.split('e').next().unwrap().trim_start_matches('-');
            prop_assert_eq!(mantissa.chars().filter(|c| c.is_ascii_digit()).count(), 17);
        }
    }

    #[test]
    fn table_has_header_row() {
        let mut t = Table::new(&["x", "h"]);
        t.push(vec![0.5, 1.0]);
        let mut buf = Vec::new();
        t.write_to(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "x,h\n5.0000000000000000e-1,1.0000000000000000e0\n");
    }
}
