//! Tabular output with fixed float formatting.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::Serialize;

use super::config::OutputFormat;
use crate::{Error, Result};

/// Significant digits of every float written to a table.
pub const SIGNIFICANT_DIGITS: usize = 12;

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Cell {
    Float(f64),
    Int(i64),
    Text(String),
    Bool(bool),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

/// Rows under a fixed header.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Self {
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) -> Result<()> {
        if row.len() != self.header.len() {
            return Err(Error::shape(self.header.len(), row.len()));
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

/// Shortest of fixed or scientific notation at 12 significant digits, with
/// trailing zeros removed.
pub fn format_float(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x);
    let (mantissa, exponent) = sci.split_once('e').expect("scientific format has an exponent");
    let exponent: i32 = exponent.parse().expect("integer exponent");
    if (-5..SIGNIFICANT_DIGITS as i32).contains(&exponent) {
        let decimals = (SIGNIFICANT_DIGITS as i32 - 1 - exponent).max(0) as usize;
        trim_zeros(format!("{x:.decimals$}"))
    } else {
        format!("{}e{exponent}", trim_zeros(mantissa.to_string()))
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

fn cell_text(cell: &Cell) -> String {
    match cell {
        Cell::Float(x) => format_float(*x),
        Cell::Int(i) => i.to_string(),
        Cell::Text(s) => s.clone(),
        Cell::Bool(b) => b.to_string(),
    }
}

fn cell_json(cell: &Cell) -> String {
    match cell {
        Cell::Float(x) if x.is_finite() => format_float(*x),
        Cell::Float(_) => "null".into(),
        Cell::Text(s) => serde_json::to_string(s).expect("strings serialize"),
        other => cell_text(other),
    }
}

/// Renders `table` in `format`.
pub fn render_table(table: &Table, format: OutputFormat) -> Result<Vec<u8>> {
    match format {
        OutputFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            let io = |e: csv::Error| Error::Io {
                path: "<memory>".into(),
                source: std::io::Error::other(e),
            };
            w.write_record(&table.header).map_err(io)?;
            for row in &table.rows {
                w.write_record(row.iter().map(cell_text)).map_err(io)?;
            }
            w.into_inner().map_err(|e| Error::Io {
                path: "<memory>".into(),
                source: std::io::Error::other(e.to_string()),
            })
        }
        OutputFormat::Jsonl => {
            let mut out = Vec::new();
            for row in &table.rows {
                let fields: Vec<String> = table
                    .header
                    .iter()
                    .zip(row)
                    .map(|(k, v)| format!("{}:{}", serde_json::to_string(k).expect("keys serialize"), cell_json(v)))
                    .collect();
                writeln!(out, "{{{}}}", fields.join(",")).expect("writing to memory");
            }
            Ok(out)
        }
    }
}

/// Writes `table` to `path`, creating parent directories.
pub fn emit_table(table: &Table, path: &Path, format: OutputFormat) -> Result<()> {
    let bytes = render_table(table, format)?;
    let io = |source| Error::Io {
        path: path.display().to_string(),
        source,
    };
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(io)?;
    }
    fs::write(path, bytes).map_err(io)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_formatting() {
        let cases = [
            (0.0, "0"),
            (1.0, "1"),
            (-10.0, "-10"),
            (0.1, "0.1"),
            (1.0 / 3.0, "0.333333333333"),
            (2.0 / 3.0 * 1e6, "666666.666667"),
            (123456789012345.0, "1.23456789012e14"),
            (1.5e-7, "1.5e-7"),
            (-2.5e-5, "-0.000025"),
            (f64::NAN, "nan"),
            (f64::NEG_INFINITY, "-inf"),
        ];
        for (x, s) in cases {
            assert_eq!(format_float(x), s, "{x:e}");
        }
    }

    #[test]
    fn formatting_keeps_twelve_digits() {
        for &x in &[std::f64::consts::PI, -1.23456789e-3, 9.87654321e20, 7.000000000004] {
            let back: f64 = format_float(x).parse().unwrap();
            assert!(((back - x) / x).abs() < 1e-11, "{x} -> {}", format_float(x));
        }
    }

    #[test]
    fn empty_table_is_header_only() {
        let t = Table::new(&["delta2", "G2"]);
        assert_eq!(render_table(&t, OutputFormat::Csv).unwrap(), b"delta2,G2\n");
        assert!(render_table(&t, OutputFormat::Jsonl).unwrap().is_empty());
    }

    #[test]
    fn rows_render_in_both_formats() {
        let mut t = Table::new(&["x", "label", "flagged", "i"]);
        t.push(vec![0.5.into(), "bc+".into(), false.into(), 3usize.into()]).unwrap();
        t.push(vec![f64::NAN.into(), "a,\"b\"".into(), true.into(), 4usize.into()]).unwrap();
        let csv = String::from_utf8(render_table(&t, OutputFormat::Csv).unwrap()).unwrap();
        assert_eq!(csv, "x,label,flagged,i\n0.5,bc+,false,3\nnan,\"a,\"\"b\"\"\",true,4\n");
        let jsonl = String::from_utf8(render_table(&t, OutputFormat::Jsonl).unwrap()).unwrap();
        let first: serde_json::Value = serde_json::from_str(jsonl.lines().next().unwrap()).unwrap();
        assert_eq!(first["label"], "bc+");
        let second: serde_json::Value = serde_json::from_str(jsonl.lines().nth(1).unwrap()).unwrap();
        assert!(second["x"].is_null());
        assert!(t.push(vec![1.0.into()]).is_err());
    }

    #[test]
    fn emit_reports_path_on_failure() {
        let t = Table::new(&["a"]);
        let err = emit_table(&t, Path::new("/proc/definitely/not/here.csv"), OutputFormat::Csv).unwrap_err();
        assert!(err.to_string().contains("/proc/definitely"));
    }
}
