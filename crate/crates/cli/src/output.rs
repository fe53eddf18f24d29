//! Tabular artifacts and their CSV and JSON encodings.
//!
//! Numbers are written in scientific notation with 17 significant digits,
//! which round-trips every `f64`. Missing values are empty CSV fields and
//! JSON `null`.

use std::io::{self, Write};

use serde::ser::{SerializeMap, SerializeSeq};
use serde::{Serialize, Serializer};
use serde_json::value::RawValue;

use crate::config::{OutputFormat, RunConfig};

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
    Bool(bool),
    Missing,
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Missing, Cell::Num)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<u32> for Cell {
    fn from(v: u32) -> Self {
        Cell::Int(v.into())
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

/// Negative zero prints as positive zero, so equal values print identically.
pub fn format_number(v: f64) -> String {
    let v = if v == 0.0 { 0.0 } else { v };
    format!("{v:.16e}")
}

impl Cell {
    fn csv_field(&self) -> String {
        match self {
            Cell::Num(v) if v.is_finite() => format_number(*v),
            Cell::Num(_) | Cell::Missing => String::new(),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Bool(b) => b.to_string(),
        }
    }
}

impl Serialize for Cell {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Cell::Num(v) if v.is_finite() => RawValue::from_string(format_number(*v))
                .map_err(serde::ser::Error::custom)?
                .serialize(s),
            Cell::Num(_) | Cell::Missing => s.serialize_none(),
            Cell::Int(v) => s.serialize_i64(*v),
            Cell::Text(t) => s.serialize_str(t),
            Cell::Bool(b) => s.serialize_bool(*b),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&'static str]) -> Self {
        Self {
            columns: columns.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

/// Provenance written ahead of the data.
#[derive(Debug, Clone)]
pub struct Meta<'a> {
    pub command: &'a str,
    pub version: &'a str,
    pub seed: u64,
    pub config: &'a RunConfig,
}

pub fn write_table<W: Write>(out: W, table: &Table, meta: &Meta<'_>, format: OutputFormat) -> io::Result<()> {
    match format {
        OutputFormat::Csv => write_csv(out, table, meta),
        OutputFormat::Json => write_json(out, table, meta),
    }
}

/// Config echo as `# key = value` lines, then a header and the rows.
pub fn write_csv<W: Write>(mut out: W, table: &Table, meta: &Meta<'_>) -> io::Result<()> {
    writeln!(out, "# command = {}", meta.command)?;
    writeln!(out, "# version = {}", meta.version)?;
    writeln!(out, "# seed = {}", meta.seed)?;
    for (k, v) in meta.config.echo() {
        writeln!(out, "# {k} = {v}")?;
    }
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(&table.columns)?;
    for row in &table.rows {
        w.write_record(row.iter().map(Cell::csv_field))?;
    }
    w.flush()
}

struct ConfigEcho<'a>(&'a RunConfig);

impl Serialize for ConfigEcho<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let echo = self.0.echo();
        let mut m = s.serialize_map(Some(echo.len()))?;
        for (k, v) in echo {
            match v.parse::<f64>() {
                Ok(x) => m.serialize_entry(k, &Cell::Num(x))?,
                Err(_) => m.serialize_entry(k, &v)?,
            }
        }
        m.end()
    }
}

struct MetaJson<'a>(&'a Meta<'a>);

impl Serialize for MetaJson<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut m = s.serialize_map(Some(4))?;
        m.serialize_entry("command", self.0.command)?;
        m.serialize_entry("version", self.0.version)?;
        m.serialize_entry("seed", &self.0.seed)?;
        m.serialize_entry("config", &ConfigEcho(self.0.config))?;
        m.end()
    }
}

struct Row<'a>(&'a [&'static str], &'a [Cell]);

impl Serialize for Row<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut m = s.serialize_map(Some(self.0.len()))?;
        for (k, v) in self.0.iter().zip(self.1) {
            m.serialize_entry(k, v)?;
        }
        m.end()
    }
}

struct Rows<'a>(&'a Table);

impl Serialize for Rows<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(self.0.rows.len()))?;
        for r in &self.0.rows {
            seq.serialize_element(&Row(&self.0.columns, r))?;
        }
        seq.end()
    }
}

struct Document<'a>(&'a Table, &'a Meta<'a>);

impl Serialize for Document<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut m = s.serialize_map(Some(2))?;
        m.serialize_entry("meta", &MetaJson(self.1))?;
        m.serialize_entry("rows", &Rows(self.0))?;
        m.end()
    }
}

/// `{"meta": {...}, "rows": [{column: value, ...}, ...]}`.
pub fn write_json<W: Write>(mut out: W, table: &Table, meta: &Meta<'_>) -> io::Result<()> {
    serde_json::to_writer_pretty(&mut out, &Document(table, meta))?;
    writeln!(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn meta(cfg: &RunConfig) -> Meta<'_> {
        Meta {
            command: "test",
            version: "0.0.0",
            seed: 9,
            config: cfg,
        }
    }

    #[test]
    fn empty_table_is_header_only() {
        let cfg = RunConfig::default();
        let mut buf = Vec::new();
        write_csv(&mut buf, &Table::new(&["a", "b"]), &meta(&cfg)).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let data: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(data, ["a,b"]);
        assert!(text.contains("# seed = 9\n"));
        assert!(text.contains("# crystal.thickness_m = 0.004\n"));
    }

    #[test]
    fn numbers_have_seventeen_digits() {
        assert_eq!(format_number(0.1), "1.0000000000000001e-1");
        assert_eq!(format_number(-0.375), "-3.7500000000000000e-1");
        assert_eq!(format_number(-0.0), "0.0000000000000000e0");
        for v in [core::f64::consts::PI, 1.68e-4, -7.123456789012345e-300] {
            assert_eq!(format_number(v).parse::<f64>().unwrap(), v);
        }
    }

    #[test]
    fn json_layout() {
        let cfg = RunConfig::default();
        let mut t = Table::new(&["x", "label", "gap"]);
        t.push(vec![0.25.into(), "wva".into(), Cell::Missing]);
        let mut buf = Vec::new();
        write_json(&mut buf, &t, &meta(&cfg)).unwrap();
        let v: serde_json::Value = serde_json::from_slice(&buf).unwrap();
        assert_eq!(v["meta"]["seed"], 9);
        assert_eq!(v["meta"]["config"]["selection.regime"], "coherency");
        assert_eq!(v["meta"]["config"]["beam.sigma_m"], 1.68e-4);
        assert_eq!(v["rows"][0]["x"], 0.25);
        assert_eq!(v["rows"][0]["label"], "wva");
        assert!(v["rows"][0]["gap"].is_null());
        let text = String::from_utf8(buf).unwrap();
        assert!(text.contains("2.5000000000000000e-1"));
    }
}
