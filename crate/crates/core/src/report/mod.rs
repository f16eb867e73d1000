//! Typed result tables with provenance, emitted as CSV or JSON, and SVG
//! figures.

mod svg;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};
use thiserror::Error;

pub use svg::{
    parse_alignment, reconstruct_target_tokens, render_distribution, render_progression_graph, AuColors,
    DistributionKind, DistributionSeries, GraphInput, GraphSpec, Layers, RenderError,
};

pub const DEFAULT_PRECISION: usize = 6;

#[derive(Debug, Error, PartialEq)]
pub enum ReportError {
    #[error("table `{table}`: row {row} has {got} cells, schema has {expected}")]
    RowWidth { table: String, row: usize, expected: usize, got: usize },
    #[error("table `{table}`: row {row}, column `{column}` does not match its {kind} type")]
    KindMismatch { table: String, row: usize, column: String, kind: ColumnKind },
    #[error("table `{0}` has no provenance")]
    NoProvenance(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnKind {
    Text,
    Int,
    Float,
    Bool,
}

impl fmt::Display for ColumnKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ColumnKind::Text => "text",
            ColumnKind::Int => "int",
            ColumnKind::Float => "float",
            ColumnKind::Bool => "bool",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    pub kind: ColumnKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub unit: Option<String>,
    /// Significant digits for this column, overriding the emitter default.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub precision: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Cell {
    Text(String),
    Int(i64),
    Float(f64),
    Bool(bool),
    Null,
}

impl Cell {
    fn fits(&self, kind: ColumnKind) -> bool {
        matches!(
            (self, kind),
            (Cell::Null, _)
                | (Cell::Text(_), ColumnKind::Text)
                | (Cell::Int(_), ColumnKind::Int)
                | (Cell::Float(_), ColumnKind::Float)
                | (Cell::Bool(_), ColumnKind::Bool)
        )
    }

    pub fn as_f64(&self) -> Option<f64> {
        match *self {
            Cell::Int(v) => Some(v as f64),
            Cell::Float(v) => Some(v),
            _ => None,
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            Cell::Text(s) => Some(s),
            _ => None,
        }
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

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        if v.is_nan() { Cell::Null } else { Cell::Float(v) }
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<i64> for Cell {
    fn from(v: i64) -> Self {
        Cell::Int(v)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(v: Option<T>) -> Self {
        v.map_or(Cell::Null, Into::into)
    }
}

/// What produced a table, with enough detail to produce it again.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub operation: String,
    pub parameters: BTreeMap<String, String>,
    /// SHA-256 digests of the input sessions, sorted.
    pub input_digests: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportTable {
    pub name: String,
    pub columns: Vec<Column>,
    pub rows: Vec<Vec<Cell>>,
    pub provenance: Provenance,
}

impl ReportTable {
    pub fn new(name: &str, operation: &str) -> Self {
        ReportTable {
            name: name.to_string(),
            columns: Vec::new(),
            rows: Vec::new(),
            provenance: Provenance { operation: operation.to_string(), ..Provenance::default() },
        }
    }

    pub fn column(mut self, name: &str, kind: ColumnKind, unit: Option<&str>) -> Self {
        self.columns.push(Column { name: name.to_string(), kind, unit: unit.map(str::to_string), precision: None });
        self
    }

    pub fn text(self, name: &str) -> Self {
        self.column(name, ColumnKind::Text, None)
    }

    pub fn int(self, name: &str, unit: Option<&str>) -> Self {
        self.column(name, ColumnKind::Int, unit)
    }

    pub fn float(self, name: &str, unit: Option<&str>) -> Self {
        self.column(name, ColumnKind::Float, unit)
    }

    pub fn boolean(self, name: &str) -> Self {
        self.column(name, ColumnKind::Bool, None)
    }

    pub fn param(mut self, key: &str, value: impl ToString) -> Self {
        self.provenance.parameters.insert(key.to_string(), value.to_string());
        self
    }

    pub fn with_inputs<I: IntoIterator<Item = String>>(mut self, digests: I) -> Self {
        self.provenance.input_digests.extend(digests);
        self.provenance.input_digests.sort();
        self.provenance.input_digests.dedup();
        self
    }

    /// Appends a row; panics in debug builds if it does not fit the schema.
    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len(), "row width for table {}", self.name);
        self.rows.push(row);
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    /// Cell by row index and column name.
    pub fn get(&self, row: usize, column: &str) -> Option<&Cell> {
        self.rows.get(row)?.get(self.column_index(column)?)
    }

    pub fn validate(&self) -> Result<(), ReportError> {
        if self.provenance.operation.is_empty() {
            return Err(ReportError::NoProvenance(self.name.clone()));
        }
        for (r, row) in self.rows.iter().enumerate() {
            if row.len() != self.columns.len() {
                return Err(ReportError::RowWidth {
                    table: self.name.clone(),
                    row: r,
                    expected: self.columns.len(),
                    got: row.len(),
                });
            }
            for (cell, col) in row.iter().zip(&self.columns) {
                if !cell.fits(col.kind) {
                    return Err(ReportError::KindMismatch {
                        table: self.name.clone(),
                        row: r,
                        column: col.name.clone(),
                        kind: col.kind,
                    });
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
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

/// Formats `x` rounded to `digits` significant digits, in plain decimal
/// notation with trailing zeros removed.
pub fn format_sig(x: f64, digits: usize) -> String {
    if x.is_nan() {
        return "NaN".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let digits = digits.max(1);
    let sci = format!("{:.*e}", digits - 1, x.abs());
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    let mut body: String = mantissa.chars().filter(|c| *c != '.').collect();
    while body.len() > 1 && body.ends_with('0') {
        body.pop();
    }
    let mut out = String::new();
    if x < 0.0 {
        out.push('-');
    }
    if exp >= 0 {
        let int_len = exp as usize + 1;
        if body.len() <= int_len {
            out.push_str(&body);
            out.extend(std::iter::repeat_n('0', int_len - body.len()));
        } else {
            out.push_str(&body[..int_len]);
            out.push('.');
            out.push_str(&body[int_len..]);
        }
    } else {
        out.push_str("0.");
        out.extend(std::iter::repeat_n('0', (-exp - 1) as usize));
        out.push_str(&body);
    }
    out
}

fn cell_text(cell: &Cell, digits: usize) -> String {
    match cell {
        Cell::Text(s) => s.clone(),
        Cell::Int(v) => v.to_string(),
        Cell::Float(v) => format_sig(*v, digits),
        Cell::Bool(b) => b.to_string(),
        Cell::Null => String::new(),
    }
}

fn cell_json(cell: &Cell, digits: usize) -> Value {
    match cell {
        Cell::Text(s) => Value::String(s.clone()),
        Cell::Int(v) => json!(v),
        Cell::Float(v) => format_sig(*v, digits)
            .parse::<f64>()
            .ok()
            .and_then(serde_json::Number::from_f64)
            .map_or(Value::Null, Value::Number),
        Cell::Bool(b) => Value::Bool(*b),
        Cell::Null => Value::Null,
    }
}

/// Serializes a table. Output depends only on the table and `precision`.
pub fn emit_table(table: &ReportTable, format: Format, precision: usize) -> Vec<u8> {
    let digits = |c: &Column| c.precision.unwrap_or(precision);
    match format {
        Format::Csv => {
            let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
            w.write_record(table.columns.iter().map(|c| c.name.as_str())).expect("write to memory");
            for row in &table.rows {
                w.write_record(row.iter().zip(&table.columns).map(|(cell, col)| cell_text(cell, digits(col))))
                    .expect("write to memory");
            }
            w.into_inner().expect("flush to memory")
        }
        Format::Json => {
            let rows: Vec<Value> = table
                .rows
                .iter()
                .map(|row| {
                    let mut obj = Map::new();
                    for (cell, col) in row.iter().zip(&table.columns) {
                        obj.insert(col.name.clone(), cell_json(cell, digits(col)));
                    }
                    Value::Object(obj)
                })
                .collect();
            let doc = json!({
                "name": table.name,
                "columns": table.columns,
                "rows": rows,
                "provenance": table.provenance,
            });
            let mut out = serde_json::to_vec_pretty(&doc).expect("serializable");
            out.push(b'\n');
            out
        }
    }
}
