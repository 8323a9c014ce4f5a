use std::fs;
use std::io::{self, Write};
use std::path::Path;

use serde_json::{Map, Value};

use crate::config::Format;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
    Flag(bool),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

/// Scientific notation with 12 significant digits.
pub fn sci(v: f64) -> String {
    format!("{v:.11e}")
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Num(v) => sci(*v),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Flag(b) => b.to_string(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Num(v) => {
                sci(*v).parse::<f64>().ok().and_then(serde_json::Number::from_f64).map_or(Value::Null, Value::Number)
            }
            Cell::Int(v) => Value::from(*v),
            Cell::Text(s) => Value::from(s.as_str()),
            Cell::Flag(b) => Value::from(*b),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut s = self.header.join(",");
        s.push('\n');
        for r in &self.rows {
            s.push_str(&r.iter().map(Cell::csv).collect::<Vec<_>>().join(","));
            s.push('\n');
        }
        s
    }

    pub fn row_json(&self, i: usize) -> Value {
        let mut m = Map::new();
        for (k, c) in self.header.iter().zip(&self.rows[i]) {
            m.insert(k.clone(), c.json());
        }
        Value::Object(m)
    }

    pub fn to_json(&self) -> Value {
        Value::Array((0..self.rows.len()).map(|i| self.row_json(i)).collect())
    }
}

/// Rounds a number the way the CSV output does.
pub fn json_num(v: f64) -> Value {
    Cell::Num(v).json()
}

pub fn render(table: &Table, format: Format) -> String {
    match format {
        Format::Csv => table.to_csv(),
        Format::Json => pretty(&table.to_json()),
    }
}

pub fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json serializes");
    s.push('\n');
    s
}

/// Writes `content` to `dir/name`, or to standard output when no directory is set.
pub fn emit(dir: Option<&Path>, name: &str, content: &str) -> io::Result<()> {
    match dir {
        Some(d) => {
            fs::create_dir_all(d)?;
            fs::write(d.join(name), content)
        }
        None => {
            let mut out = io::stdout().lock();
            out.write_all(content.as_bytes())?;
            out.flush()
        }
    }
}
