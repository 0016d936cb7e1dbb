//! Result files for external plotting: CSV or JSON, always headed by the
//! configuration that produced them.

use std::io::Write;
use std::path::Path;

use serde_json::{json, Map, Value};

use crate::config::{OutputFormat, RunConfig};
use crate::error::{Error, Result};

/// One table cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
    Null,
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            // 17 significant digits; Rust formatting ignores the locale.
            Cell::Num(x) if x.is_finite() => format!("{x:.16e}"),
            Cell::Num(x) => format!("{x}"),
            Cell::Int(i) => i.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Null => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Num(x) => serde_json::Number::from_f64(*x).map_or(Value::Null, Value::Number),
            Cell::Int(i) => json!(i),
            Cell::Text(s) => json!(s),
            Cell::Null => Value::Null,
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<usize> for Cell {
    fn from(i: usize) -> Self {
        Cell::Int(i as i64)
    }
}

impl From<u32> for Cell {
    fn from(i: u32) -> Self {
        Cell::Int(i as i64)
    }
}

impl From<bool> for Cell {
    fn from(b: bool) -> Self {
        Cell::Text(b.to_string())
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Text(s)
    }
}

impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(v: Option<T>) -> Self {
        v.map_or(Cell::Null, Into::into)
    }
}

/// A command's result: named scalars plus one rectangular table.
#[derive(Debug, Clone)]
pub struct Document {
    pub command: String,
    pub args: Vec<(String, String)>,
    pub scalars: Vec<(String, Cell)>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Document {
    pub fn new(command: &str, args: Vec<(String, String)>) -> Self {
        Self {
            command: command.to_string(),
            args,
            scalars: Vec::new(),
            columns: Vec::new(),
            rows: Vec::new(),
        }
    }

    pub fn scalar(&mut self, name: &str, value: impl Into<Cell>) {
        self.scalars.push((name.to_string(), value.into()));
    }

    pub fn columns(&mut self, names: &[&str]) {
        self.columns = names.iter().map(|s| s.to_string()).collect();
    }

    pub fn row(&mut self, cells: Vec<Cell>) {
        debug_assert_eq!(cells.len(), self.columns.len());
        self.rows.push(cells);
    }

    fn header(&self, config: &RunConfig) -> String {
        let mut s = String::from("#! [run]\n");
        s += &format!("#! command = {:?}\n", self.command);
        for (k, v) in &self.args {
            s += &format!("#! {k} = {v:?}\n");
        }
        for line in config.to_ini().lines() {
            s += &format!("#! {line}\n");
        }
        s
    }

    pub fn to_csv(&self, config: &RunConfig) -> Result<String> {
        let mut out = self.header(config);
        for (k, v) in &self.scalars {
            out += &format!("# {k} = {}\n", v.csv());
        }
        if !self.columns.is_empty() {
            let mut w = csv::Writer::from_writer(Vec::new());
            let io = |e: csv::Error| Error::Io(e.to_string());
            w.write_record(&self.columns).map_err(io)?;
            for r in &self.rows {
                w.write_record(r.iter().map(Cell::csv)).map_err(io)?;
            }
            let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
            out += &String::from_utf8_lossy(&bytes);
        }
        Ok(out)
    }

    pub fn to_json(&self, config: &RunConfig) -> Value {
        let scalars: Map<String, Value> =
            self.scalars.iter().map(|(k, v)| (k.clone(), v.json())).collect();
        let args: Map<String, Value> = self.args.iter().map(|(k, v)| (k.clone(), json!(v))).collect();
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|r| Value::Array(r.iter().map(Cell::json).collect()))
            .collect();
        json!({
            "command": self.command,
            "args": args,
            "config": config,
            "config_text": config.to_ini(),
            "scalars": scalars,
            "columns": self.columns,
            "rows": rows,
        })
    }

    pub fn render(&self, config: &RunConfig) -> Result<String> {
        match config.format {
            OutputFormat::Csv => self.to_csv(config),
            OutputFormat::Json => serde_json::to_string_pretty(&self.to_json(config))
                .map(|s| s + "\n")
                .map_err(|e| Error::Io(e.to_string())),
        }
    }

    /// Writes to `config.path`, or standard output when unset.
    pub fn write(&self, config: &RunConfig) -> Result<()> {
        let text = self.render(config)?;
        match &config.path {
            Some(p) => write_file(p, &text),
            None => {
                let mut out = std::io::stdout().lock();
                out.write_all(text.as_bytes())
                    .map_err(|e| Error::Io(e.to_string()))
            }
        }
    }
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}
