//! Result tables and their CSV / JSON encodings.
//!
//! Floats are written in Rust's shortest round-trip form, so identical
//! results always produce identical bytes.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::ser::{Serialize, SerializeStruct, Serializer};

use super::config::Format;

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Num(f64),
    Int(u64),
    Text(String),
    Bool(bool),
}

impl Value {
    fn to_csv_field(&self) -> String {
        match self {
            Value::Num(x) => format!("{x:?}"),
            Value::Int(i) => i.to_string(),
            Value::Text(s) => s.clone(),
            Value::Bool(b) => b.to_string(),
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Value::Num(x) => Some(*x),
            Value::Int(i) => Some(*i as f64),
            _ => None,
        }
    }
}

impl From<f64> for Value {
    fn from(x: f64) -> Self {
        Value::Num(x)
    }
}

impl From<usize> for Value {
    fn from(i: usize) -> Self {
        Value::Int(i as u64)
    }
}

impl From<u64> for Value {
    fn from(i: u64) -> Self {
        Value::Int(i)
    }
}

impl From<bool> for Value {
    fn from(b: bool) -> Self {
        Value::Bool(b)
    }
}

impl From<&str> for Value {
    fn from(s: &str) -> Self {
        Value::Text(s.to_string())
    }
}

impl Serialize for Value {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Value::Num(x) => s.serialize_f64(*x),
            Value::Int(i) => s.serialize_u64(*i),
            Value::Text(t) => s.serialize_str(t),
            Value::Bool(b) => s.serialize_bool(*b),
        }
    }
}

/// A named table with a fixed column set.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Self {
            name: name.to_string(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Value>) {
        assert_eq!(row.len(), self.columns.len(), "row width for table {}", self.name);
        self.rows.push(row);
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// Numeric column by name; `None` if missing or non-numeric.
    pub fn numbers(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.column_index(name)?;
        self.rows.iter().map(|r| r[i].as_f64()).collect()
    }

    pub fn write_csv<W: Write>(&self, w: W) -> csv::Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(&self.columns)?;
        for row in &self.rows {
            out.write_record(row.iter().map(Value::to_csv_field))?;
        }
        out.flush()?;
        Ok(())
    }
}

impl Serialize for Table {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("Table", 3)?;
        st.serialize_field("name", &self.name)?;
        st.serialize_field("columns", &self.columns)?;
        st.serialize_field("rows", &self.rows)?;
        st.end()
    }
}

/// Everything one run produces. The first table is the primary result.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub mode: String,
    pub tables: Vec<Table>,
}

impl Report {
    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }

    /// Encodes the report. CSV output separates tables with a blank line.
    pub fn render(&self, format: Format) -> Result<Vec<u8>, RenderError> {
        match format {
            Format::Json => {
                let doc = serde_json::json!({ "mode": self.mode, "tables": self.tables });
                let mut bytes = serde_json::to_vec_pretty(&doc)?;
                bytes.push(b'\n');
                Ok(bytes)
            }
            Format::Csv => {
                let mut bytes = Vec::new();
                for (i, t) in self.tables.iter().enumerate() {
                    if i > 0 {
                        bytes.push(b'\n');
                    }
                    t.write_csv(&mut bytes)?;
                }
                Ok(bytes)
            }
        }
    }

    /// Writes the report under `path`. For CSV the primary table goes to
    /// `path` and every further table to `<stem>.<table>.csv` beside it.
    pub fn write_files(&self, path: &Path, format: Format) -> Result<Vec<PathBuf>, RenderError> {
        let io = |p: &Path, e: std::io::Error| RenderError::Io {
            path: p.to_path_buf(),
            source: e,
        };
        match format {
            Format::Json => {
                std::fs::write(path, self.render(format)?).map_err(|e| io(path, e))?;
                Ok(vec![path.to_path_buf()])
            }
            Format::Csv => {
                let mut written = Vec::new();
                for (i, t) in self.tables.iter().enumerate() {
                    let target = if i == 0 {
                        path.to_path_buf()
                    } else {
                        sibling(path, &t.name)
                    };
                    let mut bytes = Vec::new();
                    t.write_csv(&mut bytes)?;
                    std::fs::write(&target, bytes).map_err(|e| io(&target, e))?;
                    written.push(target);
                }
                Ok(written)
            }
        }
    }
}

fn sibling(path: &Path, table: &str) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "result".into());
    path.with_file_name(format!("{stem}.{table}.csv"))
}

#[derive(Debug, thiserror::Error)]
pub enum RenderError {
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}
