//! Column-typed in-memory tables loaded from CSV or inline JSON rows.

use std::collections::HashSet;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::value::{parse_datetime, parse_number, Value, ValueKind};

#[derive(Debug, Error)]
pub enum TableError {
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("duplicate column name `{0}`")]
    DuplicateColumn(String),
    #[error("row {row} has {found} values, expected {expected}")]
    RaggedRow {
        row: usize,
        found: usize,
        expected: usize,
    },
    #[error("inline data row {0} is not an object")]
    NotAnObject(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    pub kind: ValueKind,
}

/// A named table; every row has exactly one value per column.
#[derive(Debug, Clone, PartialEq)]
pub struct DataTable {
    name: String,
    columns: Vec<Column>,
    rows: Vec<Vec<Value>>,
}

impl DataTable {
    pub fn new(
        name: impl Into<String>,
        columns: Vec<Column>,
        rows: Vec<Vec<Value>>,
    ) -> Result<Self, TableError> {
        let mut seen = HashSet::new();
        for c in &columns {
            if !seen.insert(c.name.as_str()) {
                return Err(TableError::DuplicateColumn(c.name.clone()));
            }
        }
        for (i, r) in rows.iter().enumerate() {
            if r.len() != columns.len() {
                return Err(TableError::RaggedRow {
                    row: i,
                    found: r.len(),
                    expected: columns.len(),
                });
            }
        }
        Ok(Self {
            name: name.into(),
            columns,
            rows,
        })
    }

    /// Build a table from raw text cells, inferring each column's kind.
    pub fn from_text_rows(
        name: impl Into<String>,
        header: Vec<String>,
        raw_rows: Vec<Vec<String>>,
    ) -> Result<Self, TableError> {
        for (i, r) in raw_rows.iter().enumerate() {
            if r.len() != header.len() {
                return Err(TableError::RaggedRow {
                    row: i,
                    found: r.len(),
                    expected: header.len(),
                });
            }
        }
        let kinds: Vec<ValueKind> = (0..header.len())
            .map(|c| infer_kind(raw_rows.iter().map(|r| r[c].as_str())))
            .collect();
        let columns = header
            .into_iter()
            .zip(&kinds)
            .map(|(name, kind)| Column { name, kind: *kind })
            .collect();
        let rows = raw_rows
            .iter()
            .map(|r| {
                r.iter()
                    .zip(&kinds)
                    .map(|(cell, kind)| Value::parse_cell(cell, *kind))
                    .collect()
            })
            .collect();
        Self::new(name, columns, rows)
    }

    /// RFC-4180 CSV, first record is the header.
    pub fn from_csv_reader<R: Read>(
        name: impl Into<String>,
        reader: R,
    ) -> Result<Self, TableError> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_reader(reader);
        let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
        let mut raw_rows = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            raw_rows.push(rec.iter().map(str::to_string).collect());
        }
        Self::from_text_rows(name, header, raw_rows)
    }

    pub fn from_csv_path(path: &Path) -> Result<Self, TableError> {
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        let file = std::fs::File::open(path)?;
        Self::from_csv_reader(name, file)
    }

    /// Rows from a Vega-Lite `data.values` array. Columns are the union of keys in
    /// first-seen order; numbers keep their JSON kind, strings go through the same
    /// inference as CSV cells.
    pub fn from_json_rows(
        name: impl Into<String>,
        rows: &[serde_json::Map<String, serde_json::Value>],
    ) -> Result<Self, TableError> {
        let mut header: Vec<String> = Vec::new();
        let mut seen = HashSet::new();
        for row in rows {
            for k in row.keys() {
                if seen.insert(k.clone()) {
                    header.push(k.clone());
                }
            }
        }
        let mut columns = Vec::with_capacity(header.len());
        let mut out_rows = vec![Vec::with_capacity(header.len()); rows.len()];
        for col in &header {
            let cells: Vec<Option<&serde_json::Value>> = rows.iter().map(|r| r.get(col)).collect();
            let all_strings = cells.iter().flatten().all(|v| v.is_string() || v.is_null());
            let kind = if all_strings {
                infer_kind(
                    cells
                        .iter()
                        .map(|v| v.and_then(|v| v.as_str()).unwrap_or("")),
                )
            } else {
                let vals: Vec<Value> = cells
                    .iter()
                    .flatten()
                    .map(|v| Value::from_json(v))
                    .collect();
                kind_of_values(&vals)
            };
            for (i, cell) in cells.iter().enumerate() {
                let v = match cell {
                    None | Some(serde_json::Value::Null) => Value::Null,
                    Some(serde_json::Value::String(s)) if all_strings => Value::parse_cell(s, kind),
                    Some(v) => Value::from_json(v),
                };
                out_rows[i].push(v);
            }
            columns.push(Column {
                name: col.clone(),
                kind,
            });
        }
        Self::new(name, columns, out_rows)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn rows(&self) -> &[Vec<Value>] {
        &self.rows
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    pub fn column(&self, name: &str) -> Option<&Column> {
        self.columns.iter().find(|c| c.name == name)
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    /// Rows as JSON objects, for inline data and renderer requests.
    pub fn to_json_rows(&self) -> Vec<serde_json::Map<String, serde_json::Value>> {
        self.rows
            .iter()
            .map(|r| {
                self.columns
                    .iter()
                    .zip(r)
                    .map(|(c, v)| (c.name.clone(), v.to_json()))
                    .collect()
            })
            .collect()
    }

    /// CSV text of the header and the first `max_rows` rows, without trailing newline.
    pub fn to_csv_head(&self, max_rows: usize) -> String {
        let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
        // Writing into a Vec cannot fail.
        let _ = w.write_record(self.columns.iter().map(|c| c.name.as_str()));
        for r in self.rows.iter().take(max_rows) {
            let _ = w.write_record(r.iter().map(|v| v.to_string()));
        }
        let bytes = w.into_inner().unwrap_or_default();
        let mut s = String::from_utf8(bytes).unwrap_or_default();
        while s.ends_with('\n') || s.ends_with('\r') {
            s.pop();
        }
        s
    }

    pub(crate) fn replace_column(&mut self, idx: usize, kind: ValueKind, values: Vec<Value>) {
        self.columns[idx].kind = kind;
        for (row, v) in self.rows.iter_mut().zip(values) {
            row[idx] = v;
        }
    }
}

/// Whole-column parse attempts: integer, then real, then datetime, else text.
/// Empty cells are ignored; an all-empty column is text.
pub fn infer_kind<'a>(cells: impl Iterator<Item = &'a str> + Clone) -> ValueKind {
    let non_empty = || cells.clone().map(str::trim).filter(|s| !s.is_empty());
    if non_empty().next().is_none() {
        return ValueKind::Text;
    }
    if non_empty().all(|s| s.parse::<i64>().is_ok()) {
        ValueKind::Integer
    } else if non_empty().all(|s| parse_number(s).is_some()) {
        ValueKind::Real
    } else if non_empty().all(|s| parse_datetime(s).is_some()) {
        ValueKind::Datetime
    } else {
        ValueKind::Text
    }
}

pub(crate) fn kind_of_values(vals: &[Value]) -> ValueKind {
    let mut kind: Option<ValueKind> = None;
    for v in vals {
        let k = match v.kind() {
            Some(k) => k,
            None => continue,
        };
        kind = Some(match (kind, k) {
            (None, k) => k,
            (Some(a), b) if a == b => a,
            (Some(ValueKind::Integer), ValueKind::Real)
            | (Some(ValueKind::Real), ValueKind::Integer) => ValueKind::Real,
            _ => ValueKind::Text,
        });
    }
    kind.unwrap_or(ValueKind::Text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn infers_kinds_in_priority_order() {
        let csv = "a,b,c,d,e\n1,1.5,2020-01-01,x,\n2,2,2020-01-02 10:00:00,y,\n";
        let t = DataTable::from_csv_reader("t", csv.as_bytes()).unwrap();
        let kinds: Vec<_> = t.columns().iter().map(|c| c.kind).collect();
        assert_eq!(
            kinds,
            vec![
                ValueKind::Integer,
                ValueKind::Real,
                ValueKind::Datetime,
                ValueKind::Text,
                ValueKind::Text
            ]
        );
        assert_eq!(t.rows()[0][4], Value::Null);
    }

    #[test]
    fn empty_cells_do_not_block_inference() {
        let csv = "a\n1\n\n3\n";
        let t = DataTable::from_csv_reader("t", csv.as_bytes()).unwrap();
        assert_eq!(t.columns()[0].kind, ValueKind::Integer);
        assert_eq!(t.num_rows(), 2, "csv reader skips blank lines");
    }

    #[test]
    fn rejects_duplicate_columns() {
        let csv = "a,a\n1,2\n";
        assert!(matches!(
            DataTable::from_csv_reader("t", csv.as_bytes()),
            Err(TableError::DuplicateColumn(_))
        ));
    }

    #[test]
    fn quoted_fields_follow_rfc4180() {
        let csv = "name,note\n\"Smith, J\",\"said \"\"hi\"\"\"\n";
        let t = DataTable::from_csv_reader("t", csv.as_bytes()).unwrap();
        assert_eq!(t.rows()[0][0], Value::Text("Smith, J".into()));
        assert_eq!(t.rows()[0][1], Value::Text("said \"hi\"".into()));
    }

    #[test]
    fn json_rows_union_keys() {
        let rows: Vec<serde_json::Map<String, serde_json::Value>> =
            serde_json::from_str(r#"[{"a": 1, "b": "2020-01-01"}, {"a": 2.5, "c": "x"}]"#).unwrap();
        let t = DataTable::from_json_rows("inline", &rows).unwrap();
        let names: Vec<_> = t.columns().iter().map(|c| c.name.as_str()).collect();
        assert_eq!(names, ["a", "b", "c"]);
        assert_eq!(t.columns()[0].kind, ValueKind::Real);
        assert_eq!(t.columns()[1].kind, ValueKind::Datetime);
        assert_eq!(t.rows()[1][1], Value::Null);
    }

    #[test]
    fn csv_head_is_deterministic() {
        let csv = "a,b\n1,x\n2,y\n3,z\n";
        let t = DataTable::from_csv_reader("t", csv.as_bytes()).unwrap();
        assert_eq!(t.to_csv_head(2), "a,b\n1,x\n2,y");
        assert_eq!(t.to_csv_head(2), t.to_csv_head(2));
    }
}
