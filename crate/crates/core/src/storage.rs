//! In-memory row storage and the catalog of base and temporary tables.

use std::collections::BTreeMap;
use std::hash::{Hash, Hasher};
use std::io::Read;
use std::path::Path;

use rustc_hash::{FxHashMap, FxHasher};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::value::{DataType, Row, Value};

#[derive(Debug, Error)]
pub enum StorageError {
    #[error("parse error in table {table} at line {line}: {message}")]
    Parse {
        table: String,
        line: usize,
        message: String,
    },
    #[error("duplicate primary key {value} in table {table}")]
    DuplicateKey { table: String, value: String },
    #[error("table {0} already exists")]
    DuplicateTable(String),
    #[error("unknown table {0}")]
    UnknownTable(String),
    #[error("invalid schema for {table}: {message}")]
    InvalidSchema { table: String, message: String },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnMeta {
    pub name: String,
    #[serde(rename = "type")]
    pub data_type: DataType,
    #[serde(default)]
    pub is_primary_key: bool,
}

impl ColumnMeta {
    pub fn new(name: impl Into<String>, data_type: DataType) -> Self {
        ColumnMeta {
            name: name.into(),
            data_type,
            is_primary_key: false,
        }
    }

    pub fn int(name: impl Into<String>) -> Self {
        Self::new(name, DataType::Int64)
    }

    pub fn text(name: impl Into<String>) -> Self {
        Self::new(name, DataType::Text)
    }

    pub fn primary_key(mut self) -> Self {
        self.is_primary_key = true;
        self
    }
}

#[derive(Debug, Clone)]
pub struct Table {
    pub name: String,
    pub columns: Vec<ColumnMeta>,
    pub rows: Vec<Row>,
    pub is_temp: bool,
    /// Content hash; distinguishes temp tables that reuse a name.
    pub fingerprint: u64,
}

impl Table {
    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    pub fn primary_key(&self) -> Option<usize> {
        self.columns.iter().position(|c| c.is_primary_key)
    }

    pub fn row_count(&self) -> usize {
        self.rows.len()
    }

    fn compute_fingerprint(name: &str, columns: &[ColumnMeta], rows: &[Row]) -> u64 {
        let mut h = FxHasher::default();
        name.hash(&mut h);
        for c in columns {
            c.name.hash(&mut h);
        }
        rows.len().hash(&mut h);
        for row in rows {
            row.hash(&mut h);
        }
        h.finish()
    }
}

/// Primary-key hash index: key value to row position.
#[derive(Debug, Clone, Default)]
pub struct PkIndex {
    pub column: usize,
    map: FxHashMap<Value, u32>,
}

impl PkIndex {
    pub fn lookup(&self, key: &Value) -> Option<u32> {
        if key.is_null() {
            return None;
        }
        self.map.get(key).copied()
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

#[derive(Debug, Clone, Default)]
pub struct Catalog {
    tables: BTreeMap<String, Table>,
    indexes: BTreeMap<String, PkIndex>,
}

/// Column lookup used by the SQL front end to validate names and types.
pub trait SchemaLookup {
    fn table_columns(&self, table: &str) -> Option<&[ColumnMeta]>;
}

impl SchemaLookup for Catalog {
    fn table_columns(&self, table: &str) -> Option<&[ColumnMeta]> {
        self.tables.get(table).map(|t| t.columns.as_slice())
    }
}

fn validate_schema(name: &str, schema: &[ColumnMeta]) -> Result<(), StorageError> {
    if schema.is_empty() {
        return Err(StorageError::InvalidSchema {
            table: name.to_string(),
            message: "no columns".into(),
        });
    }
    if schema.iter().filter(|c| c.is_primary_key).count() > 1 {
        return Err(StorageError::InvalidSchema {
            table: name.to_string(),
            message: "more than one primary-key column".into(),
        });
    }
    for (i, c) in schema.iter().enumerate() {
        if schema[..i].iter().any(|p| p.name == c.name) {
            return Err(StorageError::InvalidSchema {
                table: name.to_string(),
                message: format!("duplicate column {}", c.name),
            });
        }
    }
    Ok(())
}

fn build_index(table: &Table) -> Result<Option<PkIndex>, StorageError> {
    let Some(pk) = table.primary_key() else {
        return Ok(None);
    };
    let mut map = FxHashMap::default();
    map.reserve(table.rows.len());
    for (pos, row) in table.rows.iter().enumerate() {
        let key = &row[pk];
        if key.is_null() {
            continue;
        }
        if map.insert(key.clone(), pos as u32).is_some() {
            return Err(StorageError::DuplicateKey {
                table: table.name.clone(),
                value: key.to_string(),
            });
        }
    }
    Ok(Some(PkIndex { column: pk, map }))
}

impl Catalog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.get(name)
    }

    pub fn index(&self, table: &str) -> Option<&PkIndex> {
        self.indexes.get(table)
    }

    pub fn tables(&self) -> impl Iterator<Item = &Table> {
        self.tables.values()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.tables.contains_key(name)
    }

    pub fn base_table_count(&self) -> usize {
        self.tables.values().filter(|t| !t.is_temp).count()
    }

    /// Hash over every base table's content.
    pub fn dataset_fingerprint(&self) -> u64 {
        let mut h = FxHasher::default();
        for t in self.tables.values().filter(|t| !t.is_temp) {
            t.fingerprint.hash(&mut h);
        }
        h.finish()
    }

    /// Registers a base table, validating arity, types and key uniqueness.
    pub fn create_table(
        &mut self,
        name: &str,
        schema: Vec<ColumnMeta>,
        rows: Vec<Row>,
    ) -> Result<&Table, StorageError> {
        self.insert(name, schema, rows, false)
    }

    /// Registers a temporary table. No index is built for it.
    pub fn create_temp_table(
        &mut self,
        name: &str,
        schema: Vec<ColumnMeta>,
        rows: Vec<Row>,
    ) -> Result<&Table, StorageError> {
        let schema = schema
            .into_iter()
            .map(|c| ColumnMeta {
                is_primary_key: false,
                ..c
            })
            .collect();
        self.insert(name, schema, rows, true)
    }

    fn insert(
        &mut self,
        name: &str,
        schema: Vec<ColumnMeta>,
        rows: Vec<Row>,
        is_temp: bool,
    ) -> Result<&Table, StorageError> {
        if self.tables.contains_key(name) {
            return Err(StorageError::DuplicateTable(name.to_string()));
        }
        validate_schema(name, &schema)?;
        for (i, row) in rows.iter().enumerate() {
            if row.len() != schema.len() {
                return Err(StorageError::Parse {
                    table: name.to_string(),
                    line: i + 1,
                    message: format!("expected {} values, found {}", schema.len(), row.len()),
                });
            }
            for (v, c) in row.iter().zip(&schema) {
                if let Some(t) = v.data_type() {
                    if t != c.data_type {
                        return Err(StorageError::Parse {
                            table: name.to_string(),
                            line: i + 1,
                            message: format!("column {} expects {}, got {}", c.name, c.data_type, t),
                        });
                    }
                }
            }
        }
        let fingerprint = Table::compute_fingerprint(name, &schema, &rows);
        let table = Table {
            name: name.to_string(),
            columns: schema,
            rows,
            is_temp,
            fingerprint,
        };
        if !is_temp {
            if let Some(index) = build_index(&table)? {
                self.indexes.insert(name.to_string(), index);
            }
        }
        Ok(self.tables.entry(name.to_string()).or_insert(table))
    }

    /// Loads a header-first CSV file into a new base table.
    pub fn load_csv(
        &mut self,
        path: impl AsRef<Path>,
        table_name: &str,
        schema: Vec<ColumnMeta>,
    ) -> Result<&Table, StorageError> {
        let file = std::fs::File::open(path)?;
        self.load_csv_reader(file, table_name, schema)
    }

    pub fn load_csv_reader<R: Read>(
        &mut self,
        reader: R,
        table_name: &str,
        schema: Vec<ColumnMeta>,
    ) -> Result<&Table, StorageError> {
        if self.tables.contains_key(table_name) {
            return Err(StorageError::DuplicateTable(table_name.to_string()));
        }
        let parse_err = |line: usize, message: String| StorageError::Parse {
            table: table_name.to_string(),
            line,
            message,
        };
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .flexible(true)
            .from_reader(reader);
        let header = rdr.headers().map_err(|e| parse_err(1, e.to_string()))?.clone();
        let names: Vec<&str> = header.iter().collect();
        let expected: Vec<&str> = schema.iter().map(|c| c.name.as_str()).collect();
        if names != expected {
            return Err(parse_err(
                1,
                format!("header {names:?} does not match schema {expected:?}"),
            ));
        }
        let mut rows = Vec::new();
        for (i, record) in rdr.records().enumerate() {
            let line = i + 2;
            let record = record.map_err(|e| parse_err(line, e.to_string()))?;
            if record.len() != schema.len() {
                return Err(parse_err(
                    line,
                    format!("expected {} fields, found {}", schema.len(), record.len()),
                ));
            }
            let mut row = Vec::with_capacity(schema.len());
            for (raw, col) in record.iter().zip(&schema) {
                let v = Value::parse_as(raw, col.data_type).ok_or_else(|| {
                    parse_err(
                        line,
                        format!("value {raw:?} is not a valid {} for column {}", col.data_type, col.name),
                    )
                })?;
                row.push(v);
            }
            rows.push(row);
        }
        self.insert(table_name, schema, rows, false)
    }

    /// Writes a table as CSV (header first, null as the empty field).
    pub fn write_csv(&self, table: &str, path: impl AsRef<Path>) -> Result<(), StorageError> {
        let t = self
            .table(table)
            .ok_or_else(|| StorageError::UnknownTable(table.to_string()))?;
        let mut w = csv::Writer::from_path(path).map_err(|e| StorageError::Io(e.into()))?;
        let io = |e: csv::Error| StorageError::Io(e.into());
        w.write_record(t.columns.iter().map(|c| c.name.as_str())).map_err(io)?;
        for row in &t.rows {
            w.write_record(row.iter().map(|v| match v {
                Value::Null => String::new(),
                other => other.to_string(),
            }))
            .map_err(io)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn drop_temp_tables(&mut self) -> usize {
        let before = self.tables.len();
        self.tables.retain(|_, t| !t.is_temp);
        before - self.tables.len()
    }

    /// Removes one temporary table. Base tables cannot be dropped.
    pub fn drop_temp_table(&mut self, name: &str) -> bool {
        if self.tables.get(name).is_some_and(|t| t.is_temp) {
            self.tables.remove(name);
            true
        } else {
            false
        }
    }

    /// First unused name of the form `{prefix}{k}`, k ≥ 1.
    pub fn fresh_temp_name(&self, prefix: &str) -> String {
        (1..)
            .map(|k| format!("{prefix}{k}"))
            .find(|n| !self.tables.contains_key(n))
            .expect("unbounded name space")
    }
}
