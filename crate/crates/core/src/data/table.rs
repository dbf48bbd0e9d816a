use std::collections::{BTreeSet, HashMap};
use std::fs::File;
use std::io::Read;
use std::path::Path;

use crate::dataset::{Dataset, Record};
use crate::error::{Error, Result};

/// Rectangular table of string cells as read from a delimited file.
#[derive(Debug, Clone, PartialEq)]
pub struct RawTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
    pub delimiter: u8,
}

impl RawTable {
    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }
}

/// Reads a delimited UTF-8 file. Quoted fields follow RFC 4180. Without a
/// header row, columns are named `c0, c1, ...`.
pub fn load_csv(path: impl AsRef<Path>, delimiter: u8, has_header: bool) -> Result<RawTable> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    read_csv(file, delimiter, has_header)
}

pub fn read_csv<R: Read>(reader: R, delimiter: u8, has_header: bool) -> Result<RawTable> {
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .has_headers(false)
        .flexible(true)
        .from_reader(reader);
    let mut records = rdr.records();
    let mut header: Option<Vec<String>> = None;
    if has_header {
        match records.next() {
            Some(r) => header = Some(r?.iter().map(|s| s.trim().to_string()).collect()),
            None => return Err(Error::EmptyTable),
        }
    }
    let mut rows = Vec::new();
    for (i, r) in records.enumerate() {
        let r = r?;
        let row: Vec<String> = r.iter().map(str::to_string).collect();
        let expected = header.as_ref().map_or_else(|| rows.first().map_or(row.len(), Vec::len), Vec::len);
        if row.len() != expected {
            return Err(Error::RaggedRow {
                row: i + usize::from(has_header) + 1,
                expected,
                found: row.len(),
            });
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::EmptyTable);
    }
    let header = header.unwrap_or_else(|| (0..rows[0].len()).map(|i| format!("c{i}")).collect());
    Ok(RawTable {
        header,
        rows,
        delimiter,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ColumnKind {
    Numeric,
    Categorical,
    /// The label column; cells equal to `positive` map to 1, all others to 0.
    Target { positive: String },
    /// Dropped before encoding (row ids and the like).
    Ignore,
}

/// Per-column handling, in declaration order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColumnSchema {
    pub columns: Vec<(String, ColumnKind)>,
}

impl ColumnSchema {
    pub fn new(columns: Vec<(String, ColumnKind)>) -> Result<Self> {
        let targets = columns
            .iter()
            .filter(|(_, k)| matches!(k, ColumnKind::Target { .. }))
            .count();
        if targets != 1 {
            return Err(Error::Schema(format!("expected exactly one target column, found {targets}")));
        }
        let mut seen = BTreeSet::new();
        for (name, _) in &columns {
            if !seen.insert(name.as_str()) {
                return Err(Error::Schema(format!("column `{name}` declared twice")));
            }
        }
        Ok(ColumnSchema { columns })
    }

    /// Parses `column = numeric | categorical | target:<positive> | ignore`
    /// lines. Blank lines and lines starting with `#` are skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let mut columns = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (name, kind) = line
                .split_once('=')
                .ok_or_else(|| Error::Schema(format!("line {}: expected `name = kind`", lineno + 1)))?;
            let name = name.trim();
            let kind = kind.trim();
            if name.is_empty() {
                return Err(Error::Schema(format!("line {}: empty column name", lineno + 1)));
            }
            let kind = match kind {
                "numeric" => ColumnKind::Numeric,
                "categorical" => ColumnKind::Categorical,
                "ignore" => ColumnKind::Ignore,
                other => match other.strip_prefix("target:") {
                    Some(pos) if !pos.trim().is_empty() => ColumnKind::Target {
                        positive: pos.trim().to_string(),
                    },
                    _ => {
                        return Err(Error::Schema(format!("line {}: unknown column kind `{other}`", lineno + 1)))
                    }
                },
            };
            columns.push((name.to_string(), kind));
        }
        Self::new(columns)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text)
    }

    /// Names of the columns that become features, in table order.
    pub fn feature_names<'a>(&'a self, table: &'a RawTable) -> Vec<&'a str> {
        let kinds: HashMap<&str, &ColumnKind> = self.columns.iter().map(|(n, k)| (n.as_str(), k)).collect();
        table
            .header
            .iter()
            .filter(|h| matches!(kinds.get(h.as_str()), Some(ColumnKind::Numeric | ColumnKind::Categorical)))
            .map(String::as_str)
            .collect()
    }
}

enum Encoder {
    Numeric,
    Categorical(HashMap<String, f64>),
}

/// Turns string cells into numbers. Categorical values are sorted
/// lexicographically and numbered from 0; numeric cells are parsed as
/// reals. Feature order follows the table's column order.
pub fn label_encode(table: &RawTable, schema: &ColumnSchema) -> Result<Dataset> {
    let declared: HashMap<&str, &ColumnKind> = schema.columns.iter().map(|(n, k)| (n.as_str(), k)).collect();
    for h in &table.header {
        if !declared.contains_key(h.as_str()) {
            return Err(Error::Schema(format!("column `{h}` is not covered by the schema")));
        }
    }
    for (name, _) in &schema.columns {
        if table.column_index(name).is_none() {
            return Err(Error::Schema(format!("schema column `{name}` is missing from the table")));
        }
    }

    let mut features: Vec<(usize, &str, Encoder)> = Vec::new();
    let mut target = None;
    for (col, name) in table.header.iter().enumerate() {
        match declared[name.as_str()] {
            ColumnKind::Numeric => features.push((col, name, Encoder::Numeric)),
            ColumnKind::Categorical => {
                let values: BTreeSet<&str> = table.rows.iter().map(|r| r[col].as_str()).collect();
                let codes = values
                    .into_iter()
                    .enumerate()
                    .map(|(i, v)| (v.to_string(), i as f64))
                    .collect();
                features.push((col, name, Encoder::Categorical(codes)));
            }
            ColumnKind::Target { positive } => target = Some((col, name.as_str(), positive.as_str())),
            ColumnKind::Ignore => {}
        }
    }
    let (target_col, target_name, positive) = target.expect("schema has exactly one target");
    if features.is_empty() {
        return Err(Error::Schema("schema declares no feature columns".into()));
    }

    let distinct: BTreeSet<&str> = table.rows.iter().map(|r| r[target_col].as_str()).collect();
    if distinct.len() != 2 || !distinct.contains(positive) {
        return Err(Error::NonBinaryTarget {
            column: target_name.to_string(),
            detail: format!(
                "expected two distinct values including `{positive}`, found {:?}",
                distinct.iter().take(5).collect::<Vec<_>>()
            ),
        });
    }

    let mut records = Vec::with_capacity(table.rows.len());
    for (row_idx, row) in table.rows.iter().enumerate() {
        let mut x = Vec::with_capacity(features.len());
        for (col, name, enc) in &features {
            let cell = &row[*col];
            let v = match enc {
                Encoder::Numeric => cell.trim().parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| {
                    Error::ParseCell {
                        column: name.to_string(),
                        row: row_idx,
                        value: cell.clone(),
                    }
                })?,
                Encoder::Categorical(codes) => codes[cell.as_str()],
            };
            x.push(v);
        }
        records.push(Record::new(x, u8::from(row[target_col] == positive)));
    }
    Dataset::new(records)
}
