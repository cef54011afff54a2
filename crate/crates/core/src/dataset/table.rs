use std::collections::HashMap;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnKind {
    Numeric,
    Categorical,
    Identifier,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnSpec {
    pub name: String,
    pub kind: ColumnKind,
}

impl ColumnSpec {
    pub fn new(name: impl Into<String>, kind: ColumnKind) -> Self {
        Self {
            name: name.into(),
            kind,
        }
    }
}

/// A single parsed cell. `Missing` is distinct from a numeric zero.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Text(String),
    Missing,
}

impl Cell {
    pub fn is_missing(&self) -> bool {
        matches!(self, Cell::Missing)
    }
}

const MISSING_TOKENS: &[&str] = &["", "na", "n/a", "nan", "null", ".", "-"];

fn is_missing_token(raw: &str) -> bool {
    let t = raw.trim();
    MISSING_TOKENS.iter().any(|m| t.eq_ignore_ascii_case(m))
}

fn parse_cell(raw: &str, kind: ColumnKind) -> Cell {
    if is_missing_token(raw) {
        return Cell::Missing;
    }
    let t = raw.trim();
    match kind {
        ColumnKind::Numeric => match t.parse::<f64>() {
            Ok(v) if v.is_finite() => Cell::Num(v),
            _ => Cell::Missing,
        },
        ColumnKind::Categorical | ColumnKind::Identifier => Cell::Text(t.to_string()),
    }
}

/// Pre-filter firm-year records. Rows are stored positionally in column order.
#[derive(Debug, Clone, PartialEq)]
pub struct RawTable {
    columns: Vec<ColumnSpec>,
    index: HashMap<String, usize>,
    rows: Vec<Vec<Cell>>,
}

impl RawTable {
    pub fn new(columns: Vec<ColumnSpec>, rows: Vec<Vec<Cell>>) -> Result<Self> {
        let mut index = HashMap::with_capacity(columns.len());
        for (i, c) in columns.iter().enumerate() {
            if index.insert(c.name.clone(), i).is_some() {
                return Err(Error::DuplicateColumn(c.name.clone()));
            }
        }
        for (r, row) in rows.iter().enumerate() {
            if row.len() != columns.len() {
                return Err(Error::RowArity {
                    row: r + 1,
                    expected: columns.len(),
                    found: row.len(),
                });
            }
        }
        Ok(Self {
            columns,
            index,
            rows,
        })
    }

    pub fn columns(&self) -> &[ColumnSpec] {
        &self.columns
    }

    pub fn row_count(&self) -> usize {
        self.rows.len()
    }

    pub fn rows(&self) -> &[Vec<Cell>] {
        &self.rows
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn require(&self, name: &str) -> Result<usize> {
        self.column_index(name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    }

    pub fn cell(&self, row: usize, col: usize) -> &Cell {
        &self.rows[row][col]
    }

    pub fn numeric(&self, row: usize, col: usize) -> Option<f64> {
        match &self.rows[row][col] {
            Cell::Num(v) => Some(*v),
            _ => None,
        }
    }

    pub fn text(&self, row: usize, col: usize) -> Option<&str> {
        match &self.rows[row][col] {
            Cell::Text(s) => Some(s.as_str()),
            Cell::Num(_) | Cell::Missing => None,
        }
    }

    /// Keeps rows for which `keep` returns true, preserving order.
    pub fn retain(&self, mut keep: impl FnMut(usize) -> bool) -> RawTable {
        let rows = (0..self.rows.len())
            .filter(|&r| keep(r))
            .map(|r| self.rows[r].clone())
            .collect();
        RawTable {
            columns: self.columns.clone(),
            index: self.index.clone(),
            rows,
        }
    }
}

/// Loads a delimited file with a header row that must match `schema`.
pub fn load_csv(path: &Path, schema: &[ColumnSpec], delimiter: u8) -> Result<RawTable> {
    let file = std::fs::File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_csv(file, schema, delimiter)
}

/// Parses delimited text. The header must contain exactly the schema's
/// column names (any order); columns are returned in schema order.
pub fn parse_csv<R: Read>(reader: R, schema: &[ColumnSpec], delimiter: u8) -> Result<RawTable> {
    let mut seen = HashMap::new();
    for c in schema {
        if seen.insert(c.name.as_str(), ()).is_some() {
            return Err(Error::DuplicateColumn(c.name.clone()));
        }
    }

    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .has_headers(true)
        .flexible(true)
        .from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| Error::Csv(e.to_string()))?
        .clone();

    let mut header_pos: HashMap<String, usize> = HashMap::new();
    for (i, h) in headers.iter().enumerate() {
        let name = h.trim().trim_start_matches('\u{feff}').to_string();
        if header_pos.insert(name.clone(), i).is_some() {
            return Err(Error::DuplicateColumn(name));
        }
    }
    if let Some(extra) = header_pos
        .keys()
        .find(|h| !schema.iter().any(|c| &c.name == *h))
    {
        return Err(Error::Header(format!("unexpected column `{extra}`")));
    }
    let mut source_of = Vec::with_capacity(schema.len());
    for c in schema {
        let pos = header_pos
            .get(&c.name)
            .ok_or_else(|| Error::Header(format!("column `{}` absent from header", c.name)))?;
        source_of.push(*pos);
    }

    let width = headers.len();
    let mut rows = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| Error::Csv(e.to_string()))?;
        if record.len() != width {
            return Err(Error::RowArity {
                row: i + 1,
                expected: width,
                found: record.len(),
            });
        }
        let row = schema
            .iter()
            .zip(&source_of)
            .map(|(c, &pos)| parse_cell(&record[pos], c.kind))
            .collect();
        rows.push(row);
    }
    RawTable::new(schema.to_vec(), rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn schema() -> Vec<ColumnSpec> {
        ["sale", "at", "dltt", "dlc"]
            .iter()
            .map(|n| ColumnSpec::new(*n, ColumnKind::Numeric))
            .collect()
    }

    #[test]
    fn three_rows() {
        let text = "sale,at,dltt,dlc\n10,20,1,2\n11,21,1,2\n12,22,1,2\n";
        let t = parse_csv(text.as_bytes(), &schema(), b',').unwrap();
        assert_eq!(t.row_count(), 3);
        assert_eq!(t.numeric(2, 1), Some(22.0));
    }

    #[test]
    fn header_only() {
        let t = parse_csv("sale,at,dltt,dlc\n".as_bytes(), &schema(), b',').unwrap();
        assert_eq!(t.row_count(), 0);
    }

    #[test]
    fn unparseable_numeric_is_missing() {
        let text = "sale,at,dltt,dlc\nn/a,20,abc,2\n";
        let t = parse_csv(text.as_bytes(), &schema(), b',').unwrap();
        assert_eq!(t.cell(0, 0), &Cell::Missing);
        assert_eq!(t.cell(0, 2), &Cell::Missing);
        assert_eq!(t.numeric(0, 3), Some(2.0));
    }

    #[test]
    fn semicolon_delimiter_and_reordered_header() {
        let text = "dlc;dltt;at;sale\n2;1;20;10\n";
        let t = parse_csv(text.as_bytes(), &schema(), b';').unwrap();
        assert_eq!(t.numeric(0, 0), Some(10.0));
        assert_eq!(t.numeric(0, 3), Some(2.0));
    }

    #[test]
    fn wrong_arity_reports_row() {
        let text = "sale,at,dltt,dlc\n1,2,3,4\n1,2,3\n";
        match parse_csv(text.as_bytes(), &schema(), b',') {
            Err(Error::RowArity {
                row,
                expected,
                found,
            }) => {
                assert_eq!((row, expected, found), (2, 4, 3));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn duplicate_header_column() {
        let text = "sale,at,dltt,dlc,at\n";
        assert!(matches!(
            parse_csv(text.as_bytes(), &schema(), b','),
            Err(Error::DuplicateColumn(c)) if c == "at"
        ));
    }

    #[test]
    fn missing_schema_column_in_header() {
        let text = "sale,at,dltt\n";
        assert!(matches!(
            parse_csv(text.as_bytes(), &schema(), b','),
            Err(Error::Header(_))
        ));
    }

    #[test]
    fn load_reports_io_failure() {
        let err = load_csv(Path::new("/nonexistent/x.csv"), &schema(), b',').unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
    }
}
