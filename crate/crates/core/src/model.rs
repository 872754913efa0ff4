//! Rows, tables, schema metadata and result sets.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::value::{ColumnType, GroupKey, Value};

/// Name of the explicit provenance column carried by every generated table.
pub const ROWID_COLUMN: &str = "RowID";

/// Row values aligned to a column list.
pub type Row = Vec<Value>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    pub ty: ColumnType,
}

impl Column {
    pub fn new(name: impl Into<String>, ty: ColumnType) -> Self {
        Column { name: name.into(), ty }
    }
}

/// The provenance source. A row's RowID is its index: ids are dense at
/// construction and insertions append.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WideTable {
    pub columns: Vec<Column>,
    pub rows: Vec<Row>,
}

impl WideTable {
    pub fn new(columns: Vec<Column>, rows: Vec<Row>) -> Result<Self> {
        let mut seen = std::collections::BTreeSet::new();
        for c in &columns {
            if c.name == ROWID_COLUMN {
                return Err(Error::Input(format!("column name {ROWID_COLUMN} is reserved")));
            }
            if !seen.insert(c.name.as_str()) {
                return Err(Error::Input(format!("duplicate column {}", c.name)));
            }
        }
        for (i, r) in rows.iter().enumerate() {
            if r.len() != columns.len() {
                return Err(Error::Input(format!(
                    "row {i} has {} values, expected {}",
                    r.len(),
                    columns.len()
                )));
            }
        }
        Ok(WideTable { columns, rows })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// RowID the next insertion receives.
    pub fn next_row_id(&self) -> usize {
        self.rows.len()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    pub fn column_names(&self) -> Vec<String> {
        self.columns.iter().map(|c| c.name.clone()).collect()
    }

    /// Load a CSV file: header row gives names, types are inferred per column
    /// (int, then float, then text) and the bare token `NULL` is SQL NULL.
    pub fn from_csv_path(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path)
            .map_err(|e| Error::Input(format!("{}: {e}", path.display())))?;
        Self::from_csv_reader(file)
    }

    pub fn from_csv_reader<R: std::io::Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
        let headers: Vec<String> = rdr
            .headers()
            .map_err(|e| Error::Input(e.to_string()))?
            .iter()
            .map(|h| h.trim().to_string())
            .collect();
        let mut raw: Vec<Vec<String>> = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(|e| Error::Input(e.to_string()))?;
            raw.push(rec.iter().map(str::to_string).collect());
        }
        let types: Vec<ColumnType> = (0..headers.len())
            .map(|c| infer_type(raw.iter().map(|r| r[c].as_str())))
            .collect();
        let rows = raw
            .iter()
            .map(|r| r.iter().zip(&types).map(|(cell, ty)| parse_cell(cell, *ty)).collect())
            .collect();
        let columns = headers.into_iter().zip(types).map(|(n, t)| Column::new(n, t)).collect();
        WideTable::new(columns, rows)
    }
}

fn infer_type<'a>(cells: impl Iterator<Item = &'a str> + Clone) -> ColumnType {
    let non_null = cells.filter(|c| *c != "NULL");
    if non_null.clone().all(|c| c.trim().parse::<i64>().is_ok()) {
        ColumnType::Int
    } else if non_null.clone().all(|c| c.trim().parse::<f64>().is_ok()) {
        ColumnType::Float
    } else {
        ColumnType::Text
    }
}

fn parse_cell(cell: &str, ty: ColumnType) -> Value {
    if cell == "NULL" {
        return Value::Null;
    }
    match ty {
        ColumnType::Int => Value::Int(cell.trim().parse().expect("inferred int")),
        ColumnType::Float => Value::Float(cell.trim().parse().expect("inferred float")),
        ColumnType::Decimal | ColumnType::Text => Value::Text(cell.to_string()),
    }
}

/// `lhs -> rhs` over wide-table column names.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct FunctionalDependency {
    pub lhs: Vec<String>,
    pub rhs: Vec<String>,
}

impl FunctionalDependency {
    pub fn new<S: Into<String>>(lhs: impl IntoIterator<Item = S>, rhs: impl IntoIterator<Item = S>) -> Self {
        FunctionalDependency {
            lhs: lhs.into_iter().map(Into::into).collect(),
            rhs: rhs.into_iter().map(Into::into).collect(),
        }
    }
}

impl fmt::Display for FunctionalDependency {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{}}} -> {{{}}}", self.lhs.join(", "), self.rhs.join(", "))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableDef {
    pub name: String,
    /// Data columns; the RowID column is implicit and always first when
    /// materialized.
    pub columns: Vec<Column>,
    /// Implicit primary key.
    pub primary_key: Vec<String>,
    pub is_root: bool,
}

impl TableDef {
    pub fn has_column(&self, name: &str) -> bool {
        self.columns.iter().any(|c| c.name == name)
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    pub fn column_type(&self, name: &str) -> Option<ColumnType> {
        self.columns.iter().find(|c| c.name == name).map(|c| c.ty)
    }
}

/// Implicit foreign key. Child and parent share the column names.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ForeignKey {
    pub child: String,
    pub parent: String,
    pub columns: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizedSchema {
    pub tables: Vec<TableDef>,
    pub fks: Vec<ForeignKey>,
    /// FDs the decomposition was built from (single-column right-hand sides).
    pub fds: Vec<FunctionalDependency>,
    pub wide_columns: Vec<Column>,
}

impl NormalizedSchema {
    pub fn table(&self, name: &str) -> Option<&TableDef> {
        self.tables.iter().find(|t| t.name == name)
    }

    pub fn table_index(&self, name: &str) -> Option<usize> {
        self.tables.iter().position(|t| t.name == name)
    }

    /// The foreign key linking two tables, in either direction.
    pub fn fk_between(&self, a: &str, b: &str) -> Option<&ForeignKey> {
        self.fks
            .iter()
            .find(|fk| (fk.child == a && fk.parent == b) || (fk.child == b && fk.parent == a))
    }

    /// Columns whose values are fixed by `cols` under the schema's FDs.
    pub fn closure(&self, cols: &[String]) -> Vec<String> {
        let mut out: Vec<String> = cols.to_vec();
        loop {
            let mut grew = false;
            for fd in &self.fds {
                if fd.lhs.iter().all(|c| out.contains(c)) {
                    for r in &fd.rhs {
                        if !out.contains(r) {
                            out.push(r.clone());
                            grew = true;
                        }
                    }
                }
            }
            if !grew {
                return out;
            }
        }
    }

    /// Whether the column is (part of) the implicit PK of a non-root table or
    /// a foreign-key column on the child side.
    pub fn is_key_column(&self, table: &str, column: &str) -> bool {
        let pk = self
            .table(table)
            .is_some_and(|t| !t.is_root && t.primary_key.iter().any(|c| c == column));
        pk || self.fks.iter().any(|fk| fk.child == table && fk.columns.iter().any(|c| c == column))
    }

    /// Wide-table columns that act as a key in some table.
    pub fn key_columns(&self) -> Vec<String> {
        let mut out = Vec::new();
        for t in &self.tables {
            for c in &t.columns {
                if self.is_key_column(&t.name, &c.name) && !out.contains(&c.name) {
                    out.push(c.name.clone());
                }
            }
        }
        out
    }
}

/// Verification mode for a ground truth.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CompareMode {
    FullSet,
    SubSet,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultSet {
    pub columns: Vec<String>,
    pub rows: Vec<Row>,
    /// Always false: no ORDER BY is generated.
    pub ordered: bool,
}

impl ResultSet {
    pub fn new(columns: Vec<String>, rows: Vec<Row>) -> Self {
        ResultSet { columns, rows, ordered: false }
    }

    /// Canonical text: header line, then rows sorted by their rendering.
    pub fn canonical_text(&self) -> String {
        let mut lines: Vec<String> = self
            .rows
            .iter()
            .map(|r| r.iter().map(Value::to_sql_literal).collect::<Vec<_>>().join("\t"))
            .collect();
        lines.sort();
        let mut out = self.columns.join("\t");
        out.push('\n');
        for l in lines {
            out.push_str(&l);
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RowDiff {
    /// Expected rows absent from the engine's answer.
    pub missing: Vec<Row>,
    /// Rows the engine returned beyond the expectation (FullSet only).
    pub extra: Vec<Row>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum CompareOutcome {
    Match,
    Mismatch(RowDiff),
}

impl CompareOutcome {
    pub fn is_match(&self) -> bool {
        matches!(self, CompareOutcome::Match)
    }
}

fn row_key(r: &Row) -> Vec<GroupKey> {
    r.iter().map(Value::group_key).collect()
}

/// Order-insensitive multiset comparison with NULL treated as identical to
/// NULL.
pub fn multiset_compare(got: &ResultSet, want: &ResultSet, mode: CompareMode) -> Result<CompareOutcome> {
    if got.columns.len() != want.columns.len() {
        return Err(Error::Compare(format!(
            "arity mismatch: engine returned {} columns, ground truth has {}",
            got.columns.len(),
            want.columns.len()
        )));
    }
    let mut counts: BTreeMap<Vec<GroupKey>, (Vec<&Row>, Vec<&Row>)> = BTreeMap::new();
    for r in &got.rows {
        counts.entry(row_key(r)).or_default().0.push(r);
    }
    for r in &want.rows {
        counts.entry(row_key(r)).or_default().1.push(r);
    }
    let mut diff = RowDiff::default();
    for (g, w) in counts.values() {
        if w.len() > g.len() {
            diff.missing.extend(w[g.len()..].iter().map(|r| (*r).clone()));
        } else if mode == CompareMode::FullSet && g.len() > w.len() {
            diff.extra.extend(g[w.len()..].iter().map(|r| (*r).clone()));
        }
    }
    if diff.missing.is_empty() && diff.extra.is_empty() {
        Ok(CompareOutcome::Match)
    } else {
        Ok(CompareOutcome::Mismatch(diff))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rs(rows: Vec<Vec<Value>>) -> ResultSet {
        let n = rows.first().map_or(1, Vec::len);
        ResultSet::new((0..n).map(|i| format!("c{i}")).collect(), rows)
    }

    #[test]
    fn order_insensitive_with_nulls() {
        let got = rs(vec![vec![Value::Int(1)], vec![Value::Null]]);
        let want = rs(vec![vec![Value::Null], vec![Value::Int(1)]]);
        assert!(multiset_compare(&got, &want, CompareMode::FullSet).unwrap().is_match());
    }

    #[test]
    fn empty_answer_misses_ground_truth() {
        let got = ResultSet::new(vec!["price".into()], vec![]);
        let want = rs(vec![vec![Value::Int(10)]]);
        match multiset_compare(&got, &want, CompareMode::FullSet).unwrap() {
            CompareOutcome::Mismatch(d) => {
                assert_eq!(d.missing, vec![vec![Value::Int(10)]]);
                assert!(d.extra.is_empty());
            }
            CompareOutcome::Match => panic!("expected mismatch"),
        }
    }

    #[test]
    fn subset_allows_superset_answer() {
        let got = rs(vec![vec![Value::Int(1)], vec![Value::Int(1)], vec![Value::Int(2)]]);
        let want = rs(vec![vec![Value::Int(1)], vec![Value::Int(2)]]);
        assert!(multiset_compare(&got, &want, CompareMode::SubSet).unwrap().is_match());
        assert!(!multiset_compare(&got, &want, CompareMode::FullSet).unwrap().is_match());
    }

    #[test]
    fn arity_mismatch_is_an_error() {
        let got = rs(vec![vec![Value::Int(1), Value::Int(2)]]);
        let want = rs(vec![vec![Value::Int(1)]]);
        assert!(multiset_compare(&got, &want, CompareMode::FullSet).is_err());
    }

    #[test]
    fn numeric_kinds_compare_by_value() {
        let got = rs(vec![vec![Value::Float(10.0)], vec![Value::Float(-0.0)]]);
        let want = rs(vec![vec![Value::Int(10)], vec![Value::Float(0.0)]]);
        assert!(multiset_compare(&got, &want, CompareMode::FullSet).unwrap().is_match());
    }

    #[test]
    fn csv_inference() {
        let data = "a,b,c\n1,2.5,x\nNULL,3,y\n";
        let t = WideTable::from_csv_reader(data.as_bytes()).unwrap();
        let tys: Vec<_> = t.columns.iter().map(|c| c.ty).collect();
        assert_eq!(tys, vec![ColumnType::Int, ColumnType::Float, ColumnType::Text]);
        assert_eq!(t.rows[1][0], Value::Null);
        assert_eq!(t.rows[1][1], Value::Float(3.0));
    }

    fn small_rows() -> impl Strategy<Value = Vec<Vec<Value>>> {
        let cell = prop_oneof![Just(Value::Null), (0i64..3).prop_map(Value::Int)];
        prop::collection::vec(prop::collection::vec(cell, 2), 0..6)
    }

    proptest! {
        #[test]
        fn full_set_comparison_is_symmetric(a in small_rows(), b in small_rows()) {
            let ra = ResultSet::new(vec!["x".into(), "y".into()], a);
            let rb = ResultSet::new(vec!["x".into(), "y".into()], b);
            let ab = multiset_compare(&ra, &rb, CompareMode::FullSet).unwrap().is_match();
            let ba = multiset_compare(&rb, &ra, CompareMode::FullSet).unwrap().is_match();
            prop_assert_eq!(ab, ba);
        }
    }
}
