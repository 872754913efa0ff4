//! The test database bundle: wide table, normalized tables, RowID map and
//! join bitmaps, kept in sync.

use serde::{Deserialize, Serialize};

use crate::bitmap::JoinBitmapIndex;
use crate::model::{NormalizedSchema, Row, WideTable, ROWID_COLUMN};
use crate::value::Value;

/// `entries[t][r]` is the row of table `t` that wide row `r` contributed to.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RowIdMap {
    pub entries: Vec<Vec<Option<u32>>>,
}

impl RowIdMap {
    pub fn new(tables: usize, rows: usize) -> Self {
        RowIdMap { entries: vec![vec![None; rows]; tables] }
    }

    pub fn get(&self, table: usize, wide_row: usize) -> Option<usize> {
        self.entries[table][wide_row].map(|j| j as usize)
    }

    pub fn set(&mut self, table: usize, wide_row: usize, row: Option<usize>) {
        self.entries[table][wide_row] = row.map(|j| j as u32);
    }

    /// Wide rows that map to row `j` of `table`, ascending.
    pub fn preimage(&self, table: usize, j: usize) -> Vec<usize> {
        self.entries[table]
            .iter()
            .enumerate()
            .filter(|(_, e)| **e == Some(j as u32))
            .map(|(r, _)| r)
            .collect()
    }

    pub fn push_row(&mut self, entries: &[Option<usize>]) {
        for (col, e) in self.entries.iter_mut().zip(entries) {
            col.push(e.map(|j| j as u32));
        }
    }
}

#[derive(Debug, Clone)]
pub struct TestDatabase {
    pub wide: WideTable,
    pub schema: NormalizedSchema,
    /// Rows per table over `TableDef::columns`; a row's RowID is its index.
    pub data: Vec<Vec<Row>>,
    pub rowmap: RowIdMap,
    pub bitmap: JoinBitmapIndex,
}

impl TestDatabase {
    pub fn table_count(&self) -> usize {
        self.schema.tables.len()
    }

    /// Rows of table `t` with the RowID prepended, as an engine stores them.
    pub fn materialized_rows(&self, t: usize) -> Vec<Row> {
        self.data[t]
            .iter()
            .enumerate()
            .map(|(j, r)| {
                let mut out = Vec::with_capacity(r.len() + 1);
                out.push(Value::Int(j as i64));
                out.extend(r.iter().cloned());
                out
            })
            .collect()
    }

    /// Column names of table `t` including the leading RowID column.
    pub fn materialized_columns(&self, t: usize) -> Vec<String> {
        std::iter::once(ROWID_COLUMN.to_string())
            .chain(self.schema.tables[t].columns.iter().map(|c| c.name.clone()))
            .collect()
    }

    /// Wide-column positions of table `t`'s data columns.
    pub fn wide_positions(&self, t: usize) -> Vec<usize> {
        self.schema.tables[t]
            .columns
            .iter()
            .map(|c| self.wide.column_index(&c.name).expect("table column exists in wide table"))
            .collect()
    }

    /// Check the map, the bitmaps, the wide table and the normalized rows
    /// against each other. Returns the first violation found.
    pub fn structural_check(&self) -> std::result::Result<(), String> {
        let n = self.wide.len();
        if self.bitmap.rows() != n && self.table_count() > 0 {
            return Err(format!("bitmap length {} != wide rows {n}", self.bitmap.rows()));
        }
        for t in 0..self.table_count() {
            let name = &self.schema.tables[t].name;
            if self.rowmap.entries[t].len() != n {
                return Err(format!("{name}: map has {} rows, wide table {n}", self.rowmap.entries[t].len()));
            }
            let pos = self.wide_positions(t);
            let bits = &self.bitmap.arrays[t];
            let mut covered = vec![false; self.data[t].len()];
            for r in 0..n {
                let entry = self.rowmap.get(t, r);
                if bits.get(r) != entry.is_some() {
                    return Err(format!("{name}: bit for wide row {r} disagrees with map"));
                }
                let Some(j) = entry else { continue };
                let Some(row) = self.data[t].get(j) else {
                    return Err(format!("{name}: wide row {r} maps to missing row {j}"));
                };
                covered[j] = true;
                for (k, p) in pos.iter().enumerate() {
                    if !self.wide.rows[r][*p].identical(&row[k]) {
                        return Err(format!(
                            "{name}: wide row {r} column {} = {} but row {j} has {}",
                            self.schema.tables[t].columns[k].name, self.wide.rows[r][*p], row[k]
                        ));
                    }
                }
            }
            if let Some(j) = covered.iter().position(|c| !c) {
                return Err(format!("{name}: row {j} has no wide-table provenance"));
            }
        }
        Ok(())
    }
}
