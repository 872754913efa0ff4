//! Wide table → normalized test database.

pub mod ddl;
mod decompose;
mod fd;

pub use decompose::{decompose, design, materialize};
pub use fd::{discover_fds, holds};

use serde::{Deserialize, Serialize};

use crate::database::TestDatabase;
use crate::error::Result;
use crate::model::{multiset_compare, CompareMode, ResultSet, Row, WideTable};
use crate::value::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct NormalizeConfig {
    pub max_lhs: usize,
    pub max_columns: usize,
}

impl Default for NormalizeConfig {
    fn default() -> Self {
        NormalizeConfig { max_lhs: 3, max_columns: 24 }
    }
}

/// Discover FDs, lay out the schema, drop rows whose key columns are NULL or
/// boundary values, and populate the clean database.
pub fn normalize(wide: &WideTable, cfg: &NormalizeConfig) -> Result<TestDatabase> {
    let fds = discover_fds(wide, cfg.max_lhs, cfg.max_columns)?;
    let schema = design(wide, &fds)?;
    let clean = crate::noise::clean(wide, &schema);
    materialize(&schema, &clean)
}

/// Join every table along its foreign keys starting from the root and
/// compare the result, projected to the wide columns, with the wide table.
pub fn lossless_check(db: &TestDatabase) -> bool {
    let schema = &db.schema;
    let Some(root) = schema.tables.iter().position(|t| t.is_root) else {
        return db.wide.is_empty();
    };
    let wide_cols = db.wide.column_names();
    let slot = |name: &str| wide_cols.iter().position(|c| c == name).expect("table column in wide table");
    let mut joined: Vec<Vec<Option<Value>>> = db.data[root]
        .iter()
        .map(|r| {
            let mut t = vec![None; wide_cols.len()];
            for (c, v) in schema.tables[root].columns.iter().zip(r) {
                t[slot(&c.name)] = Some(v.clone());
            }
            t
        })
        .collect();
    let mut done = vec![schema.tables[root].name.clone()];
    while done.len() < schema.tables.len() {
        let Some(fk) = schema.fks.iter().find(|fk| done.contains(&fk.child) && !done.contains(&fk.parent)) else {
            return false;
        };
        let p = schema.table_index(&fk.parent).expect("fk parent exists");
        let ptable = &schema.tables[p];
        let mut next = Vec::new();
        for t in &joined {
            for prow in &db.data[p] {
                let matches = fk.columns.iter().all(|c| {
                    let pv = &prow[ptable.column_index(c).expect("fk column in parent")];
                    t[slot(c)].as_ref().is_some_and(|v| v.sql_equal(pv).is_true())
                });
                if matches {
                    let mut u = t.clone();
                    for (c, v) in ptable.columns.iter().zip(prow) {
                        u[slot(&c.name)] = Some(v.clone());
                    }
                    next.push(u);
                }
            }
        }
        joined = next;
        done.push(fk.parent.clone());
    }
    let rows: Vec<Row> = joined
        .into_iter()
        .map(|t| t.into_iter().map(|v| v.unwrap_or(Value::Null)).collect())
        .collect();
    let got = ResultSet::new(wide_cols.clone(), rows);
    let want = ResultSet::new(wide_cols, db.wide.rows.clone());
    multiset_compare(&got, &want, CompareMode::FullSet).is_ok_and(|o| o.is_match())
}
