//! Ground truth from the wide table, plus the nested-loop executor it is
//! checked against.
//!
//! The wide table is the only input to [`ground_truth`]. Each normalized
//! row is read back from a wide row that maps to it, and two rows of
//! fk-related tables join exactly when some wide row maps to both. The
//! result is assembled join by join over row identities, so duplicates,
//! NULL-extended sides and aggregate inputs come out right without looking
//! at the normalized tables themselves.

pub mod eval;
pub mod naive;

use std::collections::HashMap;

use crate::bitmap::algebra::ground_truth_bitmap;
use crate::bitmap::BitArray;
use crate::database::TestDatabase;
use crate::error::{Error, Result};
use crate::generator::ast::{ColumnRef, JoinKind, QueryAst, SemiJoin};
use crate::model::{CompareMode, ResultSet, Row, ROWID_COLUMN};
use crate::value::{Truth, Value};

pub use naive::{naive_execute, naive_execute_db, Catalog, CatalogTable, ExecOptions};

#[derive(Debug, Clone)]
pub struct GroundTruth {
    pub result: ResultSet,
    /// `SubSet` iff the query has a cross join.
    pub mode: CompareMode,
    /// Wide rows selected by the join bitmap expression.
    pub provenance: BitArray,
}

/// Rows of every table as recovered from the wide table, and for each fk
/// pair the rows of one table that co-occur with each row of the other.
struct WideView {
    rows: Vec<Vec<Row>>,
    pairs: HashMap<(usize, usize), Vec<Vec<u32>>>,
}

impl WideView {
    fn new(db: &TestDatabase) -> Result<Self> {
        let mut rows = Vec::with_capacity(db.table_count());
        for t in 0..db.table_count() {
            let pos = db.wide_positions(t);
            let mut table: Vec<Option<Row>> = Vec::new();
            for r in db.bitmap.arrays[t].iter_ones() {
                let j = db.rowmap.get(t, r).ok_or_else(|| {
                    Error::Index(format!("{}: bit set for wide row {r} without a map entry", db.schema.tables[t].name))
                })?;
                if j >= table.len() {
                    table.resize(j + 1, None);
                }
                if table[j].is_none() {
                    table[j] = Some(pos.iter().map(|p| db.wide.rows[r][*p].clone()).collect());
                }
            }
            let table = table
                .into_iter()
                .enumerate()
                .map(|(j, r)| {
                    r.ok_or_else(|| {
                        Error::Index(format!("{} row {j} has no wide-table provenance", db.schema.tables[t].name))
                    })
                })
                .collect::<Result<Vec<Row>>>()?;
            rows.push(table);
        }
        Ok(WideView { rows, pairs: HashMap::new() })
    }

    fn prepare(&mut self, db: &TestDatabase, a: usize, b: usize) {
        if self.pairs.contains_key(&(a, b)) {
            return;
        }
        let mut co: Vec<Vec<u32>> = vec![Vec::new(); self.rows[a].len()];
        for r in 0..db.wide.len() {
            if let (Some(x), Some(y)) = (db.rowmap.get(a, r), db.rowmap.get(b, r)) {
                co[x].push(y as u32);
            }
        }
        for c in &mut co {
            c.sort_unstable();
            c.dedup();
        }
        self.pairs.insert((a, b), co);
    }

    fn partners(&self, a: usize, row: Option<usize>, b: usize) -> &[u32] {
        match row {
            Some(x) => &self.pairs[&(a, b)][x],
            None => &[],
        }
    }

    fn value(&self, db: &TestDatabase, t: usize, row: Option<usize>, column: &str) -> Value {
        let Some(j) = row else { return Value::Null };
        if column == ROWID_COLUMN {
            return Value::Int(j as i64);
        }
        match db.schema.tables[t].column_index(column) {
            Some(c) => self.rows[t][j][c].clone(),
            None => Value::Null,
        }
    }
}

fn table_index(db: &TestDatabase, name: &str) -> Result<usize> {
    db.schema.table_index(name).ok_or_else(|| Error::Unsupported(format!("unknown table {name}")))
}

fn prepare_semi(view: &mut WideView, db: &TestDatabase, s: &SemiJoin) -> Result<()> {
    view.prepare(db, table_index(db, &s.outer)?, table_index(db, &s.table)?);
    for n in &s.nested {
        prepare_semi(view, db, n)?;
    }
    Ok(())
}

fn semi_holds(view: &WideView, db: &TestDatabase, s: &SemiJoin, outer_row: Option<usize>) -> Result<bool> {
    let o = table_index(db, &s.outer)?;
    let t = table_index(db, &s.table)?;
    let mut exists = false;
    for &b in view.partners(o, outer_row, t) {
        let b = Some(b as usize);
        let mut truth = Truth::True;
        for f in &s.filters {
            truth = truth.and(eval::predicate_truth(f, &view.value(db, t, b, &f.column().column)));
        }
        if !truth.is_true() {
            continue;
        }
        let mut nested = true;
        for n in &s.nested {
            if !semi_holds(view, db, n, b)? {
                nested = false;
                break;
            }
        }
        if nested {
            exists = true;
            break;
        }
    }
    Ok(exists != s.anti)
}

/// Exact answer of `ast` on `db` (a subset of it when cross joins are
/// involved), computed from the wide table.
pub fn ground_truth(ast: &QueryAst, db: &TestDatabase) -> Result<GroundTruth> {
    ast.validate(&db.schema).map_err(|e| Error::Unsupported(e.to_string()))?;
    let (provenance, _) = ground_truth_bitmap(&db.bitmap, &ast.bitmap_expr(&db.schema)?)?;
    let mode = if ast.has_cross() { CompareMode::SubSet } else { CompareMode::FullSet };

    let mut view = WideView::new(db)?;
    let names = ast.visible_tables();
    let vis: Vec<usize> = names.iter().map(|n| table_index(db, n)).collect::<Result<_>>()?;
    let position = |name: &str| {
        names.iter().position(|n| *n == name).ok_or_else(|| Error::Unsupported(format!("{name} is not in FROM")))
    };

    // Partner position in the chain for each join step.
    let mut partner = Vec::with_capacity(ast.joins.len());
    for (i, j) in ast.joins.iter().enumerate() {
        let p = match (&j.on, j.kind) {
            (Some(on), _) => position(&on.partner)?,
            (None, JoinKind::Cross) => position(
                ast.cross_partner(i, &db.schema)
                    .ok_or_else(|| Error::Unsupported(format!("cross join to {} has no fk partner", j.table)))?,
            )?,
            (None, _) => return Err(Error::Unsupported(format!("join to {} has no condition", j.table))),
        };
        view.prepare(db, vis[p], vis[i + 1]);
        partner.push(p);
    }
    for s in &ast.semi {
        prepare_semi(&mut view, db, s)?;
    }

    let mut tuples: Vec<Vec<Option<usize>>> = (0..view.rows[vis[0]].len()).map(|j| vec![Some(j)]).collect();
    for (i, j) in ast.joins.iter().enumerate() {
        let (a, b, p) = (vis[partner[i]], vis[i + 1], partner[i]);
        let mut next = Vec::new();
        let mut reached = vec![false; view.rows[b].len()];
        for t in &tuples {
            let matches = view.partners(a, t[p], b);
            for &m in matches {
                reached[m as usize] = true;
                let mut n = t.clone();
                n.push(Some(m as usize));
                next.push(n);
            }
            if matches.is_empty() && matches!(j.kind, JoinKind::Left | JoinKind::Full) {
                let mut n = t.clone();
                n.push(None);
                next.push(n);
            }
        }
        if matches!(j.kind, JoinKind::Right | JoinKind::Full) {
            for (m, r) in reached.iter().enumerate() {
                if !r {
                    let mut n = vec![None; i + 1];
                    n.push(Some(m));
                    next.push(n);
                }
            }
        }
        tuples = next;
    }

    let mut filters = Vec::new();
    for f in &ast.filters {
        filters.push((f, position(&f.column().table)?));
    }
    let mut semis = Vec::new();
    for s in &ast.semi {
        semis.push((s, position(&s.outer)?));
    }
    let mut kept = Vec::new();
    'tuples: for t in tuples {
        let mut truth = Truth::True;
        for (f, p) in &filters {
            truth = truth.and(eval::predicate_truth(f, &view.value(db, vis[*p], t[*p], &f.column().column)));
        }
        if !truth.is_true() {
            continue;
        }
        for (s, p) in &semis {
            if !semi_holds(&view, db, s, t[*p])? {
                continue 'tuples;
            }
        }
        kept.push(t);
    }

    let star: Vec<ColumnRef> = names
        .iter()
        .zip(&vis)
        .flat_map(|(n, t)| {
            std::iter::once(ColumnRef::new(*n, ROWID_COLUMN))
                .chain(db.schema.tables[*t].columns.iter().map(move |c| ColumnRef::new(*n, c.name.clone())))
        })
        .collect();
    let result = eval::project(&ast.projection, &star, &kept, |t, c| {
        let p = names.iter().position(|n| *n == c.table).expect("validated column reference");
        view.value(db, vis[p], t[p], &c.column)
    })?;
    Ok(GroundTruth { result, mode, provenance })
}
