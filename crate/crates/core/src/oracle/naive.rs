//! Textbook nested-loop executor over materialized tables. Serves as the
//! check on the ground-truth oracle and as the in-process engine.

use crate::database::TestDatabase;
use crate::error::{Error, Result};
use crate::generator::ast::{CmpOp, ColumnRef, JoinKind, Predicate, Projection, QueryAst, SemiJoin, SubqueryForm};
use crate::model::{Column, ResultSet, Row, ROWID_COLUMN};
use crate::value::{ColumnType, Comparison, Truth, Value};

use super::eval::{compare_truth, predicate_truth, project};

pub const DEFAULT_MAX_ROWS: usize = 1000;

/// Execution switches. Everything but `max_rows` is a deliberate fault used
/// to test the harness; all default to off.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExecOptions {
    pub max_rows: usize,
    /// Compare floats bitwise, so `-0.0 <> 0.0`.
    pub neg_zero: bool,
    /// Compare text join keys after a lossy numeric conversion.
    pub lossy_text: bool,
    /// Drop the last row produced by the first inner join.
    pub drop_hash_match: bool,
    /// Return NULL text cells as empty strings.
    pub null_empty: bool,
}

impl Default for ExecOptions {
    fn default() -> Self {
        ExecOptions { max_rows: DEFAULT_MAX_ROWS, neg_zero: false, lossy_text: false, drop_hash_match: false, null_empty: false }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CatalogTable {
    pub name: String,
    /// Declared columns, RowID included when the table has one.
    pub columns: Vec<Column>,
    pub rows: Vec<Row>,
}

impl CatalogTable {
    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name.eq_ignore_ascii_case(name))
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Catalog {
    pub tables: Vec<CatalogTable>,
}

impl Catalog {
    pub fn from_db(db: &TestDatabase) -> Self {
        let tables = (0..db.table_count())
            .map(|t| {
                let def = &db.schema.tables[t];
                CatalogTable {
                    name: def.name.clone(),
                    columns: std::iter::once(Column::new(ROWID_COLUMN, ColumnType::Int))
                        .chain(def.columns.iter().cloned())
                        .collect(),
                    rows: db.materialized_rows(t),
                }
            })
            .collect();
        Catalog { tables }
    }

    pub fn table(&self, name: &str) -> Option<&CatalogTable> {
        self.tables.iter().find(|t| t.name.eq_ignore_ascii_case(name))
    }

    pub fn table_mut(&mut self, name: &str) -> Option<&mut CatalogTable> {
        self.tables.iter_mut().find(|t| t.name.eq_ignore_ascii_case(name))
    }
}

fn lossy_number(v: &Value) -> f64 {
    match v {
        Value::Text(s) => s.trim().parse::<f64>().unwrap_or(0.0),
        other => other.as_f64().unwrap_or(0.0),
    }
}

fn comparison(a: &Value, b: &Value, opts: &ExecOptions) -> Comparison {
    match (a, b) {
        (Value::Float(x), Value::Float(y)) if opts.neg_zero => Comparison::Ordered(x.total_cmp(y)),
        _ => a.sql_compare(b),
    }
}

fn join_eq(a: &Value, b: &Value, opts: &ExecOptions) -> Truth {
    if opts.lossy_text && matches!((a, b), (Value::Text(_), Value::Text(_))) {
        return Truth::from_bool(lossy_number(a) == lossy_number(b));
    }
    compare_truth(CmpOp::Eq, comparison(a, b, opts))
}

fn filter_truth(p: &Predicate, v: &Value, opts: &ExecOptions) -> Truth {
    match p {
        Predicate::Compare { op, value, .. } if opts.neg_zero => compare_truth(*op, comparison(v, value, opts)),
        _ => predicate_truth(p, v),
    }
}

struct Exec<'a> {
    catalog: &'a Catalog,
    opts: &'a ExecOptions,
}

impl<'a> Exec<'a> {
    fn table(&self, name: &str) -> Result<&'a CatalogTable> {
        let t = self.catalog.table(name).ok_or_else(|| Error::Engine(format!("no table {name}")))?;
        if t.rows.len() > self.opts.max_rows {
            return Err(Error::Unsupported(format!(
                "{name} has {} rows; the nested-loop executor stops at {}",
                t.rows.len(),
                self.opts.max_rows
            )));
        }
        Ok(t)
    }

    fn column(&self, t: &CatalogTable, name: &str) -> Result<usize> {
        t.column_index(name).ok_or_else(|| Error::Engine(format!("no column {}.{name}", t.name)))
    }

    fn semi_truth(&self, s: &SemiJoin, outer: &CatalogTable, outer_row: Option<&Row>) -> Result<Truth> {
        let inner = self.table(&s.table)?;
        let mut outer_vals = Vec::new();
        let mut inner_cols = Vec::new();
        for c in &s.columns {
            let oc = self.column(outer, c)?;
            outer_vals.push(outer_row.map_or(Value::Null, |r| r[oc].clone()));
            inner_cols.push(self.column(inner, c)?);
        }
        let mut filter_cols = Vec::new();
        for f in &s.filters {
            filter_cols.push(self.column(inner, &f.column().column)?);
        }
        let qualifies = |row: &Row| -> Result<Truth> {
            let mut t = Truth::True;
            for (f, c) in s.filters.iter().zip(&filter_cols) {
                t = t.and(filter_truth(f, &row[*c], self.opts));
            }
            for n in &s.nested {
                t = t.and(self.semi_truth(n, inner, Some(row))?);
            }
            Ok(t)
        };
        let mut result = Truth::False;
        for row in &inner.rows {
            let t = match s.form {
                SubqueryForm::Exists => {
                    let mut t = Truth::True;
                    for (v, c) in outer_vals.iter().zip(&inner_cols) {
                        t = t.and(join_eq(&row[*c], v, self.opts));
                    }
                    if t == Truth::False {
                        continue;
                    }
                    // EXISTS sees only rows whose whole WHERE is true.
                    Truth::from_bool(t.and(qualifies(row)?).is_true())
                }
                SubqueryForm::In => {
                    if !qualifies(row)?.is_true() {
                        continue;
                    }
                    join_eq(&outer_vals[0], &row[inner_cols[0]], self.opts)
                }
            };
            result = result.or(t);
            if result == Truth::True {
                break;
            }
        }
        Ok(if s.anti { result.not() } else { result })
    }
}

/// Evaluate `ast` by nested loops with SQL three-valued logic.
pub fn naive_execute(ast: &QueryAst, catalog: &Catalog, opts: &ExecOptions) -> Result<ResultSet> {
    let ex = Exec { catalog, opts };
    let names = ast.visible_tables();
    let vis: Vec<&CatalogTable> = names.iter().map(|n| ex.table(n)).collect::<Result<_>>()?;
    let position = |name: &str| {
        names
            .iter()
            .position(|n| n.eq_ignore_ascii_case(name))
            .ok_or_else(|| Error::Engine(format!("table {name} is not in FROM")))
    };

    let mut tuples: Vec<Vec<Option<usize>>> = (0..vis[0].rows.len()).map(|j| vec![Some(j)]).collect();
    let mut dropped = false;
    for (i, step) in ast.joins.iter().enumerate() {
        let right = vis[i + 1];
        let cond = match &step.on {
            None => None,
            Some(on) => {
                let p = position(&on.partner)?;
                let mut cols = Vec::new();
                for c in &on.columns {
                    cols.push((ex.column(vis[p], c)?, ex.column(right, c)?));
                }
                Some((p, cols))
            }
        };
        let mut next = Vec::new();
        let mut right_matched = vec![false; right.rows.len()];
        for t in &tuples {
            let mut any = false;
            for (rj, rrow) in right.rows.iter().enumerate() {
                let ok = match &cond {
                    None => true,
                    Some((p, cols)) => match t[*p] {
                        None => false,
                        Some(pj) => {
                            let prow = &vis[*p].rows[pj];
                            cols.iter()
                                .fold(Truth::True, |acc, (pc, rc)| acc.and(join_eq(&prow[*pc], &rrow[*rc], opts)))
                                .is_true()
                        }
                    },
                };
                if ok {
                    any = true;
                    right_matched[rj] = true;
                    let mut n = t.clone();
                    n.push(Some(rj));
                    next.push(n);
                }
            }
            if !any && matches!(step.kind, JoinKind::Left | JoinKind::Full) {
                let mut n = t.clone();
                n.push(None);
                next.push(n);
            }
        }
        if matches!(step.kind, JoinKind::Right | JoinKind::Full) {
            for (rj, m) in right_matched.iter().enumerate() {
                if !m {
                    let mut n = vec![None; i + 1];
                    n.push(Some(rj));
                    next.push(n);
                }
            }
        }
        if step.kind == JoinKind::Inner && opts.drop_hash_match && !dropped && next.len() >= 2 {
            next.pop();
            dropped = true;
        }
        tuples = next;
    }

    let lookup = |c: &ColumnRef| -> Result<(usize, usize)> {
        let p = position(&c.table)?;
        Ok((p, ex.column(vis[p], &c.column)?))
    };
    let value = |t: &[Option<usize>], (p, ci): (usize, usize)| -> Value {
        t[p].map_or(Value::Null, |j| vis[p].rows[j][ci].clone())
    };

    let mut filters = Vec::new();
    for f in &ast.filters {
        filters.push((f, lookup(f.column())?));
    }
    let mut semis = Vec::new();
    for s in &ast.semi {
        semis.push((s, position(&s.outer)?));
    }
    let mut kept = Vec::new();
    for t in tuples {
        let mut truth = Truth::True;
        for (f, at) in &filters {
            truth = truth.and(filter_truth(f, &value(&t, *at), opts));
        }
        if truth == Truth::False {
            continue;
        }
        for (s, p) in &semis {
            let outer_row = t[*p].map(|j| &vis[*p].rows[j]);
            truth = truth.and(ex.semi_truth(s, vis[*p], outer_row)?);
        }
        if truth.is_true() {
            kept.push(t);
        }
    }

    let star: Vec<ColumnRef> = vis
        .iter()
        .zip(&names)
        .flat_map(|(t, n)| t.columns.iter().map(move |c| ColumnRef::new(*n, c.name.clone())))
        .collect();
    // Resolve every referenced column up front so projection cannot fail.
    let mut resolved: Vec<(ColumnRef, (usize, usize), ColumnType)> = Vec::new();
    let referenced: Vec<&ColumnRef> = match &ast.projection {
        Projection::Star => star.iter().collect(),
        Projection::Columns(cs) => cs.iter().collect(),
        Projection::Aggregates(aggs) => aggs.iter().filter_map(|a| a.arg.as_ref()).collect(),
    };
    for c in referenced {
        let at = lookup(c)?;
        resolved.push((c.clone(), at, vis[at.0].columns[at.1].ty));
    }
    let aggregated = matches!(ast.projection, Projection::Aggregates(_));
    project(&ast.projection, &star, &kept, |t, c| {
        let (_, at, ty) = resolved.iter().find(|(r, _, _)| r == c).expect("resolved above");
        let v = value(t, *at);
        if opts.null_empty && !aggregated && v.is_null() && *ty == ColumnType::Text {
            Value::Text(String::new())
        } else {
            v
        }
    })
}

/// Nested-loop evaluation against the bundle's materialized tables.
pub fn naive_execute_db(ast: &QueryAst, db: &TestDatabase) -> Result<ResultSet> {
    naive_execute(ast, &Catalog::from_db(db), &ExecOptions::default())
}
