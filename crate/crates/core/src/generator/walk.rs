//! Expanding a schema walk into a full query AST.

use rand::seq::IndexedRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::ast::{
    AggFunc, Aggregate, CmpOp, ColumnRef, JoinCond, JoinKind, JoinStep, Predicate, Projection, QueryAst, SemiJoin,
    SubqueryForm,
};
use crate::bitmap::algebra::JoinOp;
use crate::database::TestDatabase;
use crate::error::{Error, Result};
use crate::model::ROWID_COLUMN;
use crate::noise::boundary_values;
use crate::value::{ColumnType, Value};

/// Probabilities and limits for the parts of a query the walk does not fix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenConfig {
    /// Chance of one extra predicate per visible table.
    pub filter_prob: f64,
    /// Chance of adding an fk-correlated IN/EXISTS subquery when the walk
    /// produced none.
    pub subquery_prob: f64,
    pub aggregate_prob: f64,
    pub max_subquery_depth: usize,
    /// Share of predicate constants drawn from the column's own values; the
    /// rest come from the boundary catalog.
    pub domain_constant_prob: f64,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            filter_prob: 0.3,
            subquery_prob: 0.15,
            aggregate_prob: 0.2,
            max_subquery_depth: 2,
            domain_constant_prob: 0.8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum WalkStep {
    /// Traverse an fk edge from `from` to `to` with a join operator.
    Join { op: JoinOp, from: String, to: String },
    /// Traverse a table–column edge; the walk stays at `table`.
    Filter { table: String, column: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Walk {
    pub start: String,
    pub steps: Vec<WalkStep>,
}

impl Walk {
    pub fn single(start: impl Into<String>) -> Self {
        Walk { start: start.into(), steps: Vec::new() }
    }
}

fn column_type(db: &TestDatabase, table: &str, column: &str) -> Option<ColumnType> {
    if column == ROWID_COLUMN {
        return Some(ColumnType::Int);
    }
    db.schema.table(table)?.column_type(column)
}

/// A random predicate on `table.column`.
pub fn random_predicate(db: &TestDatabase, table: &str, column: &str, cfg: &GenConfig, rng: &mut impl Rng) -> Predicate {
    let col = ColumnRef::new(table, column);
    let ty = column_type(db, table, column).unwrap_or(ColumnType::Text);
    if rng.random_bool(0.1) {
        return Predicate::IsNull { col, negated: rng.random_bool(0.5) };
    }
    let ops: &[CmpOp] = if ty == ColumnType::Text { &[CmpOp::Eq, CmpOp::Ne] } else { &CmpOp::ALL };
    let op = *ops.choose(rng).expect("non-empty");
    let domain: Vec<Value> = match (db.schema.table_index(table), db.schema.table(table).and_then(|t| t.column_index(column))) {
        (Some(t), Some(c)) => db.data[t].iter().map(|r| r[c].clone()).filter(|v| !v.is_null()).collect(),
        _ => Vec::new(),
    };
    let value = if !domain.is_empty() && rng.random_bool(cfg.domain_constant_prob) {
        domain.choose(rng).expect("non-empty").clone()
    } else {
        let catalog = boundary_values(ty, 4, 10);
        catalog.choose(rng).expect("catalog is non-empty").clone()
    };
    Predicate::Compare { col, op, value }
}

struct Builder {
    ast: QueryAst,
    /// Path of indices into the semi-join tree for the current hidden table.
    hidden: Vec<usize>,
}

impl Builder {
    fn semi_at(&mut self, path: &[usize]) -> &mut SemiJoin {
        let mut node = &mut self.ast.semi[path[0]];
        for &i in &path[1..] {
            node = &mut node.nested[i];
        }
        node
    }

    fn current_table(&mut self) -> String {
        if self.hidden.is_empty() {
            self.ast.visible_tables().last().expect("base exists").to_string()
        } else {
            let path = self.hidden.clone();
            self.semi_at(&path).table.clone()
        }
    }
}

/// Turn a walk into a query. Join edges become join steps, semi/anti edges
/// become correlated subqueries (after which the walk is inside the
/// subquery), filter edges become predicates; the select list, extra
/// predicates, aggregates and an optional subquery are drawn from `cfg`.
pub fn walk_to_ast(walk: &Walk, db: &TestDatabase, cfg: &GenConfig, rng: &mut impl Rng) -> Result<QueryAst> {
    let schema = &db.schema;
    if schema.table(&walk.start).is_none() {
        return Err(Error::Generate(format!("walk starts at unknown table {}", walk.start)));
    }
    let mut b = Builder { ast: QueryAst::single(walk.start.clone()), hidden: Vec::new() };
    let mut filtered: Vec<ColumnRef> = Vec::new();
    for step in &walk.steps {
        match step {
            WalkStep::Join { op, from, to } => {
                if b.current_table() != *from {
                    return Err(Error::Generate(format!("walk step leaves from {from}, not the current table")));
                }
                let fk = schema
                    .fk_between(from, to)
                    .ok_or_else(|| Error::Generate(format!("{from} - {to} is not an fk edge")))?;
                let columns = fk.columns.clone();
                match JoinKind::from_op(*op) {
                    Some(kind) => {
                        if !b.hidden.is_empty() {
                            return Err(Error::Generate("join edge inside a subquery".into()));
                        }
                        let on = (kind != JoinKind::Cross).then(|| JoinCond { partner: from.clone(), columns });
                        b.ast.joins.push(JoinStep { kind, table: to.clone(), on });
                    }
                    None => {
                        let anti = *op == JoinOp::Anti;
                        let form = if !anti && columns.len() == 1 && rng.random_bool(0.5) {
                            SubqueryForm::In
                        } else {
                            SubqueryForm::Exists
                        };
                        let node = SemiJoin {
                            anti,
                            form,
                            outer: from.clone(),
                            table: to.clone(),
                            columns,
                            filters: Vec::new(),
                            nested: Vec::new(),
                        };
                        if b.hidden.is_empty() {
                            b.ast.semi.push(node);
                            b.hidden = vec![b.ast.semi.len() - 1];
                        } else {
                            if b.hidden.len() >= cfg.max_subquery_depth {
                                return Err(Error::Generate("subquery nesting too deep".into()));
                            }
                            let path = b.hidden.clone();
                            let parent = b.semi_at(&path);
                            parent.nested.push(node);
                            let i = parent.nested.len() - 1;
                            b.hidden.push(i);
                        }
                    }
                }
            }
            WalkStep::Filter { table, column } => {
                if b.current_table() != *table {
                    return Err(Error::Generate(format!("filter on {table}, not the current table")));
                }
                let p = random_predicate(db, table, column, cfg, rng);
                filtered.push(ColumnRef::new(table.clone(), column.clone()));
                if b.hidden.is_empty() {
                    b.ast.filters.push(p);
                } else {
                    let path = b.hidden.clone();
                    b.semi_at(&path).filters.push(p);
                }
            }
        }
    }
    let mut ast = b.ast;
    let visible: Vec<String> = ast.visible_tables().iter().map(|s| s.to_string()).collect();

    for t in &visible {
        if !rng.random_bool(cfg.filter_prob) {
            continue;
        }
        let def = schema.table(t).expect("visible table exists");
        let free: Vec<&str> = def
            .columns
            .iter()
            .map(|c| c.name.as_str())
            .filter(|c| !filtered.iter().any(|f| f.table == *t && f.column == *c))
            .collect();
        if let Some(c) = free.choose(rng) {
            ast.filters.push(random_predicate(db, t, c, cfg, rng));
            filtered.push(ColumnRef::new(t.clone(), *c));
        }
    }

    if ast.semi.is_empty() && cfg.max_subquery_depth > 0 && rng.random_bool(cfg.subquery_prob) {
        let used: Vec<String> = ast.all_tables().iter().map(|s| s.to_string()).collect();
        let options: Vec<(&String, &crate::model::ForeignKey)> = visible
            .iter()
            .flat_map(|t| schema.fks.iter().filter(move |fk| fk.child == *t || fk.parent == *t).map(move |fk| (t, fk)))
            .filter(|(t, fk)| {
                let other = if fk.child == **t { &fk.parent } else { &fk.child };
                !used.contains(other)
            })
            .collect();
        if let Some((t, fk)) = options.choose(rng) {
            let other = if fk.child == **t { fk.parent.clone() } else { fk.child.clone() };
            let anti = rng.random_bool(0.5);
            let form = if !anti && fk.columns.len() == 1 && rng.random_bool(0.5) {
                SubqueryForm::In
            } else {
                SubqueryForm::Exists
            };
            ast.semi.push(SemiJoin {
                anti,
                form,
                outer: (*t).clone(),
                table: other,
                columns: fk.columns.clone(),
                filters: Vec::new(),
                nested: Vec::new(),
            });
        }
    }

    let all_columns: Vec<ColumnRef> = visible
        .iter()
        .flat_map(|t| {
            let def = schema.table(t).expect("visible table exists");
            std::iter::once(ColumnRef::new(t.clone(), ROWID_COLUMN))
                .chain(def.columns.iter().map(move |c| ColumnRef::new(t.clone(), c.name.clone())))
        })
        .collect();
    ast.projection = if !ast.has_cross() && rng.random_bool(cfg.aggregate_prob) {
        let n = rng.random_range(1..=2);
        let aggs = (0..n)
            .map(|_| {
                let func = *[AggFunc::Count, AggFunc::Sum, AggFunc::Min, AggFunc::Max].choose(rng).expect("non-empty");
                let candidates: Vec<&ColumnRef> = all_columns
                    .iter()
                    .filter(|c| match func {
                        AggFunc::Sum => matches!(
                            column_type(db, &c.table, &c.column),
                            Some(ColumnType::Int | ColumnType::Decimal)
                        ),
                        _ => c.column != ROWID_COLUMN || func == AggFunc::Count,
                    })
                    .collect();
                match candidates.choose(rng) {
                    Some(c) if !(func == AggFunc::Count && rng.random_bool(0.4)) => {
                        Aggregate { func, arg: Some((*c).clone()) }
                    }
                    _ => Aggregate { func: AggFunc::Count, arg: None },
                }
            })
            .collect();
        Projection::Aggregates(aggs)
    } else if rng.random_bool(0.2) {
        Projection::Star
    } else {
        let data_columns: Vec<&ColumnRef> = all_columns.iter().filter(|c| c.column != ROWID_COLUMN).collect();
        let pool = if data_columns.is_empty() || rng.random_bool(0.1) { all_columns.iter().collect() } else { data_columns };
        let n = rng.random_range(1..=3.min(pool.len()));
        Projection::Columns(pool.choose_multiple(rng, n).map(|c| (*c).clone()).collect())
    };
    ast.validate(schema)?;
    Ok(ast)
}
