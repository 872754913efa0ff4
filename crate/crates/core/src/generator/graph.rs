//! Schema graph and the moves a walk may make over it.

use rand::seq::IndexedRandom;
use rand::Rng;

use super::walk::{Walk, WalkStep};
use crate::bitmap::algebra::JoinOp;
use crate::dialect::Dialect;
use crate::model::NormalizedSchema;
use crate::value::ColumnType;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColumnVertex {
    pub table: usize,
    pub name: String,
    pub ty: ColumnType,
}

/// Table vertices, one column vertex per (table, non-RowID column), fk edges
/// between tables and one membership edge per column vertex.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SchemaGraph {
    pub tables: Vec<String>,
    pub columns: Vec<ColumnVertex>,
    /// `(child, parent)` table vertex pairs.
    pub table_edges: Vec<(usize, usize)>,
}

pub fn build_schema_graph(schema: &NormalizedSchema) -> SchemaGraph {
    let tables: Vec<String> = schema.tables.iter().map(|t| t.name.clone()).collect();
    let columns = schema
        .tables
        .iter()
        .enumerate()
        .flat_map(|(i, t)| t.columns.iter().map(move |c| ColumnVertex { table: i, name: c.name.clone(), ty: c.ty }))
        .collect();
    let idx = |n: &str| tables.iter().position(|t| t == n).expect("fk names a schema table");
    let table_edges = schema.fks.iter().map(|fk| (idx(&fk.child), idx(&fk.parent))).collect();
    SchemaGraph { tables, columns, table_edges }
}

impl SchemaGraph {
    pub fn table_index(&self, name: &str) -> Option<usize> {
        self.tables.iter().position(|t| t == name)
    }

    pub fn neighbors(&self, t: usize) -> Vec<usize> {
        let mut out: Vec<usize> = self
            .table_edges
            .iter()
            .filter_map(|&(a, b)| if a == t { Some(b) } else if b == t { Some(a) } else { None })
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    pub fn column_vertices(&self, t: usize) -> impl Iterator<Item = &ColumnVertex> {
        self.columns.iter().filter(move |c| c.table == t)
    }
}

/// Limits on the moves a walk may make.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WalkRules {
    pub dialect: Dialect,
    pub max_subquery_depth: usize,
}

impl Default for WalkRules {
    fn default() -> Self {
        WalkRules { dialect: Dialect::Generic, max_subquery_depth: 2 }
    }
}

/// Where a walk stands after some steps.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WalkState {
    pub current: usize,
    pub tables: Vec<usize>,
    pub columns: Vec<(usize, String)>,
    /// Subquery nesting of `current`; 0 means a table in FROM.
    pub depth: usize,
    pub after_cross: bool,
}

impl WalkState {
    pub fn start(t: usize) -> Self {
        WalkState { current: t, tables: vec![t], columns: Vec::new(), depth: 0, after_cross: false }
    }

    pub fn apply(&mut self, g: &SchemaGraph, step: &WalkStep) {
        match step {
            WalkStep::Join { op, to, .. } => {
                let to = g.table_index(to).expect("step names a graph table");
                self.tables.push(to);
                self.current = to;
                match op {
                    JoinOp::Semi | JoinOp::Anti => self.depth += 1,
                    JoinOp::Cross => self.after_cross = true,
                    _ => {}
                }
            }
            WalkStep::Filter { table, column } => {
                let t = g.table_index(table).expect("step names a graph table");
                self.columns.push((t, column.clone()));
            }
        }
    }

    /// Every step allowed from here. Tables and column vertices are never
    /// revisited; inside a subquery only further semi/anti edges and
    /// filters remain.
    pub fn candidates(&self, g: &SchemaGraph, rules: &WalkRules) -> Vec<WalkStep> {
        let from = &g.tables[self.current];
        let mut out = Vec::new();
        for n in g.neighbors(self.current) {
            if self.tables.contains(&n) {
                continue;
            }
            for op in JoinOp::ALL {
                let allowed = match op {
                    JoinOp::Semi | JoinOp::Anti => self.depth < rules.max_subquery_depth,
                    _ if self.depth > 0 => false,
                    JoinOp::RightOuter => !self.after_cross,
                    JoinOp::FullOuter => !self.after_cross && rules.dialect.supports_full_outer(),
                    _ => true,
                };
                if allowed {
                    out.push(WalkStep::Join { op, from: from.clone(), to: g.tables[n].clone() });
                }
            }
        }
        for c in g.column_vertices(self.current) {
            if !self.columns.iter().any(|(t, n)| *t == self.current && *n == c.name) {
                out.push(WalkStep::Filter { table: from.clone(), column: c.name.clone() });
            }
        }
        out
    }
}

/// Uniform random walk: length drawn from `1..=max_len`, each step chosen
/// uniformly among the allowed moves; stops early at a dead end.
pub fn random_walk(g: &SchemaGraph, start: usize, max_len: usize, rules: &WalkRules, rng: &mut impl Rng) -> Walk {
    let len = rng.random_range(1..=max_len.max(1));
    let mut state = WalkState::start(start);
    let mut walk = Walk::single(g.tables[start].clone());
    for _ in 0..len {
        let options = state.candidates(g, rules);
        let Some(step) = options.choose(rng) else { break };
        state.apply(g, step);
        walk.steps.push(step.clone());
    }
    walk
}
