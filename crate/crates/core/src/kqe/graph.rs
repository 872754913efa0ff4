//! Plan-iterative graph and the query graphs walks and queries map to.

use crate::bitmap::algebra::JoinOp;
use crate::generator::graph::SchemaGraph;
use crate::generator::walk::{Walk, WalkStep};
use crate::value::ColumnType;

pub const TABLE_LABEL: &str = "table";
pub const FILTER_LABEL: &str = "filter";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Vertex {
    Table(usize),
    Column(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlanEdge {
    pub a: Vertex,
    pub b: Vertex,
    pub label: String,
}

/// The schema graph with one parallel edge per join operator between
/// fk-related tables and a `filter` edge per column vertex.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlanIterativeGraph {
    pub schema: SchemaGraph,
    pub edges: Vec<PlanEdge>,
}

impl PlanIterativeGraph {
    pub fn new(schema: SchemaGraph) -> Self {
        let mut edges = Vec::new();
        for &(a, b) in &schema.table_edges {
            for op in JoinOp::ALL {
                edges.push(PlanEdge { a: Vertex::Table(a), b: Vertex::Table(b), label: op.label().to_string() });
            }
        }
        for (i, c) in schema.columns.iter().enumerate() {
            edges.push(PlanEdge { a: Vertex::Table(c.table), b: Vertex::Column(i), label: FILTER_LABEL.to_string() });
        }
        PlanIterativeGraph { schema, edges }
    }

    pub fn vertex_label(&self, v: Vertex) -> &str {
        match v {
            Vertex::Table(_) => TABLE_LABEL,
            Vertex::Column(c) => self.schema.columns[c].ty.label(),
        }
    }

    pub fn join_operator_count(&self) -> usize {
        JoinOp::ALL.len()
    }
}

/// Small labeled graph. Edges are directed so that `a LEFT JOIN b` and
/// `b LEFT JOIN a` differ.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct QueryGraph {
    pub labels: Vec<String>,
    pub edges: Vec<(usize, usize, String)>,
}

impl QueryGraph {
    pub fn add_vertex(&mut self, label: &str) -> usize {
        self.labels.push(label.to_string());
        self.labels.len() - 1
    }

    pub fn add_edge(&mut self, a: usize, b: usize, label: &str) {
        self.edges.push((a, b, label.to_string()));
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Graph of the vertices and edges a walk visits.
    pub fn from_walk(walk: &Walk, g: &SchemaGraph) -> QueryGraph {
        let mut q = QueryGraph::default();
        let mut tables: Vec<(String, usize)> = vec![(walk.start.clone(), q.add_vertex(TABLE_LABEL))];
        for step in &walk.steps {
            q.push_step(step, g, &mut tables);
        }
        q
    }

    /// Append one walk step. `tables` maps table names to vertices.
    pub fn push_step(&mut self, step: &WalkStep, g: &SchemaGraph, tables: &mut Vec<(String, usize)>) {
        let vertex_of = |tables: &Vec<(String, usize)>, name: &str| tables.iter().find(|(n, _)| n == name).map(|(_, v)| *v);
        match step {
            WalkStep::Join { op, from, to } => {
                let a = vertex_of(tables, from).expect("walk leaves from a visited table");
                let b = self.add_vertex(TABLE_LABEL);
                tables.push((to.clone(), b));
                self.add_edge(a, b, op.label());
            }
            WalkStep::Filter { table, column } => {
                let a = vertex_of(tables, table).expect("filter on a visited table");
                let ty = g
                    .table_index(table)
                    .and_then(|t| g.column_vertices(t).find(|c| c.name == *column).map(|c| c.ty))
                    .unwrap_or(ColumnType::Int);
                let b = self.add_vertex(ty.label());
                self.add_edge(a, b, FILTER_LABEL);
            }
        }
    }
}
