//! Schema graph, walks → AST, SQL rendering, parsing and hint variants.

pub mod ast;
pub mod graph;
pub mod hints;
pub mod parse;
pub mod render;
pub mod walk;
