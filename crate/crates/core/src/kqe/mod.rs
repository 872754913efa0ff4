//! Coverage-guided query exploration: walks are steered away from query
//! graphs that resemble what has already been generated.

pub mod embed;
pub mod explore;
pub mod graph;
pub mod index;

pub use embed::{cosine, embed, wl_hash, EMBED_DIM};
pub use explore::{adaptive_random_walk, coverage, run_epoch, transition_probability, WalkParams};
pub use graph::{PlanIterativeGraph, QueryGraph};
pub use index::GraphIndex;
