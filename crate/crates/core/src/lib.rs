//! Ground-truth logic-bug detection for multi-table join optimization.
//!
//! A wide table is decomposed into a snowflake of normalized tables whose
//! rows keep their provenance through RowIDs and a join bitmap index. Join
//! queries generated over that schema get their exact answer from the
//! bitmap, so an engine's result can be checked without a second engine.

pub mod bitmap;
pub mod database;
pub mod dialect;
pub mod error;
pub mod fixture;
pub mod generator;
pub mod harness;
pub mod kqe;
pub mod model;
pub mod noise;
pub mod normalizer;
pub mod oracle;
pub mod value;

pub use error::{Error, Result};
