//! Hinted variants of a query from per-dialect rule files.

use serde::{Deserialize, Serialize};

use super::ast::QueryAst;
use crate::bitmap::algebra::JoinOp;
use crate::dialect::Dialect;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HintKind {
    /// `/*+ template */` right after `SELECT`.
    Comment,
    /// A statement run in the session before the query.
    Session,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HintRule {
    pub name: String,
    /// Join operator labels; the rule applies when the query uses any of
    /// them. Empty means every query.
    #[serde(default)]
    pub requires: Vec<String>,
    pub kind: HintKind,
    /// `{tables}` expands to the FROM tables, comma separated.
    pub template: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HintTable {
    #[serde(rename = "rule", default)]
    pub rules: Vec<HintRule>,
}

impl HintTable {
    pub fn from_toml(text: &str) -> Result<HintTable> {
        let table: HintTable = toml::from_str(text).map_err(|e| Error::Config(format!("hint file: {e}")))?;
        for r in &table.rules {
            if let Some(bad) = r.requires.iter().find(|l| JoinOp::from_label(l).is_none()) {
                return Err(Error::Config(format!("hint rule {}: unknown join kind {bad}", r.name)));
            }
        }
        Ok(table)
    }

    pub fn load(path: &std::path::Path) -> Result<HintTable> {
        HintTable::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn builtin(dialect: Dialect) -> HintTable {
        let text = match dialect {
            Dialect::Generic => include_str!("../../hints/generic.toml"),
            Dialect::MySql => include_str!("../../hints/mysql.toml"),
            Dialect::MariaDb => include_str!("../../hints/mariadb.toml"),
            Dialect::TiDb => include_str!("../../hints/tidb.toml"),
        };
        HintTable::from_toml(text).expect("built-in hint files parse")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HintVariant {
    pub label: String,
    pub sql: String,
    /// Statements to run in the session first.
    pub session: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HintedQuery {
    pub base: String,
    pub variants: Vec<HintVariant>,
}

impl HintedQuery {
    /// The base query (labelled `base`) followed by every variant.
    pub fn all(&self) -> Vec<HintVariant> {
        std::iter::once(HintVariant { label: "base".into(), sql: self.base.clone(), session: Vec::new() })
            .chain(self.variants.iter().cloned())
            .collect()
    }
}

fn insert_comment(sql: &str, hint: &str) -> String {
    match sql.strip_prefix("SELECT ") {
        Some(rest) => format!("SELECT /*+ {hint} */ {rest}"),
        None => sql.to_string(),
    }
}

pub fn hint_variants(sql: &str, ast: &QueryAst, hints: &HintTable) -> HintedQuery {
    let ops: Vec<&str> = ast.join_ops().into_iter().map(JoinOp::label).collect();
    let tables = ast.visible_tables().join(", ");
    let variants = hints
        .rules
        .iter()
        .filter(|r| r.requires.is_empty() || r.requires.iter().any(|l| ops.contains(&l.as_str())))
        .map(|r| {
            let text = r.template.replace("{tables}", &tables);
            match r.kind {
                HintKind::Comment => HintVariant { label: r.name.clone(), sql: insert_comment(sql, &text), session: Vec::new() },
                HintKind::Session => HintVariant { label: r.name.clone(), sql: sql.to_string(), session: vec![text] },
            }
        })
        .collect();
    HintedQuery { base: sql.to_string(), variants }
}
