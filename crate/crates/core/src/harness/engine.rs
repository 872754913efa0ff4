//! Engine adapters: the in-process reference engine and a fault-seeded
//! mutant of it.

use serde::{Deserialize, Serialize};
use sqlparser::ast::{ObjectType, SetExpr, Statement};

use crate::dialect::Dialect;
use crate::error::{Error, Result};
use crate::generator::parse::{literal, parse_query, parse_statements, TableInfo};
use crate::model::{Column, ResultSet};
use crate::oracle::{naive_execute, Catalog, CatalogTable, ExecOptions};
use crate::value::{ColumnType, Decimal, Value};

/// What an adapter supports.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Capabilities {
    /// Join syntax and type names follow this dialect.
    pub dialect: Dialect,
    /// `comment`, `session` or `none`.
    pub hint_mechanism: String,
}

pub trait Engine: Send {
    /// Spec string that reopens an equivalent engine.
    fn spec(&self) -> String;
    fn capabilities(&self) -> Capabilities;
    fn execute_ddl(&mut self, sql: &str) -> Result<()>;
    /// Returns the number of affected rows.
    fn execute_dml(&mut self, sql: &str) -> Result<usize>;
    /// Run the session statements, then the query.
    fn execute_query(&mut self, sql: &str, session: &[String]) -> Result<ResultSet>;
}

fn engine_err(e: impl std::fmt::Display) -> Error {
    Error::Engine(e.to_string())
}

fn column_type(sql_type: &str) -> Result<ColumnType> {
    let t = sql_type.to_ascii_uppercase();
    let base = t.split(['(', ' ']).next().unwrap_or_default();
    match base {
        "BIGINT" | "INT" | "INTEGER" | "SMALLINT" | "TINYINT" | "MEDIUMINT" => Ok(ColumnType::Int),
        "DECIMAL" | "NUMERIC" | "DEC" => Ok(ColumnType::Decimal),
        "DOUBLE" | "FLOAT" | "REAL" => Ok(ColumnType::Float),
        "TEXT" | "VARCHAR" | "CHAR" | "STRING" => Ok(ColumnType::Text),
        _ => Err(engine_err(format!("unsupported column type {sql_type}"))),
    }
}

/// Coerce an inserted literal to the column's type.
fn coerce(v: Value, ty: ColumnType) -> Result<Value> {
    Ok(match (v, ty) {
        (Value::Null, _) => Value::Null,
        (Value::Int(i), ColumnType::Float) => Value::Float(i as f64),
        (Value::Int(i), ColumnType::Decimal) => Value::Decimal(Decimal::new(i as i128, 0)),
        (Value::Decimal(d), ColumnType::Float) => Value::Float(d.to_f64()),
        (v @ Value::Int(_), ColumnType::Int)
        | (v @ Value::Decimal(_), ColumnType::Decimal)
        | (v @ Value::Float(_), ColumnType::Float)
        | (v @ Value::Text(_), ColumnType::Text) => v,
        (v, ty) => return Err(engine_err(format!("cannot store {v} in a {} column", ty.label()))),
    })
}

/// Nested-loop engine over SQL text. Hints and session statements are
/// accepted and ignored.
#[derive(Debug, Clone, Default)]
pub struct ReferenceEngine {
    pub catalog: Catalog,
    pub session: Vec<String>,
}

impl ReferenceEngine {
    pub fn new() -> Self {
        ReferenceEngine::default()
    }

    fn tables(&self) -> Vec<TableInfo> {
        self.catalog
            .tables
            .iter()
            .map(|t| TableInfo { name: t.name.clone(), columns: t.columns.iter().map(|c| c.name.clone()).collect() })
            .collect()
    }

    fn statement(&mut self, sql: &str) -> Result<usize> {
        let mut affected = 0;
        for stmt in parse_statements(sql)? {
            affected += self.apply(stmt)?;
        }
        Ok(affected)
    }

    fn apply(&mut self, stmt: Statement) -> Result<usize> {
        match stmt {
            Statement::CreateTable(ct) => {
                let name = ct.name.0.last().map(|i| i.value.clone()).unwrap_or_default();
                if self.catalog.table(&name).is_some() {
                    return Err(engine_err(format!("table {name} already exists")));
                }
                let columns = ct
                    .columns
                    .iter()
                    .map(|c| Ok(Column::new(c.name.value.clone(), column_type(&c.data_type.to_string())?)))
                    .collect::<Result<Vec<_>>>()?;
                self.catalog.tables.push(CatalogTable { name, columns, rows: Vec::new() });
                Ok(0)
            }
            Statement::Drop { object_type: ObjectType::Table, if_exists, names, .. } => {
                for n in names {
                    let name = n.0.last().map(|i| i.value.clone()).unwrap_or_default();
                    let before = self.catalog.tables.len();
                    self.catalog.tables.retain(|t| !t.name.eq_ignore_ascii_case(&name));
                    if before == self.catalog.tables.len() && !if_exists {
                        return Err(engine_err(format!("no table {name}")));
                    }
                }
                Ok(0)
            }
            Statement::Insert(ins) => {
                let name = ins.table_name.0.last().map(|i| i.value.clone()).unwrap_or_default();
                let table = self.catalog.table_mut(&name).ok_or_else(|| engine_err(format!("no table {name}")))?;
                let targets: Vec<usize> = if ins.columns.is_empty() {
                    (0..table.columns.len()).collect()
                } else {
                    ins.columns
                        .iter()
                        .map(|c| {
                            table.column_index(&c.value).ok_or_else(|| engine_err(format!("no column {name}.{c}")))
                        })
                        .collect::<Result<_>>()?
                };
                let Some(SetExpr::Values(values)) = ins.source.as_deref().map(|q| q.body.as_ref()) else {
                    return Err(engine_err("INSERT needs a VALUES list"));
                };
                let mut rows = Vec::with_capacity(values.rows.len());
                for exprs in &values.rows {
                    if exprs.len() != targets.len() {
                        return Err(engine_err(format!("INSERT INTO {name}: wrong number of values")));
                    }
                    let mut row = vec![Value::Null; table.columns.len()];
                    for (e, &c) in exprs.iter().zip(&targets) {
                        let v = literal(e).ok_or_else(|| engine_err(format!("not a literal: {e}")))?;
                        row[c] = coerce(v, table.columns[c].ty)?;
                    }
                    rows.push(row);
                }
                let n = rows.len();
                table.rows.extend(rows);
                Ok(n)
            }
            Statement::SetVariable { .. } => Ok(0),
            other => Err(engine_err(format!("unsupported statement: {other}"))),
        }
    }

    /// Run a query with explicit executor switches.
    pub fn query_with(&mut self, sql: &str, session: &[String], opts: &ExecOptions) -> Result<ResultSet> {
        self.session = session.to_vec();
        let ast = parse_query(sql, &self.tables())?;
        naive_execute(&ast, &self.catalog, opts)
    }
}

fn reference_options() -> ExecOptions {
    ExecOptions { max_rows: usize::MAX, ..ExecOptions::default() }
}

impl Engine for ReferenceEngine {
    fn spec(&self) -> String {
        "ref".into()
    }

    fn capabilities(&self) -> Capabilities {
        Capabilities { dialect: Dialect::Generic, hint_mechanism: "comment".into() }
    }

    fn execute_ddl(&mut self, sql: &str) -> Result<()> {
        self.statement(sql).map(|_| ())
    }

    fn execute_dml(&mut self, sql: &str) -> Result<usize> {
        self.statement(sql)
    }

    fn execute_query(&mut self, sql: &str, session: &[String]) -> Result<ResultSet> {
        self.query_with(sql, session, &reference_options())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Fault {
    /// Lose one matched row of an inner join, only under a hash-join hint.
    HashDrop,
    /// Compare floats by bit pattern, so `-0.0` and `0.0` differ.
    NegZero,
    /// Return NULL text as the empty string.
    NullEmpty,
    /// Compare text join keys through a lossy numeric conversion.
    LossyText,
}

impl Fault {
    pub const ALL: [Fault; 4] = [Fault::HashDrop, Fault::NegZero, Fault::NullEmpty, Fault::LossyText];

    pub fn name(self) -> &'static str {
        match self {
            Fault::HashDrop => "hash-drop",
            Fault::NegZero => "neg-zero",
            Fault::NullEmpty => "null-empty",
            Fault::LossyText => "lossy-text",
        }
    }

    pub fn parse(s: &str) -> Option<Fault> {
        Fault::ALL.into_iter().find(|f| f.name() == s)
    }
}

/// The reference engine with deliberate faults switched on.
#[derive(Debug, Clone, Default)]
pub struct MutantEngine {
    pub inner: ReferenceEngine,
    pub faults: Vec<Fault>,
}

impl MutantEngine {
    pub fn new(faults: &[Fault]) -> Self {
        let mut faults = faults.to_vec();
        faults.sort();
        faults.dedup();
        MutantEngine { inner: ReferenceEngine::new(), faults }
    }

    fn has(&self, f: Fault) -> bool {
        self.faults.contains(&f)
    }
}

/// A hash-join hint in a `/*+ */` comment or a session switch turning hash
/// joins on.
fn hash_mode(sql: &str, session: &[String]) -> bool {
    let hinted = sql
        .split("/*+")
        .skip(1)
        .filter_map(|rest| rest.split("*/").next())
        .any(|h| h.to_ascii_lowercase().split(|c: char| !c.is_alphanumeric() && c != '_').any(|w| w == "hash_join"));
    hinted || session.iter().any(|s| s.to_ascii_lowercase().replace(' ', "").contains("hash_join=on"))
}

impl Engine for MutantEngine {
    fn spec(&self) -> String {
        if self.faults.is_empty() {
            return "mutant:".into();
        }
        let names: Vec<&str> = self.faults.iter().map(|f| f.name()).collect();
        format!("mutant:{}", names.join(","))
    }

    fn capabilities(&self) -> Capabilities {
        self.inner.capabilities()
    }

    fn execute_ddl(&mut self, sql: &str) -> Result<()> {
        self.inner.execute_ddl(sql)
    }

    fn execute_dml(&mut self, sql: &str) -> Result<usize> {
        self.inner.execute_dml(sql)
    }

    fn execute_query(&mut self, sql: &str, session: &[String]) -> Result<ResultSet> {
        let opts = ExecOptions {
            neg_zero: self.has(Fault::NegZero),
            lossy_text: self.has(Fault::LossyText),
            drop_hash_match: self.has(Fault::HashDrop) && hash_mode(sql, session),
            null_empty: self.has(Fault::NullEmpty),
            ..reference_options()
        };
        self.inner.query_with(sql, session, &opts)
    }
}

/// Open an engine from its spec: `ref`, `mutant` (every fault),
/// `mutant:<fault>,<fault>` or `<dialect>:<dsn>` for a server.
pub fn open_engine(spec: &str) -> Result<Box<dyn Engine>> {
    match spec.split_once(':') {
        None if spec == "ref" || spec == "reference" => Ok(Box::new(ReferenceEngine::new())),
        None if spec == "mutant" => Ok(Box::new(MutantEngine::new(&Fault::ALL))),
        Some(("mutant", list)) => {
            let faults = list
                .split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(|s| Fault::parse(s).ok_or_else(|| Error::Config(format!("unknown fault {s}"))))
                .collect::<Result<Vec<_>>>()?;
            Ok(Box::new(MutantEngine::new(&faults)))
        }
        Some((dialect, _)) if Dialect::parse(dialect).is_some() => Err(Error::Engine(format!(
            "no client for {dialect} servers in this build; use ref or mutant engines"
        ))),
        _ => Err(Error::Config(format!("unknown engine {spec}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_mode_detection() {
        assert!(hash_mode("SELECT /*+ hash_join(T1, T2) */ * FROM T1", &[]));
        assert!(hash_mode("SELECT /*+ HASH_JOIN(T1) */ * FROM T1", &[]));
        assert!(!hash_mode("SELECT /*+ no_hash_join(T1) */ * FROM T1", &[]));
        assert!(!hash_mode("SELECT * FROM T1", &["SET optimizer_switch='hash_join=off'".into()]));
        assert!(hash_mode("SELECT * FROM T1", &["SET optimizer_switch = 'hash_join=on'".into()]));
    }

    #[test]
    fn engine_specs() {
        assert_eq!(open_engine("ref").unwrap().spec(), "ref");
        assert_eq!(open_engine("mutant").unwrap().spec(), "mutant:hash-drop,neg-zero,null-empty,lossy-text");
        assert_eq!(open_engine("mutant:null-empty,neg-zero").unwrap().spec(), "mutant:neg-zero,null-empty");
        assert!(open_engine("mutant:bogus").is_err());
        assert!(matches!(open_engine("mysql://localhost"), Err(Error::Engine(_))));
        assert!(open_engine("oracle").is_err());
    }
}
