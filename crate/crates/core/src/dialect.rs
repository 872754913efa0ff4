//! SQL dialect differences that matter for DDL and query text.

use serde::{Deserialize, Serialize};

use crate::value::ColumnType;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Dialect {
    Generic,
    MySql,
    MariaDb,
    TiDb,
}

impl Dialect {
    pub fn parse(s: &str) -> Option<Dialect> {
        match s.to_ascii_lowercase().as_str() {
            "generic" | "ref" | "reference" => Some(Dialect::Generic),
            "mysql" => Some(Dialect::MySql),
            "mariadb" => Some(Dialect::MariaDb),
            "tidb" => Some(Dialect::TiDb),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Dialect::Generic => "generic",
            Dialect::MySql => "mysql",
            Dialect::MariaDb => "mariadb",
            Dialect::TiDb => "tidb",
        }
    }

    /// MySQL-family servers have no FULL OUTER JOIN.
    pub fn supports_full_outer(self) -> bool {
        self == Dialect::Generic
    }

    pub fn type_name(self, ty: ColumnType) -> &'static str {
        match ty {
            ColumnType::Int => "BIGINT",
            ColumnType::Decimal => "DECIMAL(65,30)",
            ColumnType::Float => "DOUBLE",
            ColumnType::Text if self == Dialect::Generic => "TEXT",
            ColumnType::Text => "VARCHAR(512)",
        }
    }
}
