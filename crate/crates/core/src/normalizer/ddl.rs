//! DDL and data scripts for a test database.

use crate::database::TestDatabase;
use crate::dialect::Dialect;
use crate::model::ROWID_COLUMN;
use crate::value::Value;

const INSERT_CHUNK: usize = 256;

/// One `CREATE TABLE` per table. Keys are declared only when `constraints`
/// is set; otherwise they stay implicit in the metadata. Declared foreign
/// keys reject noisy data unless the engine skips FK checks.
pub fn create_statements(db: &TestDatabase, dialect: Dialect, constraints: bool) -> Vec<String> {
    db.schema
        .tables
        .iter()
        .map(|t| {
            let mut parts = vec![format!("{ROWID_COLUMN} BIGINT NOT NULL")];
            for c in &t.columns {
                parts.push(format!("{} {}", c.name, dialect.type_name(c.ty)));
            }
            if constraints {
                parts.push(format!("PRIMARY KEY ({ROWID_COLUMN})"));
                if !t.is_root {
                    parts.push(format!("UNIQUE ({})", t.primary_key.join(", ")));
                }
                for fk in db.schema.fks.iter().filter(|fk| fk.child == t.name) {
                    let cols = fk.columns.join(", ");
                    parts.push(format!("FOREIGN KEY ({cols}) REFERENCES {}({cols})", fk.parent));
                }
            }
            format!("CREATE TABLE {} ({})", t.name, parts.join(", "))
        })
        .collect()
}

/// Multi-row `INSERT` statements for every table, RowID first.
pub fn insert_statements(db: &TestDatabase) -> Vec<String> {
    let mut out = Vec::new();
    for (ti, t) in db.schema.tables.iter().enumerate() {
        let cols = db.materialized_columns(ti).join(", ");
        for chunk in db.materialized_rows(ti).chunks(INSERT_CHUNK) {
            let values: Vec<String> = chunk
                .iter()
                .map(|r| format!("({})", r.iter().map(Value::to_sql_literal).collect::<Vec<_>>().join(", ")))
                .collect();
            out.push(format!("INSERT INTO {} ({cols}) VALUES {}", t.name, values.join(", ")));
        }
    }
    out
}

pub fn drop_statements(db: &TestDatabase) -> Vec<String> {
    db.schema.tables.iter().rev().map(|t| format!("DROP TABLE IF EXISTS {}", t.name)).collect()
}

/// Full reproduction script: drops, creates and inserts, one statement per
/// line terminated by `;`.
pub fn script(db: &TestDatabase, dialect: Dialect, constraints: bool) -> String {
    let mut out = String::new();
    for s in drop_statements(db)
        .into_iter()
        .chain(create_statements(db, dialect, constraints))
        .chain(insert_statements(db))
    {
        out.push_str(&s);
        out.push_str(";\n");
    }
    out
}
