//! AST → SQL text.

use super::ast::{Aggregate, ColumnRef, JoinKind, Predicate, Projection, QueryAst, SemiJoin, SubqueryForm};
use crate::dialect::Dialect;
use crate::error::{Error, Result};
use crate::model::{NormalizedSchema, ROWID_COLUMN};

fn qualified(c: &ColumnRef) -> String {
    format!("{}.{}", c.table, c.column)
}

fn predicate(p: &Predicate) -> String {
    match p {
        Predicate::Compare { col, op, value } => format!("{} {} {}", qualified(col), op.symbol(), value.to_sql_literal()),
        Predicate::IsNull { col, negated: false } => format!("{} IS NULL", qualified(col)),
        Predicate::IsNull { col, negated: true } => format!("{} IS NOT NULL", qualified(col)),
    }
}

fn equalities(left: &str, right: &str, cols: &[String]) -> Vec<String> {
    cols.iter().map(|c| format!("{left}.{c} = {right}.{c}")).collect()
}

fn semi(s: &SemiJoin) -> String {
    let mut conds: Vec<String> = Vec::new();
    let head = match s.form {
        SubqueryForm::In => {
            let c = &s.columns[0];
            format!("{}.{c} IN (SELECT {}.{c} FROM {}", s.outer, s.table, s.table)
        }
        SubqueryForm::Exists => {
            conds.extend(equalities(&s.table, &s.outer, &s.columns));
            let not = if s.anti { "NOT " } else { "" };
            format!("{not}EXISTS (SELECT * FROM {}", s.table)
        }
    };
    conds.extend(s.filters.iter().map(predicate));
    conds.extend(s.nested.iter().map(semi));
    if conds.is_empty() {
        format!("{head})")
    } else {
        format!("{head} WHERE {})", conds.join(" AND "))
    }
}

/// Render deterministically. Inner-join conditions go to WHERE when the
/// chain has only inner and cross joins; otherwise every join carries ON.
pub fn render_sql(ast: &QueryAst, schema: &NormalizedSchema, dialect: Dialect) -> Result<String> {
    if !dialect.supports_full_outer() && ast.joins.iter().any(|j| j.kind == JoinKind::Full) {
        return Err(Error::Unsupported(format!("{} has no FULL OUTER JOIN", dialect.name())));
    }
    if ast.semi.iter().any(|s| s.form == SubqueryForm::In && s.anti) {
        return Err(Error::Unsupported("anti joins render only as NOT EXISTS".into()));
    }
    let visible = ast.visible_tables();
    let column = |c: &ColumnRef| {
        let owners = visible
            .iter()
            .filter(|t| c.column == ROWID_COLUMN || schema.table(t).is_some_and(|d| d.has_column(&c.column)))
            .count();
        if owners == 1 {
            c.column.clone()
        } else {
            qualified(c)
        }
    };
    let select = match &ast.projection {
        Projection::Star => "*".to_string(),
        Projection::Columns(cs) => cs.iter().map(column).collect::<Vec<_>>().join(", "),
        Projection::Aggregates(aggs) => aggs
            .iter()
            .map(|Aggregate { func, arg }| match arg {
                None => format!("{}(*)", func.name()),
                Some(c) => format!("{}({})", func.name(), column(c)),
            })
            .collect::<Vec<_>>()
            .join(", "),
    };
    let where_form = ast.joins.iter().all(|j| matches!(j.kind, JoinKind::Inner | JoinKind::Cross));
    let mut from = ast.base.clone();
    let mut conds: Vec<String> = Vec::new();
    for j in &ast.joins {
        let kw = match j.kind {
            JoinKind::Inner => "INNER JOIN",
            JoinKind::Left => "LEFT JOIN",
            JoinKind::Right => "RIGHT JOIN",
            JoinKind::Full => "FULL OUTER JOIN",
            JoinKind::Cross => "CROSS JOIN",
        };
        from.push_str(&format!(" {kw} {}", j.table));
        if let Some(on) = &j.on {
            let eq = equalities(&on.partner, &j.table, &on.columns);
            if where_form {
                conds.extend(eq);
            } else {
                from.push_str(&format!(" ON {}", eq.join(" AND ")));
            }
        }
    }
    conds.extend(ast.filters.iter().map(predicate));
    conds.extend(ast.semi.iter().map(semi));
    let mut sql = format!("SELECT {select} FROM {from}");
    if !conds.is_empty() {
        sql.push_str(" WHERE ");
        sql.push_str(&conds.join(" AND "));
    }
    Ok(sql)
}
