//! SQL text → AST for the shapes this crate generates.

use sqlparser::ast::{
    self as sql, BinaryOperator, Expr, FunctionArg, FunctionArgExpr, FunctionArguments, JoinConstraint, JoinOperator,
    SelectItem, SetExpr, Statement, TableFactor, UnaryOperator,
};
use sqlparser::dialect::MySqlDialect;
use sqlparser::parser::Parser;

use super::ast::{
    AggFunc, Aggregate, CmpOp, ColumnRef, JoinCond, JoinKind, JoinStep, Predicate, Projection, QueryAst, SemiJoin,
    SubqueryForm,
};
use crate::error::{Error, Result};
use crate::value::{parse_numeric_literal, Value};

/// Name and column list (RowID included) of a table the parser can resolve
/// unqualified names against.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TableInfo {
    pub name: String,
    pub columns: Vec<String>,
}

impl TableInfo {
    pub fn from_schema(schema: &crate::model::NormalizedSchema) -> Vec<TableInfo> {
        schema
            .tables
            .iter()
            .map(|t| TableInfo {
                name: t.name.clone(),
                columns: std::iter::once(crate::model::ROWID_COLUMN.to_string())
                    .chain(t.columns.iter().map(|c| c.name.clone()))
                    .collect(),
            })
            .collect()
    }
}

fn unsupported<T>(what: impl std::fmt::Display) -> Result<T> {
    Err(Error::Unsupported(what.to_string()))
}

pub fn parse_statements(text: &str) -> Result<Vec<Statement>> {
    Parser::parse_sql(&MySqlDialect {}, text).map_err(|e| Error::Parse(e.to_string()))
}

pub fn parse_query(text: &str, tables: &[TableInfo]) -> Result<QueryAst> {
    let mut stmts = parse_statements(text)?;
    if stmts.len() != 1 {
        return unsupported("expected exactly one statement");
    }
    match stmts.remove(0) {
        Statement::Query(q) => query_ast(&q, tables),
        other => unsupported(format!("not a query: {other}")),
    }
}

fn object_name(n: &sql::ObjectName) -> String {
    n.0.last().map(|i| i.value.clone()).unwrap_or_default()
}

fn table_name(f: &TableFactor) -> Result<String> {
    match f {
        TableFactor::Table { name, alias: None, args: None, .. } => Ok(object_name(name)),
        other => unsupported(format!("table factor {other}")),
    }
}

fn select_of(q: &sql::Query) -> Result<&sql::Select> {
    if q.with.is_some() || q.order_by.is_some() || q.limit.is_some() || q.offset.is_some() {
        return unsupported("WITH/ORDER BY/LIMIT");
    }
    match q.body.as_ref() {
        SetExpr::Select(s) => {
            if s.distinct.is_some() || s.having.is_some() || !matches!(s.group_by, sql::GroupByExpr::Expressions(ref e, _) if e.is_empty()) {
                return unsupported("DISTINCT/GROUP BY/HAVING");
            }
            Ok(s)
        }
        other => unsupported(format!("query body {other}")),
    }
}

struct Scope<'a> {
    tables: &'a [TableInfo],
    visible: Vec<String>,
}

impl Scope<'_> {
    fn column(&self, e: &Expr) -> Result<ColumnRef> {
        match e {
            Expr::CompoundIdentifier(parts) if parts.len() == 2 => {
                let t = &parts[0].value;
                if !self.visible.contains(t) {
                    return unsupported(format!("table {t} not in scope"));
                }
                Ok(ColumnRef::new(t.clone(), parts[1].value.clone()))
            }
            Expr::Identifier(id) => {
                let owners: Vec<&String> = self
                    .visible
                    .iter()
                    .filter(|t| self.tables.iter().any(|i| &i.name == *t && i.columns.contains(&id.value)))
                    .collect();
                match owners.as_slice() {
                    [t] => Ok(ColumnRef::new((*t).clone(), id.value.clone())),
                    [] => unsupported(format!("unknown column {}", id.value)),
                    _ => unsupported(format!("ambiguous column {}", id.value)),
                }
            }
            Expr::Nested(inner) => self.column(inner),
            other => unsupported(format!("expected a column, got {other}")),
        }
    }
}

pub(crate) fn literal(e: &Expr) -> Option<Value> {
    match e {
        Expr::Value(sql::Value::Number(n, _)) => parse_numeric_literal(n),
        Expr::Value(sql::Value::SingleQuotedString(s)) => Some(Value::Text(s.clone())),
        Expr::Value(sql::Value::Null) => Some(Value::Null),
        Expr::UnaryOp { op: UnaryOperator::Minus, expr } => match expr.as_ref() {
            Expr::Value(sql::Value::Number(n, _)) => parse_numeric_literal(&format!("-{n}")),
            _ => None,
        },
        Expr::Nested(inner) => literal(inner),
        _ => None,
    }
}

fn conjuncts(e: &Expr, out: &mut Vec<Expr>) {
    match e {
        Expr::BinaryOp { left, op: BinaryOperator::And, right } => {
            conjuncts(left, out);
            conjuncts(right, out);
        }
        Expr::Nested(inner) if matches!(inner.as_ref(), Expr::BinaryOp { op: BinaryOperator::And, .. }) => {
            conjuncts(inner, out)
        }
        other => out.push(other.clone()),
    }
}

fn cmp_op(op: &BinaryOperator) -> Option<CmpOp> {
    Some(match op {
        BinaryOperator::Eq => CmpOp::Eq,
        BinaryOperator::NotEq => CmpOp::Ne,
        BinaryOperator::Lt => CmpOp::Lt,
        BinaryOperator::LtEq => CmpOp::Le,
        BinaryOperator::Gt => CmpOp::Gt,
        BinaryOperator::GtEq => CmpOp::Ge,
        _ => return None,
    })
}

fn flip(op: CmpOp) -> CmpOp {
    match op {
        CmpOp::Lt => CmpOp::Gt,
        CmpOp::Le => CmpOp::Ge,
        CmpOp::Gt => CmpOp::Lt,
        CmpOp::Ge => CmpOp::Le,
        o => o,
    }
}

enum Conjunct {
    ColumnEq(ColumnRef, ColumnRef),
    Filter(Predicate),
    Semi(SemiJoin),
}

/// Classify a WHERE conjunct. `inner` scope resolves columns; `outer` is the
/// scope correlated column references may point to.
fn conjunct(e: &Expr, scope: &Scope, outer: Option<&Scope>) -> Result<Conjunct> {
    let resolve = |x: &Expr| scope.column(x).or_else(|err| outer.map_or(Err(err), |o| o.column(x)));
    match e {
        Expr::BinaryOp { left, op, right } => {
            let Some(op) = cmp_op(op) else { return unsupported(format!("operator {op}")) };
            if let Some(v) = literal(right) {
                return Ok(Conjunct::Filter(Predicate::Compare { col: scope.column(left)?, op, value: v }));
            }
            if let Some(v) = literal(left) {
                return Ok(Conjunct::Filter(Predicate::Compare { col: scope.column(right)?, op: flip(op), value: v }));
            }
            if op != CmpOp::Eq {
                return unsupported("non-equi column comparison");
            }
            Ok(Conjunct::ColumnEq(resolve(left)?, resolve(right)?))
        }
        Expr::IsNull(x) => Ok(Conjunct::Filter(Predicate::IsNull { col: scope.column(x)?, negated: false })),
        Expr::IsNotNull(x) => Ok(Conjunct::Filter(Predicate::IsNull { col: scope.column(x)?, negated: true })),
        Expr::InSubquery { expr, subquery, negated } => {
            if *negated {
                return unsupported("NOT IN subquery");
            }
            let outer_col = scope.column(expr)?;
            let s = subquery_ast(subquery, scope.tables, &outer_col.table, Some(&outer_col), false)?;
            Ok(Conjunct::Semi(s))
        }
        Expr::Exists { subquery, negated } => {
            let s = subquery_ast(subquery, scope.tables, "", None, *negated)?;
            Ok(Conjunct::Semi(s))
        }
        Expr::Nested(inner) => conjunct(inner, scope, outer),
        other => unsupported(format!("predicate {other}")),
    }
}

/// Parse `(SELECT .. FROM T WHERE ..)`; the correlation determines the outer
/// table for EXISTS.
fn subquery_ast(
    q: &sql::Query,
    tables: &[TableInfo],
    outer_table: &str,
    in_column: Option<&ColumnRef>,
    anti: bool,
) -> Result<SemiJoin> {
    let sel = select_of(q)?;
    let [twj] = sel.from.as_slice() else { return unsupported("subquery over several tables") };
    if !twj.joins.is_empty() {
        return unsupported("join inside subquery");
    }
    let table = table_name(&twj.relation)?;
    let scope = Scope { tables, visible: vec![table.clone()] };
    // Outer references resolve against every known table; the scope check
    // happens when the caller validates the AST.
    let outer_scope = Scope { tables, visible: tables.iter().map(|t| t.name.clone()).filter(|t| *t != table).collect() };
    let mut columns = Vec::new();
    let mut outer = outer_table.to_string();
    let form = match in_column {
        Some(c) => {
            let [SelectItem::UnnamedExpr(e)] = sel.projection.as_slice() else {
                return unsupported("IN subquery must select one column");
            };
            let inner = scope.column(e)?;
            if inner.column != c.column {
                return unsupported("IN subquery column differs from outer column");
            }
            columns.push(c.column.clone());
            SubqueryForm::In
        }
        None => {
            if !matches!(sel.projection.as_slice(), [SelectItem::Wildcard(_)]) {
                return unsupported("EXISTS subquery must select *");
            }
            SubqueryForm::Exists
        }
    };
    let mut filters = Vec::new();
    let mut nested = Vec::new();
    let mut parts = Vec::new();
    if let Some(w) = &sel.selection {
        conjuncts(w, &mut parts);
    }
    for p in &parts {
        match conjunct(p, &scope, Some(&outer_scope))? {
            Conjunct::Filter(f) => filters.push(f),
            Conjunct::Semi(mut s) => {
                if s.outer.is_empty() || s.outer == table {
                    s.outer = table.clone();
                    nested.push(s);
                } else {
                    return unsupported("nested subquery correlated past its parent");
                }
            }
            Conjunct::ColumnEq(a, b) => {
                let (inner, other) = if a.table == table { (a, b) } else { (b, a) };
                if inner.table != table || other.table == table || inner.column != other.column {
                    return unsupported("subquery correlation must be an fk equality");
                }
                if !outer.is_empty() && outer != other.table {
                    return unsupported("subquery correlated with two tables");
                }
                outer = other.table.clone();
                columns.push(inner.column.clone());
            }
        }
    }
    if columns.is_empty() {
        return unsupported("uncorrelated subquery");
    }
    Ok(SemiJoin { anti, form, outer, table, columns, filters, nested })
}

fn query_ast(q: &sql::Query, tables: &[TableInfo]) -> Result<QueryAst> {
    let sel = select_of(q)?;
    let [twj] = sel.from.as_slice() else { return unsupported("comma joins") };
    let base = table_name(&twj.relation)?;
    let mut scope = Scope { tables, visible: vec![base.clone()] };
    let mut joins: Vec<JoinStep> = Vec::new();
    for j in &twj.joins {
        let table = table_name(&j.relation)?;
        scope.visible.push(table.clone());
        let (kind, constraint) = match &j.join_operator {
            JoinOperator::Inner(c) => (JoinKind::Inner, Some(c)),
            JoinOperator::LeftOuter(c) => (JoinKind::Left, Some(c)),
            JoinOperator::RightOuter(c) => (JoinKind::Right, Some(c)),
            JoinOperator::FullOuter(c) => (JoinKind::Full, Some(c)),
            JoinOperator::CrossJoin => (JoinKind::Cross, None),
            other => return unsupported(format!("join operator {other:?}")),
        };
        let on = match constraint {
            None | Some(JoinConstraint::None) => None,
            Some(JoinConstraint::On(e)) => {
                let mut parts = Vec::new();
                conjuncts(e, &mut parts);
                Some(join_cond(&parts, &scope, &table)?)
            }
            Some(other) => return unsupported(format!("join constraint {other:?}")),
        };
        if on.is_none() && kind != JoinKind::Cross && kind != JoinKind::Inner {
            return unsupported("outer join without ON");
        }
        joins.push(JoinStep { kind, table, on });
    }
    let mut parts = Vec::new();
    if let Some(w) = &sel.selection {
        conjuncts(w, &mut parts);
    }
    let mut filters = Vec::new();
    let mut semi = Vec::new();
    let mut pending: Vec<(ColumnRef, ColumnRef)> = Vec::new();
    for p in &parts {
        match conjunct(p, &scope, None)? {
            Conjunct::Filter(f) => filters.push(f),
            Conjunct::Semi(s) => semi.push(s),
            Conjunct::ColumnEq(a, b) => pending.push((a, b)),
        }
    }
    // Inner joins written without ON take their condition from WHERE: each
    // equality belongs to the later of its two tables.
    let order: Vec<String> = std::iter::once(base.clone()).chain(joins.iter().map(|j| j.table.clone())).collect();
    let pos = |t: &str| order.iter().position(|o| o == t);
    for j in joins.iter_mut().filter(|j| j.kind == JoinKind::Inner && j.on.is_none()) {
        let later = |(a, b): &(ColumnRef, ColumnRef)| pos(&a.table).max(pos(&b.table)) == pos(&j.table);
        let mine: Vec<(ColumnRef, ColumnRef)> = pending.iter().filter(|e| later(e)).cloned().collect();
        pending.retain(|e| !later(e));
        let mut partner: Option<String> = None;
        let mut columns = Vec::new();
        for (a, b) in mine {
            let (other, own) = if b.table == j.table { (a, b) } else { (b, a) };
            if other.column != own.column || partner.as_ref().is_some_and(|p| *p != other.table) {
                return unsupported("WHERE join condition is not an fk equality");
            }
            partner = Some(other.table.clone());
            columns.push(own.column);
        }
        let Some(partner) = partner else { return unsupported(format!("INNER JOIN {} without condition", j.table)) };
        j.on = Some(JoinCond { partner, columns });
    }
    if !pending.is_empty() {
        return unsupported("column equality outside a join condition");
    }
    let projection = projection(&sel.projection, &scope)?;
    Ok(QueryAst { base, joins, filters, semi, projection })
}

fn join_cond(parts: &[Expr], scope: &Scope, table: &str) -> Result<JoinCond> {
    let mut partner: Option<String> = None;
    let mut columns = Vec::new();
    for p in parts {
        let Expr::BinaryOp { left, op: BinaryOperator::Eq, right } = p else {
            return unsupported(format!("ON condition {p}"));
        };
        let a = scope.column(left)?;
        let b = scope.column(right)?;
        let (other, own) = if b.table == table { (a, b) } else { (b, a) };
        if own.table != table || other.column != own.column || partner.as_ref().is_some_and(|x| *x != other.table) {
            return unsupported("ON condition is not an fk equality");
        }
        partner = Some(other.table);
        columns.push(own.column);
    }
    match partner {
        Some(partner) => Ok(JoinCond { partner, columns }),
        None => unsupported("empty ON condition"),
    }
}

fn projection(items: &[SelectItem], scope: &Scope) -> Result<Projection> {
    if let [SelectItem::Wildcard(_)] = items {
        return Ok(Projection::Star);
    }
    let mut cols = Vec::new();
    let mut aggs = Vec::new();
    for item in items {
        let SelectItem::UnnamedExpr(e) = item else { return unsupported(format!("select item {item}")) };
        match e {
            Expr::Function(f) => {
                let func = match object_name(&f.name).to_ascii_uppercase().as_str() {
                    "COUNT" => AggFunc::Count,
                    "SUM" => AggFunc::Sum,
                    "MIN" => AggFunc::Min,
                    "MAX" => AggFunc::Max,
                    other => return unsupported(format!("function {other}")),
                };
                let FunctionArguments::List(list) = &f.args else { return unsupported("function arguments") };
                if list.duplicate_treatment.is_some() || f.filter.is_some() || f.over.is_some() {
                    return unsupported("aggregate modifiers");
                }
                let arg = match list.args.as_slice() {
                    [FunctionArg::Unnamed(FunctionArgExpr::Wildcard)] if func == AggFunc::Count => None,
                    [FunctionArg::Unnamed(FunctionArgExpr::Expr(x))] => Some(scope.column(x)?),
                    _ => return unsupported("aggregate arguments"),
                };
                aggs.push(Aggregate { func, arg });
            }
            other => cols.push(scope.column(other)?),
        }
    }
    match (cols.is_empty(), aggs.is_empty()) {
        (false, true) => Ok(Projection::Columns(cols)),
        (true, false) => Ok(Projection::Aggregates(aggs)),
        _ => unsupported("mixed aggregate and plain select items"),
    }
}
