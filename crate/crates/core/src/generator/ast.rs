//! Query AST: a left-deep join chain, WHERE predicates, fk-correlated
//! IN/EXISTS subqueries and a select list.

use serde::{Deserialize, Serialize};

use crate::bitmap::algebra::{JoinBitmapExpr, JoinOp};
use crate::error::{Error, Result};
use crate::model::{NormalizedSchema, ROWID_COLUMN};
use crate::value::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum JoinKind {
    Inner,
    Left,
    Right,
    Full,
    Cross,
}

impl JoinKind {
    pub fn op(self) -> JoinOp {
        match self {
            JoinKind::Inner => JoinOp::Inner,
            JoinKind::Left => JoinOp::LeftOuter,
            JoinKind::Right => JoinOp::RightOuter,
            JoinKind::Full => JoinOp::FullOuter,
            JoinKind::Cross => JoinOp::Cross,
        }
    }

    pub fn from_op(op: JoinOp) -> Option<JoinKind> {
        match op {
            JoinOp::Inner => Some(JoinKind::Inner),
            JoinOp::LeftOuter => Some(JoinKind::Left),
            JoinOp::RightOuter => Some(JoinKind::Right),
            JoinOp::FullOuter => Some(JoinKind::Full),
            JoinOp::Cross => Some(JoinKind::Cross),
            JoinOp::Semi | JoinOp::Anti => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ColumnRef {
    pub table: String,
    pub column: String,
}

impl ColumnRef {
    pub fn new(table: impl Into<String>, column: impl Into<String>) -> Self {
        ColumnRef { table: table.into(), column: column.into() }
    }
}

/// Equi-join on shared fk columns between an earlier table and the joined one.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JoinCond {
    pub partner: String,
    pub columns: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JoinStep {
    pub kind: JoinKind,
    pub table: String,
    /// `None` only for cross joins.
    pub on: Option<JoinCond>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    pub const ALL: [CmpOp; 6] = [CmpOp::Eq, CmpOp::Ne, CmpOp::Lt, CmpOp::Le, CmpOp::Gt, CmpOp::Ge];

    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "=",
            CmpOp::Ne => "<>",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Predicate {
    Compare { col: ColumnRef, op: CmpOp, value: Value },
    IsNull { col: ColumnRef, negated: bool },
}

impl Predicate {
    pub fn column(&self) -> &ColumnRef {
        match self {
            Predicate::Compare { col, .. } | Predicate::IsNull { col, .. } => col,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SubqueryForm {
    In,
    Exists,
}

/// `outer.cols [NOT] IN/EXISTS (SELECT .. FROM table WHERE ..)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SemiJoin {
    pub anti: bool,
    pub form: SubqueryForm,
    pub outer: String,
    pub table: String,
    pub columns: Vec<String>,
    pub filters: Vec<Predicate>,
    pub nested: Vec<SemiJoin>,
}

impl SemiJoin {
    pub fn depth(&self) -> usize {
        1 + self.nested.iter().map(SemiJoin::depth).max().unwrap_or(0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AggFunc {
    Count,
    Sum,
    Min,
    Max,
}

impl AggFunc {
    pub fn name(self) -> &'static str {
        match self {
            AggFunc::Count => "COUNT",
            AggFunc::Sum => "SUM",
            AggFunc::Min => "MIN",
            AggFunc::Max => "MAX",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Aggregate {
    pub func: AggFunc,
    /// `None` means `COUNT(*)`.
    pub arg: Option<ColumnRef>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Projection {
    Star,
    Columns(Vec<ColumnRef>),
    Aggregates(Vec<Aggregate>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryAst {
    pub base: String,
    pub joins: Vec<JoinStep>,
    pub filters: Vec<Predicate>,
    pub semi: Vec<SemiJoin>,
    pub projection: Projection,
}

impl QueryAst {
    pub fn single(table: impl Into<String>) -> Self {
        QueryAst { base: table.into(), joins: Vec::new(), filters: Vec::new(), semi: Vec::new(), projection: Projection::Star }
    }

    /// Tables in the FROM clause, in join order.
    pub fn visible_tables(&self) -> Vec<&str> {
        std::iter::once(self.base.as_str()).chain(self.joins.iter().map(|j| j.table.as_str())).collect()
    }

    pub fn has_cross(&self) -> bool {
        self.joins.iter().any(|j| j.kind == JoinKind::Cross)
    }

    pub fn has_outer_right_or_full(&self) -> bool {
        self.joins.iter().any(|j| matches!(j.kind, JoinKind::Right | JoinKind::Full))
    }

    /// All join operators present, subqueries included.
    pub fn join_ops(&self) -> Vec<JoinOp> {
        fn walk(s: &SemiJoin, out: &mut Vec<JoinOp>) {
            out.push(if s.anti { JoinOp::Anti } else { JoinOp::Semi });
            for n in &s.nested {
                walk(n, out);
            }
        }
        let mut out: Vec<JoinOp> = self.joins.iter().map(|j| j.kind.op()).collect();
        for s in &self.semi {
            walk(s, &mut out);
        }
        out
    }

    /// Every table referenced, subqueries included.
    pub fn all_tables(&self) -> Vec<&str> {
        fn walk<'a>(s: &'a SemiJoin, out: &mut Vec<&'a str>) {
            out.push(&s.table);
            for n in &s.nested {
                walk(n, out);
            }
        }
        let mut out = self.visible_tables();
        for s in &self.semi {
            walk(s, &mut out);
        }
        out
    }

    /// The table a cross join at position `i` is tied to: the most recently
    /// joined table sharing an fk edge with it.
    pub fn cross_partner<'a>(&'a self, i: usize, schema: &NormalizedSchema) -> Option<&'a str> {
        let before = &self.visible_tables()[..=i];
        before.iter().rev().copied().find(|p| schema.fk_between(p, &self.joins[i].table).is_some())
    }

    /// Left-deep chain for the bitmap fold: visible joins, then top-level
    /// subqueries as semi/anti steps.
    pub fn bitmap_expr(&self, schema: &NormalizedSchema) -> Result<JoinBitmapExpr> {
        let idx = |t: &str| schema.table_index(t).ok_or_else(|| Error::Unsupported(format!("unknown table {t}")));
        let mut steps = Vec::new();
        for j in &self.joins {
            steps.push((j.kind.op(), idx(&j.table)?));
        }
        for s in &self.semi {
            steps.push((if s.anti { JoinOp::Anti } else { JoinOp::Semi }, idx(&s.table)?));
        }
        Ok(JoinBitmapExpr { first: idx(&self.base)?, steps })
    }

    /// Check that every reference resolves and joins follow fk edges.
    pub fn validate(&self, schema: &NormalizedSchema) -> Result<()> {
        let err = |m: String| Err(Error::Generate(m));
        let has_col = |t: &str, c: &str| {
            c == ROWID_COLUMN || schema.table(t).is_some_and(|d| d.has_column(c))
        };
        let mut seen: Vec<&str> = vec![self.base.as_str()];
        if schema.table(&self.base).is_none() {
            return err(format!("unknown table {}", self.base));
        }
        let mut after_cross = false;
        for j in &self.joins {
            if schema.table(&j.table).is_none() || seen.contains(&j.table.as_str()) {
                return err(format!("bad join table {}", j.table));
            }
            match (&j.on, j.kind) {
                (None, JoinKind::Cross) => {
                    if !seen.iter().any(|p| schema.fk_between(p, &j.table).is_some()) {
                        return err(format!("cross join to {} has no fk partner", j.table));
                    }
                    after_cross = true;
                }
                (Some(c), k) if k != JoinKind::Cross => {
                    if !seen.contains(&c.partner.as_str()) {
                        return err(format!("partner {} not yet joined", c.partner));
                    }
                    match schema.fk_between(&c.partner, &j.table) {
                        Some(fk) if fk.columns == c.columns => {}
                        _ => return err(format!("{} - {} is not an fk edge", c.partner, j.table)),
                    }
                    if after_cross && matches!(k, JoinKind::Right | JoinKind::Full) {
                        return err("right/full join after a cross join".into());
                    }
                }
                _ => return err(format!("malformed join to {}", j.table)),
            }
            seen.push(&j.table);
        }
        for p in &self.filters {
            let c = p.column();
            if !seen.contains(&c.table.as_str()) || !has_col(&c.table, &c.column) {
                return err(format!("filter column {}.{} unresolved", c.table, c.column));
            }
        }
        fn check_semi(s: &SemiJoin, scope: &[&str], schema: &NormalizedSchema, depth: usize) -> Result<()> {
            let bad = |m: String| Err(Error::Generate(m));
            if depth > 2 {
                return bad("subquery nesting deeper than 2".into());
            }
            if !scope.contains(&s.outer.as_str()) {
                return bad(format!("subquery outer table {} not in scope", s.outer));
            }
            match schema.fk_between(&s.outer, &s.table) {
                Some(fk) if fk.columns == s.columns => {}
                _ => return bad(format!("{} - {} is not an fk edge", s.outer, s.table)),
            }
            if s.form == SubqueryForm::In && (s.columns.len() != 1 || s.anti) {
                return bad("IN form needs a single column and a semi join".into());
            }
            for p in &s.filters {
                let c = p.column();
                let ok = c.table == s.table
                    && (c.column == ROWID_COLUMN || schema.table(&s.table).is_some_and(|t| t.has_column(&c.column)));
                if !ok {
                    return bad(format!("subquery filter {}.{} unresolved", c.table, c.column));
                }
            }
            for n in &s.nested {
                check_semi(n, &[s.table.as_str()], schema, depth + 1)?;
            }
            Ok(())
        }
        for s in &self.semi {
            check_semi(s, &seen, schema, 1)?;
        }
        let mut all = self.all_tables();
        let n = all.len();
        all.sort();
        all.dedup();
        if all.len() != n {
            return err("a table appears twice".into());
        }
        match &self.projection {
            Projection::Star => {}
            Projection::Columns(cs) => {
                if cs.is_empty() {
                    return err("empty select list".into());
                }
                for c in cs {
                    if !seen.contains(&c.table.as_str()) || !has_col(&c.table, &c.column) {
                        return err(format!("select column {}.{} unresolved", c.table, c.column));
                    }
                }
            }
            Projection::Aggregates(aggs) => {
                if aggs.is_empty() {
                    return err("empty aggregate list".into());
                }
                if self.has_cross() {
                    return err("aggregates over a cross join".into());
                }
                for a in aggs {
                    if let Some(c) = &a.arg {
                        if !seen.contains(&c.table.as_str()) || !has_col(&c.table, &c.column) {
                            return err(format!("aggregate column {}.{} unresolved", c.table, c.column));
                        }
                    } else if a.func != AggFunc::Count {
                        return err(format!("{}(*) is not valid", a.func.name()));
                    }
                }
            }
        }
        Ok(())
    }
}
