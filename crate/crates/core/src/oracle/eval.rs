//! Scalar pieces shared by both evaluators: predicate truth, aggregates and
//! the select list.

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::generator::ast::{AggFunc, CmpOp, ColumnRef, Predicate, Projection};
use crate::model::ResultSet;
use crate::value::{Comparison, Decimal, Truth, Value};

pub fn compare_truth(op: CmpOp, c: Comparison) -> Truth {
    match c {
        Comparison::Null => Truth::Unknown,
        Comparison::Incomparable => Truth::from_bool(op == CmpOp::Ne),
        Comparison::Ordered(o) => Truth::from_bool(match op {
            CmpOp::Eq => o == Ordering::Equal,
            CmpOp::Ne => o != Ordering::Equal,
            CmpOp::Lt => o == Ordering::Less,
            CmpOp::Le => o != Ordering::Greater,
            CmpOp::Gt => o == Ordering::Greater,
            CmpOp::Ge => o != Ordering::Less,
        }),
    }
}

/// Truth of `p` given the value of its column.
pub fn predicate_truth(p: &Predicate, v: &Value) -> Truth {
    match p {
        Predicate::Compare { op, value, .. } => compare_truth(*op, v.sql_compare(value)),
        Predicate::IsNull { negated, .. } => Truth::from_bool(v.is_null() != *negated),
    }
}

fn sum(values: Vec<Value>) -> Result<Value> {
    if values.is_empty() {
        return Ok(Value::Null);
    }
    if values.iter().any(|v| matches!(v, Value::Float(_))) {
        let mut total = 0.0;
        for v in &values {
            total += v.as_f64().ok_or_else(|| Error::Unsupported(format!("SUM over {v}")))?;
        }
        return Ok(Value::Float(total));
    }
    let mut exact = Decimal::new(0, 0);
    let mut any_decimal = false;
    for v in &values {
        let d = match v {
            Value::Int(i) => Decimal::new(*i as i128, 0),
            Value::Decimal(d) => {
                any_decimal = true;
                *d
            }
            other => return Err(Error::Unsupported(format!("SUM over {other}"))),
        };
        exact = exact.checked_add(d).ok_or_else(|| Error::Unsupported("SUM overflows 128 bits".into()))?;
    }
    if !any_decimal {
        if let Ok(i) = i64::try_from(exact.mantissa) {
            return Ok(Value::Int(i));
        }
    }
    Ok(Value::Decimal(exact))
}

fn extreme(values: Vec<Value>, want: Ordering) -> Value {
    let mut best: Option<Value> = None;
    for v in values {
        best = match best {
            None => Some(v),
            Some(b) => match v.sql_compare(&b) {
                Comparison::Ordered(o) if o == want => Some(v),
                _ => Some(b),
            },
        };
    }
    best.unwrap_or(Value::Null)
}

/// Aggregate over the column values of the qualifying rows. NULLs are
/// skipped; SUM, MIN and MAX of nothing are NULL.
pub fn aggregate(func: AggFunc, values: impl Iterator<Item = Value>) -> Result<Value> {
    let values: Vec<Value> = values.filter(|v| !v.is_null()).collect();
    match func {
        AggFunc::Count => Ok(Value::Int(values.len() as i64)),
        AggFunc::Sum => sum(values),
        AggFunc::Min => Ok(extreme(values, Ordering::Less)),
        AggFunc::Max => Ok(extreme(values, Ordering::Greater)),
    }
}

fn column_name(c: &ColumnRef) -> String {
    format!("{}.{}", c.table, c.column)
}

/// Apply the select list. `star` lists the columns `SELECT *` expands to.
pub fn project<T>(
    projection: &Projection,
    star: &[ColumnRef],
    tuples: &[T],
    get: impl Fn(&T, &ColumnRef) -> Value,
) -> Result<ResultSet> {
    let plain = |cols: &[ColumnRef]| {
        let names = cols.iter().map(column_name).collect();
        let rows = tuples.iter().map(|t| cols.iter().map(|c| get(t, c)).collect()).collect();
        ResultSet::new(names, rows)
    };
    match projection {
        Projection::Star => Ok(plain(star)),
        Projection::Columns(cs) => Ok(plain(cs)),
        Projection::Aggregates(aggs) => {
            let mut names = Vec::new();
            let mut row = Vec::new();
            for a in aggs {
                match &a.arg {
                    None => {
                        names.push(format!("{}(*)", a.func.name()));
                        row.push(Value::Int(tuples.len() as i64));
                    }
                    Some(c) => {
                        names.push(format!("{}({})", a.func.name(), column_name(c)));
                        row.push(aggregate(a.func, tuples.iter().map(|t| get(t, c)))?);
                    }
                }
            }
            Ok(ResultSet::new(names, vec![row]))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn agg(func: AggFunc, vals: Vec<Value>) -> Value {
        aggregate(func, vals.into_iter()).unwrap()
    }

    #[test]
    fn aggregates_skip_nulls() {
        let vals = vec![Value::Int(3), Value::Null, Value::Int(-5), Value::Int(4)];
        assert_eq!(agg(AggFunc::Count, vals.clone()), Value::Int(3));
        assert_eq!(agg(AggFunc::Sum, vals.clone()), Value::Int(2));
        assert_eq!(agg(AggFunc::Min, vals.clone()), Value::Int(-5));
        assert_eq!(agg(AggFunc::Max, vals), Value::Int(4));
    }

    #[test]
    fn empty_aggregates() {
        assert_eq!(agg(AggFunc::Count, vec![Value::Null]), Value::Int(0));
        assert!(agg(AggFunc::Sum, vec![]).is_null());
        assert!(agg(AggFunc::Min, vec![Value::Null]).is_null());
    }

    #[test]
    fn integer_sum_widens_to_decimal() {
        let v = agg(AggFunc::Sum, vec![Value::Int(i64::MAX), Value::Int(i64::MAX)]);
        assert_eq!(v, Value::Decimal(Decimal::new(2 * i64::MAX as i128, 0)));
        let v = agg(AggFunc::Sum, vec![Value::Int(1), Value::Decimal(Decimal::new(25, 1))]);
        assert_eq!(v, Value::Decimal(Decimal::new(35, 1)));
    }

    #[test]
    fn text_extremes_are_bytewise() {
        let v = agg(AggFunc::Max, vec!["book".into(), "pen".into(), "flower".into()]);
        assert_eq!(v, Value::from("pen"));
    }

    #[test]
    fn three_valued_comparisons() {
        let c = crate::generator::ast::ColumnRef::new("T", "c");
        let p = Predicate::Compare { col: c.clone(), op: CmpOp::Ne, value: Value::Int(1) };
        assert_eq!(predicate_truth(&p, &Value::Null), Truth::Unknown);
        assert_eq!(predicate_truth(&p, &Value::Int(2)), Truth::True);
        let p = Predicate::IsNull { col: c, negated: true };
        assert_eq!(predicate_truth(&p, &Value::Null), Truth::False);
    }
}
