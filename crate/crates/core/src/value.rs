//! Typed SQL scalars and the comparison semantics shared by the oracle, the
//! reference executor and result-set comparison.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

/// Column data type. Vertex labels of the plan-iterative graph are derived
/// from these.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnType {
    Int,
    Decimal,
    Float,
    Text,
}

impl ColumnType {
    pub fn label(self) -> &'static str {
        match self {
            ColumnType::Int => "int",
            ColumnType::Decimal => "decimal",
            ColumnType::Float => "float",
            ColumnType::Text => "text",
        }
    }

    pub fn is_numeric(self) -> bool {
        !matches!(self, ColumnType::Text)
    }
}

/// Exact decimal: `mantissa * 10^-scale`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Decimal {
    pub mantissa: i128,
    pub scale: u32,
}

impl Decimal {
    pub fn new(mantissa: i128, scale: u32) -> Self {
        Decimal { mantissa, scale }
    }

    pub fn to_f64(self) -> f64 {
        self.mantissa as f64 / 10f64.powi(self.scale as i32)
    }

    /// Exact sum at the larger scale; `None` on overflow.
    pub fn checked_add(self, other: Decimal) -> Option<Decimal> {
        let scale = self.scale.max(other.scale);
        let a = self.mantissa.checked_mul(10i128.checked_pow(scale - self.scale)?)?;
        let b = other.mantissa.checked_mul(10i128.checked_pow(scale - other.scale)?)?;
        Some(Decimal::new(a.checked_add(b)?, scale))
    }

    /// Integral value if the fractional digits are all zero.
    fn as_integer(self) -> Option<i128> {
        let p = 10i128.checked_pow(self.scale)?;
        (self.mantissa % p == 0).then(|| self.mantissa / p)
    }

    fn cmp_exact(self, other: Decimal) -> Option<Ordering> {
        let scale = self.scale.max(other.scale);
        let a = self.mantissa.checked_mul(10i128.checked_pow(scale - self.scale)?)?;
        let b = other.mantissa.checked_mul(10i128.checked_pow(scale - other.scale)?)?;
        Some(a.cmp(&b))
    }

    fn parse(text: &str) -> Option<Decimal> {
        let (neg, digits) = match text.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, text.strip_prefix('+').unwrap_or(text)),
        };
        let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
        if int_part.is_empty() && frac_part.is_empty() {
            return None;
        }
        if !int_part.bytes().chain(frac_part.bytes()).all(|b| b.is_ascii_digit()) {
            return None;
        }
        let joined = format!("{int_part}{frac_part}");
        let mut mantissa: i128 = if joined.is_empty() { 0 } else { joined.parse().ok()? };
        if neg {
            mantissa = -mantissa;
        }
        Some(Decimal::new(mantissa, frac_part.len() as u32))
    }
}

impl fmt::Display for Decimal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let neg = self.mantissa < 0;
        let digits = self.mantissa.unsigned_abs().to_string();
        let scale = self.scale as usize;
        let sign = if neg { "-" } else { "" };
        if scale == 0 {
            // trailing dot keeps the literal a decimal rather than an integer
            return write!(f, "{sign}{digits}.");
        }
        let padded = if digits.len() <= scale {
            format!("{}{}", "0".repeat(scale + 1 - digits.len()), digits)
        } else {
            digits
        };
        let (i, frac) = padded.split_at(padded.len() - scale);
        write!(f, "{sign}{i}.{frac}")
    }
}

/// A SQL scalar. Floats keep the sign of zero: `-0.0` and `0.0` are
/// SQL-equal but render differently.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", content = "v")]
pub enum Value {
    Null,
    Int(i64),
    Decimal(Decimal),
    Float(f64),
    Text(String),
}

/// SQL three-valued logic.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Truth {
    True,
    False,
    Unknown,
}

impl Truth {
    pub fn from_bool(b: bool) -> Self {
        if b {
            Truth::True
        } else {
            Truth::False
        }
    }

    pub fn and(self, other: Truth) -> Truth {
        match (self, other) {
            (Truth::False, _) | (_, Truth::False) => Truth::False,
            (Truth::True, Truth::True) => Truth::True,
            _ => Truth::Unknown,
        }
    }

    pub fn or(self, other: Truth) -> Truth {
        match (self, other) {
            (Truth::True, _) | (_, Truth::True) => Truth::True,
            (Truth::False, Truth::False) => Truth::False,
            _ => Truth::Unknown,
        }
    }

    pub fn not(self) -> Truth {
        match self {
            Truth::True => Truth::False,
            Truth::False => Truth::True,
            Truth::Unknown => Truth::Unknown,
        }
    }

    pub fn is_true(self) -> bool {
        self == Truth::True
    }
}

/// Outcome of comparing two non-null values.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Comparison {
    Null,
    Ordered(Ordering),
    /// Text that does not parse as a number against a number.
    Incomparable,
}

#[derive(Debug, Clone, Copy)]
enum Num {
    Int(i128),
    Dec(Decimal),
    Float(f64),
}

impl Num {
    fn to_f64(self) -> f64 {
        match self {
            Num::Int(i) => i as f64,
            Num::Dec(d) => d.to_f64(),
            Num::Float(f) => f,
        }
    }

    fn cmp(self, other: Num) -> Option<Ordering> {
        match (self, other) {
            (Num::Int(a), Num::Int(b)) => Some(a.cmp(&b)),
            (Num::Int(a), Num::Dec(b)) => Decimal::new(a, 0).cmp_exact(b),
            (Num::Dec(a), Num::Int(b)) => a.cmp_exact(Decimal::new(b, 0)),
            (Num::Dec(a), Num::Dec(b)) => a.cmp_exact(b),
            _ => None,
        }
        .or_else(|| self.to_f64().partial_cmp(&other.to_f64()))
    }
}

fn parse_number(text: &str) -> Option<Num> {
    let t = text.trim();
    if let Ok(i) = t.parse::<i64>() {
        return Some(Num::Int(i as i128));
    }
    if let Some(d) = Decimal::parse(t) {
        return Some(Num::Dec(d));
    }
    t.parse::<f64>().ok().filter(|f| f.is_finite()).map(Num::Float)
}

impl Value {
    pub fn is_null(&self) -> bool {
        matches!(self, Value::Null)
    }

    pub fn column_type(&self) -> Option<ColumnType> {
        match self {
            Value::Null => None,
            Value::Int(_) => Some(ColumnType::Int),
            Value::Decimal(_) => Some(ColumnType::Decimal),
            Value::Float(_) => Some(ColumnType::Float),
            Value::Text(_) => Some(ColumnType::Text),
        }
    }

    fn as_num(&self) -> Option<Num> {
        match self {
            Value::Int(i) => Some(Num::Int(*i as i128)),
            Value::Decimal(d) => Some(Num::Dec(*d)),
            Value::Float(f) => Some(Num::Float(*f)),
            _ => None,
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        self.as_num().map(Num::to_f64)
    }

    /// Predicate-evaluation comparison.
    pub fn sql_compare(&self, other: &Value) -> Comparison {
        use Value::*;
        match (self, other) {
            (Null, _) | (_, Null) => Comparison::Null,
            (Text(a), Text(b)) => Comparison::Ordered(a.as_bytes().cmp(b.as_bytes())),
            (Text(t), n) => match (parse_number(t), n.as_num()) {
                (Some(a), Some(b)) => a.cmp(b).map_or(Comparison::Incomparable, Comparison::Ordered),
                _ => Comparison::Incomparable,
            },
            (n, Text(t)) => match (n.as_num(), parse_number(t)) {
                (Some(a), Some(b)) => a.cmp(b).map_or(Comparison::Incomparable, Comparison::Ordered),
                _ => Comparison::Incomparable,
            },
            (a, b) => match (a.as_num(), b.as_num()) {
                (Some(x), Some(y)) => x.cmp(y).map_or(Comparison::Incomparable, Comparison::Ordered),
                _ => Comparison::Incomparable,
            },
        }
    }

    /// SQL `=`: unknown iff either side is NULL.
    pub fn sql_equal(&self, other: &Value) -> Truth {
        match self.sql_compare(other) {
            Comparison::Null => Truth::Unknown,
            Comparison::Ordered(o) => Truth::from_bool(o == Ordering::Equal),
            Comparison::Incomparable => Truth::False,
        }
    }

    /// Equality used when grouping result rows: NULL matches NULL.
    pub fn identical(&self, other: &Value) -> bool {
        match (self, other) {
            (Value::Null, Value::Null) => true,
            (Value::Null, _) | (_, Value::Null) => false,
            _ => self.sql_equal(other).is_true(),
        }
    }

    /// Hashable key consistent with [`Value::identical`] for values of one
    /// column type (and across numeric kinds for integral values).
    pub fn group_key(&self) -> GroupKey {
        match self {
            Value::Null => GroupKey::Null,
            Value::Text(s) => GroupKey::Text(s.clone()),
            Value::Int(i) => GroupKey::Exact(*i as i128),
            Value::Decimal(d) => match d.as_integer() {
                Some(i) => GroupKey::Exact(i),
                None => GroupKey::approx(d.to_f64()),
            },
            Value::Float(f) => {
                if f.fract() == 0.0 && f.abs() < 1e30 {
                    GroupKey::Exact(*f as i128)
                } else {
                    GroupKey::approx(*f)
                }
            }
        }
    }

    /// SQL literal text. Floats always carry an exponent so they re-parse
    /// as floats (`-0.0E0`, `1.5E300`); decimals never do.
    pub fn to_sql_literal(&self) -> String {
        match self {
            Value::Null => "NULL".to_string(),
            Value::Int(i) => i.to_string(),
            Value::Decimal(d) => d.to_string(),
            Value::Float(f) => render_float(*f),
            Value::Text(s) => {
                let mut out = String::with_capacity(s.len() + 2);
                out.push('\'');
                for c in s.chars() {
                    match c {
                        '\'' => out.push_str("''"),
                        '\\' => out.push_str("\\\\"),
                        c => out.push(c),
                    }
                }
                out.push('\'');
                out
            }
        }
    }

    /// Inverse of [`Value::to_sql_literal`].
    pub fn parse_sql_literal(text: &str) -> Option<Value> {
        let t = text.trim();
        if t.eq_ignore_ascii_case("NULL") {
            return Some(Value::Null);
        }
        if let Some(body) = t.strip_prefix('\'') {
            let body = body.strip_suffix('\'')?;
            return unescape_text(body).map(Value::Text);
        }
        parse_numeric_literal(t)
    }

    /// Boundary values that the data cleaner treats as noise on key columns.
    pub fn is_boundary(&self) -> bool {
        match self {
            Value::Null => true,
            Value::Int(i) => *i > i64::MAX - 1024 || *i < i64::MIN + 1024,
            Value::Float(f) => {
                (*f == 0.0 && f.is_sign_negative()) || !f.is_finite() || f.abs() >= f64::MAX / 2.0
            }
            Value::Decimal(d) => d.mantissa.unsigned_abs() >= 10u128.pow(30),
            Value::Text(s) => s.len() >= 10 && s.bytes().all(|b| b == b'Z'),
        }
    }
}

/// Parse a numeric literal: exponent → float, `.` → decimal, else integer.
pub fn parse_numeric_literal(t: &str) -> Option<Value> {
    if t.is_empty() {
        return None;
    }
    if t.contains(['e', 'E']) || t.contains("inf") || t.contains("NaN") {
        return t.parse::<f64>().ok().map(Value::Float);
    }
    if t.contains('.') {
        return Decimal::parse(t).map(Value::Decimal);
    }
    match t.parse::<i64>() {
        Ok(i) => Some(Value::Int(i)),
        Err(_) => Decimal::parse(t).map(Value::Decimal),
    }
}

fn unescape_text(body: &str) -> Option<String> {
    let mut out = String::with_capacity(body.len());
    let mut chars = body.chars().peekable();
    while let Some(c) = chars.next() {
        match c {
            '\'' => {
                if chars.next() != Some('\'') {
                    return None;
                }
                out.push('\'');
            }
            '\\' => match chars.next()? {
                'n' => out.push('\n'),
                't' => out.push('\t'),
                '0' => out.push('\0'),
                other => out.push(other),
            },
            c => out.push(c),
        }
    }
    Some(out)
}

fn render_float(f: f64) -> String {
    let s = format!("{f:?}");
    if s.contains('e') {
        s.replace('e', "E")
    } else if s.contains("inf") || s.contains("NaN") {
        s
    } else {
        format!("{s}E0")
    }
}

/// Hash key for grouping values under NULL-identical semantics.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GroupKey {
    Null,
    Exact(i128),
    Approx(u64),
    Text(String),
}

impl GroupKey {
    fn approx(f: f64) -> Self {
        let f = if f == 0.0 { 0.0 } else { f };
        GroupKey::Approx(f.to_bits())
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_sql_literal())
    }
}

/// Structural equality: same kind and same payload bits (so `-0.0 != 0.0`).
impl PartialEq for Value {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Value::Null, Value::Null) => true,
            (Value::Int(a), Value::Int(b)) => a == b,
            (Value::Decimal(a), Value::Decimal(b)) => a == b,
            (Value::Float(a), Value::Float(b)) => a.to_bits() == b.to_bits(),
            (Value::Text(a), Value::Text(b)) => a == b,
            _ => false,
        }
    }
}

impl Eq for Value {}

impl From<i64> for Value {
    fn from(v: i64) -> Self {
        Value::Int(v)
    }
}

impl From<f64> for Value {
    fn from(v: f64) -> Self {
        Value::Float(v)
    }
}

impl From<&str> for Value {
    fn from(v: &str) -> Self {
        Value::Text(v.to_string())
    }
}
