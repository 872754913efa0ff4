//! Built-in datasets.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::{Column, WideTable};
use crate::value::{ColumnType, Decimal, Value};

/// The shopping-order wide table: orders of goods by users, eight rows.
pub fn shopping() -> WideTable {
    let columns = vec![
        Column::new("orderId", ColumnType::Int),
        Column::new("userId", ColumnType::Int),
        Column::new("userName", ColumnType::Text),
        Column::new("goodsId", ColumnType::Int),
        Column::new("goodsName", ColumnType::Text),
        Column::new("price", ColumnType::Float),
    ];
    let goods = |g: i64| match g {
        1 => ("flower", 10.0),
        2 => ("book", 0.0),
        _ => ("pen", -0.0),
    };
    let user = |u: i64| if u == 2 { "Bob" } else { "Alice" };
    let rows = [(1, 1, 1), (1, 1, 2), (2, 1, 1), (3, 2, 2), (2, 2, 1), (3, 2, 3), (4, 3, 1), (4, 2, 2)]
        .into_iter()
        .map(|(o, u, g)| {
            let (name, price) = goods(g);
            vec![
                Value::Int(o),
                Value::Int(u),
                Value::Text(user(u).into()),
                Value::Int(g),
                Value::Text(name.into()),
                Value::Float(price),
            ]
        })
        .collect();
    WideTable::new(columns, rows).expect("fixture is well-formed")
}

fn attribute(ty: ColumnType, rng: &mut ChaCha8Rng) -> Value {
    if rng.random_bool(0.08) {
        return Value::Null;
    }
    match ty {
        ColumnType::Int => Value::Int(rng.random_range(-3..10)),
        ColumnType::Float => Value::Float(*[0.0, -0.0, 1.5, -2.25, 10.0].get(rng.random_range(0..5)).expect("in range")),
        ColumnType::Decimal => Value::Decimal(Decimal::new(rng.random_range(-500..500), 2)),
        ColumnType::Text => Value::Text(format!("w{}", rng.random_range(0..6))),
    }
}

/// Random wide table with a snowflake of entities behind it. Entity `k`
/// has an id column `kId` and one or two attributes; some entities hang
/// off the root rows, others off another entity, so the FDs form a tree.
/// Attribute values include NULL and signed zeros.
pub fn synthetic(seed: u64, rows: usize) -> WideTable {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let entities = rng.random_range(1..=4usize);
    let types = [ColumnType::Int, ColumnType::Float, ColumnType::Decimal, ColumnType::Text];
    // parent[k] = None: chosen per wide row; Some(p): determined by entity p.
    let mut parent: Vec<Option<usize>> = Vec::new();
    let mut id_text: Vec<bool> = Vec::new();
    let mut attrs: Vec<Vec<ColumnType>> = Vec::new();
    let mut sizes: Vec<usize> = Vec::new();
    for k in 0..entities {
        parent.push(if k > 0 && rng.random_bool(0.4) { Some(rng.random_range(0..k)) } else { None });
        id_text.push(rng.random_bool(0.3));
        attrs.push((0..rng.random_range(1..=2)).map(|_| types[rng.random_range(0..4)]).collect());
        sizes.push(rng.random_range(1..=6));
    }
    let mut columns = vec![Column::new("rowKey", ColumnType::Int), Column::new("qty", ColumnType::Int)];
    for k in 0..entities {
        let ty = if id_text[k] { ColumnType::Text } else { ColumnType::Int };
        columns.push(Column::new(format!("e{k}Id"), ty));
        for (a, ty) in attrs[k].iter().enumerate() {
            columns.push(Column::new(format!("e{k}A{a}"), *ty));
        }
    }
    let id = |k: usize, i: usize| if id_text[k] { Value::Text(format!("e{k}-{i}")) } else { Value::Int(i as i64 + 1) };
    // Per entity instance: attribute values and the instance of each child
    // entity it determines.
    let mut values: Vec<Vec<Vec<Value>>> = Vec::new();
    for k in 0..entities {
        values.push((0..sizes[k]).map(|_| attrs[k].iter().map(|ty| attribute(*ty, &mut rng)).collect()).collect());
    }
    let mut child_of: Vec<Vec<usize>> = (0..entities).map(|k| vec![0; sizes[k]]).collect();
    for k in 0..entities {
        if let Some(p) = parent[k] {
            child_of[k] = (0..sizes[p]).map(|_| rng.random_range(0..sizes[k])).collect();
        }
    }
    let rows = (0..rows)
        .map(|r| {
            let mut pick = vec![0usize; entities];
            for k in 0..entities {
                pick[k] = match parent[k] {
                    None => rng.random_range(0..sizes[k]),
                    Some(p) => child_of[k][pick[p]],
                };
            }
            let mut row = vec![Value::Int(r as i64 + 1), attribute(ColumnType::Int, &mut rng)];
            for k in 0..entities {
                row.push(id(k, pick[k]));
                row.extend(values[k][pick[k]].iter().cloned());
            }
            row
        })
        .collect();
    WideTable::new(columns, rows).expect("generated columns are distinct")
}

/// Resolve a dataset reference: `builtin:shopping`, `builtin:synthetic:<seed>`
/// or a CSV path.
pub fn load(source: &str) -> Result<WideTable> {
    match source.strip_prefix("builtin:") {
        Some("shopping") => Ok(shopping()),
        Some(other) if other.starts_with("synthetic:") => {
            let seed = other["synthetic:".len()..]
                .parse::<u64>()
                .map_err(|_| Error::Input(format!("bad synthetic seed in {source}")))?;
            Ok(synthetic(seed, 40))
        }
        Some(other) => Err(Error::Input(format!("unknown builtin dataset {other}"))),
        None => WideTable::from_csv_path(std::path::Path::new(source)),
    }
}
