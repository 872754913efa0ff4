//! Boundary and NULL noise on key columns, kept consistent with provenance.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bitmap::algebra::JoinOp;
use crate::database::TestDatabase;
use crate::error::{Error, Result};
use crate::generator::ast::{JoinCond, JoinKind, JoinStep, Projection, QueryAst, SemiJoin, SubqueryForm};
use crate::model::{multiset_compare, CompareMode, NormalizedSchema, WideTable};
use crate::value::{ColumnType, Decimal, Value};

/// Drop rows with NULL or boundary values on any key column (root key, PK of
/// a dependent table, or FK column). Surviving rows are renumbered densely.
pub fn clean(t: &WideTable, schema: &NormalizedSchema) -> WideTable {
    let mut keys: Vec<usize> = Vec::new();
    for table in &schema.tables {
        for c in &table.primary_key {
            keys.extend(t.column_index(c));
        }
    }
    for fk in &schema.fks {
        for c in &fk.columns {
            keys.extend(t.column_index(c));
        }
    }
    keys.sort();
    keys.dedup();
    let rows = t
        .rows
        .iter()
        .filter(|r| keys.iter().all(|k| !r[*k].is_boundary()))
        .cloned()
        .collect();
    WideTable { columns: t.columns.clone(), rows }
}

/// The first `n` non-NULL boundary values for a type. Text values are runs
/// of `Z` starting at `text_len` characters.
pub fn boundary_values(ty: ColumnType, n: usize, text_len: usize) -> Vec<Value> {
    (0..n)
        .map(|k| {
            let half = (k / 2) as i64;
            let neg = k % 2 == 1;
            match ty {
                ColumnType::Int => Value::Int(if neg { i64::MIN + half } else { i64::MAX - half }),
                ColumnType::Float => {
                    if k == 0 {
                        Value::Float(-0.0)
                    } else {
                        let m = f64::MAX * (1.0 - ((k - 1) / 2) as f64 / 64.0);
                        Value::Float(if neg { m } else { -m })
                    }
                }
                ColumnType::Decimal => {
                    let m = 10i128.pow(30) + half as i128;
                    Value::Decimal(Decimal::new(if neg { -m } else { m }, 0))
                }
                ColumnType::Text => Value::Text("Z".repeat(text_len.max(10) + k)),
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseTarget {
    pub table: String,
    pub row: usize,
    pub column: String,
    pub value: Value,
}

/// Explicit, replayable list of corruptions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoisePlan {
    pub epsilon: f64,
    pub seed: u64,
    pub targets: Vec<NoiseTarget>,
}

impl NoisePlan {
    pub fn empty() -> Self {
        NoisePlan { epsilon: 0.0, seed: 0, targets: Vec::new() }
    }

    /// Pick `ceil(epsilon * rows)` rows of every key column (PKs of
    /// dependent tables, FK columns) and give each a fresh boundary value or
    /// NULL.
    pub fn generate(db: &TestDatabase, epsilon: f64, seed: u64) -> NoisePlan {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut targets = Vec::new();
        // Values already handed out per wide column; a column shared by a
        // child and its parent draws from one pool.
        let mut used: std::collections::HashMap<String, (bool, Vec<Value>)> = std::collections::HashMap::new();
        for (ti, t) in db.schema.tables.iter().enumerate() {
            for c in &t.columns {
                if !db.schema.is_key_column(&t.name, &c.name) {
                    continue;
                }
                let rows = db.data[ti].len();
                let count = (epsilon * rows as f64).ceil() as usize;
                let mut picked: Vec<usize> = (0..rows).collect();
                picked.shuffle(&mut rng);
                picked.truncate(count.min(rows));
                picked.sort();
                let ci = t.column_index(&c.name).expect("own column");
                let wi = db.wide.column_index(&c.name).expect("wide column");
                let domain: Vec<&Value> = db.data[ti]
                    .iter()
                    .map(|r| &r[ci])
                    .chain(db.wide.rows.iter().map(|r| &r[wi]))
                    .collect();
                let (null_used, used) = used.entry(c.name.clone()).or_insert((false, Vec::new()));
                if domain.iter().any(|v| v.is_null()) {
                    *null_used = true;
                }
                let max_len = domain
                    .iter()
                    .filter_map(|v| if let Value::Text(s) = v { Some(s.len()) } else { None })
                    .max()
                    .unwrap_or(0);
                let mut catalog = boundary_values(c.ty, 4 * count + 8 + used.len(), max_len + 1)
                    .into_iter()
                    .filter(|v| !domain.iter().any(|d| d.sql_equal(v).is_true()))
                    .filter(|v| !used.iter().any(|u: &Value| u.sql_equal(v).is_true()))
                    .collect::<Vec<_>>()
                    .into_iter();
                for row in picked {
                    let value = if !*null_used && rng.random_bool(0.5) {
                        *null_used = true;
                        Value::Null
                    } else {
                        let v = catalog.next().expect("catalog outgrows the targets");
                        used.push(v.clone());
                        v
                    };
                    targets.push(NoiseTarget { table: t.name.clone(), row, column: c.name.clone(), value });
                }
            }
        }
        NoisePlan { epsilon, seed, targets }
    }
}

/// Apply every target in order and return the updated bundle. The input is
/// left untouched, so a failed plan changes nothing.
pub fn inject(db: &TestDatabase, plan: &NoisePlan) -> Result<TestDatabase> {
    let mut out = db.clone();
    for t in &plan.targets {
        apply(&mut out, t)?;
    }
    Ok(out)
}

fn apply(db: &mut TestDatabase, target: &NoiseTarget) -> Result<()> {
    let schema = &db.schema;
    let ti = schema
        .table_index(&target.table)
        .ok_or_else(|| Error::Noise(format!("unknown table {}", target.table)))?;
    let table = &schema.tables[ti];
    let ci = table
        .column_index(&target.column)
        .ok_or_else(|| Error::Noise(format!("{} has no column {}", table.name, target.column)))?;
    if target.row >= db.data[ti].len() {
        return Err(Error::Noise(format!("{} has no row {}", table.name, target.row)));
    }
    if let Some(got) = target.value.column_type() {
        let want = table.columns[ci].ty;
        if want != got {
            return Err(Error::Noise(format!("{} value for {} column", got.label(), want.label())));
        }
    }
    // Case 1 works on the whole PK of a dependent table, case 2 on the whole
    // fk column list.
    let (is_pk, key): (bool, Vec<String>) = if !table.is_root && table.primary_key.contains(&target.column) {
        (true, table.primary_key.clone())
    } else if let Some(fk) = schema.fks.iter().find(|fk| fk.child == table.name && fk.columns.contains(&target.column)) {
        (false, fk.columns.clone())
    } else {
        return Err(Error::Noise(format!("{}.{} is neither a PK nor an FK column", table.name, target.column)));
    };
    let closure = schema.closure(&key);
    let dependents: Vec<String> = closure.iter().filter(|c| !key.contains(c)).cloned().collect();
    let cdep: Vec<usize> = schema
        .tables
        .iter()
        .enumerate()
        .filter(|(_, t)| t.columns.iter().all(|c| closure.contains(&c.name)))
        .map(|(i, _)| i)
        .collect();
    let affected = db.rowmap.preimage(ti, target.row);
    let Some(&rep) = affected.first() else {
        return Err(Error::Noise(format!("{} row {} has no provenance", table.name, target.row)));
    };
    for &t in &cdep {
        let e = db.rowmap.get(t, rep);
        if affected.iter().any(|r| db.rowmap.get(t, *r) != e) {
            return Err(Error::Noise(format!("rows sharing {} row {} disagree on {}", table.name, target.row, schema.tables[t].name)));
        }
    }
    let pos = |c: &String| db.wide.column_index(c).expect("schema column in wide table");
    let noisy = pos(&target.column);
    let mut new_row = vec![Value::Null; db.wide.columns.len()];
    for c in key.iter().chain(&dependents) {
        new_row[pos(c)] = db.wide.rows[rep][pos(c)].clone();
    }
    if is_pk {
        new_row[noisy] = target.value.clone();
    }
    let entries: Vec<Option<usize>> =
        (0..schema.tables.len()).map(|t| if cdep.contains(&t) { db.rowmap.get(t, rep) } else { None }).collect();
    let bits: Vec<bool> = entries.iter().map(Option::is_some).collect();

    let dep_pos: Vec<usize> = dependents.iter().map(pos).collect();
    for &r in &affected {
        for &p in &dep_pos {
            db.wide.rows[r][p] = Value::Null;
        }
        if !is_pk {
            db.wide.rows[r][noisy] = target.value.clone();
        }
        for &t in &cdep {
            db.rowmap.set(t, r, None);
            db.bitmap.arrays[t].set(r, false);
        }
    }
    db.data[ti][target.row][ci] = target.value.clone();
    db.wide.rows.push(new_row);
    db.rowmap.push_row(&entries);
    db.bitmap.push_row(&bits);
    Ok(())
}

/// Probe queries: every fk edge under every join operator in both
/// directions, plus the whole schema left-joined from the root.
pub fn probe_queries(schema: &NormalizedSchema) -> Vec<QueryAst> {
    let mut out = Vec::new();
    for fk in &schema.fks {
        for (a, b) in [(&fk.child, &fk.parent), (&fk.parent, &fk.child)] {
            for op in JoinOp::ALL {
                let mut q = QueryAst::single(a.clone());
                match JoinKind::from_op(op) {
                    Some(kind) => {
                        let on = (kind != JoinKind::Cross)
                            .then(|| JoinCond { partner: a.clone(), columns: fk.columns.clone() });
                        q.joins.push(JoinStep { kind, table: b.clone(), on });
                    }
                    None => q.semi.push(SemiJoin {
                        anti: op == JoinOp::Anti,
                        form: SubqueryForm::Exists,
                        outer: a.clone(),
                        table: b.clone(),
                        columns: fk.columns.clone(),
                        filters: Vec::new(),
                        nested: Vec::new(),
                    }),
                }
                out.push(q);
            }
        }
    }
    if let Some(root) = schema.tables.iter().find(|t| t.is_root) {
        let mut q = QueryAst::single(root.name.clone());
        let mut done = vec![root.name.clone()];
        while let Some(fk) = schema.fks.iter().find(|fk| done.contains(&fk.child) && !done.contains(&fk.parent)) {
            q.joins.push(JoinStep {
                kind: JoinKind::Left,
                table: fk.parent.clone(),
                on: Some(JoinCond { partner: fk.child.clone(), columns: fk.columns.clone() }),
            });
            done.push(fk.parent.clone());
        }
        q.projection = Projection::Star;
        out.push(q);
    }
    out
}

/// Structural agreement of wide table, map, bitmaps and tables, and oracle
/// answers equal to a nested-loop evaluation for every probe query.
pub fn verify_consistency(db: &TestDatabase) -> bool {
    if db.structural_check().is_err() {
        return false;
    }
    probe_queries(&db.schema).iter().all(|q| {
        let Ok(gt) = crate::oracle::ground_truth(q, db) else { return false };
        let Ok(naive) = crate::oracle::naive_execute_db(q, db) else { return false };
        match gt.mode {
            CompareMode::FullSet => multiset_compare(&naive, &gt.result, CompareMode::FullSet),
            CompareMode::SubSet => multiset_compare(&naive, &gt.result, CompareMode::SubSet),
        }
        .is_ok_and(|o| o.is_match())
    })
}
