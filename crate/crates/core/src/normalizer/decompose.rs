//! Snowflake-shaped 3NF synthesis with RowID provenance.

use std::collections::HashMap;

use super::fd::{column_classes, holds, partition};
use crate::bitmap::{BitArray, JoinBitmapIndex};
use crate::database::{RowIdMap, TestDatabase};
use crate::error::{Error, Result};
use crate::model::{Column, ForeignKey, FunctionalDependency, NormalizedSchema, TableDef, WideTable};
use crate::value::GroupKey;

/// Greedy minimal key: drop columns from the right while the rest still
/// identifies every row. Never returns an empty key.
fn minimal_key(t: &WideTable) -> Vec<usize> {
    let classes = column_classes(t);
    let mut key: Vec<usize> = (0..t.columns.len()).collect();
    for c in (0..t.columns.len()).rev() {
        if key.len() == 1 {
            break;
        }
        let rest: Vec<usize> = key.iter().copied().filter(|k| *k != c).collect();
        if partition(&classes, t.len(), &rest).1 == t.len() {
            key = rest;
        }
    }
    key
}

fn closure(start: &[usize], fds: &[(Vec<usize>, usize)]) -> Vec<usize> {
    let mut out = start.to_vec();
    loop {
        let mut grew = false;
        for (lhs, rhs) in fds {
            if !out.contains(rhs) && lhs.iter().all(|c| out.contains(c)) {
                out.push(*rhs);
                grew = true;
            }
        }
        if !grew {
            out.sort();
            return out;
        }
    }
}

struct Group {
    lhs: Vec<usize>,
    rhs: Vec<usize>,
}

/// Choose FDs and lay out tables. Only the metadata is produced here;
/// `materialize` fills in rows.
pub fn design(t: &WideTable, fds: &[FunctionalDependency]) -> Result<NormalizedSchema> {
    for fd in fds {
        if fd.lhs.is_empty() || fd.rhs.is_empty() || fd.lhs.iter().any(|c| fd.rhs.contains(c)) {
            return Err(Error::Decompose(format!("malformed FD {fd}")));
        }
        if !holds(t, fd).map_err(|e| Error::Decompose(e.to_string()))? {
            return Err(Error::Decompose(format!("FD {fd} does not hold")));
        }
    }
    let pos = |c: &String| t.column_index(c).expect("checked by holds");
    let key = minimal_key(t);
    let classes = column_classes(t);
    let is_superkey = |cols: &[usize]| t.len() > 0 && partition(&classes, t.len(), cols).1 == t.len();

    let mut single: Vec<(Vec<usize>, usize)> = Vec::new();
    for fd in fds {
        let mut lhs: Vec<usize> = fd.lhs.iter().map(pos).collect();
        lhs.sort();
        for r in &fd.rhs {
            single.push((lhs.clone(), pos(r)));
        }
    }
    single.sort_by(|a, b| (a.0.len(), &a.0, a.1).cmp(&(b.0.len(), &b.0, b.1)));
    single.dedup();

    let mut selected: Vec<(Vec<usize>, usize)> = Vec::new();
    for (lhs, rhs) in single {
        if key.contains(&rhs) || is_superkey(&lhs) {
            continue;
        }
        if closure(&lhs, &selected).contains(&rhs) {
            continue;
        }
        let back = closure(&[rhs], &selected);
        if lhs.iter().any(|c| back.contains(c)) {
            continue;
        }
        selected.push((lhs, rhs));
    }
    // Minimal cover: drop FDs implied by the others.
    let mut i = selected.len();
    while i > 0 {
        i -= 1;
        let (lhs, rhs) = selected[i].clone();
        let others: Vec<_> = selected.iter().enumerate().filter(|(k, _)| *k != i).map(|(_, f)| f.clone()).collect();
        if closure(&lhs, &others).contains(&rhs) {
            selected.remove(i);
        }
    }
    // A column lives in at most one dependent table.
    let mut seen_rhs = Vec::new();
    selected.retain(|(_, r)| {
        let fresh = !seen_rhs.contains(r);
        seen_rhs.push(*r);
        fresh
    });

    let mut dropped: Vec<Vec<usize>> = Vec::new();
    loop {
        let active: Vec<(Vec<usize>, usize)> =
            selected.iter().filter(|(l, _)| !dropped.contains(l)).cloned().collect();
        let mut groups: Vec<Group> = Vec::new();
        for (lhs, rhs) in &active {
            match groups.iter_mut().find(|g| &g.lhs == lhs) {
                Some(g) => g.rhs.push(*rhs),
                None => groups.push(Group { lhs: lhs.clone(), rhs: vec![*rhs] }),
            }
        }
        groups.sort_by(|a, b| a.lhs.cmp(&b.lhs));
        let mut root: Vec<usize> = key.clone();
        for c in 0..t.columns.len() {
            if !root.contains(&c) && !groups.iter().any(|g| g.rhs.contains(&c)) {
                root.push(c);
            }
        }
        root.sort();
        let cols_of = |g: &Group| {
            let mut v: Vec<usize> = g.lhs.iter().chain(&g.rhs).copied().collect();
            v.sort();
            v
        };
        // holder[i] = table index (0 = root, g+1 = group g) holding group i's lhs.
        let mut violation: Option<usize> = None;
        let mut holder: Vec<usize> = Vec::new();
        for (gi, g) in groups.iter().enumerate() {
            let mut holders = Vec::new();
            if g.lhs.iter().all(|c| root.contains(c)) {
                holders.push(0);
            }
            for (hi, h) in groups.iter().enumerate() {
                if hi != gi && g.lhs.iter().all(|c| cols_of(h).contains(c)) {
                    holders.push(hi + 1);
                }
            }
            let overlaps = groups
                .iter()
                .enumerate()
                .any(|(hi, h)| hi != gi && h.lhs.iter().any(|c| g.lhs.contains(c)));
            if holders.len() != 1 || overlaps {
                violation = Some(gi);
                break;
            }
            holder.push(holders[0]);
        }
        if violation.is_none() {
            for start in 0..groups.len() {
                let mut cur = start + 1;
                let mut steps = 0;
                while cur != 0 {
                    cur = holder[cur - 1];
                    steps += 1;
                    if steps > groups.len() {
                        violation = Some(start);
                        break;
                    }
                }
                if violation.is_some() {
                    break;
                }
            }
        }
        if let Some(v) = violation {
            dropped.push(groups[v].lhs.clone());
            continue;
        }

        let col = |c: usize| Column::new(t.columns[c].name.clone(), t.columns[c].ty);
        let names = |cs: &[usize]| cs.iter().map(|c| t.columns[*c].name.clone()).collect::<Vec<_>>();
        let mut tables = vec![TableDef {
            name: "T1".into(),
            columns: root.iter().map(|c| col(*c)).collect(),
            primary_key: names(&key),
            is_root: true,
        }];
        for (gi, g) in groups.iter().enumerate() {
            tables.push(TableDef {
                name: format!("T{}", gi + 2),
                columns: cols_of(g).into_iter().map(col).collect(),
                primary_key: names(&g.lhs),
                is_root: false,
            });
        }
        let fks = groups
            .iter()
            .enumerate()
            .map(|(gi, g)| ForeignKey {
                child: tables[holder[gi]].name.clone(),
                parent: tables[gi + 1].name.clone(),
                columns: names(&g.lhs),
            })
            .collect();
        let fds = active
            .iter()
            .map(|(l, r)| FunctionalDependency { lhs: names(l), rhs: names(&[*r]) })
            .collect();
        return Ok(NormalizedSchema { tables, fks, fds, wide_columns: t.columns.clone() });
    }
}

/// Populate tables, RowID map and bitmaps from the wide table. Rows are
/// deduplicated on each table's primary key in wide-row order.
pub fn materialize(schema: &NormalizedSchema, t: &WideTable) -> Result<TestDatabase> {
    let n = t.len();
    let k = schema.tables.len();
    let mut data = Vec::with_capacity(k);
    let mut rowmap = RowIdMap::new(k, n);
    for (ti, table) in schema.tables.iter().enumerate() {
        let pos: Vec<usize> = table
            .columns
            .iter()
            .map(|c| t.column_index(&c.name).ok_or_else(|| Error::Decompose(format!("missing column {}", c.name))))
            .collect::<Result<_>>()?;
        let pk: Vec<usize> = table
            .primary_key
            .iter()
            .map(|c| table.column_index(c).ok_or_else(|| Error::Decompose(format!("bad key column {c}"))))
            .collect::<Result<_>>()?;
        let mut seen: HashMap<Vec<GroupKey>, usize> = HashMap::new();
        let mut rows = Vec::new();
        for (r, wide_row) in t.rows.iter().enumerate() {
            let row: Vec<_> = pos.iter().map(|p| wide_row[*p].clone()).collect();
            let key: Vec<GroupKey> = pk.iter().map(|p| row[*p].group_key()).collect();
            let j = match seen.get(&key) {
                Some(&j) => {
                    let existing: &Vec<_> = &rows[j];
                    if !existing.iter().zip(&row).all(|(a, b): (&crate::value::Value, _)| a.identical(b)) {
                        return Err(Error::Decompose(format!(
                            "{}: rows sharing key {:?} disagree",
                            table.name, table.primary_key
                        )));
                    }
                    j
                }
                None => {
                    rows.push(row);
                    seen.insert(key, rows.len() - 1);
                    rows.len() - 1
                }
            };
            rowmap.set(ti, r, Some(j));
        }
        data.push(rows);
    }
    let bitmap = JoinBitmapIndex {
        tables: schema.tables.iter().map(|t| t.name.clone()).collect(),
        arrays: (0..k).map(|_| BitArray::ones(n)).collect(),
    };
    Ok(TestDatabase { wide: t.clone(), schema: schema.clone(), data, rowmap, bitmap })
}

/// `design` followed by `materialize` on the same table.
pub fn decompose(t: &WideTable, fds: &[FunctionalDependency]) -> Result<TestDatabase> {
    let schema = design(t, fds)?;
    materialize(&schema, t)
}
