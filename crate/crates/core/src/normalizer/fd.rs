//! Exact functional-dependency discovery by partition refinement.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::model::{FunctionalDependency, WideTable};
use crate::value::GroupKey;

/// Per-column class ids: rows with SQL-equal values (NULL grouped with NULL)
/// share an id.
pub(crate) fn column_classes(t: &WideTable) -> Vec<Vec<u32>> {
    (0..t.columns.len())
        .map(|c| {
            let mut ids: HashMap<GroupKey, u32> = HashMap::new();
            t.rows
                .iter()
                .map(|r| {
                    let next = ids.len() as u32;
                    *ids.entry(r[c].group_key()).or_insert(next)
                })
                .collect()
        })
        .collect()
}

/// Partition of the rows by their values on `cols`, as dense class ids.
pub(crate) fn partition(classes: &[Vec<u32>], rows: usize, cols: &[usize]) -> (Vec<u32>, usize) {
    let mut ids = vec![0u32; rows];
    let mut count = usize::from(rows > 0);
    for &c in cols {
        let mut map: HashMap<(u32, u32), u32> = HashMap::with_capacity(count * 2);
        for (i, id) in ids.iter_mut().enumerate() {
            let next = map.len() as u32;
            *id = *map.entry((*id, classes[c][i])).or_insert(next);
        }
        count = map.len();
    }
    (ids, count)
}

/// Whether column `a` is constant within every class of the partition.
pub(crate) fn refines(ids: &[u32], count: usize, a: &[u32]) -> bool {
    let mut first = vec![u32::MAX; count];
    for (i, &cls) in ids.iter().enumerate() {
        let slot = &mut first[cls as usize];
        if *slot == u32::MAX {
            *slot = a[i];
        } else if *slot != a[i] {
            return false;
        }
    }
    true
}

fn subsets_of_size(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            go(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(0, n, k, &mut Vec::with_capacity(k), &mut out);
    out
}

/// All minimal FDs `X -> A` with `1 <= |X| <= max_lhs` holding exactly on
/// `t`, grouped by left-hand side. Names inside each side and the list itself
/// are sorted lexicographically.
pub fn discover_fds(t: &WideTable, max_lhs: usize, max_columns: usize) -> Result<Vec<FunctionalDependency>> {
    let ncols = t.columns.len();
    if ncols > max_columns {
        return Err(Error::Input(format!(
            "{ncols} columns exceed the FD discovery limit of {max_columns}"
        )));
    }
    if ncols > 64 {
        return Err(Error::Input("FD discovery supports at most 64 columns".into()));
    }
    let classes = column_classes(t);
    let n = t.len();
    // minimal[a] holds bit masks of the minimal left-hand sides found for a.
    let mut minimal: Vec<Vec<u64>> = vec![Vec::new(); ncols];
    let mut found: Vec<(u64, usize)> = Vec::new();
    for k in 1..=max_lhs.min(ncols.saturating_sub(1)) {
        for lhs in subsets_of_size(ncols, k) {
            let mask = lhs.iter().fold(0u64, |m, c| m | 1 << c);
            let candidates: Vec<usize> = (0..ncols)
                .filter(|a| mask & (1 << a) == 0)
                .filter(|a| !minimal[*a].iter().any(|m| m & mask == *m))
                .collect();
            if candidates.is_empty() {
                continue;
            }
            let (ids, count) = partition(&classes, n, &lhs);
            for a in candidates {
                if count == n || refines(&ids, count, &classes[a]) {
                    minimal[a].push(mask);
                    found.push((mask, a));
                }
            }
        }
    }
    let name = |c: usize| t.columns[c].name.clone();
    let mut grouped: std::collections::BTreeMap<Vec<String>, Vec<String>> = std::collections::BTreeMap::new();
    for (mask, a) in found {
        let mut lhs: Vec<String> = (0..ncols).filter(|c| mask & (1 << c) != 0).map(name).collect();
        lhs.sort();
        grouped.entry(lhs).or_default().push(name(a));
    }
    Ok(grouped
        .into_iter()
        .map(|(lhs, mut rhs)| {
            rhs.sort();
            FunctionalDependency { lhs, rhs }
        })
        .collect())
}

/// Whether `fd` holds on `t`.
pub fn holds(t: &WideTable, fd: &FunctionalDependency) -> Result<bool> {
    let idx = |names: &[String]| -> Result<Vec<usize>> {
        names
            .iter()
            .map(|c| t.column_index(c).ok_or_else(|| Error::Input(format!("unknown column {c}"))))
            .collect()
    };
    let lhs = idx(&fd.lhs)?;
    let rhs = idx(&fd.rhs)?;
    let classes = column_classes(t);
    let (ids, count) = partition(&classes, t.len(), &lhs);
    Ok(rhs.iter().all(|a| refines(&ids, count, &classes[*a])))
}
