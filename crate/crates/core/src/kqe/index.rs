//! Exact-scan KNN index over walk embeddings, with a binary snapshot.

use std::collections::HashMap;
use std::io::{Read, Write};

use super::embed::cosine;
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"GIDX";

/// Append-only store of (embedding, walk id). Identical vectors share one
/// slot with a multiplicity, so scans cost one cosine per distinct vector.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct GraphIndex {
    dim: usize,
    vectors: Vec<Vec<f32>>,
    counts: Vec<usize>,
    slots: HashMap<Vec<u32>, usize>,
    /// Insertion order: (slot, walk id).
    entries: Vec<(usize, u64)>,
}

/// Dot product of unit vectors; stored vectors are L2-normalized.
fn dot(a: &[f32], b: &[f32]) -> f64 {
    let mut acc = [0f32; 8];
    let (ca, cb) = (a.chunks_exact(8), b.chunks_exact(8));
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for i in 0..8 {
            acc[i] += x[i] * y[i];
        }
    }
    let tail: f32 = ra.iter().zip(rb).map(|(x, y)| x * y).sum();
    (acc.iter().sum::<f32>() + tail) as f64
}

fn bits(v: &[f32]) -> Vec<u32> {
    v.iter().map(|x| x.to_bits()).collect()
}

impl GraphIndex {
    pub fn new(dim: usize) -> Self {
        GraphIndex { dim, ..Default::default() }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn distinct(&self) -> usize {
        self.vectors.len()
    }

    pub fn insert(&mut self, v: Vec<f32>, walk_id: u64) -> Result<()> {
        if v.len() != self.dim {
            return Err(Error::Index(format!("vector of dimension {} in a {}-d index", v.len(), self.dim)));
        }
        let key = bits(&v);
        let slot = match self.slots.get(&key) {
            Some(s) => *s,
            None => {
                self.vectors.push(v);
                self.counts.push(0);
                self.slots.insert(key, self.vectors.len() - 1);
                self.vectors.len() - 1
            }
        };
        self.counts[slot] += 1;
        self.entries.push((slot, walk_id));
        Ok(())
    }

    /// Similarities of the `k` most similar entries, descending.
    pub fn knn(&self, q: &[f32], k: usize) -> Vec<f64> {
        let exact = self.slots.get(&bits(q)).copied();
        let unit = (q.iter().map(|x| x * x).sum::<f32>() - 1.0).abs() < 1e-4;
        let mut sims: Vec<(f64, usize)> = self
            .vectors
            .iter()
            .zip(&self.counts)
            .enumerate()
            .map(|(i, (v, c))| {
                let s = if exact == Some(i) {
                    1.0
                } else if unit {
                    dot(q, v).clamp(0.0, 1.0)
                } else {
                    cosine(q, v)
                };
                (s, *c)
            })
            .collect();
        sims.sort_by(|a, b| b.0.total_cmp(&a.0));
        let mut out = Vec::with_capacity(k);
        for (s, c) in sims {
            for _ in 0..c {
                if out.len() == k {
                    return out;
                }
                out.push(s);
            }
        }
        out
    }

    /// Entries in insertion order.
    pub fn iter(&self) -> impl Iterator<Item = (&[f32], u64)> {
        self.entries.iter().map(|(s, id)| (self.vectors[*s].as_slice(), *id))
    }

    /// `GIDX`, u32 dimension, u64 count, then per entry a u64 walk id and
    /// `dim` f32 values, all little-endian.
    pub fn write_snapshot(&self, mut w: impl Write) -> Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&(self.dim as u32).to_le_bytes())?;
        w.write_all(&(self.entries.len() as u64).to_le_bytes())?;
        for (v, id) in self.iter() {
            w.write_all(&id.to_le_bytes())?;
            for x in v {
                w.write_all(&x.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn read_snapshot(mut r: impl Read) -> Result<GraphIndex> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Index("not a graph index snapshot".into()));
        }
        let mut b4 = [0u8; 4];
        let mut b8 = [0u8; 8];
        r.read_exact(&mut b4)?;
        let dim = u32::from_le_bytes(b4) as usize;
        r.read_exact(&mut b8)?;
        let count = u64::from_le_bytes(b8);
        let mut gi = GraphIndex::new(dim);
        for _ in 0..count {
            r.read_exact(&mut b8)?;
            let id = u64::from_le_bytes(b8);
            let mut v = Vec::with_capacity(dim);
            for _ in 0..dim {
                r.read_exact(&mut b4)?;
                v.push(f32::from_le_bytes(b4));
            }
            gi.insert(v, id)?;
        }
        Ok(gi)
    }
}
