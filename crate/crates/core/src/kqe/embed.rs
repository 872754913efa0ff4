//! Weisfeiler-Lehman structural embedding of query graphs.

use std::hash::Hasher;

use fnv::FnvHasher;

use super::graph::QueryGraph;

pub const EMBED_DIM: usize = 128;
pub const WL_ITERATIONS: usize = 3;

fn hash_str(s: &str) -> u64 {
    let mut h = FnvHasher::default();
    h.write(s.as_bytes());
    h.finish()
}

/// Vertex labels after each refinement round, round 0 being the raw labels.
/// A vertex's next label hashes its current label with the sorted multiset
/// of (edge label, direction, neighbour label).
pub fn wl_labels(g: &QueryGraph, iterations: usize) -> Vec<Vec<u64>> {
    let mut rounds = vec![g.labels.iter().map(|l| hash_str(l)).collect::<Vec<u64>>()];
    let edge_labels: Vec<u64> = g.edges.iter().map(|(_, _, l)| hash_str(l)).collect();
    for _ in 0..iterations {
        let cur = rounds.last().expect("round 0 exists");
        let mut neigh: Vec<Vec<(u64, u8, u64)>> = vec![Vec::new(); g.labels.len()];
        for ((a, b, _), el) in g.edges.iter().zip(&edge_labels) {
            neigh[*a].push((*el, 0, cur[*b]));
            neigh[*b].push((*el, 1, cur[*a]));
        }
        let next = neigh
            .iter_mut()
            .zip(cur)
            .map(|(n, own)| {
                n.sort_unstable();
                let mut h = FnvHasher::default();
                h.write_u64(*own);
                for (e, d, l) in n.iter() {
                    h.write_u64(*e);
                    h.write_u8(*d);
                    h.write_u64(*l);
                }
                h.finish()
            })
            .collect();
        rounds.push(next);
    }
    rounds
}

/// Isomorphism-class key: hash of the sorted multiset of all WL labels.
pub fn wl_hash(g: &QueryGraph) -> u64 {
    let mut all: Vec<u64> = wl_labels(g, WL_ITERATIONS).into_iter().flatten().collect();
    all.sort_unstable();
    let mut h = FnvHasher::default();
    h.write_usize(g.edges.len());
    for l in all {
        h.write_u64(l);
    }
    h.finish()
}

/// L2-normalized count vector of the refined labels (rounds 1..=3) hashed
/// into [`EMBED_DIM`] buckets. Graphs without edges fall back to round 0.
pub fn embed(g: &QueryGraph) -> Vec<f32> {
    let rounds = wl_labels(g, WL_ITERATIONS);
    let mut v = vec![0f64; EMBED_DIM];
    let used: &[Vec<u64>] = if g.edges.is_empty() { &rounds[..1] } else { &rounds[1..] };
    for (i, round) in used.iter().enumerate() {
        for l in round {
            let mut h = FnvHasher::default();
            h.write_usize(i);
            h.write_u64(*l);
            v[(h.finish() % EMBED_DIM as u64) as usize] += 1.0;
        }
    }
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        for x in &mut v {
            *x /= norm;
        }
    }
    v.into_iter().map(|x| x as f32).collect()
}

pub fn cosine(a: &[f32], b: &[f32]) -> f64 {
    if a == b && a.iter().any(|x| *x != 0.0) {
        return 1.0;
    }
    let dot: f64 = a.iter().zip(b).map(|(x, y)| *x as f64 * *y as f64).sum();
    let na: f64 = a.iter().map(|x| (*x as f64).powi(2)).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| (*x as f64).powi(2)).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        (dot / (na * nb)).clamp(0.0, 1.0)
    }
}
