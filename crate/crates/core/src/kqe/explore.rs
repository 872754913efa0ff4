//! Coverage-guided adaptive random walks.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::weighted::WeightedAliasIndex;
use rand_distr::Distribution;
use rayon::prelude::*;

use super::embed::embed;
use super::graph::{PlanIterativeGraph, QueryGraph};
use super::index::GraphIndex;
use crate::error::{Error, Result};
use crate::generator::graph::{WalkRules, WalkState};
use crate::generator::walk::Walk;

/// Mean similarity of `g` to its `k` nearest entries in `gi`; 0 when the
/// index is empty.
pub fn coverage(g: &QueryGraph, gi: &GraphIndex, k: usize) -> f64 {
    coverage_of(&embed(g), gi, k)
}

pub fn coverage_of(v: &[f32], gi: &GraphIndex, k: usize) -> f64 {
    let sims = gi.knn(v, k.max(1));
    if sims.is_empty() {
        0.0
    } else {
        sims.iter().sum::<f64>() / sims.len() as f64
    }
}

pub fn transition_probability(g_next: &QueryGraph, gi: &GraphIndex, k: usize) -> f64 {
    1.0 / (coverage(g_next, gi, k) + 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WalkParams {
    pub max_len: usize,
    pub k: usize,
    /// Score every candidate at 1 instead of by coverage.
    pub uniform: bool,
    pub rules: WalkRules,
}

impl Default for WalkParams {
    fn default() -> Self {
        WalkParams { max_len: 12, k: 5, uniform: false, rules: WalkRules::default() }
    }
}

/// One walk from table vertex `start`. The length is drawn from
/// `1..=max_len`; each step scores every allowed extension, stops when the
/// best score falls below the score of the previous step, and otherwise
/// alias-samples an extension by score.
pub fn adaptive_random_walk(
    pg: &PlanIterativeGraph,
    start: usize,
    gi: &GraphIndex,
    params: &WalkParams,
    rng: &mut impl Rng,
) -> Result<Walk> {
    let g = &pg.schema;
    if start >= g.tables.len() {
        return Err(Error::Generate(format!("vertex {start} is not a table vertex")));
    }
    let len = rng.random_range(1..=params.max_len.max(1));
    let mut walk = Walk::single(g.tables[start].clone());
    let mut state = WalkState::start(start);
    let mut graph = QueryGraph::default();
    let mut tables = vec![(g.tables[start].clone(), graph.add_vertex(super::graph::TABLE_LABEL))];
    let mut pi_end = 0.0;
    for _ in 0..len {
        let candidates = state.candidates(g, &params.rules);
        if candidates.is_empty() {
            break;
        }
        let weights: Vec<f64> = if params.uniform {
            vec![1.0; candidates.len()]
        } else {
            candidates
                .par_iter()
                .map(|c| {
                    let mut next = graph.clone();
                    let mut t = tables.clone();
                    next.push_step(c, g, &mut t);
                    transition_probability(&next, gi, params.k)
                })
                .collect()
        };
        let best = weights.iter().copied().fold(f64::MIN, f64::max);
        if best < pi_end {
            break;
        }
        let alias = WeightedAliasIndex::new(weights.clone()).map_err(|e| Error::Generate(format!("alias table: {e}")))?;
        let i = alias.sample(rng);
        graph.push_step(&candidates[i], g, &mut tables);
        state.apply(g, &candidates[i]);
        walk.steps.push(candidates[i].clone());
        pi_end = weights[i];
    }
    Ok(walk)
}

/// `gamma` passes over the shuffled table vertices, one walk from each;
/// every walk's embedding goes into `gi` as soon as it is drawn. Walk ids
/// continue from the index size.
pub fn run_epoch(
    pg: &PlanIterativeGraph,
    gamma: usize,
    gi: &mut GraphIndex,
    params: &WalkParams,
    rng: &mut impl Rng,
) -> Result<Vec<Walk>> {
    let mut out = Vec::new();
    for _ in 0..gamma {
        let mut order: Vec<usize> = (0..pg.schema.tables.len()).collect();
        order.shuffle(rng);
        for v in order {
            let w = adaptive_random_walk(pg, v, gi, params, rng)?;
            gi.insert(embed(&QueryGraph::from_walk(&w, &pg.schema)), gi.len() as u64)?;
            out.push(w);
        }
    }
    Ok(out)
}
