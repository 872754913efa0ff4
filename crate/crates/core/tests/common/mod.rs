#![allow(dead_code)]

use joinprobe::database::TestDatabase;
use joinprobe::dialect::Dialect;
use joinprobe::fixture;
use joinprobe::generator::ast::QueryAst;
use joinprobe::generator::graph::{build_schema_graph, random_walk, WalkRules};
use joinprobe::generator::walk::{walk_to_ast, GenConfig};
use joinprobe::noise::{inject, NoisePlan};
use joinprobe::normalizer::{normalize, NormalizeConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn shopping() -> TestDatabase {
    normalize(&fixture::shopping(), &NormalizeConfig::default()).unwrap()
}

pub fn random_bundle(seed: u64, max_rows: usize) -> TestDatabase {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows = rng.random_range(2..=max_rows);
    normalize(&fixture::synthetic(seed, rows), &NormalizeConfig::default()).unwrap()
}

pub fn random_noisy(seed: u64, max_rows: usize, epsilon: f64) -> (TestDatabase, NoisePlan) {
    let db = random_bundle(seed, max_rows);
    let plan = NoisePlan::generate(&db, epsilon, seed ^ 0x9e37_79b9);
    let noisy = inject(&db, &plan).unwrap();
    (noisy, plan)
}

pub fn random_query(db: &TestDatabase, rng: &mut impl Rng, dialect: Dialect) -> QueryAst {
    let g = build_schema_graph(&db.schema);
    let rules = WalkRules { dialect, max_subquery_depth: 2 };
    let start = rng.random_range(0..g.tables.len());
    let walk = random_walk(&g, start, 5, &rules, rng);
    walk_to_ast(&walk, db, &GenConfig::default(), rng).unwrap()
}
