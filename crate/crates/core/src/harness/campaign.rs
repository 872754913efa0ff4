//! The testing campaign: generate, execute, compare, report.

use std::collections::{BTreeMap, HashSet};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::engine::{open_engine, Engine};
use super::report::{compare_and_report, differential_report, write_reports, BugReport, QueryContext};
use crate::database::TestDatabase;
use crate::dialect::Dialect;
use crate::error::{Error, Result};
use crate::fixture;
use crate::generator::ast::QueryAst;
use crate::generator::graph::{build_schema_graph, WalkRules};
use crate::generator::hints::{hint_variants, HintTable, HintedQuery};
use crate::generator::render::render_sql;
use crate::generator::walk::{walk_to_ast, GenConfig};
use crate::kqe::{run_epoch, wl_hash, GraphIndex, PlanIterativeGraph, QueryGraph, WalkParams, EMBED_DIM};
use crate::model::{multiset_compare, CompareMode, ResultSet};
use crate::noise::{inject, NoisePlan};
use crate::normalizer::{ddl, normalize, NormalizeConfig};
use crate::oracle::ground_truth;

/// Queries generated before a parallel execution round.
const BATCH: usize = 512;
/// Engine error messages kept in the summary.
const ERROR_SAMPLES: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CampaignConfig {
    /// `builtin:shopping`, `builtin:synthetic:<seed>` or a CSV path.
    pub dataset: String,
    pub engine: String,
    /// Hint rule file; the engine dialect's built-in rules otherwise.
    pub hints: Option<PathBuf>,
    /// Walks per table vertex in each epoch.
    pub gamma: usize,
    pub max_walk_len: usize,
    pub epsilon: f64,
    pub seed: u64,
    /// Number of base queries to run.
    pub budget: usize,
    /// Optional wall-clock cap; makes the query count timing dependent.
    pub time_limit_secs: Option<u64>,
    pub no_noise: bool,
    pub no_gt: bool,
    pub no_kqe: bool,
    /// Engine connections; 0 uses one per core.
    pub workers: usize,
    /// Neighbours averaged by the coverage score.
    pub k: usize,
    pub max_subquery_depth: usize,
    /// Declare keys in the emitted DDL.
    pub constraints: bool,
    /// Graph index snapshot to start from.
    pub resume_index: Option<PathBuf>,
    pub generator: GenConfig,
}

impl Default for CampaignConfig {
    fn default() -> Self {
        let walk = WalkParams::default();
        CampaignConfig {
            dataset: "builtin:shopping".into(),
            engine: "ref".into(),
            hints: None,
            gamma: 10,
            max_walk_len: walk.max_len,
            epsilon: 0.05,
            seed: 0,
            budget: 10_000,
            time_limit_secs: None,
            no_noise: false,
            no_gt: false,
            no_kqe: false,
            workers: 0,
            k: walk.k,
            max_subquery_depth: walk.rules.max_subquery_depth,
            constraints: false,
            resume_index: None,
            generator: GenConfig::default(),
        }
    }
}

impl CampaignConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        CampaignConfig::from_toml(&std::fs::read_to_string(path)?)
    }

    fn validate(&self) -> Result<()> {
        if self.gamma == 0 || self.max_walk_len == 0 || self.k == 0 {
            return Err(Error::Config("gamma, max_walk_len and k must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.epsilon) {
            return Err(Error::Config(format!("epsilon {} is outside [0, 1]", self.epsilon)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CampaignSummary {
    pub engine: String,
    pub seed: u64,
    pub queries: usize,
    pub variants_executed: usize,
    pub distinct_iso_classes: usize,
    /// Failing variants before deduplication.
    pub mismatches: usize,
    /// Reports after deduplication on (iso key, hint).
    pub bugs: usize,
    /// Distinct iso keys among the reports.
    pub bug_classes: usize,
    pub bugs_by_hint: BTreeMap<String, usize>,
    /// Queries whose ground truth could not be computed.
    pub skipped_queries: usize,
    pub engine_errors: usize,
    pub engine_error_samples: Vec<String>,
    pub noise_targets: usize,
    /// Tables whose contents read back differently after loading.
    pub readback_mismatches: Vec<String>,
    /// Set when the campaign stopped on an engine failure.
    pub aborted: Option<String>,
    pub elapsed_ms: u64,
}

#[derive(Debug, Clone)]
pub struct CampaignOutcome {
    pub summary: CampaignSummary,
    pub bugs: Vec<BugReport>,
    pub index: GraphIndex,
}

impl CampaignOutcome {
    /// `bugs.jsonl`, `summary.json` and `index.gidx` under `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        write_reports(std::io::BufWriter::new(std::fs::File::create(dir.join("bugs.jsonl"))?), &self.bugs)?;
        let summary = serde_json::to_string_pretty(&self.summary).map_err(|e| Error::Input(e.to_string()))?;
        std::fs::write(dir.join("summary.json"), summary + "\n")?;
        self.index.write_snapshot(std::io::BufWriter::new(std::fs::File::create(dir.join("index.gidx"))?))
    }
}

/// Create and fill every table on `engine`, then read each back. Returns
/// the tables whose read-back differs from the local rows; a rejected
/// statement is an error.
pub fn materialize_schema(
    engine: &mut dyn Engine,
    db: &TestDatabase,
    dialect: Dialect,
    constraints: bool,
) -> Result<Vec<String>> {
    for s in ddl::drop_statements(db).iter().chain(&ddl::create_statements(db, dialect, constraints)) {
        engine.execute_ddl(s)?;
    }
    for s in ddl::insert_statements(db) {
        engine.execute_dml(&s)?;
    }
    let mut differs = Vec::new();
    for (t, def) in db.schema.tables.iter().enumerate() {
        let got = engine.execute_query(&format!("SELECT * FROM {}", def.name), &[])?;
        let want = ResultSet::new(db.materialized_columns(t), db.materialized_rows(t));
        if !multiset_compare(&got, &want, CompareMode::FullSet).is_ok_and(|o| o.is_match()) {
            log::warn!("read-back of {} differs from the inserted rows", def.name);
            differs.push(def.name.clone());
        }
    }
    Ok(differs)
}

struct Job {
    index: usize,
    ast: QueryAst,
    hinted: HintedQuery,
    iso_key: String,
}

#[derive(Default)]
struct JobResult {
    reports: Vec<BugReport>,
    variants: usize,
    errors: Vec<String>,
    skipped: bool,
}

struct Shared<'a> {
    db: &'a TestDatabase,
    script: &'a [String],
    no_gt: bool,
    noise_seed: Option<u64>,
}

fn run_job(job: &Job, engine: &mut dyn Engine, spec: &str, sh: &Shared) -> JobResult {
    let mut out = JobResult::default();
    let gt = if sh.no_gt {
        None
    } else {
        match ground_truth(&job.ast, sh.db) {
            Ok(gt) => Some(gt),
            Err(e) => {
                log::debug!("query {}: no ground truth: {e}", job.index);
                out.skipped = true;
                return out;
            }
        }
    };
    let mut results = Vec::new();
    for v in job.hinted.all() {
        out.variants += 1;
        match engine.execute_query(&v.sql, &v.session) {
            Ok(rs) => results.push((v, rs)),
            Err(e) => {
                log::warn!("query {} variant {}: {e}", job.index, v.label);
                out.errors.push(format!("{}: {e}", v.label));
            }
        }
    }
    let ctx = QueryContext {
        query_index: job.index,
        base_sql: &job.hinted.base,
        script: sh.script,
        engine: spec,
        iso_key: &job.iso_key,
        noise_seed: sh.noise_seed,
    };
    out.reports = match &gt {
        Some(gt) => compare_and_report(&ctx, &results, gt),
        None => differential_report(&ctx, &results),
    };
    out
}

fn open_engines(cfg: &CampaignConfig) -> Result<Vec<Box<dyn Engine>>> {
    let n = if cfg.workers == 0 { rayon::current_num_threads() } else { cfg.workers };
    (0..n.max(1)).map(|_| open_engine(&cfg.engine)).collect()
}

/// Run a whole campaign. Query generation is sequential and seeded, so the
/// set of queries and reports depends only on the config; execution is
/// spread over the workers.
pub fn run_campaign(cfg: &CampaignConfig) -> Result<CampaignOutcome> {
    cfg.validate()?;
    let started = Instant::now();
    let mut db = normalize(&fixture::load(&cfg.dataset)?, &NormalizeConfig::default())?;
    let mut summary = CampaignSummary { engine: cfg.engine.clone(), seed: cfg.seed, ..CampaignSummary::default() };
    let noise_seed = if cfg.no_noise {
        None
    } else {
        let plan = NoisePlan::generate(&db, cfg.epsilon, cfg.seed);
        summary.noise_targets = plan.targets.len();
        db = inject(&db, &plan)?;
        Some(plan.seed)
    };
    let mut index = match &cfg.resume_index {
        Some(p) => GraphIndex::read_snapshot(std::io::BufReader::new(std::fs::File::open(p)?))?,
        None => GraphIndex::new(EMBED_DIM),
    };

    let mut engines = match open_engines(cfg) {
        Ok(e) => e,
        Err(e @ Error::Config(_)) => return Err(e),
        Err(e) => {
            summary.aborted = Some(e.to_string());
            summary.elapsed_ms = started.elapsed().as_millis() as u64;
            return Ok(CampaignOutcome { summary, bugs: Vec::new(), index });
        }
    };
    let spec = engines[0].spec();
    summary.engine = spec.clone();
    let dialect = engines[0].capabilities().dialect;
    for e in engines.iter_mut() {
        match materialize_schema(e.as_mut(), &db, dialect, cfg.constraints) {
            Ok(differs) => summary.readback_mismatches = differs,
            Err(e) => {
                summary.aborted = Some(e.to_string());
                summary.elapsed_ms = started.elapsed().as_millis() as u64;
                return Ok(CampaignOutcome { summary, bugs: Vec::new(), index });
            }
        }
    }

    let hints = match &cfg.hints {
        Some(p) => HintTable::load(p)?,
        None => HintTable::builtin(dialect),
    };
    let pg = PlanIterativeGraph::new(build_schema_graph(&db.schema));
    let params = WalkParams {
        max_len: cfg.max_walk_len,
        k: cfg.k,
        uniform: cfg.no_kqe,
        rules: WalkRules { dialect, max_subquery_depth: cfg.max_subquery_depth },
    };
    let generator = GenConfig { max_subquery_depth: cfg.max_subquery_depth, ..cfg.generator };
    let script: Vec<String> = ddl::drop_statements(&db)
        .into_iter()
        .chain(ddl::create_statements(&db, dialect, cfg.constraints))
        .chain(ddl::insert_statements(&db))
        .collect();
    let shared = Shared { db: &db, script: &script, no_gt: cfg.no_gt, noise_seed };
    let deadline = cfg.time_limit_secs.map(|s| started + std::time::Duration::from_secs(s));

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(1);
    let mut iso = HashSet::new();
    let mut seen = HashSet::new();
    let mut bugs = Vec::new();
    let mut pending: Vec<Job> = Vec::new();
    let mut generated = 0;
    while generated < cfg.budget && deadline.is_none_or(|d| Instant::now() < d) {
        for walk in run_epoch(&pg, cfg.gamma, &mut index, &params, &mut rng)? {
            if generated == cfg.budget {
                break;
            }
            let key = wl_hash(&QueryGraph::from_walk(&walk, &pg.schema));
            let ast = walk_to_ast(&walk, &db, &generator, &mut rng)?;
            let sql = render_sql(&ast, &db.schema, dialect)?;
            let hinted = hint_variants(&sql, &ast, &hints);
            iso.insert(key);
            pending.push(Job { index: generated, ast, hinted, iso_key: format!("{key:016x}") });
            generated += 1;
        }
        if pending.len() >= BATCH || generated == cfg.budget {
            let chunk = pending.len().div_ceil(engines.len()).max(1);
            let results: Vec<Vec<JobResult>> = engines
                .par_iter_mut()
                .zip(pending.par_chunks(chunk))
                .map(|(e, jobs)| jobs.iter().map(|j| run_job(j, e.as_mut(), &spec, &shared)).collect())
                .collect();
            for r in results.into_iter().flatten() {
                summary.queries += 1;
                summary.variants_executed += r.variants;
                summary.skipped_queries += r.skipped as usize;
                summary.engine_errors += r.errors.len();
                let room = ERROR_SAMPLES.saturating_sub(summary.engine_error_samples.len());
                summary.engine_error_samples.extend(r.errors.into_iter().take(room));
                summary.mismatches += r.reports.len();
                for b in r.reports {
                    if seen.insert(b.dedup_key()) {
                        bugs.push(b);
                    }
                }
            }
            pending.clear();
        }
    }

    summary.distinct_iso_classes = iso.len();
    summary.bugs = bugs.len();
    summary.bug_classes = bugs.iter().map(|b| &b.iso_key).collect::<HashSet<_>>().len();
    for b in &bugs {
        *summary.bugs_by_hint.entry(b.hint.clone()).or_default() += 1;
    }
    summary.elapsed_ms = started.elapsed().as_millis() as u64;
    Ok(CampaignOutcome { summary, bugs, index })
}
