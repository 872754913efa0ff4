mod common;

use joinprobe::dialect::Dialect;
use joinprobe::generator::hints::HintVariant;
use joinprobe::harness::{
    compare_and_report, differential_report, materialize_schema, open_engine, read_reports, replay, run_campaign,
    write_reports, CampaignConfig, Engine, MutantEngine, QueryContext, ReferenceEngine,
};
use joinprobe::model::{CompareMode, ResultSet};
use joinprobe::oracle::GroundTruth;
use joinprobe::value::Value;
use joinprobe::Result;

fn variant(label: &str) -> HintVariant {
    HintVariant { label: label.into(), sql: format!("SELECT /*+ {label} */ * FROM T"), session: Vec::new() }
}

fn rs(rows: Vec<Vec<Value>>) -> ResultSet {
    ResultSet::new(vec!["T.a".into()], rows)
}

fn gt(rows: Vec<Vec<Value>>) -> GroundTruth {
    GroundTruth {
        result: rs(rows),
        mode: CompareMode::FullSet,
        provenance: joinprobe::bitmap::BitArray::zeros(0),
    }
}

fn ctx() -> QueryContext<'static> {
    QueryContext { base_sql: "SELECT * FROM T", engine: "ref", iso_key: "00", ..QueryContext::default() }
}

fn small(engine: &str) -> CampaignConfig {
    CampaignConfig { engine: engine.into(), budget: 1500, workers: 2, ..CampaignConfig::default() }
}

#[test]
fn shopping_materializes_on_the_reference_engine() {
    let db = common::shopping();
    let mut e = ReferenceEngine::new();
    assert!(materialize_schema(&mut e, &db, Dialect::Generic, false).unwrap().is_empty());
    assert_eq!(e.catalog.tables.len(), 4);
    for (t, table) in e.catalog.tables.iter().enumerate() {
        assert_eq!(table.rows.len(), db.data[t].len());
    }
    // Running it twice drops and recreates.
    materialize_schema(&mut e, &db, Dialect::Generic, true).unwrap();
    assert_eq!(e.catalog.tables.len(), 4);
}

#[test]
fn noisy_bundles_read_back_exactly() {
    for seed in 0..20 {
        let (db, _) = common::random_noisy(seed, 60, 0.2);
        let mut e = ReferenceEngine::new();
        assert!(materialize_schema(&mut e, &db, Dialect::MySql, false).unwrap().is_empty());
        for (t, table) in e.catalog.tables.iter().enumerate() {
            assert_eq!(table.rows, db.materialized_rows(t), "seed {seed} table {}", table.name);
        }
    }
}

/// Loses the last row of every table on read.
struct Lossy(ReferenceEngine);

impl Engine for Lossy {
    fn spec(&self) -> String {
        "lossy".into()
    }
    fn capabilities(&self) -> joinprobe::harness::Capabilities {
        self.0.capabilities()
    }
    fn execute_ddl(&mut self, sql: &str) -> Result<()> {
        self.0.execute_ddl(sql)
    }
    fn execute_dml(&mut self, sql: &str) -> Result<usize> {
        self.0.execute_dml(sql)
    }
    fn execute_query(&mut self, sql: &str, session: &[String]) -> Result<ResultSet> {
        let mut r = self.0.execute_query(sql, session)?;
        r.rows.pop();
        Ok(r)
    }
}

#[test]
fn read_back_catches_a_lossy_engine() {
    let db = common::shopping();
    let differs = materialize_schema(&mut Lossy(ReferenceEngine::new()), &db, Dialect::Generic, false).unwrap();
    assert_eq!(differs, vec!["T1", "T2", "T3", "T4"]);
}

#[test]
fn empty_bundle_is_a_no_op() {
    let mut db = common::shopping();
    db.schema.tables.clear();
    db.schema.fks.clear();
    db.data.clear();
    let mut e = ReferenceEngine::new();
    materialize_schema(&mut e, &db, Dialect::Generic, false).unwrap();
    assert!(e.catalog.tables.is_empty());
}

#[test]
fn reference_engine_statements() {
    let mut e = ReferenceEngine::new();
    e.execute_ddl("CREATE TABLE t (RowID BIGINT NOT NULL, x DOUBLE, d DECIMAL(65,30), s VARCHAR(512))").unwrap();
    let n = e.execute_dml("INSERT INTO t (RowID, x, d, s) VALUES (0, 1, 2, 'a'), (1, -0.0E0, 2.50, NULL)").unwrap();
    assert_eq!(n, 2);
    let r = e.execute_query("SELECT t.x, t.d FROM t WHERE t.s IS NULL", &["SET optimizer_switch='x=on'".into()]).unwrap();
    assert_eq!(r.rows.len(), 1);
    assert!(matches!(r.rows[0][0], Value::Float(f) if f == 0.0 && f.is_sign_negative()));
    assert!(e.execute_dml("INSERT INTO t (RowID, x) VALUES (2, 'text')").is_err());
    assert!(e.execute_ddl("CREATE TABLE t (a BIGINT)").is_err());
    e.execute_ddl("DROP TABLE IF EXISTS t").unwrap();
    e.execute_ddl("DROP TABLE IF EXISTS t").unwrap();
    assert!(e.execute_ddl("DROP TABLE t").is_err());
    assert!(e.execute_query("SELECT * FROM t", &[]).is_err());
}

#[test]
fn mutant_without_faults_matches_reference() {
    let db = common::shopping();
    let mut r = ReferenceEngine::new();
    let mut m = MutantEngine::new(&[]);
    materialize_schema(&mut r, &db, Dialect::Generic, false).unwrap();
    materialize_schema(&mut m, &db, Dialect::Generic, false).unwrap();
    let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(4);
    for _ in 0..300 {
        let q = common::random_query(&db, &mut rng, Dialect::Generic);
        let sql = joinprobe::generator::render::render_sql(&q, &db.schema, Dialect::Generic).unwrap();
        let hinted = format!("SELECT /*+ hash_join(T1) */ {}", &sql["SELECT ".len()..]);
        for s in [&sql, &hinted] {
            assert_eq!(r.execute_query(s, &[]).unwrap(), m.execute_query(s, &[]).unwrap(), "{s}");
        }
    }
}

#[test]
fn report_per_failing_variant() {
    let truth = gt(vec![vec![1.into()], vec![2.into()]]);
    let good = rs(vec![vec![2.into()], vec![1.into()]]);
    let bad = rs(vec![vec![1.into()]]);
    let all_good = vec![(variant("base"), good.clone()), (variant("a"), good.clone()), (variant("b"), good.clone())];
    assert!(compare_and_report(&ctx(), &all_good, &truth).is_empty());

    let one_bad = vec![(variant("base"), good.clone()), (variant("a"), bad.clone()), (variant("b"), good.clone())];
    let reports = compare_and_report(&ctx(), &one_bad, &truth);
    assert_eq!(reports.len(), 1);
    assert_eq!(reports[0].hint, "a");
    assert_eq!(reports[0].diff.missing, vec![vec![Value::Int(2)]]);
    assert_eq!(differential_report(&ctx(), &one_bad).len(), 1);

    // Consistently wrong: every variant is reported and they share one
    // iso key, so one bug class; comparing variants alone finds nothing.
    let all_bad = vec![(variant("base"), bad.clone()), (variant("a"), bad.clone()), (variant("b"), bad.clone())];
    let reports = compare_and_report(&ctx(), &all_bad, &truth);
    assert_eq!(reports.len(), 3);
    let classes: std::collections::HashSet<_> = reports.iter().map(|r| r.iso_key.clone()).collect();
    assert_eq!(classes.len(), 1);
    assert!(differential_report(&ctx(), &all_bad).is_empty());

    let wrong_arity = vec![(variant("base"), ResultSet::new(vec!["x".into(), "y".into()], vec![]))];
    assert_eq!(compare_and_report(&ctx(), &wrong_arity, &truth).len(), 1);
}

#[test]
fn subset_mode_tolerates_extra_rows() {
    let mut truth = gt(vec![vec![1.into()]]);
    truth.mode = CompareMode::SubSet;
    let got = vec![(variant("base"), rs(vec![vec![1.into()], vec![7.into()]]))];
    assert!(compare_and_report(&ctx(), &got, &truth).is_empty());
    let got = vec![(variant("base"), rs(vec![vec![7.into()]]))];
    assert_eq!(compare_and_report(&ctx(), &got, &truth).len(), 1);
}

#[test]
fn reference_engine_has_no_false_positives() {
    let mut queries = 0;
    for seed in 0..10 {
        let cfg = CampaignConfig {
            dataset: format!("builtin:synthetic:{seed}"),
            budget: 10_000,
            no_kqe: true,
            epsilon: 0.2,
            seed,
            workers: 1,
            ..CampaignConfig::default()
        };
        let out = run_campaign(&cfg).unwrap();
        assert!(out.summary.aborted.is_none());
        assert_eq!(out.summary.engine_errors, 0, "{:?}", out.summary.engine_error_samples);
        assert_eq!(out.summary.bugs, 0, "{:?}", out.bugs.first());
        queries += out.summary.queries - out.summary.skipped_queries;
    }
    assert!(queries >= 100_000, "{queries}");
}

#[test]
fn neg_zero_fault_shows_in_the_diff() {
    let out = run_campaign(&small("mutant:neg-zero")).unwrap();
    assert!(out.summary.bugs > 0);
    let zero = |r: &Vec<Value>| r.iter().any(|v| matches!(v, Value::Float(f) if *f == 0.0));
    assert!(out.bugs.iter().any(|b| b.diff.missing.iter().chain(&b.diff.extra).any(zero)));
}

#[test]
fn hash_drop_only_hits_hash_variants() {
    let out = run_campaign(&small("mutant:hash-drop")).unwrap();
    assert!(out.summary.bugs > 0);
    assert!(out.bugs.iter().all(|b| b.hint == "hash_join"), "{:?}", out.summary.bugs_by_hint);
    let diff = run_campaign(&CampaignConfig { no_gt: true, ..small("mutant:hash-drop") }).unwrap();
    assert!(diff.summary.bugs > 0);
}

#[test]
fn campaigns_are_reproducible() {
    let cfg = CampaignConfig { seed: 9, ..small("mutant") };
    let a = run_campaign(&cfg).unwrap();
    let b = run_campaign(&CampaignConfig { workers: 1, ..cfg.clone() }).unwrap();
    assert!(a.summary.bugs > 0);
    assert!(a.summary.aborted.is_none());
    assert_eq!(a.summary.readback_mismatches, vec!["T3"]);
    assert_eq!(a.bugs, b.bugs);
    assert_eq!(a.summary.distinct_iso_classes, b.summary.distinct_iso_classes);
    let mut buf_a = Vec::new();
    let mut buf_b = Vec::new();
    write_reports(&mut buf_a, &a.bugs).unwrap();
    write_reports(&mut buf_b, &b.bugs).unwrap();
    assert_eq!(buf_a, buf_b);
    assert_eq!(read_reports(buf_a.as_slice()).unwrap(), a.bugs);
}

#[test]
fn bug_reports_replay() {
    let out = run_campaign(&CampaignConfig { budget: 400, ..small("mutant") }).unwrap();
    assert!(!out.bugs.is_empty());
    for b in out.bugs.iter().take(20) {
        let mut e = open_engine(&b.engine).unwrap();
        let r = replay(b, e.as_mut()).unwrap();
        assert!(r.reproduced && r.same_result, "{}", b.sql);
        let mut reference = ReferenceEngine::new();
        assert!(!replay(b, &mut reference).unwrap().reproduced, "{}", b.sql);
    }
}

#[test]
fn unreachable_engine_aborts_with_a_summary() {
    let out = run_campaign(&small("mysql:mysql://root@localhost:3306/test")).unwrap();
    assert!(out.summary.aborted.is_some());
    assert_eq!(out.summary.queries, 0);
    assert!(run_campaign(&small("bogus")).is_err());
}

#[test]
fn config_file_mirrors_the_flags() {
    let text = r#"
        dataset = "builtin:synthetic:3"
        engine = "mutant:neg-zero"
        gamma = 3
        max_walk_len = 6
        epsilon = 0.1
        seed = 42
        budget = 50
        no_noise = true
        no_gt = false
        no_kqe = true
        workers = 1
        [generator]
        filter_prob = 0.5
    "#;
    let cfg = CampaignConfig::from_toml(text).unwrap();
    assert_eq!(cfg.engine, "mutant:neg-zero");
    assert_eq!((cfg.gamma, cfg.max_walk_len, cfg.seed, cfg.budget), (3, 6, 42, 50));
    assert!(cfg.no_noise && cfg.no_kqe && !cfg.no_gt);
    assert_eq!(cfg.generator.filter_prob, 0.5);
    assert_eq!(cfg.generator.aggregate_prob, CampaignConfig::default().generator.aggregate_prob);
    let out = run_campaign(&cfg).unwrap();
    assert_eq!(out.summary.queries, 50);
    assert_eq!(out.summary.noise_targets, 0);
    assert!(CampaignConfig::from_toml("budgett = 3").is_err());
    assert!(run_campaign(&CampaignConfig { epsilon: 2.0, ..cfg }).is_err());
}

#[test]
fn outputs_are_written() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_campaign(&CampaignConfig { budget: 200, ..small("mutant") }).unwrap();
    out.write(dir.path()).unwrap();
    let bugs = read_reports(std::io::BufReader::new(std::fs::File::open(dir.path().join("bugs.jsonl")).unwrap())).unwrap();
    assert_eq!(bugs, out.bugs);
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["queries"], 200);
    let resumed = CampaignConfig { budget: 10, resume_index: Some(dir.path().join("index.gidx")), ..small("ref") };
    let again = run_campaign(&resumed).unwrap();
    assert_eq!(again.index.len(), out.index.len() + again.index.len() - out.index.len());
    assert!(again.index.len() >= out.index.len() + 10);
}
