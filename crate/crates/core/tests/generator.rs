mod common;

use joinprobe::bitmap::algebra::JoinOp;
use joinprobe::dialect::Dialect;
use joinprobe::fixture;
use joinprobe::generator::ast::{JoinKind, QueryAst, SemiJoin, SubqueryForm};
use joinprobe::generator::graph::{build_schema_graph, random_walk, WalkRules, WalkState};
use joinprobe::generator::hints::{hint_variants, HintTable};
use joinprobe::generator::parse::{parse_query, TableInfo};
use joinprobe::generator::render::render_sql;
use joinprobe::generator::walk::{walk_to_ast, GenConfig, Walk, WalkStep};
use joinprobe::normalizer::{normalize, NormalizeConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn shopping_schema_graph() {
    let db = common::shopping();
    let g = build_schema_graph(&db.schema);
    assert_eq!(g.tables, vec!["T1", "T2", "T3", "T4"]);
    let mut edges: Vec<(String, String)> =
        g.table_edges.iter().map(|(a, b)| (g.tables[*a].clone(), g.tables[*b].clone())).collect();
    edges.sort();
    let want = [("T1", "T2"), ("T1", "T3"), ("T3", "T4")];
    assert_eq!(edges, want.map(|(a, b)| (a.to_string(), b.to_string())).to_vec());
    // one membership edge per column vertex
    let n: usize = db.schema.tables.iter().map(|t| t.columns.len()).sum();
    assert_eq!(g.columns.len(), n);
}

#[test]
fn single_table_graph_has_no_joins() {
    let wide = joinprobe::model::WideTable::new(
        vec![joinprobe::model::Column::new("a", joinprobe::value::ColumnType::Int)],
        vec![vec![1.into()], vec![2.into()]],
    )
    .unwrap();
    let db = normalize(&wide, &NormalizeConfig::default()).unwrap();
    let g = build_schema_graph(&db.schema);
    assert!(g.table_edges.is_empty());
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let walk = Walk::single("T1");
    let ast = walk_to_ast(&walk, &db, &GenConfig::default(), &mut rng).unwrap();
    assert!(ast.joins.is_empty());
}

#[test]
fn random_schema_graph_edges_follow_fks() {
    for seed in 0..50 {
        let db = common::random_bundle(seed, 40);
        let g = build_schema_graph(&db.schema);
        assert_eq!(g.table_edges.len(), db.schema.fks.len());
        for (fk, (a, b)) in db.schema.fks.iter().zip(&g.table_edges) {
            assert_eq!(fk.child, g.tables[*a]);
            assert_eq!(fk.parent, g.tables[*b]);
        }
    }
}

#[test]
fn example_query_text() {
    let db = common::shopping();
    let walk = Walk {
        start: "T3".into(),
        steps: vec![
            WalkStep::Join { op: JoinOp::Inner, from: "T3".into(), to: "T4".into() },
        ],
    };
    let cfg = GenConfig { filter_prob: 0.0, subquery_prob: 0.0, aggregate_prob: 0.0, ..GenConfig::default() };
    let mut ast = walk_to_ast(&walk, &db, &cfg, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
    ast.filters = vec![joinprobe::generator::ast::Predicate::Compare {
        col: joinprobe::generator::ast::ColumnRef::new("T3", "goodsName"),
        op: joinprobe::generator::ast::CmpOp::Eq,
        value: "flower".into(),
    }];
    ast.projection = joinprobe::generator::ast::Projection::Columns(vec![joinprobe::generator::ast::ColumnRef::new(
        "T4", "price",
    )]);
    let sql = render_sql(&ast, &db.schema, Dialect::Generic).unwrap();
    assert_eq!(sql, "SELECT price FROM T3 INNER JOIN T4 WHERE T3.goodsName = T4.goodsName AND T3.goodsName = 'flower'");
}

#[test]
fn three_table_walk_joins_on_fk_columns() {
    let db = common::shopping();
    let walk = Walk {
        start: "T1".into(),
        steps: vec![
            WalkStep::Join { op: JoinOp::LeftOuter, from: "T1".into(), to: "T3".into() },
            WalkStep::Join { op: JoinOp::Anti, from: "T3".into(), to: "T4".into() },
        ],
    };
    let ast = walk_to_ast(&walk, &db, &GenConfig::default(), &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
    assert_eq!(ast.joins[0].kind, JoinKind::Left);
    assert_eq!(ast.joins[0].on.as_ref().unwrap().columns, vec!["goodsId"]);
    let anti = ast.semi.iter().find(|s| s.table == "T4").unwrap();
    assert!(anti.anti);
    assert_eq!(anti.columns, vec!["goodsName"]);
}

#[test]
fn anti_join_renders_not_exists_and_round_trips() {
    let db = common::shopping();
    let mut ast = QueryAst::single("T1");
    ast.semi.push(SemiJoin {
        anti: true,
        form: SubqueryForm::Exists,
        outer: "T1".into(),
        table: "T2".into(),
        columns: vec!["userId".into()],
        filters: vec![],
        nested: vec![],
    });
    let sql = render_sql(&ast, &db.schema, Dialect::MySql).unwrap();
    assert_eq!(sql, "SELECT * FROM T1 WHERE NOT EXISTS (SELECT * FROM T2 WHERE T2.userId = T1.userId)");
    assert_eq!(parse_query(&sql, &TableInfo::from_schema(&db.schema)).unwrap(), ast);
}

#[test]
fn full_outer_is_unsupported_on_mysql() {
    let db = common::shopping();
    let walk = Walk {
        start: "T1".into(),
        steps: vec![WalkStep::Join { op: JoinOp::FullOuter, from: "T1".into(), to: "T2".into() }],
    };
    let ast = walk_to_ast(&walk, &db, &GenConfig::default(), &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
    assert!(render_sql(&ast, &db.schema, Dialect::MySql).is_err());
    let g = build_schema_graph(&db.schema);
    let rules = WalkRules { dialect: Dialect::MySql, max_subquery_depth: 2 };
    let steps = WalkState::start(0).candidates(&g, &rules);
    assert!(!steps.iter().any(|s| matches!(s, WalkStep::Join { op: JoinOp::FullOuter, .. })));
}

#[test]
fn random_queries_validate_render_and_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for seed in 0..1000u64 {
        let db = if seed % 4 == 0 { common::shopping() } else { common::random_bundle(seed, 30) };
        let q = common::random_query(&db, &mut rng, Dialect::Generic);
        q.validate(&db.schema).unwrap();
        let sql = render_sql(&q, &db.schema, Dialect::Generic).unwrap();
        let back = parse_query(&sql, &TableInfo::from_schema(&db.schema)).unwrap_or_else(|e| panic!("{sql}: {e}"));
        assert_eq!(back, q, "{sql}");
    }
}

#[test]
fn walks_never_revisit_columns_or_tables() {
    let db = common::random_bundle(5, 40);
    let g = build_schema_graph(&db.schema);
    let rules = WalkRules::default();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..500 {
        let w = random_walk(&g, 0, 8, &rules, &mut rng);
        assert!(w.steps.len() <= 8);
        let mut cols: Vec<(&str, &str)> = Vec::new();
        let mut tables = vec![w.start.as_str()];
        for s in &w.steps {
            match s {
                WalkStep::Filter { table, column } => {
                    assert!(!cols.contains(&(table, column)));
                    cols.push((table, column));
                }
                WalkStep::Join { to, .. } => {
                    assert!(!tables.contains(&to.as_str()));
                    tables.push(to);
                }
            }
        }
    }
}

#[test]
fn hint_variants_per_dialect() {
    let db = common::shopping();
    let tables = TableInfo::from_schema(&db.schema);
    let semi = "SELECT * FROM T1 WHERE T1.userId IN (SELECT T2.userId FROM T2)";
    let ast = parse_query(semi, &tables).unwrap();
    let h = hint_variants(semi, &ast, &HintTable::builtin(Dialect::MySql));
    let sqls: Vec<&str> = h.variants.iter().map(|v| v.sql.as_str()).collect();
    assert!(sqls.contains(&"SELECT /*+ semijoin() */ * FROM T1 WHERE T1.userId IN (SELECT T2.userId FROM T2)"));
    assert!(sqls.contains(&"SELECT /*+ no_semijoin() */ * FROM T1 WHERE T1.userId IN (SELECT T2.userId FROM T2)"));

    let single = "SELECT * FROM T2";
    let ast = parse_query(single, &tables).unwrap();
    for d in [Dialect::Generic, Dialect::MySql, Dialect::MariaDb, Dialect::TiDb] {
        assert!(hint_variants(single, &ast, &HintTable::builtin(d)).variants.is_empty());
    }

    let three = "SELECT * FROM T1 INNER JOIN T3 INNER JOIN T4 WHERE T1.goodsId = T3.goodsId AND T3.goodsName = T4.goodsName";
    let ast = parse_query(three, &tables).unwrap();
    let h = hint_variants(three, &ast, &HintTable::builtin(Dialect::TiDb));
    assert!(h.variants.iter().any(|v| v.sql.starts_with("SELECT /*+ merge_join(T1, T3, T4) */")));
    assert!(h.variants.iter().any(|v| v.sql.starts_with("SELECT /*+ hash_join(T1, T3, T4) */")));

    let h = hint_variants(three, &ast, &HintTable::builtin(Dialect::MariaDb));
    assert!(h.variants.iter().any(|v| v.session == vec!["SET optimizer_switch='join_cache_hashed=off'"]));
}

#[test]
fn bad_hint_file_is_rejected() {
    let text = "[[rule]]\nname = \"x\"\nrequires = [\"sideways\"]\nkind = \"comment\"\ntemplate = \"x\"\n";
    assert!(HintTable::from_toml(text).is_err());
    let _ = fixture::shopping();
}
