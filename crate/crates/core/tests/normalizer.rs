use joinprobe::fixture;
use joinprobe::model::{Column, FunctionalDependency, WideTable};
use joinprobe::normalizer::{self, decompose, discover_fds, lossless_check, NormalizeConfig};
use joinprobe::value::{ColumnType, Value};
use proptest::prelude::*;

fn sorted(mut v: Vec<String>) -> Vec<String> {
    v.sort();
    v
}

#[test]
fn shopping_fds_include_goods() {
    let fds = discover_fds(&fixture::shopping(), 3, 24).unwrap();
    let goods = fds.iter().find(|f| f.lhs == vec!["goodsId".to_string()]).unwrap();
    assert!(goods.rhs.contains(&"goodsName".to_string()));
    assert!(goods.rhs.contains(&"price".to_string()));
}

#[test]
fn shopping_decomposes_into_four_tables() {
    let db = normalizer::normalize(&fixture::shopping(), &NormalizeConfig::default()).unwrap();
    let tables: Vec<(String, Vec<String>)> = db
        .schema
        .tables
        .iter()
        .map(|t| (t.name.clone(), sorted(t.columns.iter().map(|c| c.name.clone()).collect())))
        .collect();
    let expect = |n: &str, cols: &[&str]| (n.to_string(), sorted(cols.iter().map(|s| s.to_string()).collect()));
    assert_eq!(
        tables,
        vec![
            expect("T1", &["orderId", "goodsId", "userId"]),
            expect("T2", &["userId", "userName"]),
            expect("T3", &["goodsId", "goodsName"]),
            expect("T4", &["goodsName", "price"]),
        ]
    );
    let fks: Vec<(String, String, Vec<String>)> =
        db.schema.fks.iter().map(|f| (f.child.clone(), f.parent.clone(), f.columns.clone())).collect();
    assert_eq!(
        fks,
        vec![
            ("T1".into(), "T2".into(), vec!["userId".into()]),
            ("T1".into(), "T3".into(), vec!["goodsId".into()]),
            ("T3".into(), "T4".into(), vec!["goodsName".into()]),
        ]
    );
    assert_eq!(db.data.iter().map(Vec::len).collect::<Vec<_>>(), vec![8, 3, 3, 3]);
    assert!(lossless_check(&db));
    db.structural_check().unwrap();
    // Wide row 5 maps to T1 row 5, T2 row 1 (Bob), T3 row 2 (pen), T4 row 2.
    let row5: Vec<_> = (0..4).map(|t| db.rowmap.get(t, 5)).collect();
    assert_eq!(row5, vec![Some(5), Some(1), Some(2), Some(2)]);
    for t in ["T1", "T2", "T3", "T4"] {
        assert_eq!(db.bitmap.bit_of(t).unwrap().count_ones(), 8);
    }
}

#[test]
fn no_fds_gives_single_table() {
    let cols = vec![Column::new("a", ColumnType::Int), Column::new("b", ColumnType::Int)];
    let rows = vec![
        vec![Value::Int(1), Value::Int(1)],
        vec![Value::Int(1), Value::Int(2)],
        vec![Value::Int(2), Value::Int(1)],
        vec![Value::Int(2), Value::Int(2)],
    ];
    let t = WideTable::new(cols, rows).unwrap();
    let fds = discover_fds(&t, 3, 24).unwrap();
    assert!(fds.is_empty());
    let db = decompose(&t, &fds).unwrap();
    assert_eq!(db.schema.tables.len(), 1);
    assert_eq!(db.data[0], t.rows);
    assert!(lossless_check(&db));
}

#[test]
fn violated_fd_is_rejected() {
    let t = fixture::shopping();
    let bad = FunctionalDependency::new(["userName"], ["userId"]);
    assert!(decompose(&t, &[bad]).is_err());
}

#[test]
fn ddl_mentions_rowid_and_tables() {
    let db = normalizer::normalize(&fixture::shopping(), &NormalizeConfig::default()).unwrap();
    let script = normalizer::ddl::script(&db, joinprobe::dialect::Dialect::MySql, false);
    assert!(script.contains("CREATE TABLE T4 (RowID BIGINT NOT NULL, goodsName VARCHAR(512), price DOUBLE)"));
    assert!(script.contains("-0.0E0"));
    assert!(!script.contains("FOREIGN KEY"));
}

fn arb_table() -> impl Strategy<Value = WideTable> {
    // Columns derived from a few base attributes so real FDs appear.
    (2usize..40, any::<u64>()).prop_map(|(n, seed)| {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let cols = vec![
            Column::new("a", ColumnType::Int),
            Column::new("b", ColumnType::Int),
            Column::new("c", ColumnType::Text),
            Column::new("d", ColumnType::Int),
            Column::new("e", ColumnType::Float),
            Column::new("f", ColumnType::Int),
        ];
        let nb = rng.random_range(1..6);
        let nd = rng.random_range(1..6);
        let rows = (0..n)
            .map(|i| {
                let b = rng.random_range(0..nb);
                let d = rng.random_range(0..nd);
                vec![
                    Value::Int(i as i64),
                    Value::Int(b),
                    Value::Text(format!("n{}", b % 3)),
                    Value::Int(d),
                    Value::Float((d % 2) as f64),
                    Value::Int(rng.random_range(0..3)),
                ]
            })
            .collect();
        WideTable::new(cols, rows).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]
    #[test]
    fn decomposition_is_lossless(t in arb_table()) {
        let db = normalizer::normalize(&t, &NormalizeConfig::default()).unwrap();
        prop_assert!(lossless_check(&db));
        prop_assert!(db.structural_check().is_ok());
        let mut cols: Vec<&str> = db.schema.tables.iter().flat_map(|t| t.columns.iter().map(|c| c.name.as_str())).collect();
        cols.sort();
        cols.dedup();
        prop_assert_eq!(cols.len(), 6);
    }
}
