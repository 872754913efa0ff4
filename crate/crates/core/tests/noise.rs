mod common;

use joinprobe::generator::parse::{parse_query, TableInfo};
use joinprobe::model::ROWID_COLUMN;
use joinprobe::noise::{boundary_values, clean, inject, verify_consistency, NoisePlan, NoiseTarget};
use joinprobe::oracle::ground_truth;
use joinprobe::value::{ColumnType, Value};
use proptest::prelude::*;

fn golden_plan() -> NoisePlan {
    NoisePlan {
        epsilon: 0.0,
        seed: 0,
        targets: vec![
            NoiseTarget { table: "T2".into(), row: 0, column: "userId".into(), value: Value::Int(65535) },
            NoiseTarget { table: "T1".into(), row: 6, column: "goodsId".into(), value: Value::Int(65535) },
        ],
    }
}

#[test]
fn golden_injection_rows() {
    let db = common::shopping();
    let noisy = inject(&db, &golden_plan()).unwrap();
    let w = &noisy.wide;
    assert_eq!(w.len(), 10);
    let col = |name: &str| w.column_index(name).unwrap();
    // primary-key noise: new tuple 8 refers to the noisy T2 row
    assert_eq!(w.rows[8][col("userId")], Value::Int(65535));
    assert_eq!(w.rows[8][col("userName")], Value::from("Alice"));
    assert!(w.rows[8][col("orderId")].is_null());
    for r in 0..3 {
        assert!(w.rows[r][col("userName")].is_null());
        assert_eq!(w.rows[r][col("userId")], Value::Int(1));
    }
    // foreign-key noise: row 6 takes the noise, row 9 keeps the goods data
    assert_eq!(w.rows[6][col("goodsId")], Value::Int(65535));
    assert!(w.rows[6][col("goodsName")].is_null());
    assert!(w.rows[6][col("price")].is_null());
    assert_eq!(w.rows[9][col("goodsId")], Value::Int(1));
    assert_eq!(w.rows[9][col("goodsName")], Value::from("flower"));
    assert_eq!(w.rows[9][col("price")], Value::Float(10.0));
    let t2 = noisy.schema.table_index("T2").unwrap();
    assert_eq!(noisy.rowmap.get(t2, 8), Some(0));
    assert_eq!(noisy.rowmap.get(t2, 0), None);
    let t3 = noisy.schema.table_index("T3").unwrap();
    assert!(!noisy.bitmap.arrays[t3].get(6));
    assert!(noisy.bitmap.arrays[t3].get(9));
    assert!(verify_consistency(&noisy));
}

#[test]
fn golden_example_query() {
    let started = std::time::Instant::now();
    let db = common::shopping();
    let noisy = inject(&db, &golden_plan()).unwrap();
    let sql = "SELECT price FROM T3 INNER JOIN T4 WHERE T3.goodsName = T4.goodsName AND T3.goodsName = 'flower'";
    let ast = parse_query(sql, &TableInfo::from_schema(&noisy.schema)).unwrap();
    let gt = ground_truth(&ast, &noisy).unwrap();
    assert_eq!(gt.result.rows, vec![vec![Value::Float(10.0)]]);
    assert_eq!(gt.provenance.iter_ones().collect::<Vec<_>>(), vec![0, 1, 2, 3, 4, 5, 7, 9]);
    assert!(started.elapsed().as_secs_f64() < 1.0);
}

#[test]
fn zero_epsilon_changes_nothing() {
    let db = common::shopping();
    let plan = NoisePlan::generate(&db, 0.0, 7);
    assert!(plan.targets.is_empty());
    let same = inject(&db, &plan).unwrap();
    assert_eq!(same.wide, db.wide);
    assert_eq!(same.rowmap, db.rowmap);
    assert!(verify_consistency(&db));
}

#[test]
fn corrupted_map_is_detected() {
    let mut db = common::shopping();
    db.rowmap.set(1, 3, Some(0));
    assert!(!verify_consistency(&db));
}

#[test]
fn cleaner_drops_dirty_key_rows() {
    let db = common::shopping();
    let mut wide = db.wide.clone();
    let u = wide.column_index("userId").unwrap();
    wide.rows[2][u] = Value::Null;
    wide.rows[5][u] = Value::Int(i64::MAX);
    let cleaned = clean(&wide, &db.schema);
    assert_eq!(cleaned.len(), 6);
    assert_eq!(clean(&db.wide, &db.schema), db.wide);
}

#[test]
fn non_key_target_is_rejected() {
    let db = common::shopping();
    let plan = NoisePlan {
        epsilon: 0.0,
        seed: 0,
        targets: vec![NoiseTarget { table: "T4".into(), row: 0, column: "price".into(), value: Value::Float(-0.0) }],
    };
    assert!(inject(&db, &plan).is_err());
}

#[test]
fn boundary_catalog_starts_with_type_extremes() {
    assert_eq!(boundary_values(ColumnType::Int, 2, 0), vec![Value::Int(i64::MAX), Value::Int(i64::MIN)]);
    assert_eq!(boundary_values(ColumnType::Text, 1, 3), vec![Value::from("ZZZZZZZZZZ")]);
    let f = boundary_values(ColumnType::Float, 3, 0);
    assert!(matches!(f[0], Value::Float(z) if z == 0.0 && z.is_sign_negative()));
    assert!(boundary_values(ColumnType::Decimal, 8, 0).iter().all(Value::is_boundary));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(150))]
    #[test]
    fn injection_keeps_consistency(seed in any::<u64>(), eps in prop::sample::select(vec![0.01, 0.05, 0.2])) {
        let db = common::random_bundle(seed, 40);
        let plan = NoisePlan::generate(&db, eps, seed);
        let noisy = inject(&db, &plan).unwrap();
        prop_assert_eq!(noisy.wide.len(), db.wide.len() + plan.targets.len());
        prop_assert!(verify_consistency(&noisy));
        // injected values are unique and new to their column
        let mut seen: Vec<(String, Value)> = Vec::new();
        for t in plan.targets.iter().filter(|t| !t.value.is_null()) {
            let wi = db.wide.column_index(&t.column).unwrap();
            prop_assert!(!db.wide.rows.iter().any(|r| r[wi].identical(&t.value)));
            prop_assert!(!seen.iter().any(|(c, v)| *c == t.column && v.identical(&t.value)));
            seen.push((t.column.clone(), t.value.clone()));
        }
        prop_assert!(plan.targets.iter().all(|t| t.column != ROWID_COLUMN));
    }
}
