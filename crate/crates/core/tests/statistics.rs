use std::collections::HashMap;

use proptest::prelude::*;
use reopt_lab::stats::{self, AnalyzeConfig};
use reopt_lab::storage::{Catalog, ColumnMeta};
use reopt_lab::value::Value;
use reopt_lab::workload::{self, GeneratorKind, GeneratorSpec};

fn one_column(values: &[Option<i64>]) -> Catalog {
    let mut c = Catalog::new();
    let rows = values.iter().map(|v| vec![v.map_or(Value::Null, Value::Int)]).collect();
    c.create_table("t", vec![ColumnMeta::int("v")], rows).unwrap();
    c
}

#[test]
fn zipf_mcv_head_is_the_most_traded_companies() {
    let spec = GeneratorSpec::new(GeneratorKind::StocksSkew, 7);
    let catalog = workload::generate(&spec).unwrap();
    let trades = catalog.table("trades").unwrap();
    let col = trades.column_index("company_id").unwrap();

    let mut counts: HashMap<i64, u64> = HashMap::new();
    for r in &trades.rows {
        *counts.entry(r[col].as_int().unwrap()).or_default() += 1;
    }
    let mut by_freq: Vec<(i64, u64)> = counts.into_iter().collect();
    by_freq.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    let mut top2: Vec<i64> = by_freq[..2].iter().map(|(id, _)| *id).collect();
    top2.sort();
    assert_eq!(top2, [1, 2]);

    let config = AnalyzeConfig {
        mcv_capacity: 10,
        ..Default::default()
    };
    let ts = stats::analyze(trades, &config).unwrap();
    let mcv = &ts.column("company_id").unwrap().mcv;
    assert_eq!(mcv.len(), 10);
    let head: Vec<&Value> = mcv.entries[..2].iter().map(|(v, _)| v).collect();
    assert!(head.contains(&&Value::Int(1)) && head.contains(&&Value::Int(2)));
    let n = trades.row_count() as f64;
    for (i, (id, c)) in by_freq[..2].iter().enumerate() {
        let f = mcv.frequency(&Value::Int(*id)).unwrap();
        assert!((f - *c as f64 / n).abs() < 1e-12, "entry {i}");
    }
}

#[test]
fn temp_with_one_value() {
    let mut c = Catalog::new();
    c.create_temp_table(
        "temp1",
        vec![ColumnMeta::int("movie_id")],
        vec![vec![Value::Int(42)]; 1000],
    )
    .unwrap();
    let ts = stats::analyze_temp(c.table("temp1").unwrap());
    let cs = ts.column("movie_id").unwrap();
    assert_eq!(ts.row_count, 1000);
    assert_eq!(cs.ndv, 1.0);
    assert_eq!(cs.mcv.entries, vec![(Value::Int(42), 1.0)]);
}

#[test]
fn five_distinct_keys() {
    let mut c = Catalog::new();
    let rows = (1..=5).map(|i| vec![Value::Int(i)]).collect();
    c.create_temp_table("temp1", vec![ColumnMeta::int("k")], rows).unwrap();
    let ts = stats::analyze_temp(c.table("temp1").unwrap());
    assert_eq!(ts.row_count, 5);
    assert_eq!(ts.column("k").unwrap().ndv, 5.0);
}

proptest! {
    #[test]
    fn mass_is_conserved(
        values in prop::collection::vec(prop::option::weighted(0.9, 0i64..60), 1..400),
        buckets in 1usize..20,
        mcv in 0usize..12,
    ) {
        let catalog = one_column(&values);
        let config = AnalyzeConfig { buckets, mcv_capacity: mcv, ..Default::default() };
        let ts = stats::analyze(catalog.table("t").unwrap(), &config).unwrap();
        let cs = ts.column("v").unwrap();
        let n = values.len() as f64;

        let mut exact: HashMap<i64, u64> = HashMap::new();
        for v in values.iter().flatten() {
            *exact.entry(*v).or_default() += 1;
        }
        let nulls = values.iter().filter(|v| v.is_none()).count() as f64;
        prop_assert!((cs.null_frac - nulls / n).abs() < 1e-12);
        prop_assert_eq!(cs.ndv, exact.len() as f64);
        prop_assert!(cs.mcv.len() <= mcv);
        for (v, f) in &cs.mcv.entries {
            let c = exact[&v.as_int().unwrap()] as f64;
            prop_assert!((f - c / n).abs() < 1e-12);
        }

        // nulls + MCV rows + histogram rows account for every row
        let hist_rows = cs.hist.total() as f64;
        prop_assert!((cs.null_frac + cs.mcv.total_frequency() + hist_rows / n - 1.0).abs() < 1e-9);
        prop_assert!((cs.histogram_mass() - hist_rows / n).abs() < 1e-9);
        prop_assert!(cs.hist.counts.len() <= buckets);
        prop_assert!(cs.hist.bounds.windows(2).all(|w| w[0].total_cmp(&w[1]).is_le()));

        // the two open ranges around a probe never exceed the non-null share
        let non_null = 1.0 - cs.null_frac + 1e-9;
        for probe in [-1i64, 0, 17, 30, 59, 60] {
            let v = Value::Int(probe);
            let (lt, eq, gt) = (cs.lt_selectivity(&v), cs.eq_selectivity(&v), cs.gt_selectivity(&v));
            prop_assert!(lt + gt <= non_null, "probe {} lt {} gt {}", probe, lt, gt);
            prop_assert!((0.0..=non_null).contains(&eq));
        }
    }
}
