mod common;

use std::collections::HashMap;

use reopt_lab::bench::{self, BenchConfig, BenchOptions, LadderN, BUCKET_LABELS};
use reopt_lab::cardinality::EstimatorConfig;
use reopt_lab::reopt::ReoptConfig;
use reopt_lab::storage::Catalog;
use reopt_lab::workload::{self, spearman, GeneratorKind, GeneratorSpec, NamedQuery};
use reopt_lab::Error;

fn tables(c: &Catalog) -> Vec<(String, Vec<reopt_lab::value::Row>)> {
    let mut v: Vec<_> = c.tables().map(|t| (t.name.clone(), t.rows.clone())).collect();
    v.sort_by(|a, b| a.0.cmp(&b.0));
    v
}

#[test]
fn generation_is_a_pure_function_of_spec_and_seed() {
    for kind in [
        GeneratorKind::StocksSkew,
        GeneratorKind::CorrelatedEmployees,
        GeneratorKind::JoinCrossingChain,
        GeneratorKind::StarSchema,
    ] {
        let spec = GeneratorSpec::new(kind, 11).scaled(0.05);
        let a = workload::generate(&spec).unwrap();
        let b = workload::generate(&spec).unwrap();
        assert_eq!(tables(&a), tables(&b), "{kind:?}");
        assert_eq!(a.dataset_fingerprint(), b.dataset_fingerprint());
        let other = workload::generate(&GeneratorSpec { seed: 12, ..spec }).unwrap();
        assert_ne!(a.dataset_fingerprint(), other.dataset_fingerprint(), "{kind:?}");
    }
}

#[test]
fn invalid_specs_are_rejected() {
    let mut spec = GeneratorSpec::new(GeneratorKind::StocksSkew, 7);
    spec.sizes.insert("trades".into(), 0);
    assert!(matches!(workload::generate(&spec), Err(Error::InvalidSpec(_))));
    let mut spec = GeneratorSpec::new(GeneratorKind::CorrelatedEmployees, 7);
    spec.correlation_rho = 1.5;
    assert!(matches!(workload::generate(&spec), Err(Error::InvalidSpec(_))));
}

#[test]
fn top_company_dominates_the_median_at_a_million_trades() {
    let mut spec = GeneratorSpec::new(GeneratorKind::StocksSkew, 7);
    spec.sizes.insert("companies".into(), 1000);
    spec.sizes.insert("trades".into(), 1_000_000);
    assert_eq!(spec.zipf_s, 1.1);
    let catalog = workload::generate(&spec).unwrap();
    let trades = catalog.table("trades").unwrap();
    let col = trades.column_index("company_id").unwrap();
    let mut counts: HashMap<i64, u64> = (1..=1000).map(|id| (id, 0)).collect();
    for r in &trades.rows {
        *counts.get_mut(&r[col].as_int().unwrap()).unwrap() += 1;
    }
    let mut v: Vec<u64> = counts.values().copied().collect();
    v.sort_unstable();
    let median = (v[499] + v[500]) as f64 / 2.0;
    let top = *v.last().unwrap() as f64;
    assert!(top >= 20.0 * median, "top {top} median {median}");
}

fn employee_correlation(rho: f64) -> f64 {
    let mut spec = GeneratorSpec::new(GeneratorKind::CorrelatedEmployees, 7);
    spec.correlation_rho = rho;
    let catalog = workload::generate(&spec).unwrap();
    let t = catalog.table("employees").unwrap();
    let (a, s) = (t.column_index("age").unwrap(), t.column_index("salary").unwrap());
    let ages: Vec<f64> = t.rows.iter().map(|r| r[a].as_int().unwrap() as f64).collect();
    let salaries: Vec<f64> = t.rows.iter().map(|r| r[s].as_int().unwrap() as f64).collect();
    spearman(&ages, &salaries)
}

#[test]
fn rank_correlation_tracks_rho() {
    assert!(employee_correlation(0.0).abs() <= 0.05);
    // ages are rounded to whole years, so ties pull the coefficient down a little
    assert!((employee_correlation(0.8) - 0.8).abs() <= 0.05);
}

#[test]
fn spearman_oracle() {
    // hand-computed: ranks (1,2,3,4,5) vs (2,1,4,3,5), sum d^2 = 4
    let x = [10.0, 20.0, 30.0, 40.0, 50.0];
    let y = [2.0, 1.0, 4.0, 3.0, 5.0];
    assert!((spearman(&x, &y) - (1.0 - 6.0 * 4.0 / (5.0 * 24.0))).abs() < 1e-12);
    let rev: Vec<f64> = x.iter().rev().copied().collect();
    assert!((spearman(&x, &rev) + 1.0).abs() < 1e-12);
}

#[test]
fn corpus_shape() {
    let corpus = workload::star_corpus();
    assert_eq!(corpus.len(), 40);
    let mut ids: Vec<&str> = corpus.iter().map(|q| q.id.as_str()).collect();
    ids.sort();
    ids.dedup();
    assert_eq!(ids.len(), 40);
    let db = common::small_star();
    let sizes: Vec<usize> = corpus
        .iter()
        .map(|q| db.parse_query(&q.sql).unwrap().relations.len())
        .collect();
    assert!(sizes.iter().all(|n| (4..=10).contains(n)), "{sizes:?}");
    assert!(sizes.contains(&4) && sizes.contains(&10));
}

#[test]
fn env_seed_overrides_the_default() {
    std::env::set_var(workload::SEED_ENV, "1234");
    assert_eq!(workload::seed_from_env(7), 1234);
    std::env::set_var(workload::SEED_ENV, "not a number");
    assert_eq!(workload::seed_from_env(7), 7);
    std::env::remove_var(workload::SEED_ENV);
    assert_eq!(workload::seed_from_env(7), 7);
}

fn twenty(db: &reopt_lab::Database) -> Vec<NamedQuery> {
    let corpus: Vec<NamedQuery> = workload::star_corpus()
        .into_iter()
        .filter(|q| db.parse_query(&q.sql).unwrap().relations.len() <= 7)
        .take(20)
        .collect();
    assert_eq!(corpus.len(), 20);
    corpus
}

#[test]
fn bench_report_shape() {
    let mut db = common::small_star();
    let queries = twenty(&db);
    let configs = vec![
        BenchConfig::plain("default", EstimatorConfig::default()),
        BenchConfig::plain("perfect-2", EstimatorConfig::perfect(2)),
        BenchConfig::reopt("reopt@32", EstimatorConfig::default(), ReoptConfig::default()),
    ];
    let options = BenchOptions {
        repetitions: 1,
        jobs: 1,
    };
    let report = bench::run_bench(&mut db, &queries, &configs, &options, 7).unwrap();
    assert_eq!(report.rows.len(), 80);
    assert_eq!(report.configs.last().unwrap(), bench::BASELINE);
    assert!(report.rows.iter().all(|r| r.is_ok()));
    assert!(report.mismatches.is_empty(), "{:?}", report.mismatches);
    assert_eq!(db.catalog.tables().filter(|t| t.is_temp).count(), 0);

    for c in &report.configs {
        assert_eq!(report.buckets(c).iter().sum::<usize>(), 20, "{c}");
    }
    assert_eq!(report.buckets(bench::BASELINE), [0, 20, 0, 0, 0]);

    let summary = report.summary();
    assert_eq!(summary.queries, 20);
    assert_eq!(summary.buckets["default"].len(), BUCKET_LABELS.len());

    let full = report.top_k(20, "default");
    assert_eq!(full.rows.len(), report.rows.len());
    let one = report.top_k(1, "default");
    assert_eq!(one.query_ids().len(), 1);
    let slowest = report
        .rows
        .iter()
        .filter(|r| r.config == "default")
        .max_by(|a, b| a.execution_us.total_cmp(&b.execution_us))
        .unwrap();
    assert_eq!(one.query_ids()[0], slowest.query_id);
    let ten = report.top_k(10, "default");
    let times: Vec<f64> = ten
        .query_ids()
        .iter()
        .map(|q| ten.row(q, "default").unwrap().execution_us)
        .collect();
    assert!(times.windows(2).all(|w| w[0] >= w[1]));

    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("bench.csv");
    report.write_csv(&csv).unwrap();
    let text = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().count(), 81);
    assert!(text.starts_with("query_id,config,relations,planning_us,execution_us,reopt_rounds"));
    let json = dir.path().join("bench.json");
    report.write_json(&json).unwrap();
    let parsed: bench::BenchSummary = serde_json::from_str(&std::fs::read_to_string(json).unwrap()).unwrap();
    assert_eq!(parsed, summary);
}

#[test]
fn ladder_rows_and_ordering() {
    let mut db = common::small_star();
    let queries: Vec<NamedQuery> = twenty(&db).into_iter().take(6).collect();
    let rungs: Vec<LadderN> = ["0", "1", "2", "3", "4", "max"]
        .iter()
        .map(|s| s.parse().unwrap())
        .collect();
    let options = BenchOptions {
        repetitions: 1,
        jobs: 1,
    };
    let rows = bench::perfect_ladder(&mut db, &queries, &rungs, &options).unwrap();
    assert_eq!(rows.len(), 6);
    assert_eq!(rows[0].n, "0");
    assert_eq!(rows[5].n, "max");
    assert!(rows.iter().all(|r| r.failures == 0));

    // perfect-(0) is the default estimator: same plans, same work
    let default = bench::run_bench(
        &mut db,
        &queries,
        &[BenchConfig::plain("default", EstimatorConfig::default())],
        &options,
        7,
    )
    .unwrap();
    assert_eq!(default.totals()["default"].work, rows[0].work);

    let mut unsorted = rungs.clone();
    unsorted.swap(0, 5);
    assert!(bench::perfect_ladder(&mut db, &queries, &unsorted, &options).is_err());
}

#[test]
fn output_names_embed_seed_and_hash() {
    let h = bench::config_hash(&bench::standard_configs(32.0));
    assert_eq!(h.len(), 8);
    assert_eq!(h, bench::config_hash(&bench::standard_configs(32.0)));
    assert_ne!(h, bench::config_hash(&bench::standard_configs(16.0)));
    let p = bench::output_path("out", "bench", 7, &h, "csv");
    assert_eq!(p, std::path::Path::new("out").join(format!("bench-seed7-{h}.csv")));
}
