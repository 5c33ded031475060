mod common;

use common::{brute_force_count, connected_subset_counts, small_star};
use reopt_lab::cardinality::{q_error, EstimateCounter, Estimator, EstimatorConfig, QueryGraph, RelSet};
use reopt_lab::optimizer::PlanShape;
use reopt_lab::storage::{Catalog, ColumnMeta};
use reopt_lab::value::Value;
use reopt_lab::workload::{self, GeneratorKind};
use reopt_lab::Database;

#[test]
fn q_error_examples() {
    assert_eq!(q_error(100.0, 50.0), 2.0);
    assert_eq!(q_error(50.0, 100.0), 2.0);
    assert_eq!(q_error(0.0, 1000.0), 1000.0);
    assert_eq!(q_error(7.0, 7.0), 1.0);
}

fn estimate(db: &Database, config: &EstimatorConfig, sql: &str, set: Option<RelSet>) -> f64 {
    let spec = db.parse_query(sql).unwrap();
    let graph = QueryGraph::new(&spec, &db.catalog).unwrap();
    let mut est = Estimator::new(config, db);
    est.estimate(&graph, set.unwrap_or(graph.all())).unwrap()
}

#[test]
fn single_table_without_filters_is_the_row_count() {
    let db = small_star();
    let rows = db.catalog.table("title").unwrap().row_count() as f64;
    let e = estimate(&db, &EstimatorConfig::default(), "SELECT t.id FROM title AS t", None);
    assert_eq!(e, rows);
}

#[test]
fn in_list_of_common_values_is_estimated_from_the_mcv_list() {
    let db = small_star();
    let mcv = &db.stats.get("keyword").unwrap().column("keyword").unwrap().mcv;
    assert!(mcv.len() >= 8);
    let picked: Vec<&Value> = mcv.entries[..8].iter().map(|(v, _)| v).collect();
    let list: Vec<String> = picked.iter().map(|v| format!("'{}'", v.as_str().unwrap())).collect();
    let sql = format!("SELECT k.id FROM keyword AS k WHERE k.keyword IN ({})", list.join(", "));

    let rows = db.catalog.table("keyword").unwrap().row_count() as f64;
    let mcv_sum: f64 = mcv.entries[..8].iter().map(|(_, f)| f).sum::<f64>() * rows;
    let e = estimate(&db, &EstimatorConfig::default(), &sql, None);
    assert!((e - mcv_sum).abs() < 1e-9, "estimate {e} vs MCV sum {mcv_sum}");

    let truth = estimate(&db, &EstimatorConfig::perfect(1), &sql, None);
    assert!((e - truth).abs() < 1e-9, "estimate {e} vs truth {truth}");
}

#[test]
fn oracle_counts_match_brute_force_on_a_chain() {
    let db = small_star();
    let sql = "SELECT MIN(t.title) FROM keyword AS k, movie_keyword AS mk, title AS t
               WHERE k.id = mk.keyword_id AND mk.movie_id = t.id AND t.production_year > 2000";
    let spec = db.parse_query(sql).unwrap();
    let graph = QueryGraph::new(&spec, &db.catalog).unwrap();
    for set in graph.connected_subsets() {
        let truth = db.oracle.true_cardinality(&db, &graph, set).unwrap();
        assert_eq!(truth, brute_force_count(&db.catalog, &graph, set), "{set}");
    }
}

#[test]
fn oracle_filter_matching_nothing_is_zero() {
    let db = small_star();
    let spec = db
        .parse_query("SELECT t.id FROM title AS t WHERE t.production_year > 100000")
        .unwrap();
    let graph = QueryGraph::new(&spec, &db.catalog).unwrap();
    assert_eq!(db.oracle.true_cardinality(&db, &graph, graph.all()).unwrap(), 0);
}

#[test]
fn perfect_n_contract_on_the_corpus() {
    let db = small_star();
    for nq in workload::star_corpus().iter().step_by(3) {
        let spec = db.parse_query(&nq.sql).unwrap();
        let graph = QueryGraph::new(&spec, &db.catalog).unwrap();
        let default_config = EstimatorConfig::default();
        let default = Estimator::new(&default_config, &db);
        for n in [0usize, 1, 2, 3, usize::MAX] {
            let config = EstimatorConfig::perfect(n);
            let est = Estimator::new(&config, &db);
            for set in graph.connected_subsets() {
                let e = est.compute(&graph, set).unwrap();
                if n == 0 {
                    assert_eq!(e, default.compute(&graph, set).unwrap(), "{} {set}", nq.id);
                } else if set.len() <= n {
                    let truth = db.oracle.true_cardinality(&db, &graph, set).unwrap() as f64;
                    assert_eq!(q_error(e, truth), 1.0, "{} perfect-{n} {set}", nq.id);
                }
            }
        }
    }
}

fn relay_catalog() -> Catalog {
    let mut c = Catalog::new();
    let rows = (0..40)
        .map(|i| vec![Value::Int(i), Value::Int(i % 7), Value::Int(i % 5)])
        .collect();
    c.create_table(
        "r",
        vec![
            ColumnMeta::int("id").primary_key(),
            ColumnMeta::int("a"),
            ColumnMeta::int("b"),
        ],
        rows,
    )
    .unwrap();
    c
}

fn shape_sql(n: usize, edges: &[(usize, usize)]) -> String {
    let from: Vec<String> = (0..n).map(|i| format!("r AS r{i}")).collect();
    let conds: Vec<String> = edges.iter().map(|(a, b)| format!("r{a}.a = r{b}.b")).collect();
    format!(
        "SELECT MIN(r0.id) FROM {} WHERE {}",
        from.join(", "),
        conds.join(" AND ")
    )
}

fn counter_for(db: &Database, sql: &str) -> EstimateCounter {
    db.plan_sql(sql, &EstimatorConfig::default()).unwrap().counter
}

#[test]
fn chain_of_three_left_deep_requests() {
    let mut db = common::analyzed(relay_catalog());
    db.optimizer.shape = PlanShape::LeftDeepOnly;
    let c = counter_for(&db, &shape_sql(3, &[(0, 1), (1, 2)]));
    assert_eq!(c.report(), vec![(1, 3), (2, 2), (3, 1)]);
}

#[test]
fn star_of_four_has_three_pairs() {
    let db = common::analyzed(relay_catalog());
    let c = counter_for(&db, &shape_sql(4, &[(0, 1), (0, 2), (0, 3)]));
    assert_eq!(c.get(2), 3);
}

#[test]
fn counter_reset_clears_everything() {
    let db = common::analyzed(relay_catalog());
    let mut c = counter_for(&db, &shape_sql(3, &[(0, 1), (1, 2)]));
    c.reset();
    assert_eq!(c.total(), 0);
}

#[test]
fn request_counts_match_connected_subsets() {
    let mut db = common::analyzed(relay_catalog());
    let shapes: [(usize, Vec<(usize, usize)>); 5] = [
        (3, vec![(0, 1), (1, 2)]),
        (5, vec![(0, 1), (1, 2), (2, 3), (3, 4)]),
        (4, vec![(0, 1), (0, 2), (0, 3)]),
        (6, vec![(0, 1), (0, 2), (0, 3), (0, 4), (0, 5)]),
        (4, vec![(0, 1), (1, 2), (2, 3), (3, 0)]),
    ];
    for (n, edges) in shapes {
        let expected = connected_subset_counts(n, &edges);
        for shape in [PlanShape::Bushy, PlanShape::LeftDeepOnly] {
            db.optimizer.shape = shape;
            let c = counter_for(&db, &shape_sql(n, &edges));
            for (size, want) in expected.iter().enumerate().skip(1) {
                assert_eq!(c.get(size), *want, "n={n} edges={edges:?} size={size} {shape:?}");
            }
        }
    }
}

#[test]
fn stocks_skew_underestimates_the_top_symbol() {
    let db = common::generated(GeneratorKind::StocksSkew, 7, 1.0);
    let sql = "SELECT MIN(t.shares) FROM companies AS c, trades AS t
               WHERE c.id = t.company_id AND c.symbol = 'APPL'";
    let e = estimate(&db, &EstimatorConfig::default(), sql, None);
    let truth = estimate(&db, &EstimatorConfig::perfect(2), sql, None);
    assert!(truth / e >= 10.0, "estimate {e} truth {truth}");
}
