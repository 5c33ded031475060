mod common;

use common::{bag, small_star};
use reopt_lab::cardinality::{EstimatorConfig, QueryGraph};
use reopt_lab::exec;
use reopt_lab::reopt::{run_with_reopt, selective_improvement, threshold_sweep, ReoptConfig};
use reopt_lab::workload::{self, GeneratorKind};
use reopt_lab::{Database, Error};
use web_time::Duration;

fn plain(db: &Database, sql: &str) -> (String, exec::ExecResult) {
    let planned = db.plan_sql(sql, &EstimatorConfig::default()).unwrap();
    let r = exec::execute(&planned.plan, &db.catalog).unwrap();
    (reopt_lab::optimizer::explain(&planned.plan), r)
}

const SKEWED: &str = "SELECT MIN(t.shares) AS smallest FROM companies AS c, trades AS t
                      WHERE c.id = t.company_id AND c.symbol = 'APPL'";

#[test]
fn no_violation_means_no_rounds() {
    let mut db = small_star();
    for nq in workload::star_corpus().iter().take(6) {
        let spec = db.parse_query(&nq.sql).unwrap();
        let (plan, r) = plain(&db, &nq.sql);
        let out = run_with_reopt(
            &mut db,
            &spec,
            &EstimatorConfig::default(),
            &ReoptConfig::with_threshold(1e300),
        )
        .unwrap();
        assert!(out.trace.rounds.is_empty());
        assert_eq!(out.trace.initial_plan, plan);
        assert_eq!(out.trace.work, r.work);
        assert_eq!(bag(&out.result.rows), bag(&r.rows));
        assert_eq!(db.catalog.tables().filter(|t| t.is_temp).count(), 0);
    }
}

#[test]
fn skewed_join_is_reoptimized_once() {
    let mut db = common::generated(GeneratorKind::StocksSkew, 7, 0.2);
    let spec = db.parse_query(SKEWED).unwrap();
    let out = run_with_reopt(&mut db, &spec, &EstimatorConfig::default(), &ReoptConfig::default()).unwrap();
    assert_eq!(out.trace.rounds.len(), 1);
    let round = &out.trace.rounds[0];
    assert!(round.q_error >= 32.0);
    assert!(
        round.create_sql.starts_with("CREATE TEMP TABLE"),
        "{}",
        round.create_sql
    );
    db.parse(&round.create_sql)
        .unwrap_or_else(|e| panic!("{e}: {}", round.create_sql));
    let (_, r) = plain(&db, SKEWED);
    assert_eq!(out.result.rows, r.rows);
    assert_eq!(out.result.columns, ["smallest"]);
}

#[test]
fn exit_condition_and_round_bound() {
    let mut db = small_star();
    for nq in workload::star_corpus() {
        let spec = db.parse_query(&nq.sql).unwrap();
        for threshold in [2.0, 32.0] {
            let config = ReoptConfig::with_threshold(threshold);
            let out = run_with_reopt(&mut db, &spec, &EstimatorConfig::default(), &config).unwrap();
            assert!(out.trace.rounds.len() < spec.relations.len(), "{}", nq.id);
            assert!(!out.trace.max_rounds_exceeded);
            for (id, q) in &out.trace.final_join_q_errors {
                assert!(*q < threshold, "{} node {id} q-error {q}", nq.id);
            }
            for r in &out.trace.rounds {
                assert!(r.q_error >= threshold);
            }
        }
    }
}

#[test]
fn reopt_results_match_plain_execution() {
    let mut db = small_star();
    for nq in workload::star_corpus() {
        let spec = db.parse_query(&nq.sql).unwrap();
        let (_, r) = plain(&db, &nq.sql);
        let want = bag(&r.rows);
        for config in [
            ReoptConfig::with_threshold(2.0),
            ReoptConfig {
                reexecute_temps: true,
                ..ReoptConfig::with_threshold(2.0)
            },
            ReoptConfig {
                analyze_temps: false,
                ..ReoptConfig::with_threshold(2.0)
            },
        ] {
            let out = run_with_reopt(&mut db, &spec, &EstimatorConfig::default(), &config).unwrap();
            assert_eq!(bag(&out.result.rows), want, "{} {config:?}", nq.id);
            assert_eq!(out.result.columns, r.columns, "{}", nq.id);
        }
    }
}

#[test]
fn round_limit_and_latency_floor_suppress_rounds() {
    let mut db = common::generated(GeneratorKind::StocksSkew, 7, 0.2);
    let spec = db.parse_query(SKEWED).unwrap();
    let capped = ReoptConfig {
        max_rounds: 0,
        ..Default::default()
    };
    let out = run_with_reopt(&mut db, &spec, &EstimatorConfig::default(), &capped).unwrap();
    assert!(out.trace.rounds.is_empty());
    assert!(out.trace.max_rounds_exceeded);

    let patient = ReoptConfig {
        min_base_latency: Duration::from_secs(3600),
        ..Default::default()
    };
    let out = run_with_reopt(&mut db, &spec, &EstimatorConfig::default(), &patient).unwrap();
    assert!(out.trace.rounds.is_empty());
    assert!(!out.trace.max_rounds_exceeded);
}

#[test]
fn trace_serializes() {
    let mut db = common::generated(GeneratorKind::StocksSkew, 7, 0.2);
    let spec = db.parse_query(SKEWED).unwrap();
    let out = run_with_reopt(&mut db, &spec, &EstimatorConfig::default(), &ReoptConfig::default()).unwrap();
    let json: serde_json::Value = serde_json::from_str(&out.trace.to_json().unwrap()).unwrap();
    assert_eq!(json["rounds"].as_array().unwrap().len(), 1);
    assert!(json["planning_us"].as_f64().unwrap() > 0.0);
    assert!(json["rounds"][0]["creation_us"].is_number());
}

#[test]
fn sweep_has_one_row_per_threshold() {
    let mut db = small_star();
    let specs: Vec<_> = workload::star_corpus()
        .iter()
        .take(5)
        .map(|q| db.parse_query(&q.sql).unwrap())
        .collect();
    let thresholds = [2.0, 4.0, 8.0, 16.0, 32.0, 64.0];
    let rows = threshold_sweep(
        &mut db,
        &specs,
        &thresholds,
        &EstimatorConfig::default(),
        &ReoptConfig::default(),
        1,
    )
    .unwrap();
    assert_eq!(rows.len(), 6);
    assert!(rows.windows(2).all(|w| w[0].rounds >= w[1].rounds));
    assert!(threshold_sweep(
        &mut db,
        &specs,
        &[1.0],
        &EstimatorConfig::default(),
        &ReoptConfig::default(),
        1
    )
    .is_err());
}

#[test]
fn improvement_without_violations_is_one_point() {
    let db = small_star();
    let spec = db
        .parse_query("SELECT MIN(t.title) FROM title AS t WHERE t.kind_id = 1")
        .unwrap();
    let curve = selective_improvement(&db, &spec, 32.0, &EstimatorConfig::default(), 1).unwrap();
    assert_eq!(curve.points.len(), 1);
    assert!(curve.points[0].corrected.is_none());
}

#[test]
fn improvement_terminates_within_the_request_bound() {
    let db = small_star();
    for nq in workload::star_corpus().iter().step_by(4) {
        let spec = db.parse_query(&nq.sql).unwrap();
        let graph = QueryGraph::new(&spec, &db.catalog).unwrap();
        let curve = selective_improvement(&db, &spec, 2.0, &EstimatorConfig::default(), 1).unwrap();
        assert!(curve.points.len() <= graph.connected_subsets().len() + 1, "{}", nq.id);
        assert!(
            curve.points.windows(2).all(|w| w[1].overrides > w[0].overrides),
            "{}",
            nq.id
        );
        assert!(curve.points.last().unwrap().corrected.is_none());
    }
}

#[test]
fn bad_thresholds_are_rejected() {
    let mut db = small_star();
    let spec = db.parse_query("SELECT MIN(t.title) FROM title AS t").unwrap();
    let out = run_with_reopt(
        &mut db,
        &spec,
        &EstimatorConfig::default(),
        &ReoptConfig::with_threshold(1.0),
    );
    assert!(matches!(out, Err(Error::InvalidConfig(_))));
    assert!(selective_improvement(&db, &spec, 0.5, &EstimatorConfig::default(), 1).is_err());
}
