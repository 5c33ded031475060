//! Browser bindings for reopt-lab. Every exported function takes plain
//! numbers or strings and returns a JSON string; the native `*_json`
//! functions underneath are what the tests call.

use std::cell::RefCell;

use reopt_lab::cardinality::{q_error, EstimatorConfig, QueryGraph};
use reopt_lab::exec;
use reopt_lab::optimizer::explain;
use reopt_lab::reopt::{run_with_reopt, ReoptConfig};
use reopt_lab::stats::AnalyzeConfig;
use reopt_lab::workload::{self, GeneratorKind, GeneratorSpec};
use reopt_lab::Database;
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// Star schema scale used by the playground; small enough for a browser.
pub const DEMO_SCALE: f64 = 0.25;

thread_local! {
    static STAR: RefCell<Option<(u64, Database)>> = const { RefCell::new(None) };
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn with_star<T>(seed: u64, f: impl FnOnce(&mut Database) -> Result<T, String>) -> Result<T, String> {
    STAR.with(|cell| {
        let mut slot = cell.borrow_mut();
        if slot.as_ref().is_none_or(|(s, _)| *s != seed) {
            let spec = GeneratorSpec::new(GeneratorKind::StarSchema, seed).scaled(DEMO_SCALE);
            let catalog = workload::generate(&spec).map_err(err)?;
            let db = Database::analyzed(catalog, AnalyzeConfig::default()).map_err(err)?;
            *slot = Some((seed, db));
        }
        f(&mut slot.as_mut().expect("initialized").1)
    })
}

fn to_json(v: &impl Serialize) -> Result<String, String> {
    serde_json::to_string(v).map_err(err)
}

#[derive(Serialize)]
struct QueryInfo {
    id: String,
    family: String,
    relations: usize,
    sql: String,
}

/// The star corpus: id, family, relation count and SQL of every query.
pub fn queries_json(seed: u64) -> Result<String, String> {
    with_star(seed, |db| {
        let mut list = Vec::new();
        for q in workload::star_corpus() {
            let spec = db.parse_query(&q.sql).map_err(err)?;
            list.push(QueryInfo {
                id: q.id,
                family: q.family,
                relations: spec.relations.len(),
                sql: q.sql,
            });
        }
        to_json(&list)
    })
}

#[derive(Serialize)]
struct CompanyShare {
    symbol: String,
    trades: u64,
    share: f64,
}

#[derive(Serialize)]
struct SkewReport {
    companies: usize,
    trades: usize,
    zipf_s: f64,
    top: Vec<CompanyShare>,
    median_trades: f64,
    top_over_median: f64,
    symbol: String,
    estimate: f64,
    truth: u64,
    q_error: f64,
}

/// Generates a stocks data set and reports how skewed trades are and how
/// far the default estimate for the busiest symbol's join is off.
pub fn skew_json(zipf_s: f64, companies: usize, trades: usize, seed: u64) -> Result<String, String> {
    let spec = GeneratorSpec::new(GeneratorKind::StocksSkew, seed)
        .with_size("companies", companies)
        .with_size("trades", trades);
    let spec = GeneratorSpec { zipf_s, ..spec };
    let catalog = workload::generate(&spec).map_err(err)?;

    let comp = catalog.table("companies").ok_or("no companies table")?;
    let (id_col, sym_col) = (
        comp.column_index("id").ok_or("no id")?,
        comp.column_index("symbol").ok_or("no symbol")?,
    );
    let tr = catalog.table("trades").ok_or("no trades table")?;
    let fk = tr.column_index("company_id").ok_or("no company_id")?;
    let mut counts = vec![0u64; comp.row_count()];
    let index_of: std::collections::HashMap<i64, usize> = comp
        .rows
        .iter()
        .enumerate()
        .filter_map(|(i, r)| r[id_col].as_int().map(|id| (id, i)))
        .collect();
    for r in &tr.rows {
        if let Some(&i) = r[fk].as_int().and_then(|id| index_of.get(&id)) {
            counts[i] += 1;
        }
    }
    let mut order: Vec<usize> = (0..counts.len()).collect();
    order.sort_by(|&a, &b| counts[b].cmp(&counts[a]));
    let total = tr.row_count().max(1) as f64;
    let symbol_of = |i: usize| comp.rows[i][sym_col].as_str().unwrap_or("").to_string();
    let top: Vec<CompanyShare> = order
        .iter()
        .take(10)
        .map(|&i| CompanyShare {
            symbol: symbol_of(i),
            trades: counts[i],
            share: counts[i] as f64 / total,
        })
        .collect();
    let mut sorted = counts.clone();
    sorted.sort_unstable();
    let median = match sorted.len() {
        0 => 0.0,
        n if n % 2 == 1 => sorted[n / 2] as f64,
        n => (sorted[n / 2 - 1] + sorted[n / 2]) as f64 / 2.0,
    };

    let symbol = symbol_of(order[0]);
    let top_trades = counts[order[0]];
    let (n_companies, n_trades) = (comp.row_count(), tr.row_count());
    let db = Database::analyzed(catalog, AnalyzeConfig::default()).map_err(err)?;
    let sql = format!(
        "SELECT MIN(t.shares) FROM companies AS c, trades AS t WHERE c.id = t.company_id AND c.symbol = '{symbol}'"
    );
    let query = db.parse_query(&sql).map_err(err)?;
    let graph = QueryGraph::new(&query, &db.catalog).map_err(err)?;
    let planned = db.plan(&query, &EstimatorConfig::default()).map_err(err)?;
    let estimate = planned.plan.join_root().est_rows;
    let truth = db.oracle.true_cardinality(&db, &graph, graph.all()).map_err(err)?;

    to_json(&SkewReport {
        companies: n_companies,
        trades: n_trades,
        zipf_s,
        top_over_median: if median > 0.0 {
            top_trades as f64 / median
        } else {
            f64::INFINITY
        },
        top,
        median_trades: median,
        symbol,
        estimate,
        truth,
        q_error: q_error(estimate, truth as f64),
    })
}

#[derive(Serialize)]
struct RoundInfo {
    op: String,
    aliases: Vec<String>,
    est_rows: f64,
    actual_rows: u64,
    q_error: f64,
    create_sql: String,
    residual_sql: String,
}

#[derive(Serialize)]
struct Playground {
    query: String,
    threshold: f64,
    default_plan: String,
    default_ms: f64,
    default_work: u64,
    reopt_plan: String,
    reopt_planning_ms: f64,
    reopt_execution_ms: f64,
    reopt_work: u64,
    rounds: Vec<RoundInfo>,
    rows: usize,
}

/// Runs one corpus query with the default plan and with re-optimization at
/// `threshold`, returning both EXPLAIN ANALYZE trees and the rounds taken.
pub fn reopt_json(query_id: &str, threshold: f64, seed: u64) -> Result<String, String> {
    let nq = workload::star_corpus()
        .into_iter()
        .find(|q| q.id == query_id)
        .ok_or_else(|| format!("no query {query_id}"))?;
    with_star(seed, |db| {
        let spec = db.parse_query(&nq.sql).map_err(err)?;
        let planned = db.plan(&spec, &EstimatorConfig::default()).map_err(err)?;
        let base = exec::execute(&planned.plan, &db.catalog).map_err(err)?;
        let config = ReoptConfig::with_threshold(threshold);
        let out = run_with_reopt(db, &spec, &EstimatorConfig::default(), &config).map_err(err)?;
        let t = &out.trace;
        to_json(&Playground {
            query: nq.sql.clone(),
            threshold,
            default_plan: exec::explain_analyze(&planned.plan, &base),
            default_ms: (planned.planning + base.execution_time).as_secs_f64() * 1e3,
            default_work: base.work,
            reopt_plan: t.final_plan.clone(),
            reopt_planning_ms: t.total_planning.as_secs_f64() * 1e3,
            reopt_execution_ms: t.total_execution.as_secs_f64() * 1e3,
            reopt_work: t.work,
            rounds: t
                .rounds
                .iter()
                .map(|r| RoundInfo {
                    op: r.op.clone(),
                    aliases: r.aliases.clone(),
                    est_rows: r.est_rows,
                    actual_rows: r.actual_rows,
                    q_error: r.q_error,
                    create_sql: r.create_sql.clone(),
                    residual_sql: r.residual_sql.clone(),
                })
                .collect(),
            rows: out.result.rows.len(),
        })
    })
}

#[derive(Serialize)]
struct Rung {
    n: usize,
    plan: String,
    cost: f64,
    work: u64,
    execution_ms: f64,
    /// Largest q-error among joins of each size in the executed plan,
    /// indexed by relation count.
    max_q_error_by_size: Vec<Option<f64>>,
}

/// Plans and runs one corpus query under perfect-(n) for every n from 0 to
/// its relation count.
pub fn perfect_n_json(query_id: &str, seed: u64) -> Result<String, String> {
    let nq = workload::star_corpus()
        .into_iter()
        .find(|q| q.id == query_id)
        .ok_or_else(|| format!("no query {query_id}"))?;
    with_star(seed, |db| {
        let spec = db.parse_query(&nq.sql).map_err(err)?;
        let rels = spec.relations.len();
        let mut rungs = Vec::with_capacity(rels + 1);
        for n in 0..=rels {
            let planned = db.plan(&spec, &EstimatorConfig::perfect(n)).map_err(err)?;
            let r = exec::execute(&planned.plan, &db.catalog).map_err(err)?;
            let mut by_size: Vec<Option<f64>> = vec![None; rels + 1];
            for node in planned.plan.join_root().nodes() {
                if !node.is_join() {
                    continue;
                }
                let actual = r.profile(node.id).map_or(0, |p| p.actual_rows);
                let q = q_error(node.est_rows, actual as f64);
                let slot = &mut by_size[node.rels.len()];
                *slot = Some(slot.map_or(q, |m: f64| m.max(q)));
            }
            rungs.push(Rung {
                n,
                plan: explain(&planned.plan),
                cost: planned.plan.cost(),
                work: r.work,
                execution_ms: r.execution_time.as_secs_f64() * 1e3,
                max_q_error_by_size: by_size,
            });
        }
        to_json(&rungs)
    })
}

fn js(r: Result<String, String>) -> Result<String, JsValue> {
    r.map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn queries(seed: u32) -> Result<String, JsValue> {
    js(queries_json(seed as u64))
}

#[wasm_bindgen]
pub fn skew_explorer(zipf_s: f64, companies: usize, trades: usize, seed: u32) -> Result<String, JsValue> {
    js(skew_json(zipf_s, companies, trades, seed as u64))
}

#[wasm_bindgen]
pub fn reopt_playground(query_id: &str, threshold: f64, seed: u32) -> Result<String, JsValue> {
    js(reopt_json(query_id, threshold, seed as u64))
}

#[wasm_bindgen]
pub fn perfect_n_profile(query_id: &str, seed: u32) -> Result<String, JsValue> {
    js(perfect_n_json(query_id, seed as u64))
}
