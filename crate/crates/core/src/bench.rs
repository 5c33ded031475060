//! Benchmark harness: runs a workload under several estimator/re-optimization
//! configurations and produces per-query rows, totals, relative-runtime
//! buckets and perfect-(n) ladders.

use std::collections::BTreeMap;
use std::hash::{Hash, Hasher};
use std::path::{Path, PathBuf};

use rustc_hash::FxHasher;
use serde::{Deserialize, Serialize};
use web_time::Duration;

use crate::cardinality::{EstimatorConfig, EstimatorMode, QueryGraph};
use crate::db::Database;
use crate::error::Result;
use crate::exec;
use crate::reopt::{median, run_with_reopt, ReoptConfig};
use crate::sql::QuerySpec;
use crate::value::Row;
use crate::workload::NamedQuery;

pub const BASELINE: &str = "perfect-max";

/// Upper bounds of the relative-runtime buckets; the last bucket is open.
pub const BUCKET_BOUNDS: [f64; 4] = [0.8, 1.2, 2.0, 5.0];
pub const BUCKET_LABELS: [&str; 5] = ["0.1-0.8", "0.8-1.2", "1.2-2.0", "2.0-5.0", ">5.0"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    pub name: String,
    pub estimator: EstimatorConfig,
    /// Re-optimize with these settings when present.
    pub reopt: Option<ReoptConfig>,
}

impl BenchConfig {
    pub fn plain(name: impl Into<String>, estimator: EstimatorConfig) -> Self {
        BenchConfig {
            name: name.into(),
            estimator,
            reopt: None,
        }
    }

    pub fn reopt(name: impl Into<String>, estimator: EstimatorConfig, reopt: ReoptConfig) -> Self {
        BenchConfig {
            name: name.into(),
            estimator,
            reopt: Some(reopt),
        }
    }

    /// Perfect estimates for every request, whatever the query size.
    pub fn baseline() -> Self {
        BenchConfig::plain(BASELINE, EstimatorConfig::perfect(usize::MAX))
    }

    fn needs_oracle(&self) -> bool {
        !matches!(self.estimator.mode, EstimatorMode::Default | EstimatorMode::PerfectN(0))
    }
}

/// The usual comparison: default, re-optimization at `threshold`, perfect.
pub fn standard_configs(threshold: f64) -> Vec<BenchConfig> {
    vec![
        BenchConfig::plain("default", EstimatorConfig::default()),
        BenchConfig::reopt(
            format!("reopt@{threshold}"),
            EstimatorConfig::default(),
            ReoptConfig::with_threshold(threshold),
        ),
        BenchConfig::baseline(),
    ]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BenchOptions {
    /// Timed runs per (query, config); times are medians.
    pub repetitions: usize,
    /// Threads for oracle precomputation.
    pub jobs: usize,
}

impl Default for BenchOptions {
    fn default() -> Self {
        BenchOptions {
            repetitions: 3,
            jobs: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub query_id: String,
    pub config: String,
    pub relations: usize,
    pub planning_us: f64,
    pub execution_us: f64,
    pub reopt_rounds: usize,
    pub work: u64,
    pub result_rows: usize,
    /// `ok`, or the error message.
    pub status: String,
}

impl BenchRow {
    pub fn is_ok(&self) -> bool {
        self.status == "ok"
    }

    pub fn total_us(&self) -> f64 {
        self.planning_us + self.execution_us
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Totals {
    pub queries: usize,
    pub failures: usize,
    pub planning_us: f64,
    pub execution_us: f64,
    pub reopt_rounds: usize,
    pub work: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub seed: u64,
    pub baseline: String,
    pub configs: Vec<String>,
    pub rows: Vec<BenchRow>,
    /// Queries whose result differed between configs.
    pub mismatches: Vec<String>,
    pub warnings: Vec<String>,
}

impl BenchReport {
    pub fn row(&self, query: &str, config: &str) -> Option<&BenchRow> {
        self.rows.iter().find(|r| r.query_id == query && r.config == config)
    }

    pub fn query_ids(&self) -> Vec<String> {
        let mut ids: Vec<String> = Vec::new();
        for r in &self.rows {
            if !ids.contains(&r.query_id) {
                ids.push(r.query_id.clone());
            }
        }
        ids
    }

    pub fn totals(&self) -> BTreeMap<String, Totals> {
        let mut out: BTreeMap<String, Totals> = BTreeMap::new();
        for r in &self.rows {
            let t = out.entry(r.config.clone()).or_default();
            t.queries += 1;
            if !r.is_ok() {
                t.failures += 1;
                continue;
            }
            t.planning_us += r.planning_us;
            t.execution_us += r.execution_us;
            t.reopt_rounds += r.reopt_rounds;
            t.work += r.work;
        }
        out
    }

    /// Execution time of `config` relative to the baseline, per query.
    pub fn relative_runtimes(&self, config: &str) -> Vec<(String, f64)> {
        self.query_ids()
            .into_iter()
            .filter_map(|q| {
                let r = self.row(&q, config).filter(|r| r.is_ok())?;
                let b = self.row(&q, &self.baseline).filter(|r| r.is_ok())?;
                Some((q, r.execution_us / b.execution_us.max(1e-3)))
            })
            .collect()
    }

    /// Counts per bucket of [`BUCKET_LABELS`]. Ratios below 0.1 land in the
    /// first bucket.
    pub fn buckets(&self, config: &str) -> [usize; 5] {
        let mut counts = [0usize; 5];
        for (_, ratio) in self.relative_runtimes(config) {
            counts[bucket_of(ratio)] += 1;
        }
        counts
    }

    /// Rows of the `k` queries slowest under `by`, slowest first, with every
    /// config for each.
    pub fn top_k(&self, k: usize, by: &str) -> BenchReport {
        let mut ranked: Vec<(&str, f64)> = self
            .rows
            .iter()
            .filter(|r| r.config == by)
            .map(|r| (r.query_id.as_str(), r.execution_us))
            .collect();
        ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        let mut rows = Vec::new();
        for (q, _) in ranked.into_iter().take(k) {
            for c in &self.configs {
                if let Some(r) = self.row(q, c) {
                    rows.push(r.clone());
                }
            }
        }
        BenchReport { rows, ..self.clone() }
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        write_csv(path, &self.rows)
    }

    pub fn summary(&self) -> BenchSummary {
        let mut warnings = self.warnings.clone();
        let buckets = self
            .configs
            .iter()
            .map(|c| {
                let low = self.relative_runtimes(c).iter().filter(|(_, r)| *r < 0.1).count();
                if low > 0 {
                    warnings.push(format!(
                        "{c}: {low} relative runtimes below 0.1 clipped into {}",
                        BUCKET_LABELS[0]
                    ));
                }
                let counts = self.buckets(c);
                (
                    c.clone(),
                    BUCKET_LABELS.iter().map(|l| l.to_string()).zip(counts).collect(),
                )
            })
            .collect();
        BenchSummary {
            seed: self.seed,
            baseline: self.baseline.clone(),
            queries: self.query_ids().len(),
            totals: self.totals(),
            buckets,
            mismatches: self.mismatches.clone(),
            warnings,
        }
    }

    pub fn write_json(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(&self.summary())?)?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchSummary {
    pub seed: u64,
    pub baseline: String,
    pub queries: usize,
    pub totals: BTreeMap<String, Totals>,
    pub buckets: BTreeMap<String, BTreeMap<String, usize>>,
    pub mismatches: Vec<String>,
    pub warnings: Vec<String>,
}

pub fn bucket_of(ratio: f64) -> usize {
    BUCKET_BOUNDS
        .iter()
        .position(|b| ratio < *b)
        .unwrap_or(BUCKET_BOUNDS.len())
}

/// Parses every query and fills the oracle for all of their connected
/// subsets, so perfect-(n) planning times exclude brute-force counting.
pub fn precompute_oracle(db: &Database, workload: &[NamedQuery], jobs: usize) -> Result<usize> {
    let graphs = workload
        .iter()
        .map(|q| {
            let spec = db.parse_query(&q.sql)?;
            QueryGraph::new(&spec, &db.catalog)
        })
        .collect::<Result<Vec<_>>>()?;
    db.oracle.precompute(db, &graphs, jobs)
}

struct Measured {
    planning: Duration,
    execution: Duration,
    rounds: usize,
    work: u64,
    rows: Vec<Row>,
}

fn measure_once(db: &mut Database, spec: &QuerySpec, config: &BenchConfig) -> Result<Measured> {
    match &config.reopt {
        Some(rc) => {
            let out = run_with_reopt(db, spec, &config.estimator, rc)?;
            Ok(Measured {
                planning: out.trace.total_planning,
                execution: out.trace.total_execution,
                rounds: out.trace.rounds.len(),
                work: out.trace.work,
                rows: out.result.rows,
            })
        }
        None => {
            let planned = db.plan(spec, &config.estimator)?;
            let result = exec::execute(&planned.plan, &db.catalog)?;
            Ok(Measured {
                planning: planned.planning,
                execution: result.execution_time,
                rounds: 0,
                work: result.work,
                rows: result.rows,
            })
        }
    }
}

fn measure(db: &mut Database, sql: &str, config: &BenchConfig, repetitions: usize) -> Result<Measured> {
    let spec = db.parse_query(sql)?;
    let mut planning = Vec::new();
    let mut execution = Vec::new();
    let mut last = None;
    for _ in 0..repetitions.max(1) {
        let m = measure_once(db, &spec, config)?;
        planning.push(m.planning);
        execution.push(m.execution);
        last = Some(m);
    }
    let mut m = last.expect("at least one repetition");
    m.planning = median(&mut planning);
    m.execution = median(&mut execution);
    Ok(m)
}

fn bag(mut rows: Vec<Row>) -> Vec<Row> {
    rows.sort_by(|a, b| {
        a.iter()
            .zip(b)
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(a.len().cmp(&b.len()))
    });
    rows
}

/// Runs every query under every config. The baseline config is appended
/// when absent. Failures are recorded per row and do not stop the suite.
pub fn run_bench(
    db: &mut Database,
    workload: &[NamedQuery],
    configs: &[BenchConfig],
    options: &BenchOptions,
    seed: u64,
) -> Result<BenchReport> {
    let mut configs = configs.to_vec();
    if !configs.iter().any(|c| c.name == BASELINE) {
        configs.push(BenchConfig::baseline());
    }
    let mut warnings = Vec::new();
    if configs.iter().any(BenchConfig::needs_oracle) {
        if let Err(e) = precompute_oracle(db, workload, options.jobs) {
            warnings.push(format!("oracle precomputation failed: {e}"));
        }
    }
    let mut rows = Vec::new();
    let mut mismatches = Vec::new();
    for q in workload {
        let relations = db.parse_query(&q.sql).map_or(0, |s| s.relations.len());
        let mut reference: Option<Vec<Row>> = None;
        let mut mismatch = false;
        for c in &configs {
            let row = match measure(db, &q.sql, c, options.repetitions) {
                Ok(m) => {
                    let result_rows = m.rows.len();
                    let b = bag(m.rows);
                    match &reference {
                        None => reference = Some(b),
                        Some(r) => mismatch |= *r != b,
                    }
                    BenchRow {
                        query_id: q.id.clone(),
                        config: c.name.clone(),
                        relations,
                        planning_us: m.planning.as_secs_f64() * 1e6,
                        execution_us: m.execution.as_secs_f64() * 1e6,
                        reopt_rounds: m.rounds,
                        work: m.work,
                        result_rows,
                        status: "ok".into(),
                    }
                }
                Err(e) => BenchRow {
                    query_id: q.id.clone(),
                    config: c.name.clone(),
                    relations,
                    planning_us: 0.0,
                    execution_us: 0.0,
                    reopt_rounds: 0,
                    work: 0,
                    result_rows: 0,
                    status: format!("error: {e}"),
                },
            };
            rows.push(row);
            db.drop_temp_tables();
        }
        if mismatch {
            mismatches.push(q.id.clone());
        }
    }
    Ok(BenchReport {
        seed,
        baseline: BASELINE.to_string(),
        configs: configs.into_iter().map(|c| c.name).collect(),
        rows,
        mismatches,
        warnings,
    })
}

/// One rung of a perfect-(n) ladder; `None` means perfect-max.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LadderN(pub Option<usize>);

impl Ord for LadderN {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        let key = |l: &LadderN| (l.0.is_none(), l.0.unwrap_or(0));
        key(self).cmp(&key(other))
    }
}

impl PartialOrd for LadderN {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl LadderN {
    pub fn estimator(&self) -> EstimatorConfig {
        EstimatorConfig::perfect(self.0.unwrap_or(usize::MAX))
    }

    pub fn label(&self) -> String {
        match self.0 {
            Some(n) => n.to_string(),
            None => "max".to_string(),
        }
    }
}

impl std::str::FromStr for LadderN {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("max") {
            return Ok(LadderN(None));
        }
        s.parse()
            .map(|n| LadderN(Some(n)))
            .map_err(|_| crate::Error::InvalidConfig(format!("ladder rung must be a count or `max`, got {s}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LadderRow {
    pub n: String,
    pub planning_us: f64,
    pub execution_us: f64,
    pub work: u64,
    pub failures: usize,
}

/// Workload totals under perfect-(n) for each rung, in the given order.
pub fn perfect_ladder(
    db: &mut Database,
    workload: &[NamedQuery],
    rungs: &[LadderN],
    options: &BenchOptions,
) -> Result<Vec<LadderRow>> {
    if rungs.windows(2).any(|w| w[0] > w[1]) {
        return Err(crate::Error::InvalidConfig(
            "ladder rungs must be sorted ascending".into(),
        ));
    }
    if rungs.iter().any(|r| r.0 != Some(0)) {
        precompute_oracle(db, workload, options.jobs)?;
    }
    let mut out = Vec::with_capacity(rungs.len());
    for rung in rungs {
        let config = BenchConfig::plain(format!("perfect-{}", rung.label()), rung.estimator());
        let mut row = LadderRow {
            n: rung.label(),
            planning_us: 0.0,
            execution_us: 0.0,
            work: 0,
            failures: 0,
        };
        for q in workload {
            match measure(db, &q.sql, &config, options.repetitions) {
                Ok(m) => {
                    row.planning_us += m.planning.as_secs_f64() * 1e6;
                    row.execution_us += m.execution.as_secs_f64() * 1e6;
                    row.work += m.work;
                }
                Err(_) => row.failures += 1,
            }
        }
        out.push(row);
    }
    Ok(out)
}

/// Writes one CSV row per item, with a header from the field names.
pub fn write_csv<T: Serialize>(path: impl AsRef<Path>, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Stable short hash of any serializable configuration.
pub fn config_hash<T: Serialize>(config: &T) -> String {
    let text = serde_json::to_string(config).unwrap_or_default();
    let mut h = FxHasher::default();
    text.hash(&mut h);
    format!("{:08x}", h.finish() as u32)
}

/// `{dir}/{stem}-seed{seed}-{hash}.{ext}`
pub fn output_path(dir: impl AsRef<Path>, stem: &str, seed: u64, hash: &str, ext: &str) -> PathBuf {
    dir.as_ref().join(format!("{stem}-seed{seed}-{hash}.{ext}"))
}
