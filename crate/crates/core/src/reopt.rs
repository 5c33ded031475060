//! Mid-query re-optimization and the selective estimate-correction loop.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use web_time::{Duration, Instant};

use crate::cardinality::{q_error, EstimatorConfig, EstimatorMode};
use crate::db::Database;
use crate::error::{Error, Result};
use crate::exec::{self, micros, ExecResult, Flow, Monitored};
use crate::optimizer::{explain, PlanNode};
use crate::sql::{
    export_names, referenced_outside, render, substitute, CreateTempSpec, Projection, QuerySpec, Statement,
};
use crate::stats;

pub const DEFAULT_THRESHOLD: f64 = 32.0;
pub const IMPROVEMENT_ITERATION_LIMIT: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ReoptConfig {
    pub threshold: f64,
    pub max_rounds: usize,
    /// Violations are ignored until the running plan has spent at least
    /// this long executing.
    #[serde(with = "duration_us")]
    pub min_base_latency: Duration,
    /// Re-run the CREATE TEMP query from scratch instead of reusing the
    /// subtree result.
    pub reexecute_temps: bool,
    /// Collect exact statistics on each temp table before re-planning.
    pub analyze_temps: bool,
}

impl Default for ReoptConfig {
    fn default() -> Self {
        ReoptConfig {
            threshold: DEFAULT_THRESHOLD,
            max_rounds: 16,
            min_base_latency: Duration::ZERO,
            reexecute_temps: false,
            analyze_temps: true,
        }
    }
}

impl ReoptConfig {
    pub fn with_threshold(threshold: f64) -> Self {
        ReoptConfig {
            threshold,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.threshold > 1.0 {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!(
                "threshold must exceed 1, got {}",
                self.threshold
            )))
        }
    }
}

mod duration_us {
    use serde::{Deserialize, Deserializer, Serializer};
    use web_time::Duration;

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(d.as_secs_f64() * 1e6)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        let us = f64::deserialize(d)?;
        Ok(Duration::from_secs_f64(us.max(0.0) / 1e6))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ReoptRound {
    pub node_id: usize,
    pub op: String,
    pub aliases: Vec<String>,
    pub est_rows: f64,
    pub actual_rows: u64,
    pub q_error: f64,
    pub temp_name: String,
    pub create_sql: String,
    pub residual_sql: String,
    /// The re-planned residual query.
    pub plan: String,
    #[serde(serialize_with = "micros", rename = "creation_us")]
    pub creation: Duration,
    #[serde(serialize_with = "micros", rename = "replan_us")]
    pub replan: Duration,
    /// Executed operators outside the materialized subtree.
    #[serde(serialize_with = "micros", rename = "discarded_us")]
    pub discarded: Duration,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReoptTrace {
    pub threshold: f64,
    pub estimator: String,
    pub initial_plan: String,
    pub rounds: Vec<ReoptRound>,
    #[serde(serialize_with = "micros", rename = "planning_us")]
    pub total_planning: Duration,
    #[serde(serialize_with = "micros", rename = "execution_us")]
    pub total_execution: Duration,
    #[serde(serialize_with = "micros", rename = "final_select_us")]
    pub final_execution: Duration,
    #[serde(serialize_with = "micros", rename = "discarded_us")]
    pub discarded: Duration,
    /// Tuples processed by everything counted in `total_execution`.
    pub work: u64,
    pub max_rounds_exceeded: bool,
    /// EXPLAIN ANALYZE of the plan that produced the result.
    pub final_plan: String,
    /// q-errors of every join in the final SELECT, by node id.
    pub final_join_q_errors: Vec<(usize, f64)>,
}

impl ReoptTrace {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

#[derive(Debug, Clone)]
pub struct ReoptOutcome {
    pub result: ExecResult,
    pub trace: ReoptTrace,
}

/// Gives every projection an explicit output name so results keep their
/// column names after substitution.
pub fn pin_output_names(spec: &mut QuerySpec) {
    for p in &mut spec.projections {
        match p {
            Projection::Column { column, output } => {
                output.get_or_insert_with(|| column.column.clone());
            }
            Projection::Min { column, output } => {
                output.get_or_insert_with(|| format!("min_{}", column.column));
            }
        }
    }
}

fn violates(node: &PlanNode, actual: u64, threshold: f64) -> Option<f64> {
    let q = q_error(node.est_rows, actual as f64);
    (q >= threshold).then_some(q)
}

/// Plans and runs `spec`; whenever the lowest (then leftmost) join with
/// q-error at or above the threshold finishes, its output becomes a temp
/// table, the query is rewritten over it and planned again.
///
/// Planning time sums the original plan and every rewrite and re-plan;
/// execution time sums temp creations (with their statistics) and the final
/// SELECT.
/// Temp tables are dropped before returning.
pub fn run_with_reopt(
    db: &mut Database,
    spec: &QuerySpec,
    estimator: &EstimatorConfig,
    config: &ReoptConfig,
) -> Result<ReoptOutcome> {
    config.validate()?;
    let mut spec = spec.clone();
    spec.expand_star(&db.catalog);
    pin_output_names(&mut spec);

    let mut temps: Vec<String> = Vec::new();
    let outcome = reopt_loop(db, spec, estimator, config, &mut temps);
    for t in &temps {
        db.drop_temp(t);
    }
    outcome
}

fn reopt_loop(
    db: &mut Database,
    mut spec: QuerySpec,
    estimator: &EstimatorConfig,
    config: &ReoptConfig,
    temps: &mut Vec<String>,
) -> Result<ReoptOutcome> {
    let mut planned = db.plan(&spec, estimator)?;
    let mut planning = planned.planning;
    let mut execution = Duration::ZERO;
    let mut discarded = Duration::ZERO;
    let mut work = 0u64;
    let mut rounds: Vec<ReoptRound> = Vec::new();
    let initial_plan = explain(&planned.plan);

    loop {
        let plan = &planned.plan;
        let allow = rounds.len() < config.max_rounds;
        let started = Instant::now();
        let mut blocked = false;
        let outcome = exec::execute_monitored(plan, &db.catalog, &mut |node, profile| {
            if !node.is_join() || violates(node, profile.actual_rows, config.threshold).is_none() {
                return Flow::Continue;
            }
            if started.elapsed() < config.min_base_latency {
                return Flow::Continue;
            }
            if !allow {
                blocked = true;
                return Flow::Continue;
            }
            Flow::Stop
        })?;
        match outcome {
            Monitored::Finished(result) => {
                execution += result.execution_time;
                work += result.work;
                let final_join_q_errors = plan
                    .root
                    .nodes()
                    .into_iter()
                    .filter(|n| n.is_join())
                    .map(|n| {
                        let act = result.profile(n.id).map_or(0, |p| p.actual_rows);
                        (n.id, q_error(n.est_rows, act as f64))
                    })
                    .collect();
                let trace = ReoptTrace {
                    threshold: config.threshold,
                    estimator: estimator.label(),
                    initial_plan,
                    rounds,
                    total_planning: planning,
                    total_execution: execution,
                    final_execution: result.execution_time,
                    discarded,
                    work,
                    max_rounds_exceeded: blocked,
                    final_plan: exec::explain_analyze(plan, &result),
                    final_join_q_errors,
                };
                return Ok(ReoptOutcome { result, trace });
            }
            Monitored::Stopped(stopped) => {
                let node = plan.root.find(stopped.node_id).expect("stopped node is in the plan");
                let profile = stopped
                    .profiles
                    .iter()
                    .find(|p| p.id == node.id)
                    .expect("stopped node was profiled")
                    .clone();
                let subtree_ids: Vec<usize> = node.nodes().iter().map(|n| n.id).collect();
                let subtree_work: u64 = stopped
                    .profiles
                    .iter()
                    .filter(|p| subtree_ids.contains(&p.id))
                    .map(|p| p.work)
                    .sum();
                let aliases: Vec<String> = plan.graph.aliases(node.rels).iter().map(|s| s.to_string()).collect();
                let removed: Vec<&str> = aliases.iter().map(|s| s.as_str()).collect();
                let exported = export_names(&referenced_outside(&spec, &removed));
                let temp = db.catalog.fresh_temp_name("temp");

                let create = CreateTempSpec {
                    name: temp.clone(),
                    query: QuerySpec {
                        projections: exported
                            .iter()
                            .map(|(c, name)| Projection::Column {
                                column: c.clone(),
                                output: Some(name.clone()),
                            })
                            .collect(),
                        ..plan.graph.subquery(node.rels)
                    },
                };
                let create_sql = Statement::CreateTemp(create.clone()).to_string();

                let mut creation;
                if config.reexecute_temps {
                    let sub = db.plan(&plan.graph.subquery(node.rels), estimator)?;
                    let r = exec::execute_to_temp(db, &sub.plan, &temp, &exported, false)?;
                    creation = r.execution_time;
                    work += r.work;
                } else {
                    let t0 = Instant::now();
                    let (schema, rows) = exec::materialize(&db.catalog, &plan.graph, &stopped.batch, &exported)?;
                    db.register_temp(&temp, schema, rows, false)?;
                    creation = profile.elapsed + t0.elapsed();
                    work += subtree_work;
                }
                temps.push(temp.clone());
                if config.analyze_temps {
                    let t0 = Instant::now();
                    let table = db.catalog.table(&temp).expect("temp table registered");
                    let ts = stats::analyze_temp(table);
                    db.stats.insert(&temp, ts);
                    creation += t0.elapsed();
                }
                execution += creation;
                let wasted = stopped.execution_time.saturating_sub(profile.elapsed);
                discarded += wasted;

                let t0 = Instant::now();
                spec = substitute(&spec, &removed, &temp, &exported)?;
                let replanned = db.plan(&spec, estimator)?;
                let replan = t0.elapsed();
                planning += replan;

                rounds.push(ReoptRound {
                    node_id: node.id,
                    op: node.op_name().to_string(),
                    aliases,
                    est_rows: node.est_rows,
                    actual_rows: profile.actual_rows,
                    q_error: q_error(node.est_rows, profile.actual_rows as f64),
                    temp_name: temp,
                    create_sql,
                    residual_sql: render(&spec),
                    plan: explain(&replanned.plan),
                    creation,
                    replan,
                    discarded: wasted,
                });
                planned = replanned;
            }
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub threshold: f64,
    pub planning_us: f64,
    pub execution_us: f64,
    pub rounds: usize,
    pub work: u64,
}

/// Workload totals of `run_with_reopt` at each threshold. Per query, the
/// planning and execution times are medians over `repetitions` runs.
pub fn threshold_sweep(
    db: &mut Database,
    workload: &[QuerySpec],
    thresholds: &[f64],
    estimator: &EstimatorConfig,
    base: &ReoptConfig,
    repetitions: usize,
) -> Result<Vec<SweepRow>> {
    let mut rows = Vec::with_capacity(thresholds.len());
    for &threshold in thresholds {
        let config = ReoptConfig {
            threshold,
            ..base.clone()
        };
        config.validate()?;
        let mut row = SweepRow {
            threshold,
            planning_us: 0.0,
            execution_us: 0.0,
            rounds: 0,
            work: 0,
        };
        for spec in workload {
            let mut planning = Vec::new();
            let mut execution = Vec::new();
            let mut last = None;
            for _ in 0..repetitions.max(1) {
                let out = run_with_reopt(db, spec, estimator, &config)?;
                planning.push(out.trace.total_planning);
                execution.push(out.trace.total_execution);
                last = Some(out.trace);
            }
            let trace = last.expect("at least one repetition");
            row.planning_us += median(&mut planning).as_secs_f64() * 1e6;
            row.execution_us += median(&mut execution).as_secs_f64() * 1e6;
            row.rounds += trace.rounds.len();
            row.work += trace.work;
        }
        rows.push(row);
    }
    Ok(rows)
}

pub(crate) fn median(xs: &mut [Duration]) -> Duration {
    xs.sort();
    xs[xs.len() / 2]
}

#[derive(Debug, Clone, Serialize)]
pub struct ImprovementPoint {
    pub iteration: usize,
    #[serde(serialize_with = "micros", rename = "execution_us")]
    pub execution_time: Duration,
    pub work: u64,
    pub plan_cost: f64,
    pub plan_shape: String,
    /// Request corrected after this iteration, with its true count.
    pub corrected: Option<(String, u64)>,
    pub overrides: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct ImprovementCurve {
    pub threshold: f64,
    pub points: Vec<ImprovementPoint>,
}

impl ImprovementCurve {
    /// Largest slowdown from one iteration to the next, by execution time.
    pub fn max_time_regression(&self) -> f64 {
        self.points
            .windows(2)
            .map(|w| w[1].execution_time.as_secs_f64() / w[0].execution_time.as_secs_f64().max(1e-9))
            .fold(0.0, f64::max)
    }

    pub fn max_work_regression(&self) -> f64 {
        self.points
            .windows(2)
            .map(|w| w[1].work as f64 / (w[0].work as f64).max(1.0))
            .fold(0.0, f64::max)
    }
}

/// Repeatedly plan with override estimates, run to completion, and correct
/// the lowest operator whose q-error reaches the threshold together with
/// everything below it. Each iteration's time is the median of `repetitions`
/// executions.
pub fn selective_improvement(
    db: &Database,
    spec: &QuerySpec,
    threshold: f64,
    base: &EstimatorConfig,
    repetitions: usize,
) -> Result<ImprovementCurve> {
    if threshold <= 1.0 {
        return Err(Error::InvalidConfig(format!(
            "threshold must exceed 1, got {threshold}"
        )));
    }
    let mut overrides: BTreeMap<String, f64> = base.overrides.clone();
    let mut points = Vec::new();
    for iteration in 0..IMPROVEMENT_ITERATION_LIMIT {
        let config = EstimatorConfig {
            mode: EstimatorMode::Overrides,
            overrides: overrides.clone(),
            ..base.clone()
        };
        let planned = db.plan(spec, &config)?;
        let plan = &planned.plan;
        let mut times = Vec::with_capacity(repetitions.max(1));
        let mut result = exec::execute(plan, &db.catalog)?;
        times.push(result.execution_time);
        for _ in 1..repetitions.max(1) {
            let r = exec::execute(plan, &db.catalog)?;
            times.push(r.execution_time);
            result = r;
        }
        let execution_time = median(&mut times);

        let violating = plan.join_root().execution_order().into_iter().find(|n| {
            let act = result.profile(n.id).map_or(0, |p| p.actual_rows);
            violates(n, act, threshold).is_some()
        });
        let mut point = ImprovementPoint {
            iteration,
            execution_time,
            work: result.work,
            plan_cost: plan.cost(),
            plan_shape: plan.root.shape(),
            corrected: None,
            overrides: overrides.len(),
        };
        let Some(node) = violating else {
            points.push(point);
            return Ok(ImprovementCurve { threshold, points });
        };
        let mut grew = false;
        for n in node.nodes() {
            let req = plan.graph.request(n.rels);
            let act = result.profile(n.id).map_or(0, |p| p.actual_rows);
            grew |= overrides.insert(req.key, act as f64).is_none();
        }
        let req = plan.graph.request(node.rels);
        let act = result.profile(node.id).map_or(0, |p| p.actual_rows);
        point.corrected = Some((req.key, act));
        points.push(point);
        if !grew {
            return Err(Error::NonTermination(iteration + 1));
        }
    }
    Err(Error::NonTermination(IMPROVEMENT_ITERATION_LIMIT))
}
