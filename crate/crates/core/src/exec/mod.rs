//! Materializing executor over row-id batches.
//!
//! Every operator produces its whole output before its parent starts. An
//! intermediate result holds one column of row positions per base relation,
//! so joins never copy values; values are fetched only by projections and
//! when a result is materialized into a temp table.
//!
//! Nodes run bottom-up by height, then left to right. A monitor sees each
//! operator's profile as soon as it finishes and may stop the run; the
//! stopped node's output is handed back intact.

mod ops;

use std::collections::BTreeMap;

use rustc_hash::FxHashMap;
use serde::{Serialize, Serializer};
use web_time::{Duration, Instant};

use crate::cardinality::{QueryGraph, RelInfo};
use crate::db::Database;
use crate::error::{Error, Result};
use crate::optimizer::{explain_node, PhysicalPlan, PlanNode, PlanOp};
use crate::sql::ColumnRef;
use crate::storage::{Catalog, ColumnMeta, Table};
use crate::value::Row;

pub use ops::like_matches;

pub(crate) fn micros<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_f64(d.as_secs_f64() * 1e6)
}

/// Intermediate result: `cols[k][i]` is the row position in relation
/// `rels[k]` of output row `i`. Count-only results carry no columns.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Batch {
    pub rels: Vec<usize>,
    pub cols: Vec<Vec<u32>>,
    pub len: usize,
}

impl Batch {
    pub fn position(&self, rel: usize) -> Option<usize> {
        self.rels.iter().position(|r| *r == rel)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OperatorProfile {
    pub id: usize,
    pub op: String,
    pub est_rows: f64,
    pub actual_rows: u64,
    /// Time spent in this operator alone.
    #[serde(serialize_with = "micros", rename = "self_us")]
    pub self_elapsed: Duration,
    /// This operator plus its inputs.
    #[serde(serialize_with = "micros", rename = "elapsed_us")]
    pub elapsed: Duration,
    /// Tuples touched: scanned rows, hash inserts and probes, loop
    /// iterations, index lookups, emitted rows.
    pub work: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExecResult {
    pub columns: Vec<String>,
    pub rows: Vec<Row>,
    pub profiles: Vec<OperatorProfile>,
    #[serde(serialize_with = "micros", rename = "execution_us")]
    pub execution_time: Duration,
    pub work: u64,
}

impl ExecResult {
    pub fn profile(&self, id: usize) -> Option<&OperatorProfile> {
        self.profiles.iter().find(|p| p.id == id)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Flow {
    Continue,
    Stop,
}

/// A run halted by its monitor right after node `node_id` finished.
#[derive(Debug, Clone)]
pub struct Stopped {
    pub node_id: usize,
    pub batch: Batch,
    pub profiles: Vec<OperatorProfile>,
    pub execution_time: Duration,
    pub work: u64,
}

#[derive(Debug, Clone)]
pub enum Monitored {
    Finished(ExecResult),
    Stopped(Stopped),
}

pub(crate) struct Ctx<'a> {
    pub catalog: &'a Catalog,
    pub graph: &'a QueryGraph,
    pub tables: Vec<&'a Table>,
    /// (left rel, left column index, right rel, right column index) per edge.
    pub edge_cols: Vec<(usize, usize, usize, usize)>,
}

impl<'a> Ctx<'a> {
    pub fn new(catalog: &'a Catalog, graph: &'a QueryGraph) -> Result<Self> {
        let mut tables = Vec::with_capacity(graph.len());
        for r in &graph.rels {
            tables.push(
                catalog
                    .table(&r.table)
                    .ok_or_else(|| Error::MissingTable(r.table.clone()))?,
            );
        }
        let col = |rel: usize, name: &str| -> Result<usize> {
            tables[rel]
                .column_index(name)
                .ok_or_else(|| Error::InvalidConfig(format!("unknown column {}.{}", graph.rels[rel].table, name)))
        };
        let mut edge_cols = Vec::with_capacity(graph.edges.len());
        for e in &graph.edges {
            edge_cols.push((
                e.left_rel,
                col(e.left_rel, &e.left_col)?,
                e.right_rel,
                col(e.right_rel, &e.right_col)?,
            ));
        }
        Ok(Ctx {
            catalog,
            graph,
            tables,
            edge_cols,
        })
    }

    pub fn column_index(&self, rel: usize, name: &str) -> Result<usize> {
        self.tables[rel]
            .column_index(name)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown column {}.{}", self.graph.rels[rel].table, name)))
    }

    pub fn rel_of_alias(&self, alias: &str) -> Result<usize> {
        self.graph
            .rels
            .iter()
            .position(|r| r.alias == alias)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown alias {alias}")))
    }
}

enum NodeOutput {
    Batch(Batch),
    Rows(Vec<String>, Vec<Row>),
}

/// Runs the plan's nodes bottom-up. When `count_root` is set, the root join
/// only counts its output.
fn run(
    ctx: &Ctx,
    root: &PlanNode,
    count_root: bool,
    monitor: &mut dyn FnMut(&PlanNode, &OperatorProfile) -> Flow,
) -> Result<Monitored> {
    let start = Instant::now();
    let mut outputs: FxHashMap<usize, Batch> = FxHashMap::default();
    let mut subtree: FxHashMap<usize, Duration> = FxHashMap::default();
    let mut profiles = Vec::new();
    let mut total_work = 0u64;
    let mut final_rows: Option<(Vec<String>, Vec<Row>)> = None;

    for node in root.execution_order() {
        let emit = !(count_root && node.id == root.id);
        let t0 = Instant::now();
        let (out, work) = match &node.op {
            PlanOp::SeqScan { rel } | PlanOp::TempScan { rel } => {
                let (b, w) = ops::scan(ctx, *rel, emit)?;
                (NodeOutput::Batch(b), w)
            }
            PlanOp::HashJoin { probe, build, edges } => {
                let p = outputs.remove(&probe.id).expect("probe input executed");
                let b = outputs.remove(&build.id).expect("build input executed");
                let (o, w) = ops::hash_join(ctx, &p, &b, edges, emit)?;
                (NodeOutput::Batch(o), w)
            }
            PlanOp::NestedLoopJoin { outer, inner, edges } => {
                let o_in = outputs.remove(&outer.id).expect("outer input executed");
                let i_in = outputs.remove(&inner.id).expect("inner input executed");
                let (o, w) = ops::nested_loop_join(ctx, &o_in, &i_in, edges, emit)?;
                (NodeOutput::Batch(o), w)
            }
            PlanOp::IndexNestedLoopJoin {
                outer,
                inner_rel,
                key_edge,
                edges,
            } => {
                let o_in = outputs.remove(&outer.id).expect("outer input executed");
                let (o, w) = ops::index_nested_loop_join(ctx, &o_in, *inner_rel, *key_edge, edges, emit)?;
                (NodeOutput::Batch(o), w)
            }
            PlanOp::Project { input, columns } => {
                let b = outputs.remove(&input.id).expect("input executed");
                let (names, rows) = ops::project(ctx, &b, columns)?;
                let w = rows.len() as u64;
                (NodeOutput::Rows(names, rows), w)
            }
            PlanOp::AggregateMin { input, columns } => {
                let b = outputs.remove(&input.id).expect("input executed");
                let (names, rows) = ops::aggregate_min(ctx, &b, columns)?;
                (NodeOutput::Rows(names, rows), b.len as u64)
            }
        };
        let self_elapsed = t0.elapsed();
        let elapsed = self_elapsed + node.children().iter().map(|c| subtree[&c.id]).sum::<Duration>();
        subtree.insert(node.id, elapsed);
        total_work += work;
        let actual_rows = match &out {
            NodeOutput::Batch(b) => b.len as u64,
            NodeOutput::Rows(_, r) => r.len() as u64,
        };
        let profile = OperatorProfile {
            id: node.id,
            op: node.op_name().to_string(),
            est_rows: node.est_rows,
            actual_rows,
            self_elapsed,
            elapsed,
            work,
        };
        let flow = monitor(node, &profile);
        profiles.push(profile);
        match out {
            NodeOutput::Batch(b) => {
                if flow == Flow::Stop {
                    return Ok(Monitored::Stopped(Stopped {
                        node_id: node.id,
                        batch: b,
                        profiles,
                        execution_time: start.elapsed(),
                        work: total_work,
                    }));
                }
                outputs.insert(node.id, b);
            }
            NodeOutput::Rows(names, rows) => final_rows = Some((names, rows)),
        }
    }
    // a bare join tree yields profiles only
    let (columns, rows) = final_rows.unwrap_or_default();
    Ok(Monitored::Finished(ExecResult {
        columns,
        rows,
        profiles,
        execution_time: start.elapsed(),
        work: total_work,
    }))
}

pub fn execute(plan: &PhysicalPlan, catalog: &Catalog) -> Result<ExecResult> {
    match execute_monitored(plan, catalog, &mut |_, _| Flow::Continue)? {
        Monitored::Finished(r) => Ok(r),
        Monitored::Stopped(_) => unreachable!("monitor never stops"),
    }
}

pub fn execute_monitored(
    plan: &PhysicalPlan,
    catalog: &Catalog,
    monitor: &mut dyn FnMut(&PlanNode, &OperatorProfile) -> Flow,
) -> Result<Monitored> {
    let ctx = Ctx::new(catalog, &plan.graph)?;
    run(&ctx, &plan.root, false, monitor)
}

/// Runs a join tree and returns its intermediate result.
pub fn execute_joins(catalog: &Catalog, graph: &QueryGraph, root: &PlanNode) -> Result<(Batch, ExecResult)> {
    let ctx = Ctx::new(catalog, graph)?;
    let root_id = root.id;
    match run(&ctx, root, false, &mut |n, _| {
        if n.id == root_id {
            Flow::Stop
        } else {
            Flow::Continue
        }
    })? {
        Monitored::Stopped(s) => Ok((
            s.batch,
            ExecResult {
                columns: Vec::new(),
                rows: Vec::new(),
                profiles: s.profiles,
                execution_time: s.execution_time,
                work: s.work,
            },
        )),
        Monitored::Finished(_) => unreachable!("root always stops the run"),
    }
}

/// Output cardinality of a join tree; the root join counts without emitting.
pub fn count_rows(catalog: &Catalog, graph: &QueryGraph, root: &PlanNode) -> Result<u64> {
    let ctx = Ctx::new(catalog, graph)?;
    let root_id = root.id;
    match run(&ctx, root, true, &mut |n, _| {
        if n.id == root_id {
            Flow::Stop
        } else {
            Flow::Continue
        }
    })? {
        Monitored::Stopped(s) => Ok(s.batch.len as u64),
        Monitored::Finished(_) => unreachable!("root always stops the run"),
    }
}

/// Rows of one relation passing its filters.
pub fn count_filtered(catalog: &Catalog, rel: &RelInfo) -> Result<u64> {
    let table = catalog
        .table(&rel.table)
        .ok_or_else(|| Error::MissingTable(rel.table.clone()))?;
    let filters = ops::compile_filters(table, &rel.filters)?;
    Ok(table.rows.iter().filter(|row| ops::passes(row, &filters)).count() as u64)
}

/// Copies the exported columns of a batch into value rows. Columns are
/// emitted in the map's key order.
pub fn materialize(
    catalog: &Catalog,
    graph: &QueryGraph,
    batch: &Batch,
    exported: &BTreeMap<ColumnRef, String>,
) -> Result<(Vec<ColumnMeta>, Vec<Row>)> {
    let ctx = Ctx::new(catalog, graph)?;
    let mut sources = Vec::with_capacity(exported.len());
    let mut schema = Vec::with_capacity(exported.len());
    for (col, name) in exported {
        let rel = ctx.rel_of_alias(&col.alias)?;
        let ci = ctx.column_index(rel, &col.column)?;
        let pos = batch
            .position(rel)
            .ok_or_else(|| Error::InvalidConfig(format!("{col} is not produced by the materialized subplan")))?;
        schema.push(ColumnMeta::new(name.clone(), ctx.tables[rel].columns[ci].data_type));
        sources.push((rel, pos, ci));
    }
    let mut rows = Vec::with_capacity(batch.len);
    for i in 0..batch.len {
        rows.push(
            sources
                .iter()
                .map(|&(rel, pos, ci)| ctx.tables[rel].rows[batch.cols[pos][i] as usize][ci].clone())
                .collect(),
        );
    }
    Ok((schema, rows))
}

/// Runs a join tree and stores the exported columns of its output as a temp
/// table. The reported execution time includes the copy.
pub fn execute_to_temp(
    db: &mut Database,
    plan: &PhysicalPlan,
    name: &str,
    exported: &BTreeMap<ColumnRef, String>,
    analyze: bool,
) -> Result<ExecResult> {
    if db.catalog.contains(name) {
        return Err(crate::storage::StorageError::DuplicateTable(name.to_string()).into());
    }
    let start = Instant::now();
    let (batch, mut result) = execute_joins(&db.catalog, &plan.graph, plan.join_root())?;
    let (schema, rows) = materialize(&db.catalog, &plan.graph, &batch, exported)?;
    result.execution_time = start.elapsed();
    db.register_temp(name, schema, rows, analyze)?;
    Ok(result)
}

/// EXPLAIN ANALYZE text: the plan tree with actual rows and timings.
pub fn explain_analyze(plan: &PhysicalPlan, result: &ExecResult) -> String {
    explain_node(&plan.graph, &plan.root, &|n| {
        result.profile(n.id).map(|p| {
            format!(
                "(actual_rows={} time={:.3}ms self={:.3}ms)",
                p.actual_rows,
                p.elapsed.as_secs_f64() * 1e3,
                p.self_elapsed.as_secs_f64() * 1e3
            )
        })
    })
}
