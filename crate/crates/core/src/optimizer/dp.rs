use rustc_hash::FxHashMap;

use super::{OptimizerConfig, OutputColumn, PhysicalPlan, PlanNode, PlanOp, PlanShape};
use crate::cardinality::{Estimator, QueryGraph, RelSet};
use crate::error::{Error, Result};
use crate::sql::{export_names, ColumnRef, Projection, SqlError};
use crate::storage::Catalog;

#[derive(Debug, Clone, Copy, PartialEq)]
enum Algo {
    Hash,
    NestedLoop,
    IndexNestedLoop { key_edge: usize },
}

#[derive(Debug, Clone, Copy)]
enum Choice {
    Scan,
    Join { algo: Algo, left: RelSet, right: RelSet },
}

#[derive(Debug, Clone, Copy)]
struct Entry {
    est_rows: f64,
    cost: f64,
    choice: Choice,
}

/// Optimizes the full query and adds the projection or aggregate on top.
pub fn optimize(graph: QueryGraph, est: &mut Estimator, config: &OptimizerConfig) -> Result<PhysicalPlan> {
    let joins = optimize_joins(&graph, est, config)?;
    let spec = &graph.spec;
    let columns: Vec<OutputColumn> = if spec.projections.is_empty() {
        let all: Vec<ColumnRef> = spec
            .relations
            .iter()
            .flat_map(|r| {
                let t = est.catalog().table(&r.table).expect("graph tables exist");
                t.columns
                    .iter()
                    .map(move |c| ColumnRef::new(r.alias.clone(), c.name.clone()))
            })
            .collect();
        let names = export_names(&all);
        all.into_iter()
            .map(|c| OutputColumn {
                name: names[&c].clone(),
                source: c,
            })
            .collect()
    } else {
        spec.projections
            .iter()
            .map(|p| match p {
                Projection::Column { column, output } => OutputColumn {
                    source: column.clone(),
                    name: output.clone().unwrap_or_else(|| column.column.clone()),
                },
                Projection::Min { column, output } => OutputColumn {
                    source: column.clone(),
                    name: output.clone().unwrap_or_else(|| format!("min_{}", column.column)),
                },
            })
            .collect()
    };
    let rels = joins.rels;
    let cost = joins.cost;
    let (op, est_rows) = if spec.has_aggregates() {
        (
            PlanOp::AggregateMin {
                input: Box::new(joins),
                columns,
            },
            1.0,
        )
    } else {
        let rows = joins.est_rows;
        (
            PlanOp::Project {
                input: Box::new(joins),
                columns,
            },
            rows,
        )
    };
    let mut root = PlanNode {
        id: 0,
        op,
        rels,
        est_rows,
        cost,
    };
    root.assign_ids(0);
    Ok(PhysicalPlan { graph, root })
}

fn index_key_edge(graph: &QueryGraph, catalog: &Catalog, outer: RelSet, inner: usize) -> Option<usize> {
    let rel = &graph.rels[inner];
    if rel.is_temp {
        return None;
    }
    let index = catalog.index(&rel.table)?;
    let table = catalog.table(&rel.table)?;
    let pk_name = &table.columns[index.column].name;
    graph.edges.iter().position(|e| {
        (e.right_rel == inner && outer.contains(e.left_rel) && &e.right_col == pk_name)
            || (e.left_rel == inner && outer.contains(e.right_rel) && &e.left_col == pk_name)
    })
}

/// Dynamic programming over connected relation sets. Splits are visited in
/// ascending submask order and a candidate only replaces the incumbent when
/// strictly cheaper, so ties go to the first split and algorithm tried
/// (hash, nested loop, index nested loop).
pub fn optimize_joins(graph: &QueryGraph, est: &mut Estimator, config: &OptimizerConfig) -> Result<PlanNode> {
    config.validate()?;
    let n = graph.len();
    if n == 0 {
        return Err(Error::InvalidConfig("query has no relations".into()));
    }
    if n > 63 {
        return Err(Error::TooManyRelations(n));
    }
    if !config.allow_cartesian && !graph.is_connected(graph.all()) {
        return Err(SqlError::DisconnectedJoinGraph.into());
    }
    est.begin_run();
    let p = config.costs;
    let catalog = est.catalog();
    let mut best: FxHashMap<RelSet, Entry> = FxHashMap::default();

    for i in 0..n {
        let set = RelSet::single(i);
        let rows = est.estimate(graph, set)?;
        let base = est.table_rows(&graph.rels[i].table)?;
        best.insert(
            set,
            Entry {
                est_rows: rows,
                cost: base * p.c_tuple,
                choice: Choice::Scan,
            },
        );
    }

    for mask in 1..(1u64 << n) {
        let set = RelSet(mask);
        if set.len() < 2 || (!config.allow_cartesian && !graph.is_connected(set)) {
            continue;
        }
        let out = est.estimate(graph, set)?;
        let mut incumbent: Option<Entry> = None;
        for left in set.proper_subsets() {
            let right = set.minus(left);
            if config.shape == PlanShape::LeftDeepOnly && right.len() != 1 {
                continue;
            }
            let (Some(l), Some(r)) = (best.get(&left), best.get(&right)) else {
                continue;
            };
            let joined = graph.joined(left, right);
            if !joined && !config.allow_cartesian {
                continue;
            }
            let mut consider = |algo: Algo, cost: f64| {
                if incumbent.is_none_or(|b| cost < b.cost) {
                    incumbent = Some(Entry {
                        est_rows: out,
                        cost,
                        choice: Choice::Join { algo, left, right },
                    });
                }
            };
            if joined {
                consider(
                    Algo::Hash,
                    l.cost + r.cost + r.est_rows * p.c_hash_build + l.est_rows * p.c_hash_probe + out * p.c_tuple,
                );
            }
            consider(
                Algo::NestedLoop,
                l.cost + r.cost + l.est_rows * r.est_rows * p.c_tuple + out * p.c_tuple,
            );
            if right.len() == 1 {
                let inner = right.first().expect("singleton");
                if let Some(key_edge) = index_key_edge(graph, catalog, left, inner) {
                    consider(
                        Algo::IndexNestedLoop { key_edge },
                        l.cost + l.est_rows * p.c_index_lookup + out * p.c_tuple,
                    );
                }
            }
        }
        if let Some(e) = incumbent {
            best.insert(set, e);
        }
    }

    let mut root = build(graph, &best, graph.all())?;
    root.assign_ids(0);
    Ok(root)
}

fn build(graph: &QueryGraph, best: &FxHashMap<RelSet, Entry>, set: RelSet) -> Result<PlanNode> {
    let e = best
        .get(&set)
        .ok_or_else(|| Error::InvalidConfig(format!("no plan for relation set {set}")))?;
    let op = match e.choice {
        Choice::Scan => {
            let rel = set.first().expect("singleton");
            if graph.rels[rel].is_temp {
                PlanOp::TempScan { rel }
            } else {
                PlanOp::SeqScan { rel }
            }
        }
        Choice::Join { algo, left, right } => {
            let edges: Vec<usize> = graph
                .edges
                .iter()
                .enumerate()
                .filter(|(_, ed)| ed.crosses(left, right))
                .map(|(i, _)| i)
                .collect();
            match algo {
                Algo::Hash => PlanOp::HashJoin {
                    probe: Box::new(build(graph, best, left)?),
                    build: Box::new(build(graph, best, right)?),
                    edges,
                },
                Algo::NestedLoop => PlanOp::NestedLoopJoin {
                    outer: Box::new(build(graph, best, left)?),
                    inner: Box::new(build(graph, best, right)?),
                    edges,
                },
                Algo::IndexNestedLoop { key_edge } => PlanOp::IndexNestedLoopJoin {
                    outer: Box::new(build(graph, best, left)?),
                    inner_rel: right.first().expect("singleton"),
                    key_edge,
                    edges,
                },
            }
        }
    };
    Ok(PlanNode {
        id: 0,
        op,
        rels: set,
        est_rows: e.est_rows,
        cost: e.cost,
    })
}
