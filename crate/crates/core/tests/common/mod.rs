#![allow(dead_code)]

use std::cmp::Ordering;

use reopt_lab::cardinality::{QueryGraph, RelSet};
use reopt_lab::sql::Predicate;
use reopt_lab::stats::AnalyzeConfig;
use reopt_lab::storage::Catalog;
use reopt_lab::value::{Row, Value};
use reopt_lab::workload::{self, GeneratorKind, GeneratorSpec};
use reopt_lab::Database;

pub fn analyzed(catalog: Catalog) -> Database {
    Database::analyzed(catalog, AnalyzeConfig::default()).expect("analyze")
}

pub fn generated(kind: GeneratorKind, seed: u64, scale: f64) -> Database {
    let spec = GeneratorSpec::new(kind, seed).scaled(scale);
    analyzed(workload::generate(&spec).expect("generate"))
}

/// Star schema small enough for nested-loop brute force (title has a few
/// hundred rows, the largest fact table a few thousand).
pub fn small_star() -> Database {
    generated(GeneratorKind::StarSchema, 7, 0.15)
}

fn like(s: &[u8], p: &[u8]) -> bool {
    match p.split_first() {
        None => s.is_empty(),
        Some((b'%', rest)) => (0..=s.len()).any(|i| like(&s[i..], rest)),
        Some((c, rest)) => s.first() == Some(c) && like(&s[1..], rest),
    }
}

fn cmp(a: &Value, b: &Value) -> Option<Ordering> {
    match (a, b) {
        (Value::Int(x), Value::Int(y)) => Some(x.cmp(y)),
        (Value::Text(x), Value::Text(y)) => Some(x.as_bytes().cmp(y.as_bytes())),
        _ => None,
    }
}

/// Row filter written independently of the executor.
pub fn passes(row: &Row, col: usize, p: &Predicate) -> bool {
    let v = &row[col];
    match p {
        Predicate::Eq(_, lit) => cmp(v, lit) == Some(Ordering::Equal),
        Predicate::Lt(_, lit) => cmp(v, lit) == Some(Ordering::Less),
        Predicate::Gt(_, lit) => cmp(v, lit) == Some(Ordering::Greater),
        Predicate::In(_, list) => list.iter().any(|lit| cmp(v, lit) == Some(Ordering::Equal)),
        Predicate::Like(_, pat) => match v {
            Value::Text(s) => like(s.as_bytes(), pat.as_bytes()),
            _ => false,
        },
    }
}

/// Nested-loop count of the filtered sub-join over `set`. Relations are
/// bound one at a time in an order that keeps the prefix connected, and
/// every row of the next relation is tested against all edges to bound
/// relations. No hashing, no indexes.
pub fn brute_force_count(catalog: &Catalog, graph: &QueryGraph, set: RelSet) -> u64 {
    let members = set.members();
    let rows: Vec<Vec<&Row>> = members
        .iter()
        .map(|&r| {
            let info = &graph.rels[r];
            let t = catalog.table(&info.table).expect("table");
            t.rows
                .iter()
                .filter(|row| {
                    info.filters.iter().all(|p| {
                        let c = t.column_index(&p.column().column).expect("column");
                        passes(row, c, p)
                    })
                })
                .collect()
        })
        .collect();

    let mut order = vec![0usize];
    while order.len() < members.len() {
        let next = (0..members.len())
            .find(|i| {
                !order.contains(i)
                    && order.iter().any(|&o| {
                        graph
                            .edges
                            .iter()
                            .any(|e| e.crosses(RelSet::single(members[o]), RelSet::single(members[*i])))
                    })
            })
            .unwrap_or_else(|| (0..members.len()).find(|i| !order.contains(i)).unwrap());
        order.push(next);
    }

    // (earlier position, its column, later column) checks per position
    let checks: Vec<Vec<(usize, usize, usize)>> = (0..order.len())
        .map(|k| {
            let me = members[order[k]];
            let my_table = catalog.table(&graph.rels[me].table).unwrap();
            let mut out = Vec::new();
            for (j, &o) in order[..k].iter().enumerate() {
                let other = members[o];
                let other_table = catalog.table(&graph.rels[other].table).unwrap();
                for e in &graph.edges {
                    if e.left_rel == me && e.right_rel == other {
                        out.push((
                            j,
                            other_table.column_index(&e.right_col).unwrap(),
                            my_table.column_index(&e.left_col).unwrap(),
                        ));
                    } else if e.right_rel == me && e.left_rel == other {
                        out.push((
                            j,
                            other_table.column_index(&e.left_col).unwrap(),
                            my_table.column_index(&e.right_col).unwrap(),
                        ));
                    }
                }
            }
            out
        })
        .collect();

    fn go<'r>(
        k: usize,
        bound: &mut Vec<&'r Row>,
        order: &[usize],
        rows: &[Vec<&'r Row>],
        checks: &[Vec<(usize, usize, usize)>],
    ) -> u64 {
        if k == order.len() {
            return 1;
        }
        let mut total = 0;
        for row in &rows[order[k]] {
            let ok = checks[k]
                .iter()
                .all(|&(j, oc, mc)| cmp(&bound[j][oc], &row[mc]) == Some(Ordering::Equal));
            if ok {
                bound.push(row);
                total += go(k + 1, bound, order, rows, checks);
                bound.pop();
            }
        }
        total
    }
    let mut bound = Vec::with_capacity(order.len());
    go(0, &mut bound, &order, &rows, &checks)
}

/// Sorted copy of a result, for bag comparison.
pub fn bag(rows: &[Row]) -> Vec<Row> {
    let mut v = rows.to_vec();
    v.sort_by(|a, b| {
        a.iter()
            .zip(b)
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| *o != Ordering::Equal)
            .unwrap_or(Ordering::Equal)
    });
    v
}

/// Connected subsets of `graph`, counted by size, from first principles:
/// grow every set by adjacent relations until fixpoint.
pub fn connected_subset_counts(n: usize, edges: &[(usize, usize)]) -> Vec<u64> {
    let mut counts = vec![0u64; n + 1];
    for mask in 1u64..(1 << n) {
        let members: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 1).collect();
        let mut seen = vec![members[0]];
        let mut changed = true;
        while changed {
            changed = false;
            for &(a, b) in edges {
                for (x, y) in [(a, b), (b, a)] {
                    if seen.contains(&x) && members.contains(&y) && !seen.contains(&y) {
                        seen.push(y);
                        changed = true;
                    }
                }
            }
        }
        if seen.len() == members.len() {
            counts[members.len()] += 1;
        }
    }
    counts
}

/// Minimum plan cost over every join tree of the query, enumerated
/// explicitly: each tree's cost is summed from the per-node cost formulas,
/// with the cheapest applicable algorithm at each node.
pub fn exhaustive_min_cost(
    db: &Database,
    graph: &QueryGraph,
    config: &reopt_lab::cardinality::EstimatorConfig,
    left_deep_only: bool,
) -> f64 {
    let est = reopt_lab::cardinality::Estimator::new(config, db);
    let p = db.optimizer.costs;
    let card = |s: RelSet| est.compute(graph, s).unwrap();

    // every tree over `set`, as (cost, est_rows) with est_rows fixed per set
    fn trees(
        set: RelSet,
        graph: &QueryGraph,
        db: &Database,
        p: &reopt_lab::optimizer::CostParams,
        card: &dyn Fn(RelSet) -> f64,
        left_deep_only: bool,
    ) -> Vec<f64> {
        if set.len() == 1 {
            let rel = &graph.rels[set.first().unwrap()];
            let rows = db.catalog.table(&rel.table).unwrap().row_count() as f64;
            return vec![rows * p.c_tuple];
        }
        let out = card(set);
        let mut costs = Vec::new();
        for left in set.proper_subsets() {
            let right = set.minus(left);
            if left_deep_only && right.len() != 1 {
                continue;
            }
            if !graph.is_connected(left) || !graph.is_connected(right) {
                continue;
            }
            let joined = graph.edges.iter().any(|e| e.crosses(left, right));
            if !joined {
                continue;
            }
            let (l, r) = (card(left), card(right));
            let index_ok = right.len() == 1 && {
                let inner = right.first().unwrap();
                let info = &graph.rels[inner];
                let table = db.catalog.table(&info.table).unwrap();
                !info.is_temp
                    && table.primary_key().is_some_and(|pk| {
                        let pk = &table.columns[pk].name;
                        graph.edges.iter().any(|e| {
                            (e.right_rel == inner && left.contains(e.left_rel) && &e.right_col == pk)
                                || (e.left_rel == inner && left.contains(e.right_rel) && &e.left_col == pk)
                        })
                    })
            };
            let lts = trees(left, graph, db, p, card, left_deep_only);
            let rts = trees(right, graph, db, p, card, left_deep_only);
            for &lc in &lts {
                for &rc in &rts {
                    let hash = lc + rc + r * p.c_hash_build + l * p.c_hash_probe + out * p.c_tuple;
                    let nl = lc + rc + l * r * p.c_tuple + out * p.c_tuple;
                    let mut best = hash.min(nl);
                    if index_ok {
                        best = best.min(lc + l * p.c_index_lookup + out * p.c_tuple);
                    }
                    costs.push(best);
                }
            }
        }
        costs
    }
    trees(graph.all(), graph, db, &p, &card, left_deep_only)
        .into_iter()
        .fold(f64::INFINITY, f64::min)
}
