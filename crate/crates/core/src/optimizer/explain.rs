use std::fmt::Write;

use super::{PhysicalPlan, PlanNode, PlanOp};
use crate::cardinality::QueryGraph;

fn edge_list(graph: &QueryGraph, edges: &[usize]) -> String {
    let parts: Vec<String> = edges.iter().map(|&e| graph.edges[e].pred.to_string()).collect();
    if parts.is_empty() {
        "true".to_string()
    } else {
        parts.join(" AND ")
    }
}

fn relation(graph: &QueryGraph, rel: usize) -> String {
    let r = &graph.rels[rel];
    let mut s = if r.alias == r.table {
        r.table.clone()
    } else {
        format!("{} AS {}", r.table, r.alias)
    };
    if !r.filters.is_empty() {
        let f: Vec<String> = r.filters.iter().map(|p| p.to_string()).collect();
        let _ = write!(s, " [{}]", f.join(" AND "));
    }
    s
}

fn describe(graph: &QueryGraph, node: &PlanNode) -> String {
    let detail = match &node.op {
        PlanOp::SeqScan { rel } | PlanOp::TempScan { rel } => relation(graph, *rel),
        PlanOp::HashJoin { edges, .. } | PlanOp::NestedLoopJoin { edges, .. } => {
            format!("[{}]", edge_list(graph, edges))
        }
        PlanOp::IndexNestedLoopJoin { inner_rel, edges, .. } => {
            format!("{} [{}]", relation(graph, *inner_rel), edge_list(graph, edges))
        }
        PlanOp::Project { columns, .. } | PlanOp::AggregateMin { columns, .. } => {
            let c: Vec<String> = columns.iter().map(|c| format!("{} AS {}", c.source, c.name)).collect();
            c.join(", ")
        }
    };
    format!(
        "{} {} (est_rows={:.0} cost={:.1})",
        node.op_name(),
        detail,
        node.est_rows,
        node.cost
    )
}

/// Indented plan tree, two spaces per level. `annotate` may append text to
/// a node's line (EXPLAIN ANALYZE uses it for actual rows and timings).
pub fn explain_node(graph: &QueryGraph, node: &PlanNode, annotate: &dyn Fn(&PlanNode) -> Option<String>) -> String {
    let mut out = String::new();
    fn walk(
        graph: &QueryGraph,
        node: &PlanNode,
        depth: usize,
        annotate: &dyn Fn(&PlanNode) -> Option<String>,
        out: &mut String,
    ) {
        let _ = write!(out, "{}{}", "  ".repeat(depth), describe(graph, node));
        if let Some(extra) = annotate(node) {
            let _ = write!(out, " {extra}");
        }
        out.push('\n');
        for c in node.children() {
            walk(graph, c, depth + 1, annotate, out);
        }
    }
    walk(graph, node, 0, annotate, &mut out);
    out
}

pub fn explain(plan: &PhysicalPlan) -> String {
    explain_node(&plan.graph, &plan.root, &|_| None)
}
