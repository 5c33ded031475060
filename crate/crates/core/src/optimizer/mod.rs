//! Cost model, dynamic-programming join enumeration and plan printing.

mod dp;
mod explain;

use serde::{Deserialize, Serialize};

pub use dp::{optimize, optimize_joins};
pub use explain::{explain, explain_node};

use crate::cardinality::{QueryGraph, RelSet};
use crate::error::{Error, Result};
use crate::sql::ColumnRef;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PlanShape {
    LeftDeepOnly,
    Bushy,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostParams {
    pub c_tuple: f64,
    pub c_hash_build: f64,
    pub c_hash_probe: f64,
    pub c_index_lookup: f64,
}

impl Default for CostParams {
    fn default() -> Self {
        CostParams {
            c_tuple: 1.0,
            c_hash_build: 2.0,
            c_hash_probe: 1.0,
            c_index_lookup: 4.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimizerConfig {
    pub shape: PlanShape,
    pub allow_cartesian: bool,
    pub costs: CostParams,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            shape: PlanShape::Bushy,
            allow_cartesian: false,
            costs: CostParams::default(),
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        let c = &self.costs;
        if [c.c_tuple, c.c_hash_build, c.c_hash_probe, c.c_index_lookup]
            .iter()
            .all(|v| *v > 0.0 && v.is_finite())
        {
            Ok(())
        } else {
            Err(Error::InvalidConfig("cost constants must be positive".into()))
        }
    }
}

/// Output column of a projection: source column and result name.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputColumn {
    pub source: ColumnRef,
    pub name: String,
}

#[derive(Debug, Clone, PartialEq)]
pub enum PlanOp {
    SeqScan {
        rel: usize,
    },
    /// Scan of a materialized temp table.
    TempScan {
        rel: usize,
    },
    HashJoin {
        probe: Box<PlanNode>,
        build: Box<PlanNode>,
        /// Indices into the query graph's edges.
        edges: Vec<usize>,
    },
    NestedLoopJoin {
        outer: Box<PlanNode>,
        inner: Box<PlanNode>,
        edges: Vec<usize>,
    },
    /// Primary-key lookups into `inner_rel`; `key_edge` supplies the key,
    /// `edges` (which include it) are all checked on each match.
    IndexNestedLoopJoin {
        outer: Box<PlanNode>,
        inner_rel: usize,
        key_edge: usize,
        edges: Vec<usize>,
    },
    Project {
        input: Box<PlanNode>,
        columns: Vec<OutputColumn>,
    },
    AggregateMin {
        input: Box<PlanNode>,
        columns: Vec<OutputColumn>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanNode {
    /// Preorder position in the tree, root = 0.
    pub id: usize,
    pub op: PlanOp,
    pub rels: RelSet,
    pub est_rows: f64,
    /// Cumulative cost of this subtree.
    pub cost: f64,
}

impl PlanNode {
    pub fn children(&self) -> Vec<&PlanNode> {
        match &self.op {
            PlanOp::SeqScan { .. } | PlanOp::TempScan { .. } => vec![],
            PlanOp::HashJoin { probe, build, .. } => vec![probe, build],
            PlanOp::NestedLoopJoin { outer, inner, .. } => vec![outer, inner],
            PlanOp::IndexNestedLoopJoin { outer, .. } => vec![outer],
            PlanOp::Project { input, .. } | PlanOp::AggregateMin { input, .. } => vec![input],
        }
    }

    fn children_mut(&mut self) -> Vec<&mut PlanNode> {
        match &mut self.op {
            PlanOp::SeqScan { .. } | PlanOp::TempScan { .. } => vec![],
            PlanOp::HashJoin { probe, build, .. } => vec![probe, build],
            PlanOp::NestedLoopJoin { outer, inner, .. } => vec![outer, inner],
            PlanOp::IndexNestedLoopJoin { outer, .. } => vec![outer],
            PlanOp::Project { input, .. } | PlanOp::AggregateMin { input, .. } => vec![input],
        }
    }

    pub fn is_join(&self) -> bool {
        matches!(
            self.op,
            PlanOp::HashJoin { .. } | PlanOp::NestedLoopJoin { .. } | PlanOp::IndexNestedLoopJoin { .. }
        )
    }

    pub fn op_name(&self) -> &'static str {
        match self.op {
            PlanOp::SeqScan { .. } => "SeqScan",
            PlanOp::TempScan { .. } => "TempScan",
            PlanOp::HashJoin { .. } => "HashJoin",
            PlanOp::NestedLoopJoin { .. } => "NLJoin",
            PlanOp::IndexNestedLoopJoin { .. } => "IndexNLJoin",
            PlanOp::Project { .. } => "Project",
            PlanOp::AggregateMin { .. } => "AggregateMin",
        }
    }

    /// Leaves have height 0.
    pub fn height(&self) -> usize {
        self.children().iter().map(|c| c.height() + 1).max().unwrap_or(0)
    }

    /// Preorder traversal.
    pub fn nodes(&self) -> Vec<&PlanNode> {
        let mut out = Vec::new();
        let mut stack = vec![self];
        while let Some(n) = stack.pop() {
            out.push(n);
            for c in n.children().into_iter().rev() {
                stack.push(c);
            }
        }
        out
    }

    pub fn find(&self, id: usize) -> Option<&PlanNode> {
        self.nodes().into_iter().find(|n| n.id == id)
    }

    /// Renumbers nodes in preorder starting from `start`; returns the next id.
    pub fn assign_ids(&mut self, start: usize) -> usize {
        self.id = start;
        let mut next = start + 1;
        for c in self.children_mut() {
            next = c.assign_ids(next);
        }
        next
    }

    /// Nodes in the order the executor runs them: by height, then preorder.
    pub fn execution_order(&self) -> Vec<&PlanNode> {
        let mut with_height: Vec<(usize, &PlanNode)> = Vec::new();
        fn walk<'a>(n: &'a PlanNode, out: &mut Vec<(usize, &'a PlanNode)>) -> usize {
            let h = n.children().into_iter().map(|c| walk(c, out) + 1).max().unwrap_or(0);
            out.push((h, n));
            h
        }
        walk(self, &mut with_height);
        with_height.sort_by_key(|(h, n)| (*h, n.id));
        with_height.into_iter().map(|(_, n)| n).collect()
    }

    /// A structural signature: operators and relation sets, ignoring numbers.
    pub fn shape(&self) -> String {
        let kids: Vec<String> = self.children().iter().map(|c| c.shape()).collect();
        if kids.is_empty() {
            format!("{}{}", self.op_name(), self.rels)
        } else {
            format!("{}{}({})", self.op_name(), self.rels, kids.join(","))
        }
    }
}

/// Optimized plan together with the query graph it refers to.
#[derive(Debug, Clone)]
pub struct PhysicalPlan {
    pub graph: QueryGraph,
    pub root: PlanNode,
}

impl PhysicalPlan {
    pub fn cost(&self) -> f64 {
        self.root.cost
    }

    pub fn join_root(&self) -> &PlanNode {
        match &self.root.op {
            PlanOp::Project { input, .. } | PlanOp::AggregateMin { input, .. } => input,
            _ => &self.root,
        }
    }
}

/// Cumulative cost of a node from its children's costs and estimates.
/// `base_rows` is the stored table size, used only by scans.
pub fn cost_of(node: &PlanNode, base_rows: f64, params: &CostParams) -> f64 {
    let child_cost: f64 = node.children().iter().map(|c| c.cost).sum();
    child_cost + self_cost(node, base_rows, params)
}

pub(crate) fn self_cost(node: &PlanNode, base_rows: f64, p: &CostParams) -> f64 {
    match &node.op {
        PlanOp::SeqScan { .. } | PlanOp::TempScan { .. } => base_rows * p.c_tuple,
        PlanOp::HashJoin { probe, build, .. } => {
            build.est_rows * p.c_hash_build + probe.est_rows * p.c_hash_probe + node.est_rows * p.c_tuple
        }
        PlanOp::NestedLoopJoin { outer, inner, .. } => {
            outer.est_rows * inner.est_rows * p.c_tuple + node.est_rows * p.c_tuple
        }
        PlanOp::IndexNestedLoopJoin { outer, .. } => outer.est_rows * p.c_index_lookup + node.est_rows * p.c_tuple,
        PlanOp::Project { .. } | PlanOp::AggregateMin { .. } => 0.0,
    }
}
