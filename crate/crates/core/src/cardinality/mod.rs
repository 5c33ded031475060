//! Cardinality estimation.
//!
//! Three sources of row counts share one entry point, [`Estimator::estimate`]:
//!
//! * the default estimator: per-column statistics combined under independence
//!   and uniformity, with join selectivity `1 / max(ndv_left, ndv_right)`;
//! * the oracle: true counts obtained by executing the filtered sub-join;
//! * perfect-(n): oracle answers for every request over at most `n`
//!   relations, the default formula (seeded with oracle factors) above that.
//!
//! Each optimizer run memoizes estimates by relation set, and the
//! [`EstimateCounter`] records how many distinct requests of each join size
//! were made.

mod oracle;
mod query;
mod relset;

use std::cell::OnceCell;
use std::collections::BTreeMap;

use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};

pub use oracle::Oracle;
pub use query::{CardinalityRequest, EdgeInfo, QueryGraph, RelInfo};
pub use relset::RelSet;

use crate::db::Database;
use crate::error::{Error, Result};
use crate::sql::Predicate;
use crate::stats::{ColumnStats, StatsError};
use crate::storage::Catalog;

pub const DEFAULT_LIKE_SELECTIVITY: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EstimatorMode {
    Default,
    /// Oracle for joins of at most n relations.
    PerfectN(usize),
    /// Overridden requests take their given counts; any other request
    /// composes the largest overridden subsets it contains with default
    /// factors for the rest.
    Overrides,
}

/// How perfect-(n) combines oracle inputs for requests larger than n.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Composition {
    /// Greedily anchor on the largest oracle-known connected subsets.
    Anchored,
    /// Only per-table and pairwise oracle factors, whatever n is.
    PairwiseOnly,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorConfig {
    pub mode: EstimatorMode,
    pub composition: Composition,
    /// Request key to true count; consulted before any other source.
    #[serde(default)]
    pub overrides: BTreeMap<String, f64>,
    pub default_like_selectivity: f64,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        EstimatorConfig {
            mode: EstimatorMode::Default,
            composition: Composition::Anchored,
            overrides: BTreeMap::new(),
            default_like_selectivity: DEFAULT_LIKE_SELECTIVITY,
        }
    }
}

impl EstimatorConfig {
    pub fn perfect(n: usize) -> Self {
        EstimatorConfig {
            mode: EstimatorMode::PerfectN(n),
            ..Default::default()
        }
    }

    pub fn with_overrides(overrides: BTreeMap<String, f64>) -> Self {
        EstimatorConfig {
            mode: EstimatorMode::Overrides,
            overrides,
            ..Default::default()
        }
    }

    pub fn label(&self) -> String {
        match self.mode {
            EstimatorMode::Default => "default".into(),
            EstimatorMode::PerfectN(n) => format!("perfect-{n}"),
            EstimatorMode::Overrides => format!("overrides-{}", self.overrides.len()),
        }
    }
}

/// Number of distinct estimates requested, by join size.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EstimateCounter {
    pub by_size: BTreeMap<usize, u64>,
}

impl EstimateCounter {
    pub fn record(&mut self, size: usize) {
        *self.by_size.entry(size).or_insert(0) += 1;
    }

    pub fn get(&self, size: usize) -> u64 {
        self.by_size.get(&size).copied().unwrap_or(0)
    }

    pub fn total(&self) -> u64 {
        self.by_size.values().sum()
    }

    pub fn reset(&mut self) {
        self.by_size.clear();
    }

    /// (join size, count) rows in ascending size order.
    pub fn report(&self) -> Vec<(usize, u64)> {
        self.by_size.iter().map(|(k, v)| (*k, *v)).collect()
    }
}

/// Selectivity of one filter predicate against its column statistics.
pub fn filter_selectivity(p: &Predicate, cs: &ColumnStats, default_like: f64) -> f64 {
    match p {
        Predicate::Eq(_, v) => cs.eq_selectivity(v),
        Predicate::Lt(_, v) => cs.lt_selectivity(v),
        Predicate::Gt(_, v) => cs.gt_selectivity(v),
        Predicate::In(_, vs) => cs.in_selectivity(vs),
        Predicate::Like(_, pat) => cs.like_selectivity(pat, default_like),
    }
    .clamp(0.0, 1.0)
}

/// Estimator bound to one configuration and database for the duration of an
/// optimizer run. The memo is keyed by relation set and must be reset (see
/// [`Estimator::begin_run`]) before estimating a different query.
pub struct Estimator<'a> {
    config: &'a EstimatorConfig,
    db: &'a Database,
    memo: FxHashMap<RelSet, f64>,
    counter: EstimateCounter,
    override_sets: OnceCell<Vec<(RelSet, f64)>>,
}

impl<'a> Estimator<'a> {
    pub fn new(config: &'a EstimatorConfig, db: &'a Database) -> Self {
        Estimator {
            config,
            db,
            memo: FxHashMap::default(),
            counter: EstimateCounter::default(),
            override_sets: OnceCell::new(),
        }
    }

    pub fn config(&self) -> &EstimatorConfig {
        self.config
    }

    pub fn catalog(&self) -> &'a Catalog {
        &self.db.catalog
    }

    /// Stored row count of a table, from its statistics.
    pub fn table_rows(&self, table: &str) -> Result<f64> {
        Ok(self.db.stats.require(table)?.row_count as f64)
    }

    pub fn begin_run(&mut self) {
        self.memo.clear();
        self.override_sets = OnceCell::new();
    }

    pub fn counter(&self) -> &EstimateCounter {
        &self.counter
    }

    pub fn reset_counter(&mut self) {
        self.counter.reset();
    }

    /// Memoized, counted estimate for the filtered sub-join over `set`.
    pub fn estimate(&mut self, graph: &QueryGraph, set: RelSet) -> Result<f64> {
        if let Some(v) = self.memo.get(&set) {
            return Ok(*v);
        }
        let v = self.compute(graph, set)?;
        self.memo.insert(set, v);
        self.counter.record(set.len());
        Ok(v)
    }

    /// Uncounted estimate; no memoization.
    pub fn compute(&self, graph: &QueryGraph, set: RelSet) -> Result<f64> {
        if !self.config.overrides.is_empty() {
            let req = graph.request(set);
            if let Some(v) = self.config.overrides.get(&req.key) {
                return Ok(v.max(1.0));
            }
        }
        match self.config.mode {
            EstimatorMode::Overrides if !self.config.overrides.is_empty() => self.override_estimate(graph, set),
            EstimatorMode::Default | EstimatorMode::Overrides | EstimatorMode::PerfectN(0) => {
                self.default_estimate(graph, set)
            }
            EstimatorMode::PerfectN(n) => self.perfect_estimate(graph, set, n),
        }
    }

    fn any_empty_input(&self, graph: &QueryGraph, set: RelSet) -> Result<bool> {
        for i in set.iter() {
            if self.db.stats.require(&graph.rels[i].table)?.row_count == 0 {
                return Ok(true);
            }
        }
        Ok(false)
    }

    fn clamp(&self, graph: &QueryGraph, set: RelSet, raw: f64) -> Result<f64> {
        if self.any_empty_input(graph, set)? {
            Ok(raw.max(0.0))
        } else {
            Ok(raw.max(1.0))
        }
    }

    /// Row count of one relation after its filters, unclamped.
    pub fn base_estimate(&self, graph: &QueryGraph, rel: usize) -> Result<f64> {
        let info = &graph.rels[rel];
        let ts = self.db.stats.require(&info.table)?;
        let mut est = ts.row_count as f64;
        for p in &info.filters {
            let col = &p.column().column;
            let cs = ts
                .column(col)
                .ok_or_else(|| StatsError::MissingStats(format!("{}.{}", info.table, col)))?;
            est *= filter_selectivity(p, cs, self.config.default_like_selectivity);
        }
        Ok(est)
    }

    /// `1 / max(ndv_left, ndv_right)`.
    pub fn edge_selectivity(&self, graph: &QueryGraph, edge: &EdgeInfo) -> Result<f64> {
        let ndv = |rel: usize, col: &str| -> Result<f64> {
            let table = &graph.rels[rel].table;
            let ts = self.db.stats.require(table)?;
            let cs = ts
                .column(col)
                .ok_or_else(|| Error::Stats(StatsError::MissingStats(format!("{table}.{col}"))))?;
            Ok(cs.ndv)
        };
        let m = ndv(edge.left_rel, &edge.left_col)?.max(ndv(edge.right_rel, &edge.right_col)?);
        Ok(1.0 / m.max(1.0))
    }

    pub fn default_estimate(&self, graph: &QueryGraph, set: RelSet) -> Result<f64> {
        let mut est = 1.0;
        for i in set.iter() {
            est *= self.base_estimate(graph, i)?;
        }
        for e in graph.edges_within(set) {
            est *= self.edge_selectivity(graph, e)?;
        }
        self.clamp(graph, set, est)
    }

    /// Connected subsets of this query whose request is overridden.
    fn override_sets(&self, graph: &QueryGraph) -> &[(RelSet, f64)] {
        self.override_sets.get_or_init(|| {
            let mut sets: Vec<(RelSet, f64)> = graph
                .connected_subsets()
                .into_iter()
                .filter_map(|s| self.config.overrides.get(&graph.request(s).key).map(|v| (s, *v)))
                .collect();
            sets.sort_by(|a, b| {
                b.0.len()
                    .cmp(&a.0.len())
                    .then_with(|| a.0.members().cmp(&b.0.members()))
            });
            sets
        })
    }

    /// Product of the largest disjoint overridden subsets of `set` (greedy,
    /// as in [`Estimator::anchors`]), default base estimates for uncovered
    /// relations, and default selectivity for each edge between parts.
    fn override_estimate(&self, graph: &QueryGraph, set: RelSet) -> Result<f64> {
        let mut est = 1.0;
        let mut parts: Vec<RelSet> = Vec::new();
        let mut covered = RelSet::EMPTY;
        for (s, v) in self.override_sets(graph) {
            if s.is_subset(set) && s.is_disjoint(covered) {
                covered = covered.union(*s);
                parts.push(*s);
                est *= v;
            }
        }
        for i in set.minus(covered).iter() {
            parts.push(RelSet::single(i));
            est *= self.base_estimate(graph, i)?;
        }
        let part_of = |i: usize| parts.iter().position(|p| p.contains(i)).expect("parts cover set");
        for e in graph.edges_within(set) {
            if part_of(e.left_rel) != part_of(e.right_rel) {
                est *= self.edge_selectivity(graph, e)?;
            }
        }
        self.clamp(graph, set, est)
    }

    fn truth(&self, graph: &QueryGraph, set: RelSet) -> Result<f64> {
        Ok(self.db.oracle.true_cardinality(self.db, graph, set)? as f64)
    }

    fn perfect_estimate(&self, graph: &QueryGraph, set: RelSet, n: usize) -> Result<f64> {
        if set.len() <= n {
            let t = self.truth(graph, set)?;
            return self.clamp(graph, set, t);
        }
        let anchors = if n >= 3 && self.config.composition == Composition::Anchored {
            self.anchors(graph, set, n)
        } else {
            set.iter().map(RelSet::single).collect()
        };
        let anchor_of = |i: usize| anchors.iter().position(|a| a.contains(i)).expect("anchors cover set");

        let mut est = 1.0;
        for a in &anchors {
            est *= self.truth(graph, *a)?;
        }
        if n >= 2 {
            // one correction factor per joined pair of relations in different anchors
            let mut pairs: Vec<(usize, usize)> = graph
                .edges_within(set)
                .filter(|e| anchor_of(e.left_rel) != anchor_of(e.right_rel))
                .map(|e| (e.left_rel.min(e.right_rel), e.left_rel.max(e.right_rel)))
                .collect();
            pairs.sort_unstable();
            pairs.dedup();
            for (a, b) in pairs {
                let ta = self.truth(graph, RelSet::single(a))?;
                let tb = self.truth(graph, RelSet::single(b))?;
                let tab = self.truth(graph, RelSet::single(a).union(RelSet::single(b)))?;
                est *= if ta * tb > 0.0 { tab / (ta * tb) } else { 0.0 };
            }
        } else {
            for e in graph.edges_within(set) {
                est *= self.edge_selectivity(graph, e)?;
            }
        }
        self.clamp(graph, set, est)
    }

    /// Disjoint connected subsets of `set` with known truth, chosen largest
    /// first (ties: lexicographically smallest member list), topped up with
    /// singletons for uncovered relations.
    fn anchors(&self, graph: &QueryGraph, set: RelSet, n: usize) -> Vec<RelSet> {
        let max = n.min(set.len() - 1);
        let mut candidates: Vec<RelSet> = set
            .proper_subsets()
            .filter(|s| s.len() >= 2 && s.len() <= max && graph.is_connected(*s))
            .collect();
        candidates.sort_by(|a, b| b.len().cmp(&a.len()).then_with(|| a.members().cmp(&b.members())));
        let mut chosen: Vec<RelSet> = Vec::new();
        let mut covered = RelSet::EMPTY;
        for c in candidates {
            if c.is_disjoint(covered) {
                covered = covered.union(c);
                chosen.push(c);
            }
        }
        for i in set.minus(covered).iter() {
            chosen.push(RelSet::single(i));
        }
        chosen
    }
}

/// Symmetric ratio of estimate and truth, both clamped to at least one row.
pub fn q_error(estimate: f64, actual: f64) -> f64 {
    let e = estimate.max(1.0);
    let a = actual.max(1.0);
    (e / a).max(a / e)
}
