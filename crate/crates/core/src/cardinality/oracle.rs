use std::collections::BTreeMap;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use rustc_hash::FxHashMap;

use super::{Estimator, EstimatorConfig, QueryGraph, RelSet};
use crate::db::Database;
use crate::error::Result;
use crate::exec;
use crate::optimizer;

/// True cardinalities by execution, memoized by canonical request key.
///
/// Keys embed table fingerprints, so entries stay valid across temp tables
/// that reuse a name. A k-relation request is planned with perfect-(k-1)
/// estimates, which keeps the oracle's own sub-joins well ordered.
#[derive(Debug, Default)]
pub struct Oracle {
    memo: Mutex<FxHashMap<String, u64>>,
}

impl Oracle {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.memo.lock().expect("oracle memo poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn clear(&self) {
        self.memo.lock().expect("oracle memo poisoned").clear();
    }

    pub fn get(&self, key: &str) -> Option<u64> {
        self.memo.lock().expect("oracle memo poisoned").get(key).copied()
    }

    pub fn true_cardinality(&self, db: &Database, graph: &QueryGraph, set: RelSet) -> Result<u64> {
        let req = graph.request(set);
        if let Some(v) = self.get(&req.key) {
            return Ok(v);
        }
        let count = if set.len() == 1 {
            let i = set.first().expect("non-empty set");
            exec::count_filtered(&db.catalog, &graph.rels[i])?
        } else {
            let sub = QueryGraph::new(&graph.subquery(set), &db.catalog)?;
            let cfg = EstimatorConfig::perfect(set.len() - 1);
            let mut est = Estimator::new(&cfg, db);
            let root = optimizer::optimize_joins(&sub, &mut est, &db.optimizer)?;
            exec::count_rows(&db.catalog, &sub, &root)?
        };
        self.memo.lock().expect("oracle memo poisoned").insert(req.key, count);
        Ok(count)
    }

    /// Fills the memo for every connected subset of every graph, smallest
    /// requests first, using up to `jobs` threads.
    pub fn precompute(&self, db: &Database, graphs: &[QueryGraph], jobs: usize) -> Result<usize> {
        let mut work: Vec<(usize, RelSet)> = Vec::new();
        for (g, graph) in graphs.iter().enumerate() {
            for s in graph.connected_subsets() {
                work.push((g, s));
            }
        }
        work.sort_by_key(|(g, s)| (s.len(), *g, s.0));
        let jobs = jobs.max(1);
        let mut start = 0;
        while start < work.len() {
            let size = work[start].1.len();
            let end = work[start..]
                .iter()
                .position(|(_, s)| s.len() != size)
                .map_or(work.len(), |p| start + p);
            let level = &work[start..end];
            if jobs == 1 {
                for (g, s) in level {
                    self.true_cardinality(db, &graphs[*g], *s)?;
                }
            } else {
                let next = AtomicUsize::new(0);
                let first_error: Mutex<Option<crate::error::Error>> = Mutex::new(None);
                std::thread::scope(|scope| {
                    for _ in 0..jobs {
                        scope.spawn(|| loop {
                            let i = next.fetch_add(1, Ordering::Relaxed);
                            let Some((g, s)) = level.get(i) else { break };
                            if let Err(e) = self.true_cardinality(db, &graphs[*g], *s) {
                                first_error.lock().expect("poisoned").get_or_insert(e);
                                break;
                            }
                        });
                    }
                });
                if let Some(e) = first_error.into_inner().expect("poisoned") {
                    return Err(e);
                }
            }
            start = end;
        }
        Ok(work.len())
    }

    /// Writes `{dataset fingerprint: {request key: count}}`, merging with any
    /// entries already stored for other datasets.
    pub fn save(&self, path: impl AsRef<Path>, dataset: u64) -> Result<()> {
        let path = path.as_ref();
        let mut all: BTreeMap<String, BTreeMap<String, u64>> = match std::fs::read_to_string(path) {
            Ok(text) => serde_json::from_str(&text)?,
            Err(_) => BTreeMap::new(),
        };
        let memo = self.memo.lock().expect("oracle memo poisoned");
        all.insert(
            format!("{dataset:016x}"),
            memo.iter().map(|(k, v)| (k.clone(), *v)).collect(),
        );
        std::fs::write(path, serde_json::to_string_pretty(&all)?)?;
        Ok(())
    }

    /// Loads the entries recorded for `dataset`; returns how many were added.
    pub fn load(&self, path: impl AsRef<Path>, dataset: u64) -> Result<usize> {
        let text = std::fs::read_to_string(path)?;
        let mut all: BTreeMap<String, BTreeMap<String, u64>> = serde_json::from_str(&text)?;
        let Some(entries) = all.remove(&format!("{dataset:016x}")) else {
            return Ok(0);
        };
        let n = entries.len();
        self.memo.lock().expect("oracle memo poisoned").extend(entries);
        Ok(n)
    }
}
