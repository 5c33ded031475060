use serde::{Deserialize, Serialize};

use super::RelSet;
use crate::error::{Error, Result};
use crate::sql::{JoinEq, Predicate, QuerySpec, Relation};
use crate::storage::Catalog;

#[derive(Debug, Clone)]
pub struct RelInfo {
    pub alias: String,
    pub table: String,
    pub fingerprint: u64,
    pub is_temp: bool,
    pub filters: Vec<Predicate>,
}

/// Equi-join edge with both endpoints resolved to relation indices.
#[derive(Debug, Clone)]
pub struct EdgeInfo {
    pub left_rel: usize,
    pub left_col: String,
    pub right_rel: usize,
    pub right_col: String,
    pub pred: JoinEq,
}

impl EdgeInfo {
    pub fn rels(&self) -> RelSet {
        RelSet::single(self.left_rel).union(RelSet::single(self.right_rel))
    }

    /// True when the edge has one endpoint in each set.
    pub fn crosses(&self, a: RelSet, b: RelSet) -> bool {
        (a.contains(self.left_rel) && b.contains(self.right_rel))
            || (b.contains(self.left_rel) && a.contains(self.right_rel))
    }
}

/// Canonical, cacheable identity of a cardinality request: the filtered
/// sub-join over `rels`, with its filters and internal edges.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CardinalityRequest {
    pub rels: RelSet,
    pub key: String,
}

impl CardinalityRequest {
    pub fn size(&self) -> usize {
        self.rels.len()
    }
}

/// A query prepared for estimation and enumeration: relations indexed by
/// position, filters grouped per relation, edges resolved to indices.
#[derive(Debug, Clone)]
pub struct QueryGraph {
    pub spec: QuerySpec,
    pub rels: Vec<RelInfo>,
    pub edges: Vec<EdgeInfo>,
    adjacency: Vec<RelSet>,
}

impl QueryGraph {
    pub fn new(spec: &QuerySpec, catalog: &Catalog) -> Result<Self> {
        if spec.relations.len() > 64 {
            return Err(Error::TooManyRelations(spec.relations.len()));
        }
        let mut rels = Vec::with_capacity(spec.relations.len());
        for r in &spec.relations {
            let t = catalog
                .table(&r.table)
                .ok_or_else(|| Error::MissingTable(r.table.clone()))?;
            rels.push(RelInfo {
                alias: r.alias.clone(),
                table: r.table.clone(),
                fingerprint: t.fingerprint,
                is_temp: t.is_temp,
                filters: spec.filters_on(&r.alias).cloned().collect(),
            });
        }
        let idx = |alias: &str| {
            spec.alias_index(alias)
                .ok_or_else(|| Error::InvalidConfig(format!("unknown alias {alias}")))
        };
        let mut edges = Vec::new();
        let mut adjacency = vec![RelSet::EMPTY; rels.len()];
        for j in &spec.join_edges {
            let (l, r) = (idx(&j.left.alias)?, idx(&j.right.alias)?);
            adjacency[l] = adjacency[l].union(RelSet::single(r));
            adjacency[r] = adjacency[r].union(RelSet::single(l));
            edges.push(EdgeInfo {
                left_rel: l,
                left_col: j.left.column.clone(),
                right_rel: r,
                right_col: j.right.column.clone(),
                pred: j.clone(),
            });
        }
        Ok(QueryGraph {
            spec: spec.clone(),
            rels,
            edges,
            adjacency,
        })
    }

    pub fn len(&self) -> usize {
        self.rels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rels.is_empty()
    }

    pub fn all(&self) -> RelSet {
        RelSet::full(self.rels.len())
    }

    pub fn neighbors(&self, set: RelSet) -> RelSet {
        let mut n = RelSet::EMPTY;
        for i in set.iter() {
            n = n.union(self.adjacency[i]);
        }
        n.minus(set)
    }

    pub fn is_connected(&self, set: RelSet) -> bool {
        let Some(start) = set.first() else {
            return false;
        };
        let mut seen = RelSet::single(start);
        loop {
            let grow = self.neighbors(seen).intersect(set);
            if grow.is_empty() {
                break;
            }
            seen = seen.union(grow);
        }
        seen == set
    }

    /// True when at least one edge joins the two sets.
    pub fn joined(&self, a: RelSet, b: RelSet) -> bool {
        !self.neighbors(a).intersect(b).is_empty()
    }

    pub fn edges_within(&self, set: RelSet) -> impl Iterator<Item = &EdgeInfo> {
        self.edges.iter().filter(move |e| e.rels().is_subset(set))
    }

    pub fn edges_between(&self, a: RelSet, b: RelSet) -> impl Iterator<Item = &EdgeInfo> {
        self.edges.iter().filter(move |e| e.crosses(a, b))
    }

    /// Every connected subset, in increasing numeric order.
    pub fn connected_subsets(&self) -> Vec<RelSet> {
        let n = self.rels.len();
        assert!(n < 64, "enumeration limited to 63 relations");
        (1..(1u64 << n)).map(RelSet).filter(|s| self.is_connected(*s)).collect()
    }

    /// The filtered sub-join over `set` as a stand-alone query (no projections).
    pub fn subquery(&self, set: RelSet) -> QuerySpec {
        let relations: Vec<Relation> = set
            .iter()
            .map(|i| Relation::new(self.rels[i].table.clone(), self.rels[i].alias.clone()))
            .collect();
        let filters = set.iter().flat_map(|i| self.rels[i].filters.iter().cloned()).collect();
        let join_edges = self.edges_within(set).map(|e| e.pred.clone()).collect();
        QuerySpec {
            relations,
            filters,
            join_edges,
            projections: Vec::new(),
        }
    }

    pub fn request(&self, set: RelSet) -> CardinalityRequest {
        let mut rels: Vec<String> = set
            .iter()
            .map(|i| {
                let r = &self.rels[i];
                format!("{}#{:016x} AS {}", r.table, r.fingerprint, r.alias)
            })
            .collect();
        rels.sort();
        let mut filters: Vec<String> = set
            .iter()
            .flat_map(|i| self.rels[i].filters.iter().map(|p| p.to_string()))
            .collect();
        filters.sort();
        let mut edges: Vec<String> = self.edges_within(set).map(|e| e.pred.canonical().to_string()).collect();
        edges.sort();
        CardinalityRequest {
            rels: set,
            key: format!(
                "{} | {} | {}",
                rels.join(", "),
                filters.join(" AND "),
                edges.join(" AND ")
            ),
        }
    }

    pub fn aliases(&self, set: RelSet) -> Vec<&str> {
        set.iter().map(|i| self.rels[i].alias.as_str()).collect()
    }
}
