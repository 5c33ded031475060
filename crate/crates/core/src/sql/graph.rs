use std::collections::BTreeMap;

use super::ast::{JoinEq, QuerySpec};

/// Undirected join graph over aliases. Edge lists are kept in canonical order,
/// so the graph does not depend on the order of WHERE conjuncts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JoinGraph {
    pub nodes: Vec<String>,
    pub edges: BTreeMap<(String, String), Vec<JoinEq>>,
}

impl JoinGraph {
    pub fn from_spec(spec: &QuerySpec) -> Self {
        let nodes = spec.relations.iter().map(|r| r.alias.clone()).collect();
        let mut edges: BTreeMap<(String, String), Vec<JoinEq>> = BTreeMap::new();
        for j in &spec.join_edges {
            let j = j.canonical();
            let key = (j.left.alias.clone(), j.right.alias.clone());
            edges.entry(key).or_default().push(j);
        }
        for list in edges.values_mut() {
            list.sort();
        }
        JoinGraph { nodes, edges }
    }

    pub fn neighbors<'a>(&'a self, alias: &'a str) -> impl Iterator<Item = &'a str> + 'a {
        self.edges.keys().filter_map(move |(a, b)| {
            if a == alias {
                Some(b.as_str())
            } else if b == alias {
                Some(a.as_str())
            } else {
                None
            }
        })
    }

    /// True when every alias is reachable from the first one.
    pub fn is_connected(&self) -> bool {
        self.is_connected_subset(&self.nodes.iter().map(String::as_str).collect::<Vec<_>>())
    }

    /// Connectivity of the subgraph induced by `subset`.
    pub fn is_connected_subset(&self, subset: &[&str]) -> bool {
        let Some(first) = subset.first() else {
            return true;
        };
        let mut seen = vec![*first];
        let mut stack = vec![*first];
        while let Some(a) = stack.pop() {
            for n in self.neighbors(a) {
                if subset.contains(&n) && !seen.contains(&n) {
                    seen.push(n);
                    stack.push(n);
                }
            }
        }
        seen.len() == subset.len()
    }
}
