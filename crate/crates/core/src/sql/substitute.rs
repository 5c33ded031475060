use std::collections::BTreeMap;

use super::ast::*;
use super::graph::JoinGraph;
use super::SqlError;

/// Replaces the aliases in `removed` with a single relation over table `temp`.
///
/// Predicates internal to the removed set are dropped; join edges and
/// projections that reach into it are redirected to the temp table's columns
/// through `exported`. Redundant transitive equalities are kept as they are.
pub fn substitute(
    spec: &QuerySpec,
    removed: &[&str],
    temp: &str,
    exported: &BTreeMap<ColumnRef, String>,
) -> Result<QuerySpec, SqlError> {
    if removed.is_empty() {
        return Err(SqlError::InvalidSubstitution("empty alias set".into()));
    }
    for a in removed {
        if spec.relation(a).is_none() {
            return Err(SqlError::InvalidSubstitution(format!("unknown alias {a}")));
        }
    }
    if spec
        .relations
        .iter()
        .any(|r| r.alias == temp && !removed.contains(&r.alias.as_str()))
    {
        return Err(SqlError::InvalidSubstitution(format!("alias {temp} already in use")));
    }
    if !JoinGraph::from_spec(spec).is_connected_subset(removed) {
        return Err(SqlError::InvalidSubstitution(
            "removed aliases do not form a connected subgraph".into(),
        ));
    }
    let is_removed = |c: &ColumnRef| removed.contains(&c.alias.as_str());
    let redirect = |c: &ColumnRef| -> Result<ColumnRef, SqlError> {
        exported
            .get(c)
            .map(|name| ColumnRef::new(temp, name.clone()))
            .ok_or_else(|| SqlError::MissingExportColumn(c.to_string()))
    };

    let mut relations: Vec<Relation> = spec
        .relations
        .iter()
        .filter(|r| !removed.contains(&r.alias.as_str()))
        .cloned()
        .collect();
    relations.push(Relation::new(temp, temp));

    let filters = spec
        .filters
        .iter()
        .filter(|p| !is_removed(p.column()))
        .cloned()
        .collect();

    let mut join_edges = Vec::new();
    for j in &spec.join_edges {
        match (is_removed(&j.left), is_removed(&j.right)) {
            (true, true) => {}
            (false, false) => join_edges.push(j.clone()),
            (true, false) => join_edges.push(JoinEq::new(j.right.clone(), redirect(&j.left)?)),
            (false, true) => join_edges.push(JoinEq::new(j.left.clone(), redirect(&j.right)?)),
        }
    }

    let mut projections = spec.projections.clone();
    for p in &mut projections {
        if is_removed(p.column()) {
            *p.column_mut() = redirect(p.column())?;
        }
    }

    Ok(QuerySpec {
        relations,
        filters,
        join_edges,
        projections,
    })
}

/// Columns of `removed` aliases that are referenced from outside the set
/// (join edges crossing the cut and projections), in first-use order.
pub fn referenced_outside(spec: &QuerySpec, removed: &[&str]) -> Vec<ColumnRef> {
    let inside = |c: &ColumnRef| removed.contains(&c.alias.as_str());
    let mut out: Vec<ColumnRef> = Vec::new();
    let mut push = |c: &ColumnRef| {
        if !out.contains(c) {
            out.push(c.clone());
        }
    };
    for j in &spec.join_edges {
        match (inside(&j.left), inside(&j.right)) {
            (true, false) => push(&j.left),
            (false, true) => push(&j.right),
            _ => {}
        }
    }
    for p in &spec.projections {
        if inside(p.column()) {
            push(p.column());
        }
    }
    out
}

/// Temp-table column names for exported columns: the bare column name when it
/// is unique among the exports, `alias_column` otherwise.
pub fn export_names(cols: &[ColumnRef]) -> BTreeMap<ColumnRef, String> {
    cols.iter()
        .map(|c| {
            let clash = cols.iter().filter(|o| o.column == c.column).count() > 1;
            let name = if clash {
                format!("{}_{}", c.alias, c.column)
            } else {
                c.column.clone()
            };
            (c.clone(), name)
        })
        .collect()
}
