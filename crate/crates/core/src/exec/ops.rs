use std::cmp::Ordering;

use rustc_hash::FxHashMap;

use super::{Batch, Ctx};
use crate::error::{Error, Result};
use crate::optimizer::OutputColumn;
use crate::sql::Predicate;
use crate::storage::Table;
use crate::value::{Row, Value};

const NIL: u32 = u32::MAX;

/// SQL LIKE with `%` as the only wildcard.
pub fn like_matches(s: &str, pattern: &str) -> bool {
    let parts: Vec<&str> = pattern.split('%').collect();
    if parts.len() == 1 {
        return s == pattern;
    }
    let (first, last) = (parts[0], parts[parts.len() - 1]);
    if !s.starts_with(first) || s.len() < first.len() + last.len() || !s.ends_with(last) {
        return false;
    }
    let mut rest = &s[first.len()..s.len() - last.len()];
    for mid in &parts[1..parts.len() - 1] {
        match rest.find(mid) {
            Some(i) => rest = &rest[i + mid.len()..],
            None => return false,
        }
    }
    true
}

pub(crate) struct Filter<'p> {
    col: usize,
    pred: &'p Predicate,
}

pub(crate) fn compile_filters<'p>(table: &Table, preds: &'p [Predicate]) -> Result<Vec<Filter<'p>>> {
    preds
        .iter()
        .map(|p| {
            let name = &p.column().column;
            let col = table
                .column_index(name)
                .ok_or_else(|| Error::InvalidConfig(format!("unknown column {}.{}", table.name, name)))?;
            let ty = table.columns[col].data_type;
            let consts: Vec<&Value> = match p {
                Predicate::Eq(_, v) | Predicate::Lt(_, v) | Predicate::Gt(_, v) => vec![v],
                Predicate::In(_, vs) => vs.iter().collect(),
                Predicate::Like(..) => vec![],
            };
            let like_on_int = matches!(p, Predicate::Like(..)) && ty != crate::value::DataType::Text;
            if like_on_int || consts.iter().any(|v| v.data_type().is_some_and(|t| t != ty)) {
                return Err(Error::TypeMismatch(format!("{p} against column of type {ty}")));
            }
            Ok(Filter { col, pred: p })
        })
        .collect()
}

fn eval(v: &Value, p: &Predicate) -> bool {
    match p {
        Predicate::Eq(_, c) => v.sql_eq(c),
        Predicate::Lt(_, c) => v.sql_cmp(c) == Some(Ordering::Less),
        Predicate::Gt(_, c) => v.sql_cmp(c) == Some(Ordering::Greater),
        Predicate::In(_, cs) => cs.iter().any(|c| v.sql_eq(c)),
        Predicate::Like(_, pat) => v.as_str().is_some_and(|s| like_matches(s, pat)),
    }
}

pub(crate) fn passes(row: &Row, filters: &[Filter]) -> bool {
    filters.iter().all(|f| eval(&row[f.col], f.pred))
}

pub(crate) fn scan(ctx: &Ctx, rel: usize, emit: bool) -> Result<(Batch, u64)> {
    let table = ctx.tables[rel];
    let filters = compile_filters(table, &ctx.graph.rels[rel].filters)?;
    let mut ids = Vec::new();
    let mut len = 0usize;
    for (i, row) in table.rows.iter().enumerate() {
        if passes(row, &filters) {
            len += 1;
            if emit {
                ids.push(i as u32);
            }
        }
    }
    let batch = if emit {
        Batch {
            rels: vec![rel],
            cols: vec![ids],
            len,
        }
    } else {
        Batch {
            rels: vec![rel],
            cols: Vec::new(),
            len,
        }
    };
    Ok((batch, table.rows.len() as u64))
}

/// Key accessor for one side of an edge within a batch.
struct Side<'a> {
    table: &'a Table,
    ids: &'a [u32],
    col: usize,
}

impl<'a> Side<'a> {
    #[inline]
    fn get(&self, i: usize) -> &'a Value {
        &self.table.rows[self.ids[i] as usize][self.col]
    }
}

/// Orients each edge as (side in `a`, side in `b`).
fn sides<'a>(ctx: &Ctx<'a>, a: &'a Batch, b: &'a Batch, edges: &[usize]) -> Result<Vec<(Side<'a>, Side<'a>)>> {
    edges
        .iter()
        .map(|&e| {
            let (lr, lc, rr, rc) = ctx.edge_cols[e];
            let side = |batch: &'a Batch, rel: usize, col: usize| {
                batch.position(rel).map(|p| Side {
                    table: ctx.tables[rel],
                    ids: &batch.cols[p],
                    col,
                })
            };
            match (side(a, lr, lc), side(b, rr, rc)) {
                (Some(x), Some(y)) => Ok((x, y)),
                _ => match (side(a, rr, rc), side(b, lr, lc)) {
                    (Some(x), Some(y)) => Ok((x, y)),
                    _ => Err(Error::InvalidConfig(format!(
                        "edge {e} does not connect the join inputs"
                    ))),
                },
            }
        })
        .collect()
}

fn gather(a: &Batch, b: &Batch, pairs: &[(u32, u32)]) -> Batch {
    let mut cols = Vec::with_capacity(a.cols.len() + b.cols.len());
    for c in &a.cols {
        cols.push(pairs.iter().map(|&(i, _)| c[i as usize]).collect());
    }
    for c in &b.cols {
        cols.push(pairs.iter().map(|&(_, j)| c[j as usize]).collect());
    }
    Batch {
        rels: a.rels.iter().chain(&b.rels).copied().collect(),
        cols,
        len: pairs.len(),
    }
}

fn finish(a: &Batch, b: &Batch, pairs: Vec<(u32, u32)>, count: usize, emit: bool) -> Batch {
    if emit {
        gather(a, b, &pairs)
    } else {
        Batch {
            rels: a.rels.iter().chain(&b.rels).copied().collect(),
            cols: Vec::new(),
            len: count,
        }
    }
}

/// Builds on `build` keyed by the first edge, probes with `probe`, checks
/// remaining edges per candidate. Nulls never match.
pub(crate) fn hash_join(ctx: &Ctx, probe: &Batch, build: &Batch, edges: &[usize], emit: bool) -> Result<(Batch, u64)> {
    let sides = sides(ctx, probe, build, edges)?;
    let Some(((pk, bk), residual)) = sides.split_first() else {
        return Err(Error::InvalidConfig("hash join needs at least one equality".into()));
    };
    let mut head: FxHashMap<&Value, u32> = FxHashMap::default();
    head.reserve(build.len);
    let mut next = vec![NIL; build.len];
    for (j, slot) in next.iter_mut().enumerate() {
        let v = bk.get(j);
        if v.is_null() {
            continue;
        }
        let h = head.entry(v).or_insert(NIL);
        *slot = *h;
        *h = j as u32;
    }
    let mut pairs = Vec::new();
    let mut count = 0usize;
    for i in 0..probe.len {
        let v = pk.get(i);
        if v.is_null() {
            continue;
        }
        let Some(&first) = head.get(v) else { continue };
        let mut j = first;
        while j != NIL {
            let ju = j as usize;
            if residual.iter().all(|(a, b)| a.get(i).sql_eq(b.get(ju))) {
                count += 1;
                if emit {
                    pairs.push((i as u32, j));
                }
            }
            j = next[ju];
        }
    }
    let work = (build.len + probe.len + count) as u64;
    Ok((finish(probe, build, pairs, count, emit), work))
}

pub(crate) fn nested_loop_join(
    ctx: &Ctx,
    outer: &Batch,
    inner: &Batch,
    edges: &[usize],
    emit: bool,
) -> Result<(Batch, u64)> {
    let sides = sides(ctx, outer, inner, edges)?;
    let keys: Vec<(Vec<&Value>, Vec<&Value>)> = sides
        .iter()
        .map(|(a, b)| {
            (
                (0..outer.len).map(|i| a.get(i)).collect(),
                (0..inner.len).map(|j| b.get(j)).collect(),
            )
        })
        .collect();
    let mut pairs = Vec::new();
    let mut count = 0usize;
    for i in 0..outer.len {
        for j in 0..inner.len {
            if keys.iter().all(|(a, b)| a[i].sql_eq(b[j])) {
                count += 1;
                if emit {
                    pairs.push((i as u32, j as u32));
                }
            }
        }
    }
    let work = (outer.len as u64) * (inner.len as u64) + count as u64;
    Ok((finish(outer, inner, pairs, count, emit), work))
}

pub(crate) fn index_nested_loop_join(
    ctx: &Ctx,
    outer: &Batch,
    inner_rel: usize,
    key_edge: usize,
    edges: &[usize],
    emit: bool,
) -> Result<(Batch, u64)> {
    let info = &ctx.graph.rels[inner_rel];
    let table = ctx.tables[inner_rel];
    let index = ctx
        .catalog
        .index(&info.table)
        .ok_or_else(|| Error::InvalidConfig(format!("table {} has no primary-key index", info.table)))?;
    let filters = compile_filters(table, &info.filters)?;

    // each edge as (outer side, inner column)
    let mut checks: Vec<(Side, usize)> = Vec::with_capacity(edges.len());
    let mut key: Option<usize> = None;
    for &e in edges {
        let (lr, lc, rr, rc) = ctx.edge_cols[e];
        let (orel, ocol, icol) = if rr == inner_rel { (lr, lc, rc) } else { (rr, rc, lc) };
        let pos = outer
            .position(orel)
            .ok_or_else(|| Error::InvalidConfig(format!("edge {e} does not reach the outer input")))?;
        if e == key_edge {
            key = Some(checks.len());
        }
        checks.push((
            Side {
                table: ctx.tables[orel],
                ids: &outer.cols[pos],
                col: ocol,
            },
            icol,
        ));
    }
    let key = key.ok_or_else(|| Error::InvalidConfig("key edge missing from join edges".into()))?;
    let mut pairs = Vec::new();
    let mut count = 0usize;
    for i in 0..outer.len {
        let Some(r) = index.lookup(checks[key].0.get(i)) else {
            continue;
        };
        let row = &table.rows[r as usize];
        if passes(row, &filters) && checks.iter().all(|(side, icol)| side.get(i).sql_eq(&row[*icol])) {
            count += 1;
            if emit {
                pairs.push((i as u32, r));
            }
        }
    }
    let work = (outer.len + count) as u64;
    let batch = if emit {
        let mut cols: Vec<Vec<u32>> = outer
            .cols
            .iter()
            .map(|c| pairs.iter().map(|&(i, _)| c[i as usize]).collect())
            .collect();
        cols.push(pairs.iter().map(|&(_, r)| r).collect());
        Batch {
            rels: outer.rels.iter().copied().chain([inner_rel]).collect(),
            cols,
            len: count,
        }
    } else {
        Batch {
            rels: outer.rels.iter().copied().chain([inner_rel]).collect(),
            cols: Vec::new(),
            len: count,
        }
    };
    Ok((batch, work))
}

fn sources(ctx: &Ctx, batch: &Batch, columns: &[OutputColumn]) -> Result<Vec<(usize, usize, usize)>> {
    columns
        .iter()
        .map(|c| {
            let rel = ctx.rel_of_alias(&c.source.alias)?;
            let ci = ctx.column_index(rel, &c.source.column)?;
            let pos = batch
                .position(rel)
                .ok_or_else(|| Error::InvalidConfig(format!("{} is not available", c.source)))?;
            Ok((rel, pos, ci))
        })
        .collect()
}

pub(crate) fn project(ctx: &Ctx, batch: &Batch, columns: &[OutputColumn]) -> Result<(Vec<String>, Vec<Row>)> {
    let src = sources(ctx, batch, columns)?;
    let rows = (0..batch.len)
        .map(|i| {
            src.iter()
                .map(|&(rel, pos, ci)| ctx.tables[rel].rows[batch.cols[pos][i] as usize][ci].clone())
                .collect()
        })
        .collect();
    Ok((columns.iter().map(|c| c.name.clone()).collect(), rows))
}

/// One row of per-column minima; Null for columns with no non-null value.
pub(crate) fn aggregate_min(ctx: &Ctx, batch: &Batch, columns: &[OutputColumn]) -> Result<(Vec<String>, Vec<Row>)> {
    let src = sources(ctx, batch, columns)?;
    let row = src
        .iter()
        .map(|&(rel, pos, ci)| {
            let rows = &ctx.tables[rel].rows;
            batch.cols[pos]
                .iter()
                .map(|&r| &rows[r as usize][ci])
                .filter(|v| !v.is_null())
                .min_by(|a, b| a.total_cmp(b))
                .cloned()
                .unwrap_or(Value::Null)
        })
        .collect();
    Ok((columns.iter().map(|c| c.name.clone()).collect(), vec![row]))
}
