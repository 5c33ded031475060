//! ANALYZE-style per-column statistics: equi-depth histogram, most-common
//! values, distinct count, min/max and null fraction.

use std::collections::BTreeMap;
use std::path::Path;

use rand::rngs::StdRng;
use rand::seq::IteratorRandom;
use rand::SeedableRng;
use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::storage::{Catalog, Table};
use crate::value::Value;

#[derive(Debug, Error)]
pub enum StatsError {
    #[error("invalid analyze configuration: {0}")]
    InvalidConfig(String),
    #[error("no statistics for table {0}")]
    MissingStats(String),
    #[error("malformed statistics key {0}")]
    BadKey(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalyzeConfig {
    pub buckets: usize,
    pub mcv_capacity: usize,
    pub sample_fraction: f64,
    pub seed: u64,
}

impl Default for AnalyzeConfig {
    fn default() -> Self {
        AnalyzeConfig {
            buckets: 100,
            mcv_capacity: 100,
            sample_fraction: 1.0,
            seed: 0,
        }
    }
}

/// Equi-depth histogram. `bounds` has one more entry than `counts`; bucket 0
/// covers `[bounds[0], bounds[1]]` and bucket i > 0 covers `(bounds[i], bounds[i+1]]`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub bounds: Vec<Value>,
    pub counts: Vec<u64>,
}

impl Histogram {
    /// Builds `min(buckets, n)` buckets over the sorted values. Bucket sizes
    /// differ by at most one.
    pub fn build(sorted: &[Value], buckets: usize) -> Histogram {
        let n = sorted.len();
        if n == 0 || buckets == 0 {
            return Histogram::default();
        }
        let b = buckets.min(n);
        let mut bounds = vec![sorted[0].clone()];
        let mut counts = Vec::with_capacity(b);
        for i in 0..b {
            let start = i * n / b;
            let end = (i + 1) * n / b;
            bounds.push(sorted[end - 1].clone());
            counts.push((end - start) as u64);
        }
        Histogram { bounds, counts }
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    fn bucket_range(&self, i: usize) -> (f64, f64) {
        let lo = self.bounds[i].to_scalar().unwrap_or(0.0);
        let hi = self.bounds[i + 1].to_scalar().unwrap_or(0.0);
        (lo, hi)
    }

    /// Estimated fraction of histogram values strictly below `v`.
    pub fn fraction_below(&self, v: &Value) -> f64 {
        let total = self.total();
        if total == 0 {
            return 0.0;
        }
        let Some(x) = v.to_scalar() else {
            return 0.0;
        };
        let mut mass = 0.0;
        for (i, &c) in self.counts.iter().enumerate() {
            let (lo, hi) = self.bucket_range(i);
            let part = if x > hi {
                1.0
            } else if x <= lo {
                0.0
            } else if hi > lo {
                (x - lo) / (hi - lo)
            } else {
                0.5
            };
            mass += part * c as f64;
        }
        mass / total as f64
    }

    /// Estimated fraction of histogram values strictly above `v`.
    pub fn fraction_above(&self, v: &Value) -> f64 {
        let total = self.total();
        if total == 0 {
            return 0.0;
        }
        let Some(x) = v.to_scalar() else {
            return 0.0;
        };
        let mut mass = 0.0;
        for (i, &c) in self.counts.iter().enumerate() {
            let (lo, hi) = self.bucket_range(i);
            let part = if x < lo {
                1.0
            } else if x >= hi {
                0.0
            } else if hi > lo {
                (hi - x) / (hi - lo)
            } else {
                0.5
            };
            mass += part * c as f64;
        }
        mass / total as f64
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct McvList {
    /// (value, fraction of all table rows), descending by frequency.
    pub entries: Vec<(Value, f64)>,
    pub capacity: usize,
}

impl McvList {
    pub fn frequency(&self, v: &Value) -> Option<f64> {
        self.entries.iter().find(|(x, _)| x == v).map(|(_, f)| *f)
    }

    pub fn total_frequency(&self) -> f64 {
        self.entries.iter().map(|(_, f)| f).sum()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnStats {
    pub ndv: f64,
    pub min: Option<Value>,
    pub max: Option<Value>,
    pub null_frac: f64,
    pub mcv: McvList,
    pub hist: Histogram,
}

impl ColumnStats {
    fn empty(capacity: usize) -> Self {
        ColumnStats {
            ndv: 0.0,
            min: None,
            max: None,
            null_frac: 0.0,
            mcv: McvList {
                entries: Vec::new(),
                capacity,
            },
            hist: Histogram::default(),
        }
    }

    /// Fraction of rows that are neither null nor covered by the MCV list.
    pub fn histogram_mass(&self) -> f64 {
        (1.0 - self.null_frac - self.mcv.total_frequency()).max(0.0)
    }

    fn in_range(&self, v: &Value) -> bool {
        match (&self.min, &self.max) {
            (Some(lo), Some(hi)) => {
                v.sql_cmp(lo).is_some_and(|o| o.is_ge()) && v.sql_cmp(hi).is_some_and(|o| o.is_le())
            }
            _ => false,
        }
    }

    pub fn eq_selectivity(&self, v: &Value) -> f64 {
        if v.is_null() {
            return 0.0;
        }
        if let Some(f) = self.mcv.frequency(v) {
            return f;
        }
        if !self.in_range(v) {
            return 0.0;
        }
        let rest = self.histogram_mass();
        let others = (self.ndv - self.mcv.len() as f64).max(1.0);
        rest / others
    }

    pub fn lt_selectivity(&self, v: &Value) -> f64 {
        let mcv: f64 = self
            .mcv
            .entries
            .iter()
            .filter(|(x, _)| x.sql_cmp(v).is_some_and(|o| o.is_lt()))
            .map(|(_, f)| f)
            .sum();
        mcv + self.histogram_mass() * self.hist.fraction_below(v)
    }

    pub fn gt_selectivity(&self, v: &Value) -> f64 {
        let mcv: f64 = self
            .mcv
            .entries
            .iter()
            .filter(|(x, _)| x.sql_cmp(v).is_some_and(|o| o.is_gt()))
            .map(|(_, f)| f)
            .sum();
        mcv + self.histogram_mass() * self.hist.fraction_above(v)
    }

    pub fn in_selectivity(&self, values: &[Value]) -> f64 {
        let mut seen: Vec<&Value> = Vec::new();
        let mut s = 0.0;
        for v in values {
            if !seen.contains(&v) {
                seen.push(v);
                s += self.eq_selectivity(v);
            }
        }
        s.min(1.0)
    }

    /// Prefix patterns (`abc%`) use the histogram range `[abc, abd)` plus
    /// matching MCVs; patterns without wildcards are equality; anything else
    /// gets `default_sel`.
    pub fn like_selectivity(&self, pattern: &str, default_sel: f64) -> f64 {
        if !pattern.contains('%') {
            return self.eq_selectivity(&Value::text(pattern));
        }
        let prefix = pattern.trim_end_matches('%');
        if prefix.contains('%') {
            return default_sel;
        }
        if prefix.is_empty() {
            return 1.0 - self.null_frac;
        }
        let mcv: f64 = self
            .mcv
            .entries
            .iter()
            .filter(|(x, _)| x.as_str().is_some_and(|s| s.starts_with(prefix)))
            .map(|(_, f)| f)
            .sum();
        let lower = Value::text(prefix);
        let hist = match prefix_upper_bound(prefix) {
            Some(upper) => (self.hist.fraction_below(&Value::text(upper)) - self.hist.fraction_below(&lower)).max(0.0),
            None => self.hist.fraction_above(&lower),
        };
        (mcv + self.histogram_mass() * hist).min(1.0)
    }
}

/// Smallest string greater than every string with the given prefix.
fn prefix_upper_bound(prefix: &str) -> Option<String> {
    let mut chars: Vec<char> = prefix.chars().collect();
    while let Some(last) = chars.pop() {
        if let Some(next) = char::from_u32(last as u32 + 1) {
            chars.push(next);
            return Some(chars.into_iter().collect());
        }
    }
    None
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableStats {
    pub row_count: u64,
    pub columns: BTreeMap<String, ColumnStats>,
    /// True when computed from every row (temp tables, or f = 1).
    pub exact: bool,
}

impl TableStats {
    pub fn column(&self, name: &str) -> Option<&ColumnStats> {
        self.columns.get(name)
    }
}

/// Collects statistics from a uniform sample of `ceil(f * N)` rows.
pub fn analyze(table: &Table, config: &AnalyzeConfig) -> Result<TableStats, StatsError> {
    if config.buckets < 1 {
        return Err(StatsError::InvalidConfig("bucket count must be at least 1".into()));
    }
    if !(config.sample_fraction > 0.0 && config.sample_fraction <= 1.0) {
        return Err(StatsError::InvalidConfig("sample fraction must be in (0, 1]".into()));
    }
    let n = table.rows.len();
    let exact = config.sample_fraction >= 1.0;
    let sample: Vec<usize> = if exact {
        (0..n).collect()
    } else {
        let m = ((config.sample_fraction * n as f64).ceil() as usize).min(n);
        let mut rng = StdRng::seed_from_u64(config.seed);
        let mut idx = (0..n).choose_multiple(&mut rng, m);
        idx.sort_unstable();
        idx
    };
    let mut columns = BTreeMap::new();
    for (ci, meta) in table.columns.iter().enumerate() {
        let stats = if sample.is_empty() {
            ColumnStats::empty(config.mcv_capacity)
        } else {
            column_stats(table, ci, &sample, n, config)
        };
        columns.insert(meta.name.clone(), stats);
    }
    Ok(TableStats {
        row_count: n as u64,
        columns,
        exact,
    })
}

/// Exact statistics for a materialized temp table.
pub fn analyze_temp(table: &Table) -> TableStats {
    let config = AnalyzeConfig::default();
    analyze(table, &config).expect("default configuration is valid")
}

/// Placeholder statistics for a table that was never analyzed: the row count
/// is known, every column gets a fixed distinct-count guess.
pub fn unanalyzed(table: &Table) -> TableStats {
    let n = table.rows.len() as u64;
    let columns = table
        .columns
        .iter()
        .map(|c| {
            let mut cs = ColumnStats::empty(0);
            cs.ndv = UNANALYZED_NDV.min(n as f64);
            (c.name.clone(), cs)
        })
        .collect();
    TableStats {
        row_count: n,
        columns,
        exact: false,
    }
}

/// Distinct-count guess for unanalyzed columns.
pub const UNANALYZED_NDV: f64 = 200.0;

fn column_stats(table: &Table, ci: usize, sample: &[usize], n: usize, config: &AnalyzeConfig) -> ColumnStats {
    let m = sample.len();
    let mut counts: FxHashMap<&Value, u64> = FxHashMap::default();
    let mut nulls = 0u64;
    for &r in sample {
        let v = &table.rows[r][ci];
        if v.is_null() {
            nulls += 1;
        } else {
            *counts.entry(v).or_insert(0) += 1;
        }
    }
    let mut by_freq: Vec<(&Value, u64)> = counts.into_iter().collect();
    by_freq.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));

    let distinct = by_freq.len() as f64;
    let ndv = if m == n {
        distinct
    } else {
        (distinct * n as f64 / m as f64).min(n as f64).max(distinct)
    };
    let min = by_freq.iter().map(|(v, _)| *v).min().cloned();
    let max = by_freq.iter().map(|(v, _)| *v).max().cloned();

    let k = config.mcv_capacity.min(by_freq.len());
    let mcv = McvList {
        entries: by_freq[..k]
            .iter()
            .map(|(v, c)| ((*v).clone(), *c as f64 / m as f64))
            .collect(),
        capacity: config.mcv_capacity,
    };
    let mut rest: Vec<Value> = Vec::new();
    for (v, c) in &by_freq[k..] {
        for _ in 0..*c {
            rest.push((*v).clone());
        }
    }
    rest.sort();
    ColumnStats {
        ndv,
        min,
        max,
        null_frac: nulls as f64 / m as f64,
        mcv,
        hist: Histogram::build(&rest, config.buckets),
    }
}

/// Statistics for every analyzed table, keyed by table name.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StatsCatalog {
    tables: BTreeMap<String, TableStats>,
}

#[derive(Serialize, Deserialize)]
struct StatsDump {
    tables: BTreeMap<String, TableHeader>,
    columns: BTreeMap<String, ColumnStats>,
}

#[derive(Serialize, Deserialize)]
struct TableHeader {
    row_count: u64,
    exact: bool,
}

impl StatsCatalog {
    pub fn new() -> Self {
        Self::default()
    }

    /// Analyzes every table in the catalog.
    pub fn analyze_all(catalog: &Catalog, config: &AnalyzeConfig) -> Result<Self, StatsError> {
        let mut out = StatsCatalog::new();
        for t in catalog.tables() {
            let s = if t.is_temp {
                analyze_temp(t)
            } else {
                analyze(t, config)?
            };
            out.insert(&t.name, s);
        }
        Ok(out)
    }

    pub fn insert(&mut self, table: &str, stats: TableStats) {
        self.tables.insert(table.to_string(), stats);
    }

    pub fn remove(&mut self, table: &str) -> Option<TableStats> {
        self.tables.remove(table)
    }

    pub fn get(&self, table: &str) -> Option<&TableStats> {
        self.tables.get(table)
    }

    pub fn require(&self, table: &str) -> Result<&TableStats, StatsError> {
        self.get(table)
            .ok_or_else(|| StatsError::MissingStats(table.to_string()))
    }

    pub fn to_json(&self) -> Result<String, StatsError> {
        let mut dump = StatsDump {
            tables: BTreeMap::new(),
            columns: BTreeMap::new(),
        };
        for (t, s) in &self.tables {
            dump.tables.insert(
                t.clone(),
                TableHeader {
                    row_count: s.row_count,
                    exact: s.exact,
                },
            );
            for (c, cs) in &s.columns {
                dump.columns.insert(format!("{t}.{c}"), cs.clone());
            }
        }
        Ok(serde_json::to_string_pretty(&dump)?)
    }

    pub fn from_json(text: &str) -> Result<Self, StatsError> {
        let dump: StatsDump = serde_json::from_str(text)?;
        let mut out = StatsCatalog::new();
        for (t, h) in dump.tables {
            out.insert(
                &t,
                TableStats {
                    row_count: h.row_count,
                    columns: BTreeMap::new(),
                    exact: h.exact,
                },
            );
        }
        for (key, cs) in dump.columns {
            let (t, c) = key.split_once('.').ok_or_else(|| StatsError::BadKey(key.clone()))?;
            let ts = out.tables.get_mut(t).ok_or_else(|| StatsError::BadKey(key.clone()))?;
            ts.columns.insert(c.to_string(), cs);
        }
        Ok(out)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), StatsError> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, StatsError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}
