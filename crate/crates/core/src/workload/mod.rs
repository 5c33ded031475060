//! Synthetic data sets and query workloads.

mod corpus;
mod generators;
mod star;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use corpus::{chain_queries, employee_queries, star_corpus, stocks_queries, NamedQuery};
pub use generators::{spearman, zipf_weights};

use crate::error::{Error, Result};
use crate::storage::Catalog;

pub const DEFAULT_SEED: u64 = 7;
pub const SEED_ENV: &str = "REOPT_LAB_SEED";

/// The seed from `REOPT_LAB_SEED` when set and valid, else `fallback`.
pub fn seed_from_env(fallback: u64) -> u64 {
    std::env::var(SEED_ENV)
        .ok()
        .and_then(|s| s.trim().parse().ok())
        .unwrap_or(fallback)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum GeneratorKind {
    StocksSkew,
    CorrelatedEmployees,
    JoinCrossingChain,
    StarSchema,
}

impl std::str::FromStr for GeneratorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "stocksskew" | "stocks" => Ok(GeneratorKind::StocksSkew),
            "correlatedemployees" | "employees" => Ok(GeneratorKind::CorrelatedEmployees),
            "joincrossingchain" | "chain" => Ok(GeneratorKind::JoinCrossingChain),
            "starschema" | "star" => Ok(GeneratorKind::StarSchema),
            _ => Err(Error::InvalidSpec(format!("unknown generator {s}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub kind: GeneratorKind,
    /// Row counts by table; missing entries take the kind's defaults.
    #[serde(default)]
    pub sizes: BTreeMap<String, usize>,
    pub zipf_s: f64,
    pub correlation_rho: f64,
    pub seed: u64,
}

impl GeneratorSpec {
    pub fn new(kind: GeneratorKind, seed: u64) -> Self {
        let (zipf_s, correlation_rho) = match kind {
            GeneratorKind::StocksSkew => (1.1, 0.0),
            GeneratorKind::CorrelatedEmployees => (0.0, 0.8),
            GeneratorKind::JoinCrossingChain => (1.0, 0.9),
            GeneratorKind::StarSchema => (1.0, 0.9),
        };
        GeneratorSpec {
            kind,
            sizes: BTreeMap::new(),
            zipf_s,
            correlation_rho,
            seed,
        }
    }

    pub fn with_size(mut self, table: &str, rows: usize) -> Self {
        self.sizes.insert(table.to_string(), rows);
        self
    }

    /// Multiplies every default table size by `factor`.
    pub fn scaled(mut self, factor: f64) -> Self {
        for &(table, rows) in default_sizes(self.kind) {
            let n = ((rows as f64 * factor).round() as usize).max(1);
            self.sizes.entry(table.to_string()).or_insert(n);
        }
        self
    }

    pub fn size(&self, table: &str) -> usize {
        self.sizes.get(table).copied().unwrap_or_else(|| {
            default_sizes(self.kind)
                .iter()
                .find(|(t, _)| *t == table)
                .map_or(0, |(_, n)| *n)
        })
    }

    pub fn validate(&self) -> Result<()> {
        for (table, _) in default_sizes(self.kind) {
            if self.size(table) < 1 {
                return Err(Error::InvalidSpec(format!("size of {table} must be at least 1")));
            }
        }
        if !(self.zipf_s >= 0.0 && self.zipf_s.is_finite()) {
            return Err(Error::InvalidSpec(format!(
                "zipf_s must be finite and non-negative, got {}",
                self.zipf_s
            )));
        }
        if !(-1.0..=1.0).contains(&self.correlation_rho) {
            return Err(Error::InvalidSpec(format!(
                "correlation_rho must lie in [-1, 1], got {}",
                self.correlation_rho
            )));
        }
        Ok(())
    }
}

/// Table sizes used when the spec does not override them. For the star
/// schema only the dimension tables and `title` are sized directly; fact
/// tables follow from per-movie fan-outs.
pub fn default_sizes(kind: GeneratorKind) -> &'static [(&'static str, usize)] {
    match kind {
        GeneratorKind::StocksSkew => &[("companies", 1000), ("trades", 100_000)],
        GeneratorKind::CorrelatedEmployees => &[("employees", 20_000)],
        GeneratorKind::JoinCrossingChain => &[("region", 50), ("store", 2000), ("sale", 60_000)],
        GeneratorKind::StarSchema => &[("title", 3600), ("name", 3000), ("keyword", 900), ("company_name", 600)],
    }
}

/// Builds the tables described by `spec`. Pure in (spec, seed).
pub fn generate(spec: &GeneratorSpec) -> Result<Catalog> {
    spec.validate()?;
    match spec.kind {
        GeneratorKind::StocksSkew => generators::stocks(spec),
        GeneratorKind::CorrelatedEmployees => generators::employees(spec),
        GeneratorKind::JoinCrossingChain => generators::chain(spec),
        GeneratorKind::StarSchema => star::generate(spec),
    }
}

/// Queries written against the tables of `kind`.
pub fn queries_for(kind: GeneratorKind) -> Vec<NamedQuery> {
    match kind {
        GeneratorKind::StocksSkew => stocks_queries(),
        GeneratorKind::CorrelatedEmployees => employee_queries(),
        GeneratorKind::JoinCrossingChain => chain_queries(),
        GeneratorKind::StarSchema => star_corpus(),
    }
}
