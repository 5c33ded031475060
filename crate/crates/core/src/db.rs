use web_time::{Duration, Instant};

use crate::cardinality::{EstimateCounter, Estimator, EstimatorConfig, Oracle, QueryGraph};
use crate::error::Result;
use crate::optimizer::{self, OptimizerConfig, PhysicalPlan};
use crate::sql::{self, QuerySpec, Statement};
use crate::stats::{self, AnalyzeConfig, StatsCatalog};
use crate::storage::{Catalog, ColumnMeta};
use crate::value::Row;

/// Catalog, statistics and the shared oracle memo.
#[derive(Debug, Default)]
pub struct Database {
    pub catalog: Catalog,
    pub stats: StatsCatalog,
    pub oracle: Oracle,
    pub optimizer: OptimizerConfig,
    pub analyze_config: AnalyzeConfig,
}

/// An optimized plan with the time spent producing it.
#[derive(Debug, Clone)]
pub struct Planned {
    pub plan: PhysicalPlan,
    pub planning: Duration,
    pub counter: EstimateCounter,
}

impl Database {
    pub fn new(catalog: Catalog) -> Self {
        Database {
            catalog,
            ..Default::default()
        }
    }

    /// Builds the database and analyzes every table.
    pub fn analyzed(catalog: Catalog, config: AnalyzeConfig) -> Result<Self> {
        let mut db = Database {
            catalog,
            analyze_config: config,
            ..Default::default()
        };
        db.analyze()?;
        Ok(db)
    }

    pub fn analyze(&mut self) -> Result<()> {
        self.stats = StatsCatalog::analyze_all(&self.catalog, &self.analyze_config)?;
        Ok(())
    }

    pub fn parse(&self, sql: &str) -> Result<Statement> {
        Ok(sql::parse(sql, &self.catalog)?)
    }

    pub fn parse_query(&self, sql: &str) -> Result<QuerySpec> {
        Ok(sql::parse_query(sql, &self.catalog)?)
    }

    /// Parses (when given text) and optimizes; planning time covers both.
    pub fn plan_sql(&self, sql: &str, estimator: &EstimatorConfig) -> Result<Planned> {
        let start = Instant::now();
        let spec = self.parse_query(sql)?;
        let mut planned = self.plan(&spec, estimator)?;
        planned.planning = start.elapsed();
        Ok(planned)
    }

    pub fn plan(&self, spec: &QuerySpec, estimator: &EstimatorConfig) -> Result<Planned> {
        let start = Instant::now();
        let mut est = Estimator::new(estimator, self);
        let graph = QueryGraph::new(spec, &self.catalog)?;
        let plan = optimizer::optimize(graph, &mut est, &self.optimizer)?;
        Ok(Planned {
            plan,
            planning: start.elapsed(),
            counter: est.counter().clone(),
        })
    }

    /// Registers a temp table with exact statistics, or with placeholder
    /// statistics when `analyze` is false.
    pub fn register_temp(&mut self, name: &str, schema: Vec<ColumnMeta>, rows: Vec<Row>, analyze: bool) -> Result<()> {
        let table = self.catalog.create_temp_table(name, schema, rows)?;
        let ts = if analyze {
            stats::analyze_temp(table)
        } else {
            stats::unanalyzed(table)
        };
        self.stats.insert(name, ts);
        Ok(())
    }

    pub fn drop_temp(&mut self, name: &str) -> bool {
        self.stats.remove(name);
        self.catalog.drop_temp_table(name)
    }

    pub fn drop_temp_tables(&mut self) -> usize {
        let temps: Vec<String> = self
            .catalog
            .tables()
            .filter(|t| t.is_temp)
            .map(|t| t.name.clone())
            .collect();
        for t in &temps {
            self.stats.remove(t);
        }
        self.catalog.drop_temp_tables()
    }
}
