//! Command-line front end.
//!
//! Every subcommand accepts `--config FILE`, a JSON object whose keys are
//! long flag names. File values are applied first, so flags given on the
//! command line win.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::bench::{self, BenchConfig, BenchOptions, LadderN};
use crate::cardinality::{EstimatorConfig, EstimatorMode};
use crate::db::Database;
use crate::error::{Error, Result};
use crate::exec;
use crate::optimizer::{explain, PlanShape};
use crate::reopt::{self, ReoptConfig};
use crate::stats::AnalyzeConfig;
use crate::storage::{Catalog, ColumnMeta};
use crate::value::Value;
use crate::workload::{self, GeneratorKind, GeneratorSpec, NamedQuery};

const SCHEMA_FILE: &str = "schema.json";
const GENERATOR_FILE: &str = "generator.json";

#[derive(Debug, Parser)]
#[command(
    name = "reopt-lab",
    version,
    about = "In-memory SPJ engine for studying cardinality estimation and mid-query re-optimization",
    args_override_self = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic data set and write it as CSV files.
    Generate(GenerateArgs),
    /// Load a CSV data set and print its tables.
    Load(DataArgs),
    /// Collect statistics and print or save them.
    Analyze(AnalyzeArgs),
    /// Execute one query, optionally with re-optimization.
    Run(RunArgs),
    /// Print the plan chosen for one query.
    Explain(ExplainArgs),
    /// Run the workload under several configurations.
    Bench(BenchArgs),
    /// Run the workload with re-optimization at several thresholds.
    Sweep(SweepArgs),
    /// Run the workload under perfect-(n) for several n.
    Ladder(LadderArgs),
}

#[derive(Debug, Args)]
struct DataArgs {
    /// JSON file supplying any of the long flags.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Directory written by `generate`.
    #[arg(long, value_name = "DIR", conflicts_with = "kind")]
    data: Option<PathBuf>,
    /// Generate this data set in memory instead of loading one.
    #[arg(long, value_parser = parse_kind)]
    kind: Option<GeneratorKind>,
    /// Seed for in-memory generation; defaults to $REOPT_LAB_SEED, then 7.
    #[arg(long)]
    seed: Option<u64>,
    /// Multiplier on the generator's default table sizes.
    #[arg(long, default_value_t = 1.0)]
    scale: f64,
    #[arg(long)]
    zipf_s: Option<f64>,
    #[arg(long)]
    rho: Option<f64>,
}

#[derive(Debug, Args)]
struct GenerateArgs {
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    #[arg(long, value_parser = parse_kind, default_value = "star")]
    kind: GeneratorKind,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = 1.0)]
    scale: f64,
    #[arg(long)]
    zipf_s: Option<f64>,
    #[arg(long)]
    rho: Option<f64>,
    /// Output directory; created when missing.
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct StatsArgs {
    #[arg(long, default_value_t = 100)]
    buckets: usize,
    #[arg(long, default_value_t = 100)]
    mcv: usize,
    #[arg(long, default_value_t = 1.0)]
    sample_fraction: f64,
}

impl StatsArgs {
    fn config(&self, seed: u64) -> AnalyzeConfig {
        AnalyzeConfig {
            buckets: self.buckets,
            mcv_capacity: self.mcv,
            sample_fraction: self.sample_fraction,
            seed,
        }
    }
}

#[derive(Debug, Args)]
struct AnalyzeArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    stats: StatsArgs,
    /// Write the statistics as JSON.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct QueryArgs {
    /// File holding one SELECT statement.
    #[arg(long, value_name = "FILE", conflicts_with = "query")]
    sql: Option<PathBuf>,
    /// Id of a query from the data set's workload.
    #[arg(long, value_name = "ID")]
    query: Option<String>,
    /// default, perfect-N or perfect-max.
    #[arg(long, default_value = "default", value_parser = parse_estimator)]
    estimator: EstimatorConfig,
    #[arg(long, value_parser = parse_shape, default_value = "bushy")]
    shape: PlanShape,
    #[arg(long)]
    allow_cartesian: bool,
    /// Oracle cache file; read before and written after the command.
    #[arg(long, value_name = "FILE")]
    oracle_cache: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ReoptArgs {
    #[arg(long, default_value_t = reopt::DEFAULT_THRESHOLD)]
    threshold: f64,
    #[arg(long, default_value_t = 16)]
    max_rounds: usize,
    /// Execution time a plan must have run before it may be stopped.
    #[arg(long, default_value_t = 0)]
    min_base_latency_us: u64,
    /// Re-execute each CREATE TEMP TABLE query instead of reusing the
    /// already computed result.
    #[arg(long, alias = "strict-paper-sim")]
    reexecute_temps: bool,
    /// Skip statistics collection on temp tables.
    #[arg(long)]
    no_temp_analyze: bool,
}

impl ReoptArgs {
    fn config(&self) -> ReoptConfig {
        ReoptConfig {
            threshold: self.threshold,
            max_rounds: self.max_rounds,
            min_base_latency: web_time::Duration::from_micros(self.min_base_latency_us),
            reexecute_temps: self.reexecute_temps,
            analyze_temps: !self.no_temp_analyze,
        }
    }
}

#[derive(Debug, Args)]
struct RunArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    stats: StatsArgs,
    #[command(flatten)]
    query: QueryArgs,
    #[command(flatten)]
    reopt: ReoptArgs,
    /// Re-optimize mis-estimated joins during execution.
    #[arg(long = "reopt")]
    reopt_enabled: bool,
    /// Write the re-optimization trace as JSON.
    #[arg(long, value_name = "FILE")]
    trace_out: Option<PathBuf>,
    /// Run the selective-improvement loop and print its curve.
    #[arg(long)]
    improve_curve: bool,
    #[arg(long, default_value_t = 1)]
    reps: usize,
}

#[derive(Debug, Args)]
struct ExplainArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    stats: StatsArgs,
    #[command(flatten)]
    query: QueryArgs,
    /// Print estimate requests per join size.
    #[arg(long)]
    counts: bool,
}

#[derive(Debug, Args)]
struct WorkloadArgs {
    /// Directory of `.sql` files, or one file of `;`-separated statements.
    /// Defaults to the data set's built-in workload.
    #[arg(long, value_name = "PATH")]
    workload: Option<PathBuf>,
    /// Timed runs per query and configuration; medians are reported.
    #[arg(long, default_value_t = 3)]
    reps: usize,
    /// Threads for oracle precomputation.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    #[arg(long, value_name = "FILE")]
    oracle_cache: Option<PathBuf>,
    #[arg(long, value_parser = parse_shape, default_value = "bushy")]
    shape: PlanShape,
}

#[derive(Debug, Args)]
struct BenchArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    stats: StatsArgs,
    #[command(flatten)]
    workload: WorkloadArgs,
    #[command(flatten)]
    reopt: ReoptArgs,
    /// Configurations to compare: default, reopt, perfect-N, perfect-max.
    #[arg(long, value_delimiter = ',', default_value = "default,reopt,perfect-max")]
    configs: Vec<String>,
    /// Also write the k slowest queries under the default config.
    #[arg(long)]
    top_k: Option<usize>,
    /// Also run the selective-improvement loop on every query.
    #[arg(long)]
    improve_curve: bool,
    /// Directory for the CSV and JSON reports.
    #[arg(long, value_name = "DIR", default_value = "results")]
    out_dir: PathBuf,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    stats: StatsArgs,
    #[command(flatten)]
    workload: WorkloadArgs,
    #[command(flatten)]
    reopt: ReoptArgs,
    #[arg(long, value_delimiter = ',', default_value = "2,4,8,16,32,64")]
    thresholds: Vec<f64>,
    #[arg(long, default_value = "default", value_parser = parse_estimator)]
    estimator: EstimatorConfig,
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct LadderArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    stats: StatsArgs,
    #[command(flatten)]
    workload: WorkloadArgs,
    /// Rungs, ascending; `max` means every request is exact.
    #[arg(long = "n", value_delimiter = ',', default_value = "0,1,2,3,4,max")]
    n: Vec<LadderN>,
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
}

fn parse_kind(s: &str) -> std::result::Result<GeneratorKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_shape(s: &str) -> std::result::Result<PlanShape, String> {
    match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
        "bushy" => Ok(PlanShape::Bushy),
        "leftdeep" | "leftdeeponly" => Ok(PlanShape::LeftDeepOnly),
        _ => Err(format!("unknown plan shape {s}; expected bushy or left-deep")),
    }
}

/// `default`, `perfect-N`, `perfect-max`.
pub fn parse_estimator(s: &str) -> std::result::Result<EstimatorConfig, String> {
    let s = s.trim().to_ascii_lowercase();
    if s == "default" {
        return Ok(EstimatorConfig::default());
    }
    match s.strip_prefix("perfect-").or_else(|| s.strip_prefix("perfect")) {
        Some("max") => Ok(EstimatorConfig::perfect(usize::MAX)),
        Some(n) => n
            .parse()
            .map(EstimatorConfig::perfect)
            .map_err(|_| format!("bad estimator {s}; expected default, perfect-N or perfect-max")),
        None => Err(format!("bad estimator {s}; expected default, perfect-N or perfect-max")),
    }
}

fn estimator_label(e: &EstimatorConfig) -> String {
    match e.mode {
        EstimatorMode::PerfectN(usize::MAX) => "perfect-max".to_string(),
        _ => e.label(),
    }
}

/// Expands `--config FILE` into flags placed right after the subcommand name.
fn expand_config(argv: Vec<OsString>) -> std::result::Result<Vec<OsString>, String> {
    let pos = argv.iter().position(|a| a == "--config");
    let Some(pos) = pos else {
        return Ok(argv);
    };
    let path = argv
        .get(pos + 1)
        .ok_or_else(|| "--config requires a file".to_string())?
        .clone();
    let text = std::fs::read_to_string(&path).map_err(|e| format!("cannot read {}: {e}", path.to_string_lossy()))?;
    let map: serde_json::Map<String, serde_json::Value> =
        serde_json::from_str(&text).map_err(|e| format!("config must be a JSON object: {e}"))?;
    let mut flags: Vec<OsString> = Vec::new();
    for (key, value) in map {
        let flag = format!("--{}", key.replace('_', "-"));
        match value {
            serde_json::Value::Bool(true) => flags.push(flag.into()),
            serde_json::Value::Bool(false) | serde_json::Value::Null => {}
            serde_json::Value::Array(items) => {
                let joined: Vec<String> = items.iter().map(json_scalar).collect();
                flags.push(flag.into());
                flags.push(joined.join(",").into());
            }
            other => {
                flags.push(flag.into());
                flags.push(json_scalar(&other).into());
            }
        }
    }
    let mut out: Vec<OsString> = argv[..pos].to_vec();
    // argv[0] is the program and argv[1] the subcommand
    let insert_at = out.len().min(2);
    out.splice(insert_at..insert_at, flags);
    out.extend_from_slice(&argv[pos + 2..]);
    Ok(out)
}

fn json_scalar(v: &serde_json::Value) -> String {
    match v {
        serde_json::Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// Runs the CLI and returns the process exit code: 0 on success, 1 on a
/// usage error, 2 on a runtime error.
pub fn main<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let argv = match expand_config(argv) {
        Ok(a) => a,
        Err(msg) => {
            eprintln!("error: {msg}");
            return 1;
        }
    };
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            eprintln!("run `reopt-lab --help` for usage");
            1
        }
        Err(CliError::Runtime(e)) => {
            eprintln!("error: {e}");
            2
        }
    }
}

enum CliError {
    Usage(String),
    Runtime(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Runtime(e)
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn dispatch(cmd: Command) -> CliResult<()> {
    match cmd {
        Command::Generate(a) => generate(a),
        Command::Load(a) => load(a),
        Command::Analyze(a) => analyze(a),
        Command::Run(a) => run(a),
        Command::Explain(a) => explain_cmd(a),
        Command::Bench(a) => bench_cmd(a),
        Command::Sweep(a) => sweep(a),
        Command::Ladder(a) => ladder(a),
    }
}

fn resolve_seed(flag: Option<u64>) -> u64 {
    flag.unwrap_or_else(|| workload::seed_from_env(workload::DEFAULT_SEED))
}

fn generator_spec(
    kind: GeneratorKind,
    seed: u64,
    scale: f64,
    zipf_s: Option<f64>,
    rho: Option<f64>,
) -> CliResult<GeneratorSpec> {
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(usage(format!("--scale must be positive, got {scale}")));
    }
    let mut spec = GeneratorSpec::new(kind, seed);
    if scale != 1.0 {
        spec = spec.scaled(scale);
    }
    if let Some(s) = zipf_s {
        spec.zipf_s = s;
    }
    if let Some(r) = rho {
        spec.correlation_rho = r;
    }
    spec.validate().map_err(|e| usage(e.to_string()))?;
    Ok(spec)
}

fn generate(a: GenerateArgs) -> CliResult<()> {
    let seed = resolve_seed(a.seed);
    println!("seed: {seed}");
    let spec = generator_spec(a.kind, seed, a.scale, a.zipf_s, a.rho)?;
    let catalog = workload::generate(&spec)?;
    std::fs::create_dir_all(&a.out).map_err(Error::from)?;
    let mut schema: BTreeMap<String, Vec<ColumnMeta>> = BTreeMap::new();
    for t in catalog.tables() {
        catalog
            .write_csv(&t.name, a.out.join(format!("{}.csv", t.name)))
            .map_err(Error::from)?;
        schema.insert(t.name.clone(), t.columns.clone());
        println!("{:<16} {:>8} rows", t.name, t.row_count());
    }
    write_json(a.out.join(SCHEMA_FILE), &schema)?;
    write_json(a.out.join(GENERATOR_FILE), &spec)?;
    println!("wrote {}", a.out.display());
    Ok(())
}

fn write_json<T: Serialize>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    std::fs::write(path, serde_json::to_string_pretty(value)?)?;
    Ok(())
}

/// Catalog plus the generator spec it came from, when known.
struct Loaded {
    catalog: Catalog,
    spec: Option<GeneratorSpec>,
    seed: u64,
}

fn load_data(a: &DataArgs) -> CliResult<Loaded> {
    if let Some(dir) = &a.data {
        let schema_text = std::fs::read_to_string(dir.join(SCHEMA_FILE)).map_err(|e| {
            usage(format!(
                "{} is not a data directory ({}: {e})",
                dir.display(),
                SCHEMA_FILE
            ))
        })?;
        let schema: BTreeMap<String, Vec<ColumnMeta>> = serde_json::from_str(&schema_text).map_err(Error::from)?;
        let mut catalog = Catalog::new();
        for (table, cols) in schema {
            catalog
                .load_csv(dir.join(format!("{table}.csv")), &table, cols)
                .map_err(Error::from)?;
        }
        let spec: Option<GeneratorSpec> = std::fs::read_to_string(dir.join(GENERATOR_FILE))
            .ok()
            .and_then(|t| serde_json::from_str(&t).ok());
        let seed = spec.as_ref().map_or_else(|| resolve_seed(a.seed), |s| s.seed);
        println!("seed: {seed}");
        return Ok(Loaded { catalog, spec, seed });
    }
    let kind = a.kind.unwrap_or(GeneratorKind::StarSchema);
    let seed = resolve_seed(a.seed);
    println!("seed: {seed}");
    let spec = generator_spec(kind, seed, a.scale, a.zipf_s, a.rho)?;
    let catalog = workload::generate(&spec)?;
    Ok(Loaded {
        catalog,
        spec: Some(spec),
        seed,
    })
}

fn load(a: DataArgs) -> CliResult<()> {
    let loaded = load_data(&a)?;
    for t in loaded.catalog.tables() {
        let cols: Vec<String> = t
            .columns
            .iter()
            .map(|c| {
                let pk = if c.is_primary_key { " PK" } else { "" };
                format!("{} {}{pk}", c.name, c.data_type)
            })
            .collect();
        println!("{:<16} {:>8} rows  ({})", t.name, t.row_count(), cols.join(", "));
    }
    println!("fingerprint: {:016x}", loaded.catalog.dataset_fingerprint());
    Ok(())
}

fn database(a: &DataArgs, stats: &StatsArgs) -> CliResult<(Database, Loaded)> {
    let loaded = load_data(a)?;
    let db = Database::analyzed(loaded.catalog.clone(), stats.config(loaded.seed))?;
    Ok((db, loaded))
}

fn analyze(a: AnalyzeArgs) -> CliResult<()> {
    let (db, _) = database(&a.data, &a.stats)?;
    for t in db.catalog.tables() {
        let Some(ts) = db.stats.get(&t.name) else {
            continue;
        };
        println!("{} ({} rows)", t.name, ts.row_count);
        for (c, cs) in &ts.columns {
            println!(
                "  {c:<18} ndv={:<8.0} nulls={:.3} mcv={:<3} histogram_buckets={}",
                cs.ndv,
                cs.null_frac,
                cs.mcv.len(),
                cs.hist.counts.len()
            );
        }
    }
    if let Some(out) = a.out {
        db.stats.save(&out).map_err(Error::from)?;
        println!("wrote {}", out.display());
    }
    Ok(())
}

fn workload_of(loaded: &Loaded, path: Option<&Path>) -> CliResult<Vec<NamedQuery>> {
    if let Some(p) = path {
        return read_workload(p);
    }
    match &loaded.spec {
        Some(spec) => Ok(workload::queries_for(spec.kind)),
        None => Err(usage("no workload: pass --workload or use a generated data set")),
    }
}

fn read_workload(path: &Path) -> CliResult<Vec<NamedQuery>> {
    let mut out = Vec::new();
    if path.is_dir() {
        let mut files: Vec<PathBuf> = std::fs::read_dir(path)
            .map_err(Error::from)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "sql"))
            .collect();
        files.sort();
        for f in files {
            let sql = std::fs::read_to_string(&f).map_err(Error::from)?;
            let id = f
                .file_stem()
                .map_or_else(String::new, |s| s.to_string_lossy().into_owned());
            out.push(NamedQuery {
                id,
                family: "file".into(),
                sql: sql.trim().trim_end_matches(';').to_string(),
            });
        }
    } else {
        let text = std::fs::read_to_string(path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
        for (i, stmt) in text.split(';').map(str::trim).filter(|s| !s.is_empty()).enumerate() {
            out.push(NamedQuery {
                id: format!("q{}", i + 1),
                family: "file".into(),
                sql: stmt.to_string(),
            });
        }
    }
    if out.is_empty() {
        return Err(usage(format!("no queries found in {}", path.display())));
    }
    Ok(out)
}

fn query_sql(q: &QueryArgs, loaded: &Loaded) -> CliResult<String> {
    match (&q.sql, &q.query) {
        (Some(path), _) => Ok(std::fs::read_to_string(path)
            .map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?
            .trim()
            .trim_end_matches(';')
            .to_string()),
        (None, Some(id)) => workload_of(loaded, None)?
            .into_iter()
            .find(|n| &n.id == id)
            .map(|n| n.sql)
            .ok_or_else(|| usage(format!("no workload query with id {id}"))),
        (None, None) => Err(usage("pass --sql FILE or --query ID")),
    }
}

fn load_oracle(db: &Database, path: Option<&Path>) -> Result<()> {
    if let Some(p) = path {
        if p.exists() {
            let n = db.oracle.load(p, db.catalog.dataset_fingerprint())?;
            println!("oracle cache: {n} entries from {}", p.display());
        }
    }
    Ok(())
}

fn save_oracle(db: &Database, path: Option<&Path>) -> Result<()> {
    if let Some(p) = path {
        db.oracle.save(p, db.catalog.dataset_fingerprint())?;
    }
    Ok(())
}

fn format_row(row: &[Value]) -> String {
    row.iter()
        .map(|v| match v {
            Value::Int(i) => i.to_string(),
            Value::Text(s) => s.to_string(),
            Value::Null => "NULL".to_string(),
        })
        .collect::<Vec<_>>()
        .join(" | ")
}

fn run(a: RunArgs) -> CliResult<()> {
    let (mut db, loaded) = database(&a.data, &a.stats)?;
    db.optimizer.shape = a.query.shape;
    db.optimizer.allow_cartesian = a.query.allow_cartesian;
    let sql = query_sql(&a.query, &loaded)?;
    let spec = db.parse_query(&sql)?;
    load_oracle(&db, a.query.oracle_cache.as_deref())?;
    let estimator = &a.query.estimator;
    println!("estimator: {}", estimator_label(estimator));

    if a.improve_curve {
        let curve = reopt::selective_improvement(&db, &spec, a.reopt.threshold, estimator, a.reps)?;
        println!("iteration  execution_ms        work  corrected");
        for p in &curve.points {
            let corrected = p
                .corrected
                .as_ref()
                .map_or(String::new(), |(k, v)| format!("{v} <- {k}"));
            println!(
                "{:>9}  {:>12.3}  {:>10}  {corrected}",
                p.iteration,
                p.execution_time.as_secs_f64() * 1e3,
                p.work
            );
        }
        if let Some(path) = &a.trace_out {
            write_json(path, &curve)?;
            println!("curve: {}", path.display());
        }
        save_oracle(&db, a.query.oracle_cache.as_deref())?;
        return Ok(());
    }

    let result = if a.reopt_enabled {
        let outcome = reopt::run_with_reopt(&mut db, &spec, estimator, &a.reopt.config())?;
        let trace = &outcome.trace;
        for (i, r) in trace.rounds.iter().enumerate() {
            println!(
                "round {}: {} over [{}] est={:.0} actual={} q-error={:.1} -> {}",
                i + 1,
                r.op,
                r.aliases.join(", "),
                r.est_rows,
                r.actual_rows,
                r.q_error,
                r.temp_name
            );
        }
        println!(
            "planning {:.3} ms, execution {:.3} ms, rounds {}, work {}",
            trace.total_planning.as_secs_f64() * 1e3,
            trace.total_execution.as_secs_f64() * 1e3,
            trace.rounds.len(),
            trace.work
        );
        if trace.max_rounds_exceeded {
            println!("warning: stopped re-optimizing after {} rounds", a.reopt.max_rounds);
        }
        let path = a.trace_out.clone().unwrap_or_else(|| PathBuf::from("trace.json"));
        std::fs::write(&path, trace.to_json()?).map_err(Error::from)?;
        println!("trace: {}", path.display());
        println!("{}", trace.final_plan);
        outcome.result
    } else {
        let planned = db.plan(&spec, estimator)?;
        let result = exec::execute(&planned.plan, &db.catalog)?;
        println!("{}", exec::explain_analyze(&planned.plan, &result));
        println!(
            "planning {:.3} ms, execution {:.3} ms, work {}",
            planned.planning.as_secs_f64() * 1e3,
            result.execution_time.as_secs_f64() * 1e3,
            result.work
        );
        result
    };
    println!("{}", result.columns.join(" | "));
    for row in result.rows.iter().take(20) {
        println!("{}", format_row(row));
    }
    if result.rows.len() > 20 {
        println!("... {} rows", result.rows.len());
    }
    save_oracle(&db, a.query.oracle_cache.as_deref())?;
    Ok(())
}

fn explain_cmd(a: ExplainArgs) -> CliResult<()> {
    let (mut db, loaded) = database(&a.data, &a.stats)?;
    db.optimizer.shape = a.query.shape;
    db.optimizer.allow_cartesian = a.query.allow_cartesian;
    let sql = query_sql(&a.query, &loaded)?;
    load_oracle(&db, a.query.oracle_cache.as_deref())?;
    let planned = db.plan_sql(&sql, &a.query.estimator)?;
    println!("{}", explain(&planned.plan));
    println!("planning {:.3} ms", planned.planning.as_secs_f64() * 1e3);
    if a.counts {
        for (size, n) in planned.counter.report() {
            println!("requests of size {size}: {n}");
        }
    }
    save_oracle(&db, a.query.oracle_cache.as_deref())?;
    Ok(())
}

fn bench_configs(names: &[String], reopt: &ReoptConfig) -> CliResult<Vec<BenchConfig>> {
    names
        .iter()
        .map(|n| {
            let n = n.trim();
            if n == "reopt" || n.starts_with("reopt@") {
                let mut rc = reopt.clone();
                if let Some(t) = n.strip_prefix("reopt@") {
                    rc.threshold = t.parse().map_err(|_| usage(format!("bad threshold in {n}")))?;
                }
                rc.validate().map_err(|e| usage(e.to_string()))?;
                let name = format!("reopt@{}", rc.threshold);
                return Ok(BenchConfig::reopt(name, EstimatorConfig::default(), rc));
            }
            let est = parse_estimator(n).map_err(usage)?;
            let name = estimator_label(&est);
            Ok(BenchConfig::plain(name, est))
        })
        .collect()
}

fn bench_cmd(a: BenchArgs) -> CliResult<()> {
    let (mut db, loaded) = database(&a.data, &a.stats)?;
    db.optimizer.shape = a.workload.shape;
    let queries = workload_of(&loaded, a.workload.workload.as_deref())?;
    let configs = bench_configs(&a.configs, &a.reopt.config())?;
    let options = BenchOptions {
        repetitions: a.workload.reps,
        jobs: a.workload.jobs,
    };
    load_oracle(&db, a.workload.oracle_cache.as_deref())?;
    let report = bench::run_bench(&mut db, &queries, &configs, &options, loaded.seed)?;
    save_oracle(&db, a.workload.oracle_cache.as_deref())?;

    std::fs::create_dir_all(&a.out_dir).map_err(Error::from)?;
    let hash = bench::config_hash(&(&configs, &options, &loaded.spec));
    let csv = bench::output_path(&a.out_dir, "bench", loaded.seed, &hash, "csv");
    let json = bench::output_path(&a.out_dir, "bench", loaded.seed, &hash, "json");
    report.write_csv(&csv)?;
    report.write_json(&json)?;

    let summary = report.summary();
    println!(
        "{:<16} {:>14} {:>14} {:>7} {:>14}",
        "config", "planning_ms", "execution_ms", "rounds", "work"
    );
    for c in &report.configs {
        let t = &summary.totals[c];
        println!(
            "{c:<16} {:>14.3} {:>14.3} {:>7} {:>14}",
            t.planning_us / 1e3,
            t.execution_us / 1e3,
            t.reopt_rounds,
            t.work
        );
    }
    println!("relative to {}: {}", report.baseline, bench::BUCKET_LABELS.join("  "));
    for (c, b) in &summary.buckets {
        let counts: Vec<String> = bench::BUCKET_LABELS.iter().map(|l| b[*l].to_string()).collect();
        println!("  {c:<16} {}", counts.join("  "));
    }
    for w in &summary.warnings {
        println!("warning: {w}");
    }
    if !report.mismatches.is_empty() {
        println!("result mismatch: {}", report.mismatches.join(", "));
    }
    println!("wrote {} and {}", csv.display(), json.display());

    if let Some(k) = a.top_k {
        if k > report.query_ids().len() {
            return Err(usage(format!(
                "--top-k {k} exceeds the {} queries",
                report.query_ids().len()
            )));
        }
        let by = report
            .configs
            .iter()
            .find(|c| c.as_str() == "default")
            .cloned()
            .unwrap_or_else(|| report.configs[0].clone());
        let top = report.top_k(k, &by);
        let path = bench::output_path(&a.out_dir, &format!("top{k}"), loaded.seed, &hash, "csv");
        top.write_csv(&path)?;
        println!("wrote {}", path.display());
    }

    if a.improve_curve {
        #[derive(Serialize)]
        struct CurveRow<'a> {
            query_id: &'a str,
            iteration: usize,
            execution_us: f64,
            work: u64,
            plan_cost: f64,
            overrides: usize,
        }
        let mut rows = Vec::new();
        let mut curves = Vec::new();
        for q in &queries {
            let spec = db.parse_query(&q.sql)?;
            let curve = reopt::selective_improvement(
                &db,
                &spec,
                a.reopt.threshold,
                &EstimatorConfig::default(),
                options.repetitions,
            )?;
            curves.push((q.id.clone(), curve));
        }
        for (id, curve) in &curves {
            for p in &curve.points {
                rows.push(CurveRow {
                    query_id: id,
                    iteration: p.iteration,
                    execution_us: p.execution_time.as_secs_f64() * 1e6,
                    work: p.work,
                    plan_cost: p.plan_cost,
                    overrides: p.overrides,
                });
            }
        }
        let path = bench::output_path(&a.out_dir, "improve", loaded.seed, &hash, "csv");
        bench::write_csv(&path, &rows)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn sweep(a: SweepArgs) -> CliResult<()> {
    if let Some(t) = a.thresholds.iter().find(|t| t.is_nan() || **t <= 1.0) {
        return Err(usage(format!("thresholds must exceed 1, got {t}")));
    }
    let (mut db, loaded) = database(&a.data, &a.stats)?;
    db.optimizer.shape = a.workload.shape;
    let queries = workload_of(&loaded, a.workload.workload.as_deref())?;
    load_oracle(&db, a.workload.oracle_cache.as_deref())?;
    if !matches!(a.estimator.mode, EstimatorMode::Default | EstimatorMode::PerfectN(0)) {
        bench::precompute_oracle(&db, &queries, a.workload.jobs)?;
    }
    let specs = queries
        .iter()
        .map(|q| db.parse_query(&q.sql))
        .collect::<Result<Vec<_>>>()?;
    let rows = reopt::threshold_sweep(
        &mut db,
        &specs,
        &a.thresholds,
        &a.estimator,
        &a.reopt.config(),
        a.workload.reps,
    )?;
    save_oracle(&db, a.workload.oracle_cache.as_deref())?;
    bench::write_csv(&a.out, &rows)?;
    println!(
        "{:>10} {:>14} {:>14} {:>7}",
        "threshold", "planning_ms", "execution_ms", "rounds"
    );
    for r in &rows {
        println!(
            "{:>10} {:>14.3} {:>14.3} {:>7}",
            r.threshold,
            r.planning_us / 1e3,
            r.execution_us / 1e3,
            r.rounds
        );
    }
    println!("wrote {}", a.out.display());
    Ok(())
}

fn ladder(a: LadderArgs) -> CliResult<()> {
    let (mut db, loaded) = database(&a.data, &a.stats)?;
    db.optimizer.shape = a.workload.shape;
    let queries = workload_of(&loaded, a.workload.workload.as_deref())?;
    load_oracle(&db, a.workload.oracle_cache.as_deref())?;
    let options = BenchOptions {
        repetitions: a.workload.reps,
        jobs: a.workload.jobs,
    };
    let rows = bench::perfect_ladder(&mut db, &queries, &a.n, &options).map_err(|e| match e {
        Error::InvalidConfig(m) => usage(m),
        other => CliError::Runtime(other),
    })?;
    save_oracle(&db, a.workload.oracle_cache.as_deref())?;
    bench::write_csv(&a.out, &rows)?;
    println!("{:>5} {:>14} {:>14} {:>14}", "n", "planning_ms", "execution_ms", "work");
    for r in &rows {
        println!(
            "{:>5} {:>14.3} {:>14.3} {:>14}",
            r.n,
            r.planning_us / 1e3,
            r.execution_us / 1e3,
            r.work
        );
    }
    println!("wrote {}", a.out.display());
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn estimator_names_parse() {
        assert_eq!(parse_estimator("default").unwrap(), EstimatorConfig::default());
        assert_eq!(parse_estimator("perfect-3").unwrap(), EstimatorConfig::perfect(3));
        assert_eq!(
            parse_estimator("perfect-max").unwrap(),
            EstimatorConfig::perfect(usize::MAX)
        );
        assert!(parse_estimator("oracle").is_err());
    }

    #[test]
    fn config_flags_go_before_command_line_flags() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("c.json");
        std::fs::write(&cfg, r#"{"threshold": 8, "reopt": true, "thresholds": [2, 4]}"#).unwrap();
        let argv: Vec<OsString> = [
            "reopt-lab",
            "run",
            "--config",
            cfg.to_str().unwrap(),
            "--threshold",
            "16",
        ]
        .iter()
        .map(OsString::from)
        .collect();
        let out: Vec<String> = expand_config(argv)
            .unwrap()
            .into_iter()
            .map(|s| s.into_string().unwrap())
            .collect();
        assert_eq!(
            out,
            [
                "reopt-lab",
                "run",
                "--reopt",
                "--threshold",
                "8",
                "--thresholds",
                "2,4",
                "--threshold",
                "16"
            ]
        );
    }
}
