//! Run orchestration: settings, the exit-code contract, schema/data loading,
//! the `validate` pipeline, and the `plan` dump.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use shacltrav_core::data::ntriples::parse_graph;
use shacltrav_core::data::remote::{SparqlClient, DEFAULT_GET_URL_LIMIT};
use shacltrav_core::data::DataError;
use shacltrav_core::metrics::{self, AnswerTrace, MetricSet};
use shacltrav_core::planner::{
    degree_table, plan_traversal, select_seed, ConstraintPreference, DegreePreference,
    PlannerConfig, SeedRationale, TraversalStrategy,
};
use shacltrav_core::schema::graph::{build_dependency_graph, stratify, stratum_levels};
use shacltrav_core::schema::{parse_schema, SchemaError, ShapeSchema};
use shacltrav_core::validation::{
    run_validation_observed, DataSource, EngineConfig, ValidationError, ValidationReport,
};

/// Every run ends with one of these.
#[derive(Debug)]
pub enum CliError {
    /// Bad invocation, unreadable/ill-formed configuration, unwritable
    /// destination. Exit 1.
    Config(String),
    /// The schema document is invalid — syntax, dangling references, or a
    /// negative cycle. Exit 2.
    Schema(SchemaError),
    /// The data source failed: unreachable endpoint, HTTP error status,
    /// malformed results or triples. Exit 3.
    Transport(DataError),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 1,
            CliError::Schema(_) => 2,
            CliError::Transport(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Schema(e) => write!(f, "schema error: {e}"),
            CliError::Transport(e) => write!(f, "transport error: {e}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<ValidationError> for CliError {
    fn from(e: ValidationError) -> Self {
        match e {
            ValidationError::Schema(e) => CliError::Schema(e),
            ValidationError::Data(e) => CliError::Transport(e),
        }
    }
}

impl From<SchemaError> for CliError {
    fn from(e: SchemaError) -> Self {
        CliError::Schema(e)
    }
}

/// Complete description of one validation run. Also the config-file format:
/// the same JSON structure the report writer uses, so a run can be replayed
/// from its own output directory.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct RunSettings {
    /// Path to the shape schema document (JSON).
    pub schema: Option<PathBuf>,
    /// Path to an N-Triples data file (embedded evaluation).
    pub data: Option<PathBuf>,
    /// SPARQL endpoint URL (remote evaluation). Exactly one of `data` /
    /// `endpoint` must be set.
    pub endpoint: Option<String>,
    /// Report directory; omitted means no files are written.
    pub output: Option<PathBuf>,
    pub strategy: Strategy,
    pub degree: Degree,
    pub constraints: Constraints,
    pub rng_seed: u64,
    pub rewriting: bool,
    pub paging: bool,
    pub page_size: u64,
    pub max_query_len: usize,
    pub max_parts: usize,
    /// Answer cap for the embedded evaluator, modelling an endpoint that
    /// silently cuts result sets; `None` means unlimited.
    pub max_answers: Option<usize>,
    /// HTTP timeout in seconds for remote sources.
    pub timeout_secs: u64,
    /// Dataset label recorded in the report; defaults to the data path or
    /// endpoint URL.
    pub dataset: Option<String>,
}

impl Default for RunSettings {
    fn default() -> Self {
        let engine = EngineConfig::default();
        RunSettings {
            schema: None,
            data: None,
            endpoint: None,
            output: None,
            strategy: Strategy::Dfs,
            degree: Degree::In,
            constraints: Constraints::Many,
            rng_seed: 0,
            rewriting: engine.rewriting,
            paging: engine.paging,
            page_size: engine.page_size,
            max_query_len: engine.max_query_len,
            max_parts: engine.max_parts,
            max_answers: None,
            timeout_secs: 60,
            dataset: None,
        }
    }
}

/// CLI-facing names for the planner enums, stable in config files and flags.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    Dfs,
    Bfs,
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Degree {
    /// Seed on the highest in-degree.
    In,
    /// Seed on the highest out-degree.
    Out,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Constraints {
    /// Break degree ties toward the most constraints.
    Many,
    /// Break degree ties toward the fewest constraints.
    Few,
}

impl From<Strategy> for TraversalStrategy {
    fn from(s: Strategy) -> Self {
        match s {
            Strategy::Dfs => TraversalStrategy::Dfs,
            Strategy::Bfs => TraversalStrategy::Bfs,
            Strategy::Random => TraversalStrategy::Random,
        }
    }
}

impl From<Degree> for DegreePreference {
    fn from(d: Degree) -> Self {
        match d {
            Degree::In => DegreePreference::HighestIn,
            Degree::Out => DegreePreference::HighestOut,
        }
    }
}

impl From<Constraints> for ConstraintPreference {
    fn from(c: Constraints) -> Self {
        match c {
            Constraints::Many => ConstraintPreference::Many,
            Constraints::Few => ConstraintPreference::Few,
        }
    }
}

impl RunSettings {
    pub fn planner_config(&self) -> PlannerConfig {
        PlannerConfig {
            strategy: self.strategy.into(),
            degree: self.degree.into(),
            constraints: self.constraints.into(),
            rng_seed: self.rng_seed,
        }
    }

    pub fn engine_config(&self) -> EngineConfig {
        EngineConfig {
            planner: self.planner_config(),
            rewriting: self.rewriting,
            paging: self.paging,
            page_size: self.page_size,
            max_query_len: self.max_query_len,
            max_parts: self.max_parts,
        }
    }

    /// Short descriptor recorded in reports, e.g. `dfs/in/many/seed0`.
    pub fn config_label(&self) -> String {
        let strategy = match self.strategy {
            Strategy::Dfs => "dfs",
            Strategy::Bfs => "bfs",
            Strategy::Random => "random",
        };
        let degree = match self.degree {
            Degree::In => "in",
            Degree::Out => "out",
        };
        let constraints = match self.constraints {
            Constraints::Many => "many",
            Constraints::Few => "few",
        };
        let mut label = format!("{strategy}/{degree}/{constraints}/seed{}", self.rng_seed);
        if !self.rewriting {
            label.push_str("/no-rewriting");
        }
        if !self.paging {
            label.push_str("/no-paging");
        }
        label
    }

    pub fn load_file(path: &Path) -> Result<RunSettings, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("bad config {}: {e}", path.display())))
    }
}

pub fn load_schema(path: &Path) -> Result<ShapeSchema, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read schema {}: {e}", path.display())))?;
    Ok(parse_schema(&text)?)
}

fn load_source(settings: &RunSettings) -> Result<(DataSource, String), CliError> {
    match (&settings.data, &settings.endpoint) {
        (Some(_), Some(_)) => Err(CliError::Config(
            "both a data file and an endpoint were given; pick one".into(),
        )),
        (None, None) => Err(CliError::Config(
            "no data source: give a data file or an endpoint".into(),
        )),
        (Some(path), None) => {
            let text = fs::read_to_string(path).map_err(|e| {
                CliError::Transport(DataError::Transport(format!(
                    "cannot read data file {}: {e}",
                    path.display()
                )))
            })?;
            let graph = parse_graph(&text).map_err(CliError::Transport)?;
            let source = match settings.max_answers {
                Some(cap) => DataSource::embedded_with_cap(graph, cap),
                None => DataSource::embedded(graph),
            };
            Ok((source, path.display().to_string()))
        }
        (None, Some(url)) => {
            let client = SparqlClient::new(
                url.clone(),
                Duration::from_secs(settings.timeout_secs),
                DEFAULT_GET_URL_LIMIT,
            );
            Ok((DataSource::remote(client), url.clone()))
        }
    }
}

/// Everything `validate` produced, for callers that want more than the exit
/// code.
pub struct RunOutcome {
    pub report: ValidationReport,
    pub trace: AnswerTrace,
    pub metrics: MetricSet,
}

/// The full `validate` pipeline: load, run (with per-shape progress on
/// `progress`), summarize, and write report files when an output directory is
/// configured.
pub fn cmd_validate(
    settings: &RunSettings,
    progress: &mut dyn std::io::Write,
) -> Result<RunOutcome, CliError> {
    let schema_path = settings
        .schema
        .as_ref()
        .ok_or_else(|| CliError::Config("no schema given".into()))?;
    let schema = load_schema(schema_path)?;
    let (source, dataset) = load_source(settings)?;
    let dataset = settings.dataset.clone().unwrap_or(dataset);
    let config = settings.engine_config();

    let sink = progress;
    let report = run_validation_observed(&schema, &config, &source, &mut |event| {
        let _ = writeln!(
            sink,
            "shape {}: queries exhausted — {} entities tracked, {} undecided [{:.1}ms]",
            event.shape,
            event.tracked,
            event.undecided,
            event.elapsed.as_secs_f64() * 1e3,
        );
    })?;

    let trace = metrics::from_report(&report, &settings.config_label(), &dataset);
    let metric_set = metrics::summarize(&trace);
    if let Some(dir) = &settings.output {
        metrics::write_report(&trace, &metric_set, dir)
            .map_err(|e| CliError::Config(format!("cannot write report to {}: {e}", dir.display())))?;
    }
    Ok(RunOutcome {
        report,
        trace,
        metrics: metric_set,
    })
}

/// One-paragraph human summary of a finished run, for stdout.
pub fn summary_text(outcome: &RunOutcome) -> String {
    let stats = &outcome.report.stats;
    let metrics = &outcome.metrics;
    let mut text = String::new();
    let _ = writeln!(
        text,
        "validated {} of {} targets: {} valid, {} invalid",
        stats.targets_decided,
        stats.targets_total,
        outcome.trace.entries.iter().filter(|e| e.verdict).count(),
        outcome.trace.entries.iter().filter(|e| !e.verdict).count(),
    );
    let _ = writeln!(
        text,
        "requests: {}   answers: {}   rules grounded: {}",
        stats.requests, stats.answers, stats.rules_grounded
    );
    let _ = writeln!(
        text,
        "time: {:.3}s   first verdict: {}   throughput: {:.1}/s   dief@t: {:.3}",
        metrics.validation_time,
        match metrics.tfff {
            Some(t) => format!("{t:.3}s"),
            None => "-".into(),
        },
        metrics.throughput,
        metrics.dief_t,
    );
    let _ = writeln!(text, "traversal: {}", stats.traversal.join(", "));
    text
}

/// The `plan` dump: degree table, stratification, seed rationale, and the
/// traversal order. Purely static — no data access.
pub fn cmd_plan(schema_path: &Path, planner: &PlannerConfig) -> Result<String, CliError> {
    let schema = load_schema(schema_path)?;
    let graph = build_dependency_graph(&schema);
    let strata = stratify(&schema, &graph)?;
    let levels = stratum_levels(&schema, &strata);

    let mut out = String::new();
    let _ = writeln!(out, "shapes ({}):", schema.len());
    let _ = writeln!(
        out,
        "  {:<24} {:>9} {:>10} {:>12} {:>9} {:>8}",
        "name", "in-degree", "out-degree", "constraints", "targeted", "stratum"
    );
    for (row, level) in degree_table(&schema, &graph).iter().zip(&levels) {
        let _ = writeln!(
            out,
            "  {:<24} {:>9} {:>10} {:>12} {:>9} {:>8}",
            row.shape,
            row.in_degree,
            row.out_degree,
            row.constraint_count,
            if row.targeted { "yes" } else { "no" },
            level,
        );
    }
    let _ = writeln!(out, "strata (evaluated lowest first): {}", strata.len());
    for (i, stratum) in strata.iter().enumerate() {
        let _ = writeln!(out, "  {}: {}", i, stratum.join(", "));
    }

    let seed = select_seed(&schema, &graph, planner);
    match &seed {
        None => {
            let _ = writeln!(out, "seed: none — the schema has no shapes");
        }
        Some(choice) => {
            let name = &schema.shapes()[choice.index].name;
            let degree_kind = match planner.degree {
                DegreePreference::HighestIn => "in-degree",
                DegreePreference::HighestOut => "out-degree",
            };
            let tiebreak = match planner.constraints {
                ConstraintPreference::Many => "most constraints",
                ConstraintPreference::Few => "fewest constraints",
            };
            let rationale = match choice.rationale {
                SeedRationale::Degree => format!("highest {degree_kind} is unique"),
                SeedRationale::Constraints => {
                    format!("highest {degree_kind} tied; {tiebreak} decided")
                }
                SeedRationale::Name => format!(
                    "highest {degree_kind} and {tiebreak} tied; first name in order decided"
                ),
            };
            let candidates = if choice.untargeted_fallback {
                "no shape is targeted, so every shape was a candidate"
            } else {
                "chosen among targeted shapes"
            };
            let _ = writeln!(out, "seed: {name} — {rationale} ({candidates})");
        }
    }

    let plan = plan_traversal(&schema, &graph, planner);
    let order: Vec<&str> = plan
        .order
        .iter()
        .map(|&i| schema.shapes()[i].name.as_str())
        .collect();
    let strategy = match planner.strategy {
        TraversalStrategy::Dfs => "DFS",
        TraversalStrategy::Bfs => "BFS",
        TraversalStrategy::Random => "random",
    };
    let _ = writeln!(
        out,
        "traversal ({strategy}, {} nodes expanded, {} edges followed, {} restarts):",
        plan.stats.nodes_expanded, plan.stats.edges_followed, plan.stats.restarts
    );
    let _ = writeln!(out, "  {}", order.join(", "));
    Ok(out)
}
