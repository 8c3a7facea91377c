//! `shacltrav` — traversal-ordered shape validation over RDF data.
//!
//! Exit codes: 0 success, 1 configuration error, 2 schema error, 3 data
//! transport failure. `--help` and `--version` exit 0.

use std::io::Write as _;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use shacltrav_cli::bench::{self, BenchSpec};
use shacltrav_cli::matrix::{self, MatrixSpec};
use shacltrav_cli::run::{self, CliError, Constraints, Degree, RunSettings, Strategy};
use shacltrav_core::metrics;

#[derive(Parser)]
#[command(
    name = "shacltrav",
    version,
    about = "Traversal-ordered shape validation over RDF graphs and SPARQL endpoints"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a data source against a shape schema and report verdicts.
    Validate(Box<ValidateArgs>),
    /// Print the traversal plan for a schema; touches no data.
    Plan(PlanArgs),
    /// Generate testbeds and run the benchmark matrix.
    #[command(subcommand)]
    Bench(BenchCommand),
    /// Re-check a written report directory: recompute its metrics from the
    /// trace and compare with the stored values.
    Metrics(MetricsArgs),
}

/// Flags mirror the JSON settings file; explicit flags win over the file.
#[derive(Args)]
struct ValidateArgs {
    /// JSON settings file (same shape as the report run description).
    #[arg(long, env = "SHACLTRAV_CONFIG")]
    config: Option<PathBuf>,
    /// Shape schema document (JSON).
    #[arg(long, env = "SHACLTRAV_SCHEMA")]
    schema: Option<PathBuf>,
    /// N-Triples data file (embedded evaluation).
    #[arg(long, env = "SHACLTRAV_DATA")]
    data: Option<PathBuf>,
    /// SPARQL endpoint URL (remote evaluation).
    #[arg(long, env = "SHACLTRAV_ENDPOINT")]
    endpoint: Option<String>,
    /// Directory for verdicts.csv, trace.csv, and metrics.json.
    #[arg(long, env = "SHACLTRAV_OUTPUT")]
    output: Option<PathBuf>,
    /// Traversal strategy over the shape dependency graph.
    #[arg(long, value_enum, env = "SHACLTRAV_STRATEGY")]
    strategy: Option<Strategy>,
    /// Seed selection: highest in-degree or highest out-degree.
    #[arg(long, value_enum, env = "SHACLTRAV_DEGREE")]
    degree: Option<Degree>,
    /// Seed tie-break: most or fewest constraints.
    #[arg(long, value_enum, env = "SHACLTRAV_CONSTRAINTS")]
    constraints: Option<Constraints>,
    /// Seed for the random traversal strategy.
    #[arg(long, env = "SHACLTRAV_RNG_SEED")]
    rng_seed: Option<u64>,
    /// Disable inter-shape query rewriting (baseline mode).
    #[arg(long, env = "SHACLTRAV_NO_REWRITING")]
    no_rewriting: bool,
    /// Disable result paging (diagnostic; endpoint caps go undetected).
    #[arg(long, env = "SHACLTRAV_NO_PAGING")]
    no_paging: bool,
    /// Rows per page when paging.
    #[arg(long, env = "SHACLTRAV_PAGE_SIZE")]
    page_size: Option<u64>,
    /// Query text budget before instance filters are dropped or split.
    #[arg(long, env = "SHACLTRAV_MAX_QUERY_LEN")]
    max_query_len: Option<usize>,
    /// Maximum filter partitions per rewritten query.
    #[arg(long, env = "SHACLTRAV_MAX_PARTS")]
    max_parts: Option<usize>,
    /// Answer cap for the embedded evaluator (models a truncating endpoint).
    #[arg(long, env = "SHACLTRAV_MAX_ANSWERS")]
    max_answers: Option<usize>,
    /// HTTP timeout in seconds for remote sources.
    #[arg(long, env = "SHACLTRAV_TIMEOUT_SECS")]
    timeout_secs: Option<u64>,
    /// Dataset label recorded in reports.
    #[arg(long, env = "SHACLTRAV_DATASET")]
    dataset: Option<String>,
}

impl ValidateArgs {
    /// Settings file (or defaults) overlaid with whatever flags were given.
    fn settings(&self) -> Result<RunSettings, CliError> {
        let mut s = match &self.config {
            Some(path) => RunSettings::load_file(path)?,
            None => RunSettings::default(),
        };
        if let Some(v) = &self.schema {
            s.schema = Some(v.clone());
        }
        if let Some(v) = &self.data {
            s.data = Some(v.clone());
        }
        if let Some(v) = &self.endpoint {
            s.endpoint = Some(v.clone());
        }
        if let Some(v) = &self.output {
            s.output = Some(v.clone());
        }
        if let Some(v) = self.strategy {
            s.strategy = v;
        }
        if let Some(v) = self.degree {
            s.degree = v;
        }
        if let Some(v) = self.constraints {
            s.constraints = v;
        }
        if let Some(v) = self.rng_seed {
            s.rng_seed = v;
        }
        if self.no_rewriting {
            s.rewriting = false;
        }
        if self.no_paging {
            s.paging = false;
        }
        if let Some(v) = self.page_size {
            s.page_size = v;
        }
        if let Some(v) = self.max_query_len {
            s.max_query_len = v;
        }
        if let Some(v) = self.max_parts {
            s.max_parts = v;
        }
        if let Some(v) = self.max_answers {
            s.max_answers = Some(v);
        }
        if let Some(v) = self.timeout_secs {
            s.timeout_secs = v;
        }
        if let Some(v) = &self.dataset {
            s.dataset = Some(v.clone());
        }
        Ok(s)
    }
}

#[derive(Args)]
struct PlanArgs {
    /// Shape schema document (JSON).
    #[arg(env = "SHACLTRAV_SCHEMA")]
    schema: PathBuf,
    #[arg(long, value_enum, default_value = "dfs", env = "SHACLTRAV_STRATEGY")]
    strategy: Strategy,
    #[arg(long, value_enum, default_value = "in", env = "SHACLTRAV_DEGREE")]
    degree: Degree,
    #[arg(long, value_enum, default_value = "many", env = "SHACLTRAV_CONSTRAINTS")]
    constraints: Constraints,
    #[arg(long, default_value_t = 0, env = "SHACLTRAV_RNG_SEED")]
    rng_seed: u64,
}

#[derive(Subcommand)]
enum BenchCommand {
    /// Generate one testbed: schema.json, data.nt, and a ground-truth
    /// manifest.json, byte-identical for a given spec and seed.
    Generate(GenerateArgs),
    /// Cross testbeds with planner configurations and tabulate the results.
    Matrix(MatrixArgs),
}

#[derive(Args)]
struct GenerateArgs {
    /// Schema tier by shape count: 3, 4, 7, or 14.
    #[arg(long, default_value_t = 3, env = "SHACLTRAV_SHAPES")]
    shapes: usize,
    /// Approximate triple count.
    #[arg(long, default_value_t = 10_000, env = "SHACLTRAV_SCALE")]
    scale: usize,
    /// Target percentage of invalid entities (0..=100, realized within ±2).
    #[arg(long, default_value_t = 50.0, env = "SHACLTRAV_INVALID_PCT")]
    invalid_pct: f64,
    /// Corruption placement seed.
    #[arg(long, default_value_t = 0, env = "SHACLTRAV_SEED")]
    seed: u64,
    /// Output directory.
    #[arg(long, default_value = "testbed", env = "SHACLTRAV_OUT")]
    out: PathBuf,
}

#[derive(Args)]
struct MatrixArgs {
    /// Schema tiers to include, by shape count.
    #[arg(long, value_delimiter = ',', default_values_t = [3usize, 7, 14], env = "SHACLTRAV_MATRIX_SHAPES")]
    shapes: Vec<usize>,
    /// Approximate triple counts to include.
    #[arg(long, value_delimiter = ',', default_values_t = [10_000usize, 50_000, 200_000], env = "SHACLTRAV_MATRIX_SCALES")]
    scales: Vec<usize>,
    /// Invalid percentages to include.
    #[arg(long, value_delimiter = ',', default_values_t = [25.0f64, 50.0, 75.0], env = "SHACLTRAV_MATRIX_INVALID")]
    invalid_pcts: Vec<f64>,
    /// Validation runs per cell.
    #[arg(long, default_value_t = 3, env = "SHACLTRAV_REPS")]
    reps: usize,
    /// Seed for testbed generation and the random traversal column.
    #[arg(long, default_value_t = 0, env = "SHACLTRAV_SEED")]
    seed: u64,
    /// Report directory; omit to keep results in memory and print only.
    #[arg(long, env = "SHACLTRAV_OUT")]
    out: Option<PathBuf>,
    /// Concurrent cells per testbed. Sequential by default so timings stay
    /// clean; raise for verdict-focused runs.
    #[arg(long, default_value_t = 1, env = "SHACLTRAV_PARALLEL_CELLS")]
    parallel_cells: usize,
}

#[derive(Args)]
struct MetricsArgs {
    /// Report directory containing trace.csv and metrics.json.
    #[arg(env = "SHACLTRAV_REPORT_DIR")]
    dir: PathBuf,
    /// Also evaluate dief@t at this time in seconds.
    #[arg(long, env = "SHACLTRAV_DIEF_T")]
    t: Option<f64>,
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version are successful outcomes; everything else is
            // a configuration error under the exit-code contract.
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp
                | ErrorKind::DisplayVersion
                | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => 0,
                _ => 1,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    if let Err(e) = dispatch(cli) {
        eprintln!("{e}");
        std::process::exit(i32::from(e.exit_code()));
    }
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Validate(args) => {
            let settings = args.settings()?;
            let outcome = run::cmd_validate(&settings, &mut std::io::stderr())?;
            print!("{}", run::summary_text(&outcome));
            Ok(())
        }
        Command::Plan(args) => {
            let settings = RunSettings {
                strategy: args.strategy,
                degree: args.degree,
                constraints: args.constraints,
                rng_seed: args.rng_seed,
                ..RunSettings::default()
            };
            let dump = run::cmd_plan(&args.schema, &settings.planner_config())?;
            print!("{dump}");
            Ok(())
        }
        Command::Bench(BenchCommand::Generate(args)) => {
            let spec = BenchSpec {
                shapes: args.shapes,
                scale: args.scale,
                invalid_pct: args.invalid_pct,
                seed: args.seed,
            };
            let testbed = bench::generate(&spec)?;
            bench::write_testbed(&testbed, &args.out)?;
            if !testbed.manifest.within_tolerance {
                eprintln!(
                    "warning: realized invalid percentage {:.2}% misses the {:.0}% target by more than {} points",
                    testbed.manifest.realized_invalid_pct,
                    spec.invalid_pct,
                    bench::INVALID_PCT_TOLERANCE,
                );
            }
            println!("{}", bench::summary_line(&testbed));
            println!("wrote {}", args.out.display());
            Ok(())
        }
        Command::Bench(BenchCommand::Matrix(args)) => {
            let mut specs = Vec::new();
            for &shapes in &args.shapes {
                for &scale in &args.scales {
                    for &invalid_pct in &args.invalid_pcts {
                        specs.push(BenchSpec {
                            shapes,
                            scale,
                            invalid_pct,
                            seed: args.seed,
                        });
                    }
                }
            }
            let spec = MatrixSpec {
                specs,
                reps: args.reps,
                rng_seed: args.seed,
                out_dir: args.out,
                parallel: args.parallel_cells.max(1),
                configs: matrix::default_matrix_configs(),
            };
            let outcome = matrix::run_matrix(&spec, &mut std::io::stderr())?;
            print!("{}", outcome.table);
            let failed: Vec<&str> = outcome
                .cells
                .iter()
                .filter(|c| c.error.is_some() || !c.verdicts_match)
                .map(|c| c.config.as_str())
                .collect();
            if !failed.is_empty() {
                return Err(CliError::Config(format!(
                    "{} of {} cells failed or missed ground truth",
                    failed.len(),
                    outcome.cells.len()
                )));
            }
            Ok(())
        }
        Command::Metrics(args) => {
            let (trace, stored) = metrics::read_report(&args.dir)
                .map_err(|e| CliError::Config(format!("cannot read report: {e}")))?;
            let recomputed = metrics::summarize(&trace);
            let mut out = std::io::stdout().lock();
            let _ = writeln!(out, "config:  {}", trace.info.config);
            let _ = writeln!(out, "dataset: {}", trace.info.dataset);
            let _ = writeln!(out, "validation_time: {}", recomputed.validation_time);
            let _ = writeln!(
                out,
                "tfff: {}",
                recomputed
                    .tfff
                    .map_or_else(|| "-".into(), |t| t.to_string())
            );
            let _ = writeln!(out, "throughput: {}", recomputed.throughput);
            let _ = writeln!(out, "comp: {}", recomputed.comp);
            let _ = writeln!(out, "dief_t: {}", recomputed.dief_t);
            if let Some(t) = args.t {
                let _ = writeln!(out, "dief@{t}: {}", metrics::dief_at_t(&trace, t));
            }
            if recomputed != stored {
                return Err(CliError::Config(
                    "stored metrics disagree with values recomputed from the trace".into(),
                ));
            }
            Ok(())
        }
    }
}
