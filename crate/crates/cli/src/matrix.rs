//! The benchmark matrix: testbeds crossed with planner configurations.
//!
//! Each (testbed, configuration) cell runs the validator `reps` times on a
//! fresh engine instance per run (no state survives between runs), records
//! mean/stddev of validation time, verdict count, and dief@t, and checks the
//! verdicts against the testbed manifest's ground truth. Cell failures are
//! recorded and the matrix continues.

use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use shacltrav_core::metrics::{self, MetricSet};
use shacltrav_core::validation::{run_validation, DataSource, ValidationReport};

use crate::bench::{self, BenchSpec, Testbed};
use crate::run::{CliError, Constraints, Degree, RunSettings, Strategy};

/// One planner configuration with a stable display name.
#[derive(Debug, Clone)]
pub struct NamedConfig {
    pub name: String,
    pub strategy: Strategy,
    pub degree: Degree,
    pub constraints: Constraints,
    pub rewriting: bool,
}

impl NamedConfig {
    fn settings(&self, rng_seed: u64) -> RunSettings {
        RunSettings {
            strategy: self.strategy,
            degree: self.degree,
            constraints: self.constraints,
            rewriting: self.rewriting,
            rng_seed,
            ..RunSettings::default()
        }
    }
}

/// The nine planner configurations: both traversal strategies crossed with
/// both seed-degree preferences and both tie-break preferences, plus the
/// fully random walk.
pub fn nine_planner_configs() -> Vec<NamedConfig> {
    let mut configs = Vec::new();
    for strategy in [Strategy::Bfs, Strategy::Dfs] {
        for degree in [Degree::In, Degree::Out] {
            for constraints in [Constraints::Many, Constraints::Few] {
                let name = format!(
                    "{}-{}-{}",
                    match strategy {
                        Strategy::Bfs => "bfs",
                        Strategy::Dfs => "dfs",
                        Strategy::Random => "random",
                    },
                    match degree {
                        Degree::In => "in",
                        Degree::Out => "out",
                    },
                    match constraints {
                        Constraints::Many => "many",
                        Constraints::Few => "few",
                    }
                );
                configs.push(NamedConfig {
                    name,
                    strategy,
                    degree,
                    constraints,
                    rewriting: true,
                });
            }
        }
    }
    configs.push(NamedConfig {
        name: "random".into(),
        strategy: Strategy::Random,
        degree: Degree::In,
        constraints: Constraints::Many,
        rewriting: true,
    });
    configs
}

/// The default matrix column set: the nine planner configurations plus the
/// query-rewriting-off baseline.
pub fn default_matrix_configs() -> Vec<NamedConfig> {
    let mut configs = nine_planner_configs();
    configs.push(NamedConfig {
        name: "dfs-in-many-no-rewriting".into(),
        strategy: Strategy::Dfs,
        degree: Degree::In,
        constraints: Constraints::Many,
        rewriting: false,
    });
    configs
}

/// The desk-scale testbed grid: three schema tiers crossed with three scales
/// and three invalid percentages — 27 testbeds.
pub fn desk_matrix_specs(seed: u64) -> Vec<BenchSpec> {
    let mut specs = Vec::new();
    for shapes in [3usize, 7, 14] {
        for scale in [10_000usize, 50_000, 200_000] {
            for invalid_pct in [25.0f64, 50.0, 75.0] {
                specs.push(BenchSpec {
                    shapes,
                    scale,
                    invalid_pct,
                    seed,
                });
            }
        }
    }
    specs
}

pub fn testbed_name(spec: &BenchSpec) -> String {
    format!(
        "campus{}-n{}-i{:.0}",
        spec.shapes, spec.scale, spec.invalid_pct
    )
}

/// What to run and where to put it.
#[derive(Debug, Clone)]
pub struct MatrixSpec {
    pub specs: Vec<BenchSpec>,
    pub reps: usize,
    /// Engine seed for the `random` traversal column.
    pub rng_seed: u64,
    /// Report directory; per-run files land in
    /// `<out>/<testbed>/<config>/rep<k>/` and the summary in
    /// `<out>/matrix.csv`. `None` keeps everything in memory.
    pub out_dir: Option<PathBuf>,
    /// Worker threads per testbed; 1 runs cells sequentially, which is the
    /// default because parallel cells contend for cores and blur timings.
    pub parallel: usize,
    pub configs: Vec<NamedConfig>,
}

impl MatrixSpec {
    pub fn desk(seed: u64) -> Self {
        MatrixSpec {
            specs: desk_matrix_specs(seed),
            reps: 3,
            rng_seed: seed,
            out_dir: None,
            parallel: 1,
            configs: default_matrix_configs(),
        }
    }
}

/// One (testbed, config) cell's aggregated results.
#[derive(Debug, Clone)]
pub struct CellResult {
    pub testbed: String,
    pub config: String,
    pub reps: usize,
    /// Total verdict count; identical across reps by determinism.
    pub comp: u64,
    pub valid: usize,
    pub invalid: usize,
    pub requests: u64,
    pub rules_grounded: u64,
    pub time_mean: f64,
    pub time_stddev: f64,
    pub dief_mean: f64,
    pub dief_stddev: f64,
    /// Whether every verdict equals the manifest's ground truth.
    pub verdicts_match: bool,
    /// Failure message when the cell could not run; other fields are zero.
    pub error: Option<String>,
}

pub struct MatrixOutcome {
    pub cells: Vec<CellResult>,
    pub csv: String,
    pub table: String,
}

fn failed_cell(testbed: &str, config: &str, reps: usize, error: String) -> CellResult {
    CellResult {
        testbed: testbed.to_string(),
        config: config.to_string(),
        reps,
        comp: 0,
        valid: 0,
        invalid: 0,
        requests: 0,
        rules_grounded: 0,
        time_mean: 0.0,
        time_stddev: 0.0,
        dief_mean: 0.0,
        dief_stddev: 0.0,
        verdicts_match: false,
        error: Some(error),
    }
}

/// Run one cell: `reps` fresh validation runs over a shared data source.
fn run_cell(
    testbed: &Testbed,
    testbed_name: &str,
    source: &DataSource,
    config: &NamedConfig,
    matrix: &MatrixSpec,
) -> CellResult {
    let settings = config.settings(matrix.rng_seed);
    let engine_config = settings.engine_config();
    let mut times = Vec::with_capacity(matrix.reps);
    let mut diefs = Vec::with_capacity(matrix.reps);
    let mut last: Option<(ValidationReport, MetricSet)> = None;
    for rep in 0..matrix.reps {
        let report = match run_validation(&testbed.schema, &engine_config, source) {
            Ok(r) => r,
            Err(e) => {
                return failed_cell(
                    testbed_name,
                    &config.name,
                    matrix.reps,
                    format!("rep {rep}: {e}"),
                );
            }
        };
        let trace = metrics::from_report(&report, &config.name, testbed_name);
        let set = metrics::summarize(&trace);
        if let Some(out) = &matrix.out_dir {
            let dir = out
                .join(testbed_name)
                .join(&config.name)
                .join(format!("rep{rep}"));
            if let Err(e) = metrics::write_report(&trace, &set, &dir) {
                return failed_cell(
                    testbed_name,
                    &config.name,
                    matrix.reps,
                    format!("rep {rep}: cannot write report: {e}"),
                );
            }
        }
        times.push(set.validation_time);
        diefs.push(set.dief_t);
        last = Some((report, set));
    }
    let (report, _) = last.expect("reps >= 1");

    let mut expected = std::collections::BTreeMap::new();
    for (shape, verdicts) in &testbed.manifest.verdicts {
        for (entity, &ok) in verdicts {
            expected.insert((shape.clone(), entity.clone()), ok);
        }
    }
    let actual = report.verdict_map();
    let verdicts_match = actual == expected;

    let (time_mean, time_stddev) = metrics::mean_stddev(&times);
    let (dief_mean, dief_stddev) = metrics::mean_stddev(&diefs);
    let valid = actual.values().filter(|ok| **ok).count();
    CellResult {
        testbed: testbed_name.to_string(),
        config: config.name.clone(),
        reps: matrix.reps,
        comp: actual.len() as u64,
        valid,
        invalid: actual.len() - valid,
        requests: report.stats.requests,
        rules_grounded: report.stats.rules_grounded,
        time_mean,
        time_stddev,
        dief_mean,
        dief_stddev,
        verdicts_match,
        error: None,
    }
}

/// Run the whole matrix. Testbeds are generated one at a time and dropped
/// after their row of cells, so memory stays bounded by the largest graph.
pub fn run_matrix(
    matrix: &MatrixSpec,
    progress: &mut dyn std::io::Write,
) -> Result<MatrixOutcome, CliError> {
    if matrix.reps == 0 {
        return Err(CliError::Config("reps must be at least 1".into()));
    }
    if matrix.configs.is_empty() {
        return Err(CliError::Config("no configurations given".into()));
    }
    let mut cells: Vec<CellResult> = Vec::new();
    for spec in &matrix.specs {
        let name = testbed_name(spec);
        let testbed = match bench::generate(spec) {
            Ok(t) => t,
            Err(e) => {
                let _ = writeln!(progress, "testbed {name}: generation failed: {e}");
                for config in &matrix.configs {
                    cells.push(failed_cell(
                        &name,
                        &config.name,
                        matrix.reps,
                        format!("testbed generation failed: {e}"),
                    ));
                }
                continue;
            }
        };
        let _ = writeln!(progress, "testbed {name}: {}", bench::summary_line(&testbed));
        if let Some(out) = &matrix.out_dir {
            bench::write_testbed(&testbed, &out.join(&name))?;
        }
        let source = DataSource::embedded(testbed.graph.clone());

        let row: Vec<CellResult> = if matrix.parallel <= 1 {
            matrix
                .configs
                .iter()
                .map(|config| run_cell(&testbed, &name, &source, config, matrix))
                .collect()
        } else {
            // Worker pool over the config list; results keep config order.
            let slots: Mutex<Vec<Option<CellResult>>> =
                Mutex::new(vec![None; matrix.configs.len()]);
            let next = AtomicUsize::new(0);
            let workers = matrix.parallel.min(matrix.configs.len());
            std::thread::scope(|scope| {
                for _ in 0..workers {
                    scope.spawn(|| loop {
                        let i = next.fetch_add(1, Ordering::Relaxed);
                        let Some(config) = matrix.configs.get(i) else {
                            break;
                        };
                        let cell = run_cell(&testbed, &name, &source, config, matrix);
                        slots.lock().expect("result lock")[i] = Some(cell);
                    });
                }
            });
            slots
                .into_inner()
                .expect("result lock")
                .into_iter()
                .map(|c| c.expect("every cell ran"))
                .collect()
        };

        for cell in &row {
            let _ = writeln!(progress, "  {}", cell_line(cell));
        }
        cells.extend(row);
    }

    let csv = matrix_csv(&cells);
    if let Some(out) = &matrix.out_dir {
        std::fs::create_dir_all(out)
            .and_then(|_| std::fs::write(out.join("matrix.csv"), &csv))
            .map_err(|e| CliError::Config(format!("cannot write matrix.csv: {e}")))?;
    }
    let table = matrix_table(&cells);
    Ok(MatrixOutcome { cells, csv, table })
}

fn cell_line(cell: &CellResult) -> String {
    match &cell.error {
        Some(e) => format!("{}: FAILED — {e}", cell.config),
        None => format!(
            "{}: {:.3}s ±{:.3} comp {} dief {:.1} ±{:.1} grounded {}{}",
            cell.config,
            cell.time_mean,
            cell.time_stddev,
            cell.comp,
            cell.dief_mean,
            cell.dief_stddev,
            cell.rules_grounded,
            if cell.verdicts_match {
                ""
            } else {
                "  VERDICT MISMATCH"
            }
        ),
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Machine-readable summary, one row per cell.
pub fn matrix_csv(cells: &[CellResult]) -> String {
    let mut out = String::from(
        "testbed,config,reps,comp,valid,invalid,requests,rules_grounded,\
         time_mean,time_stddev,dief_mean,dief_stddev,verdicts_match,error\n",
    );
    for c in cells {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            csv_field(&c.testbed),
            csv_field(&c.config),
            c.reps,
            c.comp,
            c.valid,
            c.invalid,
            c.requests,
            c.rules_grounded,
            c.time_mean,
            c.time_stddev,
            c.dief_mean,
            c.dief_stddev,
            c.verdicts_match,
            csv_field(c.error.as_deref().unwrap_or("")),
        ));
    }
    out
}

/// Human-readable fixed-width table.
pub fn matrix_table(cells: &[CellResult]) -> String {
    let mut out = format!(
        "{:<22} {:<26} {:>5} {:>7} {:>9} {:>9} {:>11} {:>8} {:>7}\n",
        "testbed", "config", "reps", "comp", "time", "stddev", "dief@t", "grounded", "ok"
    );
    for c in cells {
        if let Some(e) = &c.error {
            out.push_str(&format!("{:<22} {:<26} FAILED: {e}\n", c.testbed, c.config));
            continue;
        }
        out.push_str(&format!(
            "{:<22} {:<26} {:>5} {:>7} {:>9.3} {:>9.3} {:>11.2} {:>8} {:>7}\n",
            c.testbed,
            c.config,
            c.reps,
            c.comp,
            c.time_mean,
            c.time_stddev,
            c.dief_mean,
            c.rules_grounded,
            if c.verdicts_match { "yes" } else { "NO" },
        ));
    }
    out
}
