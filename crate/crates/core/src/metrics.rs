//! Verdict traces, diefficiency metrics, and report files.
//!
//! A run produces an [`AnswerTrace`]: one timestamped entry per (entity,
//! shape) verdict, in the order decided. From it, [`summarize`] computes the
//! five run metrics — wall-clock validation time, time to first verdict,
//! throughput, verdict count, and `dief@t`, the exact area under the
//! cumulative-verdict step curve (higher means steadier, earlier verdict
//! production). [`write_report`] and [`read_report`] round-trip the trace
//! and metrics through three files: `verdicts.csv`, `trace.csv`, and
//! `metrics.json`.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::validation::ValidationReport;

pub const VERDICTS_FILE: &str = "verdicts.csv";
pub const TRACE_FILE: &str = "trace.csv";
pub const METRICS_FILE: &str = "metrics.json";

/// One verdict observation: seconds since run start, the entity (rendered as
/// a term token), the shape, and the verdict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub elapsed_seconds: f64,
    pub entity: String,
    pub shape: String,
    pub verdict: bool,
}

/// Metadata identifying a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunInfo {
    /// Short configuration descriptor (strategy/heuristics/seed).
    pub config: String,
    /// Dataset identifier.
    pub dataset: String,
    /// True when the run aborted before exhausting its queries; emitted
    /// files are still well-formed.
    pub partial: bool,
}

/// The complete timestamped verdict trace of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct AnswerTrace {
    /// Verdicts in decision order; `elapsed_seconds` is non-decreasing.
    pub entries: Vec<TraceEntry>,
    pub info: RunInfo,
    /// Run end minus run start, in seconds — not the last verdict's time.
    pub validation_time: f64,
}

/// The five run metrics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSet {
    /// Wall-clock run duration in seconds.
    pub validation_time: f64,
    /// Time to the first verdict, in seconds; absent for empty traces.
    pub tfff: Option<f64>,
    /// Verdicts per second: `comp / validation_time`.
    pub throughput: f64,
    /// Total verdict count, valid and invalid alike.
    pub comp: u64,
    /// `dief@t` evaluated at `t = validation_time`.
    pub dief_t: f64,
}

#[derive(Debug, thiserror::Error)]
pub enum MetricsError {
    #[error("report i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("report csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("report json: {0}")]
    Json(#[from] serde_json::Error),
}

/// Build a trace from an engine report.
pub fn from_report(report: &ValidationReport, config: &str, dataset: &str) -> AnswerTrace {
    let entries: Vec<TraceEntry> = report
        .trace
        .iter()
        .map(|e| TraceEntry {
            elapsed_seconds: e.elapsed.as_secs_f64(),
            entity: e.entity.to_token(),
            shape: e.shape.clone(),
            verdict: e.valid,
        })
        .collect();
    debug_assert!(
        entries
            .windows(2)
            .all(|w| w[0].elapsed_seconds <= w[1].elapsed_seconds),
        "trace timestamps are non-decreasing"
    );
    AnswerTrace {
        entries,
        info: RunInfo {
            config: config.to_string(),
            dataset: dataset.to_string(),
            partial: false,
        },
        validation_time: report.validation_time.as_secs_f64(),
    }
}

/// Exact area under the cumulative-verdict step function over `[0, t]`.
///
/// The count steps up by one at each entry timestamp, so the area is the sum
/// of `t - t_i` over entries with `t_i <= t` — no sampling involved.
pub fn dief_at_t(trace: &AnswerTrace, t: f64) -> f64 {
    trace
        .entries
        .iter()
        .map(|e| (t - e.elapsed_seconds).max(0.0))
        .sum()
}

/// Compute the five metrics of a completed trace.
pub fn summarize(trace: &AnswerTrace) -> MetricSet {
    let comp = trace.entries.len() as u64;
    let throughput = if trace.validation_time > 0.0 {
        comp as f64 / trace.validation_time
    } else {
        0.0
    };
    MetricSet {
        validation_time: trace.validation_time,
        tfff: trace.entries.first().map(|e| e.elapsed_seconds),
        throughput,
        comp,
        dief_t: dief_at_t(trace, trace.validation_time),
    }
}

/// Mean and sample standard deviation (zero for fewer than two values), for
/// aggregating repeated runs of one configuration.
pub fn mean_stddev(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (values.len() - 1) as f64;
    (mean, var.sqrt())
}

#[derive(Debug, Serialize, Deserialize)]
struct VerdictRecord {
    entity: String,
    shape: String,
    verdict: bool,
}

#[derive(Debug, Serialize, Deserialize)]
struct MetricsDoc {
    #[serde(flatten)]
    metrics: MetricSet,
    run: RunInfo,
}

/// Write the three report files into `dir` (created if missing):
/// `verdicts.csv` (`entity,shape,verdict`, one record per verdict),
/// `trace.csv` (`elapsed_seconds,entity,shape,verdict`), and `metrics.json`.
/// All files are UTF-8 with LF line endings and deterministic given a
/// deterministic trace.
pub fn write_report(
    trace: &AnswerTrace,
    metrics: &MetricSet,
    dir: &Path,
) -> Result<(), MetricsError> {
    fs::create_dir_all(dir)?;

    let mut verdicts = csv::Writer::from_path(dir.join(VERDICTS_FILE))?;
    for e in &trace.entries {
        verdicts.serialize(VerdictRecord {
            entity: e.entity.clone(),
            shape: e.shape.clone(),
            verdict: e.verdict,
        })?;
    }
    verdicts.flush()?;

    let mut trace_file = csv::Writer::from_path(dir.join(TRACE_FILE))?;
    for e in &trace.entries {
        trace_file.serialize(e)?;
    }
    trace_file.flush()?;

    let doc = MetricsDoc {
        metrics: metrics.clone(),
        run: trace.info.clone(),
    };
    let mut json = serde_json::to_string_pretty(&doc)?;
    json.push('\n');
    fs::write(dir.join(METRICS_FILE), json)?;
    Ok(())
}

/// Read back what [`write_report`] wrote. The returned pair reconstructs the
/// original trace and metric set exactly: CSV and JSON render floats in
/// shortest round-trip form.
pub fn read_report(dir: &Path) -> Result<(AnswerTrace, MetricSet), MetricsError> {
    let mut reader = csv::Reader::from_path(dir.join(TRACE_FILE))?;
    let mut entries = Vec::new();
    for record in reader.deserialize() {
        entries.push(record?);
    }
    let doc: MetricsDoc = serde_json::from_str(&fs::read_to_string(dir.join(METRICS_FILE))?)?;
    let trace = AnswerTrace {
        entries,
        info: doc.run,
        validation_time: doc.metrics.validation_time,
    };
    Ok((trace, doc.metrics))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trace_at(times: &[f64], total: f64) -> AnswerTrace {
        AnswerTrace {
            entries: times
                .iter()
                .enumerate()
                .map(|(i, &t)| TraceEntry {
                    elapsed_seconds: t,
                    entity: format!("<http://example.org/e{i}>"),
                    shape: "S".into(),
                    verdict: i % 2 == 0,
                })
                .collect(),
            info: RunInfo {
                config: "test".into(),
                dataset: "unit".into(),
                partial: false,
            },
            validation_time: total,
        }
    }

    #[test]
    fn dief_integrates_the_step_function() {
        let trace = trace_at(&[1.0, 2.0, 3.0], 3.0);
        assert_eq!(dief_at_t(&trace, 3.0), 3.0);
        assert_eq!(dief_at_t(&trace, 0.5), 0.0);
        let empty = trace_at(&[], 1.0);
        assert_eq!(dief_at_t(&empty, 1.0), 0.0);
    }

    #[test]
    fn summarize_fills_all_five_fields() {
        let trace = trace_at(&[0.3, 0.5, 1.0], 2.0);
        let m = summarize(&trace);
        assert_eq!(m.validation_time, 2.0);
        assert_eq!(m.tfff, Some(0.3));
        assert_eq!(m.comp, 3);
        assert_eq!(m.throughput, 1.5);
        assert_eq!(m.dief_t, (2.0 - 0.3) + (2.0 - 0.5) + (2.0 - 1.0));
    }

    #[test]
    fn mean_stddev_matches_hand_computation() {
        let (mean, sd) = mean_stddev(&[2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0]);
        assert!((mean - 5.0).abs() < 1e-12);
        assert!((sd - (32.0f64 / 7.0).sqrt()).abs() < 1e-12);
        assert_eq!(mean_stddev(&[]), (0.0, 0.0));
        assert_eq!(mean_stddev(&[3.5]), (3.5, 0.0));
    }

    #[test]
    fn report_files_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let trace = trace_at(&[0.25, 0.5], 1.0);
        let metrics = summarize(&trace);
        write_report(&trace, &metrics, dir.path()).unwrap();
        let (trace2, metrics2) = read_report(dir.path()).unwrap();
        assert_eq!(trace2, trace);
        assert_eq!(metrics2, metrics);
        assert_eq!(summarize(&trace2), metrics);

        let verdicts = std::fs::read_to_string(dir.path().join(VERDICTS_FILE)).unwrap();
        assert!(verdicts.starts_with("entity,shape,verdict\n"));
        assert_eq!(verdicts.lines().count(), 1 + trace.entries.len());
        let traced = std::fs::read_to_string(dir.path().join(TRACE_FILE)).unwrap();
        assert!(traced.starts_with("elapsed_seconds,entity,shape,verdict\n"));
    }
}
