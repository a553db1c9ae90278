//! The four batch commands behind the `fruitlet` binary. Each is a pure
//! function from files on disk to files on disk; reports embed the exact
//! configuration that produced them and never contain filesystem paths.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::eval::{aggregate, AggregateSummary, CountReport, ErrorSummary, EvalError};
use crate::fruit_map::FruitletTrack;
use crate::io::{read_bundle, read_json, to_json, write_bundle, BundleError};
use crate::pipeline::{process_scan, PipelineConfig, PipelineError, ScanResult, ScanStats};
use crate::simulator::{simulate_scan, SimError, SimulationConfig};
use crate::sphere_fit::FitMethod;

pub const COUNT_KIND: &str = "count";
pub const EVALUATE_KIND: &str = "evaluate";
pub const SUMMARY_KIND: &str = "summary";

#[derive(Debug, Error)]
pub enum CommandError {
    #[error(transparent)]
    Bundle(#[from] BundleError),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error(transparent)]
    Simulation(#[from] SimError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{0}")]
    Input(String),
    #[error("threshold violated: {0}")]
    Threshold(String),
}

/// Machine-readable error record for stderr.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorRecord {
    pub error: String,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub frame: Option<u32>,
}

impl CommandError {
    pub fn record(&self) -> ErrorRecord {
        let (error, frame) = match self {
            CommandError::Bundle(e) => (e.kind(), e.frame()),
            CommandError::Pipeline(PipelineError::FrameOrder { next, .. }) => ("frame_order", Some(*next)),
            CommandError::Pipeline(_) => ("pipeline", None),
            CommandError::Simulation(_) => ("simulation", None),
            CommandError::Eval(_) => ("evaluation", None),
            CommandError::Config(_) => ("config", None),
            CommandError::Input(_) => ("input", None),
            CommandError::Threshold(_) => ("threshold", None),
        };
        ErrorRecord {
            error: error.into(),
            message: self.to_string(),
            frame,
        }
    }
}

/// Reads a configuration of type `T` from a JSON file that is either the bare
/// config or a report/manifest embedding it under `embedded_key`.
pub fn load_config<T: for<'de> Deserialize<'de>>(path: &Path, embedded_key: &str) -> Result<T, CommandError> {
    let value: Value = read_json(path)?;
    let inner = match value.get(embedded_key) {
        Some(v) if v.is_object() => v.clone(),
        _ => value,
    };
    serde_json::from_value(inner).map_err(|e| CommandError::Config(format!("{}: {e}", path.display())))
}

pub fn load_pipeline_config(path: &Path) -> Result<PipelineConfig, CommandError> {
    load_config(path, "config")
}

pub fn load_simulation_config(path: &Path) -> Result<SimulationConfig, CommandError> {
    load_config(path, "simulation")
}

fn write_text(path: &Path, text: &str) -> Result<(), CommandError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|source| BundleError::Io {
            path: parent.to_path_buf(),
            source,
        })?;
    }
    std::fs::write(path, text).map_err(|source| {
        BundleError::Io {
            path: path.to_path_buf(),
            source,
        }
        .into()
    })
}

/// Writes a simulated scan (frames plus ground truth) as a bundle.
pub fn cmd_simulate(cfg: &SimulationConfig, scan_id: &str, out: &Path) -> Result<crate::io::Manifest, CommandError> {
    let scan = simulate_scan(cfg)?;
    Ok(write_bundle(out, scan_id, &scan.frames, Some(&scan.truth), Some(cfg))?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountOutput {
    pub kind: String,
    pub scan_id: String,
    pub method: FitMethod,
    pub count: usize,
    pub stats: ScanStats,
    pub tracks: Vec<FruitletTrack>,
    pub config: PipelineConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationOutput {
    pub kind: String,
    pub scan_id: String,
    pub method: FitMethod,
    pub count: usize,
    /// Against every fruitlet on the branch.
    pub full: CountReport,
    /// Against fruitlets seen with at least `min_points` pixels in some frame.
    pub visible: CountReport,
    pub never_visible: usize,
    pub errors: Option<ErrorSummary>,
    pub stats: ScanStats,
    pub tracks: Vec<FruitletTrack>,
    pub config: PipelineConfig,
}

fn run(bundle: &Path, cfg: &PipelineConfig) -> Result<(crate::io::ScanBundle, ScanResult), CommandError> {
    cfg.validate()?;
    let b = read_bundle(bundle)?;
    let res = process_scan(&b.frames, cfg)?;
    Ok((b, res))
}

pub fn count_scan(bundle: &Path, cfg: &PipelineConfig) -> Result<CountOutput, CommandError> {
    let (b, res) = run(bundle, cfg)?;
    Ok(CountOutput {
        kind: COUNT_KIND.into(),
        scan_id: b.manifest.scan_id,
        method: cfg.fit.method,
        count: res.map.count(),
        stats: res.stats,
        tracks: res.map.tracks().to_vec(),
        config: *cfg,
    })
}

pub fn evaluate_scan(bundle: &Path, cfg: &PipelineConfig) -> Result<EvaluationOutput, CommandError> {
    let (b, res) = run(bundle, cfg)?;
    let truth = b.ground_truth.ok_or(BundleError::NoGroundTruth)?;
    let tol = cfg.evaluation.center_tolerance_mm;
    let full = CountReport::from_map(&res.map, &truth.spheres(), tol);
    let visible_truth = truth.visible_only(cfg.extraction.min_points);
    let visible = CountReport::from_map(&res.map, &visible_truth.spheres(), tol);
    Ok(EvaluationOutput {
        kind: EVALUATE_KIND.into(),
        scan_id: b.manifest.scan_id,
        method: cfg.fit.method,
        count: res.map.count(),
        never_visible: truth.fruitlets.len() - visible_truth.fruitlets.len(),
        errors: full.error_summary(),
        full,
        visible,
        stats: res.stats,
        tracks: res.map.tracks().to_vec(),
        config: *cfg,
    })
}

pub fn cmd_count(bundle: &Path, cfg: &PipelineConfig, out: &Path) -> Result<CountOutput, CommandError> {
    let report = count_scan(bundle, cfg)?;
    write_text(out, &to_json(&report))?;
    Ok(report)
}

pub fn cmd_evaluate(bundle: &Path, cfg: &PipelineConfig, out: &Path) -> Result<EvaluationOutput, CommandError> {
    let report = evaluate_scan(bundle, cfg)?;
    write_text(out, &to_json(&report))?;
    Ok(report)
}

/// Per-method block of the summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: FitMethod,
    pub scan_ids: Vec<String>,
    /// Signed and absolute percentage error, precision, recall, F1 over the full ground truth.
    pub full: AggregateSummary,
    pub visible: AggregateSummary,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SummaryThresholds {
    pub min_precision: Option<f64>,
    pub min_recall: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryOutput {
    pub kind: String,
    pub methods: Vec<MethodSummary>,
    pub config: SummaryThresholds,
}

/// Groups evaluation reports by fit method and aggregates each group.
pub fn summarize(reports: &[EvaluationOutput], thresholds: SummaryThresholds) -> Result<SummaryOutput, CommandError> {
    let mut groups: BTreeMap<String, Vec<&EvaluationOutput>> = BTreeMap::new();
    for r in reports {
        groups.entry(r.method.to_string()).or_default().push(r);
    }
    let mut methods = Vec::new();
    for group in groups.values() {
        let full: Vec<CountReport> = group.iter().map(|r| r.full).collect();
        let visible: Vec<CountReport> = group.iter().map(|r| r.visible).collect();
        methods.push(MethodSummary {
            method: group[0].method,
            scan_ids: group.iter().map(|r| r.scan_id.clone()).collect(),
            full: aggregate(&full)?,
            visible: aggregate(&visible)?,
        });
    }
    Ok(SummaryOutput {
        kind: SUMMARY_KIND.into(),
        methods,
        config: thresholds,
    })
}

fn check_thresholds(summary: &SummaryOutput) -> Result<(), CommandError> {
    let t = summary.config;
    let mut violations = Vec::new();
    for m in &summary.methods {
        let checks = [("precision", t.min_precision, m.full.mean_precision), ("recall", t.min_recall, m.full.mean_recall)];
        for (name, min, got) in checks {
            if let Some(min) = min {
                if got.is_none_or(|g| g < min) {
                    violations.push(format!("{} mean {name} {got:?} < {min}", m.method));
                }
            }
        }
    }
    if violations.is_empty() {
        Ok(())
    } else {
        Err(CommandError::Threshold(violations.join("; ")))
    }
}

/// Aggregates evaluation reports. The summary is written even when a
/// threshold is violated; the violation is then returned as an error.
pub fn cmd_report(inputs: &[&Path], thresholds: SummaryThresholds, out: &Path) -> Result<SummaryOutput, CommandError> {
    if inputs.is_empty() {
        return Err(CommandError::Input("report needs at least one evaluation report".into()));
    }
    let mut reports = Vec::with_capacity(inputs.len());
    for p in inputs {
        let r: EvaluationOutput = read_json(p)?;
        if r.kind != EVALUATE_KIND {
            return Err(CommandError::Input(format!("{} is not an evaluation report", p.display())));
        }
        reports.push(r);
    }
    let summary = summarize(&reports, thresholds)?;
    write_text(out, &to_json(&summary))?;
    check_thresholds(&summary)?;
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn report(method: FitMethod, tp: usize, fp: usize, fn_: usize) -> EvaluationOutput {
        let c = CountReport::from_counts(tp, fp, fn_);
        EvaluationOutput {
            kind: EVALUATE_KIND.into(),
            scan_id: format!("s{tp}"),
            method,
            count: tp + fp,
            full: c,
            visible: c,
            never_visible: 0,
            errors: c.error_summary(),
            stats: ScanStats::default(),
            tracks: vec![],
            config: PipelineConfig::default(),
        }
    }

    #[test]
    fn summary_groups_by_method_and_signs_errors() {
        let reports = [
            report(FitMethod::Ransac, 10, 2, 0),
            report(FitMethod::LeastSquares, 8, 0, 2),
            report(FitMethod::Ransac, 10, 1, 0),
        ];
        let s = summarize(&reports, SummaryThresholds::default()).unwrap();
        assert_eq!(s.methods.len(), 2);
        let lsq = &s.methods[0];
        let ransac = &s.methods[1];
        assert_eq!(lsq.method, FitMethod::LeastSquares);
        assert!(lsq.full.mean_percentage_error.unwrap() < 0.0);
        assert!(ransac.full.mean_percentage_error.unwrap() > 0.0);
        assert_eq!(ransac.scan_ids.len(), 2);
    }

    #[test]
    fn thresholds_are_checked() {
        let s = summarize(
            &[report(FitMethod::Ransac, 8, 2, 2)],
            SummaryThresholds {
                min_precision: Some(0.9),
                min_recall: None,
            },
        )
        .unwrap();
        assert!(matches!(check_thresholds(&s), Err(CommandError::Threshold(_))));
    }

    #[test]
    fn config_loader_accepts_embedded_and_bare() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = PipelineConfig::default();
        cfg.matching.merge_threshold = 0.3;
        let bare = dir.path().join("bare.json");
        std::fs::write(&bare, to_json(&cfg)).unwrap();
        assert_eq!(load_pipeline_config(&bare).unwrap(), cfg);
        let mut r = report(FitMethod::Ransac, 1, 0, 0);
        r.config = cfg;
        let embedded = dir.path().join("report.json");
        std::fs::write(&embedded, to_json(&r)).unwrap();
        assert_eq!(load_pipeline_config(&embedded).unwrap(), cfg);
        let partial = dir.path().join("partial.json");
        std::fs::write(&partial, r#"{"matching": {"merge_threshold": 0.7}}"#).unwrap();
        assert_eq!(load_pipeline_config(&partial).unwrap().matching.merge_threshold, 0.7);
    }
}
