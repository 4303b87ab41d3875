//! Telemetry, metrics and plot tables.

use std::collections::BTreeMap;
use std::fs::OpenOptions;
use std::path::Path;

use calav_core::metrics::{
    calibration, filter_subset, metrics_report, posterior_histogram, reliability_rows, BinRow,
    MetricsReport,
};
use calav_core::trainer::{stage_trials, EpochTelemetry, PairScores, Stage};
use calav_core::SubsetTag;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> Error + '_ {
    move |e| Error::Input(format!("{}: {e}", path.display()))
}

/// Start a telemetry CSV holding `rows` (the history of a resumed run).
pub fn write_telemetry(path: &Path, rows: &[EpochTelemetry]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    if rows.is_empty() {
        w.write_record([
            "epoch",
            "loss_dml",
            "loss_bfs",
            "loss_ual",
            "h_within",
            "h_between",
        ])
        .map_err(csv_err(path))?;
    }
    for r in rows {
        w.serialize(r).map_err(csv_err(path))?;
    }
    w.flush().map_err(Error::io(path))
}

pub fn append_telemetry(path: &Path, row: &EpochTelemetry) -> Result<()> {
    let file = OpenOptions::new()
        .append(true)
        .open(path)
        .map_err(Error::io(path))?;
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(file);
    w.serialize(row).map_err(csv_err(path))?;
    w.flush().map_err(Error::io(path))
}

pub fn read_telemetry(path: &Path) -> Result<Vec<EpochTelemetry>> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err(path))?;
    r.deserialize()
        .map(|row| row.map_err(csv_err(path)))
        .collect()
}

/// Bin tables with the fixed `bin_center, confidence, accuracy, count`
/// header; empty bins leave the two middle cells blank.
pub fn write_bin_rows(path: &Path, rows: &[BinRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    for r in rows {
        w.serialize(r).map_err(csv_err(path))?;
    }
    w.flush().map_err(Error::io(path))
}

#[derive(Debug, Serialize)]
struct ScoreRow<'a> {
    pair_id: &'a str,
    doc_1: &'a str,
    doc_2: &'a str,
    subset: SubsetTag,
    distance: f64,
    p_dml: f64,
    score: f64,
    p_bfs: f64,
    p_ual: f64,
    a_hat: u8,
    confidence: f64,
}

pub fn write_scores(path: &Path, scores: &[PairScores]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    for s in scores {
        w.serialize(ScoreRow {
            pair_id: &s.pair_id,
            doc_1: &s.doc_1,
            doc_2: &s.doc_2,
            subset: s.subset,
            distance: s.distance,
            p_dml: s.p_dml,
            score: s.score,
            p_bfs: s.p_bfs,
            p_ual: s.p_ual,
            a_hat: s.predicted_same_author() as u8,
            confidence: s.p_ual.max(1.0 - s.p_ual),
        })
        .map_err(csv_err(path))?;
    }
    w.flush().map_err(Error::io(path))
}

/// Metrics of one checkpoint, one report per requested stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalReport {
    pub vocab_sha256: String,
    pub epoch: usize,
    pub subset: Option<SubsetTag>,
    pub n_bins: usize,
    pub n_pairs: usize,
    pub stages: BTreeMap<Stage, MetricsReport>,
}

pub fn evaluate_report(
    scores: &[PairScores],
    stages: &[Stage],
    subset: Option<SubsetTag>,
    n_bins: usize,
    vocab_sha256: &str,
    epoch: usize,
) -> Result<EvalReport> {
    let mut out = BTreeMap::new();
    let mut n_pairs = 0;
    for &stage in stages {
        let trials = filter_subset(&stage_trials(scores, stage), subset);
        if trials.is_empty() {
            return Err(Error::Input("no pairs left to evaluate".into()));
        }
        n_pairs = trials.len();
        let report = metrics_report(&trials, n_bins).map_err(|e| Error::Input(e.to_string()))?;
        out.insert(stage, report);
    }
    Ok(EvalReport {
        vocab_sha256: vocab_sha256.into(),
        epoch,
        subset,
        n_bins,
        n_pairs,
        stages: out,
    })
}

/// Reliability table of a stage, after the subset filter.
pub fn reliability_table(
    scores: &[PairScores],
    stage: Stage,
    subset: Option<SubsetTag>,
    n_bins: usize,
) -> Result<Vec<BinRow>> {
    let trials = filter_subset(&stage_trials(scores, stage), subset);
    let cal = calibration(&trials, n_bins).map_err(|e| Error::Input(e.to_string()))?;
    Ok(reliability_rows(&cal))
}

/// Posterior histogram of a stage restricted to one subset (or all pairs).
pub fn histogram_table(
    scores: &[PairScores],
    stage: Stage,
    subset: Option<SubsetTag>,
    n_bins: usize,
) -> Vec<BinRow> {
    posterior_histogram(&stage_trials(scores, stage), subset, n_bins).rows
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

/// Mean and sample standard deviation per stage and metric over several
/// checkpoints. A metric missing from any report (AUC on a single class)
/// is left out.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AveragedReport {
    pub n_checkpoints: usize,
    pub epochs: Vec<usize>,
    pub subset: Option<SubsetTag>,
    pub n_bins: usize,
    pub stages: BTreeMap<Stage, BTreeMap<String, MeanStd>>,
}

fn metric_values(r: &MetricsReport) -> [(&'static str, Option<f64>); 9] {
    [
        ("auc", r.auc),
        ("c_at_1", Some(r.c_at_1)),
        ("f_05_u", Some(r.f_05_u)),
        ("f1", Some(r.f1)),
        ("brier", Some(r.brier)),
        ("overall", r.overall),
        ("conf_mean", Some(r.conf_mean)),
        ("ece", Some(r.ece)),
        ("mce", Some(r.mce)),
    ]
}

pub fn mean_std(xs: &[f64]) -> MeanStd {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let std = if xs.len() > 1 {
        (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    MeanStd { mean, std }
}

pub fn average_reports(reports: &[EvalReport]) -> Result<AveragedReport> {
    let first = reports
        .first()
        .ok_or_else(|| Error::Input("nothing to average".into()))?;
    let mut stages = BTreeMap::new();
    for &stage in first.stages.keys() {
        let mut per_metric: BTreeMap<String, MeanStd> = BTreeMap::new();
        for (k, (name, _)) in metric_values(&first.stages[&stage]).into_iter().enumerate() {
            let values: Option<Vec<f64>> = reports
                .iter()
                .map(|r| metric_values(&r.stages[&stage])[k].1)
                .collect();
            if let Some(values) = values {
                per_metric.insert(name.to_string(), mean_std(&values));
            }
        }
        stages.insert(stage, per_metric);
    }
    Ok(AveragedReport {
        n_checkpoints: reports.len(),
        epochs: reports.iter().map(|r| r.epoch).collect(),
        subset: first.subset,
        n_bins: first.n_bins,
        stages,
    })
}

/// `stage, metric, mean, std` rows.
pub fn write_summary(path: &Path, avg: &AveragedReport) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    w.write_record(["stage", "metric", "mean", "std"])
        .map_err(csv_err(path))?;
    for (stage, metrics) in &avg.stages {
        for (name, v) in metrics {
            w.write_record([
                stage.as_str(),
                name,
                &v.mean.to_string(),
                &v.std.to_string(),
            ])
            .map_err(csv_err(path))?;
        }
    }
    w.flush().map_err(Error::io(path))
}
