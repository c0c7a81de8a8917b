//! Report payloads and file writers. Every command computes its full result
//! first and only then touches the filesystem, so a failed run never leaves
//! a half-written report behind.

use anyhow::Context;
use dyadflow_core::eval::ablate::AblationRow;
use dyadflow_core::eval::{MetricSet, PairedTTest};
use serde::Serialize;
use std::path::Path;

/// Common header every report carries.
#[derive(Debug, Clone, Serialize)]
pub struct RunInfo {
    pub tool_version: &'static str,
    pub command: &'static str,
    /// Where the rows came from: a data root or a feature CSV.
    pub source: String,
    pub task: String,
    pub n_rows: usize,
    pub n_features: usize,
    pub class_counts: Vec<usize>,
    pub folds: usize,
    pub seed: u64,
    pub strategy: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub feature_set: Option<String>,
    pub paper_mode: bool,
    pub normalize_global: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SynchronySection {
    pub with_accuracy: f64,
    pub without_accuracy: f64,
    pub delta_accuracy: f64,
    pub ttest: PairedTTest,
}

#[derive(Debug, Clone, Serialize)]
pub struct ModelSection {
    pub model: String,
    /// Digest of the full model configuration, for pairing results with
    /// saved models.
    pub config_digest: String,
    pub mean: MetricSet,
    pub fold_metrics: Vec<MetricSet>,
    /// False when a fold audit caught preprocessing crossing the split.
    pub hygiene_clean: bool,
    pub flags: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub synchrony: Option<SynchronySection>,
}

#[derive(Debug, Serialize)]
pub struct TrainEvalReport {
    pub run: RunInfo,
    pub models: Vec<ModelSection>,
}

#[derive(Debug, Serialize)]
pub struct AblateReport {
    pub run: RunInfo,
    pub model: String,
    pub config_digest: String,
    pub rows: Vec<AblationRow>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RankedFeature {
    pub rank: usize,
    /// Column index in the 272-wide feature matrix.
    pub column: usize,
    pub name: String,
    pub value: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ShapRunMeta {
    pub coalitions: usize,
    pub n_permutations: usize,
    pub rows_explained: usize,
}

#[derive(Debug, Serialize)]
pub struct ImportanceReport {
    pub run: RunInfo,
    pub model: String,
    pub config_digest: String,
    pub method: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shap: Option<ShapRunMeta>,
    pub top: Vec<RankedFeature>,
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> anyhow::Result<()> {
    let mut text = serde_json::to_string_pretty(value).context("serializing report")?;
    text.push('\n');
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn write_csv_records(
    path: &Path,
    header: &[&str],
    rows: &[Vec<String>],
) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    let bytes = w.into_inner().context("flushing csv")?;
    std::fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

/// Per-fold metric rows for each model, with a trailing "mean" row.
pub fn write_metrics_csv(path: &Path, models: &[ModelSection]) -> anyhow::Result<()> {
    let mut rows = Vec::new();
    for section in models {
        for (fold, m) in section.fold_metrics.iter().enumerate() {
            rows.push(metric_row(&section.model, &fold.to_string(), m));
        }
        rows.push(metric_row(&section.model, "mean", &section.mean));
    }
    write_csv_records(path, &["model", "fold", "accuracy", "precision", "recall", "f1"], &rows)
}

fn metric_row(model: &str, fold: &str, m: &MetricSet) -> Vec<String> {
    vec![
        model.to_string(),
        fold.to_string(),
        m.accuracy.to_string(),
        m.precision.to_string(),
        m.recall.to_string(),
        m.f1.to_string(),
    ]
}

pub fn write_ablation_csv(path: &Path, rows: &[AblationRow]) -> anyhow::Result<()> {
    let records: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.spec.clone(),
                r.n_features.to_string(),
                r.metrics.accuracy.to_string(),
                r.metrics.precision.to_string(),
                r.metrics.recall.to_string(),
                r.metrics.f1.to_string(),
                r.delta_accuracy_pp.to_string(),
            ]
        })
        .collect();
    write_csv_records(
        path,
        &["feature_set", "n_features", "accuracy", "precision", "recall", "f1", "delta_accuracy_pp"],
        &records,
    )
}

pub fn write_importance_csv(path: &Path, top: &[RankedFeature]) -> anyhow::Result<()> {
    let records: Vec<Vec<String>> = top
        .iter()
        .map(|f| vec![f.rank.to_string(), f.column.to_string(), f.name.clone(), f.value.to_string()])
        .collect();
    write_csv_records(path, &["rank", "column", "name", "value"], &records)
}
