//! Cross-validated evaluation: fold plans, metrics, significance tests.
//!
//! The central invariant is fold hygiene. Normalization statistics and
//! SMOTE oversampling are fitted on the training side of each fold and
//! never see test rows; every fold records a [`FoldAudit`] proving it, so a
//! leaky refactor fails loudly instead of inflating scores quietly.

pub mod ablate;
pub mod importance;

use crate::dataset::{smote, DatasetError, NormStats};
use crate::models::{train_model, ModelConfig, ModelError, TrainedModel};
use crate::seeding::stream_seed;
use ndarray::{Array2, Axis};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("need at least {k} samples for {k} folds, got {n}")]
    TooFewSamples { n: usize, k: usize },
    #[error("fold count must be at least 2, got {0}")]
    BadFoldCount(usize),
    #[error("grouped folding needs at least {k} distinct groups, got {groups}")]
    TooFewGroups { groups: usize, k: usize },
    #[error("grouped folding requested without group ids")]
    MissingGroups,
    #[error("a fold came out empty; too few samples of some class")]
    EmptyFold,
    #[error("{left} values against {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("need at least 2 paired values, got {0}")]
    TooFewPairs(usize),
    #[error("label {label} out of range for {n_classes} classes")]
    LabelOutOfRange { label: usize, n_classes: usize },
    #[error("expected the full feature matrix ({expected} columns), got {got}")]
    WrongFeatureCount { expected: usize, got: usize },
    #[error("importance method {method} does not apply to this model")]
    WrongModelForMethod { method: &'static str },
    #[error("unknown importance method {0:?}")]
    UnknownMethod(String),
    #[error("bad feature set spec {0:?}")]
    BadFeatureSet(String),
    #[error("no models were kept; rerun with keep_models")]
    NoKeptModels,
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
}

/// Disjoint test-index sets covering `0..n`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    folds: Vec<Vec<usize>>,
    n: usize,
}

impl FoldPlan {
    pub fn k(&self) -> usize {
        self.folds.len()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn test_indices(&self, fold: usize) -> &[usize] {
        &self.folds[fold]
    }

    /// Train and test row indices of one fold, both ascending.
    pub fn split(&self, fold: usize) -> (Vec<usize>, Vec<usize>) {
        let test = &self.folds[fold];
        let mut in_test = vec![false; self.n];
        for &i in test {
            in_test[i] = true;
        }
        let train = (0..self.n).filter(|&i| !in_test[i]).collect();
        (train, test.clone())
    }

    fn validate(folds: Vec<Vec<usize>>, n: usize) -> Result<FoldPlan, EvalError> {
        let mut seen = vec![false; n];
        let mut covered = 0;
        for fold in &folds {
            if fold.is_empty() {
                return Err(EvalError::EmptyFold);
            }
            for &i in fold {
                assert!(i < n && !seen[i], "fold construction produced index {i} twice");
                seen[i] = true;
                covered += 1;
            }
        }
        assert_eq!(covered, n, "fold construction must cover every row");
        let mut folds = folds;
        for fold in folds.iter_mut() {
            fold.sort_unstable();
        }
        Ok(FoldPlan { folds, n })
    }
}

fn check_fold_args(n: usize, k: usize) -> Result<(), EvalError> {
    if k < 2 {
        return Err(EvalError::BadFoldCount(k));
    }
    if n < k {
        return Err(EvalError::TooFewSamples { n, k });
    }
    Ok(())
}

/// Shuffled k-fold split: permute `0..n`, then cut contiguously with the
/// first `n % k` folds one longer.
pub fn kfold(n: usize, k: usize, seed: u64) -> Result<FoldPlan, EvalError> {
    check_fold_args(n, k)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let base = n / k;
    let extra = n % k;
    let mut folds = Vec::with_capacity(k);
    let mut cursor = 0;
    for f in 0..k {
        let take = base + usize::from(f < extra);
        folds.push(order[cursor..cursor + take].to_vec());
        cursor += take;
    }
    FoldPlan::validate(folds, n)
}

/// K-fold with per-class proportions preserved. Leftover samples of each
/// class rotate across folds so fold sizes stay balanced.
pub fn stratified_kfold(y: &[usize], k: usize, seed: u64) -> Result<FoldPlan, EvalError> {
    let n = y.len();
    check_fold_args(n, k)?;
    let n_classes = y.iter().copied().max().unwrap_or(0) + 1;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut folds = vec![Vec::new(); k];
    let mut offset = 0;
    for class in 0..n_classes {
        let mut idx: Vec<usize> = (0..n).filter(|&i| y[i] == class).collect();
        idx.shuffle(&mut rng);
        let base = idx.len() / k;
        let extra = idx.len() % k;
        let mut cursor = 0;
        for (f, fold) in folds.iter_mut().enumerate() {
            let take = base + usize::from((f + k - offset) % k < extra);
            fold.extend(&idx[cursor..cursor + take]);
            cursor += take;
        }
        offset = (offset + extra) % k;
    }
    FoldPlan::validate(folds, n)
}

/// K-fold where all rows sharing a group id land in the same fold; groups
/// are shuffled, then dealt round-robin.
pub fn grouped_kfold(groups: &[u32], k: usize, seed: u64) -> Result<FoldPlan, EvalError> {
    let n = groups.len();
    check_fold_args(n, k)?;
    let mut unique: Vec<u32> = Vec::new();
    for &g in groups {
        if !unique.contains(&g) {
            unique.push(g);
        }
    }
    if unique.len() < k {
        return Err(EvalError::TooFewGroups { groups: unique.len(), k });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    unique.shuffle(&mut rng);
    let mut fold_of_group = std::collections::HashMap::new();
    for (i, g) in unique.iter().enumerate() {
        fold_of_group.insert(*g, i % k);
    }
    let mut folds = vec![Vec::new(); k];
    for (i, g) in groups.iter().enumerate() {
        folds[fold_of_group[g]].push(i);
    }
    FoldPlan::validate(folds, n)
}

/// How test folds are formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FoldStrategy {
    Plain,
    Stratified,
    Grouped,
}

/// Build a plan for any strategy from the same inputs.
pub fn build_plan(
    strategy: FoldStrategy,
    y: &[usize],
    groups: Option<&[u32]>,
    k: usize,
    seed: u64,
) -> Result<FoldPlan, EvalError> {
    match strategy {
        FoldStrategy::Plain => kfold(y.len(), k, seed),
        FoldStrategy::Stratified => stratified_kfold(y, k, seed),
        FoldStrategy::Grouped => {
            let groups = groups.ok_or(EvalError::MissingGroups)?;
            if groups.len() != y.len() {
                return Err(EvalError::LengthMismatch { left: groups.len(), right: y.len() });
            }
            grouped_kfold(groups, k, seed)
        }
    }
}

/// Accuracy, precision, recall, F1. For binary labels these are the
/// positive-class values; otherwise precision and recall are macro averages
/// and F1 is their harmonic mean.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSet {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl MetricSet {
    pub fn mean_of(sets: &[MetricSet]) -> MetricSet {
        let n = sets.len().max(1) as f64;
        MetricSet {
            accuracy: sets.iter().map(|m| m.accuracy).sum::<f64>() / n,
            precision: sets.iter().map(|m| m.precision).sum::<f64>() / n,
            recall: sets.iter().map(|m| m.recall).sum::<f64>() / n,
            f1: sets.iter().map(|m| m.f1).sum::<f64>() / n,
        }
    }
}

/// Row = true class, column = predicted class.
pub fn confusion_matrix(
    y_true: &[usize],
    y_pred: &[usize],
    n_classes: usize,
) -> Result<Array2<u64>, EvalError> {
    if y_true.len() != y_pred.len() {
        return Err(EvalError::LengthMismatch { left: y_true.len(), right: y_pred.len() });
    }
    let mut m = Array2::zeros((n_classes, n_classes));
    for (&t, &p) in y_true.iter().zip(y_pred) {
        let bad = t.max(p);
        if bad >= n_classes {
            return Err(EvalError::LabelOutOfRange { label: bad, n_classes });
        }
        m[(t, p)] += 1;
    }
    Ok(m)
}

fn ratio_or_zero(num: f64, den: f64, note: &str, flags: &mut Vec<String>) -> f64 {
    if den == 0.0 {
        flags.push(note.to_string());
        0.0
    } else {
        num / den
    }
}

/// Metrics with class 1 as the positive class.
pub fn metrics_binary(
    y_true: &[usize],
    y_pred: &[usize],
) -> Result<(MetricSet, Vec<String>), EvalError> {
    let m = confusion_matrix(y_true, y_pred, 2)?;
    let (tp, fp, tn, fneg) = (m[(1, 1)] as f64, m[(0, 1)] as f64, m[(0, 0)] as f64, m[(1, 0)] as f64);
    let n = tp + fp + tn + fneg;
    let mut flags = Vec::new();
    let accuracy = (tp + tn) / n;
    let precision = ratio_or_zero(tp, tp + fp, "no positive predictions; precision set to 0", &mut flags);
    let recall = ratio_or_zero(tp, tp + fneg, "no positive truths; recall set to 0", &mut flags);
    let f1 = ratio_or_zero(
        2.0 * precision * recall,
        precision + recall,
        "precision and recall both 0; f1 set to 0",
        &mut flags,
    );
    Ok((MetricSet { accuracy, precision, recall, f1 }, flags))
}

/// Macro-averaged metrics over `n_classes` classes. Accuracy is the summed
/// diagonal over the total. A class absent from the truth or from the
/// predictions contributes a zero term and a flag.
pub fn metrics_macro(
    y_true: &[usize],
    y_pred: &[usize],
    n_classes: usize,
) -> Result<(MetricSet, Vec<String>), EvalError> {
    let m = confusion_matrix(y_true, y_pred, n_classes)?;
    let n = y_true.len() as f64;
    let mut flags = Vec::new();
    let mut precision = 0.0;
    let mut recall = 0.0;
    let mut correct = 0.0;
    for c in 0..n_classes {
        let tp = m[(c, c)] as f64;
        correct += tp;
        let predicted: f64 = (0..n_classes).map(|t| m[(t, c)] as f64).sum();
        let actual: f64 = (0..n_classes).map(|p| m[(c, p)] as f64).sum();
        precision += ratio_or_zero(
            tp,
            predicted,
            &format!("class {c} never predicted; its precision term is 0"),
            &mut flags,
        );
        recall += ratio_or_zero(
            tp,
            actual,
            &format!("class {c} absent from the truth; its recall term is 0"),
            &mut flags,
        );
    }
    precision /= n_classes as f64;
    recall /= n_classes as f64;
    let f1 = ratio_or_zero(
        2.0 * precision * recall,
        precision + recall,
        "macro precision and recall both 0; f1 set to 0",
        &mut flags,
    );
    Ok((MetricSet { accuracy: correct / n, precision, recall, f1 }, flags))
}

/// Binary metrics for 2 classes, macro metrics otherwise.
pub fn metrics_for(
    n_classes: usize,
    y_true: &[usize],
    y_pred: &[usize],
) -> Result<(MetricSet, Vec<String>), EvalError> {
    if n_classes == 2 {
        metrics_binary(y_true, y_pred)
    } else {
        metrics_macro(y_true, y_pred, n_classes)
    }
}

/// Two-sided paired t-test result.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairedTTest {
    pub t: f64,
    pub df: f64,
    pub p: f64,
    pub mean_diff: f64,
    /// All differences identical: t is ill-defined and p collapses to
    /// 1 (no difference) or 0 (constant nonzero difference).
    pub degenerate: bool,
}

/// Two-sided paired t-test of `a` against `b`.
pub fn paired_ttest(a: &[f64], b: &[f64]) -> Result<PairedTTest, EvalError> {
    if a.len() != b.len() {
        return Err(EvalError::LengthMismatch { left: a.len(), right: b.len() });
    }
    if a.len() < 2 {
        return Err(EvalError::TooFewPairs(a.len()));
    }
    let n = a.len() as f64;
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let mean = diffs.iter().sum::<f64>() / n;
    let var = diffs.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / (n - 1.0);
    let df = n - 1.0;
    if var == 0.0 {
        let (t, p) = if mean == 0.0 { (0.0, 1.0) } else { (f64::INFINITY * mean.signum(), 0.0) };
        return Ok(PairedTTest { t, df, p, mean_diff: mean, degenerate: true });
    }
    let t = mean / (var / n).sqrt();
    let dist = StudentsT::new(0.0, 1.0, df).expect("df >= 1");
    let p = 2.0 * (1.0 - dist.cdf(t.abs()));
    Ok(PairedTTest { t, df, p, mean_diff: mean, degenerate: false })
}

/// Hygiene evidence recorded per fold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldAudit {
    pub fold: usize,
    pub train_rows: usize,
    pub test_rows: usize,
    /// Synthetic rows SMOTE appended to the training side.
    pub smote_added: usize,
    /// Every synthetic row interpolates two original rows; true when all of
    /// those parents are training rows (checked against original indices).
    pub smote_parents_in_train: bool,
    /// True when the normalization statistics match a recomputation from
    /// the training rows alone.
    pub norm_fit_on_train_only: bool,
}

#[derive(Debug, Clone)]
pub struct CvOptions {
    pub folds: usize,
    pub seed: u64,
    pub strategy: FoldStrategy,
    pub normalize: bool,
    pub smote: bool,
    pub smote_k: usize,
    pub keep_models: bool,
}

impl Default for CvOptions {
    fn default() -> Self {
        CvOptions {
            folds: 10,
            seed: 0,
            strategy: FoldStrategy::Plain,
            normalize: true,
            smote: true,
            smote_k: 5,
            keep_models: false,
        }
    }
}

/// Everything a cross-validation run produced.
#[derive(Debug, Clone, Serialize)]
pub struct CvResult {
    pub fold_metrics: Vec<MetricSet>,
    pub mean: MetricSet,
    pub audits: Vec<FoldAudit>,
    pub flags: Vec<String>,
    /// Out-of-fold prediction for every row.
    pub oof_predictions: Vec<usize>,
    pub plan: FoldPlan,
    /// One model per fold when `keep_models` was set, else empty.
    #[serde(skip)]
    pub models: Vec<TrainedModel>,
}

impl CvResult {
    pub fn fold_accuracies(&self) -> Vec<f64> {
        self.fold_metrics.iter().map(|m| m.accuracy).collect()
    }

    /// True when every fold's audit shows clean preprocessing.
    pub fn hygienic(&self) -> bool {
        self.audits.iter().all(|a| a.smote_parents_in_train && a.norm_fit_on_train_only)
    }
}

/// Cross-validate `model` over a fresh fold plan. Per fold: fit
/// normalization on the training rows, oversample the training rows with
/// SMOTE, train, and score the untouched test rows.
pub fn cross_validate(
    x: &Array2<f64>,
    y: &[usize],
    groups: Option<&[u32]>,
    model: &ModelConfig,
    options: &CvOptions,
) -> Result<CvResult, EvalError> {
    let plan = build_plan(options.strategy, y, groups, options.folds, options.seed)?;
    cross_validate_with_plan(x, y, model, options, &plan)
}

/// [`cross_validate`] against a caller-supplied plan, so several runs can
/// share identical folds.
pub fn cross_validate_with_plan(
    x: &Array2<f64>,
    y: &[usize],
    model: &ModelConfig,
    options: &CvOptions,
    plan: &FoldPlan,
) -> Result<CvResult, EvalError> {
    if x.nrows() != y.len() {
        return Err(EvalError::LengthMismatch { left: x.nrows(), right: y.len() });
    }
    if plan.n() != y.len() {
        return Err(EvalError::LengthMismatch { left: plan.n(), right: y.len() });
    }
    let mut fold_metrics = Vec::with_capacity(plan.k());
    let mut audits = Vec::with_capacity(plan.k());
    let mut flags = Vec::new();
    let mut oof = vec![0usize; y.len()];
    let mut models = Vec::new();

    for fold in 0..plan.k() {
        let (train_idx, test_idx) = plan.split(fold);
        let y_train: Vec<usize> = train_idx.iter().map(|&i| y[i]).collect();
        let y_test: Vec<usize> = test_idx.iter().map(|&i| y[i]).collect();
        let mut x_train = x.select(Axis(0), &train_idx);
        let mut x_test = x.select(Axis(0), &test_idx);

        let mut norm_ok = true;
        if options.normalize {
            let stats = NormStats::fit(&x_train);
            // Leak check: the stats must be reproducible from the original
            // matrix restricted to training rows.
            norm_ok = stats == NormStats::fit_rows(x, &train_idx);
            x_train = stats.transform(&x_train);
            x_test = stats.transform(&x_test);
        }

        let mut smote_added = 0;
        let mut parents_ok = true;
        let mut y_fit = y_train.clone();
        if options.smote {
            let balanced =
                smote(&x_train, &y_train, options.smote_k, stream_seed(options.seed, fold as u64))?;
            smote_added = balanced.parents.len();
            // Parents index into x_train; map back to original row ids and
            // demand they all sit on the training side.
            let in_test: std::collections::HashSet<usize> = test_idx.iter().copied().collect();
            parents_ok = balanced.parents.iter().all(|p| {
                !in_test.contains(&train_idx[p.base]) && !in_test.contains(&train_idx[p.neighbor])
            });
            x_train = balanced.features;
            y_fit = balanced.labels;
        }

        let fold_cfg = ModelConfig {
            seed: stream_seed(model.seed, fold as u64),
            ..model.clone()
        };
        let trained = train_model(&fold_cfg, &x_train, &y_fit)?;
        let preds = trained.predict(&x_test)?;
        for (&row, &p) in test_idx.iter().zip(&preds) {
            oof[row] = p;
        }
        let (metrics, fold_flags) = metrics_for(model.n_classes, &y_test, &preds)?;
        for flag in fold_flags {
            flags.push(format!("fold {fold}: {flag}"));
        }
        fold_metrics.push(metrics);
        audits.push(FoldAudit {
            fold,
            train_rows: train_idx.len(),
            test_rows: test_idx.len(),
            smote_added,
            smote_parents_in_train: parents_ok,
            norm_fit_on_train_only: norm_ok,
        });
        if options.keep_models {
            models.push(trained);
        }
    }

    Ok(CvResult {
        mean: MetricSet::mean_of(&fold_metrics),
        fold_metrics,
        audits,
        flags,
        oof_predictions: oof,
        plan: plan.clone(),
        models,
    })
}

/// Cross-validation twice on shared folds: all features against the
/// individual block only, with a paired t-test over fold accuracies.
#[derive(Debug, Clone, Serialize)]
pub struct SynchronyComparison {
    pub with_sync: CvResult,
    pub without_sync: CvResult,
    /// Mean accuracy gain from the synchrony block.
    pub delta_accuracy: f64,
    pub ttest: PairedTTest,
}

pub fn compare_synchrony(
    x: &Array2<f64>,
    y: &[usize],
    groups: Option<&[u32]>,
    model: &ModelConfig,
    options: &CvOptions,
) -> Result<SynchronyComparison, EvalError> {
    use crate::features::{N_INDIVIDUAL, N_TOTAL};
    if x.ncols() != N_TOTAL {
        return Err(EvalError::WrongFeatureCount { expected: N_TOTAL, got: x.ncols() });
    }
    let plan = build_plan(options.strategy, y, groups, options.folds, options.seed)?;
    let with_sync = cross_validate_with_plan(x, y, model, options, &plan)?;
    let individual = x.select(Axis(1), &(0..N_INDIVIDUAL).collect::<Vec<_>>());
    let without_sync = cross_validate_with_plan(&individual, y, model, options, &plan)?;
    let ttest = paired_ttest(&with_sync.fold_accuracies(), &without_sync.fold_accuracies())?;
    Ok(SynchronyComparison {
        delta_accuracy: with_sync.mean.accuracy - without_sync.mean.accuracy,
        with_sync,
        without_sync,
        ttest,
    })
}
