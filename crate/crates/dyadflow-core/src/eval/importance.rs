//! Feature attribution: linear coefficients, forest impurity, SHAP values.

use super::EvalError;
use crate::models::TrainedModel;
use crate::parallel::par_map_range;
use crate::seeding::stream_seed;
use ndarray::{Array1, Array2, Axis};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ImportanceMethod {
    Coef,
    Mdi,
    Shap,
}

impl ImportanceMethod {
    pub fn id(self) -> &'static str {
        match self {
            ImportanceMethod::Coef => "coef",
            ImportanceMethod::Mdi => "mdi",
            ImportanceMethod::Shap => "shap",
        }
    }
}

impl fmt::Display for ImportanceMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for ImportanceMethod {
    type Err = EvalError;

    fn from_str(s: &str) -> Result<Self, EvalError> {
        match s.trim().to_ascii_lowercase().as_str() {
            "coef" => Ok(ImportanceMethod::Coef),
            "mdi" => Ok(ImportanceMethod::Mdi),
            "shap" => Ok(ImportanceMethod::Shap),
            _ => Err(EvalError::UnknownMethod(s.to_string())),
        }
    }
}

/// Linear-coefficient importance. Binary models give the signed difference
/// `w_pos - w_neg` (positive pushes class 1); with more classes the sign has
/// no single direction, so the mean absolute weight per feature is used.
pub fn importance_coef(model: &TrainedModel) -> Result<Vec<f64>, EvalError> {
    let linear = match model {
        TrainedModel::Logistic(m) | TrainedModel::Svm(m) => m,
        _ => return Err(EvalError::WrongModelForMethod { method: "coef" }),
    };
    let w = &linear.weights;
    let values = if linear.n_classes() == 2 {
        (0..w.ncols()).map(|j| w[(1, j)] - w[(0, j)]).collect()
    } else {
        (0..w.ncols())
            .map(|j| w.column(j).iter().map(|v| v.abs()).sum::<f64>() / w.nrows() as f64)
            .collect()
    };
    Ok(values)
}

/// Mean decrease in Gini impurity, normalized to sum 1.
pub fn importance_mdi(model: &TrainedModel) -> Result<Vec<f64>, EvalError> {
    match model {
        TrainedModel::Forest(f) => Ok(f.feature_importance().to_vec()),
        TrainedModel::Tree(t) => Ok(t.feature_importance()),
        _ => Err(EvalError::WrongModelForMethod { method: "mdi" }),
    }
}

/// Elementwise mean of a per-model importance over the models kept from a
/// cross-validation run. SHAP is data-dependent and has no fold-mean here.
pub fn fold_mean_importance(
    models: &[TrainedModel],
    method: ImportanceMethod,
) -> Result<Vec<f64>, EvalError> {
    if models.is_empty() {
        return Err(EvalError::NoKeptModels);
    }
    let per_model = |m: &TrainedModel| match method {
        ImportanceMethod::Coef => importance_coef(m),
        ImportanceMethod::Mdi => importance_mdi(m),
        ImportanceMethod::Shap => Err(EvalError::WrongModelForMethod { method: "shap" }),
    };
    let mut acc = per_model(&models[0])?;
    for model in &models[1..] {
        let v = per_model(model)?;
        for (a, b) in acc.iter_mut().zip(v) {
            *a += b;
        }
    }
    for a in acc.iter_mut() {
        *a /= models.len() as f64;
    }
    Ok(acc)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapConfig {
    /// Evaluation budget per explained row; one permutation chain costs
    /// d + 1 model evaluations, so `n_permutations = coalitions / (d + 1)`,
    /// floored at 1.
    pub coalitions: usize,
    pub seed: u64,
}

impl Default for ShapConfig {
    fn default() -> Self {
        ShapConfig { coalitions: 256, seed: 0 }
    }
}

/// SHAP values for the model's decision score of the predicted class.
#[derive(Debug, Clone, Serialize)]
pub struct ShapResult {
    /// `phi[(i, j)]`: contribution of feature j to row i's explained score.
    pub phi: Array2<f64>,
    /// The class each row is explained for (the model's prediction).
    pub targets: Vec<usize>,
    /// Score of the all-baseline input, per row's target class.
    pub base: Vec<f64>,
    /// Score of the intact row.
    pub fx: Vec<f64>,
    pub n_permutations: usize,
    /// Mean |phi| per feature, over the explained rows.
    pub importance: Vec<f64>,
}

/// Permutation-chain SHAP on the model's raw decision scores (logits, not
/// probabilities). Absent features take the background column means; each
/// permutation flips features on one by one, attributing the score change to
/// the flipped feature. Every chain telescopes from the baseline score to
/// the intact score, so additivity `base + sum(phi) = fx` holds exactly.
pub fn shap_values(
    model: &TrainedModel,
    background: &Array2<f64>,
    explain: &Array2<f64>,
    cfg: &ShapConfig,
) -> Result<ShapResult, EvalError> {
    let d = model.n_features();
    for (matrix, label) in [(background, "background"), (explain, "explain")] {
        if matrix.ncols() != d {
            return Err(EvalError::WrongFeatureCount { expected: d, got: matrix.ncols() });
        }
        assert!(matrix.nrows() > 0, "{label} matrix must have rows");
    }
    let n_perms = (cfg.coalitions / (d + 1)).max(1);
    let baseline = background.mean_axis(Axis(0)).expect("nonempty background");
    let targets = model.predict(explain)?;

    let rows: Vec<(Vec<f64>, f64, f64)> = par_map_range(explain.nrows(), |i| {
        let target = targets[i];
        let x = explain.row(i);
        let mut phi = vec![0.0; d];
        let mut base = 0.0;
        let mut fx = 0.0;
        for p in 0..n_perms {
            let mut rng =
                ChaCha8Rng::seed_from_u64(stream_seed(stream_seed(cfg.seed, i as u64), p as u64));
            let mut order: Vec<usize> = (0..d).collect();
            order.shuffle(&mut rng);

            // Chain row 0 is the all-baseline point; row t+1 additionally
            // fixes feature order[t] to its true value.
            let mut chain = Array2::zeros((d + 1, d));
            let mut current: Array1<f64> = baseline.clone();
            chain.row_mut(0).assign(&current);
            for (t, &j) in order.iter().enumerate() {
                current[j] = x[j];
                chain.row_mut(t + 1).assign(&current);
            }
            let scores = model.decision_scores(&chain).expect("widths validated");
            for (t, &j) in order.iter().enumerate() {
                phi[j] += scores[(t + 1, target)] - scores[(t, target)];
            }
            // Identical for every permutation of this row.
            base = scores[(0, target)];
            fx = scores[(d, target)];
        }
        for v in phi.iter_mut() {
            *v /= n_perms as f64;
        }
        (phi, base, fx)
    });

    let n = explain.nrows();
    let mut phi = Array2::zeros((n, d));
    let mut base = Vec::with_capacity(n);
    let mut fx = Vec::with_capacity(n);
    for (i, (row_phi, row_base, row_fx)) in rows.into_iter().enumerate() {
        for (j, v) in row_phi.into_iter().enumerate() {
            phi[(i, j)] = v;
        }
        base.push(row_base);
        fx.push(row_fx);
    }
    let importance = (0..d)
        .map(|j| phi.column(j).iter().map(|v| v.abs()).sum::<f64>() / n as f64)
        .collect();
    Ok(ShapResult { phi, targets, base, fx, n_permutations: n_perms, importance })
}

/// Feature indices ordered by descending |value|; ties keep the lower index.
pub fn rank_by_magnitude(values: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| {
        values[b]
            .abs()
            .partial_cmp(&values[a].abs())
            .expect("finite importances")
            .then(a.cmp(&b))
    });
    idx
}
