//! Linear classifiers: multinomial logistic regression and a one-vs-rest
//! linear SVM. Both are full-batch (sub)gradient methods with zero init, so
//! training is deterministic without any RNG.

use ndarray::{Array1, Array2, Axis};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LogisticParams {
    pub learning_rate: f64,
    pub epochs: usize,
    /// L2 strength on the weights; the bias is left unpenalized.
    pub l2: f64,
}

impl Default for LogisticParams {
    fn default() -> Self {
        LogisticParams { learning_rate: 0.1, epochs: 500, l2: 1e-4 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SvmParams {
    /// Inverse regularization; the primal weight decay is 1 / (c * n).
    pub c: f64,
    pub epochs: usize,
}

impl Default for SvmParams {
    fn default() -> Self {
        SvmParams { c: 1.0, epochs: 500 }
    }
}

/// Weights and bias of any linear decision rule, one row per class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
}

impl LinearModel {
    pub fn n_classes(&self) -> usize {
        self.weights.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.weights.ncols()
    }

    /// Raw per-class scores `x W^T + b`.
    pub fn scores(&self, x: &Array2<f64>) -> Array2<f64> {
        x.dot(&self.weights.t()) + &self.bias
    }
}

/// Row-wise softmax, stabilized by max subtraction.
pub(crate) fn softmax_rows(scores: &mut Array2<f64>) {
    for mut row in scores.rows_mut() {
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            sum += *v;
        }
        for v in row.iter_mut() {
            *v /= sum;
        }
    }
}

/// Multinomial logistic regression by full-batch gradient descent on the
/// mean cross-entropy, starting from zero weights.
pub fn train_logistic(
    params: &LogisticParams,
    x: &Array2<f64>,
    y: &[usize],
    n_classes: usize,
) -> LinearModel {
    let n = x.nrows() as f64;
    let mut weights = Array2::zeros((n_classes, x.ncols()));
    let mut bias = Array1::zeros(n_classes);
    for _ in 0..params.epochs {
        let mut p = x.dot(&weights.t()) + &bias;
        softmax_rows(&mut p);
        for (i, &c) in y.iter().enumerate() {
            p[(i, c)] -= 1.0;
        }
        let mut grad_w = p.t().dot(x);
        grad_w /= n;
        grad_w.scaled_add(params.l2, &weights);
        let grad_b = p.sum_axis(Axis(0)) / n;
        weights.scaled_add(-params.learning_rate, &grad_w);
        bias.scaled_add(-params.learning_rate, &grad_b);
    }
    LinearModel { weights, bias }
}

/// One-vs-rest linear SVM trained by a deterministic full-batch variant of
/// the pegasos subgradient method: decay lambda = 1 / (c n), step
/// eta_t = 1 / (lambda (t + 1)). The bias is updated from the hinge term
/// only, without decay.
pub fn train_svm(params: &SvmParams, x: &Array2<f64>, y: &[usize], n_classes: usize) -> LinearModel {
    let n = x.nrows();
    let inv_n = 1.0 / n as f64;
    let lambda = 1.0 / (params.c * n as f64);
    let mut weights: Array2<f64> = Array2::zeros((n_classes, x.ncols()));
    let mut bias: Array1<f64> = Array1::zeros(n_classes);
    for t in 0..params.epochs {
        let eta = 1.0 / (lambda * (t + 1) as f64);
        let margins = x.dot(&weights.t()) + &bias;
        for class in 0..n_classes {
            let mut grad_w = weights.row(class).to_owned() * lambda;
            let mut grad_b = 0.0;
            for i in 0..n {
                let yi = if y[i] == class { 1.0 } else { -1.0 };
                if yi * margins[(i, class)] < 1.0 {
                    grad_w.scaled_add(-yi * inv_n, &x.row(i));
                    grad_b -= yi * inv_n;
                }
            }
            let mut row = weights.row_mut(class);
            row.scaled_add(-eta, &grad_w);
            bias[class] -= eta * grad_b;
        }
    }
    LinearModel { weights, bias }
}
