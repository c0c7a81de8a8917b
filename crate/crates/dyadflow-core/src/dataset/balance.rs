//! Column z-scoring and SMOTE oversampling.

use super::DatasetError;
use ndarray::Array2;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

/// Per-column normalization statistics (population standard deviation).
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct NormStats {
    pub mean: Vec<f64>,
    pub sd: Vec<f64>,
    /// Columns with zero variance; their transformed values are 0.
    pub degenerate: Vec<bool>,
}

impl NormStats {
    /// Fit on all rows of `x`.
    pub fn fit(x: &Array2<f64>) -> NormStats {
        let rows: Vec<usize> = (0..x.nrows()).collect();
        NormStats::fit_rows(x, &rows)
    }

    /// Fit on a row subset only (the train side of a fold).
    pub fn fit_rows(x: &Array2<f64>, rows: &[usize]) -> NormStats {
        let d = x.ncols();
        let n = rows.len().max(1) as f64;
        let mut mean = vec![0.0; d];
        let mut sd = vec![0.0; d];
        for &r in rows {
            for (j, v) in x.row(r).iter().enumerate() {
                mean[j] += v;
            }
        }
        for m in mean.iter_mut() {
            *m /= n;
        }
        for &r in rows {
            for (j, v) in x.row(r).iter().enumerate() {
                let dlt = v - mean[j];
                sd[j] += dlt * dlt;
            }
        }
        let mut degenerate = vec![false; d];
        for (j, s) in sd.iter_mut().enumerate() {
            *s = (*s / n).sqrt();
            if *s == 0.0 {
                degenerate[j] = true;
            }
        }
        NormStats { mean, sd, degenerate }
    }

    /// Standardize every row of `x` with these statistics.
    pub fn transform(&self, x: &Array2<f64>) -> Array2<f64> {
        let mut out = x.clone();
        for mut row in out.rows_mut() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = if self.degenerate[j] { 0.0 } else { (*v - self.mean[j]) / self.sd[j] };
            }
        }
        out
    }

    /// Undo [`NormStats::transform`]; degenerate columns recover their mean.
    pub fn inverse(&self, z: &Array2<f64>) -> Array2<f64> {
        let mut out = z.clone();
        for mut row in out.rows_mut() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = if self.degenerate[j] { self.mean[j] } else { *v * self.sd[j] + self.mean[j] };
            }
        }
        out
    }
}

/// Origin of one synthetic SMOTE row: indices (into the input matrix) of the
/// base row and the neighbor it was interpolated toward.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SmoteParent {
    pub base: usize,
    pub neighbor: usize,
}

/// Balanced matrix plus labels and parent records for the appended rows.
#[derive(Debug, Clone)]
pub struct SmoteResult {
    pub features: Array2<f64>,
    pub labels: Vec<usize>,
    /// One entry per synthetic row, in append order.
    pub parents: Vec<SmoteParent>,
}

/// Upsample every minority class to the majority count by interpolating
/// between a class member and one of its k nearest same-class neighbors:
/// `x + u * (x_nn - x)` with `u ~ U[0, 1)`. Original rows keep their order;
/// synthetic rows are appended grouped by class. Deterministic under `seed`.
pub fn smote(
    x: &Array2<f64>,
    y: &[usize],
    k: usize,
    seed: u64,
) -> Result<SmoteResult, DatasetError> {
    if x.nrows() != y.len() {
        return Err(DatasetError::LabelLengthMismatch { rows: x.nrows(), labels: y.len() });
    }
    if x.nrows() == 0 {
        return Err(DatasetError::Empty);
    }
    let n_classes = y.iter().copied().max().unwrap() + 1;
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); n_classes];
    for (i, &c) in y.iter().enumerate() {
        members[c].push(i);
    }
    let majority = members.iter().map(Vec::len).max().unwrap();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut features = x.clone();
    let mut labels = y.to_vec();
    let mut parents = Vec::new();

    for (class, rows) in members.iter().enumerate() {
        let count = rows.len();
        if count == 0 || count == majority {
            continue;
        }
        if count <= k {
            return Err(DatasetError::SmoteClassTooSmall { class, count, k });
        }

        // k nearest same-class neighbors of every class member, ties broken
        // by row index so the result is deterministic.
        let neighbors: Vec<Vec<usize>> = rows
            .iter()
            .map(|&a| {
                let mut dists: Vec<(f64, usize)> = rows
                    .iter()
                    .filter(|&&b| b != a)
                    .map(|&b| {
                        let d = x
                            .row(a)
                            .iter()
                            .zip(x.row(b).iter())
                            .map(|(p, q)| (p - q) * (p - q))
                            .sum::<f64>();
                        (d, b)
                    })
                    .collect();
                dists.sort_by(|l, r| l.0.partial_cmp(&r.0).unwrap().then(l.1.cmp(&r.1)));
                dists.truncate(k);
                dists.into_iter().map(|(_, b)| b).collect()
            })
            .collect();

        let needed = majority - count;
        let mut synth = Array2::zeros((needed, x.ncols()));
        for s in 0..needed {
            let base_pos = s % count;
            let base = rows[base_pos];
            let neighbor = neighbors[base_pos][rng.random_range(0..k)];
            let u: f64 = rng.random();
            for (j, v) in synth.row_mut(s).iter_mut().enumerate() {
                let xb = x[(base, j)];
                *v = xb + u * (x[(neighbor, j)] - xb);
            }
            parents.push(SmoteParent { base, neighbor });
            labels.push(class);
        }
        features.append(ndarray::Axis(0), synth.view()).expect("same width");
    }

    Ok(SmoteResult { features, labels, parents })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn zscore_known_column() {
        let x = array![[1.0], [2.0], [3.0]];
        let stats = NormStats::fit(&x);
        let z = stats.transform(&x);
        assert!((z[(0, 0)] + 1.224744871391589).abs() < 1e-12);
        assert!((z[(1, 0)]).abs() < 1e-12);
        assert!((z[(2, 0)] - 1.224744871391589).abs() < 1e-12);
        let back = stats.inverse(&z);
        for (a, b) in back.iter().zip(x.iter()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn zscore_constant_column_flagged() {
        let x = array![[5.0, 1.0], [5.0, 2.0], [5.0, 4.0]];
        let stats = NormStats::fit(&x);
        assert_eq!(stats.degenerate, vec![true, false]);
        let z = stats.transform(&x);
        assert!(z.column(0).iter().all(|v| *v == 0.0));
        let back = stats.inverse(&z);
        assert!(back.column(0).iter().all(|v| *v == 5.0));
    }

    #[test]
    fn zscore_fit_on_train_rows_only() {
        let x = array![[0.0], [1.0], [100.0]];
        let stats = NormStats::fit_rows(&x, &[0, 1]);
        assert_eq!(stats.mean[0], 0.5);
        assert_eq!(stats.sd[0], 0.5);
    }

    fn toy_imbalanced() -> (Array2<f64>, Vec<usize>) {
        // Class 0: 8 rows, class 1: 3 rows.
        let mut rows = Vec::new();
        let mut y = Vec::new();
        for i in 0..8 {
            rows.push([i as f64, 0.0]);
            y.push(0usize);
        }
        for i in 0..3 {
            rows.push([10.0 + i as f64, 5.0]);
            y.push(1usize);
        }
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        (Array2::from_shape_vec((11, 2), flat).unwrap(), y)
    }

    #[test]
    fn smote_balances_and_interpolates() {
        let (x, y) = toy_imbalanced();
        let result = smote(&x, &y, 2, 99).unwrap();
        assert_eq!(result.features.nrows(), 16);
        let count1 = result.labels.iter().filter(|&&c| c == 1).count();
        assert_eq!(count1, 8);
        // Originals untouched, in order.
        for i in 0..11 {
            assert_eq!(result.features.row(i), x.row(i));
            assert_eq!(result.labels[i], y[i]);
        }
        // Every synthetic row sits between its parents, coordinate-wise.
        for (s, parent) in result.parents.iter().enumerate() {
            let row = result.features.row(11 + s);
            for j in 0..2 {
                let lo = x[(parent.base, j)].min(x[(parent.neighbor, j)]);
                let hi = x[(parent.base, j)].max(x[(parent.neighbor, j)]);
                assert!(row[j] >= lo - 1e-12 && row[j] <= hi + 1e-12);
            }
            assert_eq!(y[parent.base], 1);
            assert_eq!(y[parent.neighbor], 1);
        }
    }

    #[test]
    fn smote_determinism_and_seed_sensitivity() {
        let (x, y) = toy_imbalanced();
        let a = smote(&x, &y, 2, 7).unwrap();
        let b = smote(&x, &y, 2, 7).unwrap();
        assert_eq!(a.features, b.features);
        assert_eq!(a.labels, b.labels);
        let c = smote(&x, &y, 2, 8).unwrap();
        assert_ne!(a.features, c.features);
    }

    #[test]
    fn smote_balanced_input_unchanged() {
        let x = array![[0.0], [1.0], [2.0], [3.0]];
        let y = vec![0, 0, 1, 1];
        let result = smote(&x, &y, 1, 5).unwrap();
        assert_eq!(result.features, x);
        assert_eq!(result.labels, y);
        assert!(result.parents.is_empty());
    }

    #[test]
    fn smote_class_too_small() {
        let x = array![[0.0], [1.0], [2.0], [3.0], [4.0]];
        let y = vec![0, 0, 0, 0, 1];
        assert!(matches!(
            smote(&x, &y, 5, 1),
            Err(DatasetError::SmoteClassTooSmall { class: 1, count: 1, k: 5 })
        ));
    }
}
