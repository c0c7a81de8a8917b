//! Region ablation: evaluate one model on nested feature subsets.
//!
//! Subsets are named by region blocks: L and F are the left-temporal and
//! frontal individual features, LS and FS the matching synchrony blocks.
//! All subsets of one run share the exact same fold plan, so differences
//! between rows come from the feature set alone.

use super::{build_plan, cross_validate_with_plan, CvOptions, CvResult, EvalError, MetricSet};
use crate::dataset::select_columns;
use crate::domain::Region;
use crate::features::{individual_indices_for_region, synchrony_indices_for_region, N_TOTAL};
use crate::models::ModelConfig;
use ndarray::Array2;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// Which feature blocks a subset includes.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSetSpec {
    pub left_temporal: bool,
    pub frontal: bool,
    pub frontal_sync: bool,
    pub left_sync: bool,
}

impl FeatureSetSpec {
    pub const FULL: FeatureSetSpec = FeatureSetSpec {
        left_temporal: true,
        frontal: true,
        frontal_sync: true,
        left_sync: true,
    };

    /// Column indices into the full feature row, ascending.
    pub fn indices(&self) -> Vec<usize> {
        let mut idx = Vec::new();
        if self.left_temporal {
            idx.extend(individual_indices_for_region(Region::LeftTemporal));
        }
        if self.frontal {
            idx.extend(individual_indices_for_region(Region::Frontal));
        }
        if self.frontal_sync {
            idx.extend(synchrony_indices_for_region(Region::Frontal));
        }
        if self.left_sync {
            idx.extend(synchrony_indices_for_region(Region::LeftTemporal));
        }
        idx.sort_unstable();
        idx
    }

    pub fn n_features(&self) -> usize {
        self.indices().len()
    }

    pub fn is_empty(&self) -> bool {
        !(self.left_temporal || self.frontal || self.frontal_sync || self.left_sync)
    }

    /// The ladder reported by `ablate`: individual blocks first, then the
    /// synchrony blocks joining in.
    pub fn standard_rows() -> Vec<FeatureSetSpec> {
        ["L", "F", "L+F", "L+F+LS", "L+F+FS", "L+F+FS+LS"]
            .into_iter()
            .map(|s| s.parse().expect("standard specs parse"))
            .collect()
    }
}

impl fmt::Display for FeatureSetSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        if self.left_temporal {
            parts.push("L");
        }
        if self.frontal {
            parts.push("F");
        }
        if self.frontal_sync {
            parts.push("FS");
        }
        if self.left_sync {
            parts.push("LS");
        }
        f.write_str(&parts.join("+"))
    }
}

impl FromStr for FeatureSetSpec {
    type Err = EvalError;

    fn from_str(s: &str) -> Result<Self, EvalError> {
        let mut spec = FeatureSetSpec::default();
        for part in s.split('+') {
            let flag = match part.trim().to_ascii_uppercase().as_str() {
                "L" => &mut spec.left_temporal,
                "F" => &mut spec.frontal,
                "FS" => &mut spec.frontal_sync,
                "LS" => &mut spec.left_sync,
                _ => return Err(EvalError::BadFeatureSet(s.to_string())),
            };
            if *flag {
                return Err(EvalError::BadFeatureSet(s.to_string()));
            }
            *flag = true;
        }
        if spec.is_empty() {
            return Err(EvalError::BadFeatureSet(s.to_string()));
        }
        Ok(spec)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct AblationRow {
    pub spec: String,
    pub n_features: usize,
    pub metrics: MetricSet,
    pub fold_accuracies: Vec<f64>,
    /// Accuracy gain over the first row, in percentage points.
    pub delta_accuracy_pp: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct AblationReport {
    pub rows: Vec<AblationRow>,
    /// Every subset was scored on this shared plan.
    pub folds: usize,
}

/// Cross-validate `model` once per feature subset on a shared fold plan.
/// Row deltas are relative to the first subset in `specs`.
pub fn run_ablation(
    x: &Array2<f64>,
    y: &[usize],
    groups: Option<&[u32]>,
    model: &ModelConfig,
    options: &CvOptions,
    specs: &[FeatureSetSpec],
) -> Result<AblationReport, EvalError> {
    if x.ncols() != N_TOTAL {
        return Err(EvalError::WrongFeatureCount { expected: N_TOTAL, got: x.ncols() });
    }
    if let Some(empty) = specs.iter().find(|s| s.is_empty()) {
        return Err(EvalError::BadFeatureSet(empty.to_string()));
    }
    assert!(!specs.is_empty(), "ablation needs at least one feature set");
    let plan = build_plan(options.strategy, y, groups, options.folds, options.seed)?;
    let mut rows: Vec<AblationRow> = Vec::with_capacity(specs.len());
    for spec in specs {
        let subset = select_columns(x, &spec.indices());
        let cv: CvResult = cross_validate_with_plan(&subset, y, model, options, &plan)?;
        let baseline = rows.first().map_or(cv.mean.accuracy, |r| r.metrics.accuracy);
        rows.push(AblationRow {
            spec: spec.to_string(),
            n_features: spec.n_features(),
            fold_accuracies: cv.fold_accuracies(),
            delta_accuracy_pp: (cv.mean.accuracy - baseline) * 100.0,
            metrics: cv.mean,
        });
    }
    Ok(AblationReport { rows, folds: plan.k() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::N_INDIVIDUAL;
    use crate::models::ModelKind;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn spec_parsing_round_trips() {
        for text in ["L", "F", "L+F", "L+F+LS", "L+F+FS", "L+F+FS+LS", "FS+LS"] {
            let spec: FeatureSetSpec = text.parse().unwrap();
            let canonical = spec.to_string();
            let again: FeatureSetSpec = canonical.parse().unwrap();
            assert_eq!(spec, again);
        }
        assert_eq!("ls+fs+f+l".parse::<FeatureSetSpec>().unwrap(), FeatureSetSpec::FULL);
        for bad in ["", "L+", "X", "L+L", "208"] {
            assert!(bad.parse::<FeatureSetSpec>().is_err(), "{bad:?} should fail");
        }
    }

    #[test]
    fn standard_ladder_has_the_expected_widths() {
        let specs = FeatureSetSpec::standard_rows();
        let widths: Vec<usize> = specs.iter().map(|s| s.n_features()).collect();
        assert_eq!(widths, vec![52, 156, 208, 224, 256, 272]);
        let names: Vec<String> = specs.iter().map(|s| s.to_string()).collect();
        assert_eq!(names, vec!["L", "F", "L+F", "L+F+LS", "L+F+FS", "L+F+FS+LS"]);
    }

    #[test]
    fn full_spec_covers_every_column_once() {
        let idx = FeatureSetSpec::FULL.indices();
        assert_eq!(idx, (0..N_TOTAL).collect::<Vec<_>>());
    }

    #[test]
    fn ablation_rows_track_where_the_signal_lives() {
        let mut rng = ChaCha8Rng::seed_from_u64(20);
        let n = 160;
        let mut x = ndarray::Array2::from_shape_fn((n, N_TOTAL), |_| rng.random::<f64>() * 0.1);
        let mut y = Vec::with_capacity(n);
        let frontal_col = individual_indices_for_region(Region::Frontal)[4];
        assert!(frontal_col < N_INDIVIDUAL);
        for i in 0..n {
            let class = i % 2;
            x[(i, frontal_col)] += class as f64;
            y.push(class);
        }
        let cfg = ModelConfig::new(ModelKind::LogisticRegression, 2, 1);
        let options = CvOptions { folds: 4, seed: 6, smote: false, ..CvOptions::default() };
        let specs: Vec<FeatureSetSpec> =
            ["L", "F", "L+F"].into_iter().map(|s| s.parse().unwrap()).collect();
        let report = run_ablation(&x, &y, None, &cfg, &options, &specs).unwrap();
        assert_eq!(report.rows.len(), 3);
        assert_eq!(report.rows[0].delta_accuracy_pp, 0.0);
        // The signal is frontal: the L row should hover near chance and the
        // F rows should clear it decisively.
        assert!(report.rows[0].metrics.accuracy < 0.75, "L: {:?}", report.rows[0].metrics);
        assert!(report.rows[1].metrics.accuracy > 0.9, "F: {:?}", report.rows[1].metrics);
        assert!(report.rows[1].delta_accuracy_pp > 15.0);
        assert_eq!(report.rows[2].n_features, 208);
    }

    #[test]
    fn ablation_rejects_bad_input() {
        let x = ndarray::Array2::zeros((4, 10));
        let cfg = ModelConfig::new(ModelKind::LogisticRegression, 2, 1);
        let options = CvOptions::default();
        let specs = FeatureSetSpec::standard_rows();
        assert!(matches!(
            run_ablation(&x, &[0, 1, 0, 1], None, &cfg, &options, &specs),
            Err(EvalError::WrongFeatureCount { .. })
        ));
    }
}
