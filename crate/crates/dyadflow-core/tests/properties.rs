//! Invariance laws checked over generated inputs. Where a feature has an
//! exact algebraic response to scaling or shifting the signal, that response
//! is the test; anything that silently breaks these laws would corrupt every
//! downstream model without failing a fixed-example test.

use dyadflow_core::dataset::{smote, NormStats};
use dyadflow_core::domain::{label_binary, label_ternary, BinaryLabel, FlowScore, TernaryLabel};
use dyadflow_core::dsp::{band_decompose, welch_psd, Band, WelchConfig};
use dyadflow_core::eval::{grouped_kfold, kfold, stratified_kfold, FoldPlan};
use dyadflow_core::features::time_features;
use dyadflow_core::synchrony::{dtw_distance, DtwConfig};
use ndarray::Array2;
use proptest::collection::vec;
use proptest::prelude::*;

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1e-12)
}

/// A signal with enough spread that no degenerate-variance path triggers.
fn signal(len: std::ops::Range<usize>) -> impl Strategy<Value = Vec<f64>> {
    vec(-100.0f64..100.0, len)
        .prop_filter("needs spread", |x| {
            let mean = x.iter().sum::<f64>() / x.len() as f64;
            x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / x.len() as f64 > 1e-6
        })
}

fn assert_partition(plan: &FoldPlan, n: usize) {
    let mut seen = vec![false; n];
    for f in 0..plan.k() {
        for &i in plan.test_indices(f) {
            assert!(!seen[i], "row {i} appears in two test folds");
            seen[i] = true;
        }
    }
    assert!(seen.iter().all(|&s| s), "some row never lands in a test fold");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Scaling the signal by c > 0 scales first-moment features by c,
    /// quadratic ones by c^2, and leaves dimensionless ratios untouched.
    #[test]
    fn time_features_scale_law(x in signal(16..192), c in 0.01f64..100.0) {
        let scaled: Vec<f64> = x.iter().map(|v| v * c).collect();
        let (base, flags) = time_features(&x).unwrap();
        prop_assume!(flags.is_empty());
        let (got, _) = time_features(&scaled).unwrap();

        let tol = 1e-9;
        prop_assert!(close(got.mean, c * base.mean, tol));
        prop_assert!(close(got.sd, c * base.sd, tol));
        prop_assert!(close(got.aafod, c * base.aafod, tol));
        prop_assert!(close(got.ppm, c * base.ppm, tol));
        prop_assert!(close(got.variance, c * c * base.variance, tol));
        prop_assert!(close(got.activity, c * c * base.activity, tol));
        prop_assert!(close(got.energy, c * c * base.energy, tol));
        prop_assert!(close(got.power, c * c * base.power, tol));
        prop_assert!(close(got.nfod, base.nfod, tol));
        prop_assert!(close(got.mobility, base.mobility, tol));
        prop_assert!(close(got.kurtosis, base.kurtosis, tol));
        prop_assert_eq!(got.hozc, base.hozc);
    }

    /// Shifting the signal moves only the mean; every deviation-based
    /// feature is translation invariant.
    #[test]
    fn time_features_shift_law(x in signal(16..192), s in -1000.0f64..1000.0) {
        let shifted: Vec<f64> = x.iter().map(|v| v + s).collect();
        let (base, flags) = time_features(&x).unwrap();
        prop_assume!(flags.is_empty());
        let (got, _) = time_features(&shifted).unwrap();

        let tol = 1e-9f64;
        prop_assert!(close(got.mean, base.mean + s, tol.max((s.abs() + 1.0) * 1e-12)));
        prop_assert!(close(got.sd, base.sd, tol));
        prop_assert!(close(got.variance, base.variance, tol));
        prop_assert!(close(got.aafod, base.aafod, tol));
        prop_assert!(close(got.nfod, base.nfod, tol));
        prop_assert!(close(got.mobility, base.mobility, tol));
        prop_assert!(close(got.ppm, base.ppm, tol));
        prop_assert!(close(got.kurtosis, base.kurtosis, tol));
        prop_assert_eq!(got.hozc, base.hozc);
    }

    /// Welch is quadratic in the signal: scaling by c multiplies every
    /// spectral bin by exactly c^2.
    #[test]
    fn welch_psd_scale_law(x in signal(256..640), c in 0.1f64..10.0) {
        let config = WelchConfig { window_len: 128, overlap: 64 };
        let base = welch_psd(&x, 256.0, &config).unwrap();
        let scaled: Vec<f64> = x.iter().map(|v| v * c).collect();
        let got = welch_psd(&scaled, 256.0, &config).unwrap();
        prop_assert_eq!(base.power.len(), got.power.len());
        for (b, g) in base.power.iter().zip(&got.power) {
            prop_assert!(close(*g, c * c * b, 1e-9));
        }
    }

    /// Full score truth table: binary symmetric, High exactly when both
    /// scores reach the threshold, ternary Simultaneous exactly on High.
    #[test]
    fn labeling_consistency(own in 0u8..=3, other in 0u8..=3) {
        let a = FlowScore::new(own).unwrap();
        let b = FlowScore::new(other).unwrap();
        let bin = label_binary(a, b);
        prop_assert_eq!(bin, label_binary(b, a));
        prop_assert_eq!(bin == BinaryLabel::High, own >= 2 && other >= 2);
        prop_assert_eq!(label_ternary(a, b) == TernaryLabel::Simultaneous, bin == BinaryLabel::High);
        if own < 2 {
            prop_assert_eq!(label_ternary(a, b), TernaryLabel::Neither);
        }
    }

    /// DTW on raw signals: nonnegative and symmetric. On z-normalized
    /// signals it is additionally invariant to any affine map of one side.
    #[test]
    fn dtw_invariances(
        a in signal(4..64),
        b in signal(4..64),
        c in 0.1f64..10.0,
        s in -50.0f64..50.0,
    ) {
        let raw = DtwConfig { znormalize: false, radius: None };
        let ab = dtw_distance(&a, &b, &raw).unwrap();
        prop_assert!(ab >= 0.0);
        prop_assert_eq!(ab, dtw_distance(&b, &a, &raw).unwrap());

        let norm = DtwConfig::default();
        prop_assert_eq!(dtw_distance(&a, &a, &norm).unwrap(), 0.0);
        let mapped: Vec<f64> = a.iter().map(|v| c * v + s).collect();
        let base = dtw_distance(&a, &b, &norm).unwrap();
        let got = dtw_distance(&mapped, &b, &norm).unwrap();
        prop_assert!(close(got, base, 1e-9), "affine map changed znormalized dtw: {} vs {}", got, base);
    }

    /// Standardize then invert is the identity; constant columns come back
    /// as their mean, which is again the original value.
    #[test]
    fn zscore_roundtrip(
        (rows, cols, data) in (2usize..32, 1usize..12).prop_flat_map(|(r, c)| {
            (Just(r), Just(c), vec(-1000.0f64..1000.0, r * c))
        }),
    ) {
        let x = Array2::from_shape_vec((rows, cols), data).unwrap();
        let stats = NormStats::fit(&x);
        let back = stats.inverse(&stats.transform(&x));
        for (a, b) in x.iter().zip(back.iter()) {
            prop_assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0));
        }
    }

    /// Oversampling: class counts equalize at the majority count, original
    /// rows survive untouched, and every synthetic row sits componentwise
    /// between its two recorded same-class parents.
    #[test]
    fn smote_betweenness(
        (na, nb, d, seed) in (8usize..32, 8usize..32, 2usize..6, 0u64..1000)
            .prop_filter("needs imbalance", |(na, nb, _, _)| na != nb),
        flat in vec(-10.0f64..10.0, 64 * 6),
    ) {
        let n = na + nb;
        let x = Array2::from_shape_fn((n, d), |(i, j)| flat[i * d + j]);
        let mut y = vec![0usize; na];
        y.extend(vec![1usize; nb]);

        let out = smote(&x, &y, 3, seed).unwrap();
        let majority = na.max(nb);
        prop_assert_eq!(out.features.nrows(), 2 * majority);
        for class in 0..2 {
            prop_assert_eq!(out.labels.iter().filter(|&&l| l == class).count(), majority);
        }
        for i in 0..n {
            prop_assert_eq!(out.features.row(i), x.row(i));
            prop_assert_eq!(out.labels[i], y[i]);
        }
        for (k, parent) in out.parents.iter().enumerate() {
            let row = out.features.row(n + k);
            prop_assert_eq!(y[parent.base], out.labels[n + k]);
            prop_assert_eq!(y[parent.neighbor], out.labels[n + k]);
            for j in 0..d {
                let lo = x[(parent.base, j)].min(x[(parent.neighbor, j)]);
                let hi = x[(parent.base, j)].max(x[(parent.neighbor, j)]);
                prop_assert!(row[j] >= lo - 1e-12 && row[j] <= hi + 1e-12);
            }
        }
        let again = smote(&x, &y, 3, seed).unwrap();
        prop_assert_eq!(out.features, again.features);
    }

    /// Plain folds partition the rows with sizes differing by at most one.
    #[test]
    fn kfold_partition(n in 10usize..300, k in 2usize..10, seed in 0u64..100) {
        prop_assume!(k <= n);
        let plan = kfold(n, k, seed).unwrap();
        assert_partition(&plan, n);
        let sizes: Vec<usize> = (0..plan.k()).map(|f| plan.test_indices(f).len()).collect();
        prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
    }

    /// Stratified folds additionally keep each class's count per fold
    /// within one of any other fold.
    #[test]
    fn stratified_partition(
        y in vec(0usize..3, 30..200),
        k in 2usize..8,
        seed in 0u64..100,
    ) {
        let plan = stratified_kfold(&y, k, seed).unwrap();
        assert_partition(&plan, y.len());
        for class in 0..3 {
            let counts: Vec<usize> = (0..plan.k())
                .map(|f| plan.test_indices(f).iter().filter(|&&i| y[i] == class).count())
                .collect();
            prop_assert!(
                counts.iter().max().unwrap() - counts.iter().min().unwrap() <= 1,
                "class {} spread {:?}",
                class,
                counts
            );
        }
    }

    /// Grouped folds never split a group across folds.
    #[test]
    fn grouped_partition(
        n in 30usize..200,
        n_groups in 8u32..20,
        k in 2usize..8,
        seed in 0u64..100,
    ) {
        let groups: Vec<u32> = (0..n).map(|i| i as u32 % n_groups).collect();
        let plan = grouped_kfold(&groups, k, seed).unwrap();
        assert_partition(&plan, n);
        let mut fold_of_group = std::collections::HashMap::new();
        for f in 0..plan.k() {
            for &i in plan.test_indices(f) {
                if let Some(prev) = fold_of_group.insert(groups[i], f) {
                    prop_assert_eq!(prev, f, "group {} split across folds", groups[i]);
                }
            }
        }
    }
}

proptest! {
    // The full decomposition chain per case is costly; fewer cases suffice
    // for a law that either holds everywhere or fails almost everywhere.
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// The wavelet bands are linear in the input, so band log-power and
    /// differential entropy respond to scaling by exact additive shifts.
    #[test]
    fn band_features_scale_law(x in signal(256..512), c in 0.1f64..10.0) {
        let base = band_decompose(&x, 256.0).unwrap();
        let scaled: Vec<f64> = x.iter().map(|v| v * c).collect();
        let got = band_decompose(&scaled, 256.0).unwrap();
        for band in Band::ALL {
            let b = base.get(band);
            let g = got.get(band);
            prop_assert_eq!(b.len(), g.len());
            for (bv, gv) in b.iter().zip(g) {
                prop_assert!(close(*gv, c * bv, 1e-9), "band {} sample", band);
            }

            let ms = |sig: &[f64]| sig.iter().map(|v| v * v).sum::<f64>() / sig.len() as f64;
            let lbp_shift = ms(g).ln() - ms(b).ln();
            prop_assert!((lbp_shift - 2.0 * c.ln()).abs() <= 1e-9);
        }
    }
}

/// Sizing worked by hand: 1736 rows over 10 folds is six folds of 174 and
/// four of 173, in that order.
#[test]
fn kfold_1736_sizes() {
    let plan = kfold(1736, 10, 0).unwrap();
    let sizes: Vec<usize> = (0..10).map(|f| plan.test_indices(f).len()).collect();
    assert_eq!(sizes, [174, 174, 174, 174, 174, 174, 173, 173, 173, 173]);
}
