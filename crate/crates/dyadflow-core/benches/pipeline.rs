//! Hot-path benchmarks. Build twice to compare the threading modes:
//!
//! ```text
//! cargo bench -p dyadflow-core
//! cargo bench -p dyadflow-core --no-default-features
//! ```
//!
//! Bench ids embed the active mode so both sets of results can live in
//! the same criterion baseline directory.

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use dyadflow_core::dataset::assemble;
use dyadflow_core::dataset::Task;
use dyadflow_core::eval::{cross_validate, CvOptions, FoldStrategy};
use dyadflow_core::features::{extract_dyad, FeatureConfig};
use dyadflow_core::models::{ModelConfig, ModelKind};
use dyadflow_core::synchrony::{dtw_distance, DtwConfig};
use dyadflow_core::synth::{generate_dyads, SynthConfig};

fn mode() -> &'static str {
    if cfg!(feature = "parallel") {
        "parallel"
    } else {
        "sequential"
    }
}

fn bench_dtw(c: &mut Criterion) {
    let mut state = 0x9e3779b97f4a7c15u64;
    let mut next = move || {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
    };
    let a: Vec<f64> = (0..1536).map(|_| next()).collect();
    let b: Vec<f64> = (0..1536).map(|_| next()).collect();
    let full = DtwConfig::default();
    let windowed = DtwConfig { radius: Some(154), ..DtwConfig::default() };
    c.bench_function(&format!("dtw_1536_full/{}", mode()), |bench| {
        bench.iter(|| dtw_distance(&a, &b, &full).unwrap())
    });
    c.bench_function(&format!("dtw_1536_r154/{}", mode()), |bench| {
        bench.iter(|| dtw_distance(&a, &b, &windowed).unwrap())
    });
}

fn small_corpus() -> Vec<dyadflow_core::domain::DyadSample> {
    let config = SynthConfig {
        n_pairs: 4,
        n_rounds: 1,
        n_samplings: 2,
        seed: 3,
        ..SynthConfig::default()
    };
    generate_dyads(&config).unwrap()
}

fn bench_extract(c: &mut Criterion) {
    let dyads = small_corpus();
    let cfg = FeatureConfig::default();
    c.bench_function(&format!("extract_dyad/{}", mode()), |bench| {
        bench.iter(|| extract_dyad(&dyads[0], &cfg).unwrap())
    });
    c.bench_function(&format!("assemble_8_dyads/{}", mode()), |bench| {
        bench.iter(|| assemble(&dyads, &cfg).unwrap())
    });
}

fn bench_rf_cv(c: &mut Criterion) {
    let dyads = small_corpus();
    let ds = assemble(&dyads, &FeatureConfig::default()).unwrap();
    let y = ds.labels(Task::Binary);
    let model = ModelConfig::new(ModelKind::RandomForest, 2, 0);
    let options = CvOptions {
        folds: 4,
        strategy: FoldStrategy::Plain,
        ..CvOptions::default()
    };
    c.bench_function(&format!("rf_cv_16_rows/{}", mode()), |bench| {
        bench.iter_batched(
            || (ds.features.clone(), y.clone()),
            |(x, y)| cross_validate(&x, &y, None, &model, &options).unwrap(),
            BatchSize::LargeInput,
        )
    });
}

criterion_group!(benches, bench_dtw, bench_extract, bench_rf_cv);
criterion_main!(benches);
