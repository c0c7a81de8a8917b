//! One function per subcommand. Each reads its input, computes everything,
//! prints a short summary to stdout, and writes any requested report files
//! last.

use crate::report::{
    self, ImportanceReport, ModelSection, RankedFeature, RunInfo, ShapRunMeta, SynchronySection,
    TrainEvalReport,
};
use crate::{AblateArgs, EvalArgs, ExtractArgs, ImportanceArgs, InputArgs, SynthArgs, TrainEvalArgs};
use anyhow::{anyhow, bail, Context};
use dyadflow_core::dataset::{
    assemble, load_dataset, read_features_csv, select_columns, smote, write_features_csv,
    ChannelMap, LabeledDataset, NormStats, Task,
};
use dyadflow_core::eval::ablate::{run_ablation, FeatureSetSpec};
use dyadflow_core::eval::importance::{
    fold_mean_importance, rank_by_magnitude, shap_values, ImportanceMethod, ShapConfig,
};
use dyadflow_core::eval::{compare_synchrony, cross_validate, CvOptions, FoldStrategy};
use dyadflow_core::features::FeatureConfig;
use dyadflow_core::models::{train_model, ModelConfig, ModelKind};
use dyadflow_core::synth::{band_gain_profile, generate_to_dir, JointScoreDist, SynthConfig};
use ndarray::s;

pub fn extract(args: ExtractArgs) -> anyhow::Result<()> {
    let map = channel_map(&args.channel_map)?;
    let (dyads, summary) = load_dataset(&args.data_root, &map)
        .with_context(|| format!("loading {}", args.data_root.display()))?;
    let ds = assemble(&dyads, &FeatureConfig::default())?;
    write_features_csv(&ds, &args.out)
        .with_context(|| format!("writing {}", args.out.display()))?;
    println!(
        "loaded {} dyad samples from {} recording files ({} unpaired manifest rows skipped)",
        summary.dyad_samples, summary.files_loaded, summary.skipped_unpaired
    );
    println!("wrote {} rows x {} features to {}", ds.n_rows(), ds.features.ncols(), args.out.display());
    let flagged = ds.flags.iter().filter(|f| !f.is_empty()).count();
    if flagged > 0 {
        println!("{flagged} rows carry degenerate-feature flags");
    }
    Ok(())
}

pub fn train_eval(args: TrainEvalArgs) -> anyhow::Result<()> {
    let task = args.eval.task.task();
    let (ds, source) = load_input(&args.input)?;
    let models = resolve_models(&args.models)?;
    let spec = match &args.feature_set {
        Some(text) => text.parse::<FeatureSetSpec>().map_err(|e| anyhow!("{e}"))?,
        None => FeatureSetSpec::FULL,
    };
    if args.compare_synchrony && spec != FeatureSetSpec::FULL {
        bail!("--compare-synchrony contrasts the full set against the individual block; it cannot run on a reduced --feature-set");
    }

    let mut x = if spec == FeatureSetSpec::FULL {
        ds.features.clone()
    } else {
        select_columns(&ds.features, &spec.indices())
    };
    let mut y = ds.labels(task);
    let mut groups = ds.groups.clone();

    let normalize_global = args.paper_mode || args.normalize_global;
    if normalize_global {
        x = NormStats::fit(&x).transform(&x);
    }
    if args.paper_mode {
        let balanced = smote(&x, &y, 5, args.eval.seed).context("balancing the full dataset")?;
        // Synthetic rows inherit the pair id of their base row so grouped
        // folds keep them next to their source dyad.
        for parent in &balanced.parents {
            groups.push(groups[parent.base]);
        }
        x = balanced.features;
        y = balanced.labels;
    }

    let (strategy, strategy_name) = strategy_of(&args.eval);
    let options = CvOptions {
        folds: args.eval.folds,
        seed: args.eval.seed,
        strategy,
        normalize: !normalize_global,
        smote: !args.paper_mode,
        ..CvOptions::default()
    };

    let mut sections = Vec::with_capacity(models.len());
    for kind in models {
        let config = ModelConfig::new(kind, task.n_classes(), args.eval.seed);
        let (cv, synchrony) = if args.compare_synchrony {
            let cmp = compare_synchrony(&x, &y, Some(&groups), &config, &options)?;
            let section = SynchronySection {
                with_accuracy: cmp.with_sync.mean.accuracy,
                without_accuracy: cmp.without_sync.mean.accuracy,
                delta_accuracy: cmp.delta_accuracy,
                ttest: cmp.ttest,
            };
            (cmp.with_sync, Some(section))
        } else {
            (cross_validate(&x, &y, Some(&groups), &config, &options)?, None)
        };
        println!(
            "{:<5} accuracy {:.4}  precision {:.4}  recall {:.4}  f1 {:.4}",
            kind.id(),
            cv.mean.accuracy,
            cv.mean.precision,
            cv.mean.recall,
            cv.mean.f1
        );
        if let Some(sync) = &synchrony {
            println!(
                "      synchrony block {:+.2}pp (without it {:.4}), paired p = {:.3e}",
                sync.delta_accuracy * 100.0,
                sync.without_accuracy,
                sync.ttest.p
            );
        }
        let hygiene_clean = cv.hygienic();
        if !hygiene_clean {
            eprintln!("warning: {} fold audits flagged preprocessing leakage", kind.id());
        }
        sections.push(ModelSection {
            model: kind.id().to_string(),
            config_digest: config.digest(),
            mean: cv.mean,
            fold_metrics: cv.fold_metrics,
            hygiene_clean,
            flags: cv.flags,
            synchrony,
        });
    }

    let report = TrainEvalReport {
        run: RunInfo {
            tool_version: env!("CARGO_PKG_VERSION"),
            command: "train-eval",
            source,
            task: args.eval.task.name().to_string(),
            n_rows: x.nrows(),
            n_features: x.ncols(),
            class_counts: counts(&y, task),
            folds: args.eval.folds,
            seed: args.eval.seed,
            strategy: strategy_name,
            feature_set: Some(spec.to_string()),
            paper_mode: args.paper_mode,
            normalize_global,
        },
        models: sections,
    };
    if let Some(path) = &args.eval.out {
        report::write_json(path, &report)?;
        println!("report: {}", path.display());
    }
    if let Some(path) = &args.eval.csv {
        report::write_metrics_csv(path, &report.models)?;
        println!("metrics csv: {}", path.display());
    }
    Ok(())
}

pub fn ablate(args: AblateArgs) -> anyhow::Result<()> {
    let task = args.eval.task.task();
    let (ds, source) = load_input(&args.input)?;
    let kind: ModelKind = args.model.parse().map_err(|e| anyhow!("{e}"))?;
    let config = ModelConfig::new(kind, task.n_classes(), args.eval.seed);
    let labels = ds.labels(task);
    let (strategy, strategy_name) = strategy_of(&args.eval);
    let options = CvOptions {
        folds: args.eval.folds,
        seed: args.eval.seed,
        strategy,
        ..CvOptions::default()
    };
    let ladder = FeatureSetSpec::standard_rows();
    let result = run_ablation(&ds.features, &labels, Some(&ds.groups), &config, &options, &ladder)?;
    for row in &result.rows {
        println!(
            "{:<11} {:>3} features  accuracy {:.4}  ({:+.2}pp)",
            row.spec, row.n_features, row.metrics.accuracy, row.delta_accuracy_pp
        );
    }

    let report = report::AblateReport {
        run: RunInfo {
            tool_version: env!("CARGO_PKG_VERSION"),
            command: "ablate",
            source,
            task: args.eval.task.name().to_string(),
            n_rows: ds.n_rows(),
            n_features: ds.features.ncols(),
            class_counts: counts(&labels, task),
            folds: args.eval.folds,
            seed: args.eval.seed,
            strategy: strategy_name,
            feature_set: None,
            paper_mode: false,
            normalize_global: false,
        },
        model: kind.id().to_string(),
        config_digest: config.digest(),
        rows: result.rows,
    };
    if let Some(path) = &args.eval.out {
        report::write_json(path, &report)?;
        println!("report: {}", path.display());
    }
    if let Some(path) = &args.eval.csv {
        report::write_ablation_csv(path, &report.rows)?;
        println!("ablation csv: {}", path.display());
    }
    Ok(())
}

pub fn importance(args: ImportanceArgs) -> anyhow::Result<()> {
    let task = args.eval.task.task();
    let (ds, source) = load_input(&args.input)?;
    let kind: ModelKind = args.model.parse().map_err(|e| anyhow!("{e}"))?;
    let method: ImportanceMethod = args.method.parse().map_err(|e| anyhow!("{e}"))?;
    let config = ModelConfig::new(kind, task.n_classes(), args.eval.seed);
    let labels = ds.labels(task);
    let (strategy, strategy_name) = strategy_of(&args.eval);

    let (values, shap_meta) = match method {
        ImportanceMethod::Shap => {
            // SHAP explains one model fitted to the whole z-scored matrix;
            // the matrix doubles as the background distribution.
            let xn = NormStats::fit(&ds.features).transform(&ds.features);
            let model = train_model(&config, &xn, &labels)?;
            let rows = if args.shap_rows == 0 {
                xn.nrows()
            } else {
                args.shap_rows.min(xn.nrows())
            };
            let explain = xn.slice(s![..rows, ..]).to_owned();
            let shap_config =
                ShapConfig { coalitions: args.shap_coalitions, seed: args.eval.seed };
            let result = shap_values(&model, &xn, &explain, &shap_config)?;
            let meta = ShapRunMeta {
                coalitions: shap_config.coalitions,
                n_permutations: result.n_permutations,
                rows_explained: rows,
            };
            (result.importance, Some(meta))
        }
        _ => {
            let options = CvOptions {
                folds: args.eval.folds,
                seed: args.eval.seed,
                strategy,
                keep_models: true,
                ..CvOptions::default()
            };
            let cv = cross_validate(&ds.features, &labels, Some(&ds.groups), &config, &options)?;
            (fold_mean_importance(&cv.models, method)?, None)
        }
    };

    let ranking = rank_by_magnitude(&values);
    let top: Vec<RankedFeature> = ranking
        .iter()
        .take(args.top_k)
        .enumerate()
        .map(|(i, &column)| RankedFeature {
            rank: i + 1,
            column,
            name: ds.names[column].clone(),
            value: values[column],
        })
        .collect();
    for feature in &top {
        println!("{:>3}. {:<16} {:+.6}", feature.rank, feature.name, feature.value);
    }

    let report = ImportanceReport {
        run: RunInfo {
            tool_version: env!("CARGO_PKG_VERSION"),
            command: "importance",
            source,
            task: args.eval.task.name().to_string(),
            n_rows: ds.n_rows(),
            n_features: ds.features.ncols(),
            class_counts: counts(&labels, task),
            folds: args.eval.folds,
            seed: args.eval.seed,
            strategy: strategy_name,
            feature_set: None,
            paper_mode: false,
            normalize_global: false,
        },
        model: kind.id().to_string(),
        config_digest: config.digest(),
        method: method.id().to_string(),
        shap: shap_meta,
        top,
    };
    if let Some(path) = &args.eval.out {
        report::write_json(path, &report)?;
        println!("report: {}", path.display());
    }
    if let Some(path) = &args.eval.csv {
        report::write_importance_csv(path, &report.top)?;
        println!("importance csv: {}", path.display());
    }
    Ok(())
}

pub fn synth(args: SynthArgs) -> anyhow::Result<()> {
    let config = SynthConfig {
        n_pairs: args.pairs,
        n_rounds: args.rounds,
        n_samplings: args.samplings,
        coupling: args.coupling,
        band_gain: band_gain_profile(args.band_effect_strength),
        amplitude_jitter: args.amplitude_jitter,
        noise_floor: args.noise_floor,
        score_dist: JointScoreDist::default(),
        seed: args.seed,
    };
    let summary = generate_to_dir(&config, &args.out_dir)
        .with_context(|| format!("generating into {}", args.out_dir.display()))?;
    println!(
        "wrote {} dyad samples ({} recording files) under {}",
        summary.dyad_samples,
        summary.files_written,
        args.out_dir.display()
    );
    println!(
        "{} samples are both-high ({:.1}%); per-row labels in manifest.csv, dyad truth in ground_truth.csv",
        summary.high_samples,
        100.0 * summary.high_samples as f64 / summary.dyad_samples as f64
    );
    Ok(())
}

fn channel_map(path: &Option<std::path::PathBuf>) -> anyhow::Result<ChannelMap> {
    match path {
        Some(p) => {
            ChannelMap::from_file(p).with_context(|| format!("reading channel map {}", p.display()))
        }
        None => Ok(ChannelMap::default()),
    }
}

fn load_input(input: &InputArgs) -> anyhow::Result<(LabeledDataset, String)> {
    match (&input.data_root, &input.features) {
        (Some(root), None) => {
            let map = channel_map(&input.channel_map)?;
            let (dyads, _) = load_dataset(root, &map)
                .with_context(|| format!("loading {}", root.display()))?;
            let ds = assemble(&dyads, &FeatureConfig::default())?;
            Ok((ds, root.display().to_string()))
        }
        (None, Some(path)) => {
            let ds = read_features_csv(path)
                .with_context(|| format!("reading features {}", path.display()))?;
            Ok((ds, path.display().to_string()))
        }
        (Some(_), Some(_)) => bail!("pass either --data-root or --features, not both"),
        (None, None) => bail!("one of --data-root or --features is required"),
    }
}

fn resolve_models(list: &str) -> anyhow::Result<Vec<ModelKind>> {
    if list.trim().eq_ignore_ascii_case("all") {
        return Ok(ModelKind::ALL.to_vec());
    }
    let mut kinds = Vec::new();
    for part in list.split(',') {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        let kind: ModelKind = part.parse().map_err(|e| anyhow!("{e}"))?;
        if !kinds.contains(&kind) {
            kinds.push(kind);
        }
    }
    if kinds.is_empty() {
        bail!("--models names no classifier");
    }
    Ok(kinds)
}

fn strategy_of(eval: &EvalArgs) -> (FoldStrategy, &'static str) {
    if eval.group_folds {
        (FoldStrategy::Grouped, "grouped")
    } else if eval.stratify {
        (FoldStrategy::Stratified, "stratified")
    } else {
        (FoldStrategy::Plain, "plain")
    }
}

fn counts(labels: &[usize], task: Task) -> Vec<usize> {
    let mut counts = vec![0usize; task.n_classes()];
    for &label in labels {
        counts[label] += 1;
    }
    counts
}
