//! Dataset handling: recording files, manifests, dyad assembly into a labeled
//! feature matrix, z-score normalization, and SMOTE class balancing.

mod balance;
mod load;

pub use balance::{smote, NormStats, SmoteParent, SmoteResult};
pub use load::{
    load_dataset, load_manifest, load_recording, segment_path, slice_segments, ChannelMap,
    LoadSummary, ManifestRow, Recording,
};

use crate::domain::{BinaryLabel, DomainError, DyadSample, TernaryLabel};
use crate::features::{self, extract_dyad, FeatureConfig, FeatureError};
use crate::parallel::par_map;
use ndarray::{Array2, Axis};
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("io error on {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("csv error on {path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error("{path}: row {row}, column {col}: not a finite number")]
    NotNumeric { path: PathBuf, row: usize, col: usize },
    #[error("{path}: expected {expected} rows, found {got}")]
    WrongRowCount { path: PathBuf, expected: usize, got: usize },
    #[error("{path}: rows have differing lengths ({first} vs {other})")]
    RaggedRows { path: PathBuf, first: usize, other: usize },
    #[error("{path}: expected {expected} samples per row, found {got}")]
    WrongSegmentLen { path: PathBuf, expected: usize, got: usize },
    #[error("channel map must list all 14 channels exactly once")]
    BadChannelMap,
    #[error("manifest problem: {0}")]
    BadManifest(String),
    #[error("sampling point {point_secs} s is outside the recording")]
    SliceOutOfRange { point_secs: f64 },
    #[error("dataset is empty")]
    Empty,
    #[error("class {class} has {count} rows; SMOTE with k={k} needs more than k")]
    SmoteClassTooSmall { class: usize, count: usize, k: usize },
    #[error("feature csv header does not match the registry at column {0}")]
    HeaderMismatch(usize),
    #[error("rows and labels disagree: {rows} rows vs {labels} labels")]
    LabelLengthMismatch { rows: usize, labels: usize },
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error(transparent)]
    Feature(#[from] FeatureError),
}

/// Which classification target a model run uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Task {
    Binary,
    Ternary,
}

impl Task {
    pub fn n_classes(self) -> usize {
        match self {
            Task::Binary => 2,
            Task::Ternary => 3,
        }
    }

    pub fn class_names(self) -> Vec<&'static str> {
        match self {
            Task::Binary => vec!["Low", "High"],
            Task::Ternary => vec!["Neither", "Individual", "Simultaneous"],
        }
    }
}

impl std::str::FromStr for Task {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "binary" => Ok(Task::Binary),
            "ternary" => Ok(Task::Ternary),
            other => Err(format!("unknown task {other:?} (expected binary or ternary)")),
        }
    }
}

/// Assembled feature matrix with labels, group ids, and quality flags.
/// Two rows per dyad sample (participant 1 then participant 2); the 64
/// synchrony columns are shared by both rows of a dyad.
#[derive(Debug, Clone)]
pub struct LabeledDataset {
    pub features: Array2<f64>,
    pub names: Vec<String>,
    pub binary: Vec<BinaryLabel>,
    pub ternary: Vec<TernaryLabel>,
    pub groups: Vec<u32>,
    pub flags: Vec<Vec<String>>,
}

impl LabeledDataset {
    pub fn n_rows(&self) -> usize {
        self.features.nrows()
    }

    /// Class index vector for a task.
    pub fn labels(&self, task: Task) -> Vec<usize> {
        match task {
            Task::Binary => self.binary.iter().map(|l| l.index()).collect(),
            Task::Ternary => self.ternary.iter().map(|l| l.index()).collect(),
        }
    }

    /// Count of rows per class index for a task.
    pub fn class_counts(&self, task: Task) -> Vec<usize> {
        let mut counts = vec![0usize; task.n_classes()];
        for c in self.labels(task) {
            counts[c] += 1;
        }
        counts
    }
}

/// Extract features for every dyad sample and assemble the labeled matrix.
pub fn assemble(dyads: &[DyadSample], cfg: &FeatureConfig) -> Result<LabeledDataset, DatasetError> {
    if dyads.is_empty() {
        return Err(DatasetError::Empty);
    }
    let extracted: Vec<Result<_, FeatureError>> = par_map(dyads, |d| extract_dyad(d, cfg));

    let n_rows = dyads.len() * 2;
    let mut flat = Vec::with_capacity(n_rows * features::N_TOTAL);
    let mut binary = Vec::with_capacity(n_rows);
    let mut ternary = Vec::with_capacity(n_rows);
    let mut groups = Vec::with_capacity(n_rows);
    let mut flags = Vec::with_capacity(n_rows);

    for (dyad, result) in dyads.iter().zip(extracted) {
        let f = result?;
        let b = dyad.binary_label();
        for (individual, own_flags, participant) in [
            (&f.individual_p1, &f.flags_p1, 1u8),
            (&f.individual_p2, &f.flags_p2, 2u8),
        ] {
            flat.extend_from_slice(individual);
            flat.extend_from_slice(&f.synchrony);
            binary.push(b);
            ternary.push(dyad.ternary_label(participant));
            groups.push(dyad.group);
            let mut row_flags = own_flags.clone();
            row_flags.extend(f.flags_shared.iter().cloned());
            flags.push(row_flags);
        }
    }

    let features_arr = Array2::from_shape_vec((n_rows, features::N_TOTAL), flat)
        .expect("row width is constant");
    Ok(LabeledDataset {
        features: features_arr,
        names: features::all_names(),
        binary,
        ternary,
        groups,
        flags,
    })
}

/// Copy of the listed columns, preserving their given order.
pub fn select_columns(x: &Array2<f64>, columns: &[usize]) -> Array2<f64> {
    x.select(Axis(1), columns)
}

/// Write the labeled dataset as CSV: registry feature names plus
/// group_id, binary_label, ternary_label. Quality flags are not serialized.
pub fn write_features_csv(ds: &LabeledDataset, path: &Path) -> Result<(), DatasetError> {
    let wrap_csv = |source: csv::Error| DatasetError::Csv { path: path.to_path_buf(), source };
    let mut w = csv::Writer::from_path(path).map_err(wrap_csv)?;
    let mut header: Vec<String> = ds.names.clone();
    header.extend(["group_id".to_string(), "binary_label".to_string(), "ternary_label".to_string()]);
    w.write_record(&header).map_err(wrap_csv)?;
    for i in 0..ds.n_rows() {
        let mut record: Vec<String> = ds.features.row(i).iter().map(|v| format!("{v}")).collect();
        record.push(ds.groups[i].to_string());
        record.push(ds.binary[i].name().to_string());
        record.push(ds.ternary[i].name().to_string());
        w.write_record(&record).map_err(wrap_csv)?;
    }
    w.flush().map_err(|e| DatasetError::Io { path: path.to_path_buf(), source: e })?;
    Ok(())
}

/// Read back a feature CSV produced by [`write_features_csv`]. The header must
/// match the registry column order exactly.
pub fn read_features_csv(path: &Path) -> Result<LabeledDataset, DatasetError> {
    let wrap_csv = |source: csv::Error| DatasetError::Csv { path: path.to_path_buf(), source };
    let mut r = csv::Reader::from_path(path).map_err(wrap_csv)?;
    let expected = features::all_names();
    let header = r.headers().map_err(wrap_csv)?.clone();
    if header.len() != expected.len() + 3 {
        return Err(DatasetError::HeaderMismatch(header.len().min(expected.len())));
    }
    for (i, name) in expected.iter().enumerate() {
        if header.get(i) != Some(name.as_str()) {
            return Err(DatasetError::HeaderMismatch(i));
        }
    }
    let n_features = expected.len();
    let mut flat = Vec::new();
    let mut binary = Vec::new();
    let mut ternary = Vec::new();
    let mut groups = Vec::new();
    let mut n_rows = 0usize;
    for (row_idx, record) in r.records().enumerate() {
        let record = record.map_err(wrap_csv)?;
        for col in 0..n_features {
            let v: f64 = record
                .get(col)
                .and_then(|s| s.parse().ok())
                .filter(|v: &f64| v.is_finite())
                .ok_or(DatasetError::NotNumeric {
                    path: path.to_path_buf(),
                    row: row_idx + 2,
                    col: col + 1,
                })?;
            flat.push(v);
        }
        let group: u32 = record
            .get(n_features)
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| DatasetError::BadManifest(format!("bad group_id in row {}", row_idx + 2)))?;
        let b: BinaryLabel = record
            .get(n_features + 1)
            .ok_or_else(|| DatasetError::BadManifest("missing binary label".into()))?
            .parse()?;
        let t: TernaryLabel = record
            .get(n_features + 2)
            .ok_or_else(|| DatasetError::BadManifest("missing ternary label".into()))?
            .parse()?;
        groups.push(group);
        binary.push(b);
        ternary.push(t);
        n_rows += 1;
    }
    if n_rows == 0 {
        return Err(DatasetError::Empty);
    }
    Ok(LabeledDataset {
        features: Array2::from_shape_vec((n_rows, n_features), flat).expect("constant width"),
        names: expected,
        binary,
        ternary,
        groups,
        flags: vec![Vec::new(); n_rows],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{ChannelId, FlowScore, ParticipantData, SignalSegment};
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    pub(crate) fn noise_dyad(seed: u64, group: u32, s1: u8, s2: u8) -> DyadSample {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut participant = |idx: u8, score: u8| {
            let segments: Vec<SignalSegment> = ChannelId::FLOW_SUBSET
                .iter()
                .map(|&c| {
                    let samples: Vec<f64> =
                        (0..1536).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
                    SignalSegment::new(c, 256.0, samples).unwrap()
                })
                .collect();
            ParticipantData::new(idx, FlowScore::new(score).unwrap(), segments).unwrap()
        };
        let p1 = participant(1, s1);
        let p2 = participant(2, s2);
        DyadSample::new(group, 1, 1, p1, p2).unwrap()
    }

    #[test]
    fn assemble_shapes_and_labels() {
        let dyads = vec![noise_dyad(1, 10, 3, 2), noise_dyad(2, 11, 2, 0)];
        let ds = assemble(&dyads, &FeatureConfig::default()).unwrap();
        assert_eq!(ds.n_rows(), 4);
        assert_eq!(ds.features.ncols(), 272);
        assert_eq!(ds.names.len(), 272);
        assert_eq!(ds.binary, vec![
            BinaryLabel::High, BinaryLabel::High, BinaryLabel::Low, BinaryLabel::Low
        ]);
        assert_eq!(ds.ternary, vec![
            TernaryLabel::Simultaneous,
            TernaryLabel::Simultaneous,
            TernaryLabel::Individual,
            TernaryLabel::Neither,
        ]);
        assert_eq!(ds.groups, vec![10, 10, 11, 11]);
        // The synchrony block is identical for the two rows of a dyad.
        let row0: Vec<f64> = ds.features.row(0).iter().copied().collect();
        let row1: Vec<f64> = ds.features.row(1).iter().copied().collect();
        assert_eq!(&row0[208..], &row1[208..]);
        assert_ne!(&row0[..208], &row1[..208]);
    }

    #[test]
    fn feature_csv_roundtrip() {
        let dyads = vec![noise_dyad(3, 5, 2, 2)];
        let ds = assemble(&dyads, &FeatureConfig::default()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("features.csv");
        write_features_csv(&ds, &path).unwrap();
        let back = read_features_csv(&path).unwrap();
        assert_eq!(back.n_rows(), ds.n_rows());
        assert_eq!(back.binary, ds.binary);
        assert_eq!(back.ternary, ds.ternary);
        assert_eq!(back.groups, ds.groups);
        for (a, b) in back.features.iter().zip(ds.features.iter()) {
            assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0));
        }
        // Shortest-roundtrip formatting makes the rewrite byte-identical.
        let path2 = dir.path().join("features2.csv");
        write_features_csv(&back, &path2).unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), std::fs::read(&path2).unwrap());
    }
}
