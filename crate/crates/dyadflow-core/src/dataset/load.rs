//! Recording files, channel maps, manifests, and dyad-sample loading.
//!
//! On-disk layout under a data root:
//! - `manifest.csv` with header `group,participant,round,sampling,score`;
//! - one directory per (group, participant, round) named
//!   `{group}-{participant}-{round}`, holding `{sampling}.csv`;
//! - each recording CSV is 14 rows x 1536 numeric samples, one row per
//!   channel in channel-map order (no header).

use super::DatasetError;
use crate::domain::{
    ChannelId, DyadSample, FlowScore, ParticipantData, SignalSegment, SAMPLE_RATE, SEGMENT_LEN,
};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

/// Maps recording-file row indices to channels. Defaults to the headset's
/// canonical order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChannelMap {
    order: [ChannelId; 14],
}

impl Default for ChannelMap {
    fn default() -> Self {
        ChannelMap { order: ChannelId::ALL }
    }
}

impl ChannelMap {
    pub fn new(order: [ChannelId; 14]) -> Result<Self, DatasetError> {
        let mut seen = [false; 14];
        for c in order {
            let i = ChannelId::ALL.iter().position(|a| *a == c).expect("valid channel");
            if seen[i] {
                return Err(DatasetError::BadChannelMap);
            }
            seen[i] = true;
        }
        Ok(ChannelMap { order })
    }

    /// Parse a channel-map file: 14 channel names separated by newlines or commas.
    pub fn from_file(path: &Path) -> Result<Self, DatasetError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| DatasetError::Io { path: path.to_path_buf(), source })?;
        let names: Vec<&str> = text
            .split(|c: char| c == '\n' || c == ',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .collect();
        if names.len() != 14 {
            return Err(DatasetError::BadChannelMap);
        }
        let mut order = [ChannelId::AF3; 14];
        for (i, name) in names.iter().enumerate() {
            order[i] = name.parse().map_err(|_| DatasetError::BadChannelMap)?;
        }
        ChannelMap::new(order)
    }

    pub fn order(&self) -> &[ChannelId; 14] {
        &self.order
    }

    /// Row index of a channel in files using this map.
    pub fn row_of(&self, channel: ChannelId) -> usize {
        self.order.iter().position(|c| *c == channel).expect("complete map")
    }
}

/// A loaded multi-channel recording, rows in channel-map order.
#[derive(Debug, Clone)]
pub struct Recording {
    pub map: ChannelMap,
    pub data: Vec<Vec<f64>>,
}

impl Recording {
    pub fn channel(&self, channel: ChannelId) -> &[f64] {
        &self.data[self.map.row_of(channel)]
    }

    pub fn samples_per_channel(&self) -> usize {
        self.data[0].len()
    }
}

/// Load and validate a 14-row numeric CSV recording. `expected_len` pins the
/// per-row sample count (1536 for dataset segment files); None accepts any
/// uniform length.
pub fn load_recording(
    path: &Path,
    map: &ChannelMap,
    expected_len: Option<usize>,
) -> Result<Recording, DatasetError> {
    let wrap_csv = |source: csv::Error| DatasetError::Csv { path: path.to_path_buf(), source };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_path(path)
        .map_err(wrap_csv)?;
    let mut data: Vec<Vec<f64>> = Vec::with_capacity(14);
    for (row_idx, record) in reader.records().enumerate() {
        let record = record.map_err(wrap_csv)?;
        let mut row = Vec::with_capacity(record.len());
        for (col_idx, field) in record.iter().enumerate() {
            let v: f64 = field.trim().parse().ok().filter(|v: &f64| v.is_finite()).ok_or(
                DatasetError::NotNumeric {
                    path: path.to_path_buf(),
                    row: row_idx + 1,
                    col: col_idx + 1,
                },
            )?;
            row.push(v);
        }
        data.push(row);
    }
    if data.len() != 14 {
        return Err(DatasetError::WrongRowCount {
            path: path.to_path_buf(),
            expected: 14,
            got: data.len(),
        });
    }
    let first = data[0].len();
    if first == 0 {
        return Err(DatasetError::WrongSegmentLen {
            path: path.to_path_buf(),
            expected: expected_len.unwrap_or(1),
            got: 0,
        });
    }
    for row in &data {
        if row.len() != first {
            return Err(DatasetError::RaggedRows {
                path: path.to_path_buf(),
                first,
                other: row.len(),
            });
        }
    }
    if let Some(expected) = expected_len {
        if first != expected {
            return Err(DatasetError::WrongSegmentLen {
                path: path.to_path_buf(),
                expected,
                got: first,
            });
        }
    }
    Ok(Recording { map: map.clone(), data })
}

/// Cut fixed-length segments out of a continuous multi-channel recording.
/// Each sampling point (in seconds) marks the segment end; the segment covers
/// the `segment_len` samples leading up to it.
pub fn slice_segments(
    data: &[Vec<f64>],
    points_secs: &[f64],
    sample_rate: f64,
    segment_len: usize,
) -> Result<Vec<Vec<Vec<f64>>>, DatasetError> {
    let n = data.first().map(|r| r.len()).unwrap_or(0);
    let mut out = Vec::with_capacity(points_secs.len());
    for &point in points_secs {
        let end = (point * sample_rate).round() as i64;
        let start = end - segment_len as i64;
        if start < 0 || end as usize > n {
            return Err(DatasetError::SliceOutOfRange { point_secs: point });
        }
        let (s, e) = (start as usize, end as usize);
        out.push(data.iter().map(|row| row[s..e].to_vec()).collect());
    }
    Ok(out)
}

/// One manifest line: where a segment file lives and its reported score.
#[derive(Debug, Clone, PartialEq)]
pub struct ManifestRow {
    pub group: u32,
    pub participant: u8,
    pub round: u32,
    pub sampling: u32,
    pub score: FlowScore,
}

/// Parse `manifest.csv` (header `group,participant,round,sampling,score`).
pub fn load_manifest(path: &Path) -> Result<Vec<ManifestRow>, DatasetError> {
    let wrap_csv = |source: csv::Error| DatasetError::Csv { path: path.to_path_buf(), source };
    let mut reader = csv::Reader::from_path(path).map_err(wrap_csv)?;
    let header = reader.headers().map_err(wrap_csv)?;
    let expected = ["group", "participant", "round", "sampling", "score"];
    if header.len() != expected.len()
        || header.iter().zip(expected).any(|(h, e)| h.trim() != e)
    {
        return Err(DatasetError::BadManifest(format!(
            "expected header {:?}, got {:?}",
            expected.join(","),
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(wrap_csv)?;
        let line = i + 2;
        let field = |idx: usize| -> Result<&str, DatasetError> {
            record
                .get(idx)
                .map(str::trim)
                .ok_or_else(|| DatasetError::BadManifest(format!("line {line}: missing field")))
        };
        let parse_u32 = |idx: usize, name: &str| -> Result<u32, DatasetError> {
            field(idx)?.parse().map_err(|_| {
                DatasetError::BadManifest(format!("line {line}: bad {name} {:?}", field(idx).unwrap()))
            })
        };
        let group = parse_u32(0, "group")?;
        let participant = parse_u32(1, "participant")? as u8;
        if participant != 1 && participant != 2 {
            return Err(DatasetError::BadManifest(format!(
                "line {line}: participant must be 1 or 2, got {participant}"
            )));
        }
        let round = parse_u32(2, "round")?;
        let sampling = parse_u32(3, "sampling")?;
        let raw_score = parse_u32(4, "score")?;
        let score = FlowScore::new(raw_score as u8)
            .map_err(|_| DatasetError::BadManifest(format!("line {line}: score {raw_score} outside 0-3")))?;
        rows.push(ManifestRow { group, participant, round, sampling, score });
    }
    Ok(rows)
}

/// Counters from a dataset load.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct LoadSummary {
    pub dyad_samples: usize,
    pub files_loaded: usize,
    /// Manifest rows whose partner row was absent; their sampling is skipped.
    pub skipped_unpaired: usize,
}

/// Load every paired dyad sample under a data root. Samplings present for
/// only one participant are skipped and counted, not errors: the manifest is
/// not assumed complete.
pub fn load_dataset(
    root: &Path,
    map: &ChannelMap,
) -> Result<(Vec<DyadSample>, LoadSummary), DatasetError> {
    let manifest = load_manifest(&root.join("manifest.csv"))?;
    let mut by_key: BTreeMap<(u32, u32, u32), [Option<FlowScore>; 2]> = BTreeMap::new();
    for row in &manifest {
        let entry = by_key.entry((row.group, row.round, row.sampling)).or_default();
        let slot = &mut entry[(row.participant - 1) as usize];
        if slot.is_some() {
            return Err(DatasetError::BadManifest(format!(
                "duplicate manifest row for group {} participant {} round {} sampling {}",
                row.group, row.participant, row.round, row.sampling
            )));
        }
        *slot = Some(row.score);
    }

    let mut dyads = Vec::new();
    let mut summary = LoadSummary::default();
    for ((group, round, sampling), scores) in by_key {
        let (s1, s2) = match scores {
            [Some(s1), Some(s2)] => (s1, s2),
            _ => {
                summary.skipped_unpaired += 1;
                continue;
            }
        };
        let mut participants = Vec::with_capacity(2);
        for (participant, score) in [(1u8, s1), (2u8, s2)] {
            let file = segment_path(root, group, participant, round, sampling);
            let recording = load_recording(&file, map, Some(SEGMENT_LEN))?;
            summary.files_loaded += 1;
            let segments: Vec<SignalSegment> = ChannelId::FLOW_SUBSET
                .iter()
                .map(|&c| SignalSegment::new(c, SAMPLE_RATE, recording.channel(c).to_vec()))
                .collect::<Result<_, _>>()?;
            participants.push(ParticipantData::new(participant, score, segments)?);
        }
        let p2 = participants.pop().expect("two participants");
        let p1 = participants.pop().expect("two participants");
        dyads.push(DyadSample::new(group, round, sampling, p1, p2)?);
        summary.dyad_samples += 1;
    }
    if dyads.is_empty() {
        return Err(DatasetError::Empty);
    }
    Ok((dyads, summary))
}

/// Path of one participant's segment file under the data root.
pub fn segment_path(root: &Path, group: u32, participant: u8, round: u32, sampling: u32) -> PathBuf {
    root.join(format!("{group}-{participant}-{round}")).join(format!("{sampling}.csv"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_recording(path: &Path, rows: usize, cols: usize, offset: f64) {
        let mut f = std::fs::File::create(path).unwrap();
        for r in 0..rows {
            let line: Vec<String> =
                (0..cols).map(|c| format!("{}", offset + (r * cols + c) as f64 * 0.001)).collect();
            writeln!(f, "{}", line.join(",")).unwrap();
        }
    }

    #[test]
    fn recording_shape_validation() {
        let dir = tempfile::tempdir().unwrap();
        let good = dir.path().join("good.csv");
        write_recording(&good, 14, 64, 0.0);
        let rec = load_recording(&good, &ChannelMap::default(), Some(64)).unwrap();
        assert_eq!(rec.data.len(), 14);
        assert_eq!(rec.samples_per_channel(), 64);
        // Channel lookup respects the map.
        assert_eq!(rec.channel(ChannelId::AF3)[0], 0.0);

        let short = dir.path().join("short.csv");
        write_recording(&short, 13, 64, 0.0);
        assert!(matches!(
            load_recording(&short, &ChannelMap::default(), Some(64)),
            Err(DatasetError::WrongRowCount { .. })
        ));

        let bad = dir.path().join("bad.csv");
        let mut f = std::fs::File::create(&bad).unwrap();
        for _ in 0..13 {
            writeln!(f, "1,2,3").unwrap();
        }
        writeln!(f, "1,x,3").unwrap();
        drop(f);
        assert!(matches!(
            load_recording(&bad, &ChannelMap::default(), None),
            Err(DatasetError::NotNumeric { .. })
        ));
    }

    #[test]
    fn channel_map_parsing() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("map.txt");
        std::fs::write(&path, "AF3\nF7\nF3\nFC5\nT7\nP7\nO1\nO2\nP8\nT8\nFC6\nF4\nF8\nAF4\n").unwrap();
        assert_eq!(ChannelMap::from_file(&path).unwrap(), ChannelMap::default());
        std::fs::write(&path, "AF3,AF3,F3,FC5,T7,P7,O1,O2,P8,T8,FC6,F4,F8,AF4").unwrap();
        assert!(matches!(ChannelMap::from_file(&path), Err(DatasetError::BadChannelMap)));
    }

    #[test]
    fn slicing_windows_end_at_points() {
        let data: Vec<Vec<f64>> = (0..2).map(|r| (0..100).map(|i| (r * 100 + i) as f64).collect()).collect();
        let segs = slice_segments(&data, &[5.0, 10.0], 10.0, 20).unwrap();
        assert_eq!(segs.len(), 2);
        assert_eq!(segs[0][0], (30..50).map(|v| v as f64).collect::<Vec<_>>());
        assert_eq!(segs[1][1], (180..200).map(|v| v as f64).collect::<Vec<_>>());
        assert!(matches!(
            slice_segments(&data, &[1.0], 10.0, 20),
            Err(DatasetError::SliceOutOfRange { .. })
        ));
        assert!(matches!(
            slice_segments(&data, &[11.0], 10.0, 20),
            Err(DatasetError::SliceOutOfRange { .. })
        ));
    }

    #[test]
    fn dataset_loading_pairs_and_skips() {
        let dir = tempfile::tempdir().unwrap();
        let root = dir.path();
        let manifest = "group,participant,round,sampling,score\n\
                        1,1,1,1,3\n1,2,1,1,2\n\
                        1,1,1,2,1\n1,2,1,2,0\n\
                        2,1,1,1,2\n";
        std::fs::write(root.join("manifest.csv"), manifest).unwrap();
        for (g, p, r, s) in [(1, 1, 1, 1), (1, 2, 1, 1), (1, 1, 1, 2), (1, 2, 1, 2)] {
            let d = root.join(format!("{g}-{p}-{r}"));
            std::fs::create_dir_all(&d).unwrap();
            write_recording(&d.join(format!("{s}.csv")), 14, 1536, (p * 10) as f64);
        }
        let (dyads, summary) = load_dataset(root, &ChannelMap::default()).unwrap();
        assert_eq!(dyads.len(), 2);
        assert_eq!(summary.dyad_samples, 2);
        assert_eq!(summary.skipped_unpaired, 1);
        assert_eq!(summary.files_loaded, 4);
        assert_eq!(dyads[0].binary_label(), crate::domain::BinaryLabel::High);
        assert_eq!(dyads[1].binary_label(), crate::domain::BinaryLabel::Low);
        // Deterministic ordering by (group, round, sampling).
        assert!(dyads[0].sampling < dyads[1].sampling);
    }

    #[test]
    fn manifest_rejects_bad_rows() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("manifest.csv");
        std::fs::write(&path, "group,participant,round,sampling,score\n1,3,1,1,2\n").unwrap();
        assert!(matches!(load_manifest(&path), Err(DatasetError::BadManifest(_))));
        std::fs::write(&path, "group,participant,round,sampling,score\n1,1,1,1,7\n").unwrap();
        assert!(matches!(load_manifest(&path), Err(DatasetError::BadManifest(_))));
        std::fs::write(&path, "g,p,r,s,score\n").unwrap();
        assert!(matches!(load_manifest(&path), Err(DatasetError::BadManifest(_))));
    }
}
