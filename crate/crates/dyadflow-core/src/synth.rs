//! Deterministic synthetic dyad generator.
//!
//! Every recording is a sum of four band-limited components plus a white
//! noise floor. A component is synthesized by drawing Gaussian coefficients
//! for exactly one group of a 5-level db4 decomposition and reconstructing,
//! so it lives in the same subspace the analysis side projects onto and the
//! planted structure survives feature extraction.
//!
//! Two effects carry the labels:
//! - frontal band power multipliers keyed on each participant's own score,
//! - inter-brain coupling on samples where both scores are high: each flow
//!   channel's band component is mixed as sqrt(1-k^2) * own + k * shared,
//!   with the shared part drawn once per (sample, band). Both mixtures have
//!   unit variance and covariance k^2, so the expected inter-brain
//!   correlation is k^2 (see [`expected_coupling_r`]).
//!
//! Determinism: every random draw comes from a ChaCha8 stream whose seed is
//! derived from the config seed and the draw's coordinates (pair, round,
//! sampling, participant, channel). Output is a pure function of the config,
//! and the on-disk and in-memory paths produce bit-identical samples.

use crate::dataset::segment_path;
use crate::domain::{
    label_binary, BinaryLabel, ChannelId, DomainError, DyadSample, FlowScore, ParticipantData,
    Region, SignalSegment, SAMPLE_RATE, SEGMENT_LEN,
};
use crate::dsp::{
    band_group, wavedec, waverec, Band, DspError, WaveletDecomposition, BAND_LEVELS,
};
use crate::seeding::stream_seed;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("{what} must be at least 1")]
    BadCount { what: &'static str },
    #[error("coupling {0} outside [0, 1]")]
    BadCoupling(f64),
    #[error("noise floor {0} must be finite and non-negative")]
    BadNoiseFloor(f64),
    #[error("amplitude jitter {0} must be finite and non-negative")]
    BadJitter(f64),
    #[error("band gain for score {score}, band index {band} is {value}; gains must be finite and positive")]
    BadGain { score: usize, band: usize, value: f64 },
    #[error("bad score distribution: {0}")]
    BadDistribution(String),
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error(transparent)]
    Dsp(#[from] DspError),
    #[error("io error at {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Joint distribution over the two participants' scores, a 4x4 probability
/// matrix indexed `[score1][score2]`. Stored normalized; serializes as the
/// bare matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "[[f64; 4]; 4]", try_from = "[[f64; 4]; 4]")]
pub struct JointScoreDist {
    cells: [[f64; 4]; 4],
}

impl JointScoreDist {
    pub fn new(cells: [[f64; 4]; 4]) -> Result<Self, SynthError> {
        let mut sum = 0.0;
        for row in &cells {
            for &p in row {
                if !p.is_finite() || p < 0.0 {
                    return Err(SynthError::BadDistribution(format!(
                        "cell probability {p} is not a finite non-negative number"
                    )));
                }
                sum += p;
            }
        }
        if sum <= 0.0 {
            return Err(SynthError::BadDistribution("all cells are zero".into()));
        }
        let mut normalized = cells;
        for row in &mut normalized {
            for p in row {
                *p /= sum;
            }
        }
        Ok(JointScoreDist { cells: normalized })
    }

    /// Build from the four coarse block masses (both low, 1 low 2 high,
    /// 1 high 2 low, both high), spread uniformly over each block's four
    /// score cells. Low means 0 or 1, high means 2 or 3.
    pub fn coarse(ll: f64, lh: f64, hl: f64, hh: f64) -> Result<Self, SynthError> {
        let mut cells = [[0.0; 4]; 4];
        for (s1, row) in cells.iter_mut().enumerate() {
            for (s2, cell) in row.iter_mut().enumerate() {
                let block = match (s1 >= 2, s2 >= 2) {
                    (false, false) => ll,
                    (false, true) => lh,
                    (true, false) => hl,
                    (true, true) => hh,
                };
                *cell = block / 4.0;
            }
        }
        JointScoreDist::new(cells)
    }

    pub fn cells(&self) -> &[[f64; 4]; 4] {
        &self.cells
    }

    /// Probability that both participants report high flow.
    pub fn high_high(&self) -> f64 {
        (2..4).flat_map(|a| (2..4).map(move |b| self.cells[a][b])).sum()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (FlowScore, FlowScore) {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut last = (0, 0);
        for s1 in 0..4 {
            for s2 in 0..4 {
                let p = self.cells[s1][s2];
                if p > 0.0 {
                    last = (s1, s2);
                    acc += p;
                    if u < acc {
                        return score_pair(s1, s2);
                    }
                }
            }
        }
        // Rounding can leave acc a hair under 1; land on the last live cell.
        score_pair(last.0, last.1)
    }
}

impl Default for JointScoreDist {
    fn default() -> Self {
        JointScoreDist::coarse(0.031, 0.17, 0.17, 0.629).expect("valid default masses")
    }
}

impl TryFrom<[[f64; 4]; 4]> for JointScoreDist {
    type Error = SynthError;
    fn try_from(cells: [[f64; 4]; 4]) -> Result<Self, Self::Error> {
        JointScoreDist::new(cells)
    }
}

impl From<JointScoreDist> for [[f64; 4]; 4] {
    fn from(d: JointScoreDist) -> Self {
        d.cells
    }
}

fn score_pair(s1: usize, s2: usize) -> (FlowScore, FlowScore) {
    (FlowScore::new(s1 as u8).expect("0..=3"), FlowScore::new(s2 as u8).expect("0..=3"))
}

/// Frontal band power multipliers `[score][band]` with a single strength
/// knob: score s scales band b's power by 1 + strength * s * w_b, where the
/// band weights favor theta, then alpha, then beta, and barely move delta.
/// Strength 0 gives all ones, which removes every individual-feature cue.
pub fn band_gain_profile(strength: f64) -> [[f64; 4]; 4] {
    const WEIGHT: [f64; 4] = [0.25, 1.0, 0.75, 0.5];
    let mut gain = [[1.0; 4]; 4];
    for (s, row) in gain.iter_mut().enumerate() {
        for (b, g) in row.iter_mut().enumerate() {
            *g = 1.0 + strength * s as f64 * WEIGHT[b];
        }
    }
    gain
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub n_pairs: usize,
    /// Rounds per pair. Scores are drawn once per (pair, round) and shared
    /// by all samplings of that round.
    pub n_rounds: usize,
    /// Segments cut from each round.
    pub n_samplings: usize,
    /// Mixing weight k in [0, 1] for the shared component on both-high
    /// samples. The expected inter-brain correlation is k^2.
    pub coupling: f64,
    /// Frontal band power multipliers `[score][band]`.
    pub band_gain: [[f64; 4]; 4],
    /// Log-amplitude standard deviation of a per-(channel, band, sample)
    /// wobble. Without it every band power pins exactly to the gain table
    /// and a classifier can read scores off a single feature.
    pub amplitude_jitter: f64,
    /// Amplitude of the white noise added to every channel.
    pub noise_floor: f64,
    pub score_dist: JointScoreDist,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_pairs: 47,
            n_rounds: 3,
            n_samplings: 5,
            coupling: 0.8,
            band_gain: band_gain_profile(0.2),
            amplitude_jitter: 0.35,
            noise_floor: 0.1,
            score_dist: JointScoreDist::default(),
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<(), SynthError> {
        for (value, what) in [
            (self.n_pairs, "n_pairs"),
            (self.n_rounds, "n_rounds"),
            (self.n_samplings, "n_samplings"),
        ] {
            if value == 0 {
                return Err(SynthError::BadCount { what });
            }
        }
        if !self.coupling.is_finite() || !(0.0..=1.0).contains(&self.coupling) {
            return Err(SynthError::BadCoupling(self.coupling));
        }
        if !self.noise_floor.is_finite() || self.noise_floor < 0.0 {
            return Err(SynthError::BadNoiseFloor(self.noise_floor));
        }
        if !self.amplitude_jitter.is_finite() || self.amplitude_jitter < 0.0 {
            return Err(SynthError::BadJitter(self.amplitude_jitter));
        }
        for (score, row) in self.band_gain.iter().enumerate() {
            for (band, &value) in row.iter().enumerate() {
                if !value.is_finite() || value <= 0.0 {
                    return Err(SynthError::BadGain { score, band, value });
                }
            }
        }
        Ok(())
    }

    pub fn n_dyad_samples(&self) -> usize {
        self.n_pairs * self.n_rounds * self.n_samplings
    }
}

/// Expected Pearson correlation between the two participants' band
/// components on coupled samples, for mixing weight k.
pub fn expected_coupling_r(coupling: f64) -> f64 {
    coupling * coupling
}

/// Counters from a generation run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SynthSummary {
    pub dyad_samples: usize,
    pub files_written: usize,
    /// Dyad samples whose binary label is High.
    pub high_samples: usize,
}

struct SampleMeta {
    group: u32,
    round: u32,
    sampling: u32,
    scores: (FlowScore, FlowScore),
    coupled: bool,
}

// Seed stream layout under a sample seed: 0..4 shared band components,
// 4 + participant * 14 + channel_row for per-channel draws.
const SHARED_STREAMS: u64 = 4;

fn band_component(
    rng: &mut ChaCha8Rng,
    template: &WaveletDecomposition,
    band: Band,
) -> Vec<f64> {
    let mut dec = template.clone();
    let coeffs = dec.group_mut(band_group(band)).expect("template has 5 levels");
    for c in coeffs.iter_mut() {
        *c = StandardNormal.sample(rng);
    }
    let mut signal = waverec(&dec);
    let rms = (signal.iter().map(|v| v * v).sum::<f64>() / signal.len() as f64).sqrt();
    if rms > 0.0 {
        for v in &mut signal {
            *v /= rms;
        }
    }
    signal
}

/// All 14 channels of both participants for one dyad sample, rows in
/// canonical headset order.
fn synth_sample(
    cfg: &SynthConfig,
    template: &WaveletDecomposition,
    sample_seed: u64,
    scores: (FlowScore, FlowScore),
    coupled: bool,
) -> [Vec<Vec<f64>>; 2] {
    let shared: Option<Vec<Vec<f64>>> = coupled.then(|| {
        Band::ALL
            .iter()
            .map(|&band| {
                let seed = stream_seed(sample_seed, band.index() as u64);
                band_component(&mut ChaCha8Rng::seed_from_u64(seed), template, band)
            })
            .collect()
    });
    let own_weight = (1.0 - cfg.coupling * cfg.coupling).sqrt();

    let mut out: [Vec<Vec<f64>>; 2] = [Vec::with_capacity(14), Vec::with_capacity(14)];
    for (participant, channels) in out.iter_mut().enumerate() {
        let score = if participant == 0 { scores.0 } else { scores.1 };
        for (row, &channel) in ChannelId::ALL.iter().enumerate() {
            let stream = SHARED_STREAMS + (participant as u64) * 14 + row as u64;
            let mut rng = ChaCha8Rng::seed_from_u64(stream_seed(sample_seed, stream));
            let mut signal = vec![0.0; SEGMENT_LEN];
            for &band in &Band::ALL {
                let own = band_component(&mut rng, template, band);
                let wobble: f64 = StandardNormal.sample(&mut rng);
                let mix = coupled && channel.is_flow_channel();
                // Power multipliers act on amplitude as sqrt(gain); only
                // frontal channels carry the score signature.
                let gain = if channel.region() == Some(Region::Frontal) {
                    cfg.band_gain[score.value() as usize][band.index()]
                } else {
                    1.0
                };
                let amp = gain.sqrt() * (cfg.amplitude_jitter * wobble).exp();
                if mix {
                    let shared_band = &shared.as_ref().expect("coupled")[band.index()];
                    for (s, (o, h)) in signal.iter_mut().zip(own.iter().zip(shared_band)) {
                        *s += amp * (own_weight * o + cfg.coupling * h);
                    }
                } else {
                    for (s, o) in signal.iter_mut().zip(&own) {
                        *s += amp * o;
                    }
                }
            }
            if cfg.noise_floor > 0.0 {
                for s in &mut signal {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    *s += cfg.noise_floor * z;
                }
            }
            channels.push(signal);
        }
    }
    out
}

fn for_each_sample<F>(cfg: &SynthConfig, mut visit: F) -> Result<(), SynthError>
where
    F: FnMut(&SampleMeta, [Vec<Vec<f64>>; 2]) -> Result<(), SynthError>,
{
    cfg.validate()?;
    let template = wavedec(&vec![0.0; SEGMENT_LEN], BAND_LEVELS)?;
    let scores_root = stream_seed(cfg.seed, 1);
    let signals_root = stream_seed(cfg.seed, 2);
    for pair in 0..cfg.n_pairs {
        for round in 0..cfg.n_rounds {
            let round_index = (pair * cfg.n_rounds + round) as u64;
            let mut score_rng = ChaCha8Rng::seed_from_u64(stream_seed(scores_root, round_index));
            let scores = cfg.score_dist.sample(&mut score_rng);
            let coupled = cfg.coupling > 0.0
                && label_binary(scores.0, scores.1) == BinaryLabel::High;
            for sampling in 0..cfg.n_samplings {
                let sample_index = round_index * cfg.n_samplings as u64 + sampling as u64;
                let sample_seed = stream_seed(signals_root, sample_index);
                let channels = synth_sample(cfg, &template, sample_seed, scores, coupled);
                let meta = SampleMeta {
                    group: (pair + 1) as u32,
                    round: (round + 1) as u32,
                    sampling: (sampling + 1) as u32,
                    scores,
                    coupled,
                };
                visit(&meta, channels)?;
            }
        }
    }
    Ok(())
}

/// Generate every dyad sample in memory, in (group, round, sampling) order.
pub fn generate_dyads(cfg: &SynthConfig) -> Result<Vec<DyadSample>, SynthError> {
    let flow_rows: Vec<usize> = ChannelId::FLOW_SUBSET
        .iter()
        .map(|c| ChannelId::ALL.iter().position(|a| a == c).expect("subset of ALL"))
        .collect();
    let mut dyads = Vec::with_capacity(cfg.n_dyad_samples());
    for_each_sample(cfg, |meta, channels| {
        let mut participants = Vec::with_capacity(2);
        for (idx, rows) in channels.iter().enumerate() {
            let segments: Vec<SignalSegment> = ChannelId::FLOW_SUBSET
                .iter()
                .zip(&flow_rows)
                .map(|(&c, &row)| SignalSegment::new(c, SAMPLE_RATE, rows[row].clone()))
                .collect::<Result<_, _>>()?;
            let score = if idx == 0 { meta.scores.0 } else { meta.scores.1 };
            participants.push(ParticipantData::new(idx as u8 + 1, score, segments)?);
        }
        let p2 = participants.pop().expect("two participants");
        let p1 = participants.pop().expect("two participants");
        dyads.push(DyadSample::new(meta.group, meta.round, meta.sampling, p1, p2)?);
        Ok(())
    })?;
    Ok(dyads)
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> SynthError + '_ {
    move |source| SynthError::Io { path: path.to_path_buf(), source }
}

fn write_recording_csv(path: &Path, rows: &[Vec<f64>]) -> Result<(), SynthError> {
    let file = std::fs::File::create(path).map_err(io_err(path))?;
    let mut w = std::io::BufWriter::new(file);
    for row in rows {
        let mut first = true;
        for v in row {
            if !first {
                w.write_all(b",").map_err(io_err(path))?;
            }
            // Display emits the shortest string that parses back to the
            // same f64, so a written dataset reloads bit-identically.
            write!(w, "{v}").map_err(io_err(path))?;
            first = false;
        }
        w.write_all(b"\n").map_err(io_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

/// Generate a dataset under `root` in the layout the loader expects:
/// recording files plus `manifest.csv`, and a `ground_truth.csv` with the
/// dyad-level labels and coupling flags (header
/// `group,round,sampling,score1,score2,binary_label,coupled`).
pub fn generate_to_dir(cfg: &SynthConfig, root: &Path) -> Result<SynthSummary, SynthError> {
    std::fs::create_dir_all(root).map_err(io_err(root))?;
    let mut summary = SynthSummary::default();
    let mut manifest = String::from("group,participant,round,sampling,score\n");
    let mut truth = String::from("group,round,sampling,score1,score2,binary_label,coupled\n");
    for_each_sample(cfg, |meta, channels| {
        for (idx, rows) in channels.iter().enumerate() {
            let participant = idx as u8 + 1;
            let path = segment_path(root, meta.group, participant, meta.round, meta.sampling);
            let dir = path.parent().expect("segment paths have a parent");
            std::fs::create_dir_all(dir).map_err(io_err(dir))?;
            write_recording_csv(&path, rows)?;
            summary.files_written += 1;
            let score = if idx == 0 { meta.scores.0 } else { meta.scores.1 };
            manifest.push_str(&format!(
                "{},{},{},{},{}\n",
                meta.group,
                participant,
                meta.round,
                meta.sampling,
                score.value()
            ));
        }
        let label = label_binary(meta.scores.0, meta.scores.1);
        truth.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            meta.group,
            meta.round,
            meta.sampling,
            meta.scores.0.value(),
            meta.scores.1.value(),
            label.name(),
            meta.coupled as u8
        ));
        summary.dyad_samples += 1;
        if label == BinaryLabel::High {
            summary.high_samples += 1;
        }
        Ok(())
    })?;
    // The manifest lands last: a partially written tree has no manifest and
    // fails to load instead of silently loading a subset.
    let manifest_path = root.join("manifest.csv");
    std::fs::write(&manifest_path, manifest).map_err(io_err(&manifest_path))?;
    let truth_path = root.join("ground_truth.csv");
    std::fs::write(&truth_path, truth).map_err(io_err(&truth_path))?;
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{load_dataset, ChannelMap};
    use crate::dsp::{band_decompose, band_power, welch_psd, WelchConfig};

    fn pearson(a: &[f64], b: &[f64]) -> f64 {
        let n = a.len() as f64;
        let ma = a.iter().sum::<f64>() / n;
        let mb = b.iter().sum::<f64>() / n;
        let mut cov = 0.0;
        let mut va = 0.0;
        let mut vb = 0.0;
        for (x, y) in a.iter().zip(b) {
            cov += (x - ma) * (y - mb);
            va += (x - ma) * (x - ma);
            vb += (y - mb) * (y - mb);
        }
        cov / (va.sqrt() * vb.sqrt())
    }

    fn small_config() -> SynthConfig {
        SynthConfig { n_pairs: 2, n_rounds: 1, n_samplings: 1, seed: 9, ..SynthConfig::default() }
    }

    #[test]
    fn score_dist_validates_and_normalizes() {
        assert!(matches!(
            JointScoreDist::new([[-0.1; 4]; 4]),
            Err(SynthError::BadDistribution(_))
        ));
        assert!(matches!(JointScoreDist::new([[0.0; 4]; 4]), Err(SynthError::BadDistribution(_))));
        let mut cells = [[0.0; 4]; 4];
        cells[1][2] = 3.0;
        cells[3][3] = 1.0;
        let d = JointScoreDist::new(cells).unwrap();
        assert!((d.cells()[1][2] - 0.75).abs() < 1e-12);
        assert!((d.high_high() - 0.25).abs() < 1e-12);

        let default = JointScoreDist::default();
        assert!((default.high_high() - 0.629).abs() < 1e-9);
        let total: f64 = default.cells().iter().flatten().sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn score_sampling_matches_cell_masses() {
        let d = JointScoreDist::default();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 20_000;
        let mut both_high = 0usize;
        let mut cell_00 = 0usize;
        for _ in 0..n {
            let (a, b) = d.sample(&mut rng);
            if a.is_high() && b.is_high() {
                both_high += 1;
            }
            if a.value() == 0 && b.value() == 0 {
                cell_00 += 1;
            }
        }
        let hh = both_high as f64 / n as f64;
        assert!((hh - 0.629).abs() < 0.015, "both-high rate {hh}");
        // Each both-low cell carries 0.031 / 4.
        let c00 = cell_00 as f64 / n as f64;
        assert!((c00 - 0.031 / 4.0).abs() < 0.005, "cell (0,0) rate {c00}");
    }

    #[test]
    fn config_validation_rejects_bad_fields() {
        let mut cfg = SynthConfig::default();
        cfg.n_rounds = 0;
        assert!(matches!(cfg.validate(), Err(SynthError::BadCount { what: "n_rounds" })));
        let mut cfg = SynthConfig::default();
        cfg.coupling = 1.5;
        assert!(matches!(cfg.validate(), Err(SynthError::BadCoupling(_))));
        let mut cfg = SynthConfig::default();
        cfg.noise_floor = -0.1;
        assert!(matches!(cfg.validate(), Err(SynthError::BadNoiseFloor(_))));
        let mut cfg = SynthConfig::default();
        cfg.amplitude_jitter = f64::NAN;
        assert!(matches!(cfg.validate(), Err(SynthError::BadJitter(_))));
        let mut cfg = SynthConfig::default();
        cfg.band_gain[2][1] = 0.0;
        assert!(matches!(cfg.validate(), Err(SynthError::BadGain { score: 2, band: 1, .. })));
        assert!(SynthConfig::default().validate().is_ok());
    }

    #[test]
    fn generation_is_deterministic_and_seed_sensitive() {
        let cfg = small_config();
        let a = generate_dyads(&cfg).unwrap();
        let b = generate_dyads(&cfg).unwrap();
        assert_eq!(a.len(), cfg.n_dyad_samples());
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.p1.score, y.p1.score);
            for (sx, sy) in x.p1.segments.iter().zip(&y.p1.segments) {
                assert_eq!(sx.samples, sy.samples);
            }
            for (sx, sy) in x.p2.segments.iter().zip(&y.p2.segments) {
                assert_eq!(sx.samples, sy.samples);
            }
        }
        let other = generate_dyads(&SynthConfig { seed: 10, ..cfg }).unwrap();
        assert_ne!(a[0].p1.segments[0].samples, other[0].p1.segments[0].samples);
    }

    #[test]
    fn scores_hold_within_a_round() {
        let cfg = SynthConfig {
            n_pairs: 4,
            n_rounds: 2,
            n_samplings: 3,
            seed: 3,
            ..SynthConfig::default()
        };
        let dyads = generate_dyads(&cfg).unwrap();
        assert_eq!(dyads.len(), 24);
        for chunk in dyads.chunks(cfg.n_samplings) {
            let first = (chunk[0].p1.score, chunk[0].p2.score);
            for d in chunk {
                assert_eq!((d.p1.score, d.p2.score), first);
                assert_eq!(d.group, chunk[0].group);
                assert_eq!(d.round, chunk[0].round);
            }
        }
    }

    #[test]
    fn coupling_plants_interbrain_correlation_on_high_samples() {
        let cfg = SynthConfig {
            n_pairs: 16,
            n_rounds: 1,
            n_samplings: 1,
            coupling: 0.8,
            band_gain: band_gain_profile(0.0),
            amplitude_jitter: 0.35,
            noise_floor: 0.05,
            score_dist: JointScoreDist::coarse(0.5, 0.0, 0.0, 0.5).unwrap(),
            seed: 17,
        };
        let dyads = generate_dyads(&cfg).unwrap();
        let mut high_r = Vec::new();
        let mut low_r = Vec::new();
        for d in &dyads {
            let mut rs = Vec::new();
            for (sa, sb) in d.p1.segments.iter().zip(&d.p2.segments) {
                let ba = band_decompose(&sa.samples, SAMPLE_RATE).unwrap();
                let bb = band_decompose(&sb.samples, SAMPLE_RATE).unwrap();
                for band in Band::ALL {
                    rs.push(pearson(ba.get(band), bb.get(band)));
                }
            }
            let mean = rs.iter().sum::<f64>() / rs.len() as f64;
            if d.binary_label() == BinaryLabel::High {
                high_r.push(mean);
            } else {
                low_r.push(mean);
            }
        }
        assert!(high_r.len() >= 3 && low_r.len() >= 3, "seed gave {} high / {} low", high_r.len(), low_r.len());
        let high = high_r.iter().sum::<f64>() / high_r.len() as f64;
        let low = low_r.iter().sum::<f64>() / low_r.len() as f64;
        let expected = expected_coupling_r(cfg.coupling);
        assert!((high - expected).abs() < 0.08, "high-sample r {high}, expected near {expected}");
        assert!(low.abs() < 0.08, "uncoupled r {low}");
    }

    #[test]
    fn frontal_gains_raise_band_power_with_score() {
        let cfg = SynthConfig {
            n_pairs: 20,
            n_rounds: 1,
            n_samplings: 1,
            coupling: 0.0,
            band_gain: band_gain_profile(0.6),
            amplitude_jitter: 0.0,
            noise_floor: 0.05,
            score_dist: JointScoreDist::coarse(0.5, 0.0, 0.0, 0.5).unwrap(),
            seed: 29,
        };
        let dyads = generate_dyads(&cfg).unwrap();
        let theta = |channel: usize, high: bool| {
            let mut powers = Vec::new();
            for d in &dyads {
                for p in [&d.p1, &d.p2] {
                    if p.score.is_high() == high {
                        let spec = welch_psd(
                            &p.segments[channel].samples,
                            SAMPLE_RATE,
                            &WelchConfig::default(),
                        )
                        .unwrap();
                        powers.push(band_power(&spec, Band::Theta).unwrap());
                    }
                }
            }
            assert!(powers.len() >= 8);
            powers.iter().sum::<f64>() / powers.len() as f64
        };
        // AF3 is frontal, T7 is not; FLOW_SUBSET puts them at rows 0 and 3.
        let frontal_ratio = theta(0, true) / theta(0, false);
        let temporal_ratio = theta(3, true) / theta(3, false);
        assert!(frontal_ratio > 1.4, "frontal theta ratio {frontal_ratio}");
        assert!((0.7..1.4).contains(&temporal_ratio), "temporal theta ratio {temporal_ratio}");
    }

    #[test]
    fn directory_layout_round_trips() {
        let cfg = SynthConfig {
            n_pairs: 2,
            n_rounds: 1,
            n_samplings: 2,
            seed: 41,
            ..SynthConfig::default()
        };
        let dir = tempfile::tempdir().unwrap();
        let summary = generate_to_dir(&cfg, dir.path()).unwrap();
        assert_eq!(summary.dyad_samples, 4);
        assert_eq!(summary.files_written, 8);

        let manifest = std::fs::read_to_string(dir.path().join("manifest.csv")).unwrap();
        assert_eq!(manifest.lines().count(), 9);
        let truth = std::fs::read_to_string(dir.path().join("ground_truth.csv")).unwrap();
        assert_eq!(truth.lines().count(), 5);
        assert!(truth.starts_with("group,round,sampling,score1,score2,binary_label,coupled\n"));

        let (loaded, load_summary) = load_dataset(dir.path(), &ChannelMap::default()).unwrap();
        assert_eq!(load_summary.dyad_samples, 4);
        assert_eq!(load_summary.skipped_unpaired, 0);

        let in_memory = generate_dyads(&cfg).unwrap();
        assert_eq!(loaded.len(), in_memory.len());
        for (a, b) in loaded.iter().zip(&in_memory) {
            assert_eq!((a.group, a.round, a.sampling), (b.group, b.round, b.sampling));
            assert_eq!((a.p1.score, a.p2.score), (b.p1.score, b.p2.score));
            for (sa, sb) in a.p1.segments.iter().zip(&b.p1.segments) {
                assert_eq!(sa.samples, sb.samples, "parsed samples must match bit for bit");
            }
            for (sa, sb) in a.p2.segments.iter().zip(&b.p2.segments) {
                assert_eq!(sa.samples, sb.samples);
            }
        }
    }
}
