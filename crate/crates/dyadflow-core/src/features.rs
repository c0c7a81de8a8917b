//! Feature extraction: 26 features per channel (12 time-domain, 14
//! frequency-domain) over the 8 flow channels, plus the shared synchrony
//! block, with a fixed name registry that defines column order everywhere.
//!
//! Column layout of a full 272-wide row:
//! - 0..208: individual features, channel-major in registry channel order
//!   (AF3, F7, F3, T7, P7, F4, F8, AF4), 26 per channel;
//! - 208..272: synchrony features, channel-major, band inner, CCC then DTW.
//!
//! Degenerate cases (zero variance, zero power) yield 0 for the affected
//! feature plus a quality flag naming it; nothing downstream ever sees NaN.

use crate::domain::{ChannelId, DyadSample, ParticipantData, Region};
use crate::dsp::{
    band_decompose, band_power, denoise, welch_psd, Band, BandSignals, DenoiseConfig, DspError,
    Spectrum, WelchConfig,
};
use crate::synchrony::{self, DtwConfig, SyncError};
use thiserror::Error;

pub const N_TIME_FEATURES: usize = 12;
pub const N_FREQ_FEATURES: usize = 14;
pub const FEATURES_PER_CHANNEL: usize = N_TIME_FEATURES + N_FREQ_FEATURES;
pub const N_CHANNELS: usize = 8;
pub const N_INDIVIDUAL: usize = FEATURES_PER_CHANNEL * N_CHANNELS;
pub const N_SYNCHRONY: usize = synchrony::N_SYNCHRONY;
pub const N_TOTAL: usize = N_INDIVIDUAL + N_SYNCHRONY;

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("segment too short for features: {len} < {min}")]
    TooShort { len: usize, min: usize },
    #[error("channel {channel}: {source}")]
    Channel { channel: ChannelId, source: DspError },
    #[error(transparent)]
    Dsp(#[from] DspError),
    #[error(transparent)]
    Sync(#[from] SyncError),
}

/// Full extraction pipeline settings shared by individual and synchrony paths.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct FeatureConfig {
    /// Apply wavelet denoising before any feature computation.
    pub denoise_enabled: bool,
    pub denoise: DenoiseConfig,
    pub welch: WelchConfig,
    pub dtw: DtwConfig,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig {
            denoise_enabled: true,
            denoise: DenoiseConfig::default(),
            welch: WelchConfig::default(),
            dtw: DtwConfig::default(),
        }
    }
}

/// The 12 time-domain features of one signal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeFeatures {
    pub mean: f64,
    pub sd: f64,
    pub variance: f64,
    /// Average absolute first-order difference.
    pub aafod: f64,
    /// AAFOD normalized by the standard deviation.
    pub nfod: f64,
    pub energy: f64,
    pub power: f64,
    /// Hjorth activity (= variance).
    pub activity: f64,
    /// Hjorth mobility: sd of the first difference over sd of the signal.
    pub mobility: f64,
    /// Zero-crossing count of the mean-removed signal.
    pub hozc: f64,
    /// Peak-to-peak amplitude divided by the sample count.
    pub ppm: f64,
    pub kurtosis: f64,
}

impl TimeFeatures {
    pub fn values(&self) -> [f64; N_TIME_FEATURES] {
        [
            self.mean,
            self.sd,
            self.variance,
            self.aafod,
            self.nfod,
            self.energy,
            self.power,
            self.activity,
            self.mobility,
            self.hozc,
            self.ppm,
            self.kurtosis,
        ]
    }
}

pub const TIME_FEATURE_NAMES: [&str; N_TIME_FEATURES] = [
    "Mean", "SD", "Variance", "AAFOD", "NFOD", "Energy", "Power", "Activity", "Mobility", "HOZC",
    "PPM", "Kurtosis",
];

/// Compute the time-domain features. Population (1/T) normalization
/// throughout. Returns the features and the base names of degenerate ones.
pub fn time_features(x: &[f64]) -> Result<(TimeFeatures, Vec<&'static str>), FeatureError> {
    let t = x.len();
    if t < 2 {
        return Err(FeatureError::TooShort { len: t, min: 2 });
    }
    let tf = t as f64;
    let mean = x.iter().sum::<f64>() / tf;
    let variance = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / tf;
    let sd = variance.sqrt();
    let energy = x.iter().map(|v| v * v).sum::<f64>();
    let power = energy / tf;

    let aafod = x.windows(2).map(|w| (w[1] - w[0]).abs()).sum::<f64>() / (tf - 1.0);

    let nd = tf - 1.0;
    let diff_mean = x.windows(2).map(|w| w[1] - w[0]).sum::<f64>() / nd;
    let diff_var = x
        .windows(2)
        .map(|w| {
            let d = w[1] - w[0] - diff_mean;
            d * d
        })
        .sum::<f64>()
        / nd;
    let diff_sd = diff_var.sqrt();

    let mut hozc = 0.0;
    let mut last = x[0] - mean >= 0.0;
    for v in &x[1..] {
        let cur = v - mean >= 0.0;
        if cur != last {
            hozc += 1.0;
        }
        last = cur;
    }

    let max = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = x.iter().cloned().fold(f64::INFINITY, f64::min);
    let ppm = (max - min) / tf;

    let mut flags = Vec::new();
    let (nfod, mobility, kurtosis) = if sd == 0.0 {
        flags.extend(["NFOD", "Mobility", "Kurtosis"]);
        (0.0, 0.0, 0.0)
    } else {
        let m4 = x.iter().map(|v| (v - mean).powi(4)).sum::<f64>() / tf;
        (aafod / sd, diff_sd / sd, m4 / (variance * variance))
    };

    Ok((
        TimeFeatures {
            mean,
            sd,
            variance,
            aafod,
            nfod,
            energy,
            power,
            activity: variance,
            mobility,
            hozc,
            ppm,
            kurtosis,
        },
        flags,
    ))
}

/// The 14 frequency-domain features of one signal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FreqFeatures {
    /// Welch band powers (mean density over band bins), δ θ α β.
    pub psd: [f64; 4],
    /// Mean of the four band powers.
    pub mean_psd: f64,
    /// Log band power: ln of the mean squared amplitude of each band signal.
    pub lbp: [f64; 4],
    /// Differential entropy of each band signal.
    pub de: [f64; 4],
    /// Differential entropy of the full-band signal.
    pub de_fb: f64,
}

impl FreqFeatures {
    pub fn values(&self) -> [f64; N_FREQ_FEATURES] {
        [
            self.psd[0], self.psd[1], self.psd[2], self.psd[3], self.mean_psd, self.lbp[0],
            self.lbp[1], self.lbp[2], self.lbp[3], self.de[0], self.de[1], self.de[2],
            self.de[3], self.de_fb,
        ]
    }
}

/// Frequency feature base names in value order.
pub fn freq_feature_names() -> Vec<String> {
    let mut names = Vec::with_capacity(N_FREQ_FEATURES);
    for b in Band::ALL {
        names.push(format!("PSD {b}"));
    }
    names.push("Mean PSD".to_string());
    for b in Band::ALL {
        names.push(format!("LBP {b}"));
    }
    for b in Band::ALL {
        names.push(format!("DE {b}"));
    }
    names.push("DE FB".to_string());
    names
}

fn differential_entropy(x: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    if var == 0.0 {
        None
    } else {
        Some(0.5 * (2.0 * std::f64::consts::PI * std::f64::consts::E * var).ln())
    }
}

/// Compute the frequency-domain features from a full-band signal, its band
/// decomposition, and its Welch spectrum. Returns the features and the base
/// names of degenerate ones.
pub fn freq_features(
    full: &[f64],
    bands: &BandSignals,
    spectrum: &Spectrum,
) -> Result<(FreqFeatures, Vec<String>), FeatureError> {
    let mut flags = Vec::new();
    let mut psd = [0.0; 4];
    for b in Band::ALL {
        psd[b.index()] = band_power(spectrum, b)?;
    }
    let mean_psd = psd.iter().sum::<f64>() / 4.0;

    let mut lbp = [0.0; 4];
    let mut de = [0.0; 4];
    for b in Band::ALL {
        let s = bands.get(b);
        let ms = s.iter().map(|v| v * v).sum::<f64>() / s.len() as f64;
        if ms == 0.0 {
            flags.push(format!("LBP {b}"));
        } else {
            lbp[b.index()] = ms.ln();
        }
        match differential_entropy(s) {
            Some(v) => de[b.index()] = v,
            None => flags.push(format!("DE {b}")),
        }
    }
    let de_fb = match differential_entropy(full) {
        Some(v) => v,
        None => {
            flags.push("DE FB".to_string());
            0.0
        }
    };

    Ok((FreqFeatures { psd, mean_psd, lbp, de, de_fb }, flags))
}

/// Names of the 26 per-channel features, in value order, prefixed by channel.
pub fn channel_feature_names(channel: ChannelId) -> Vec<String> {
    let mut names: Vec<String> = TIME_FEATURE_NAMES
        .iter()
        .map(|n| format!("{channel} {n}"))
        .collect();
    names.extend(freq_feature_names().iter().map(|n| format!("{channel} {n}")));
    names
}

/// The 208 individual feature names in column order.
pub fn individual_names() -> Vec<String> {
    ChannelId::FLOW_SUBSET
        .iter()
        .flat_map(|&c| channel_feature_names(c))
        .collect()
}

/// The 64 synchrony feature names in column order.
pub fn synchrony_names() -> Vec<String> {
    synchrony::synchrony_names()
}

/// All 272 feature names in column order: individual block then synchrony block.
pub fn all_names() -> Vec<String> {
    let mut names = individual_names();
    names.extend(synchrony_names());
    names
}

/// Column indices of the individual features of one region's channels.
pub fn individual_indices_for_region(region: Region) -> Vec<usize> {
    let mut idx = Vec::new();
    for (c, ch) in ChannelId::FLOW_SUBSET.iter().enumerate() {
        if ch.region() == Some(region) {
            let base = c * FEATURES_PER_CHANNEL;
            idx.extend(base..base + FEATURES_PER_CHANNEL);
        }
    }
    idx
}

/// Column indices (into the full 272-wide row) of one region's synchrony features.
pub fn synchrony_indices_for_region(region: Region) -> Vec<usize> {
    let per_channel = 2 * Band::ALL.len();
    let mut idx = Vec::new();
    for (c, ch) in ChannelId::FLOW_SUBSET.iter().enumerate() {
        if ch.region() == Some(region) {
            let base = N_INDIVIDUAL + c * per_channel;
            idx.extend(base..base + per_channel);
        }
    }
    idx
}

/// Per-channel preprocessed intermediates shared by feature paths.
struct ChannelPrep {
    signal: Vec<f64>,
    bands: BandSignals,
}

fn prep_channel(samples: &[f64], sample_rate: f64, cfg: &FeatureConfig) -> Result<ChannelPrep, DspError> {
    let signal = if cfg.denoise_enabled {
        denoise(samples, &cfg.denoise)?
    } else {
        samples.to_vec()
    };
    let bands = band_decompose(&signal, sample_rate)?;
    Ok(ChannelPrep { signal, bands })
}

fn channel_features(
    prep: &ChannelPrep,
    sample_rate: f64,
    cfg: &FeatureConfig,
) -> Result<(Vec<f64>, Vec<String>), FeatureError> {
    let spectrum = welch_psd(&prep.signal, sample_rate, &cfg.welch)?;
    let (tf, tflags) = time_features(&prep.signal)?;
    let (ff, fflags) = freq_features(&prep.signal, &prep.bands, &spectrum)?;
    let mut values = Vec::with_capacity(FEATURES_PER_CHANNEL);
    values.extend_from_slice(&tf.values());
    values.extend_from_slice(&ff.values());
    let mut flags: Vec<String> = tflags.into_iter().map(|s| s.to_string()).collect();
    flags.extend(fflags);
    Ok((values, flags))
}

fn prep_participant(p: &ParticipantData, cfg: &FeatureConfig) -> Result<Vec<ChannelPrep>, FeatureError> {
    p.segments
        .iter()
        .map(|seg| {
            prep_channel(&seg.samples, seg.sample_rate, cfg)
                .map_err(|source| FeatureError::Channel { channel: seg.channel, source })
        })
        .collect()
}

fn individual_from_preps(
    preps: &[ChannelPrep],
    sample_rate: f64,
    cfg: &FeatureConfig,
) -> Result<(Vec<f64>, Vec<String>), FeatureError> {
    let mut row = Vec::with_capacity(N_INDIVIDUAL);
    let mut flags = Vec::new();
    for (prep, ch) in preps.iter().zip(ChannelId::FLOW_SUBSET) {
        let (values, base_flags) = channel_features(prep, sample_rate, cfg).map_err(|e| match e {
            FeatureError::Dsp(source) => FeatureError::Channel { channel: ch, source },
            other => other,
        })?;
        row.extend(values);
        flags.extend(base_flags.into_iter().map(|f| format!("{ch} {f}")));
    }
    debug_assert_eq!(row.len(), N_INDIVIDUAL);
    Ok((row, flags))
}

/// The 208 individual features of one participant, plus quality flags naming
/// any degenerate features ("F3 NFOD", "AF4 LBP δ", ...).
pub fn extract_individual(
    p: &ParticipantData,
    cfg: &FeatureConfig,
) -> Result<(Vec<f64>, Vec<String>), FeatureError> {
    let preps = prep_participant(p, cfg)?;
    individual_from_preps(&preps, p.segments[0].sample_rate, cfg)
}

/// Everything extracted from one dyad sample: a 208-wide row per participant
/// and the shared 64-wide synchrony block.
#[derive(Debug, Clone)]
pub struct DyadFeatures {
    pub individual_p1: Vec<f64>,
    pub individual_p2: Vec<f64>,
    pub synchrony: Vec<f64>,
    pub flags_p1: Vec<String>,
    pub flags_p2: Vec<String>,
    pub flags_shared: Vec<String>,
}

/// Extract individual and synchrony features from one dyad sample, computing
/// the denoised band decomposition of each channel exactly once.
pub fn extract_dyad(dyad: &DyadSample, cfg: &FeatureConfig) -> Result<DyadFeatures, FeatureError> {
    let rate = dyad.p1.segments[0].sample_rate;
    let preps1 = prep_participant(&dyad.p1, cfg)?;
    let preps2 = prep_participant(&dyad.p2, cfg)?;
    let (individual_p1, flags_p1) = individual_from_preps(&preps1, rate, cfg)?;
    let (individual_p2, flags_p2) = individual_from_preps(&preps2, rate, cfg)?;
    let bands1: Vec<BandSignals> = preps1.into_iter().map(|p| p.bands).collect();
    let bands2: Vec<BandSignals> = preps2.into_iter().map(|p| p.bands).collect();
    let (synchrony, flags_shared) = synchrony::synchrony_from_bands(&bands1, &bands2, &cfg.dtw)?;
    Ok(DyadFeatures {
        individual_p1,
        individual_p2,
        synchrony,
        flags_p1,
        flags_p2,
        flags_shared,
    })
}
