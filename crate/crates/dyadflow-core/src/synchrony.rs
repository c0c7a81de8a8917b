//! Inter-brain synchrony measures: Pearson cross-correlation and dynamic
//! time warping distance, computed per channel and band between the two
//! participants of a dyad.

use crate::domain::{ChannelId, DyadSample};
use crate::dsp::{band_decompose, denoise, Band, BandSignals, DenoiseConfig, DspError};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum SyncError {
    #[error("signals must have equal lengths, got {0} and {1}")]
    LengthMismatch(usize, usize),
    #[error("signal of length {len} is too short (need at least {min})")]
    TooShort { len: usize, min: usize },
    #[error("signals must be non-empty")]
    Empty,
    #[error("non-finite sample at index {0}")]
    NonFinite(usize),
    #[error(transparent)]
    Dsp(#[from] DspError),
}

/// Settings for the DTW distance and the synchrony extraction built on it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct DtwConfig {
    /// Z-normalize both inputs before accumulating costs (default on), so the
    /// distance reflects shape rather than amplitude.
    pub znormalize: bool,
    /// Optional Sakoe-Chiba window half-width; None runs the full table.
    pub radius: Option<usize>,
}

impl Default for DtwConfig {
    fn default() -> Self {
        DtwConfig { znormalize: true, radius: None }
    }
}

fn check(a: &[f64]) -> Result<(), SyncError> {
    if a.is_empty() {
        return Err(SyncError::Empty);
    }
    match a.iter().position(|v| !v.is_finite()) {
        Some(i) => Err(SyncError::NonFinite(i)),
        None => Ok(()),
    }
}

/// Pearson correlation between equal-length signals. Returns the coefficient
/// and a degenerate flag which is set (with value 0) when either signal has
/// zero variance.
pub fn cross_correlation(a: &[f64], b: &[f64]) -> Result<(f64, bool), SyncError> {
    if a.len() != b.len() {
        return Err(SyncError::LengthMismatch(a.len(), b.len()));
    }
    if a.len() < 2 {
        return Err(SyncError::TooShort { len: a.len(), min: 2 });
    }
    check(a)?;
    check(b)?;
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut va = 0.0;
    let mut vb = 0.0;
    for (x, y) in a.iter().zip(b) {
        let dx = x - ma;
        let dy = y - mb;
        cov += dx * dy;
        va += dx * dx;
        vb += dy * dy;
    }
    if va == 0.0 || vb == 0.0 {
        return Ok((0.0, true));
    }
    Ok((cov / (va.sqrt() * vb.sqrt()), false))
}

/// Z-normalization by population statistics. Returns the normalized signal
/// and a degenerate flag; a zero-variance signal is centered only.
pub fn znormalize(x: &[f64]) -> (Vec<f64>, bool) {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    if var == 0.0 {
        return (x.iter().map(|v| v - mean).collect(), true);
    }
    let sd = var.sqrt();
    (x.iter().map(|v| (v - mean) / sd).collect(), false)
}

// Plain minimum; inputs are validated finite, so NaN handling is dead weight.
#[inline(always)]
fn fmin(x: f64, y: f64) -> f64 {
    if x < y {
        x
    } else {
        y
    }
}

/// Full dynamic-programming DTW with absolute-difference cost and the
/// symmetric step pattern; first row and column accumulate along the edge.
fn dtw_core(a: &[f64], b: &[f64], radius: Option<usize>) -> f64 {
    match radius {
        None => dtw_full(a, b),
        Some(r) => dtw_windowed(a, b, r),
    }
}

/// The unwindowed table updated in place, one row at a time. The diagonal and
/// left neighbors ride in scalars, which keeps the O(m*n) loop free of bounds
/// checks and a second row buffer.
fn dtw_full(a: &[f64], b: &[f64]) -> f64 {
    let n = b.len();
    let mut row = vec![0.0f64; n];
    let a0 = a[0];
    let mut acc = 0.0;
    for (cell, &bj) in row.iter_mut().zip(b) {
        acc += (a0 - bj).abs();
        *cell = acc;
    }
    for &ai in &a[1..] {
        // row[j] still holds the previous row here; the scalar carry makes
        // the in-place overwrite safe.
        let mut diag = row[0];
        let mut left = (ai - b[0]).abs() + diag;
        row[0] = left;
        for (cell, &bj) in row[1..].iter_mut().zip(&b[1..]) {
            let up = *cell;
            let v = (ai - bj).abs() + fmin(fmin(diag, up), left);
            *cell = v;
            diag = up;
            left = v;
        }
    }
    row[n - 1]
}

fn dtw_windowed(a: &[f64], b: &[f64], radius: usize) -> f64 {
    let m = a.len();
    let n = b.len();
    let mut prev = vec![f64::INFINITY; n];
    let mut cur = vec![f64::INFINITY; n];

    // Slope-adjusted band so the corners stay reachable for unequal lengths.
    let window = |i: usize| -> (usize, usize) {
        let center = if m <= 1 { 0.0 } else { i as f64 * (n as f64 - 1.0) / (m as f64 - 1.0) };
        let lo = (center - radius as f64).ceil().max(0.0) as usize;
        let hi = ((center + radius as f64).floor() as usize).min(n - 1);
        (lo, hi)
    };

    for i in 0..m {
        let (lo, hi) = window(i);
        let ai = a[i];
        if i == 0 {
            let mut acc = 0.0;
            for j in lo..=hi {
                acc = if j == 0 { (ai - b[0]).abs() } else { acc + (ai - b[j]).abs() };
                cur[j] = acc;
            }
        } else {
            for j in lo..=hi {
                let cost = (ai - b[j]).abs();
                let best = if j == 0 {
                    prev[0]
                } else {
                    prev[j].min(cur[j - 1]).min(prev[j - 1])
                };
                cur[j] = cost + best;
            }
        }
        std::mem::swap(&mut prev, &mut cur);
        for v in cur.iter_mut() {
            *v = f64::INFINITY;
        }
    }
    prev[n - 1]
}

/// DTW distance between two non-empty signals.
pub fn dtw_distance(a: &[f64], b: &[f64], config: &DtwConfig) -> Result<f64, SyncError> {
    check(a)?;
    check(b)?;
    if config.znormalize {
        let (za, _) = znormalize(a);
        let (zb, _) = znormalize(b);
        Ok(dtw_core(&za, &zb, config.radius))
    } else {
        Ok(dtw_core(a, b, config.radius))
    }
}

/// Number of synchrony features: 8 channels x 4 bands x {CCC, DTW}.
pub const N_SYNCHRONY: usize = 64;

/// Synchrony feature names in extraction order: channel-major, band inner,
/// CCC before DTW ("AF3 CCC δ", "AF3 DTW δ", "AF3 CCC θ", ...).
pub fn synchrony_names() -> Vec<String> {
    let mut names = Vec::with_capacity(N_SYNCHRONY);
    for ch in ChannelId::FLOW_SUBSET {
        for band in Band::ALL {
            names.push(format!("{ch} CCC {band}"));
            names.push(format!("{ch} DTW {band}"));
        }
    }
    names
}

/// Synchrony features from already-decomposed band signals, one `BandSignals`
/// per flow channel per participant (registry channel order). Returns the 64
/// values and the names of any degenerate features.
pub fn synchrony_from_bands(
    p1: &[BandSignals],
    p2: &[BandSignals],
    config: &DtwConfig,
) -> Result<(Vec<f64>, Vec<String>), SyncError> {
    assert_eq!(p1.len(), ChannelId::FLOW_SUBSET.len());
    assert_eq!(p2.len(), ChannelId::FLOW_SUBSET.len());
    let mut values = Vec::with_capacity(N_SYNCHRONY);
    let mut flags = Vec::new();
    for (c, ch) in ChannelId::FLOW_SUBSET.iter().enumerate() {
        for band in Band::ALL {
            let a = p1[c].get(band);
            let b = p2[c].get(band);
            let (ccc, degenerate) = cross_correlation(a, b)?;
            values.push(ccc);
            if degenerate {
                flags.push(format!("{ch} CCC {band}"));
            }
            let dtw = if config.znormalize {
                let (za, da) = znormalize(a);
                let (zb, db) = znormalize(b);
                if da || db {
                    flags.push(format!("{ch} DTW {band}"));
                }
                dtw_core(&za, &zb, config.radius)
            } else {
                dtw_core(a, b, config.radius)
            };
            values.push(dtw);
        }
    }
    Ok((values, flags))
}

/// Synchrony features straight from a dyad sample: denoise (optional),
/// band-decompose, then CCC and DTW per channel and band.
pub fn extract_synchrony(
    dyad: &DyadSample,
    denoise_config: Option<&DenoiseConfig>,
    dtw_config: &DtwConfig,
) -> Result<(Vec<f64>, Vec<String>), SyncError> {
    let prep = |p: &crate::domain::ParticipantData| -> Result<Vec<BandSignals>, SyncError> {
        p.segments
            .iter()
            .map(|seg| {
                let signal = match denoise_config {
                    Some(cfg) => denoise(&seg.samples, cfg)?,
                    None => seg.samples.clone(),
                };
                Ok(band_decompose(&signal, seg.sample_rate)?)
            })
            .collect()
    };
    let bands1 = prep(&dyad.p1)?;
    let bands2 = prep(&dyad.p2)?;
    synchrony_from_bands(&bands1, &bands2, dtw_config)
}
