//! Signal processing: wavelet denoising, wavelet band decomposition, Welch PSD.

mod wavelet;
mod welch;

pub use wavelet::{
    band_decompose, band_group, denoise, max_decomposition_levels, reconstruct_group, wavedec,
    waverec, BandSignals, CoeffGroup, DenoiseConfig, ThresholdRule, WaveletDecomposition,
    BAND_LEVELS, DB4_SCALING,
};
pub use welch::{band_power, welch_psd, Spectrum, WelchConfig};

use std::fmt;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum DspError {
    #[error("signal of length {len} is too short (need at least {min})")]
    TooShort { len: usize, min: usize },
    #[error("non-finite sample at index {0}")]
    NonFinite(usize),
    #[error("decomposition needs at least 1 level")]
    ZeroLevels,
    #[error("band decomposition is defined for a {expected} Hz sample rate, got {got}")]
    WrongSampleRate { expected: f64, got: f64 },
    #[error("welch window length {window} must be at least 4 and overlap {overlap} must be smaller")]
    BadWindow { window: usize, overlap: usize },
    #[error("no spectrum bins fall inside {band} ({lo}-{hi} Hz)")]
    EmptyBand { band: Band, lo: f64, hi: f64 },
    #[error("spectra must be non-empty")]
    EmptySpectrum,
}

/// Frequency band extracted from the 5-level decomposition of a 256 Hz signal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum Band {
    Delta,
    Theta,
    Alpha,
    Beta,
}

impl Band {
    pub const ALL: [Band; 4] = [Band::Delta, Band::Theta, Band::Alpha, Band::Beta];

    /// Half-open frequency range `[lo, hi)` in Hz.
    pub fn range_hz(self) -> (f64, f64) {
        match self {
            Band::Delta => (0.0, 4.0),
            Band::Theta => (4.0, 8.0),
            Band::Alpha => (8.0, 16.0),
            Band::Beta => (16.0, 32.0),
        }
    }

    /// Symbol used in feature names.
    pub fn symbol(self) -> &'static str {
        match self {
            Band::Delta => "δ",
            Band::Theta => "θ",
            Band::Alpha => "α",
            Band::Beta => "β",
        }
    }

    /// Index into band-ordered arrays: δ, θ, α, β.
    pub fn index(self) -> usize {
        match self {
            Band::Delta => 0,
            Band::Theta => 1,
            Band::Alpha => 2,
            Band::Beta => 3,
        }
    }
}

impl fmt::Display for Band {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

pub(crate) fn check_finite(x: &[f64]) -> Result<(), DspError> {
    match x.iter().position(|v| !v.is_finite()) {
        Some(i) => Err(DspError::NonFinite(i)),
        None => Ok(()),
    }
}
