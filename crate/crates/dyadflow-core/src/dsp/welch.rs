//! Welch power spectral density estimation.
//!
//! Overlapping Hann-windowed segments, per-segment mean removal, one-sided
//! density scaling. With the defaults (256-sample windows, 50% overlap) a
//! 6 s segment at 256 Hz yields 11 averaged periodograms at 1 Hz resolution.

use super::{check_finite, Band, DspError};
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct WelchConfig {
    pub window_len: usize,
    pub overlap: usize,
}

impl Default for WelchConfig {
    fn default() -> Self {
        WelchConfig { window_len: 256, overlap: 128 }
    }
}

/// One-sided power spectral density.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub freqs: Vec<f64>,
    pub power: Vec<f64>,
    /// Frequency resolution in Hz.
    pub df: f64,
}

pub fn welch_psd(x: &[f64], sample_rate: f64, config: &WelchConfig) -> Result<Spectrum, DspError> {
    let win = config.window_len;
    if win < 4 || config.overlap >= win {
        return Err(DspError::BadWindow { window: win, overlap: config.overlap });
    }
    if x.len() < win {
        return Err(DspError::TooShort { len: x.len(), min: win });
    }
    if !(sample_rate.is_finite() && sample_rate > 0.0) {
        return Err(DspError::WrongSampleRate { expected: 256.0, got: sample_rate });
    }
    check_finite(x)?;

    // Periodic Hann window, the usual choice for spectral averaging.
    let window: Vec<f64> = (0..win)
        .map(|i| 0.5 * (1.0 - (2.0 * std::f64::consts::PI * i as f64 / win as f64).cos()))
        .collect();
    let win_sum_sq: f64 = window.iter().map(|w| w * w).sum();

    let hop = win - config.overlap;
    let n_segments = (x.len() - win) / hop + 1;
    let n_bins = win / 2 + 1;

    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(win);
    let mut acc = vec![0.0; n_bins];
    let mut buf: Vec<Complex<f64>> = vec![Complex::new(0.0, 0.0); win];

    for seg in 0..n_segments {
        let start = seg * hop;
        let chunk = &x[start..start + win];
        let mean = chunk.iter().sum::<f64>() / win as f64;
        for (i, b) in buf.iter_mut().enumerate() {
            *b = Complex::new((chunk[i] - mean) * window[i], 0.0);
        }
        fft.process(&mut buf);
        for (k, a) in acc.iter_mut().enumerate() {
            let mag_sq = buf[k].norm_sqr();
            // One-sided density: interior bins pick up the mirrored half.
            let fold = if k == 0 || (win % 2 == 0 && k == n_bins - 1) { 1.0 } else { 2.0 };
            *a += fold * mag_sq / (sample_rate * win_sum_sq);
        }
    }

    let scale = 1.0 / n_segments as f64;
    let df = sample_rate / win as f64;
    Ok(Spectrum {
        freqs: (0..n_bins).map(|k| k as f64 * df).collect(),
        power: acc.iter().map(|a| a * scale).collect(),
        df,
    })
}

/// Mean spectral power over the bins inside a band's half-open range.
pub fn band_power(spectrum: &Spectrum, band: Band) -> Result<f64, DspError> {
    if spectrum.power.is_empty() {
        return Err(DspError::EmptySpectrum);
    }
    let (lo, hi) = band.range_hz();
    let mut sum = 0.0;
    let mut count = 0usize;
    for (f, p) in spectrum.freqs.iter().zip(&spectrum.power) {
        if *f >= lo && *f < hi {
            sum += p;
            count += 1;
        }
    }
    if count == 0 {
        return Err(DspError::EmptyBand { band, lo, hi });
    }
    Ok(sum / count as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn tone(freq: f64, n: usize, fs: f64) -> Vec<f64> {
        (0..n)
            .map(|i| (2.0 * std::f64::consts::PI * freq * i as f64 / fs).sin())
            .collect()
    }

    #[test]
    fn peak_at_tone_frequency() {
        let x = tone(10.0, 1536, 256.0);
        let sp = welch_psd(&x, 256.0, &WelchConfig::default()).unwrap();
        let peak = sp
            .power
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap()
            .0;
        assert_eq!(sp.freqs[peak], 10.0);
        assert_eq!(sp.freqs.len(), 129);
        assert!((sp.df - 1.0).abs() < 1e-12);
    }

    #[test]
    fn integral_matches_variance_for_noise() {
        let mut rel = 0.0;
        let mut count = 0.0;
        for seed in 0..5u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x: Vec<f64> = (0..1536).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
            let mean = x.iter().sum::<f64>() / x.len() as f64;
            let var = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / x.len() as f64;
            let sp = welch_psd(&x, 256.0, &WelchConfig::default()).unwrap();
            let integral: f64 = sp.power.iter().sum::<f64>() * sp.df;
            rel += integral / var;
            count += 1.0;
        }
        let mean_ratio = rel / count;
        assert!((mean_ratio - 1.0).abs() < 0.05, "ratio {mean_ratio}");
    }

    #[test]
    fn scaling_by_c_scales_power_by_c_squared() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x: Vec<f64> = (0..640).map(|_| rng.random::<f64>() - 0.5).collect();
        let scaled: Vec<f64> = x.iter().map(|v| 3.0 * v).collect();
        let a = welch_psd(&x, 256.0, &WelchConfig::default()).unwrap();
        let b = welch_psd(&scaled, 256.0, &WelchConfig::default()).unwrap();
        for (pa, pb) in a.power.iter().zip(&b.power) {
            assert!((pb - 9.0 * pa).abs() <= 1e-9 * pa.abs().max(1e-12));
        }
    }

    #[test]
    fn band_power_flat_spectrum_is_one() {
        let sp = Spectrum {
            freqs: (0..129).map(|k| k as f64).collect(),
            power: vec![1.0; 129],
            df: 1.0,
        };
        for b in Band::ALL {
            assert_eq!(band_power(&sp, b).unwrap(), 1.0);
        }
    }

    #[test]
    fn alpha_dominates_for_ten_hz_tone() {
        let x = tone(10.0, 1536, 256.0);
        let sp = welch_psd(&x, 256.0, &WelchConfig::default()).unwrap();
        let alpha = band_power(&sp, Band::Alpha).unwrap();
        for b in [Band::Delta, Band::Theta, Band::Beta] {
            assert!(alpha >= 9.0 * band_power(&sp, b).unwrap(), "band {b}");
        }
    }

    #[test]
    fn config_validation() {
        let x = vec![0.0; 100];
        assert!(matches!(
            welch_psd(&x, 256.0, &WelchConfig { window_len: 256, overlap: 128 }),
            Err(DspError::TooShort { .. })
        ));
        assert!(matches!(
            welch_psd(&x, 256.0, &WelchConfig { window_len: 64, overlap: 64 }),
            Err(DspError::BadWindow { .. })
        ));
        let empty = Spectrum { freqs: vec![], power: vec![], df: 1.0 };
        assert!(matches!(band_power(&empty, Band::Delta), Err(DspError::EmptySpectrum)));
    }
}
