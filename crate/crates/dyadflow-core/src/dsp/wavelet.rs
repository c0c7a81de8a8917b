//! Discrete wavelet transform with an 8-tap Daubechies filter and symmetric
//! boundary extension, plus the two pipeline operations built on it:
//! soft-threshold denoising and reconstruction of per-band component signals.
//!
//! Analysis convolves the symmetrically extended signal and keeps odd output
//! phases, giving `floor((n + 7) / 2)` coefficients per branch; synthesis
//! upsamples, convolves with the mirrored filters, and trims `taps - 2` from
//! each end. The pair reconstructs any input length exactly (to float
//! precision), which the band split relies on: the four band signals plus the
//! two discarded fine-detail reconstructions sum back to the input.

use super::{check_finite, Band, DspError};

/// 8-tap Daubechies scaling (synthesis low-pass) filter, sum = sqrt(2).
pub const DB4_SCALING: [f64; 8] = [
    0.230377813308855230,
    0.714846570552541500,
    0.630880767929590400,
    -0.027983769416983850,
    -0.187034811718881140,
    0.030841381835986965,
    0.032883011666982945,
    -0.010597401784997278,
];

const TAPS: usize = 8;

struct FilterBank {
    dec_lo: [f64; TAPS],
    dec_hi: [f64; TAPS],
    rec_lo: [f64; TAPS],
    rec_hi: [f64; TAPS],
}

fn filter_bank() -> FilterBank {
    let rec_lo = DB4_SCALING;
    let mut dec_lo = [0.0; TAPS];
    let mut dec_hi = [0.0; TAPS];
    let mut rec_hi = [0.0; TAPS];
    for k in 0..TAPS {
        dec_lo[k] = rec_lo[TAPS - 1 - k];
    }
    for k in 0..TAPS {
        rec_hi[k] = if k % 2 == 0 { dec_lo[k] } else { -dec_lo[k] };
    }
    for k in 0..TAPS {
        dec_hi[k] = rec_hi[TAPS - 1 - k];
    }
    FilterBank { dec_lo, dec_hi, rec_lo, rec_hi }
}

/// Half-sample symmetric reflection of an out-of-range index.
fn sym_index(mut i: isize, n: usize) -> usize {
    let n = n as isize;
    loop {
        if i < 0 {
            i = -i - 1;
        } else if i >= n {
            i = 2 * n - 1 - i;
        } else {
            return i as usize;
        }
    }
}

/// One analysis step: returns (approximation, detail).
fn dwt_step(x: &[f64], fb: &FilterBank) -> (Vec<f64>, Vec<f64>) {
    let n = x.len();
    let out_len = (n + TAPS - 1) / 2;
    let mut approx = vec![0.0; out_len];
    let mut detail = vec![0.0; out_len];
    for k in 0..out_len {
        let base = 2 * k as isize + 1;
        let mut a = 0.0;
        let mut d = 0.0;
        for m in 0..TAPS {
            let v = x[sym_index(base - m as isize, n)];
            a += fb.dec_lo[m] * v;
            d += fb.dec_hi[m] * v;
        }
        approx[k] = a;
        detail[k] = d;
    }
    (approx, detail)
}

/// One synthesis step back to `target_len` samples.
fn idwt_step(approx: &[f64], detail: &[f64], target_len: usize, fb: &FilterBank) -> Vec<f64> {
    let m = approx.len();
    debug_assert_eq!(m, detail.len());
    let up_len = 2 * m - 1;
    let full_len = up_len + TAPS - 1;
    let mut full = vec![0.0; full_len];
    // Upsampled coefficients live at even positions; fold the convolution
    // directly instead of materializing the zero-stuffed signal.
    for i in 0..m {
        let a = approx[i];
        let d = detail[i];
        let base = 2 * i;
        for t in 0..TAPS {
            full[base + t] += fb.rec_lo[t] * a + fb.rec_hi[t] * d;
        }
    }
    let start = TAPS - 2;
    full[start..start + target_len].to_vec()
}

/// Multi-level wavelet decomposition. `details[0]` is the coarsest level,
/// the last entry the finest (level 1).
#[derive(Debug, Clone)]
pub struct WaveletDecomposition {
    pub approx: Vec<f64>,
    pub details: Vec<Vec<f64>>,
    sig_lens: Vec<usize>,
}

/// A coefficient group inside a decomposition: the approximation, or the
/// detail at a given level (1 = finest).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoeffGroup {
    Approx,
    Detail(usize),
}

impl WaveletDecomposition {
    pub fn levels(&self) -> usize {
        self.details.len()
    }

    pub fn input_len(&self) -> usize {
        self.sig_lens[0]
    }

    /// Mutable view of one coefficient group; None when the level is absent.
    pub fn group_mut(&mut self, group: CoeffGroup) -> Option<&mut Vec<f64>> {
        match group {
            CoeffGroup::Approx => Some(&mut self.approx),
            CoeffGroup::Detail(level) if level >= 1 && level <= self.levels() => {
                let i = self.levels() - level;
                Some(&mut self.details[i])
            }
            CoeffGroup::Detail(_) => None,
        }
    }

    /// Copy of the decomposition with every coefficient group zeroed except `keep`.
    pub fn zeroed_except(&self, keep: CoeffGroup) -> WaveletDecomposition {
        let levels = self.levels();
        let approx = match keep {
            CoeffGroup::Approx => self.approx.clone(),
            _ => vec![0.0; self.approx.len()],
        };
        let details = self
            .details
            .iter()
            .enumerate()
            .map(|(i, d)| {
                // details[i] holds level (levels - i).
                if keep == CoeffGroup::Detail(levels - i) {
                    d.clone()
                } else {
                    vec![0.0; d.len()]
                }
            })
            .collect();
        WaveletDecomposition { approx, details, sig_lens: self.sig_lens.clone() }
    }
}

/// Largest level count for which every analysis step still sees at least one
/// full filter support.
pub fn max_decomposition_levels(n: usize) -> usize {
    let mut len = n;
    let mut levels = 0;
    while len >= TAPS {
        len = (len + TAPS - 1) / 2;
        levels += 1;
    }
    levels
}

pub fn wavedec(x: &[f64], levels: usize) -> Result<WaveletDecomposition, DspError> {
    if levels == 0 {
        return Err(DspError::ZeroLevels);
    }
    if x.len() < 2 {
        return Err(DspError::TooShort { len: x.len(), min: 2 });
    }
    check_finite(x)?;
    let fb = filter_bank();
    let mut sig_lens = Vec::with_capacity(levels);
    let mut details_fine_first = Vec::with_capacity(levels);
    let mut cur = x.to_vec();
    for _ in 0..levels {
        sig_lens.push(cur.len());
        let (a, d) = dwt_step(&cur, &fb);
        details_fine_first.push(d);
        cur = a;
    }
    details_fine_first.reverse();
    Ok(WaveletDecomposition { approx: cur, details: details_fine_first, sig_lens })
}

pub fn waverec(dec: &WaveletDecomposition) -> Vec<f64> {
    let fb = filter_bank();
    let levels = dec.levels();
    let mut cur = dec.approx.clone();
    for (i, d) in dec.details.iter().enumerate() {
        let target = dec.sig_lens[levels - 1 - i];
        cur = idwt_step(&cur, d, target, &fb);
    }
    cur
}

/// Reconstruction of a single coefficient group back to the input length.
pub fn reconstruct_group(dec: &WaveletDecomposition, group: CoeffGroup) -> Vec<f64> {
    waverec(&dec.zeroed_except(group))
}

/// The four physiological band component signals of a 256 Hz input, each the
/// same length as the input. Fine details (32-128 Hz) are discarded.
#[derive(Debug, Clone)]
pub struct BandSignals {
    pub delta: Vec<f64>,
    pub theta: Vec<f64>,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
}

impl BandSignals {
    pub fn get(&self, band: Band) -> &[f64] {
        match band {
            Band::Delta => &self.delta,
            Band::Theta => &self.theta,
            Band::Alpha => &self.alpha,
            Band::Beta => &self.beta,
        }
    }
}

/// Decomposition depth at which the band groups below line up with the
/// physiological ranges for a 256 Hz input.
pub const BAND_LEVELS: usize = 5;
const BAND_MIN_LEN: usize = 64;

/// The coefficient group carrying a band in a `BAND_LEVELS`-deep decomposition.
pub fn band_group(band: Band) -> CoeffGroup {
    match band {
        Band::Delta => CoeffGroup::Approx,
        Band::Theta => CoeffGroup::Detail(5),
        Band::Alpha => CoeffGroup::Detail(4),
        Band::Beta => CoeffGroup::Detail(3),
    }
}

/// Split a 256 Hz signal into band component signals via a 5-level
/// decomposition: approximation -> δ, then detail levels 5..3 -> θ, α, β.
pub fn band_decompose(x: &[f64], sample_rate: f64) -> Result<BandSignals, DspError> {
    if sample_rate != 256.0 {
        return Err(DspError::WrongSampleRate { expected: 256.0, got: sample_rate });
    }
    if x.len() < BAND_MIN_LEN {
        return Err(DspError::TooShort { len: x.len(), min: BAND_MIN_LEN });
    }
    let dec = wavedec(x, BAND_LEVELS)?;
    Ok(BandSignals {
        delta: reconstruct_group(&dec, band_group(Band::Delta)),
        theta: reconstruct_group(&dec, band_group(Band::Theta)),
        alpha: reconstruct_group(&dec, band_group(Band::Alpha)),
        beta: reconstruct_group(&dec, band_group(Band::Beta)),
    })
}

/// Thresholding rule applied to detail coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum ThresholdRule {
    Soft,
    Hard,
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct DenoiseConfig {
    pub levels: usize,
    pub rule: ThresholdRule,
}

impl Default for DenoiseConfig {
    fn default() -> Self {
        DenoiseConfig { levels: 5, rule: ThresholdRule::Soft }
    }
}

const DENOISE_MIN_LEN: usize = 32;
/// Ratio between the median absolute coefficient and sigma for Gaussian noise.
const MAD_TO_SIGMA: f64 = 0.6745;

fn median_abs(values: &[f64]) -> f64 {
    let mut v: Vec<f64> = values.iter().map(|x| x.abs()).collect();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Wavelet shrinkage denoising: noise level from the finest detail
/// coefficients, universal threshold per level, thresholded details
/// reconstructed back to the input length.
pub fn denoise(x: &[f64], config: &DenoiseConfig) -> Result<Vec<f64>, DspError> {
    if x.len() < DENOISE_MIN_LEN {
        return Err(DspError::TooShort { len: x.len(), min: DENOISE_MIN_LEN });
    }
    if config.levels == 0 {
        return Err(DspError::ZeroLevels);
    }
    let levels = config.levels.min(max_decomposition_levels(x.len()));
    let mut dec = wavedec(x, levels)?;
    let finest = dec.details.last().expect("at least one level");
    let sigma = median_abs(finest) / MAD_TO_SIGMA;
    for d in dec.details.iter_mut() {
        let threshold = sigma * (2.0 * (d.len() as f64).ln()).sqrt();
        for c in d.iter_mut() {
            *c = match config.rule {
                ThresholdRule::Soft => c.signum() * (c.abs() - threshold).max(0.0),
                ThresholdRule::Hard => {
                    if c.abs() > threshold {
                        *c
                    } else {
                        0.0
                    }
                }
            };
        }
    }
    Ok(waverec(&dec))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn max_rel_err(a: &[f64], b: &[f64]) -> f64 {
        let scale = b.iter().fold(1e-12_f64, |m, v| m.max(v.abs()));
        a.iter()
            .zip(b)
            .map(|(x, y)| (x - y).abs() / scale)
            .fold(0.0, f64::max)
    }

    #[test]
    fn filters_are_orthonormal() {
        let sum: f64 = DB4_SCALING.iter().sum();
        assert!((sum - 2.0_f64.sqrt()).abs() < 1e-12);
        let sumsq: f64 = DB4_SCALING.iter().map(|h| h * h).sum();
        assert!((sumsq - 1.0).abs() < 1e-12);
        for shift in 1..4 {
            let dot: f64 = (0..TAPS - 2 * shift)
                .map(|k| DB4_SCALING[k] * DB4_SCALING[k + 2 * shift])
                .sum();
            assert!(dot.abs() < 1e-12, "shift {shift} dot {dot}");
        }
    }

    #[test]
    fn perfect_reconstruction_one_level() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in [9usize, 16, 33, 100, 257, 1536] {
            let x: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
            let dec = wavedec(&x, 1).unwrap();
            let y = waverec(&dec);
            assert_eq!(y.len(), n);
            assert!(max_rel_err(&y, &x) < 1e-11, "n={n} err={}", max_rel_err(&y, &x));
        }
    }

    #[test]
    fn perfect_reconstruction_multi_level() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for n in [64usize, 100, 321, 777, 1536] {
            for levels in 1..=5 {
                let x: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * 4.0 - 2.0).collect();
                let dec = wavedec(&x, levels).unwrap();
                let y = waverec(&dec);
                assert!(
                    max_rel_err(&y, &x) < 1e-10,
                    "n={n} levels={levels} err={}",
                    max_rel_err(&y, &x)
                );
            }
        }
    }

    #[test]
    fn group_reconstructions_sum_to_input() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let n = 1536;
        let x: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
        let dec = wavedec(&x, 5).unwrap();
        let mut sum = reconstruct_group(&dec, CoeffGroup::Approx);
        for level in 1..=5 {
            let part = reconstruct_group(&dec, CoeffGroup::Detail(level));
            for (s, p) in sum.iter_mut().zip(&part) {
                *s += p;
            }
        }
        assert!(max_rel_err(&sum, &x) < 1e-10);
    }

    #[test]
    fn band_lengths_match_input() {
        let x: Vec<f64> = (0..1536).map(|i| (i as f64 * 0.01).sin()).collect();
        let bands = band_decompose(&x, 256.0).unwrap();
        for b in Band::ALL {
            assert_eq!(bands.get(b).len(), x.len());
        }
        assert!(matches!(
            band_decompose(&x[..32], 256.0),
            Err(DspError::TooShort { .. })
        ));
        assert!(matches!(
            band_decompose(&x, 128.0),
            Err(DspError::WrongSampleRate { .. })
        ));
    }

    #[test]
    fn six_hz_tone_lands_in_theta() {
        let n = 1536;
        let x: Vec<f64> = (0..n)
            .map(|i| (2.0 * std::f64::consts::PI * 6.0 * i as f64 / 256.0).sin())
            .collect();
        let bands = band_decompose(&x, 256.0).unwrap();
        let energy = |s: &[f64]| s.iter().map(|v| v * v).sum::<f64>();
        let total: f64 = Band::ALL.iter().map(|&b| energy(bands.get(b))).sum();
        assert!(energy(&bands.theta) / total > 0.8, "theta share {}", energy(&bands.theta) / total);
    }

    #[test]
    fn denoise_zero_and_length() {
        let x = vec![0.0; 256];
        let y = denoise(&x, &DenoiseConfig::default()).unwrap();
        assert_eq!(y.len(), 256);
        assert!(y.iter().all(|v| *v == 0.0));
        assert!(matches!(
            denoise(&x[..16], &DenoiseConfig::default()),
            Err(DspError::TooShort { .. })
        ));
    }

    #[test]
    fn denoise_keeps_tone_and_cuts_noise() {
        let n = 1536;
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let clean: Vec<f64> = (0..n)
            .map(|i| (2.0 * std::f64::consts::PI * 10.0 * i as f64 / 256.0).sin())
            .collect();
        let noisy: Vec<f64> = clean
            .iter()
            .map(|c| c + 0.5 * (rng.random::<f64>() * 2.0 - 1.0))
            .collect();
        let corr = |a: &[f64], b: &[f64]| {
            let ma = a.iter().sum::<f64>() / a.len() as f64;
            let mb = b.iter().sum::<f64>() / b.len() as f64;
            let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
            let va: f64 = a.iter().map(|x| (x - ma) * (x - ma)).sum();
            let vb: f64 = b.iter().map(|y| (y - mb) * (y - mb)).sum();
            cov / (va.sqrt() * vb.sqrt())
        };

        // A clean tone passes through nearly unchanged.
        let kept = denoise(&clean, &DenoiseConfig::default()).unwrap();
        assert!(corr(&kept, &clean) > 0.99);

        // Noise shrinks: the denoised signal tracks the clean tone better
        // than the noisy input does, and never gains energy.
        let den = denoise(&noisy, &DenoiseConfig::default()).unwrap();
        assert!(corr(&den, &clean) > corr(&noisy, &clean));
        let energy = |s: &[f64]| s.iter().map(|v| v * v).sum::<f64>();
        assert!(energy(&den) <= energy(&noisy) * (1.0 + 1e-9));
    }
}
