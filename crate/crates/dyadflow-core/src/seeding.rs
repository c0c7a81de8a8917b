//! Derivation of independent RNG seeds from a root seed.
//!
//! Everything stochastic in this crate (bagging, weight init, SMOTE,
//! synthetic data) runs on ChaCha8 streams seeded through this module, so a
//! single `u64` in a report pins the whole run.

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Seed for substream `stream` of `root`. Stable across runs and platforms;
/// distinct streams are decorrelated even for adjacent indices.
pub fn stream_seed(root: u64, stream: u64) -> u64 {
    splitmix64(root ^ splitmix64(stream))
}
