//! Detection of simultaneous flow states in dyads from EEG recordings.
//!
//! The pipeline runs in four stages, each a module here:
//!
//! 1. [`dataset`] loads paired 14-channel recordings (or a precomputed
//!    feature table) and assembles one labeled row per participant.
//! 2. [`dsp`] and [`features`] turn each 12 s segment into 272 features:
//!    208 per-participant descriptors over four frequency bands plus 64
//!    inter-brain synchrony measures shared by both rows of a dyad.
//! 3. [`models`] implements the eight classifiers from scratch, and
//!    [`eval`] runs fold-hygienic cross-validation, synchrony ablations,
//!    and feature importance (coefficients, impurity, SHAP).
//! 4. [`synth`] generates a deterministic synthetic corpus with known
//!    planted structure, used by the test suite to validate recovery.
//!
//! Everything is deterministic given the seeds in the relevant config
//! structs; see [`seeding`] for how independent streams are derived.
//! With the default `parallel` feature the per-dyad work fans out over a
//! rayon pool, and results are identical to the sequential build.

pub mod dataset;
pub mod domain;
pub mod dsp;
pub mod eval;
pub mod features;
pub mod models;
pub mod parallel;
pub mod seeding;
pub mod synchrony;
pub mod synth;
