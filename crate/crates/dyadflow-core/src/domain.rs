//! Core domain types: channels, flow scores, labels, signal segments, dyad samples.
//!
//! Labeling semantics are the ground truth for everything downstream. A
//! participant is "in flow" when their reported score is 2 or 3 on the 0-3
//! scale. The binary dyad label is High only when both participants are in
//! flow; the ternary label is taken from one participant's perspective and
//! distinguishes simultaneous flow, individual (non-simultaneous) flow, and
//! neither. By construction `Simultaneous` coincides exactly with a High
//! binary label.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

/// Sampling rate of the headset, in Hz.
pub const SAMPLE_RATE: f64 = 256.0;

/// Samples per 6 s analysis segment.
pub const SEGMENT_LEN: usize = 1536;

/// Flow scores at or above this value count as being in flow.
pub const HIGH_FLOW_THRESHOLD: u8 = 2;

#[derive(Debug, Error, PartialEq)]
pub enum DomainError {
    #[error("flow score {0} outside the 0-3 scale")]
    ScoreOutOfRange(u8),
    #[error("unknown channel name {0:?}")]
    UnknownChannel(String),
    #[error("signal segment is empty")]
    EmptySegment,
    #[error("non-finite sample at index {0}")]
    NonFiniteSample(usize),
    #[error("sample rate must be positive, got {0}")]
    BadSampleRate(f64),
    #[error("dyad sample needs the 8 flow channels in registry order, got {0:?}")]
    WrongChannelSet(Vec<String>),
    #[error("segments in one dyad sample must share a length, got {0} and {1}")]
    MixedSegmentLengths(usize, usize),
    #[error("participant index must be 1 or 2, got {0}")]
    BadParticipant(u8),
}

/// The 14 electrode positions of the headset, in its canonical row order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ChannelId {
    AF3,
    F7,
    F3,
    FC5,
    T7,
    P7,
    O1,
    O2,
    P8,
    T8,
    FC6,
    F4,
    F8,
    AF4,
}

/// Scalp region of a flow-subset channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Region {
    Frontal,
    LeftTemporal,
}

impl ChannelId {
    /// All 14 channels in canonical recording-row order.
    pub const ALL: [ChannelId; 14] = [
        ChannelId::AF3,
        ChannelId::F7,
        ChannelId::F3,
        ChannelId::FC5,
        ChannelId::T7,
        ChannelId::P7,
        ChannelId::O1,
        ChannelId::O2,
        ChannelId::P8,
        ChannelId::T8,
        ChannelId::FC6,
        ChannelId::F4,
        ChannelId::F8,
        ChannelId::AF4,
    ];

    /// The 8 channels used for flow detection, in registry order (the
    /// canonical order restricted to the subset). Feature column layout,
    /// synchrony layout, and ablation groups all follow this order.
    pub const FLOW_SUBSET: [ChannelId; 8] = [
        ChannelId::AF3,
        ChannelId::F7,
        ChannelId::F3,
        ChannelId::T7,
        ChannelId::P7,
        ChannelId::F4,
        ChannelId::F8,
        ChannelId::AF4,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ChannelId::AF3 => "AF3",
            ChannelId::F7 => "F7",
            ChannelId::F3 => "F3",
            ChannelId::FC5 => "FC5",
            ChannelId::T7 => "T7",
            ChannelId::P7 => "P7",
            ChannelId::O1 => "O1",
            ChannelId::O2 => "O2",
            ChannelId::P8 => "P8",
            ChannelId::T8 => "T8",
            ChannelId::FC6 => "FC6",
            ChannelId::F4 => "F4",
            ChannelId::F8 => "F8",
            ChannelId::AF4 => "AF4",
        }
    }

    /// Region of a flow-subset channel; None for channels outside the subset.
    pub fn region(self) -> Option<Region> {
        match self {
            ChannelId::F3
            | ChannelId::F4
            | ChannelId::F7
            | ChannelId::F8
            | ChannelId::AF3
            | ChannelId::AF4 => Some(Region::Frontal),
            ChannelId::T7 | ChannelId::P7 => Some(Region::LeftTemporal),
            _ => None,
        }
    }

    pub fn is_flow_channel(self) -> bool {
        self.region().is_some()
    }
}

impl fmt::Display for ChannelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ChannelId {
    type Err = DomainError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ChannelId::ALL
            .iter()
            .copied()
            .find(|c| c.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| DomainError::UnknownChannel(s.to_string()))
    }
}

/// Self-reported flow score on the 0-3 scale.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct FlowScore(u8);

impl FlowScore {
    pub fn new(value: u8) -> Result<Self, DomainError> {
        if value > 3 {
            return Err(DomainError::ScoreOutOfRange(value));
        }
        Ok(FlowScore(value))
    }

    pub fn value(self) -> u8 {
        self.0
    }

    pub fn is_high(self) -> bool {
        self.0 >= HIGH_FLOW_THRESHOLD
    }
}

/// Dyad-level label: High only when both participants are in flow.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum BinaryLabel {
    Low,
    High,
}

/// Per-participant label distinguishing how flow was (not) shared.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum TernaryLabel {
    /// This participant was not in flow.
    Neither,
    /// This participant was in flow but the partner was not.
    Individual,
    /// Both participants were in flow at once.
    Simultaneous,
}

impl BinaryLabel {
    /// Class index used by models and metrics; High is the positive class.
    pub fn index(self) -> usize {
        match self {
            BinaryLabel::Low => 0,
            BinaryLabel::High => 1,
        }
    }

    pub fn from_index(i: usize) -> Option<Self> {
        match i {
            0 => Some(BinaryLabel::Low),
            1 => Some(BinaryLabel::High),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            BinaryLabel::Low => "Low",
            BinaryLabel::High => "High",
        }
    }
}

impl TernaryLabel {
    pub fn index(self) -> usize {
        match self {
            TernaryLabel::Neither => 0,
            TernaryLabel::Individual => 1,
            TernaryLabel::Simultaneous => 2,
        }
    }

    pub fn from_index(i: usize) -> Option<Self> {
        match i {
            0 => Some(TernaryLabel::Neither),
            1 => Some(TernaryLabel::Individual),
            2 => Some(TernaryLabel::Simultaneous),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            TernaryLabel::Neither => "Neither",
            TernaryLabel::Individual => "Individual",
            TernaryLabel::Simultaneous => "Simultaneous",
        }
    }
}

impl fmt::Display for BinaryLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl fmt::Display for TernaryLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BinaryLabel {
    type Err = DomainError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "Low" => Ok(BinaryLabel::Low),
            "High" => Ok(BinaryLabel::High),
            other => Err(DomainError::UnknownChannel(format!("binary label {other:?}"))),
        }
    }
}

impl FromStr for TernaryLabel {
    type Err = DomainError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "Neither" => Ok(TernaryLabel::Neither),
            "Individual" => Ok(TernaryLabel::Individual),
            "Simultaneous" => Ok(TernaryLabel::Simultaneous),
            other => Err(DomainError::UnknownChannel(format!("ternary label {other:?}"))),
        }
    }
}

/// Dyad label from the two scores. Symmetric in its arguments.
pub fn label_binary(a: FlowScore, b: FlowScore) -> BinaryLabel {
    if a.is_high() && b.is_high() {
        BinaryLabel::High
    } else {
        BinaryLabel::Low
    }
}

/// Perspective label for the participant with score `own`, partnered with `other`.
pub fn label_ternary(own: FlowScore, other: FlowScore) -> TernaryLabel {
    match (own.is_high(), other.is_high()) {
        (true, true) => TernaryLabel::Simultaneous,
        (true, false) => TernaryLabel::Individual,
        (false, _) => TernaryLabel::Neither,
    }
}

/// One channel's samples for one analysis segment.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalSegment {
    pub channel: ChannelId,
    pub sample_rate: f64,
    pub samples: Vec<f64>,
}

impl SignalSegment {
    pub fn new(channel: ChannelId, sample_rate: f64, samples: Vec<f64>) -> Result<Self, DomainError> {
        if samples.is_empty() {
            return Err(DomainError::EmptySegment);
        }
        if !(sample_rate.is_finite() && sample_rate > 0.0) {
            return Err(DomainError::BadSampleRate(sample_rate));
        }
        if let Some(i) = samples.iter().position(|v| !v.is_finite()) {
            return Err(DomainError::NonFiniteSample(i));
        }
        Ok(SignalSegment { channel, sample_rate, samples })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// One participant's half of a dyad sample: flow score plus the 8 flow-channel
/// segments in registry order.
#[derive(Debug, Clone)]
pub struct ParticipantData {
    pub participant: u8,
    pub score: FlowScore,
    pub segments: Vec<SignalSegment>,
}

impl ParticipantData {
    pub fn new(participant: u8, score: FlowScore, segments: Vec<SignalSegment>) -> Result<Self, DomainError> {
        if participant != 1 && participant != 2 {
            return Err(DomainError::BadParticipant(participant));
        }
        let got: Vec<ChannelId> = segments.iter().map(|s| s.channel).collect();
        if got != ChannelId::FLOW_SUBSET {
            return Err(DomainError::WrongChannelSet(
                got.iter().map(|c| c.name().to_string()).collect(),
            ));
        }
        let len0 = segments[0].len();
        for s in &segments {
            if s.len() != len0 {
                return Err(DomainError::MixedSegmentLengths(len0, s.len()));
            }
        }
        Ok(ParticipantData { participant, score, segments })
    }
}

/// One simultaneous 6 s sampling of a dyad: both participants' segments and scores.
#[derive(Debug, Clone)]
pub struct DyadSample {
    pub group: u32,
    pub round: u32,
    pub sampling: u32,
    pub p1: ParticipantData,
    pub p2: ParticipantData,
}

impl DyadSample {
    pub fn new(
        group: u32,
        round: u32,
        sampling: u32,
        p1: ParticipantData,
        p2: ParticipantData,
    ) -> Result<Self, DomainError> {
        let l1 = p1.segments[0].len();
        let l2 = p2.segments[0].len();
        if l1 != l2 {
            return Err(DomainError::MixedSegmentLengths(l1, l2));
        }
        Ok(DyadSample { group, round, sampling, p1, p2 })
    }

    pub fn binary_label(&self) -> BinaryLabel {
        label_binary(self.p1.score, self.p2.score)
    }

    /// Ternary label from participant 1's or 2's perspective.
    pub fn ternary_label(&self, participant: u8) -> TernaryLabel {
        if participant == 1 {
            label_ternary(self.p1.score, self.p2.score)
        } else {
            label_ternary(self.p2.score, self.p1.score)
        }
    }
}
