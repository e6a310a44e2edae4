use alloc::string::String;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("sample rate {sample_rate} Hz does not exceed twice the highest frequency {max_frequency} Hz")]
    NyquistViolation {
        sample_rate: f64,
        max_frequency: f64,
    },
    #[error("generating signal has no harmonics")]
    EmptySignal,
    #[error("unknown preset `{0}`")]
    UnknownPreset(String),
    #[error("signal is identically zero and cannot be normalized")]
    ZeroNorm,
    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("invalid count: {0}")]
    InvalidCount(&'static str),
    #[error("bank models {bank} harmonics but the signal has {signal}")]
    HarmonicMismatch { bank: usize, signal: usize },
    #[error("every channel response is identically zero")]
    ZeroSignal,
    #[error("schedule is empty")]
    EmptySchedule,
    #[error("coefficient disk is degenerate (A = {a_max:e}, B = {b_max:e})")]
    DegenerateDisk { a_max: f64, b_max: f64 },
    #[error("orientation point is at the origin")]
    ZeroOrientation,
    #[error("no channel qualifies at r_e = {r_e}")]
    EmptyMembership { r_e: f64 },
    #[error("every radius in the grid produced an empty membership")]
    AllEmpty,
    #[error("segment of {segment_s} s is shorter than one period of {period_s} s")]
    SegmentTooShort { segment_s: f64, period_s: f64 },
    #[error("frame {index} is the zero vector")]
    ZeroFrame { index: usize },
    #[error("no spectral peak in band [{f_min}, {f_max}] Hz")]
    NoPeak { f_min: f64, f_max: f64 },
    #[error("signal too short: need {needed} samples, have {available}")]
    TooShort { needed: usize, available: usize },
    #[error("frame dimensions differ: expected {expected:?}, got {actual:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        actual: (usize, usize),
    },
    #[error("need more than {needed} frames, have {available}")]
    TooFewFrames { needed: usize, available: usize },
    #[error("pixel selection is empty")]
    EmptySelection,
    #[error("signal has zero variance")]
    ZeroVariance,
    #[error("window of {window_s} s is outside the allowed range or longer than the signal ({duration_s} s)")]
    WindowTooLong { window_s: f64, duration_s: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),
}
