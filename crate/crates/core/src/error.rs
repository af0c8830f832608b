use thiserror::Error;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid switching curve: v_spread must be finite and > 0 (got {0})")]
    InvalidCurve(f64),
    #[error("invalid retention distribution: median {median_s} s, sigma_log {sigma_log}")]
    InvalidRetention { median_s: f64, sigma_log: f64 },
    #[error("invalid device parameters: {0}")]
    InvalidParams(&'static str),
    #[error("synapse needs at least one device")]
    InvalidSize,
    #[error("time {t} s precedes last event at {last} s")]
    TimeOrder { t: f64, last: f64 },
    #[error("{0} must be sorted in non-decreasing order")]
    Unsorted(&'static str),
    #[error("pulse rate must be finite and > 0 (got {0} Hz)")]
    InvalidRate(f64),
    #[error("invalid stream: {0}")]
    InvalidStream(&'static str),
    #[error("probability {0} outside the open interval (0, 1)")]
    ProbabilityOutOfRange(f64),
    #[error("invalid configuration: {0}")]
    InvalidConfig(&'static str),
    #[error("degenerate calibration data: {0}")]
    DegenerateData(&'static str),
    #[error("retention group at {i_cc_ua} uA has {n} samples, need at least {min}")]
    InsufficientSamples { i_cc_ua: f64, n: usize, min: usize },
    #[error("retention table is empty")]
    EmptyTable,
}
