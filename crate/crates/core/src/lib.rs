//! Stochastic simulation core for volatile resistive-switching (RRAM) devices.
//!
//! The crate models a single 1T1R cell as a two-state stochastic element
//! (OFF, or ON until a sampled expiry time), groups cells into parallel
//! multi-device synapses, and wires two synapses into a two-alternative
//! forced choice (2AFC) network read out by an ideal sign comparator.
//! On top of that sit a Monte Carlo accuracy harness with Wilson intervals
//! and a calibration layer that fits the switching curve and the
//! retention distributions from measured records.
//!
//! Everything here is `no_std` + `alloc`. File formats, the CLI and
//! parallel sweeps live in the `memdecide` crate.

#![no_std]
// `!(a <= b)` is used deliberately so that NaN fails validation
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod calibration;
pub mod device;
mod error;
pub mod experiment;
pub mod math;
pub mod network;
pub mod rng;
pub mod stream;
pub mod synapse;

pub use calibration::{
    fit_retention, fit_switching_curve, ParamDeck, RetentionEntry, RetentionFit, RetentionRecord,
    RetentionTable, SwitchingFit, SwitchingRecord,
};
pub use device::{
    apply_pulse, read_current, relax, sample_retention, switching_probability, DeviceParams,
    DeviceState, RefreshPolicy, RetentionDistribution, SwitchingCurve,
};
pub use error::{Error, Result};
pub use experiment::{
    estimate_accuracy, expected_on_count_no_decay, invert_p_on, run_trace_experiment, sweep,
    AccuracyPoint, SweepBase, SweepCell, SweepGrid,
};
pub use network::{decide, run_trial, Choice, TrialResult, TwoAfcConfig};
pub use rng::{derive_seed, seeded, SimRng};
pub use stream::{PulseStream, StreamSpec};
pub use synapse::{Synapse, TraceSample};
