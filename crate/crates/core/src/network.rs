//! Two-alternative forced choice network.
//!
//! Input A drives synapse 1 and input B drives synapse 2. Both synapses
//! have the same size and device parameters. At the end of the trial window
//! the comparator fires A if `i1 - i2 > 0`, B if it is negative, and flips a
//! fair coin on an exact tie.

use rand::Rng;

use crate::device::DeviceParams;
use crate::error::{Error, Result};
use crate::stream::{PulseStream, StreamSpec};
use crate::synapse::Synapse;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Choice {
    A,
    B,
}

impl Choice {
    pub fn as_str(&self) -> &'static str {
        match self {
            Choice::A => "A",
            Choice::B => "B",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoAfcConfig {
    /// Devices per synapse.
    pub n_devices: usize,
    pub params: DeviceParams,
    /// Common spike amplitude, volts; sets `P_ON`.
    pub v_pulse: f64,
    pub spec_a: StreamSpec,
    pub spec_b: StreamSpec,
}

impl TwoAfcConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_devices == 0 {
            return Err(Error::InvalidSize);
        }
        self.params.validate()?;
        self.spec_a.validate()?;
        self.spec_b.validate()?;
        if self.spec_a.duration_s != self.spec_b.duration_s {
            return Err(Error::InvalidConfig("streams A and B must share a duration"));
        }
        if self.v_pulse.is_nan() {
            return Err(Error::InvalidConfig("v_pulse is NaN"));
        }
        Ok(())
    }

    pub fn duration_s(&self) -> f64 {
        self.spec_a.duration_s
    }

    /// The stream that truly carries more pulses, `None` when counts are equal.
    pub fn ground_truth(&self) -> Option<Choice> {
        use core::cmp::Ordering::*;
        match self.spec_a.n_pulses.cmp(&self.spec_b.n_pulses) {
            Greater => Some(Choice::A),
            Less => Some(Choice::B),
            Equal => None,
        }
    }
}

/// Outcome of one trial.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialResult {
    pub decision: Choice,
    /// Equal-count streams count as correct for either choice.
    pub correct: bool,
    pub i1: f64,
    pub i2: f64,
    pub count1: usize,
    pub count2: usize,
    pub tie: bool,
}

/// Ideal sign comparator on `i1 - i2`; returns `(choice, tie)`.
pub fn decide<R: Rng + ?Sized>(i1: f64, i2: f64, rng: &mut R) -> (Choice, bool) {
    let diff = i1 - i2;
    if diff > 0.0 {
        (Choice::A, false)
    } else if diff < 0.0 {
        (Choice::B, false)
    } else if rng.random_bool(0.5) {
        (Choice::A, true)
    } else {
        (Choice::B, true)
    }
}

/// Generate both streams (A first, then B) from `rng` and run the trial.
pub fn run_trial<R: Rng + ?Sized>(cfg: &TwoAfcConfig, rng: &mut R) -> Result<TrialResult> {
    cfg.validate()?;
    let a = PulseStream::generate_random(&cfg.spec_a, rng)?;
    let b = PulseStream::generate_random(&cfg.spec_b, rng)?;
    run_trial_with_streams(cfg, &a, &b, rng)
}

/// Run a trial on given streams. Stream durations are ignored in favour of
/// the configured window; pulses at or after it are never delivered.
///
/// Ground truth follows the lengths of the supplied streams.
pub fn run_trial_with_streams<R: Rng + ?Sized>(
    cfg: &TwoAfcConfig,
    a: &PulseStream,
    b: &PulseStream,
    rng: &mut R,
) -> Result<TrialResult> {
    if cfg.n_devices == 0 {
        return Err(Error::InvalidSize);
    }
    let end = cfg.duration_s();
    let mut syn1 = Synapse::new(cfg.n_devices, cfg.params)?;
    let mut syn2 = Synapse::new(cfg.n_devices, cfg.params)?;

    let (ta, tb) = (a.times(), b.times());
    let (mut ia, mut ib) = (0, 0);
    loop {
        let next_a = ta.get(ia).copied().filter(|&t| t < end);
        let next_b = tb.get(ib).copied().filter(|&t| t < end);
        match (next_a, next_b) {
            // A's event first on an exact tie
            (Some(x), Some(y)) if x <= y => {
                syn1.stimulate(x, cfg.v_pulse, rng)?;
                ia += 1;
            }
            (Some(_), Some(y)) | (None, Some(y)) => {
                syn2.stimulate(y, cfg.v_pulse, rng)?;
                ib += 1;
            }
            (Some(x), None) => {
                syn1.stimulate(x, cfg.v_pulse, rng)?;
                ia += 1;
            }
            (None, None) => break,
        }
    }

    let (count1, i1) = syn1.read(end)?;
    let (count2, i2) = syn2.read(end)?;
    let (decision, tie) = decide(i1, i2, rng);
    let correct = match a.len().cmp(&b.len()) {
        core::cmp::Ordering::Greater => decision == Choice::A,
        core::cmp::Ordering::Less => decision == Choice::B,
        core::cmp::Ordering::Equal => true,
    };
    Ok(TrialResult {
        decision,
        correct,
        i1,
        i2,
        count1,
        count2,
        tie,
    })
}
