//! Stimulus generators.

use alloc::vec::Vec;
use rand::Rng;

use crate::error::{Error, Result};

/// Pulse count and trial window of one 2AFC input stream.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct StreamSpec {
    pub n_pulses: usize,
    pub duration_s: f64,
}

impl StreamSpec {
    pub fn new(n_pulses: usize, duration_s: f64) -> Result<Self> {
        let s = Self {
            n_pulses,
            duration_s,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.duration_s.is_finite() && self.duration_s > 0.0 {
            Ok(())
        } else {
            Err(Error::InvalidStream("duration must be finite and > 0"))
        }
    }
}

/// Sorted pulse times inside `[0, duration_s)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PulseStream {
    times: Vec<f64>,
    duration_s: f64,
}

impl PulseStream {
    /// Wrap externally supplied times (e.g. a replay file). Times must be
    /// non-decreasing and lie in `[0, duration_s)`.
    pub fn from_times(times: Vec<f64>, duration_s: f64) -> Result<Self> {
        if !(duration_s.is_finite() && duration_s >= 0.0) {
            return Err(Error::InvalidStream("duration must be finite and >= 0"));
        }
        if times.windows(2).any(|w| !(w[0] <= w[1])) {
            return Err(Error::Unsorted("pulse times"));
        }
        if times
            .iter()
            .any(|&t| !(t.is_finite() && t >= 0.0 && t < duration_s))
        {
            return Err(Error::InvalidStream("pulse time outside [0, duration)"));
        }
        Ok(Self { times, duration_s })
    }

    /// `n_pulses` i.i.d. uniform times on `[0, duration_s)`, sorted. Exact
    /// duplicates are nudged up by one ulp so the result is strictly
    /// increasing.
    pub fn generate_random<R: Rng + ?Sized>(spec: &StreamSpec, rng: &mut R) -> Result<Self> {
        spec.validate()?;
        let d = spec.duration_s;
        let mut times: Vec<f64> = (0..spec.n_pulses)
            .map(|_| rng.random::<f64>() * d)
            .map(|t| if t < d { t } else { d.next_down() })
            .collect();
        times.sort_by(f64::total_cmp);
        for i in 1..times.len() {
            if times[i] <= times[i - 1] {
                times[i] = times[i - 1].next_up().min(d.next_down());
            }
        }
        Ok(Self {
            times,
            duration_s: d,
        })
    }

    /// Periodic train `start_s + k / rate_hz`, `k = 0..n_pulses`. The window
    /// ends one period after the last pulse.
    pub fn generate_periodic(n_pulses: usize, rate_hz: f64, start_s: f64) -> Result<Self> {
        if !(rate_hz.is_finite() && rate_hz > 0.0) {
            return Err(Error::InvalidRate(rate_hz));
        }
        if !(start_s.is_finite() && start_s >= 0.0) {
            return Err(Error::InvalidStream("start must be finite and >= 0"));
        }
        let times: Vec<f64> = (0..n_pulses)
            .map(|k| start_s + k as f64 / rate_hz)
            .collect();
        let duration_s = start_s + n_pulses.max(1) as f64 / rate_hz;
        Ok(Self { times, duration_s })
    }

    /// Same pulses observed over a longer window (relaxation tail).
    pub fn with_window(mut self, duration_s: f64) -> Result<Self> {
        if !(duration_s.is_finite() && duration_s >= self.duration_s) {
            return Err(Error::InvalidStream("window cannot shrink below the stream"));
        }
        self.duration_s = duration_s;
        Ok(self)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn duration_s(&self) -> f64 {
        self.duration_s
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}
