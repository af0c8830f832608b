//! Compact stochastic model of one volatile 1T1R cell.
//!
//! The cell is either OFF or ON with a scheduled expiry time. A pulse of
//! amplitude `v` turns an OFF cell ON with probability `P_ON(v)`, given by
//! the CDF of the set-voltage distribution. Each switching event samples a
//! fresh retention time. What a pulse does to a cell that is already ON is
//! set by [`RefreshPolicy`]. Relaxation at `t >= expiry` is inclusive.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::math;

/// Probability that a pulse of a given amplitude switches an OFF cell ON.
///
/// Implementations must be monotone non-decreasing in `v_pulse`.
pub trait SwitchingModel {
    fn probability(&self, v_pulse: f64) -> f64;
}

/// Source of retention times, in seconds. Samples must be strictly positive.
pub trait RetentionModel {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64;
}

/// Normal set-voltage distribution; `P_ON(v)` is its CDF.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SwitchingCurve {
    /// Amplitude at which `P_ON = 0.5`, volts.
    pub v_median: f64,
    /// Standard deviation of the set voltage, volts.
    pub v_spread: f64,
}

impl SwitchingCurve {
    pub fn new(v_median: f64, v_spread: f64) -> Result<Self> {
        let c = Self { v_median, v_spread };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.v_spread.is_finite() && self.v_spread > 0.0) {
            return Err(Error::InvalidCurve(self.v_spread));
        }
        if !self.v_median.is_finite() {
            return Err(Error::InvalidParams("v_median must be finite"));
        }
        Ok(())
    }

    /// Standardized amplitude `(v - v_median) / v_spread`.
    pub fn z_score(&self, v_pulse: f64) -> f64 {
        (v_pulse - self.v_median) / self.v_spread
    }
}

impl SwitchingModel for SwitchingCurve {
    fn probability(&self, v_pulse: f64) -> f64 {
        math::normal_cdf(self.z_score(v_pulse))
    }
}

/// Lognormal retention time parameterized by its median.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RetentionDistribution {
    /// Median retention, seconds.
    pub median_s: f64,
    /// Standard deviation of `ln(retention)`. Zero makes retention deterministic.
    pub sigma_log: f64,
}

impl RetentionDistribution {
    pub fn new(median_s: f64, sigma_log: f64) -> Result<Self> {
        let d = Self {
            median_s,
            sigma_log,
        };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.median_s.is_finite()
            && self.median_s > 0.0
            && self.sigma_log.is_finite()
            && self.sigma_log >= 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidRetention {
                median_s: self.median_s,
                sigma_log: self.sigma_log,
            })
        }
    }
}

impl RetentionModel for RetentionDistribution {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if self.sigma_log == 0.0 {
            return self.median_s;
        }
        let z: f64 = StandardNormal.sample(rng);
        (self.median_s * libm::exp(self.sigma_log * z)).max(f64::MIN_POSITIVE)
    }
}

/// Effect of a pulse on a cell that is already ON.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum RefreshPolicy {
    /// The filament is re-formed, and the expiry resampled, only when the
    /// pulse would have switched an OFF cell (probability `P_ON`).
    #[default]
    OnSwitch,
    /// Every pulse re-forms the filament and resamples the expiry.
    Always,
}

/// Parameters of one 1T1R cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeviceParams {
    /// Compliance current set by the access transistor, uA.
    pub i_cc: f64,
    pub switching: SwitchingCurve,
    pub retention: RetentionDistribution,
    /// Current through an ON cell, uA.
    pub i_on: f64,
    /// Leakage through an OFF cell, uA.
    pub i_off: f64,
    pub refresh: RefreshPolicy,
}

impl DeviceParams {
    /// ON current clamps at compliance (`i_on = i_cc`), OFF leakage is zero.
    pub fn new(
        i_cc: f64,
        switching: SwitchingCurve,
        retention: RetentionDistribution,
    ) -> Result<Self> {
        Self::with_currents(i_cc, switching, retention, i_cc, 0.0)
    }

    pub fn with_currents(
        i_cc: f64,
        switching: SwitchingCurve,
        retention: RetentionDistribution,
        i_on: f64,
        i_off: f64,
    ) -> Result<Self> {
        let p = Self {
            i_cc,
            switching,
            retention,
            i_on,
            i_off,
            refresh: RefreshPolicy::default(),
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        self.switching.validate()?;
        self.retention.validate()?;
        if !(self.i_cc.is_finite() && self.i_cc > 0.0) {
            return Err(Error::InvalidParams("i_cc must be finite and > 0"));
        }
        if !(self.i_off.is_finite() && self.i_off >= 0.0) {
            return Err(Error::InvalidParams("i_off must be finite and >= 0"));
        }
        if !(self.i_on.is_finite() && self.i_on > self.i_off) {
            return Err(Error::InvalidParams("i_on must be finite and > i_off"));
        }
        Ok(())
    }
}

/// Filament state of one cell.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum DeviceState {
    #[default]
    Off,
    /// ON until the absolute simulation time `expiry` (seconds).
    On { expiry: f64 },
}

impl DeviceState {
    pub fn is_on(&self) -> bool {
        matches!(self, DeviceState::On { .. })
    }
}

pub fn switching_probability(curve: &SwitchingCurve, v_pulse: f64) -> Result<f64> {
    curve.validate()?;
    Ok(curve.probability(v_pulse))
}

pub fn sample_retention<R: Rng + ?Sized>(dist: &RetentionDistribution, rng: &mut R) -> Result<f64> {
    dist.validate()?;
    Ok(dist.sample(rng))
}

fn bernoulli<R: Rng + ?Sized>(p: f64, rng: &mut R) -> bool {
    if p >= 1.0 {
        true
    } else if p <= 0.0 {
        false
    } else {
        rng.random::<f64>() < p
    }
}

/// Switch a cell given an already evaluated `p_on`. Shared by
/// [`apply_pulse`] and the synapse, which evaluates `P_ON` once per pulse.
pub fn apply_pulse_with<R, M>(
    state: DeviceState,
    p_on: f64,
    retention: &M,
    refresh: RefreshPolicy,
    t: f64,
    rng: &mut R,
) -> DeviceState
where
    R: Rng + ?Sized,
    M: RetentionModel,
{
    let switches = match (state, refresh) {
        (DeviceState::On { .. }, RefreshPolicy::Always) => true,
        _ => bernoulli(p_on, rng),
    };
    if !switches {
        return state;
    }
    let retention_s = retention.sample(rng);
    // expiry must land strictly after t even when retention underflows t's ulp
    let expiry = (t + retention_s).max(t.next_up());
    DeviceState::On { expiry }
}

/// Apply one pulse at time `t` to a cell already relaxed to `t`.
pub fn apply_pulse<R: Rng + ?Sized>(
    state: DeviceState,
    params: &DeviceParams,
    v_pulse: f64,
    t: f64,
    rng: &mut R,
) -> DeviceState {
    let p_on = params.switching.probability(v_pulse);
    apply_pulse_with(state, p_on, &params.retention, params.refresh, t, rng)
}

/// Spontaneous relaxation: ON cells whose expiry is at or before `t` turn OFF.
pub fn relax(state: DeviceState, t: f64) -> DeviceState {
    match state {
        DeviceState::On { expiry } if t >= expiry => DeviceState::Off,
        s => s,
    }
}

/// Non-destructive current readout, uA.
pub fn read_current(state: &DeviceState, params: &DeviceParams) -> f64 {
    if state.is_on() {
        params.i_on
    } else {
        params.i_off
    }
}
