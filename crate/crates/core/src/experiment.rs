//! Monte Carlo harness: accuracy estimates with Wilson intervals, grid
//! sweeps, averaged synapse traces and closed-form oracles.
//!
//! Seeds are derived, never shared. A trial inside a cell uses
//! `derive_seed(cell_seed, [trial_offset + i])`; a grid cell uses
//! `derive_seed(master_seed, [duration bits, n_a, n_b, n_devices, i_cc
//! bits, p_on bits])`. Cells and trials are therefore independent of
//! evaluation order, which is what lets the `memdecide` crate run them in
//! parallel and still produce bit-identical reports.

use alloc::vec::Vec;

use crate::calibration::RetentionTable;
use crate::device::{DeviceParams, RefreshPolicy, SwitchingCurve, SwitchingModel};
use crate::error::{Error, Result};
use crate::math;
use crate::network::{run_trial, TwoAfcConfig};
use crate::rng::{derive_seed, seeded};
use crate::stream::{PulseStream, StreamSpec};
use crate::synapse::Synapse;

/// Two-sided 95% standard normal quantile.
pub const Z_95: f64 = 1.959_963_984_540_054;

/// Wilson score interval at 95% for `successes` out of `n`.
pub fn wilson_interval(successes: usize, n: usize) -> (f64, f64) {
    wilson_interval_z(successes, n, Z_95)
}

pub fn wilson_interval_z(successes: usize, n: usize, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let n_f = n as f64;
    let p = successes as f64 / n_f;
    let z2 = z * z;
    let denom = 1.0 + z2 / n_f;
    let centre = (p + z2 / (2.0 * n_f)) / denom;
    let half = z * libm::sqrt(p * (1.0 - p) / n_f + z2 / (4.0 * n_f * n_f)) / denom;
    // clamp so that lo <= p <= hi survives rounding at p = 0 or 1
    ((centre - half).clamp(0.0, p), (centre + half).clamp(p, 1.0))
}

/// One cell of an accuracy report.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AccuracyPoint {
    pub duration_s: f64,
    pub n_a: usize,
    pub n_b: usize,
    pub n_devices: usize,
    pub i_cc_ua: f64,
    pub p_on: f64,
    pub accuracy: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub n_trials: usize,
    pub n_correct: usize,
    pub n_ties: usize,
}

impl AccuracyPoint {
    /// Whether the two 95% intervals are disjoint.
    pub fn separated_from(&self, other: &AccuracyPoint) -> bool {
        self.ci_low > other.ci_high || other.ci_low > self.ci_high
    }
}

/// Run `trials` independent trials of `cfg` and report the fraction correct.
pub fn estimate_accuracy(
    cfg: &TwoAfcConfig,
    trials: usize,
    master_seed: u64,
    trial_offset: u64,
) -> Result<AccuracyPoint> {
    if trials == 0 {
        return Err(Error::InvalidConfig("trials must be >= 1"));
    }
    cfg.validate()?;
    let mut n_correct = 0;
    let mut n_ties = 0;
    for i in 0..trials as u64 {
        let mut rng = seeded(derive_seed(master_seed, &[trial_offset + i]));
        let r = run_trial(cfg, &mut rng)?;
        n_correct += r.correct as usize;
        n_ties += r.tie as usize;
    }
    let (ci_low, ci_high) = wilson_interval(n_correct, trials);
    Ok(AccuracyPoint {
        duration_s: cfg.duration_s(),
        n_a: cfg.spec_a.n_pulses,
        n_b: cfg.spec_b.n_pulses,
        n_devices: cfg.n_devices,
        i_cc_ua: cfg.params.i_cc,
        p_on: cfg.params.switching.probability(cfg.v_pulse),
        accuracy: n_correct as f64 / trials as f64,
        ci_low,
        ci_high,
        n_trials: trials,
        n_correct,
        n_ties,
    })
}

/// Pulse amplitude giving switching probability `p_target` in `(0, 1)`.
pub fn invert_p_on(curve: &SwitchingCurve, p_target: f64) -> Result<f64> {
    curve.validate()?;
    if !(p_target > 0.0 && p_target < 1.0) {
        return Err(Error::ProbabilityOutOfRange(p_target));
    }
    Ok(curve.v_median + curve.v_spread * math::normal_quantile(p_target))
}

/// Like [`invert_p_on`] but also accepts the closed endpoints, mapped to
/// infinite amplitudes (never / always switch).
pub fn pulse_amplitude_for(curve: &SwitchingCurve, p: f64) -> Result<f64> {
    if p == 0.0 {
        curve.validate()?;
        Ok(f64::NEG_INFINITY)
    } else if p == 1.0 {
        curve.validate()?;
        Ok(f64::INFINITY)
    } else {
        invert_p_on(curve, p)
    }
}

/// Mean ON count after `k` pulses with relaxation disabled: `n (1 - (1-p)^k)`.
pub fn expected_on_count_no_decay(n: usize, p: f64, k: usize) -> f64 {
    n as f64 * (1.0 - libm::pow(1.0 - p, k as f64))
}

/// Axes of an accuracy sweep. Cells are the Cartesian product, enumerated
/// with `durations_s` outermost and `p_on_values` innermost.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepGrid {
    pub durations_s: Vec<f64>,
    pub ratios: Vec<(usize, usize)>,
    pub device_counts: Vec<usize>,
    pub i_cc_values_ua: Vec<f64>,
    pub p_on_values: Vec<f64>,
    pub trials_per_point: usize,
    pub master_seed: u64,
}

/// Device-level settings shared by every cell of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepBase {
    pub switching: SwitchingCurve,
    /// Maps each swept `i_cc` to its retention distribution.
    pub retention_table: RetentionTable,
    /// ON current; `None` clamps it to the cell's compliance current.
    pub i_on: Option<f64>,
    pub i_off: f64,
    pub refresh: RefreshPolicy,
}

/// Coordinates of one sweep cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepCell {
    pub index: usize,
    pub duration_s: f64,
    pub n_a: usize,
    pub n_b: usize,
    pub n_devices: usize,
    pub i_cc_ua: f64,
    pub p_on: f64,
}

impl SweepCell {
    pub fn seed(&self, master_seed: u64) -> u64 {
        derive_seed(
            master_seed,
            &[
                self.duration_s.to_bits(),
                self.n_a as u64,
                self.n_b as u64,
                self.n_devices as u64,
                self.i_cc_ua.to_bits(),
                self.p_on.to_bits(),
            ],
        )
    }

    pub fn config(&self, base: &SweepBase) -> Result<TwoAfcConfig> {
        let retention = base.retention_table.interpolate(self.i_cc_ua)?;
        let mut params = DeviceParams::with_currents(
            self.i_cc_ua,
            base.switching,
            retention,
            base.i_on.unwrap_or(self.i_cc_ua),
            base.i_off,
        )?;
        params.refresh = base.refresh;
        Ok(TwoAfcConfig {
            n_devices: self.n_devices,
            params,
            v_pulse: pulse_amplitude_for(&base.switching, self.p_on)?,
            spec_a: StreamSpec::new(self.n_a, self.duration_s)?,
            spec_b: StreamSpec::new(self.n_b, self.duration_s)?,
        })
    }
}

impl SweepGrid {
    pub fn validate(&self) -> Result<()> {
        if self.durations_s.is_empty()
            || self.ratios.is_empty()
            || self.device_counts.is_empty()
            || self.i_cc_values_ua.is_empty()
            || self.p_on_values.is_empty()
        {
            return Err(Error::InvalidConfig("every sweep axis needs at least one value"));
        }
        if self.trials_per_point == 0 {
            return Err(Error::InvalidConfig("trials_per_point must be >= 1"));
        }
        if self.p_on_values.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::InvalidConfig("p_on values must lie in [0, 1]"));
        }
        Ok(())
    }

    pub fn cells(&self) -> Vec<SweepCell> {
        let mut out = Vec::new();
        for &duration_s in &self.durations_s {
            for &(n_a, n_b) in &self.ratios {
                for &n_devices in &self.device_counts {
                    for &i_cc_ua in &self.i_cc_values_ua {
                        for &p_on in &self.p_on_values {
                            out.push(SweepCell {
                                index: out.len(),
                                duration_s,
                                n_a,
                                n_b,
                                n_devices,
                                i_cc_ua,
                                p_on,
                            });
                        }
                    }
                }
            }
        }
        out
    }

    /// Evaluate one cell. The reported `p_on` is the grid value, not the
    /// round-tripped probability of the pulse amplitude.
    pub fn evaluate_cell(&self, base: &SweepBase, cell: &SweepCell) -> Result<AccuracyPoint> {
        let cfg = cell.config(base)?;
        let mut point =
            estimate_accuracy(&cfg, self.trials_per_point, cell.seed(self.master_seed), 0)?;
        point.p_on = cell.p_on;
        Ok(point)
    }
}

/// Evaluate every cell of `grid` sequentially, in grid order.
pub fn sweep(grid: &SweepGrid, base: &SweepBase) -> Result<Vec<AccuracyPoint>> {
    grid.validate()?;
    grid.cells()
        .iter()
        .map(|c| grid.evaluate_cell(base, c))
        .collect()
}

/// Sample instants `k / rate` for `k = 0, 1, ...` up to and including `window_s`.
pub fn sample_times(window_s: f64, sample_rate_hz: f64) -> Result<Vec<f64>> {
    if !(sample_rate_hz.is_finite() && sample_rate_hz > 0.0) {
        return Err(Error::InvalidRate(sample_rate_hz));
    }
    if !(window_s.is_finite() && window_s >= 0.0) {
        return Err(Error::InvalidStream("window must be finite and >= 0"));
    }
    let last = libm::floor(window_s * sample_rate_hz + 1e-9) as usize;
    Ok((0..=last).map(|k| k as f64 / sample_rate_hz).collect())
}

/// Pointwise mean of repeated synapse traces.
#[derive(Debug, Clone, PartialEq)]
pub struct AveragedTrace {
    pub samples: Vec<MeanSample>,
    pub repeats: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanSample {
    pub t_s: f64,
    pub count_on: f64,
    pub current_ua: f64,
}

/// Drive `repeats` fresh synapses of `n` cells with `stream` at the
/// amplitude giving `p_on`, sampling over `[0, stream.duration_s()]` at
/// `sample_rate_hz`. Repeat `r` uses `derive_seed(master_seed, [r])`.
pub fn run_trace_experiment(
    n: usize,
    stream: &PulseStream,
    p_on: f64,
    params: &DeviceParams,
    sample_rate_hz: f64,
    repeats: usize,
    master_seed: u64,
) -> Result<AveragedTrace> {
    if repeats == 0 {
        return Err(Error::InvalidConfig("repeats must be >= 1"));
    }
    let v_pulse = pulse_amplitude_for(&params.switching, p_on)?;
    let times = sample_times(stream.duration_s(), sample_rate_hz)?;
    let mut count_sum = alloc::vec![0.0; times.len()];
    let mut current_sum = alloc::vec![0.0; times.len()];
    for r in 0..repeats as u64 {
        let mut rng = seeded(derive_seed(master_seed, &[r]));
        let mut syn = Synapse::new(n, *params)?;
        let tr = syn.trace(stream, v_pulse, &times, &mut rng)?;
        for (i, s) in tr.iter().enumerate() {
            count_sum[i] += s.count_on as f64;
            current_sum[i] += s.current_ua;
        }
    }
    let k = repeats as f64;
    let samples = times
        .iter()
        .enumerate()
        .map(|(i, &t_s)| MeanSample {
            t_s,
            count_on: count_sum[i] / k,
            current_ua: current_sum[i] / k,
        })
        .collect();
    Ok(AveragedTrace { samples, repeats })
}
