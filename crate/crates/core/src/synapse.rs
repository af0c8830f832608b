//! Multi-device parallel synapse.
//!
//! `N` cells share their electrodes and one set of [`DeviceParams`]. Each
//! pulse is applied to every cell independently; the synaptic current is
//! the sum of the cell currents.

use alloc::vec;
use alloc::vec::Vec;
use rand::Rng;

use crate::device::{apply_pulse_with, relax, DeviceParams, DeviceState, SwitchingModel};
use crate::error::{Error, Result};
use crate::stream::PulseStream;

#[derive(Debug, Clone, PartialEq)]
pub struct Synapse {
    params: DeviceParams,
    states: Vec<DeviceState>,
    last_event_time: f64,
}

/// One row of a synapse trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceSample {
    pub t_s: f64,
    pub count_on: usize,
    pub current_ua: f64,
}

impl Synapse {
    /// `n` cells, all OFF, clock at zero.
    pub fn new(n: usize, params: DeviceParams) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidSize);
        }
        params.validate()?;
        Ok(Self {
            params,
            states: vec![DeviceState::Off; n],
            last_event_time: 0.0,
        })
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn params(&self) -> &DeviceParams {
        &self.params
    }

    pub fn states(&self) -> &[DeviceState] {
        &self.states
    }

    pub fn last_event_time(&self) -> f64 {
        self.last_event_time
    }

    fn advance_to(&mut self, t: f64) -> Result<()> {
        if !(t >= self.last_event_time) {
            return Err(Error::TimeOrder {
                t,
                last: self.last_event_time,
            });
        }
        for s in &mut self.states {
            *s = relax(*s, t);
        }
        self.last_event_time = t;
        Ok(())
    }

    /// Relax to `t`, then pulse every cell with amplitude `v_pulse`.
    pub fn stimulate<R: Rng + ?Sized>(&mut self, t: f64, v_pulse: f64, rng: &mut R) -> Result<()> {
        self.advance_to(t)?;
        let p_on = self.params.switching.probability(v_pulse);
        let retention = self.params.retention;
        let refresh = self.params.refresh;
        for s in &mut self.states {
            *s = apply_pulse_with(*s, p_on, &retention, refresh, t, rng);
        }
        Ok(())
    }

    /// Relax to `t` and return `(count_on, current_uA)`.
    pub fn read(&mut self, t: f64) -> Result<(usize, f64)> {
        self.advance_to(t)?;
        let on = self.count_on();
        Ok((on, self.current_for(on)))
    }

    /// Number of ON cells as of the last event, without advancing time.
    pub fn count_on(&self) -> usize {
        self.states.iter().filter(|s| s.is_on()).count()
    }

    fn current_for(&self, count_on: usize) -> f64 {
        let off = self.states.len() - count_on;
        count_on as f64 * self.params.i_on + off as f64 * self.params.i_off
    }

    /// Drive the synapse with `stream` and sample it at `sample_times`.
    ///
    /// Pulses and samples are merged chronologically; at equal timestamps
    /// the pulse is applied first.
    pub fn trace<R: Rng + ?Sized>(
        &mut self,
        stream: &PulseStream,
        v_pulse: f64,
        sample_times: &[f64],
        rng: &mut R,
    ) -> Result<Vec<TraceSample>> {
        if sample_times.windows(2).any(|w| !(w[0] <= w[1])) {
            return Err(Error::Unsorted("sample times"));
        }
        let pulses = stream.times();
        let mut out = Vec::with_capacity(sample_times.len());
        let mut next_pulse = 0;
        for &ts in sample_times {
            while next_pulse < pulses.len() && pulses[next_pulse] <= ts {
                self.stimulate(pulses[next_pulse], v_pulse, rng)?;
                next_pulse += 1;
            }
            let (count_on, current_ua) = self.read(ts)?;
            out.push(TraceSample {
                t_s: ts,
                count_on,
                current_ua,
            });
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::device::{RetentionDistribution, SwitchingCurve};
    use crate::math;
    use crate::rng::seeded;

    fn params(median_s: f64, sigma_log: f64) -> DeviceParams {
        DeviceParams::new(
            300.0,
            SwitchingCurve::new(0.6, 0.05).unwrap(),
            RetentionDistribution::new(median_s, sigma_log).unwrap(),
        )
        .unwrap()
    }

    fn v_for(p: f64) -> f64 {
        0.6 + 0.05 * math::normal_quantile(p)
    }

    #[test]
    fn new_synapse_sizes() {
        for n in [1, 50, 100] {
            let mut s = Synapse::new(n, params(1.0, 0.5)).unwrap();
            assert_eq!(s.len(), n);
            assert_eq!(s.read(0.0).unwrap(), (0, 0.0));
            assert_eq!(s.last_event_time(), 0.0);
        }
        assert_eq!(Synapse::new(0, params(1.0, 0.5)), Err(Error::InvalidSize));
    }

    #[test]
    fn certain_and_impossible_switching() {
        let mut s = Synapse::new(10, params(1.0, 0.5)).unwrap();
        s.stimulate(0.0, 10.0, &mut seeded(0)).unwrap();
        assert_eq!(s.count_on(), 10);
        let mut s = Synapse::new(10, params(1.0, 0.5)).unwrap();
        s.stimulate(0.0, -10.0, &mut seeded(0)).unwrap();
        assert_eq!(s.count_on(), 0);
    }

    #[test]
    fn time_order_enforced() {
        let mut s = Synapse::new(3, params(1.0, 0.5)).unwrap();
        s.stimulate(1.0, 0.6, &mut seeded(0)).unwrap();
        assert_eq!(
            s.stimulate(0.5, 0.6, &mut seeded(0)),
            Err(Error::TimeOrder { t: 0.5, last: 1.0 })
        );
        assert!(s.read(0.9).is_err());
        assert!(s.read(1.0).is_ok());
    }

    #[test]
    fn read_is_linear_sum() {
        let p = params(1.0, 0.0);
        let mut s = Synapse::new(10, p).unwrap();
        for st in s.states.iter_mut().take(3) {
            *st = DeviceState::On { expiry: 5.0 };
        }
        assert_eq!(s.read(1.0).unwrap(), (3, 900.0));
        assert_eq!(s.read(6.0).unwrap(), (0, 0.0));
    }

    #[test]
    fn leakage_counts_off_devices() {
        let p = DeviceParams::with_currents(
            300.0,
            SwitchingCurve::new(0.6, 0.05).unwrap(),
            RetentionDistribution::new(1.0, 0.0).unwrap(),
            300.0,
            0.5,
        )
        .unwrap();
        let mut s = Synapse::new(4, p).unwrap();
        s.states[0] = DeviceState::On { expiry: 2.0 };
        assert_eq!(s.read(1.0).unwrap(), (1, 301.5));
    }

    #[test]
    fn binomial_mean_no_decay() {
        // E[n_on] = N (1 - (1-p)^k), Var = N q (1-q)
        let (n, p, k, trials) = (50usize, 0.02, 50usize, 10_000usize);
        let q = 1.0 - libm::pow(1.0 - p, k as f64);
        let v = v_for(p);
        let mut rng = seeded(21);
        let mut total = 0.0;
        for _ in 0..trials {
            let mut s = Synapse::new(n, params(1e9, 0.0)).unwrap();
            for j in 0..k {
                s.stimulate(j as f64 * 0.1, v, &mut rng).unwrap();
            }
            total += s.count_on() as f64;
        }
        let mean = total / trials as f64;
        let se = libm::sqrt(n as f64 * q * (1.0 - q) / trials as f64);
        assert!((mean - n as f64 * q).abs() < 3.0 * se, "mean {mean}");
    }

    #[test]
    fn trace_empty_stream_is_flat_zero() {
        let mut s = Synapse::new(5, params(1.0, 0.5)).unwrap();
        let stream = PulseStream::from_times(Vec::new(), 1.0).unwrap();
        let times: Vec<f64> = (0..10).map(|i| i as f64 * 0.1).collect();
        let tr = s.trace(&stream, 0.6, &times, &mut seeded(0)).unwrap();
        assert_eq!(tr.len(), 10);
        assert!(tr.iter().all(|r| r.count_on == 0 && r.current_ua == 0.0));
    }

    #[test]
    fn trace_pulse_before_sample_at_equal_time() {
        let mut s = Synapse::new(4, params(10.0, 0.0)).unwrap();
        let stream = PulseStream::from_times(alloc::vec![0.5], 1.0).unwrap();
        let tr = s.trace(&stream, 10.0, &[0.5], &mut seeded(0)).unwrap();
        assert_eq!(tr[0].count_on, 4);
    }

    #[test]
    fn trace_rejects_unsorted_samples() {
        let mut s = Synapse::new(4, params(10.0, 0.0)).unwrap();
        let stream = PulseStream::from_times(Vec::new(), 1.0).unwrap();
        assert_eq!(
            s.trace(&stream, 0.6, &[0.2, 0.1], &mut seeded(0)),
            Err(Error::Unsorted("sample times"))
        );
    }

    #[test]
    fn trace_saturates_at_ten_percent() {
        let stream = PulseStream::generate_periodic(50, 10.0, 0.0).unwrap();
        let times: Vec<f64> = (0..50).map(|k| k as f64 * 0.1).collect();
        let mut s = Synapse::new(50, params(1e3, 0.5)).unwrap();
        let tr = s.trace(&stream, v_for(0.10), &times, &mut seeded(8)).unwrap();
        assert!(tr.iter().any(|r| r.count_on as f64 >= 0.95 * 50.0));
    }

    #[test]
    fn trace_non_increasing_between_pulses() {
        let stream = PulseStream::from_times(alloc::vec![0.0], 5.0).unwrap();
        let times: Vec<f64> = (0..100).map(|k| k as f64 * 0.05).collect();
        let mut s = Synapse::new(50, params(0.5, 0.8)).unwrap();
        let tr = s.trace(&stream, 10.0, &times, &mut seeded(9)).unwrap();
        assert!(tr.windows(2).all(|w| w[1].count_on <= w[0].count_on));
        assert!(tr
            .iter()
            .all(|r| r.current_ua == r.count_on as f64 * 300.0));
    }
}
