//! Synthetic calibration data drawn from known parameters.

use memdecide_core::device::{RetentionModel, SwitchingModel};
use memdecide_core::{RetentionDistribution, RetentionRecord, SwitchingCurve, SwitchingRecord};
use rand::Rng;

/// `n` pulses with amplitudes uniform on `[v_lo, v_hi)`, each switching
/// with probability `curve.probability(v)`.
pub fn synth_switching<R: Rng + ?Sized>(
    curve: &SwitchingCurve,
    n: usize,
    v_lo: f64,
    v_hi: f64,
    rng: &mut R,
) -> Vec<SwitchingRecord> {
    (0..n)
        .map(|_| {
            let v_pulse = v_lo + (v_hi - v_lo) * rng.random::<f64>();
            let switched = rng.random::<f64>() < curve.probability(v_pulse);
            SwitchingRecord { v_pulse, switched }
        })
        .collect()
}

/// `n_per_group` lognormal retention samples for each `(i_cc, dist)` group.
pub fn synth_retention<R: Rng + ?Sized>(
    groups: &[(f64, RetentionDistribution)],
    n_per_group: usize,
    rng: &mut R,
) -> Vec<RetentionRecord> {
    let mut out = Vec::with_capacity(groups.len() * n_per_group);
    for &(i_cc_ua, dist) in groups {
        for _ in 0..n_per_group {
            out.push(RetentionRecord {
                i_cc_ua,
                retention_s: dist.sample(rng),
            });
        }
    }
    out
}
