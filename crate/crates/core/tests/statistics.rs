//! Monte Carlo checks of the statistical invariants. Sample sizes are the
//! ones the tolerances were derived for; do not shrink them.

use memdecide_core::calibration::switching_log_likelihood;
use memdecide_core::device::SwitchingModel;
use memdecide_core::experiment::{pulse_amplitude_for, wilson_interval};
use memdecide_core::network::Choice;
use memdecide_core::rng::{derive_seed, seeded};
use memdecide_core::*;
use rand::Rng;

fn curve() -> SwitchingCurve {
    SwitchingCurve::new(0.6, 0.05).unwrap()
}

fn params(median_s: f64, sigma: f64) -> DeviceParams {
    DeviceParams::new(300.0, curve(), RetentionDistribution::new(median_s, sigma).unwrap()).unwrap()
}

fn afc(n_a: usize, n_b: usize, n: usize, p_on: f64, duration: f64, median_s: f64) -> TwoAfcConfig {
    TwoAfcConfig {
        n_devices: n,
        params: DeviceParams::new(270.0, curve(), RetentionDistribution::new(median_s, 0.5).unwrap())
            .unwrap(),
        v_pulse: pulse_amplitude_for(&curve(), p_on).unwrap(),
        spec_a: StreamSpec::new(n_a, duration).unwrap(),
        spec_b: StreamSpec::new(n_b, duration).unwrap(),
    }
}

#[test]
fn random_stream_passes_kolmogorov_smirnov() {
    let n = 10_000;
    let s = PulseStream::generate_random(&StreamSpec::new(n, 1.0).unwrap(), &mut seeded(17)).unwrap();
    let d = s
        .times()
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            let above = (i + 1) as f64 / n as f64 - t;
            let below = t - i as f64 / n as f64;
            above.max(below)
        })
        .fold(0.0, f64::max);
    // asymptotic 1% critical value
    let crit = 1.628 / (n as f64).sqrt();
    assert!(d < crit, "D = {d}, critical {crit}");
}

#[test]
fn binomial_moments_without_decay() {
    let (n, p, k, trials) = (50usize, 0.1f64, 10usize, 10_000usize);
    let q = 1.0 - (1.0 - p).powi(k as i32);
    let v = pulse_amplitude_for(&curve(), p).unwrap();
    let mut counts = Vec::with_capacity(trials);
    let mut rng = seeded(5);
    for _ in 0..trials {
        let mut syn = Synapse::new(n, params(1e9, 0.0)).unwrap();
        for j in 0..k {
            syn.stimulate(j as f64 * 0.1, v, &mut rng).unwrap();
        }
        counts.push(syn.count_on() as f64);
    }
    let m = counts.iter().sum::<f64>() / trials as f64;
    let var = counts.iter().map(|c| (c - m).powi(2)).sum::<f64>() / (trials as f64 - 1.0);
    let mu = n as f64 * q;
    let sigma2 = n as f64 * q * (1.0 - q);
    // central fourth moment of Binomial(n, q)
    let mu4 = sigma2 * (1.0 + 3.0 * (n as f64 - 2.0) * q * (1.0 - q));
    let se_mean = (sigma2 / trials as f64).sqrt();
    let se_var = ((mu4 - sigma2 * sigma2 * (trials as f64 - 3.0) / (trials as f64 - 1.0)) / trials as f64).sqrt();
    assert!((m - mu).abs() < 3.0 * se_mean, "mean {m} vs {mu}");
    assert!((var - sigma2).abs() < 3.0 * se_var, "var {var} vs {sigma2}");
}

#[test]
fn low_p_on_integration_is_near_linear() {
    let stream = PulseStream::generate_periodic(50, 10.0, 0.0).unwrap();
    let prm = params(1e3, 0.5);
    let avg = experiment::run_trace_experiment(50, &stream, 0.01, &prm, 10.0, 2000, 3).unwrap();
    // samples at k/10 s see the (k+1)-th pulse
    let (x, y): (Vec<f64>, Vec<f64>) = avg
        .samples
        .iter()
        .take(50)
        .enumerate()
        .map(|(j, s)| ((j + 1) as f64, s.count_on))
        .unzip();
    let (_, _, r2) = math::linear_fit(&x, &y).unwrap();
    assert!(r2 > 0.98, "R^2 = {r2}");
}

#[test]
fn shorter_retention_gives_lower_plateau() {
    let stream = PulseStream::generate_periodic(50, 10.0, 0.0).unwrap();
    let mean_level = |median_s| {
        let avg = experiment::run_trace_experiment(50, &stream, 0.1, &params(median_s, 0.5), 10.0, 300, 8)
            .unwrap();
        avg.samples.iter().take(50).map(|s| s.count_on).sum::<f64>() / 50.0
    };
    let short = mean_level(0.05);
    let long = mean_level(0.5);
    assert!(short < long, "{short} vs {long}");
}

#[test]
fn swapping_streams_mirrors_accuracy() {
    let ab = estimate_accuracy(&afc(40, 20, 20, 0.02, 2.0, 2.0), 1000, 10, 0).unwrap();
    let ba = estimate_accuracy(&afc(20, 40, 20, 0.02, 2.0, 2.0), 1000, 11, 0).unwrap();
    assert!(!ab.separated_from(&ba), "{ab:?} vs {ba:?}");
}

#[test]
fn decisions_invariant_under_current_scaling() {
    let base = afc(40, 20, 20, 0.01, 2.0, 2.0);
    let mut scaled = base;
    scaled.params.i_on *= 10.0;
    for i in 0..100 {
        let a = network::run_trial(&base, &mut seeded(derive_seed(1, &[i]))).unwrap();
        let b = network::run_trial(&scaled, &mut seeded(derive_seed(1, &[i]))).unwrap();
        assert_eq!(a.decision, b.decision);
        assert_eq!((a.count1, a.count2, a.tie), (b.count1, b.count2, b.tie));
    }
}

#[test]
fn symmetric_seeded_mirror() {
    // with identical pulse times on both inputs the comparator sees a tie or
    // a decision driven only by device noise; A and B must be equally likely
    let cfg = afc(20, 20, 10, 0.05, 1.0, 2.0);
    let mut a_wins = 0;
    let n = 4000;
    for i in 0..n {
        let r = network::run_trial(&cfg, &mut seeded(derive_seed(2, &[i]))).unwrap();
        if r.decision == Choice::A {
            a_wins += 1;
        }
    }
    let rate = a_wins as f64 / n as f64;
    assert!((rate - 0.5).abs() < 3.0 * (0.25 / n as f64).sqrt(), "rate {rate}");
}

#[test]
fn accuracy_does_not_grow_with_duration_at_fixed_retention() {
    let pts: Vec<AccuracyPoint> = [1.0, 5.0, 20.0]
        .iter()
        .map(|&d| estimate_accuracy(&afc(40, 20, 20, 0.05, d, 1.0), 1000, 12, 0).unwrap())
        .collect();
    for w in pts.windows(2) {
        assert!(
            w[1].accuracy <= w[0].accuracy || !w[0].separated_from(&w[1]),
            "{:?} -> {:?}",
            w[0],
            w[1]
        );
    }
}

#[test]
fn wilson_interval_covers_bernoulli_truth() {
    let mut rng = seeded(19);
    for &p in &[0.5, 0.9, 0.99] {
        let runs = 2000;
        let n = 200;
        let covered = (0..runs)
            .filter(|_| {
                let k = (0..n).filter(|_| rng.random::<f64>() < p).count();
                let (lo, hi) = wilson_interval(k, n);
                lo <= p && p <= hi
            })
            .count();
        let coverage = covered as f64 / runs as f64;
        // nominal 0.95; Wilson is slightly conservative or slightly liberal
        // depending on p, the 3-SE band around 0.95 at 2000 runs is +-0.015
        assert!(coverage > 0.93, "p = {p}: coverage {coverage}");
    }
}

#[test]
fn switching_fit_beats_local_grid() {
    let truth = curve();
    let mut rng = seeded(23);
    let recs: Vec<SwitchingRecord> = (0..2000)
        .map(|_| {
            let v = 0.4 + 0.4 * rng.random::<f64>();
            SwitchingRecord { v_pulse: v, switched: rng.random::<f64>() < truth.probability(v) }
        })
        .collect();
    let fit = fit_switching_curve(&recs).unwrap();
    let c = fit.curve;
    let mut best = f64::NEG_INFINITY;
    for i in 0..50 {
        for j in 0..50 {
            let m = c.v_median - 0.05 + 0.1 * i as f64 / 49.0;
            let s = c.v_spread * (0.5 + 1.0 * j as f64 / 49.0);
            let ll = switching_log_likelihood(&recs, &SwitchingCurve { v_median: m, v_spread: s });
            best = best.max(ll);
        }
    }
    assert!(fit.log_likelihood >= best - 1e-9, "{} < {best}", fit.log_likelihood);
}

#[test]
fn no_decay_oracle_five_triples() {
    for &(n, p, k) in &[(50usize, 0.02, 50usize), (50, 0.10, 50), (10, 0.5, 3), (100, 0.01, 100), (20, 0.3, 10)] {
        let v = pulse_amplitude_for(&curve(), p).unwrap();
        let trials = 2000;
        let mut total = 0.0;
        for t in 0..trials {
            let mut rng = seeded(derive_seed(99, &[n as u64, k as u64, t]));
            let mut syn = Synapse::new(n, params(1e9, 0.0)).unwrap();
            for j in 0..k {
                syn.stimulate(j as f64 * 0.1, v, &mut rng).unwrap();
            }
            total += syn.count_on() as f64;
        }
        let mean = total / trials as f64;
        let expect = expected_on_count_no_decay(n, p, k);
        let q = expect / n as f64;
        let se = (n as f64 * q * (1.0 - q) / trials as f64).sqrt();
        assert!((mean - expect).abs() < 3.0 * se, "({n},{p},{k}) mean {mean} vs {expect}");
    }
}
