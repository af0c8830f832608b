//! Fitting device parameters from measured records.
//!
//! * The switching curve is a probit regression of the switched/not-switched
//!   outcome on pulse amplitude, solved by Fisher scoring with step halving.
//!   If scoring does not converge (for instance on perfectly separated
//!   data) the fit falls back to a bounded grid search.
//! * Retention is fitted per compliance-current group as a lognormal with
//!   median = sample median and `sigma_log` = sample SD of `ln(t)`.

use alloc::string::String;
use alloc::vec::Vec;

use crate::device::{RetentionDistribution, SwitchingCurve};
use crate::error::{Error, Result};
use crate::math::{self, inverse_mills, normal_cdf};

/// Minimum number of switching records accepted by [`fit_switching_curve`].
pub const MIN_SWITCHING_RECORDS: usize = 10;
/// Minimum samples per compliance-current group in [`fit_retention`].
pub const MIN_RETENTION_SAMPLES: usize = 5;

const SCORING_TOL: f64 = 1e-8;
const SCORING_MAX_ITER: usize = 500;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SwitchingRecord {
    pub v_pulse: f64,
    pub switched: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RetentionRecord {
    pub i_cc_ua: f64,
    pub retention_s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitMethod {
    FisherScoring,
    GridSearch,
}

impl FitMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            FitMethod::FisherScoring => "fisher_scoring",
            FitMethod::GridSearch => "grid_search",
        }
    }
}

/// Switching-curve estimate plus diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SwitchingFit {
    pub curve: SwitchingCurve,
    pub log_likelihood: f64,
    /// Asymptotic standard errors from the inverse Fisher information
    /// (delta method). NaN when the information matrix is singular.
    pub se_v_median: f64,
    pub se_v_spread: f64,
    pub iterations: usize,
    pub converged: bool,
    pub method: FitMethod,
    pub n_records: usize,
}

/// `ln Phi(x)`, finite far into the left tail.
fn log_ndtr(x: f64) -> f64 {
    if x > -30.0 {
        libm::log(normal_cdf(x))
    } else {
        // Phi(x) ~ phi(x)/(-x) * (1 - 1/x^2 + 3/x^4)
        let x2 = x * x;
        -0.5 * x2 - libm::log(-x) - 0.918_938_533_204_672_8 + libm::log(1.0 - 1.0 / x2 + 3.0 / (x2 * x2))
    }
}

/// Log-likelihood of the normal-CDF switching model.
pub fn switching_log_likelihood(records: &[SwitchingRecord], curve: &SwitchingCurve) -> f64 {
    records
        .iter()
        .map(|r| {
            let z = curve.z_score(r.v_pulse);
            if r.switched {
                log_ndtr(z)
            } else {
                log_ndtr(-z)
            }
        })
        .sum()
}

/// Probit model in standardized amplitude `u = (v - centre) / scale`:
/// `P = Phi(a + b u)`.
struct Probit<'a> {
    records: &'a [SwitchingRecord],
    centre: f64,
    scale: f64,
}

impl Probit<'_> {
    fn u(&self, v: f64) -> f64 {
        (v - self.centre) / self.scale
    }

    fn curve(&self, a: f64, b: f64) -> SwitchingCurve {
        SwitchingCurve {
            v_median: self.centre - self.scale * a / b,
            v_spread: self.scale / b,
        }
    }

    fn log_likelihood(&self, a: f64, b: f64) -> f64 {
        self.records
            .iter()
            .map(|r| {
                let eta = a + b * self.u(r.v_pulse);
                if r.switched {
                    log_ndtr(eta)
                } else {
                    log_ndtr(-eta)
                }
            })
            .sum()
    }

    /// Score vector and expected information matrix at `(a, b)`.
    fn score_info(&self, a: f64, b: f64) -> ([f64; 2], [[f64; 2]; 2]) {
        let mut g = [0.0; 2];
        let mut info = [[0.0; 2]; 2];
        for r in self.records {
            let u = self.u(r.v_pulse);
            let eta = a + b * u;
            // d/d eta of ln Phi(eta) is lambda(-eta); of ln Phi(-eta) is -lambda(eta)
            let d = if r.switched {
                inverse_mills(-eta)
            } else {
                -inverse_mills(eta)
            };
            let w = inverse_mills(eta) * inverse_mills(-eta);
            g[0] += d;
            g[1] += d * u;
            info[0][0] += w;
            info[0][1] += w * u;
            info[1][1] += w * u * u;
        }
        info[1][0] = info[0][1];
        (g, info)
    }
}

fn invert_2x2(m: [[f64; 2]; 2]) -> Option<[[f64; 2]; 2]> {
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    if !(det.is_finite() && det.abs() > 1e-300) {
        return None;
    }
    Some([
        [m[1][1] / det, -m[0][1] / det],
        [-m[1][0] / det, m[0][0] / det],
    ])
}

/// Maximum-likelihood fit of the switching curve.
pub fn fit_switching_curve(records: &[SwitchingRecord]) -> Result<SwitchingFit> {
    if records.len() < MIN_SWITCHING_RECORDS {
        return Err(Error::DegenerateData("need at least 10 switching records"));
    }
    if records.iter().any(|r| !r.v_pulse.is_finite()) {
        return Err(Error::DegenerateData("non-finite pulse amplitude"));
    }
    let n_on = records.iter().filter(|r| r.switched).count();
    if n_on == 0 || n_on == records.len() {
        return Err(Error::DegenerateData("all outcomes identical"));
    }
    let amps: Vec<f64> = records.iter().map(|r| r.v_pulse).collect();
    if amps.iter().all(|&v| v == amps[0]) {
        return Err(Error::DegenerateData("pulse amplitudes are constant"));
    }
    let (centre, scale) = math::mean_sd(&amps).expect("non-empty");
    if !(scale > 0.0) {
        return Err(Error::DegenerateData("pulse amplitudes are constant"));
    }

    let model = Probit {
        records,
        centre,
        scale,
    };
    let (mut a, mut b) = (0.0_f64, 1.0_f64);
    let mut ll = model.log_likelihood(a, b);
    let mut converged = false;
    let mut iterations = 0;

    while iterations < SCORING_MAX_ITER {
        iterations += 1;
        let (g, info) = model.score_info(a, b);
        let Some(inv) = invert_2x2(info) else { break };
        let mut da = inv[0][0] * g[0] + inv[0][1] * g[1];
        let mut db = inv[1][0] * g[0] + inv[1][1] * g[1];
        let mut accepted = false;
        for _ in 0..60 {
            let (na, nb) = (a + da, b + db);
            if nb > 0.0 {
                let nll = model.log_likelihood(na, nb);
                if nll.is_finite() && nll >= ll - 1e-12 * ll.abs() {
                    a = na;
                    b = nb;
                    ll = nll;
                    accepted = true;
                    break;
                }
            }
            da *= 0.5;
            db *= 0.5;
        }
        if !accepted {
            break;
        }
        if da.abs().max(db.abs()) < SCORING_TOL {
            converged = true;
            break;
        }
    }

    if converged {
        let curve = model.curve(a, b);
        let (se_v_median, se_v_spread) = match invert_2x2(model.score_info(a, b).1) {
            Some(cov) => {
                let ja = [-scale / b, scale * a / (b * b)];
                let jb = [0.0, -scale / (b * b)];
                let quad = |j: [f64; 2]| {
                    j[0] * j[0] * cov[0][0] + 2.0 * j[0] * j[1] * cov[0][1] + j[1] * j[1] * cov[1][1]
                };
                (libm::sqrt(quad(ja)), libm::sqrt(quad(jb)))
            }
            None => (f64::NAN, f64::NAN),
        };
        return Ok(SwitchingFit {
            curve,
            log_likelihood: switching_log_likelihood(records, &curve),
            se_v_median,
            se_v_spread,
            iterations,
            converged: true,
            method: FitMethod::FisherScoring,
            n_records: records.len(),
        });
    }

    let curve = grid_search(records);
    Ok(SwitchingFit {
        curve,
        log_likelihood: switching_log_likelihood(records, &curve),
        se_v_median: f64::NAN,
        se_v_spread: f64::NAN,
        iterations,
        converged: false,
        method: FitMethod::GridSearch,
        n_records: records.len(),
    })
}

/// Bounded grid search: median over the amplitude range, spread
/// log-spaced from 1e-4 to 10 times that range, refined by three zooms.
fn grid_search(records: &[SwitchingRecord]) -> SwitchingCurve {
    let lo = records.iter().map(|r| r.v_pulse).fold(f64::INFINITY, f64::min);
    let hi = records.iter().map(|r| r.v_pulse).fold(f64::NEG_INFINITY, f64::max);
    let range = hi - lo;
    let (mut m_lo, mut m_hi) = (lo, hi);
    let (mut ls_lo, mut ls_hi) = (libm::log(range * 1e-4), libm::log(range * 10.0));
    let steps = 100;
    let mut best = SwitchingCurve {
        v_median: 0.5 * (lo + hi),
        v_spread: range,
    };
    let mut best_ll = f64::NEG_INFINITY;
    for _ in 0..4 {
        for i in 0..=steps {
            let m = m_lo + (m_hi - m_lo) * i as f64 / steps as f64;
            for j in 0..=steps {
                let s = libm::exp(ls_lo + (ls_hi - ls_lo) * j as f64 / steps as f64);
                let c = SwitchingCurve {
                    v_median: m,
                    v_spread: s,
                };
                let ll = switching_log_likelihood(records, &c);
                if ll > best_ll {
                    best_ll = ll;
                    best = c;
                }
            }
        }
        let dm = 2.0 * (m_hi - m_lo) / steps as f64;
        let ds = 2.0 * (ls_hi - ls_lo) / steps as f64;
        m_lo = best.v_median - dm;
        m_hi = best.v_median + dm;
        let ls = libm::log(best.v_spread);
        ls_lo = ls - ds;
        ls_hi = ls + ds;
    }
    best
}

/// Retention distribution at one compliance current.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RetentionEntry {
    pub i_cc_ua: f64,
    pub dist: RetentionDistribution,
}

/// Retention distributions keyed by compliance current, strictly increasing
/// in `i_cc`.
#[derive(Debug, Clone, PartialEq)]
pub struct RetentionTable {
    entries: Vec<RetentionEntry>,
}

/// Non-fatal findings of a calibration run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CalibrationWarning {
    /// Median retention drops from one compliance current to the next.
    NonMonotoneMedian {
        i_cc_lo: f64,
        median_lo: f64,
        i_cc_hi: f64,
        median_hi: f64,
    },
}

impl core::fmt::Display for CalibrationWarning {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            CalibrationWarning::NonMonotoneMedian {
                i_cc_lo,
                median_lo,
                i_cc_hi,
                median_hi,
            } => write!(
                f,
                "median retention decreases from {median_lo} s at {i_cc_lo} uA to {median_hi} s at {i_cc_hi} uA"
            ),
        }
    }
}

impl RetentionTable {
    /// Sorts by `i_cc`. Duplicate or non-positive currents and invalid
    /// distributions are rejected.
    pub fn from_entries(mut entries: Vec<(f64, RetentionDistribution)>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::EmptyTable);
        }
        entries.sort_by(|x, y| x.0.total_cmp(&y.0));
        for (i_cc, d) in &entries {
            if !(i_cc.is_finite() && *i_cc > 0.0) {
                return Err(Error::InvalidParams("table i_cc must be finite and > 0"));
            }
            d.validate()?;
        }
        if entries.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::InvalidParams("duplicate i_cc in retention table"));
        }
        Ok(Self {
            entries: entries
                .into_iter()
                .map(|(i_cc_ua, dist)| RetentionEntry { i_cc_ua, dist })
                .collect(),
        })
    }

    /// Placeholder mapping used when no measured data is supplied:
    /// 10 ms at 10 uA, 100 ms at 100 uA, 1 s at 300 uA, `sigma_log = 0.5`.
    pub fn reference() -> Self {
        let d = |m| RetentionDistribution {
            median_s: m,
            sigma_log: 0.5,
        };
        Self {
            entries: alloc::vec![
                RetentionEntry { i_cc_ua: 10.0, dist: d(0.01) },
                RetentionEntry { i_cc_ua: 100.0, dist: d(0.1) },
                RetentionEntry { i_cc_ua: 300.0, dist: d(1.0) },
            ],
        }
    }

    /// A one-entry table: the same distribution at every compliance current.
    pub fn constant(dist: RetentionDistribution) -> Result<Self> {
        Self::from_entries(alloc::vec![(1.0, dist)])
    }

    pub fn entries(&self) -> &[RetentionEntry] {
        &self.entries
    }

    /// Log-log interpolation of the median and linear interpolation of
    /// `sigma_log`, both against `ln(i_cc)`. Queries outside the table clamp
    /// to the nearest end.
    pub fn interpolate(&self, i_cc_ua: f64) -> Result<RetentionDistribution> {
        interpolate_retention(&self.entries, i_cc_ua)
    }

    pub fn warnings(&self) -> Vec<CalibrationWarning> {
        self.entries
            .windows(2)
            .filter(|w| w[1].dist.median_s < w[0].dist.median_s)
            .map(|w| CalibrationWarning::NonMonotoneMedian {
                i_cc_lo: w[0].i_cc_ua,
                median_lo: w[0].dist.median_s,
                i_cc_hi: w[1].i_cc_ua,
                median_hi: w[1].dist.median_s,
            })
            .collect()
    }
}

/// See [`RetentionTable::interpolate`]. `table` must be sorted by `i_cc`.
pub fn interpolate_retention(
    table: &[RetentionEntry],
    i_cc_ua: f64,
) -> Result<RetentionDistribution> {
    let (first, last) = match (table.first(), table.last()) {
        (Some(f), Some(l)) => (f, l),
        _ => return Err(Error::EmptyTable),
    };
    if !(i_cc_ua.is_finite() && i_cc_ua > 0.0) {
        return Err(Error::InvalidParams("i_cc must be finite and > 0"));
    }
    if i_cc_ua <= first.i_cc_ua {
        return Ok(first.dist);
    }
    if i_cc_ua >= last.i_cc_ua {
        return Ok(last.dist);
    }
    let hi = table.partition_point(|e| e.i_cc_ua < i_cc_ua);
    let upper = &table[hi];
    if upper.i_cc_ua == i_cc_ua {
        return Ok(upper.dist);
    }
    let lower = &table[hi - 1];
    let f = (libm::log(i_cc_ua) - libm::log(lower.i_cc_ua))
        / (libm::log(upper.i_cc_ua) - libm::log(lower.i_cc_ua));
    let ln_m = libm::log(lower.dist.median_s)
        + f * (libm::log(upper.dist.median_s) - libm::log(lower.dist.median_s));
    Ok(RetentionDistribution {
        median_s: libm::exp(ln_m),
        sigma_log: lower.dist.sigma_log + f * (upper.dist.sigma_log - lower.dist.sigma_log),
    })
}

/// Per-group fit result.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RetentionGroup {
    pub i_cc_ua: f64,
    pub n_samples: usize,
    pub dist: RetentionDistribution,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RetentionFit {
    pub table: RetentionTable,
    pub groups: Vec<RetentionGroup>,
    pub warnings: Vec<CalibrationWarning>,
}

/// Group records by exact `i_cc` value and fit a lognormal to each group.
pub fn fit_retention(records: &[RetentionRecord]) -> Result<RetentionFit> {
    if records.is_empty() {
        return Err(Error::EmptyTable);
    }
    for r in records {
        if !(r.retention_s.is_finite() && r.retention_s > 0.0) {
            return Err(Error::DegenerateData("retention samples must be finite and > 0"));
        }
        if !(r.i_cc_ua.is_finite() && r.i_cc_ua > 0.0) {
            return Err(Error::DegenerateData("i_cc must be finite and > 0"));
        }
    }
    let mut sorted: Vec<RetentionRecord> = records.to_vec();
    sorted.sort_by(|x, y| x.i_cc_ua.total_cmp(&y.i_cc_ua));

    let mut groups = Vec::new();
    for chunk in sorted.chunk_by(|x, y| x.i_cc_ua == y.i_cc_ua) {
        let i_cc_ua = chunk[0].i_cc_ua;
        if chunk.len() < MIN_RETENTION_SAMPLES {
            return Err(Error::InsufficientSamples {
                i_cc_ua,
                n: chunk.len(),
                min: MIN_RETENTION_SAMPLES,
            });
        }
        let values: Vec<f64> = chunk.iter().map(|r| r.retention_s).collect();
        let logs: Vec<f64> = values.iter().map(|&v| libm::log(v)).collect();
        let median_s = math::median(&values).expect("non-empty group");
        let (_, sigma_log) = math::mean_sd(&logs).expect("non-empty group");
        groups.push(RetentionGroup {
            i_cc_ua,
            n_samples: chunk.len(),
            dist: RetentionDistribution::new(median_s, sigma_log)?,
        });
    }
    let table = RetentionTable::from_entries(groups.iter().map(|g| (g.i_cc_ua, g.dist)).collect())?;
    let warnings = table.warnings();
    Ok(RetentionFit {
        table,
        groups,
        warnings,
    })
}

/// Fitted parameter set handed from calibration to the simulator.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamDeck {
    pub switching: SwitchingCurve,
    pub retention_table: RetentionTable,
    pub provenance: String,
}
