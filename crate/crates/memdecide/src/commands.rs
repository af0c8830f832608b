//! The four subcommands.
//!
//! Each command resolves and validates its whole configuration first
//! (failures are configuration errors, exit code 2) and only then touches
//! data files and runs the simulation (failures are runtime errors, exit
//! code 1).

use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use memdecide_core::calibration::{FitMethod, SwitchingFit};
use memdecide_core::experiment::pulse_amplitude_for;
use memdecide_core::network::run_trial_with_streams;
use memdecide_core::{
    derive_seed, fit_retention, fit_switching_curve, run_trace_experiment, run_trial, seeded,
    AccuracyPoint, DeviceParams, ParamDeck, PulseStream, RetentionFit, StreamSpec, SweepBase,
    SweepGrid, TwoAfcConfig,
};
use rayon::prelude::*;

use crate::config::{DeviceSetup, LoadedConfig, TraceSection};
use crate::error::{CliError, CliResult};
use crate::io::{self, TraceRow};
use crate::svg::{self, Chart, Series};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Trace,
    Trial,
    Sweep,
    Calibrate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    pub config: PathBuf,
    pub seed: Option<u64>,
    pub out: PathBuf,
    pub svg: bool,
    pub threads: Option<usize>,
    pub overrides: Vec<String>,
}

/// Outcome of a command: files written plus text meant for stdout.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Outcome {
    pub written: Vec<PathBuf>,
    pub stdout: String,
    pub warnings: Vec<String>,
}

pub fn run(cmd: Command, opts: &RunOptions) -> CliResult<Outcome> {
    if opts.threads == Some(0) {
        return Err(CliError::config(anyhow!("--threads must be >= 1")));
    }
    let cfg = LoadedConfig::load(&opts.config, &opts.overrides, opts.seed)?;
    match cmd {
        Command::Trace => trace(&cfg, opts),
        Command::Trial => trial(&cfg, opts),
        Command::Sweep => sweep(&cfg, opts),
        Command::Calibrate => calibrate(&cfg, opts),
    }
}

fn out_path(opts: &RunOptions, name: &str) -> CliResult<PathBuf> {
    std::fs::create_dir_all(&opts.out)
        .with_context(|| format!("cannot create {}", opts.out.display()))
        .map_err(CliError::runtime)?;
    Ok(opts.out.join(name))
}

fn write_svg(opts: &RunOptions, name: &str, chart: &Chart, out: &mut Outcome) -> CliResult<()> {
    let path = out_path(opts, name)?;
    std::fs::write(&path, svg::render(chart))
        .with_context(|| format!("cannot write {}", path.display()))
        .map_err(CliError::runtime)?;
    out.written.push(path);
    Ok(())
}

fn check(cond: bool, msg: &str) -> CliResult<()> {
    if cond {
        Ok(())
    } else {
        Err(CliError::config(anyhow!("{msg}")))
    }
}

fn check_p_on(p: f64, what: &str) -> CliResult<()> {
    check((0.0..=1.0).contains(&p), &format!("{what}: p_on {p} must lie in [0, 1]"))
}

fn percent(p: f64) -> String {
    format!("{}%", (p * 1e6).round() / 1e4)
}

/// One traced series.
#[derive(Debug, Clone, Copy)]
struct TraceSeries {
    p_on: f64,
    i_cc_ua: f64,
    median_override: Option<f64>,
    params: DeviceParams,
}

fn trace_stream(cfg: &LoadedConfig, t: &TraceSection) -> CliResult<PulseStream> {
    let stream = match &t.stream_file {
        Some(p) => {
            let path = cfg.resolve(p);
            let times = io::read_stream_csv(&path).map_err(CliError::runtime)?;
            let window = match t.window_s {
                Some(w) => w,
                None => times.last().map_or(0.0, |&x| x.next_up()),
            };
            PulseStream::from_times(times, window)
                .with_context(|| format!("replay stream {}", path.display()))
                .map_err(CliError::runtime)?
        }
        None => {
            let s = PulseStream::generate_periodic(t.n_pulses, t.rate_hz, t.start_s)
                .context("trace stream")
                .map_err(CliError::config)?;
            match t.window_s {
                Some(w) => s.with_window(w).context("trace.window_s").map_err(CliError::config)?,
                None => s,
            }
        }
    };
    Ok(stream)
}

fn trace(cfg: &LoadedConfig, opts: &RunOptions) -> CliResult<Outcome> {
    let t = cfg.config.trace.clone().unwrap_or_default();
    let dev = cfg.device()?;
    check(t.n_devices >= 1, "trace.n_devices must be >= 1")?;
    check(t.repeats >= 1, "trace.repeats must be >= 1")?;
    check(!t.p_on.is_empty(), "trace.p_on must not be empty")?;
    check(
        t.sample_rate_hz.is_finite() && t.sample_rate_hz > 0.0,
        "trace.sample_rate_hz must be > 0",
    )?;
    for &p in &t.p_on {
        check_p_on(p, "trace")?;
    }
    let series = trace_series(&dev, &t)?;
    let stream = trace_stream(cfg, &t)?;

    let seed = cfg.config.seed;
    let pool = pool(opts.threads)?;
    let traces = pool
        .install(|| {
            series
                .par_iter()
                .map(|s| {
                    let sd = derive_seed(
                        seed,
                        &[
                            s.p_on.to_bits(),
                            s.i_cc_ua.to_bits(),
                            s.median_override.unwrap_or(0.0).to_bits(),
                        ],
                    );
                    run_trace_experiment(
                        t.n_devices,
                        &stream,
                        s.p_on,
                        &s.params,
                        t.sample_rate_hz,
                        t.repeats,
                        sd,
                    )
                })
                .collect::<memdecide_core::Result<Vec<_>>>()
        })
        .map_err(CliError::runtime)?;

    let mut rows = Vec::new();
    for (s, tr) in series.iter().zip(&traces) {
        rows.extend(tr.samples.iter().map(|m| TraceRow {
            t_s: m.t_s,
            count_on: m.count_on,
            current_ua: m.current_ua,
            p_on: s.p_on,
            i_cc_ua: s.i_cc_ua,
            retention_median_s: s.params.retention.median_s,
            repeat_mean: tr.repeats,
        }));
    }
    let mut out = Outcome::default();
    let path = out_path(opts, "trace.csv")?;
    io::write_csv(&path, &cfg.echo(), &io::TRACE_HEADER, rows.iter().map(io::trace_record))
        .map_err(CliError::runtime)?;
    out.written.push(path);

    if opts.svg {
        let chart = Chart {
            title: format!("{}-device synapse, mean of {} repeats", t.n_devices, t.repeats),
            x_label: "time (s)".into(),
            y_label: "devices ON".into(),
            series: series
                .iter()
                .zip(&traces)
                .map(|(s, tr)| Series {
                    label: format!(
                        "P_ON {}, {} uA, {} s",
                        percent(s.p_on),
                        s.i_cc_ua,
                        s.params.retention.median_s
                    ),
                    points: tr.samples.iter().map(|m| (m.t_s, m.count_on)).collect(),
                })
                .collect(),
            y_range: Some((0.0, t.n_devices as f64)),
            log_x: false,
        };
        write_svg(opts, "trace.svg", &chart, &mut out)?;
    }
    Ok(out)
}

fn trace_series(dev: &DeviceSetup, t: &TraceSection) -> CliResult<Vec<TraceSeries>> {
    let currents = t.i_cc_ua.clone().unwrap_or_else(|| vec![dev.i_cc_ua]);
    let medians: Vec<Option<f64>> = match &t.retention_median_s {
        Some(ms) => ms.iter().copied().map(Some).collect(),
        None => vec![None],
    };
    check(!currents.is_empty(), "trace.i_cc_uA must not be empty")?;
    check(!medians.is_empty(), "trace.retention_median_s must not be empty")?;
    let mut out = Vec::new();
    for &i_cc_ua in &currents {
        for &median_override in &medians {
            let params = dev
                .params(i_cc_ua, median_override)
                .context("trace series")
                .map_err(CliError::config)?;
            for &p_on in &t.p_on {
                out.push(TraceSeries {
                    p_on,
                    i_cc_ua,
                    median_override,
                    params,
                });
            }
        }
    }
    Ok(out)
}

fn pool(threads: Option<usize>) -> CliResult<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
        .map_err(CliError::runtime)
}

fn trial(cfg: &LoadedConfig, opts: &RunOptions) -> CliResult<Outcome> {
    let t = cfg.config.trial.clone().unwrap_or_default();
    let dev = cfg.device()?;
    check(t.trials >= 1, "trial.trials must be >= 1")?;
    check_p_on(t.p_on, "trial")?;
    check(
        t.stream_a_file.is_some() == t.stream_b_file.is_some(),
        "trial.stream_a_file and trial.stream_b_file must be given together",
    )?;
    let afc = (|| -> anyhow::Result<TwoAfcConfig> {
        let params = dev.params(dev.i_cc_ua, None)?;
        let c = TwoAfcConfig {
            n_devices: t.n_devices,
            params,
            v_pulse: pulse_amplitude_for(&params.switching, t.p_on)?,
            spec_a: StreamSpec::new(t.n_a, t.duration_s)?,
            spec_b: StreamSpec::new(t.n_b, t.duration_s)?,
        };
        c.validate()?;
        anyhow::ensure!(c.n_devices >= 1, "n_devices must be >= 1");
        Ok(c)
    })()
    .context("trial")
    .map_err(CliError::config)?;

    let replay = match (&t.stream_a_file, &t.stream_b_file) {
        (Some(a), Some(b)) => {
            let load = |p: &Path| -> anyhow::Result<PulseStream> {
                let path = cfg.resolve(p);
                let times = io::read_stream_csv(&path)?;
                PulseStream::from_times(times, t.duration_s)
                    .with_context(|| format!("replay stream {}", path.display()))
            };
            Some((load(a).map_err(CliError::runtime)?, load(b).map_err(CliError::runtime)?))
        }
        _ => None,
    };

    let mut rows = Vec::with_capacity(t.trials);
    for i in 0..t.trials {
        let mut rng = seeded(derive_seed(cfg.config.seed, &[i as u64]));
        let r = match &replay {
            Some((a, b)) => run_trial_with_streams(&afc, a, b, &mut rng),
            None => run_trial(&afc, &mut rng),
        }
        .map_err(CliError::runtime)?;
        rows.push(io::trial_record(i, &r));
    }

    let mut out = Outcome::default();
    let path = out_path(opts, "trial.csv")?;
    io::write_csv(&path, &cfg.echo(), &io::TRIAL_HEADER, rows.iter().cloned())
        .map_err(CliError::runtime)?;
    out.written.push(path);
    out.stdout.push_str(&io::TRIAL_HEADER.join(","));
    out.stdout.push('\n');
    for r in &rows {
        out.stdout.push_str(&r.join(","));
        out.stdout.push('\n');
    }
    Ok(out)
}

/// Build the core sweep inputs from the config.
pub fn sweep_inputs(cfg: &LoadedConfig) -> CliResult<(SweepGrid, SweepBase)> {
    let s = cfg.config.sweep.clone().unwrap_or_default();
    let dev = cfg.device()?;
    let grid = SweepGrid {
        durations_s: s.durations_s,
        ratios: s.ratios.iter().map(|r| (r[0], r[1])).collect(),
        device_counts: s.device_counts,
        i_cc_values_ua: s.i_cc_ua.unwrap_or_else(|| vec![dev.i_cc_ua]),
        p_on_values: s.p_on,
        trials_per_point: s.trials_per_point,
        master_seed: cfg.config.seed,
    };
    let base = SweepBase {
        switching: dev.switching,
        retention_table: dev.table,
        i_on: dev.i_on_ua,
        i_off: dev.i_off_ua,
        refresh: dev.refresh,
    };
    grid.validate().context("sweep").map_err(CliError::config)?;
    check(grid.device_counts.iter().all(|&n| n >= 1), "sweep.device_counts must be >= 1")?;
    for cell in grid.cells() {
        cell.config(&base)
            .and_then(|c| c.validate())
            .with_context(|| format!("sweep cell {}", cell.index))
            .map_err(CliError::config)?;
    }
    Ok((grid, base))
}

fn sweep(cfg: &LoadedConfig, opts: &RunOptions) -> CliResult<Outcome> {
    let (grid, base) = sweep_inputs(cfg)?;
    let points =
        crate::sweep::parallel_sweep(&grid, &base, opts.threads).map_err(CliError::runtime)?;
    let mut out = Outcome::default();
    let path = out_path(opts, "report.csv")?;
    io::write_csv(&path, &cfg.echo(), &io::REPORT_HEADER, points.iter().map(io::report_record))
        .map_err(CliError::runtime)?;
    out.written.push(path);
    if opts.svg {
        write_svg(opts, "report.svg", &accuracy_chart(&grid, &points), &mut out)?;
    }
    Ok(out)
}

#[derive(Clone, Copy, PartialEq)]
enum Axis {
    Duration,
    Ratio,
    Devices,
    Current,
    POn,
}

fn axis_value(a: Axis, p: &AccuracyPoint) -> f64 {
    match a {
        Axis::Duration => p.duration_s,
        Axis::Ratio => (p.n_a + p.n_b) as f64,
        Axis::Devices => p.n_devices as f64,
        Axis::Current => p.i_cc_ua,
        Axis::POn => p.p_on,
    }
}

fn axis_tag(a: Axis, p: &AccuracyPoint) -> String {
    match a {
        Axis::Duration => format!("{} s", p.duration_s),
        Axis::Ratio => format!("{}/{}", p.n_a, p.n_b),
        Axis::Devices => format!("N={}", p.n_devices),
        Axis::Current => format!("{} uA", p.i_cc_ua),
        Axis::POn => format!("P_ON {}", percent(p.p_on)),
    }
}

/// Accuracy against the longest grid axis, one series per combination of
/// the other axes.
fn accuracy_chart(grid: &SweepGrid, points: &[AccuracyPoint]) -> Chart {
    let axes = [
        (Axis::Duration, grid.durations_s.len()),
        (Axis::Ratio, grid.ratios.len()),
        (Axis::Devices, grid.device_counts.len()),
        (Axis::Current, grid.i_cc_values_ua.len()),
        (Axis::POn, grid.p_on_values.len()),
    ];
    let x = axes
        .iter()
        .fold(axes[0], |best, &a| if a.1 > best.1 { a } else { best })
        .0;
    let mut series: Vec<Series> = Vec::new();
    for p in points {
        let label = axes
            .iter()
            .filter(|(a, n)| *a != x && *n > 1)
            .map(|(a, _)| axis_tag(*a, p))
            .collect::<Vec<_>>()
            .join(", ");
        let label = if label.is_empty() { "accuracy".to_string() } else { label };
        let pt = (axis_value(x, p), p.accuracy);
        match series.iter_mut().find(|s| s.label == label) {
            Some(s) => s.points.push(pt),
            None => series.push(Series { label, points: vec![pt] }),
        }
    }
    for s in &mut series {
        s.points.sort_by(|a, b| a.0.total_cmp(&b.0));
    }
    let (x_label, log_x) = match x {
        Axis::Duration => ("duration (s)", true),
        Axis::Ratio => ("total pulses (n_a + n_b)", false),
        Axis::Devices => ("devices per synapse", false),
        Axis::Current => ("compliance current (uA)", true),
        Axis::POn => ("switching probability", true),
    };
    Chart {
        title: format!("2AFC accuracy, {} trials per point", grid.trials_per_point),
        x_label: x_label.into(),
        y_label: "accuracy".into(),
        series,
        y_range: Some((0.4, 1.0)),
        log_x,
    }
}

fn calibrate(cfg: &LoadedConfig, opts: &RunOptions) -> CliResult<Outcome> {
    let c = cfg
        .config
        .calibrate
        .clone()
        .ok_or_else(|| CliError::config(anyhow!("missing [calibrate] section")))?;
    let switching_csv = c
        .switching_csv
        .as_ref()
        .map(|p| cfg.resolve(p))
        .ok_or_else(|| CliError::config(anyhow!("calibrate.switching_csv is required")))?;
    let retention_csv = c.retention_csv.as_ref().map(|p| cfg.resolve(p));
    check(
        !c.deck_name.is_empty() && Path::new(&c.deck_name).file_name().is_some(),
        "calibrate.deck_name must be a file name",
    )?;
    let dev = cfg.device()?;

    let sw_records = io::read_switching_csv(&switching_csv).map_err(CliError::runtime)?;
    let sw = fit_switching_curve(&sw_records)
        .with_context(|| format!("switching fit on {}", switching_csv.display()))
        .map_err(CliError::runtime)?;
    let ret = match &retention_csv {
        Some(p) => {
            let recs = io::read_retention_csv(p).map_err(CliError::runtime)?;
            Some(
                fit_retention(&recs)
                    .with_context(|| format!("retention fit on {}", p.display()))
                    .map_err(CliError::runtime)?,
            )
        }
        None => None,
    };

    let mut out = Outcome::default();
    let provenance = c.provenance.clone().unwrap_or_else(|| {
        let mut s = format!("switching: {}", file_name(&switching_csv));
        match &retention_csv {
            Some(p) => s.push_str(&format!("; retention: {}", file_name(p))),
            None => s.push_str("; retention: device table (no retention data)"),
        }
        s
    });
    let deck = ParamDeck {
        switching: sw.curve,
        retention_table: ret.as_ref().map_or(dev.table.clone(), |r| r.table.clone()),
        provenance,
    };
    if let Some(r) = &ret {
        out.warnings.extend(r.warnings.iter().map(|w| w.to_string()));
    }
    if !sw.converged || sw.method == FitMethod::GridSearch {
        out.warnings.push(format!(
            "switching fit used {} (converged: {})",
            sw.method.as_str(),
            sw.converged
        ));
    }

    let deck_path = out_path(opts, &c.deck_name)?;
    crate::deck::write_deck(&deck_path, &deck).map_err(CliError::runtime)?;
    out.written.push(deck_path);

    let diag_path = out_path(opts, "calibration.csv")?;
    io::write_csv(
        &diag_path,
        &cfg.echo(),
        &io::DIAGNOSTICS_HEADER,
        diagnostics(&sw, ret.as_ref(), &out.warnings),
    )
    .map_err(CliError::runtime)?;
    out.written.push(diag_path);
    Ok(out)
}

fn file_name(p: &Path) -> String {
    p.file_name()
        .map_or_else(|| p.display().to_string(), |n| n.to_string_lossy().into_owned())
}

fn diagnostics(sw: &SwitchingFit, ret: Option<&RetentionFit>, warnings: &[String]) -> Vec<Vec<String>> {
    let row = |section: &str, i_cc: &str, key: &str, value: String| {
        vec![section.to_string(), i_cc.to_string(), key.to_string(), value]
    };
    let f = io::fmt_f64;
    let mut rows = vec![
        row("switching", "", "n_records", sw.n_records.to_string()),
        row("switching", "", "v_median_V", f(sw.curve.v_median)),
        row("switching", "", "v_spread_V", f(sw.curve.v_spread)),
        row("switching", "", "se_v_median_V", f(sw.se_v_median)),
        row("switching", "", "se_v_spread_V", f(sw.se_v_spread)),
        row("switching", "", "log_likelihood", f(sw.log_likelihood)),
        row("switching", "", "iterations", sw.iterations.to_string()),
        row("switching", "", "converged", (sw.converged as u8).to_string()),
        row("switching", "", "method", sw.method.as_str().to_string()),
    ];
    if let Some(r) = ret {
        for g in &r.groups {
            let i = f(g.i_cc_ua);
            rows.push(row("retention", &i, "n_samples", g.n_samples.to_string()));
            rows.push(row("retention", &i, "median_s", f(g.dist.median_s)));
            rows.push(row("retention", &i, "sigma_log", f(g.dist.sigma_log)));
        }
    }
    for w in warnings {
        rows.push(row("warning", "", "message", w.clone()));
    }
    rows
}
