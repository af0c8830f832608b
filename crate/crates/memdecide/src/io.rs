//! CSV inputs and outputs.
//!
//! Every output starts with the effective configuration as `#` comment
//! lines, followed by a mandatory header row. Floats use Rust's shortest
//! round-trip formatting, lines end in `\n`.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::{bail, Context};
use memdecide_core::{AccuracyPoint, RetentionRecord, SwitchingRecord, TrialResult};

pub const TRACE_HEADER: [&str; 7] = [
    "t_s",
    "count_on",
    "current_uA",
    "p_on",
    "i_cc_uA",
    "retention_median_s",
    "repeat_mean",
];
pub const TRIAL_HEADER: [&str; 8] = [
    "trial", "decision", "correct", "i1_uA", "i2_uA", "count1", "count2", "tie",
];
pub const REPORT_HEADER: [&str; 11] = [
    "duration_s",
    "n_a",
    "n_b",
    "n_devices",
    "i_cc_uA",
    "p_on",
    "accuracy",
    "ci_low",
    "ci_high",
    "n_trials",
    "n_ties",
];
pub const SWITCHING_HEADER: [&str; 2] = ["v_pulse_V", "switched"];
pub const RETENTION_HEADER: [&str; 2] = ["i_cc_uA", "retention_s"];
pub const STREAM_HEADER: [&str; 1] = ["t_s"];
pub const DIAGNOSTICS_HEADER: [&str; 4] = ["section", "i_cc_uA", "key", "value"];

/// One row of an averaged trace, tagged with the series it belongs to.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub t_s: f64,
    pub count_on: f64,
    pub current_ua: f64,
    pub p_on: f64,
    pub i_cc_ua: f64,
    pub retention_median_s: f64,
    /// Number of repeats averaged into this row.
    pub repeat_mean: usize,
}

pub fn fmt_f64(x: f64) -> String {
    format!("{x}")
}

fn fmt_bool(b: bool) -> &'static str {
    if b {
        "1"
    } else {
        "0"
    }
}

/// Write `preamble` verbatim, then `header` and `rows` as CSV.
pub fn write_csv<I>(path: &Path, preamble: &str, header: &[&str], rows: I) -> anyhow::Result<()>
where
    I: IntoIterator<Item = Vec<String>>,
{
    let file = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    let mut out = BufWriter::new(file);
    out.write_all(preamble.as_bytes())?;
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn trace_record(r: &TraceRow) -> Vec<String> {
    vec![
        fmt_f64(r.t_s),
        fmt_f64(r.count_on),
        fmt_f64(r.current_ua),
        fmt_f64(r.p_on),
        fmt_f64(r.i_cc_ua),
        fmt_f64(r.retention_median_s),
        r.repeat_mean.to_string(),
    ]
}

pub fn trial_record(index: usize, r: &TrialResult) -> Vec<String> {
    vec![
        index.to_string(),
        r.decision.as_str().to_string(),
        fmt_bool(r.correct).to_string(),
        fmt_f64(r.i1),
        fmt_f64(r.i2),
        r.count1.to_string(),
        r.count2.to_string(),
        fmt_bool(r.tie).to_string(),
    ]
}

pub fn report_record(p: &AccuracyPoint) -> Vec<String> {
    vec![
        fmt_f64(p.duration_s),
        p.n_a.to_string(),
        p.n_b.to_string(),
        p.n_devices.to_string(),
        fmt_f64(p.i_cc_ua),
        fmt_f64(p.p_on),
        fmt_f64(p.accuracy),
        fmt_f64(p.ci_low),
        fmt_f64(p.ci_high),
        p.n_trials.to_string(),
        p.n_ties.to_string(),
    ]
}

/// Open `path` for reading, skipping `#` comment lines, and require the
/// header to equal `expected` exactly.
fn reader(path: &Path, expected: &[&str]) -> anyhow::Result<csv::Reader<File>> {
    let file = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    let mut r = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(file);
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header != expected {
        bail!(
            "{}: expected header `{}`, found `{}`",
            path.display(),
            expected.join(","),
            header.join(",")
        );
    }
    Ok(r)
}

fn parse_f64(s: &str, what: &str, line: u64) -> anyhow::Result<f64> {
    let x: f64 = s
        .parse()
        .with_context(|| format!("line {line}: bad {what} `{s}`"))?;
    if !x.is_finite() {
        bail!("line {line}: {what} must be finite");
    }
    Ok(x)
}

fn line_of(rec: &csv::StringRecord) -> u64 {
    rec.position().map_or(0, |p| p.line())
}

pub fn read_switching_csv(path: &Path) -> anyhow::Result<Vec<SwitchingRecord>> {
    let mut r = reader(path, &SWITCHING_HEADER)?;
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let line = line_of(&rec);
        let v_pulse = parse_f64(&rec[0], "v_pulse_V", line)?;
        let switched = match &rec[1] {
            "0" => false,
            "1" => true,
            other => bail!("line {line}: switched must be 0 or 1, found `{other}`"),
        };
        out.push(SwitchingRecord { v_pulse, switched });
    }
    Ok(out)
}

pub fn read_retention_csv(path: &Path) -> anyhow::Result<Vec<RetentionRecord>> {
    let mut r = reader(path, &RETENTION_HEADER)?;
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let line = line_of(&rec);
        let i_cc_ua = parse_f64(&rec[0], "i_cc_uA", line)?;
        let retention_s = parse_f64(&rec[1], "retention_s", line)?;
        if retention_s <= 0.0 {
            bail!("line {line}: retention_s must be > 0");
        }
        out.push(RetentionRecord { i_cc_ua, retention_s });
    }
    Ok(out)
}

/// Pulse times of a replay file, in file order.
pub fn read_stream_csv(path: &Path) -> anyhow::Result<Vec<f64>> {
    let mut r = reader(path, &STREAM_HEADER)?;
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        out.push(parse_f64(&rec[0], "t_s", line_of(&rec))?);
    }
    Ok(out)
}

pub fn write_stream_csv(path: &Path, times: &[f64]) -> anyhow::Result<()> {
    write_csv(path, "", &STREAM_HEADER, times.iter().map(|&t| vec![fmt_f64(t)]))
}

pub fn write_switching_csv(path: &Path, records: &[SwitchingRecord]) -> anyhow::Result<()> {
    write_csv(
        path,
        "",
        &SWITCHING_HEADER,
        records
            .iter()
            .map(|r| vec![fmt_f64(r.v_pulse), fmt_bool(r.switched).to_string()]),
    )
}

pub fn write_retention_csv(path: &Path, records: &[RetentionRecord]) -> anyhow::Result<()> {
    write_csv(
        path,
        "",
        &RETENTION_HEADER,
        records
            .iter()
            .map(|r| vec![fmt_f64(r.i_cc_ua), fmt_f64(r.retention_s)]),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn switching_round_trip_and_header_check() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.csv");
        let recs = vec![
            SwitchingRecord { v_pulse: 0.55, switched: false },
            SwitchingRecord { v_pulse: 0.1 + 0.2, switched: true },
        ];
        write_switching_csv(&p, &recs).unwrap();
        assert_eq!(
            std::fs::read_to_string(&p).unwrap(),
            "v_pulse_V,switched\n0.55,0\n0.30000000000000004,1\n"
        );
        assert_eq!(read_switching_csv(&p).unwrap(), recs);

        std::fs::write(&p, "v_pulse,switched\n0.5,1\n").unwrap();
        assert!(read_switching_csv(&p).is_err());
        std::fs::write(&p, "v_pulse_V,switched\n0.5,yes\n").unwrap();
        assert!(read_switching_csv(&p).is_err());
    }

    #[test]
    fn retention_rejects_non_positive() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("r.csv");
        std::fs::write(&p, "# measured\ni_cc_uA,retention_s\n10,0.01\n").unwrap();
        assert_eq!(read_retention_csv(&p).unwrap().len(), 1);
        std::fs::write(&p, "i_cc_uA,retention_s\n10,0\n").unwrap();
        assert!(read_retention_csv(&p).is_err());
    }

    #[test]
    fn preamble_precedes_header() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.csv");
        write_csv(&p, "# a = 1\n", &STREAM_HEADER, [vec!["0.5".to_string()]]).unwrap();
        assert_eq!(std::fs::read_to_string(&p).unwrap(), "# a = 1\nt_s\n0.5\n");
        assert_eq!(read_stream_csv(&p).unwrap(), vec![0.5]);
    }
}
