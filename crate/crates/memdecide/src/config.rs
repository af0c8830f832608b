//! Run configuration.
//!
//! Configs are TOML documents (conventionally with a `.cfg` extension).
//! Unknown keys are rejected. Relative paths inside a config resolve against
//! the directory containing it. Any key can be overridden from the command
//! line with `--set section.key=value`, where `value` is parsed as a TOML
//! value and falls back to a bare string.

use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context};
use memdecide_core::{
    DeviceParams, ParamDeck, RefreshPolicy, RetentionDistribution, RetentionTable, SwitchingCurve,
};
use serde::{Deserialize, Serialize};

use crate::deck::{read_deck, RetentionRow};
use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub device: DeviceSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace: Option<TraceSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trial: Option<TrialSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub calibrate: Option<CalibrateSection>,
}

/// Device model shared by every command.
///
/// Switching curve precedence: explicit `v_median_V`/`v_spread_V`, then the
/// deck, then 0.6 V / 0.05 V. Retention precedence: `retention_median_s`
/// (the same distribution at every compliance current), then
/// `retention_table`, then the deck, then the built-in reference table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DeviceSection {
    #[serde(rename = "i_cc_uA")]
    pub i_cc_ua: f64,
    #[serde(rename = "v_median_V", skip_serializing_if = "Option::is_none")]
    pub v_median_v: Option<f64>,
    #[serde(rename = "v_spread_V", skip_serializing_if = "Option::is_none")]
    pub v_spread_v: Option<f64>,
    /// Defaults to the compliance current.
    #[serde(rename = "i_on_uA", skip_serializing_if = "Option::is_none")]
    pub i_on_ua: Option<f64>,
    #[serde(rename = "i_off_uA")]
    pub i_off_ua: f64,
    pub refresh: RefreshPolicy,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub deck: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub retention_median_s: Option<f64>,
    pub retention_sigma_log: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub retention_table: Option<Vec<RetentionRow>>,
}

impl Default for DeviceSection {
    fn default() -> Self {
        Self {
            i_cc_ua: 270.0,
            v_median_v: None,
            v_spread_v: None,
            i_on_ua: None,
            i_off_ua: 0.0,
            refresh: RefreshPolicy::default(),
            deck: None,
            retention_median_s: None,
            retention_sigma_log: 0.5,
            retention_table: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TraceSection {
    pub n_devices: usize,
    /// Periodic stimulus; ignored when `stream_file` is set.
    pub n_pulses: usize,
    pub rate_hz: f64,
    pub start_s: f64,
    /// Sampling window; defaults to the stream duration.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub window_s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stream_file: Option<PathBuf>,
    pub p_on: Vec<f64>,
    /// Compliance currents to trace; defaults to `device.i_cc_uA`.
    #[serde(rename = "i_cc_uA", skip_serializing_if = "Option::is_none")]
    pub i_cc_ua: Option<Vec<f64>>,
    /// Constant retention medians to trace, overriding the device retention.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub retention_median_s: Option<Vec<f64>>,
    pub sample_rate_hz: f64,
    pub repeats: usize,
}

impl Default for TraceSection {
    fn default() -> Self {
        Self {
            n_devices: 50,
            n_pulses: 50,
            rate_hz: 10.0,
            start_s: 0.0,
            window_s: None,
            stream_file: None,
            p_on: vec![0.01],
            i_cc_ua: None,
            retention_median_s: None,
            sample_rate_hz: 10.0,
            repeats: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrialSection {
    pub n_devices: usize,
    pub n_a: usize,
    pub n_b: usize,
    pub duration_s: f64,
    pub p_on: f64,
    /// Number of rows; trial `i` is seeded with `derive_seed(seed, [i])`.
    pub trials: usize,
    /// Replay files replace the random streams (`n_a`/`n_b` are then unused).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stream_a_file: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stream_b_file: Option<PathBuf>,
}

impl Default for TrialSection {
    fn default() -> Self {
        Self {
            n_devices: 20,
            n_a: 40,
            n_b: 20,
            duration_s: 2.0,
            p_on: 0.01,
            trials: 1,
            stream_a_file: None,
            stream_b_file: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    pub durations_s: Vec<f64>,
    pub ratios: Vec<[usize; 2]>,
    pub device_counts: Vec<usize>,
    /// Defaults to `[device.i_cc_uA]`.
    #[serde(rename = "i_cc_uA", skip_serializing_if = "Option::is_none")]
    pub i_cc_ua: Option<Vec<f64>>,
    pub p_on: Vec<f64>,
    pub trials_per_point: usize,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            durations_s: vec![2.0],
            ratios: vec![[40, 20]],
            device_counts: vec![20],
            i_cc_ua: None,
            p_on: vec![0.01],
            trials_per_point: 1000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CalibrateSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub switching_csv: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub retention_csv: Option<PathBuf>,
    /// File name of the deck written into the output directory.
    pub deck_name: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub provenance: Option<String>,
}

impl Default for CalibrateSection {
    fn default() -> Self {
        Self {
            switching_csv: None,
            retention_csv: None,
            deck_name: "deck.toml".into(),
            provenance: None,
        }
    }
}

/// A parsed config plus the directory its relative paths refer to.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedConfig {
    pub config: RunConfig,
    pub base_dir: PathBuf,
}

impl LoadedConfig {
    /// Read `path`, apply `overrides` (`section.key=value`) and an optional
    /// seed override.
    pub fn load(path: &Path, overrides: &[String], seed: Option<u64>) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read {}", path.display()))
            .map_err(CliError::config)?;
        let base_dir = path
            .parent()
            .map(Path::to_path_buf)
            .unwrap_or_default();
        let config = parse_with_overrides(&text, overrides, seed)
            .with_context(|| format!("in {}", path.display()))
            .map_err(CliError::config)?;
        Ok(Self { config, base_dir })
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    /// The effective config as TOML, each line prefixed with `# `.
    pub fn echo(&self) -> String {
        let body = toml::to_string(&self.config).unwrap_or_default();
        let mut out = String::from("# effective configuration\n");
        for line in body.lines() {
            if line.is_empty() {
                out.push_str("#\n");
            } else {
                out.push_str("# ");
                out.push_str(line);
                out.push('\n');
            }
        }
        out
    }

    /// Resolve the device section into concrete model pieces.
    pub fn device(&self) -> CliResult<DeviceSetup> {
        self.device_inner().map_err(CliError::config)
    }

    fn device_inner(&self) -> anyhow::Result<DeviceSetup> {
        let d = &self.config.device;
        let deck: Option<ParamDeck> = match &d.deck {
            Some(p) => Some(read_deck(&self.resolve(p))?),
            None => None,
        };
        let base = deck.as_ref().map(|k| k.switching);
        let v_median = d.v_median_v.or(base.map(|c| c.v_median)).unwrap_or(0.6);
        let v_spread = d.v_spread_v.or(base.map(|c| c.v_spread)).unwrap_or(0.05);
        let switching = SwitchingCurve::new(v_median, v_spread).context("device switching curve")?;

        let table = if let Some(m) = d.retention_median_s {
            RetentionTable::constant(RetentionDistribution::new(m, d.retention_sigma_log)?)?
        } else if let Some(rows) = &d.retention_table {
            let entries = rows
                .iter()
                .map(|r| Ok((r.i_cc_ua, RetentionDistribution::new(r.median_s, r.sigma_log)?)))
                .collect::<memdecide_core::Result<Vec<_>>>()?;
            RetentionTable::from_entries(entries).context("device.retention_table")?
        } else if let Some(k) = deck {
            k.retention_table
        } else {
            RetentionTable::reference()
        };
        let setup = DeviceSetup {
            i_cc_ua: d.i_cc_ua,
            switching,
            table,
            i_on_ua: d.i_on_ua,
            i_off_ua: d.i_off_ua,
            refresh: d.refresh,
            sigma_log: d.retention_sigma_log,
        };
        setup.params(d.i_cc_ua, None).context("device")?;
        Ok(setup)
    }
}

/// Concrete device model after deck and table resolution.
#[derive(Debug, Clone, PartialEq)]
pub struct DeviceSetup {
    pub i_cc_ua: f64,
    pub switching: SwitchingCurve,
    pub table: RetentionTable,
    pub i_on_ua: Option<f64>,
    pub i_off_ua: f64,
    pub refresh: RefreshPolicy,
    pub sigma_log: f64,
}

impl DeviceSetup {
    /// Parameters at compliance current `i_cc_ua`. With `median_s` the
    /// retention is that median with the configured `sigma_log`; otherwise
    /// it comes from the table.
    pub fn params(&self, i_cc_ua: f64, median_s: Option<f64>) -> memdecide_core::Result<DeviceParams> {
        let retention = match median_s {
            Some(m) => RetentionDistribution::new(m, self.sigma_log)?,
            None => self.table.interpolate(i_cc_ua)?,
        };
        let mut p = DeviceParams::with_currents(
            i_cc_ua,
            self.switching,
            retention,
            self.i_on_ua.unwrap_or(i_cc_ua),
            self.i_off_ua,
        )?;
        p.refresh = self.refresh;
        Ok(p)
    }
}

/// Parse `text`, then apply overrides and the seed before type checking, so
/// that overridden values go through the same validation.
pub fn parse_with_overrides(
    text: &str,
    overrides: &[String],
    seed: Option<u64>,
) -> anyhow::Result<RunConfig> {
    let mut doc: toml::Table = toml::from_str(text)?;
    for ov in overrides {
        apply_override(&mut doc, ov)?;
    }
    if let Some(s) = seed {
        let s = i64::try_from(s).map_err(|_| anyhow!("seed {s} exceeds the TOML integer range"))?;
        doc.insert("seed".into(), toml::Value::Integer(s));
    }
    let cfg: RunConfig = doc.try_into()?;
    Ok(cfg)
}

fn apply_override(doc: &mut toml::Table, ov: &str) -> anyhow::Result<()> {
    let (key, raw) = ov
        .split_once('=')
        .ok_or_else(|| anyhow!("override `{ov}` is not of the form key=value"))?;
    let path: Vec<&str> = key.trim().split('.').collect();
    if path.iter().any(|p| p.is_empty()) {
        bail!("override `{ov}` has an empty key segment");
    }
    let value = parse_value(raw.trim());
    let (last, parents) = path.split_last().expect("split yields at least one segment");
    let mut table = doc;
    for seg in parents {
        let entry = table
            .entry(seg.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        table = entry
            .as_table_mut()
            .ok_or_else(|| anyhow!("override `{ov}`: `{seg}` is not a table"))?;
    }
    table.insert(last.to_string(), value);
    Ok(())
}

fn parse_value(raw: &str) -> toml::Value {
    toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}
