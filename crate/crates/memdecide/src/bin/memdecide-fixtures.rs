//! Writes synthetic `switching.csv` and `retention.csv` drawn from known
//! parameters, for exercising `memdecide calibrate`.

use std::path::PathBuf;

use anyhow::{bail, Context};
use clap::Parser;
use memdecide::fixtures::{synth_retention, synth_switching};
use memdecide::io::{write_retention_csv, write_switching_csv};
use memdecide_core::{seeded, RetentionDistribution, SwitchingCurve};

#[derive(Parser)]
#[command(name = "memdecide-fixtures")]
struct Args {
    #[arg(long, default_value = ".")]
    out: PathBuf,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Number of switching records.
    #[arg(long, default_value_t = 10_000)]
    n_switching: usize,
    #[arg(long, default_value_t = 0.6)]
    v_median: f64,
    #[arg(long, default_value_t = 0.05)]
    v_spread: f64,
    #[arg(long, default_value_t = 0.4)]
    v_lo: f64,
    #[arg(long, default_value_t = 0.8)]
    v_hi: f64,
    /// Retention groups as `i_cc_uA:median_s`, comma separated.
    #[arg(long, default_value = "10:0.01,100:0.1,300:1.0")]
    groups: String,
    #[arg(long, default_value_t = 0.5)]
    sigma_log: f64,
    /// Retention samples per group.
    #[arg(long, default_value_t = 10_000)]
    n_retention: usize,
}

fn parse_groups(spec: &str, sigma: f64) -> anyhow::Result<Vec<(f64, RetentionDistribution)>> {
    let mut out = Vec::new();
    for g in spec.split(',').filter(|g| !g.trim().is_empty()) {
        let Some((i, m)) = g.split_once(':') else {
            bail!("group `{g}` is not i_cc_uA:median_s");
        };
        let i: f64 = i.trim().parse().with_context(|| format!("group `{g}`"))?;
        let m: f64 = m.trim().parse().with_context(|| format!("group `{g}`"))?;
        out.push((i, RetentionDistribution::new(m, sigma)?));
    }
    Ok(out)
}

fn main() -> anyhow::Result<()> {
    let a = Args::parse();
    let curve = SwitchingCurve::new(a.v_median, a.v_spread)?;
    let groups = parse_groups(&a.groups, a.sigma_log)?;
    std::fs::create_dir_all(&a.out)?;
    let mut rng = seeded(a.seed);
    let sw = synth_switching(&curve, a.n_switching, a.v_lo, a.v_hi, &mut rng);
    let ret = synth_retention(&groups, a.n_retention, &mut rng);
    write_switching_csv(&a.out.join("switching.csv"), &sw)?;
    write_retention_csv(&a.out.join("retention.csv"), &ret)?;
    Ok(())
}
