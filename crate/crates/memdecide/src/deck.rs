//! Parameter deck files.
//!
//! A deck is TOML with a fixed key order:
//!
//! ```toml
//! provenance = "..."
//!
//! [switching]
//! v_median_V = 0.6
//! v_spread_V = 0.05
//!
//! [[retention]]
//! i_cc_uA = 10.0
//! median_s = 0.01
//! sigma_log = 0.5
//! ```

use std::path::Path;

use anyhow::Context;
use memdecide_core::{ParamDeck, RetentionDistribution, RetentionTable, SwitchingCurve};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RetentionRow {
    #[serde(rename = "i_cc_uA")]
    pub i_cc_ua: f64,
    pub median_s: f64,
    pub sigma_log: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SwitchingRow {
    #[serde(rename = "v_median_V")]
    v_median_v: f64,
    #[serde(rename = "v_spread_V")]
    v_spread_v: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DeckFile {
    provenance: String,
    switching: SwitchingRow,
    retention: Vec<RetentionRow>,
}

pub fn deck_to_string(deck: &ParamDeck) -> anyhow::Result<String> {
    let file = DeckFile {
        provenance: deck.provenance.clone(),
        switching: SwitchingRow {
            v_median_v: deck.switching.v_median,
            v_spread_v: deck.switching.v_spread,
        },
        retention: deck
            .retention_table
            .entries()
            .iter()
            .map(|e| RetentionRow {
                i_cc_ua: e.i_cc_ua,
                median_s: e.dist.median_s,
                sigma_log: e.dist.sigma_log,
            })
            .collect(),
    };
    Ok(toml::to_string(&file)?)
}

pub fn deck_from_str(text: &str) -> anyhow::Result<ParamDeck> {
    let file: DeckFile = toml::from_str(text)?;
    let switching = SwitchingCurve::new(file.switching.v_median_v, file.switching.v_spread_v)?;
    let entries = file
        .retention
        .iter()
        .map(|r| Ok((r.i_cc_ua, RetentionDistribution::new(r.median_s, r.sigma_log)?)))
        .collect::<memdecide_core::Result<Vec<_>>>()?;
    Ok(ParamDeck {
        switching,
        retention_table: RetentionTable::from_entries(entries)?,
        provenance: file.provenance,
    })
}

pub fn write_deck(path: &Path, deck: &ParamDeck) -> anyhow::Result<()> {
    std::fs::write(path, deck_to_string(deck)?)
        .with_context(|| format!("cannot write deck {}", path.display()))
}

pub fn read_deck(path: &Path) -> anyhow::Result<ParamDeck> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read deck {}", path.display()))?;
    deck_from_str(&text).with_context(|| format!("invalid deck {}", path.display()))
}
