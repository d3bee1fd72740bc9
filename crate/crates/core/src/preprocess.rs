//! Classification and removal of transactions that do not reflect fair
//! value, chiefly lateral swaps booked at the swap contract's fee.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Chain, TransactionRecord};

pub const FLAGS_HEADER: [&str; 4] = ["tx_hash", "token_id", "flag", "reason"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SwapFilterConfig {
    /// Execution fee of the swap contract, in native units.
    pub swap_price_native: f64,
    pub relative_tolerance: f64,
    pub applicable_chains: BTreeSet<Chain>,
}

impl Default for SwapFilterConfig {
    fn default() -> Self {
        Self {
            swap_price_native: 0.005,
            relative_tolerance: 1e-9,
            applicable_chains: BTreeSet::from([Chain::Ethereum]),
        }
    }
}

impl SwapFilterConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.swap_price_native > 0.0 && self.swap_price_native.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "swap_price_native must be positive, got {}",
                self.swap_price_native
            )));
        }
        if !(0.0..=1e-3).contains(&self.relative_tolerance) {
            return Err(Error::InvalidConfig(format!(
                "relative_tolerance must lie in [0, 1e-3], got {}",
                self.relative_tolerance
            )));
        }
        Ok(())
    }

    fn matches(&self, price_native: f64) -> bool {
        (price_native - self.swap_price_native).abs()
            <= self.relative_tolerance * self.swap_price_native
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum FlagKind {
    LateralSwapSuspect,
    WashSuspect,
    Clean,
}

impl fmt::Display for FlagKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FlagKind::LateralSwapSuspect => "LateralSwapSuspect",
            FlagKind::WashSuspect => "WashSuspect",
            FlagKind::Clean => "Clean",
        })
    }
}

impl FromStr for FlagKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "LateralSwapSuspect" => Ok(FlagKind::LateralSwapSuspect),
            "WashSuspect" => Ok(FlagKind::WashSuspect),
            "Clean" => Ok(FlagKind::Clean),
            other => Err(Error::InvalidConfig(format!("unknown flag {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransactionFlag {
    pub tx_hash: String,
    pub token_id: String,
    pub flag: FlagKind,
    pub reason: String,
}

impl TransactionFlag {
    pub fn clean(record: &TransactionRecord) -> Self {
        Self {
            tx_hash: record.tx_hash.clone(),
            token_id: record.token_id.clone(),
            flag: FlagKind::Clean,
            reason: String::new(),
        }
    }
}

/// One flag per record, in record order. `chain` is the collection's chain
/// from its manifest.
pub fn flag_lateral_swaps(
    records: &[TransactionRecord],
    chain: Chain,
    config: &SwapFilterConfig,
) -> Result<Vec<TransactionFlag>> {
    config.validate()?;
    let chain_applies = config.applicable_chains.contains(&chain);
    Ok(records
        .iter()
        .map(|r| {
            if chain_applies && config.matches(r.price_native) {
                TransactionFlag {
                    tx_hash: r.tx_hash.clone(),
                    token_id: r.token_id.clone(),
                    flag: FlagKind::LateralSwapSuspect,
                    reason: format!(
                        "price_native {} at swap execution price {}",
                        r.price_native, config.swap_price_native
                    ),
                }
            } else {
                TransactionFlag::clean(r)
            }
        })
        .collect())
}

/// Keeps the records whose flag is not in `drop`, preserving order. A
/// record carrying several flags is dropped if any of them is in `drop`.
pub fn apply_filter(
    records: &[TransactionRecord],
    flags: &[TransactionFlag],
    drop: &BTreeSet<FlagKind>,
) -> Result<Vec<TransactionRecord>> {
    let mut by_key: HashMap<(&str, &str), Vec<FlagKind>> = HashMap::with_capacity(flags.len());
    for f in flags {
        by_key
            .entry((f.tx_hash.as_str(), f.token_id.as_str()))
            .or_default()
            .push(f.flag);
    }
    let mut kept = Vec::with_capacity(records.len());
    for r in records {
        let kinds = by_key.get(&r.key()).ok_or_else(|| Error::MissingFlag {
            tx_hash: r.tx_hash.clone(),
            token_id: r.token_id.clone(),
        })?;
        if !kinds.iter().any(|k| drop.contains(k)) {
            kept.push(r.clone());
        }
    }
    Ok(kept)
}

pub fn write_flags_csv<W: Write>(flags: &[TransactionFlag], writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(FLAGS_HEADER)?;
    for f in flags {
        wtr.write_record([
            f.tx_hash.as_str(),
            &f.token_id,
            &f.flag.to_string(),
            &f.reason,
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn read_flags_csv<R: Read>(reader: R) -> Result<Vec<TransactionFlag>> {
    let mut rdr = csv::Reader::from_reader(reader);
    let mut out = Vec::new();
    for row in rdr.records() {
        let row = row?;
        out.push(TransactionFlag {
            tx_hash: row[0].to_string(),
            token_id: row[1].to_string(),
            flag: row[2].parse()?,
            reason: row[3].to_string(),
        });
    }
    Ok(out)
}
