//! Output file formats. Tabular outputs are CSV or JSON row arrays; scalar
//! results are JSON objects. Every non-integer number is written with six
//! fractional digits, so equal inputs give byte-identical files.

use std::io::{Read, Write};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::market_stats::{DayEntry, ReturnPoint};
use crate::tradegraph::TokenWashStats;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TableFormat {
    #[default]
    Csv,
    Json,
}

impl TableFormat {
    pub fn extension(self) -> &'static str {
        match self {
            TableFormat::Csv => "csv",
            TableFormat::Json => "json",
        }
    }
}

impl std::str::FromStr for TableFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(TableFormat::Csv),
            "json" => Ok(TableFormat::Json),
            other => Err(Error::InvalidConfig(format!("unknown format {other:?}"))),
        }
    }
}

pub fn fmt6(x: f64) -> String {
    format!("{x:.6}")
}

fn round6(x: f64) -> f64 {
    let r = (x * 1e6).round() / 1e6;
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

fn round_floats(value: &mut Value) {
    match value {
        Value::Number(n) if n.is_f64() => {
            if let Some(x) = n.as_f64().map(round6) {
                *value = serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number);
            }
        }
        Value::Array(items) => items.iter_mut().for_each(round_floats),
        Value::Object(map) => map.values_mut().for_each(round_floats),
        _ => {}
    }
}

/// Pretty JSON with floats rounded to six fractional digits.
pub fn write_json<T: Serialize, W: Write>(value: &T, mut writer: W) -> Result<()> {
    let mut v = serde_json::to_value(value)?;
    round_floats(&mut v);
    serde_json::to_writer_pretty(&mut writer, &v)?;
    writer.write_all(b"\n")?;
    Ok(())
}

pub fn read_json<T: DeserializeOwned, R: Read>(reader: R) -> Result<T> {
    Ok(serde_json::from_reader(reader)?)
}

/// A row type with a fixed CSV layout.
pub trait Tabular: Serialize + DeserializeOwned {
    const HEADER: &'static [&'static str];
    fn cells(&self) -> Vec<String>;
}

pub fn write_table<T: Tabular, W: Write>(rows: &[T], format: TableFormat, writer: W) -> Result<()> {
    match format {
        TableFormat::Json => write_json(&rows, writer),
        TableFormat::Csv => {
            let mut wtr = csv::Writer::from_writer(writer);
            wtr.write_record(T::HEADER)?;
            for row in rows {
                wtr.write_record(row.cells())?;
            }
            wtr.flush()?;
            Ok(())
        }
    }
}

pub fn read_table<T: Tabular, R: Read>(reader: R, format: TableFormat) -> Result<Vec<T>> {
    match format {
        TableFormat::Json => read_json(reader),
        TableFormat::Csv => {
            let mut rdr = csv::Reader::from_reader(reader);
            let header = rdr.headers()?.clone();
            if header.iter().ne(T::HEADER.iter().copied()) {
                return Err(Error::HeaderMismatch {
                    expected: T::HEADER.join(","),
                    found: header.iter().collect::<Vec<_>>().join(","),
                });
            }
            rdr.deserialize()
                .map(|row| row.map_err(Error::from))
                .collect()
        }
    }
}

impl Tabular for DayEntry {
    const HEADER: &'static [&'static str] = &["date", "tx_count", "floor", "mean", "max", "volume"];

    fn cells(&self) -> Vec<String> {
        vec![
            self.date.to_string(),
            self.tx_count.to_string(),
            fmt6(self.floor),
            fmt6(self.mean),
            fmt6(self.max),
            fmt6(self.volume),
        ]
    }
}

impl Tabular for ReturnPoint {
    const HEADER: &'static [&'static str] = &["date", "log_return", "gap_days"];

    fn cells(&self) -> Vec<String> {
        vec![
            self.date.to_string(),
            fmt6(self.log_return),
            self.gap_days.to_string(),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RarityRow {
    pub token_id: String,
    pub score: f64,
    /// Empty for tokens without sales.
    pub avg_price_usd: Option<f64>,
    pub n_sales: usize,
}

impl Tabular for RarityRow {
    const HEADER: &'static [&'static str] = &["token_id", "score", "avg_price_usd", "n_sales"];

    fn cells(&self) -> Vec<String> {
        vec![
            self.token_id.clone(),
            fmt6(self.score),
            self.avg_price_usd.map(fmt6).unwrap_or_default(),
            self.n_sales.to_string(),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WashRow {
    pub token_id: String,
    pub max_pair_repetition: u32,
    pub unique_wallet_ratio: f64,
    pub circuits_found: usize,
    pub suspect: bool,
}

impl From<&TokenWashStats> for WashRow {
    fn from(t: &TokenWashStats) -> Self {
        Self {
            token_id: t.token_id.clone(),
            max_pair_repetition: t.max_pair_repetition,
            unique_wallet_ratio: t.unique_wallet_ratio,
            circuits_found: t.circuits_found,
            suspect: t.suspect,
        }
    }
}

impl Tabular for WashRow {
    const HEADER: &'static [&'static str] = &[
        "token_id",
        "max_pair_repetition",
        "unique_wallet_ratio",
        "circuits_found",
        "suspect",
    ];

    fn cells(&self) -> Vec<String> {
        vec![
            self.token_id.clone(),
            self.max_pair_repetition.to_string(),
            fmt6(self.unique_wallet_ratio),
            self.circuits_found.to_string(),
            self.suspect.to_string(),
        ]
    }
}
