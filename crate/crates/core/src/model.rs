//! Canonical data model plus ingestion and validation of the three input
//! files: collection manifest (JSON), transactions (CSV) and token traits
//! (long-format CSV).

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use chrono::{DateTime, NaiveDate, NaiveDateTime, NaiveTime, SecondsFormat, Timelike, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const TRANSACTIONS_HEADER: [&str; 10] = [
    "collection",
    "token_id",
    "tx_hash",
    "timestamp",
    "price_native",
    "price_usd",
    "currency",
    "from_wallet",
    "to_wallet",
    "marketplace",
];

pub const TRAITS_HEADER: [&str; 3] = ["token_id", "trait_type", "trait_value"];

/// Value used for a trait type a token does not carry.
pub const ABSENT_TRAIT: &str = "None";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Chain {
    Ethereum,
    Solana,
}

impl Chain {
    pub fn native_currency(self) -> Currency {
        match self {
            Chain::Ethereum => Currency::Eth,
            Chain::Solana => Currency::Sol,
        }
    }
}

impl FromStr for Chain {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ethereum" => Ok(Chain::Ethereum),
            "solana" => Ok(Chain::Solana),
            _ => Err(Error::UnknownChain(s.to_string())),
        }
    }
}

impl fmt::Display for Chain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Chain::Ethereum => "Ethereum",
            Chain::Solana => "Solana",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Currency {
    #[serde(rename = "ETH")]
    Eth,
    #[serde(rename = "SOL")]
    Sol,
}

impl Currency {
    pub fn code(self) -> &'static str {
        match self {
            Currency::Eth => "ETH",
            Currency::Sol => "SOL",
        }
    }
}

impl fmt::Display for Currency {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

/// Which price column an analysis reads.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PriceField {
    Native,
    #[default]
    Usd,
}

impl PriceField {
    pub fn of(self, record: &TransactionRecord) -> f64 {
        match self {
            PriceField::Native => record.price_native,
            PriceField::Usd => record.price_usd,
        }
    }
}

impl FromStr for PriceField {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "native" => Ok(PriceField::Native),
            "usd" => Ok(PriceField::Usd),
            other => Err(Error::InvalidConfig(format!(
                "unknown price field {other:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CollectionManifest {
    pub slug: String,
    pub name: String,
    pub chain: Chain,
    pub native_currency: Currency,
    pub launch_date: NaiveDate,
    pub token_count: u64,
}

impl CollectionManifest {
    /// Start of the launch day, the earliest admissible transaction time.
    pub fn launch_instant(&self) -> DateTime<Utc> {
        self.launch_date.and_time(NaiveTime::MIN).and_utc()
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawManifest {
    slug: String,
    name: String,
    chain: String,
    native_currency: Option<String>,
    launch_date: String,
    token_count: i64,
}

/// Accepts `YYYY-MM-DD`, `YYYY-MM` and `Month YYYY`; month-precision dates
/// resolve to the first of the month.
fn parse_launch_date(s: &str) -> Result<NaiveDate> {
    let s = s.trim();
    if let Ok(d) = NaiveDate::parse_from_str(s, "%Y-%m-%d") {
        return Ok(d);
    }
    if let Ok(d) = NaiveDate::parse_from_str(&format!("{s}-01"), "%Y-%m-%d") {
        return Ok(d);
    }
    if let Ok(d) = NaiveDate::parse_from_str(&format!("1 {s}"), "%d %B %Y") {
        return Ok(d);
    }
    Err(Error::MalformedManifest(format!(
        "unparseable launch_date {s:?}"
    )))
}

pub fn parse_manifest<R: Read>(reader: R) -> Result<CollectionManifest> {
    let raw: RawManifest =
        serde_json::from_reader(reader).map_err(|e| Error::MalformedManifest(e.to_string()))?;
    let chain: Chain = raw.chain.parse()?;
    let native_currency = chain.native_currency();
    if let Some(declared) = &raw.native_currency {
        if !declared.trim().eq_ignore_ascii_case(native_currency.code()) {
            return Err(Error::MalformedManifest(format!(
                "native_currency {declared:?} does not match chain {chain}"
            )));
        }
    }
    if raw.token_count <= 0 {
        return Err(Error::NonPositiveTokenCount(raw.token_count));
    }
    if raw.slug.trim().is_empty() {
        return Err(Error::MalformedManifest("empty slug".into()));
    }
    Ok(CollectionManifest {
        slug: raw.slug.trim().to_string(),
        name: raw.name,
        chain,
        native_currency,
        launch_date: parse_launch_date(&raw.launch_date)?,
        token_count: raw.token_count as u64,
    })
}

pub fn write_manifest<W: Write>(manifest: &CollectionManifest, writer: W) -> Result<()> {
    let doc = serde_json::json!({
        "slug": manifest.slug,
        "name": manifest.name,
        "chain": manifest.chain.to_string(),
        "native_currency": manifest.native_currency.code(),
        "launch_date": manifest.launch_date.format("%Y-%m-%d").to_string(),
        "token_count": manifest.token_count,
    });
    serde_json::to_writer_pretty(writer, &doc)?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransactionRecord {
    pub collection: String,
    pub token_id: String,
    pub tx_hash: String,
    pub timestamp: DateTime<Utc>,
    pub price_native: f64,
    pub price_usd: f64,
    pub from_wallet: String,
    pub to_wallet: String,
    pub marketplace: String,
}

impl TransactionRecord {
    pub fn key(&self) -> (&str, &str) {
        (&self.tx_hash, &self.token_id)
    }

    pub fn is_self_transfer(&self) -> bool {
        self.from_wallet == self.to_wallet
    }
}

/// One rejected or suspicious input line.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Issue {
    pub line: u64,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub input_rows: usize,
    pub record_count: usize,
    pub duplicates_collapsed: usize,
    pub error_entries: Vec<Issue>,
    pub warning_entries: Vec<Issue>,
}

impl ValidationReport {
    pub fn accepted(&self) -> bool {
        self.error_entries.is_empty()
    }
}

fn parse_timestamp(s: &str) -> Option<DateTime<Utc>> {
    let parsed = DateTime::parse_from_rfc3339(s)
        .or_else(|_| DateTime::parse_from_str(s, "%Y-%m-%dT%H:%M:%S%.f%z"))
        .or_else(|_| DateTime::parse_from_str(s, "%Y-%m-%d %H:%M:%S%.f%z"))
        .map(|dt| dt.with_timezone(&Utc))
        .ok()
        .or_else(|| {
            NaiveDateTime::parse_from_str(s, "%Y-%m-%dT%H:%M:%S%.f")
                .or_else(|_| NaiveDateTime::parse_from_str(s, "%Y-%m-%d %H:%M:%S%.f"))
                .ok()
                .map(|n| n.and_utc())
        })?;
    parsed.with_nanosecond(0)
}

fn parse_price(s: &str, column: &str, reasons: &mut Vec<String>) -> f64 {
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() && v >= 0.0 => v,
        Ok(v) if v.is_finite() => {
            reasons.push(format!("negative {column} {v}"));
            f64::NAN
        }
        _ => {
            reasons.push(format!("unparseable {column} {s:?}"));
            f64::NAN
        }
    }
}

fn check_header(found: &csv::StringRecord, expected: &[&str]) -> Result<()> {
    let matches =
        found.len() == expected.len() && found.iter().zip(expected).all(|(f, e)| f.trim() == *e);
    if matches {
        Ok(())
    } else {
        Err(Error::HeaderMismatch {
            expected: expected.join(","),
            found: found.iter().collect::<Vec<_>>().join(","),
        })
    }
}

fn csv_reader<R: Read>(reader: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader)
}

/// Parses the transactions CSV. Bad rows are reported, never fatal; only an
/// unreadable stream or a wrong header aborts.
///
/// Records come back sorted by `(timestamp, tx_hash, token_id)`. Rows that
/// repeat an earlier `(tx_hash, token_id)` key are dropped with a warning.
pub fn parse_transactions<R: Read>(
    reader: R,
    manifest: &CollectionManifest,
) -> Result<(Vec<TransactionRecord>, ValidationReport)> {
    let mut rdr = csv_reader(reader);
    check_header(rdr.headers()?, &TRANSACTIONS_HEADER)?;

    let launch = manifest.launch_instant();
    let mut report = ValidationReport::default();
    let mut seen: HashSet<(String, String)> = HashSet::new();
    let mut records = Vec::new();

    for row in rdr.records() {
        let row = match row {
            Ok(row) => row,
            Err(e) => match e.kind() {
                csv::ErrorKind::Io(_) => return Err(e.into()),
                _ => {
                    report.input_rows += 1;
                    let line = e.position().map(|p| p.line()).unwrap_or(0);
                    report.error_entries.push(Issue {
                        line,
                        reason: e.to_string(),
                    });
                    continue;
                }
            },
        };
        report.input_rows += 1;
        let line = row.position().map(|p| p.line()).unwrap_or(0);

        if row.len() != TRANSACTIONS_HEADER.len() {
            report.error_entries.push(Issue {
                line,
                reason: format!(
                    "expected {} fields, found {}",
                    TRANSACTIONS_HEADER.len(),
                    row.len()
                ),
            });
            continue;
        }

        let mut reasons = Vec::new();
        let field = |i: usize| row.get(i).unwrap_or_default();
        for (i, name) in [
            (0, "collection"),
            (1, "token_id"),
            (2, "tx_hash"),
            (7, "from_wallet"),
            (8, "to_wallet"),
        ] {
            if field(i).is_empty() {
                reasons.push(format!("empty {name}"));
            }
        }
        if !field(0).is_empty() && field(0) != manifest.slug {
            reasons.push(format!(
                "collection {:?} does not match manifest slug {:?}",
                field(0),
                manifest.slug
            ));
        }
        let timestamp = parse_timestamp(field(3));
        match timestamp {
            None => reasons.push(format!("unparseable timestamp {:?}", field(3))),
            Some(ts) if ts < launch => reasons.push(format!(
                "timestamp {} precedes launch date {}",
                ts.to_rfc3339_opts(SecondsFormat::Secs, true),
                manifest.launch_date
            )),
            Some(_) => {}
        }
        let price_native = parse_price(field(4), "price_native", &mut reasons);
        let price_usd = parse_price(field(5), "price_usd", &mut reasons);

        if !reasons.is_empty() {
            report.error_entries.push(Issue {
                line,
                reason: reasons.join("; "),
            });
            continue;
        }

        let currency = field(6);
        if !currency.eq_ignore_ascii_case(manifest.native_currency.code()) {
            report.warning_entries.push(Issue {
                line,
                reason: format!(
                    "currency {currency:?} differs from native currency {}",
                    manifest.native_currency
                ),
            });
        }

        let key = (field(2).to_string(), field(1).to_string());
        if !seen.insert(key) {
            report.duplicates_collapsed += 1;
            report.warning_entries.push(Issue {
                line,
                reason: format!(
                    "duplicate tx_hash {} for token {} collapsed",
                    field(2),
                    field(1)
                ),
            });
            continue;
        }

        records.push(TransactionRecord {
            collection: field(0).to_string(),
            token_id: field(1).to_string(),
            tx_hash: field(2).to_string(),
            timestamp: timestamp.expect("checked above"),
            price_native,
            price_usd,
            from_wallet: field(7).to_string(),
            to_wallet: field(8).to_string(),
            marketplace: field(9).to_string(),
        });
    }

    records.sort_by(|a, b| {
        (a.timestamp, &a.tx_hash, &a.token_id).cmp(&(b.timestamp, &b.tx_hash, &b.token_id))
    });
    report.record_count = records.len();
    Ok((records, report))
}

/// Serializes records in the same format `parse_transactions` reads.
/// Prices use the shortest round-trip representation.
pub fn write_transactions<W: Write>(
    records: &[TransactionRecord],
    manifest: &CollectionManifest,
    writer: W,
) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(TRANSACTIONS_HEADER)?;
    for r in records {
        wtr.write_record([
            r.collection.as_str(),
            &r.token_id,
            &r.tx_hash,
            &r.timestamp.to_rfc3339_opts(SecondsFormat::Secs, true),
            &r.price_native.to_string(),
            &r.price_usd.to_string(),
            manifest.native_currency.code(),
            &r.from_wallet,
            &r.to_wallet,
            &r.marketplace,
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TokenTraitSet {
    pub token_id: String,
    pub traits: BTreeMap<String, String>,
}

/// Parses long-format trait rows and completes every token against the
/// union of trait types seen in the file, filling gaps with `"None"`.
/// Blank values are read as `"None"` too. Repeating an identical row is
/// harmless; giving one `(token_id, trait_type)` two different values is an
/// error.
pub fn parse_traits<R: Read>(reader: R) -> Result<BTreeMap<String, TokenTraitSet>> {
    let mut rdr = csv_reader(reader);
    check_header(rdr.headers()?, &TRAITS_HEADER)?;

    let mut sets: BTreeMap<String, TokenTraitSet> = BTreeMap::new();
    let mut trait_types: BTreeSet<String> = BTreeSet::new();

    for row in rdr.records() {
        let row = row?;
        let line = row.position().map(|p| p.line()).unwrap_or(0);
        if row.len() != TRAITS_HEADER.len() {
            return Err(Error::MalformedRow {
                line,
                reason: format!("expected 3 fields, found {}", row.len()),
            });
        }
        let (token_id, trait_type, value) = (&row[0], &row[1], &row[2]);
        if token_id.is_empty() || trait_type.is_empty() {
            return Err(Error::MalformedRow {
                line,
                reason: "empty token_id or trait_type".into(),
            });
        }
        let value = if value.is_empty() {
            ABSENT_TRAIT
        } else {
            value
        };

        let set = sets
            .entry(token_id.to_string())
            .or_insert_with(|| TokenTraitSet {
                token_id: token_id.to_string(),
                traits: BTreeMap::new(),
            });
        match set.traits.get(trait_type) {
            Some(existing) if existing != value => {
                return Err(Error::ConflictingTrait {
                    line,
                    token_id: token_id.to_string(),
                    trait_type: trait_type.to_string(),
                    first: existing.clone(),
                    second: value.to_string(),
                })
            }
            Some(_) => {}
            None => {
                set.traits.insert(trait_type.to_string(), value.to_string());
            }
        }
        trait_types.insert(trait_type.to_string());
    }

    for set in sets.values_mut() {
        for t in &trait_types {
            set.traits
                .entry(t.clone())
                .or_insert_with(|| ABSENT_TRAIT.to_string());
        }
    }
    Ok(sets)
}

/// Long-format trait rows, one per `(token_id, trait_type)`, in key order.
pub fn write_traits<W: Write>(sets: &BTreeMap<String, TokenTraitSet>, writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(TRAITS_HEADER)?;
    for set in sets.values() {
        for (t, v) in &set.traits {
            wtr.write_record([set.token_id.as_str(), t, v])?;
        }
    }
    wtr.flush()?;
    Ok(())
}
