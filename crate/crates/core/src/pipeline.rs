//! End-to-end runs over one collection: load, filter, analyse, write files.
//!
//! Each `run_*` function writes into an output directory and returns the
//! paths it produced, in a fixed order.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::market_stats::{
    daily_aggregate, daily_log_returns, realized_volatility, summarize, DailyMarketSeries,
    MarketSummary, ReturnSeries, VolatilityResult, DEFAULT_WINDOW_DAYS,
};
use crate::model::{
    parse_manifest, parse_traits, parse_transactions, CollectionManifest, PriceField,
    TokenTraitSet, TransactionRecord, ValidationReport,
};
use crate::preprocess::{
    apply_filter, flag_lateral_swaps, write_flags_csv, FlagKind, SwapFilterConfig, TransactionFlag,
};
use crate::rarity::{
    price_rarity_regression, rarity_scores, sales_by_token, trait_frequencies, RegressionResult,
};
use crate::report::{write_json, write_table, RarityRow, TableFormat, Tabular, WashRow};
use crate::tradegraph::{
    benford_test, flag_wash_suspects, BenfordResult, WashConfig, WashFlagReport,
};

pub const VALIDATION_REPORT_FILE: &str = "validation_report.json";
pub const SWAP_FLAGS_FILE: &str = "swap_flags.csv";
pub const SERIES_STEM: &str = "daily_series";
pub const SUMMARY_FILE: &str = "summary.json";
pub const RETURNS_STEM: &str = "returns";
pub const VOLATILITY_FILE: &str = "volatility.json";
pub const RARITY_STEM: &str = "rarity";
pub const REGRESSION_FILE: &str = "regression.json";
pub const WASH_STEM: &str = "wash_report";
pub const WASH_FLAGS_FILE: &str = "wash_flags.csv";
pub const CIRCUITS_FILE: &str = "circuits.json";
pub const BENFORD_FILE: &str = "benford.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AnalysisConfig {
    pub price_field: PriceField,
    /// Remove lateral-swap suspects before market statistics, wash screening
    /// and the Benford test. Rarity prices always exclude them.
    pub drop_lateral_swaps: bool,
    pub window_days: u32,
    pub format: TableFormat,
    pub swap: SwapFilterConfig,
    pub wash: WashConfig,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            price_field: PriceField::Usd,
            drop_lateral_swaps: false,
            window_days: DEFAULT_WINDOW_DAYS,
            format: TableFormat::Csv,
            swap: SwapFilterConfig::default(),
            wash: WashConfig::default(),
        }
    }
}

impl AnalysisConfig {
    pub fn validate(&self) -> Result<()> {
        if self.window_days == 0 {
            return Err(Error::InvalidConfig("window_days must be positive".into()));
        }
        self.swap.validate()?;
        self.wash.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InputPaths {
    pub manifest: PathBuf,
    pub transactions: PathBuf,
    pub traits: Option<PathBuf>,
}

/// A loaded collection. `records` holds the accepted rows only.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub manifest: CollectionManifest,
    pub records: Vec<TransactionRecord>,
    pub validation: ValidationReport,
    pub traits: Option<BTreeMap<String, TokenTraitSet>>,
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::Io(io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::Io(io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

pub fn load(paths: &InputPaths) -> Result<Dataset> {
    let manifest = parse_manifest(open(&paths.manifest)?)?;
    let (records, validation) = parse_transactions(open(&paths.transactions)?, &manifest)?;
    let traits = match &paths.traits {
        Some(p) => Some(parse_traits(open(p)?)?),
        None => None,
    };
    Ok(Dataset {
        manifest,
        records,
        validation,
        traits,
    })
}

impl Dataset {
    pub fn swap_flags(&self, config: &SwapFilterConfig) -> Result<Vec<TransactionFlag>> {
        flag_lateral_swaps(&self.records, self.manifest.chain, config)
    }

    /// Records with lateral-swap suspects removed.
    pub fn without_swaps(&self, config: &SwapFilterConfig) -> Result<Vec<TransactionRecord>> {
        let flags = self.swap_flags(config)?;
        apply_filter(
            &self.records,
            &flags,
            &BTreeSet::from([FlagKind::LateralSwapSuspect]),
        )
    }

    /// The records the market, wash and Benford analyses run on.
    pub fn working_set(&self, config: &AnalysisConfig) -> Result<Vec<TransactionRecord>> {
        if config.drop_lateral_swaps {
            self.without_swaps(&config.swap)
        } else {
            Ok(self.records.clone())
        }
    }

    fn require_traits(&self) -> Result<&BTreeMap<String, TokenTraitSet>> {
        self.traits
            .as_ref()
            .ok_or_else(|| Error::InvalidConfig("a traits file is required".into()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MarketAnalysis {
    pub series: DailyMarketSeries,
    pub summary: MarketSummary,
    pub returns: ReturnSeries,
    pub volatility: VolatilityResult,
}

pub fn market_analysis(
    records: &[TransactionRecord],
    config: &AnalysisConfig,
) -> Result<MarketAnalysis> {
    let series = daily_aggregate(records, config.price_field);
    let summary = summarize(&series)?;
    let returns = daily_log_returns(&series)?;
    let volatility = realized_volatility(&returns, config.window_days)?;
    Ok(MarketAnalysis {
        series,
        summary,
        returns,
        volatility,
    })
}

/// Per-token rarity with average USD sale price, and the regression of
/// average price on rarity score over tokens that sold.
pub fn rarity_analysis(
    dataset: &Dataset,
    config: &AnalysisConfig,
) -> Result<(Vec<RarityRow>, RegressionResult)> {
    let traits = dataset.require_traits()?;
    let table = trait_frequencies(traits, &dataset.manifest);
    let scores = rarity_scores(traits, &table)?;
    let sales = sales_by_token(&dataset.without_swaps(&config.swap)?, PriceField::Usd);
    let rows: Vec<RarityRow> = scores
        .into_iter()
        .map(|s| {
            let (sum, n) = sales.get(&s.token_id).copied().unwrap_or((0.0, 0));
            RarityRow {
                avg_price_usd: (n > 0).then(|| sum / n as f64),
                n_sales: n,
                token_id: s.token_id,
                score: s.score,
            }
        })
        .collect();
    let points: Vec<(f64, f64)> = rows
        .iter()
        .filter_map(|r| r.avg_price_usd.map(|p| (r.score, p)))
        .collect();
    let regression = price_rarity_regression(&points)?;
    Ok((rows, regression))
}

/// Benford test over the positive prices of `records`; zero-price
/// transfers carry no leading digit and are left out.
pub fn benford_of(records: &[TransactionRecord], field: PriceField) -> Result<BenfordResult> {
    let prices: Vec<f64> = records
        .iter()
        .map(|r| field.of(r))
        .filter(|&p| p > 0.0)
        .collect();
    benford_test(&prices)
}

struct OutDir<'a> {
    dir: &'a Path,
    format: TableFormat,
    written: Vec<PathBuf>,
}

impl<'a> OutDir<'a> {
    fn new(dir: &'a Path, format: TableFormat) -> Result<Self> {
        std::fs::create_dir_all(dir)
            .map_err(|e| Error::Io(io::Error::new(e.kind(), format!("{}: {e}", dir.display()))))?;
        Ok(Self {
            dir,
            format,
            written: Vec::new(),
        })
    }

    fn file(
        &mut self,
        name: &str,
        body: impl FnOnce(&mut BufWriter<File>) -> Result<()>,
    ) -> Result<()> {
        let path = self.dir.join(name);
        let mut w = create(&path)?;
        body(&mut w)?;
        w.flush()?;
        self.written.push(path);
        Ok(())
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        self.file(name, |w| write_json(value, w))
    }

    fn table<T: Tabular>(&mut self, stem: &str, rows: &[T]) -> Result<()> {
        let format = self.format;
        self.file(&format!("{stem}.{}", format.extension()), |w| {
            write_table(rows, format, w)
        })
    }
}

pub fn run_validate(dataset: &Dataset, out: &Path) -> Result<Vec<PathBuf>> {
    let mut o = OutDir::new(out, TableFormat::Json)?;
    o.json(VALIDATION_REPORT_FILE, &dataset.validation)?;
    Ok(o.written)
}

pub fn run_swaps(dataset: &Dataset, config: &AnalysisConfig, out: &Path) -> Result<Vec<PathBuf>> {
    let flags = dataset.swap_flags(&config.swap)?;
    let mut o = OutDir::new(out, config.format)?;
    o.file(SWAP_FLAGS_FILE, |w| write_flags_csv(&flags, w))?;
    Ok(o.written)
}

pub fn run_summarize(
    dataset: &Dataset,
    config: &AnalysisConfig,
    out: &Path,
) -> Result<Vec<PathBuf>> {
    let records = dataset.working_set(config)?;
    let series = daily_aggregate(&records, config.price_field);
    let summary = summarize(&series)?;
    let mut o = OutDir::new(out, config.format)?;
    o.table(SERIES_STEM, &series.days)?;
    o.json(SUMMARY_FILE, &summary)?;
    Ok(o.written)
}

pub fn run_volatility(
    dataset: &Dataset,
    config: &AnalysisConfig,
    out: &Path,
) -> Result<Vec<PathBuf>> {
    let m = market_analysis(&dataset.working_set(config)?, config)?;
    let mut o = OutDir::new(out, config.format)?;
    o.table(RETURNS_STEM, &m.returns.points)?;
    o.json(VOLATILITY_FILE, &m.volatility)?;
    Ok(o.written)
}

pub fn run_rarity(dataset: &Dataset, config: &AnalysisConfig, out: &Path) -> Result<Vec<PathBuf>> {
    let (rows, regression) = rarity_analysis(dataset, config)?;
    let mut o = OutDir::new(out, config.format)?;
    o.table(RARITY_STEM, &rows)?;
    o.json(REGRESSION_FILE, &regression)?;
    Ok(o.written)
}

pub fn run_wash_scan(
    dataset: &Dataset,
    config: &AnalysisConfig,
    out: &Path,
) -> Result<Vec<PathBuf>> {
    let report = flag_wash_suspects(&dataset.working_set(config)?, &config.wash)?;
    let mut o = OutDir::new(out, config.format)?;
    write_wash(&mut o, &report)?;
    o.file(WASH_FLAGS_FILE, |w| write_flags_csv(&report.flags, w))?;
    o.json(CIRCUITS_FILE, &report.circuits)?;
    Ok(o.written)
}

fn write_wash(o: &mut OutDir<'_>, report: &WashFlagReport) -> Result<()> {
    let rows: Vec<WashRow> = report.tokens.iter().map(WashRow::from).collect();
    o.table(WASH_STEM, &rows)
}

/// Daily series, returns, volatility, rarity table, regression, wash
/// report and Benford result. Every analysis runs before the first file is
/// written, so a failing step leaves no partial bundle behind.
pub fn run_report(dataset: &Dataset, config: &AnalysisConfig, out: &Path) -> Result<Vec<PathBuf>> {
    config.validate()?;
    let records = dataset.working_set(config)?;
    let market = market_analysis(&records, config)?;
    let (rarity_rows, regression) = rarity_analysis(dataset, config)?;
    let wash = flag_wash_suspects(&records, &config.wash)?;
    let benford = benford_of(&records, config.price_field)?;

    let mut o = OutDir::new(out, config.format)?;
    o.table(SERIES_STEM, &market.series.days)?;
    o.table(RETURNS_STEM, &market.returns.points)?;
    o.json(VOLATILITY_FILE, &market.volatility)?;
    o.table(RARITY_STEM, &rarity_rows)?;
    o.json(REGRESSION_FILE, &regression)?;
    write_wash(&mut o, &wash)?;
    o.json(BENFORD_FILE, &benford)?;
    Ok(o.written)
}
