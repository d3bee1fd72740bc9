//! Daily aggregation (floor, mean, max, volume), summary statistics of the
//! daily series, log returns of the daily mean price and annualized
//! realized volatility.

use std::collections::BTreeMap;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{PriceField, TransactionRecord};

/// Annualization factor for daily volatility.
pub const TRADING_DAYS_PER_YEAR: f64 = 252.0;

/// Trailing window standing in for "12 months".
pub const DEFAULT_WINDOW_DAYS: u32 = 365;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DayEntry {
    pub date: NaiveDate,
    pub tx_count: u64,
    pub floor: f64,
    pub mean: f64,
    pub max: f64,
    pub volume: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DailyMarketSeries {
    pub price_field: PriceField,
    /// Trading days only, strictly increasing.
    pub days: Vec<DayEntry>,
}

impl DailyMarketSeries {
    pub fn is_empty(&self) -> bool {
        self.days.is_empty()
    }

    pub fn len(&self) -> usize {
        self.days.len()
    }
}

/// One entry per UTC calendar day with at least one record. Prices within
/// a day are summed in ascending order, so the result does not depend on
/// record order.
pub fn daily_aggregate(records: &[TransactionRecord], field: PriceField) -> DailyMarketSeries {
    let mut by_day: BTreeMap<NaiveDate, Vec<f64>> = BTreeMap::new();
    for r in records {
        by_day
            .entry(r.timestamp.date_naive())
            .or_default()
            .push(field.of(r));
    }
    let days = by_day
        .into_iter()
        .map(|(date, mut prices)| {
            prices.sort_by(f64::total_cmp);
            let floor = prices[0];
            let max = prices[prices.len() - 1];
            let volume: f64 = prices.iter().sum();
            let mean = (volume / prices.len() as f64).clamp(floor, max);
            DayEntry {
                date,
                tx_count: prices.len() as u64,
                floor,
                mean,
                max,
                volume,
            }
        })
        .collect();
    DailyMarketSeries {
        price_field: field,
        days,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Spread {
    pub min: f64,
    pub mean: f64,
    pub max: f64,
}

impl Spread {
    fn of(values: impl Iterator<Item = f64>) -> Self {
        let (mut min, mut max, mut sum, mut n) = (f64::INFINITY, f64::NEG_INFINITY, 0.0, 0usize);
        for v in values {
            min = min.min(v);
            max = max.max(v);
            sum += v;
            n += 1;
        }
        Spread {
            min,
            mean: sum / n as f64,
            max,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarketSummary {
    pub price_field: PriceField,
    pub first_day: NaiveDate,
    pub last_day: NaiveDate,
    pub trading_days: usize,
    /// First to last trading day, inclusive.
    pub calendar_days: i64,
    pub total_tx_count: u64,
    pub median_daily_tx: f64,
    /// Sample standard deviation; `None` with a single trading day.
    pub std_daily_tx: Option<f64>,
    pub mean_daily_tx_trading_days: f64,
    pub mean_daily_tx_calendar_days: f64,
    /// Statistics of the daily floor series.
    pub floor: Spread,
    pub mean_of_daily_mean: f64,
    pub mean_of_daily_max: f64,
    pub total_volume: f64,
    pub mean_daily_volume: f64,
}

pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    Some(if v.len() % 2 == 1 {
        v[mid]
    } else {
        (v[mid - 1] + v[mid]) / 2.0
    })
}

/// Sample (n - 1) standard deviation, two-pass. `None` below two values.
pub fn sample_std(values: &[f64]) -> Option<f64> {
    if values.len() < 2 {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    Some((ss / (n - 1.0)).sqrt())
}

pub fn summarize(series: &DailyMarketSeries) -> Result<MarketSummary> {
    let days = &series.days;
    let (first, last) = match (days.first(), days.last()) {
        (Some(f), Some(l)) => (f, l),
        _ => return Err(Error::InsufficientData("empty daily series".into())),
    };
    let counts: Vec<f64> = days.iter().map(|d| d.tx_count as f64).collect();
    let total_tx_count: u64 = days.iter().map(|d| d.tx_count).sum();
    let total_volume: f64 = days.iter().map(|d| d.volume).sum();
    let calendar_days = (last.date - first.date).num_days() + 1;
    let n = days.len() as f64;
    Ok(MarketSummary {
        price_field: series.price_field,
        first_day: first.date,
        last_day: last.date,
        trading_days: days.len(),
        calendar_days,
        total_tx_count,
        median_daily_tx: median(&counts).expect("non-empty"),
        std_daily_tx: sample_std(&counts),
        mean_daily_tx_trading_days: total_tx_count as f64 / n,
        mean_daily_tx_calendar_days: total_tx_count as f64 / calendar_days as f64,
        floor: Spread::of(days.iter().map(|d| d.floor)),
        mean_of_daily_mean: days.iter().map(|d| d.mean).sum::<f64>() / n,
        mean_of_daily_max: days.iter().map(|d| d.max).sum::<f64>() / n,
        total_volume,
        mean_daily_volume: total_volume / n,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReturnPoint {
    pub date: NaiveDate,
    pub log_return: f64,
    /// Calendar days since the previous trading day.
    pub gap_days: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReturnSeries {
    pub points: Vec<ReturnPoint>,
}

/// `ln(mean_t / mean_{t-1})` between consecutive trading days. Days
/// without trades are skipped, not filled; the gap is kept in `gap_days`.
pub fn daily_log_returns(series: &DailyMarketSeries) -> Result<ReturnSeries> {
    if series.days.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "log returns need at least 2 trading days, got {}",
            series.days.len()
        )));
    }
    if let Some((index, d)) = series
        .days
        .iter()
        .enumerate()
        .find(|(_, d)| !(d.mean > 0.0 && d.mean.is_finite()))
    {
        return Err(Error::NonPositiveValue {
            index,
            value: d.mean,
        });
    }
    let points = series
        .days
        .windows(2)
        .map(|w| ReturnPoint {
            date: w[1].date,
            log_return: (w[1].mean / w[0].mean).ln(),
            gap_days: (w[1].date - w[0].date).num_days(),
        })
        .collect();
    Ok(ReturnSeries { points })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VolatilityResult {
    /// Annualized, as a fraction (1.0 = 100%).
    pub realized_vol: f64,
    pub window_days: u32,
    pub n_returns: usize,
}

impl VolatilityResult {
    pub fn percent(&self) -> f64 {
        self.realized_vol * 100.0
    }
}

/// Sample std of the returns dated within `window_days` calendar days up to
/// and including the last return, times `sqrt(252)`.
pub fn realized_volatility(returns: &ReturnSeries, window_days: u32) -> Result<VolatilityResult> {
    if window_days == 0 {
        return Err(Error::InvalidConfig("window_days must be positive".into()));
    }
    let last = returns
        .points
        .last()
        .ok_or_else(|| Error::InsufficientData("no returns".into()))?
        .date;
    let cutoff = last - chrono::Duration::days(i64::from(window_days));
    let window: Vec<f64> = returns
        .points
        .iter()
        .filter(|p| p.date > cutoff)
        .map(|p| p.log_return)
        .collect();
    let std = sample_std(&window).ok_or_else(|| {
        Error::InsufficientData(format!(
            "realized volatility needs at least 2 returns in the window, got {}",
            window.len()
        ))
    })?;
    Ok(VolatilityResult {
        realized_vol: std * TRADING_DAYS_PER_YEAR.sqrt(),
        window_days,
        n_returns: window.len(),
    })
}
