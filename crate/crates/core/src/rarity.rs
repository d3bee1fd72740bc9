//! Trait frequencies, average-of-fractions rarity scores, per-token average
//! sale price and the least-squares fit of price on rarity.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{CollectionManifest, PriceField, TokenTraitSet, TransactionRecord};

/// Per `(trait_type, trait_value)` token counts. Fractions are taken over
/// the manifest's token count, so a trait file that covers only part of the
/// collection produces fractions summing to less than one plus a warning.
#[derive(Debug, Clone, PartialEq)]
pub struct TraitFrequencyTable {
    token_count: u64,
    counts: BTreeMap<String, BTreeMap<String, u64>>,
    warnings: Vec<String>,
}

impl TraitFrequencyTable {
    pub fn token_count(&self) -> u64 {
        self.token_count
    }

    pub fn count(&self, trait_type: &str, value: &str) -> Option<u64> {
        self.counts.get(trait_type)?.get(value).copied()
    }

    pub fn fraction(&self, trait_type: &str, value: &str) -> Option<f64> {
        self.count(trait_type, value)
            .map(|c| c as f64 / self.token_count as f64)
    }

    pub fn trait_types(&self) -> impl Iterator<Item = &str> {
        self.counts.keys().map(String::as_str)
    }

    /// `(trait_type, value, count, fraction)` in sorted order.
    pub fn entries(&self) -> impl Iterator<Item = (&str, &str, u64, f64)> {
        let n = self.token_count as f64;
        self.counts.iter().flat_map(move |(t, values)| {
            values
                .iter()
                .map(move |(v, &c)| (t.as_str(), v.as_str(), c, c as f64 / n))
        })
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }
}

pub fn trait_frequencies(
    trait_sets: &BTreeMap<String, TokenTraitSet>,
    manifest: &CollectionManifest,
) -> TraitFrequencyTable {
    let mut counts: BTreeMap<String, BTreeMap<String, u64>> = BTreeMap::new();
    for set in trait_sets.values() {
        for (t, v) in &set.traits {
            *counts
                .entry(t.clone())
                .or_default()
                .entry(v.clone())
                .or_default() += 1;
        }
    }
    let covered = trait_sets.len() as u64;
    let mut warnings = Vec::new();
    if covered > manifest.token_count {
        warnings.push(format!(
            "trait file describes {covered} tokens but the manifest declares {}",
            manifest.token_count
        ));
    } else if covered < manifest.token_count && covered > 0 {
        warnings.push(format!(
            "trait file covers {covered} of {} tokens; fractions sum to less than 1",
            manifest.token_count
        ));
    }
    TraitFrequencyTable {
        token_count: manifest.token_count,
        counts,
        warnings,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RarityScore {
    pub token_id: String,
    /// Mean per-trait fraction; lower is rarer.
    pub score: f64,
}

pub fn rarity_score(
    token_id: &str,
    trait_sets: &BTreeMap<String, TokenTraitSet>,
    table: &TraitFrequencyTable,
) -> Result<RarityScore> {
    let set = trait_sets
        .get(token_id)
        .ok_or_else(|| Error::UnknownToken(token_id.to_string()))?;
    if set.traits.is_empty() {
        return Err(Error::EmptyTraitSet(token_id.to_string()));
    }
    let mut sum = 0.0;
    for (t, v) in &set.traits {
        sum += table.fraction(t, v).ok_or_else(|| {
            Error::InsufficientData(format!("trait {t}={v} is missing from the frequency table"))
        })?;
    }
    Ok(RarityScore {
        token_id: token_id.to_string(),
        score: sum / set.traits.len() as f64,
    })
}

/// Scores for every token that has at least one trait, in token-id order.
pub fn rarity_scores(
    trait_sets: &BTreeMap<String, TokenTraitSet>,
    table: &TraitFrequencyTable,
) -> Result<Vec<RarityScore>> {
    trait_sets
        .keys()
        .filter(|id| !trait_sets[*id].traits.is_empty())
        .map(|id| rarity_score(id, trait_sets, table))
        .collect()
}

pub fn average_token_price(
    records: &[TransactionRecord],
    token_id: &str,
    field: PriceField,
) -> Result<f64> {
    let (sum, n) = records
        .iter()
        .filter(|r| r.token_id == token_id)
        .fold((0.0, 0usize), |(s, n), r| (s + field.of(r), n + 1));
    if n == 0 {
        return Err(Error::NoSales(token_id.to_string()));
    }
    Ok(sum / n as f64)
}

/// `(sum of prices, sale count)` per token, one pass over the records.
pub fn sales_by_token(
    records: &[TransactionRecord],
    field: PriceField,
) -> BTreeMap<String, (f64, usize)> {
    let mut out: BTreeMap<String, (f64, usize)> = BTreeMap::new();
    for r in records {
        let e = out.entry(r.token_id.clone()).or_default();
        e.0 += field.of(r);
        e.1 += 1;
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegressionResult {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub n: usize,
}

/// Ordinary least squares of `y` on `x`.
///
/// Means and co-moments are accumulated in a single streaming pass
/// (Welford's update), residuals in a second. `r_squared` is
/// `1 - SSE/SST`, and 0 when `y` is constant.
pub fn price_rarity_regression(points: &[(f64, f64)]) -> Result<RegressionResult> {
    if points.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "regression needs at least 3 points, got {}",
            points.len()
        )));
    }
    if let Some((i, _)) = points
        .iter()
        .enumerate()
        .find(|(_, (x, y))| !x.is_finite() || !y.is_finite())
    {
        return Err(Error::InsufficientData(format!(
            "non-finite point at index {i}"
        )));
    }

    let (mut n, mut mean_x, mut mean_y, mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
    for &(x, y) in points {
        n += 1.0;
        let dx = x - mean_x;
        let dy = y - mean_y;
        mean_x += dx / n;
        mean_y += dy / n;
        sxx += dx * (x - mean_x);
        sxy += dx * (y - mean_y);
        syy += dy * (y - mean_y);
    }
    if sxx == 0.0 {
        return Err(Error::UndefinedSlope);
    }

    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let sse: f64 = points
        .iter()
        .map(|&(x, y)| {
            let e = y - (intercept + slope * x);
            e * e
        })
        .sum();
    let r_squared = if syy > 0.0 {
        (1.0 - sse / syy).clamp(0.0, 1.0)
    } else {
        0.0
    };
    Ok(RegressionResult {
        slope,
        intercept,
        r_squared,
        n: points.len(),
    })
}
