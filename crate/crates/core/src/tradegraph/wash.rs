//! Wash-trade suspicion rules: repeated trades within one wallet pair,
//! closed trade loops, and self-transfers.

use std::collections::{BTreeMap, HashMap, HashSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::circuits::find_elementary_circuits;
use super::{GraphScope, TradeGraph};
use crate::error::{Error, Result};
use crate::model::TransactionRecord;
use crate::preprocess::{FlagKind, TransactionFlag};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct WashConfig {
    /// Trades within one unordered wallet pair at which a token is flagged.
    pub pair_repetition_threshold: u32,
    pub enable_circuit_rule: bool,
    /// `None` enumerates circuits of any length.
    pub max_circuit_length: Option<usize>,
    pub scope: GraphScope,
    /// Enumeration aborts once more circuits than this are found.
    pub circuit_budget: usize,
}

impl Default for WashConfig {
    fn default() -> Self {
        Self {
            pair_repetition_threshold: 3,
            enable_circuit_rule: true,
            max_circuit_length: Some(8),
            scope: GraphScope::PerToken,
            circuit_budget: 100_000,
        }
    }
}

impl WashConfig {
    pub fn validate(&self) -> Result<()> {
        if self.pair_repetition_threshold < 2 {
            return Err(Error::InvalidConfig(format!(
                "pair_repetition_threshold must be at least 2, got {}",
                self.pair_repetition_threshold
            )));
        }
        if self.max_circuit_length.is_some_and(|m| m < 2) {
            return Err(Error::InvalidConfig(
                "max_circuit_length must be at least 2".into(),
            ));
        }
        if self.circuit_budget == 0 {
            return Err(Error::InvalidConfig(
                "circuit_budget must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenWashStats {
    pub token_id: String,
    pub n_transactions: usize,
    pub max_pair_repetition: u32,
    pub unique_wallet_ratio: f64,
    pub circuits_found: usize,
    pub self_transfers: usize,
    pub suspect: bool,
    pub reasons: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WashFlagReport {
    /// One entry per token, in token-id order.
    pub tokens: Vec<TokenWashStats>,
    /// One flag per input record, in input order.
    pub flags: Vec<TransactionFlag>,
    /// Closed wallet sequences of every circuit found.
    pub circuits: Vec<Vec<String>>,
    /// Distinct wallets over all transactions; `None` for no transactions.
    pub collection_unique_wallet_ratio: Option<f64>,
}

impl WashFlagReport {
    pub fn suspects(&self) -> impl Iterator<Item = &str> {
        self.tokens
            .iter()
            .filter(|t| t.suspect)
            .map(|t| t.token_id.as_str())
    }
}

fn pair_key<'a>(a: &'a str, b: &'a str) -> (&'a str, &'a str) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

fn pair_counts<'a>(
    records: impl IntoIterator<Item = &'a TransactionRecord>,
) -> HashMap<(&'a str, &'a str), u32> {
    let mut counts = HashMap::new();
    for r in records.into_iter().filter(|r| !r.is_self_transfer()) {
        *counts
            .entry(pair_key(&r.from_wallet, &r.to_wallet))
            .or_insert(0) += 1;
    }
    counts
}

fn distinct_wallets<'a>(records: impl IntoIterator<Item = &'a TransactionRecord>) -> usize {
    records
        .into_iter()
        .flat_map(|r| [r.from_wallet.as_str(), r.to_wallet.as_str()])
        .collect::<HashSet<_>>()
        .len()
}

fn token_records<'a>(
    records: &'a [TransactionRecord],
    token_id: &str,
) -> Result<Vec<&'a TransactionRecord>> {
    let mine: Vec<_> = records.iter().filter(|r| r.token_id == token_id).collect();
    if mine.is_empty() {
        return Err(Error::NoSales(token_id.to_string()));
    }
    Ok(mine)
}

/// Largest number of the token's trades between one unordered pair of
/// distinct wallets.
pub fn wallet_pair_repetition(records: &[TransactionRecord], token_id: &str) -> Result<u32> {
    let mine = token_records(records, token_id)?;
    Ok(pair_counts(mine).into_values().max().unwrap_or(0))
}

/// Distinct wallets in the token's history divided by its trade count.
pub fn unique_wallet_ratio(records: &[TransactionRecord], token_id: &str) -> Result<f64> {
    let mine = token_records(records, token_id)?;
    Ok(distinct_wallets(mine.iter().copied()) as f64 / mine.len() as f64)
}

struct CircuitEvidence {
    /// Per record index: how many circuits the record supports.
    hits: Vec<u32>,
    per_token: HashMap<String, usize>,
    sequences: Vec<Vec<String>>,
}

fn collect_circuits(
    records: &[TransactionRecord],
    groups: &[(&str, Vec<usize>)],
    config: &WashConfig,
) -> Result<CircuitEvidence> {
    let mut evidence = CircuitEvidence {
        hits: vec![0; records.len()],
        per_token: HashMap::new(),
        sequences: Vec::new(),
    };
    if !config.enable_circuit_rule {
        return Ok(evidence);
    }

    match config.scope {
        GraphScope::PerToken => {
            let found: Vec<Vec<(Vec<String>, Vec<usize>)>> = groups
                .par_iter()
                .map(|(_, indices)| {
                    let graph = TradeGraph::from_records(indices.iter().map(|&i| &records[i]));
                    let circuits = find_elementary_circuits(
                        &graph,
                        config.max_circuit_length,
                        config.circuit_budget,
                    )?;
                    Ok(circuits
                        .into_iter()
                        .map(|c| {
                            let support = c
                                .edges
                                .iter()
                                .flatten()
                                .map(|&e| indices[graph.edges()[e].record_index])
                                .collect();
                            (c.wallets, support)
                        })
                        .collect())
                })
                .collect::<Result<_>>()?;
            for ((token, _), circuits) in groups.iter().zip(found) {
                evidence.per_token.insert(token.to_string(), circuits.len());
                for (wallets, support) in circuits {
                    for i in support {
                        evidence.hits[i] += 1;
                    }
                    evidence.sequences.push(wallets);
                }
            }
        }
        GraphScope::PerCollection => {
            let graph = TradeGraph::from_records(records);
            let circuits =
                find_elementary_circuits(&graph, config.max_circuit_length, config.circuit_budget)?;
            for c in circuits {
                let mut tokens: Vec<&str> = Vec::new();
                for &e in c.edges.iter().flatten() {
                    let i = graph.edges()[e].record_index;
                    evidence.hits[i] += 1;
                    tokens.push(&records[i].token_id);
                }
                tokens.sort_unstable();
                tokens.dedup();
                for t in tokens {
                    *evidence.per_token.entry(t.to_string()).or_default() += 1;
                }
                evidence.sequences.push(c.wallets);
            }
        }
    }
    Ok(evidence)
}

/// Row index paired with the reasons it was flagged.
type FlagReasons = (usize, Vec<String>);

/// Applies the pair-repetition, circuit and self-transfer rules to every
/// token and flags each transaction that lies on a firing pair, on a
/// circuit, or is a self-transfer.
pub fn flag_wash_suspects(
    records: &[TransactionRecord],
    config: &WashConfig,
) -> Result<WashFlagReport> {
    config.validate()?;

    let mut by_token: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, r) in records.iter().enumerate() {
        by_token.entry(&r.token_id).or_default().push(i);
    }
    let groups: Vec<(&str, Vec<usize>)> = by_token.into_iter().collect();
    let evidence = collect_circuits(records, &groups, config)?;

    let analysed: Vec<(TokenWashStats, Vec<FlagReasons>)> = groups
        .par_iter()
        .map(|(token, indices)| {
            let mine = indices.iter().map(|&i| &records[i]);
            let pairs = pair_counts(mine.clone());
            let max_pair_repetition = pairs.values().copied().max().unwrap_or(0);
            let circuits_found = evidence.per_token.get(*token).copied().unwrap_or(0);

            let mut reasons = Vec::new();
            if max_pair_repetition >= config.pair_repetition_threshold {
                reasons.push(format!(
                    "wallet pair traded {max_pair_repetition} times (threshold {})",
                    config.pair_repetition_threshold
                ));
            }
            if circuits_found > 0 {
                reasons.push(format!("{circuits_found} elementary circuit(s)"));
            }
            let self_transfers = mine.clone().filter(|r| r.is_self_transfer()).count();
            if self_transfers > 0 {
                reasons.push(format!("{self_transfers} self-transfer(s)"));
            }

            let mut tx_reasons = Vec::new();
            for &i in indices {
                let r = &records[i];
                let mut why = Vec::new();
                if r.is_self_transfer() {
                    why.push("self-transfer".to_string());
                }
                if let Some(&n) = pairs.get(&pair_key(&r.from_wallet, &r.to_wallet)) {
                    if n >= config.pair_repetition_threshold {
                        why.push(format!("pair repeated {n} times"));
                    }
                }
                if evidence.hits[i] > 0 {
                    why.push(format!("on {} circuit(s)", evidence.hits[i]));
                }
                if !why.is_empty() {
                    tx_reasons.push((i, why));
                }
            }

            let stats = TokenWashStats {
                token_id: token.to_string(),
                n_transactions: indices.len(),
                max_pair_repetition,
                unique_wallet_ratio: distinct_wallets(mine) as f64 / indices.len() as f64,
                circuits_found,
                self_transfers,
                suspect: !reasons.is_empty(),
                reasons,
            };
            (stats, tx_reasons)
        })
        .collect();

    let mut flags: Vec<TransactionFlag> = records.iter().map(TransactionFlag::clean).collect();
    let mut tokens = Vec::with_capacity(analysed.len());
    for (stats, tx_reasons) in analysed {
        for (i, why) in tx_reasons {
            flags[i].flag = FlagKind::WashSuspect;
            flags[i].reason = why.join("; ");
        }
        tokens.push(stats);
    }

    let collection_unique_wallet_ratio =
        (!records.is_empty()).then(|| distinct_wallets(records) as f64 / records.len() as f64);

    Ok(WashFlagReport {
        tokens,
        flags,
        circuits: evidence.sequences,
        collection_unique_wallet_ratio,
    })
}
