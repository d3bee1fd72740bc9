//! Wallet-level trade graphs and the wash-trading indicators built on them.

mod benford;
mod circuits;
mod wash;

use std::collections::{BTreeMap, BTreeSet, HashMap};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::model::TransactionRecord;

pub use benford::{
    benford_chi_square, benford_expected, benford_test, first_significant_digit, BenfordResult,
    BENFORD_CRITICAL_95,
};
pub use circuits::{elementary_circuits_indexed, find_elementary_circuits, Circuit};
pub use wash::{
    flag_wash_suspects, unique_wallet_ratio, wallet_pair_repetition, TokenWashStats, WashConfig,
    WashFlagReport,
};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GraphScope {
    #[default]
    PerToken,
    PerCollection,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TradeEdge {
    pub from: usize,
    pub to: usize,
    pub token_id: String,
    pub timestamp: DateTime<Utc>,
    pub price_native: f64,
    pub tx_hash: String,
    /// Position of the contributing record in the slice the graph was
    /// built from.
    pub record_index: usize,
}

/// Directed multigraph over wallets, one edge per transaction. Node ids
/// follow the lexicographic order of wallet addresses.
#[derive(Debug, Clone, Default)]
pub struct TradeGraph {
    nodes: Vec<String>,
    index: HashMap<String, usize>,
    edges: Vec<TradeEdge>,
    outgoing: Vec<Vec<usize>>,
}

impl TradeGraph {
    pub fn from_records<'a, I>(records: I) -> Self
    where
        I: IntoIterator<Item = &'a TransactionRecord>,
    {
        let records: Vec<&TransactionRecord> = records.into_iter().collect();
        let wallets: BTreeSet<&str> = records
            .iter()
            .flat_map(|r| [r.from_wallet.as_str(), r.to_wallet.as_str()])
            .collect();
        let nodes: Vec<String> = wallets.into_iter().map(str::to_string).collect();
        let index: HashMap<String, usize> = nodes
            .iter()
            .enumerate()
            .map(|(i, w)| (w.clone(), i))
            .collect();

        let mut outgoing = vec![Vec::new(); nodes.len()];
        let edges: Vec<TradeEdge> = records
            .iter()
            .enumerate()
            .map(|(i, r)| {
                let from = index[&r.from_wallet];
                outgoing[from].push(i);
                TradeEdge {
                    from,
                    to: index[&r.to_wallet],
                    token_id: r.token_id.clone(),
                    timestamp: r.timestamp,
                    price_native: r.price_native,
                    tx_hash: r.tx_hash.clone(),
                    record_index: i,
                }
            })
            .collect();
        Self {
            nodes,
            index,
            edges,
            outgoing,
        }
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn nodes(&self) -> &[String] {
        &self.nodes
    }

    pub fn node_index(&self, wallet: &str) -> Option<usize> {
        self.index.get(wallet).copied()
    }

    pub fn edges(&self) -> &[TradeEdge] {
        &self.edges
    }

    /// Edge ids leaving `node`.
    pub fn outgoing(&self, node: usize) -> &[usize] {
        &self.outgoing[node]
    }

    /// Adjacency with multi-edges merged and self-loops removed, sorted.
    pub fn simple_adjacency(&self) -> Vec<Vec<usize>> {
        self.outgoing
            .iter()
            .enumerate()
            .map(|(v, out)| {
                let mut succ: Vec<usize> = out
                    .iter()
                    .map(|&e| self.edges[e].to)
                    .filter(|&w| w != v)
                    .collect();
                succ.sort_unstable();
                succ.dedup();
                succ
            })
            .collect()
    }
}

/// A graph together with the token it was restricted to, if any.
#[derive(Debug, Clone)]
pub struct ScopedGraph {
    pub token_id: Option<String>,
    pub graph: TradeGraph,
}

/// One graph per token (in token-id order) or a single collection graph.
pub fn build_graph(records: &[TransactionRecord], scope: GraphScope) -> Vec<ScopedGraph> {
    match scope {
        GraphScope::PerCollection => vec![ScopedGraph {
            token_id: None,
            graph: TradeGraph::from_records(records),
        }],
        GraphScope::PerToken => {
            let mut by_token: BTreeMap<&str, Vec<&TransactionRecord>> = BTreeMap::new();
            for r in records {
                by_token.entry(&r.token_id).or_default().push(r);
            }
            by_token
                .into_iter()
                .map(|(token, recs)| ScopedGraph {
                    token_id: Some(token.to_string()),
                    graph: TradeGraph::from_records(recs),
                })
                .collect()
        }
    }
}
