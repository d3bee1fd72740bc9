//! Independent reference implementations and record builders shared by the
//! integration tests.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use chrono::{Duration, NaiveDate, TimeZone, Utc};
use nftledger::model::{Chain, CollectionManifest, Currency, TokenTraitSet, TransactionRecord};
use proptest::prelude::*;

pub fn manifest(token_count: u64) -> CollectionManifest {
    CollectionManifest {
        slug: "c".into(),
        name: "Test".into(),
        chain: Chain::Ethereum,
        native_currency: Currency::Eth,
        launch_date: NaiveDate::from_ymd_opt(2021, 1, 1).unwrap(),
        token_count,
    }
}

/// Record `i` of a test history; `secs` counts from 2021-01-01T00:00:00Z.
pub fn record(
    i: usize,
    token: &str,
    from: &str,
    to: &str,
    secs: i64,
    price_native: f64,
) -> TransactionRecord {
    TransactionRecord {
        collection: "c".into(),
        token_id: token.into(),
        tx_hash: format!("0x{i:06x}"),
        timestamp: Utc.with_ymd_and_hms(2021, 1, 1, 0, 0, 0).unwrap() + Duration::seconds(secs),
        price_native,
        price_usd: price_native * 1000.0,
        from_wallet: from.into(),
        to_wallet: to.into(),
        marketplace: "opensea".into(),
    }
}

fn next_permutation(v: &mut [usize]) -> bool {
    let Some(i) = (1..v.len()).rev().find(|&i| v[i - 1] < v[i]) else {
        return false;
    };
    let j = (i..v.len()).rev().find(|&j| v[j] > v[i - 1]).unwrap();
    v.swap(i - 1, j);
    v[i..].reverse();
    true
}

/// Every simple cycle of length >= 2, by trying each vertex subset and each
/// ordering of it. Cycles are rotated to start at their smallest vertex.
pub fn brute_force_cycles(
    adjacency: &[Vec<usize>],
    max_len: Option<usize>,
) -> BTreeSet<Vec<usize>> {
    let n = adjacency.len();
    assert!(n <= 12, "brute force is exponential");
    let has_edge = |a: usize, b: usize| adjacency[a].contains(&b);
    let mut out = BTreeSet::new();
    for mask in 1u32..(1 << n) {
        let members: Vec<usize> = (0..n).filter(|&v| mask & (1 << v) != 0).collect();
        let k = members.len();
        if k < 2 || max_len.is_some_and(|m| k > m) {
            continue;
        }
        let first = members[0];
        let mut rest = members[1..].to_vec();
        loop {
            let mut cycle = vec![first];
            cycle.extend_from_slice(&rest);
            if (0..k).all(|i| has_edge(cycle[i], cycle[(i + 1) % k])) {
                out.insert(cycle);
            }
            if !next_permutation(&mut rest) {
                break;
            }
        }
    }
    out
}

/// Rarity by direct counting: for every trait of the token, scan all tokens
/// for the same value.
pub fn brute_force_rarity(
    sets: &BTreeMap<String, TokenTraitSet>,
    token_count: u64,
    token: &str,
) -> f64 {
    let mine = &sets[token].traits;
    let mut sum = 0.0;
    for (t, v) in mine {
        let same = sets.values().filter(|s| s.traits.get(t) == Some(v)).count();
        sum += same as f64 / token_count as f64;
    }
    sum / mine.len() as f64
}

/// Closed-form OLS with means computed first.
pub fn two_pass_ols(points: &[(f64, f64)]) -> (f64, f64, f64) {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = points
        .iter()
        .map(|p| (p.1 - intercept - slope * p.0).powi(2))
        .sum();
    let sst: f64 = points.iter().map(|p| (p.1 - my).powi(2)).sum();
    let r2 = if sst == 0.0 { 0.0 } else { 1.0 - sse / sst };
    (slope, intercept, r2)
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1e-300)
}

pub fn price() -> impl Strategy<Value = f64> {
    prop_oneof![1 => Just(0.005), 4 => 0.001f64..500.0]
}

/// Histories over 6 tokens and 5 wallets spread across 40 days.
pub fn records(max: usize) -> impl Strategy<Value = Vec<TransactionRecord>> {
    prop::collection::vec((0u8..6, 0u8..5, 0u8..5, 0i64..40 * 86_400, price()), 1..max).prop_map(
        |rows| {
            rows.into_iter()
                .enumerate()
                .map(|(i, (tok, f, t, secs, p))| {
                    record(
                        i,
                        &tok.to_string(),
                        &format!("w{f}"),
                        &format!("w{t}"),
                        secs,
                        p,
                    )
                })
                .collect()
        },
    )
}

/// Positive prices on one wallet pair across 60 days.
pub fn positive_records(max: usize) -> impl Strategy<Value = Vec<TransactionRecord>> {
    prop::collection::vec((0i64..60 * 86_400, 0.01f64..1000.0), 2..max).prop_map(|rows| {
        rows.into_iter()
            .enumerate()
            .map(|(i, (secs, p))| record(i, &(i % 7).to_string(), "a", "b", secs, p))
            .collect()
    })
}
