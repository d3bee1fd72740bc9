//! Randomized invariants across all modules.

mod common;

use std::collections::{BTreeMap, BTreeSet};

use chrono::NaiveDate;
use common::*;
use nftledger::market_stats::{
    daily_aggregate, daily_log_returns, median, realized_volatility, summarize, DailyMarketSeries,
    DayEntry,
};
use nftledger::model::{parse_transactions, write_transactions, PriceField, TransactionRecord};
use nftledger::preprocess::{apply_filter, flag_lateral_swaps, FlagKind, SwapFilterConfig};
use nftledger::rarity::{
    average_token_price, price_rarity_regression, rarity_score, trait_frequencies,
};
use nftledger::synth;
use nftledger::tradegraph::{
    benford_test, elementary_circuits_indexed, find_elementary_circuits, flag_wash_suspects,
    unique_wallet_ratio, wallet_pair_repetition, TradeGraph, WashConfig,
};
use proptest::prelude::*;

fn sorted(mut rs: Vec<TransactionRecord>) -> Vec<TransactionRecord> {
    rs.sort_by(|a, b| {
        (a.timestamp, &a.tx_hash, &a.token_id).cmp(&(b.timestamp, &b.tx_hash, &b.token_id))
    });
    rs
}

fn to_csv(rs: &[TransactionRecord]) -> Vec<u8> {
    let mut buf = Vec::new();
    write_transactions(rs, &manifest(10), &mut buf).unwrap();
    buf
}

#[derive(Debug, Clone)]
enum Row {
    Valid,
    Duplicate,
    NegativePrice,
    BadTimestamp,
    EmptyWallet,
    WrongCollection,
    PreLaunch,
    Truncated,
}

fn row_kind() -> impl Strategy<Value = Row> {
    prop_oneof![
        6 => Just(Row::Valid),
        1 => Just(Row::Duplicate),
        1 => Just(Row::NegativePrice),
        1 => Just(Row::BadTimestamp),
        1 => Just(Row::EmptyWallet),
        1 => Just(Row::WrongCollection),
        1 => Just(Row::PreLaunch),
        1 => Just(Row::Truncated),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn parse_of_own_output_is_identity(rs in records(40)) {
        let rs = sorted(rs);
        let csv = to_csv(&rs);
        let (parsed, report) = parse_transactions(csv.as_slice(), &manifest(10)).unwrap();
        prop_assert_eq!(&parsed, &rs);
        prop_assert!(report.accepted());
        prop_assert_eq!(to_csv(&parsed), csv);
    }

    #[test]
    fn row_accounting_and_record_invariants(kinds in prop::collection::vec(row_kind(), 1..60)) {
        let m = manifest(10);
        let mut text = String::from(
            "collection,token_id,tx_hash,timestamp,price_native,price_usd,currency,from_wallet,to_wallet,marketplace\n",
        );
        let mut valid_rows: Vec<String> = Vec::new();
        for (i, k) in kinds.iter().enumerate() {
            let good = format!("c,{},0x{i:04x},2021-03-{:02}T10:00:00Z,1.5,3000,ETH,wa,wb,opensea", i % 4, 1 + i % 28);
            let row = match k {
                Row::Valid => good.clone(),
                Row::Duplicate => valid_rows.last().cloned().unwrap_or_else(|| good.clone()),
                Row::NegativePrice => good.replace(",1.5,", ",-1.5,"),
                Row::BadTimestamp => good.replace("T10:00:00Z", "T25:00:00Z"),
                Row::EmptyWallet => good.replace(",wa,", ",,"),
                Row::WrongCollection => good.replacen("c,", "other,", 1),
                Row::PreLaunch => good.replace("2021-03-", "2020-03-"),
                Row::Truncated => "c,1,0xdead".to_string(),
            };
            if matches!(k, Row::Valid | Row::Duplicate) {
                valid_rows.push(row.clone());
            }
            text.push_str(&row);
            text.push('\n');
        }
        let (records, report) = parse_transactions(text.as_bytes(), &m).unwrap();
        prop_assert_eq!(report.input_rows, kinds.len());
        prop_assert_eq!(
            records.len() + report.error_entries.len() + report.duplicates_collapsed,
            report.input_rows
        );
        let launch = m.launch_instant();
        for r in &records {
            prop_assert_eq!(&r.collection, "c");
            prop_assert!(!r.token_id.is_empty() && !r.tx_hash.is_empty());
            prop_assert!(!r.from_wallet.is_empty() && !r.to_wallet.is_empty());
            prop_assert!(r.timestamp >= launch);
            prop_assert!(r.price_native >= 0.0 && r.price_usd >= 0.0);
        }
        let keys: BTreeSet<_> = records.iter().map(|r| r.key()).collect();
        prop_assert_eq!(keys.len(), records.len());
        prop_assert_eq!(sorted(records.clone()), records);
    }

    #[test]
    fn filter_keeps_records_outside_the_tolerance_band(rs in records(60)) {
        let cfg = SwapFilterConfig::default();
        let flags = flag_lateral_swaps(&rs, nftledger::Chain::Ethereum, &cfg).unwrap();
        let kept = apply_filter(&rs, &flags, &BTreeSet::from([FlagKind::LateralSwapSuspect])).unwrap();
        let band = cfg.relative_tolerance * cfg.swap_price_native;
        for r in &rs {
            if (r.price_native - cfg.swap_price_native).abs() > band {
                prop_assert!(kept.iter().any(|k| k.key() == r.key()));
            } else {
                prop_assert!(kept.iter().all(|k| k.key() != r.key()));
            }
        }
    }

    #[test]
    fn filter_is_monotone_in_drop(rs in records(60)) {
        let mut flags = flag_lateral_swaps(&rs, nftledger::Chain::Ethereum, &SwapFilterConfig::default()).unwrap();
        flags.extend(flag_wash_suspects(&rs, &WashConfig::default()).unwrap().flags);
        let chain = [
            BTreeSet::new(),
            BTreeSet::from([FlagKind::LateralSwapSuspect]),
            BTreeSet::from([FlagKind::LateralSwapSuspect, FlagKind::WashSuspect]),
            BTreeSet::from([FlagKind::LateralSwapSuspect, FlagKind::WashSuspect, FlagKind::Clean]),
        ];
        let sizes: Vec<usize> = chain.iter().map(|d| apply_filter(&rs, &flags, d).unwrap().len()).collect();
        prop_assert_eq!(sizes[0], rs.len());
        prop_assert!(sizes.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn swap_classification_ignores_record_order(
        (rs, shuffled) in records(40).prop_flat_map(|rs| (Just(rs.clone()), Just(rs).prop_shuffle()))
    ) {
        let cfg = SwapFilterConfig::default();
        let by_key = |rs: &[TransactionRecord]| -> BTreeMap<(String, String), FlagKind> {
            flag_lateral_swaps(rs, nftledger::Chain::Ethereum, &cfg)
                .unwrap()
                .into_iter()
                .map(|f| ((f.tx_hash, f.token_id), f.flag))
                .collect()
        };
        prop_assert_eq!(by_key(&rs), by_key(&shuffled));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn trait_fractions_sum_to_one(seed in any::<u64>(), n in 1usize..300, types in 1usize..6, values in 1usize..11) {
        let sets = synth::random_traits(&mut synth::rng(seed), n, types, values, 0.2);
        let table = trait_frequencies(&sets, &manifest(n as u64));
        for t in table.trait_types() {
            let total: f64 = table.entries().filter(|e| e.0 == t).map(|e| e.3).sum();
            prop_assert!((total - 1.0).abs() <= 1e-12, "type {} sums to {}", t, total);
        }
    }

    #[test]
    fn rarer_value_lowers_score(seed in any::<u64>(), n in 5usize..200, pick in any::<prop::sample::Index>()) {
        let sets = synth::random_traits(&mut synth::rng(seed), n, 3, 6, 0.1);
        let table = trait_frequencies(&sets, &manifest(n as u64));
        let token = pick.get(&sets.keys().collect::<Vec<_>>()).to_string();
        let before = rarity_score(&token, &sets, &table).unwrap().score;
        for (t, v) in sets[&token].traits.clone() {
            let current = table.count(&t, &v).unwrap();
            let rarer = table.entries().find(|e| e.0 == t && e.2 < current).map(|e| e.1.to_string());
            if let Some(rarer) = rarer {
                let mut swapped = sets.clone();
                swapped.get_mut(&token).unwrap().traits.insert(t.clone(), rarer);
                let after = rarity_score(&token, &swapped, &table).unwrap().score;
                prop_assert!(after < before);
            }
        }
    }

    #[test]
    fn regression_r2_is_affine_invariant(
        pts in prop::collection::vec((-100.0f64..100.0, -1e4f64..1e4), 3..40),
        a in 0.01f64..100.0,
        b in -1e3f64..1e3,
        c in 0.01f64..100.0,
    ) {
        let Ok(base) = price_rarity_regression(&pts) else { return Ok(()) };
        prop_assume!(base.slope.abs() > 1e-9);
        let moved: Vec<_> = pts.iter().map(|&(x, y)| (a * x + b, y)).collect();
        let r = price_rarity_regression(&moved).unwrap();
        prop_assert!((r.r_squared - base.r_squared).abs() < 1e-9);
        let scaled: Vec<_> = pts.iter().map(|&(x, y)| (a * x, c * y)).collect();
        let s = price_rarity_regression(&scaled).unwrap();
        prop_assert_eq!(s.slope.signum(), base.slope.signum());
    }

    #[test]
    fn regression_residuals_sum_to_zero(pts in prop::collection::vec((0.0f64..1.0, 0.0f64..1e5), 3..50)) {
        let Ok(r) = price_rarity_regression(&pts) else { return Ok(()) };
        let resid: f64 = pts.iter().map(|&(x, y)| y - r.intercept - r.slope * x).sum();
        let scale: f64 = pts.iter().map(|p| p.1.abs()).sum::<f64>().max(1.0);
        prop_assert!(resid.abs() / scale < 1e-9);
        prop_assert!((0.0..=1.0).contains(&r.r_squared));
    }

    #[test]
    fn duplicated_rows_do_not_move_average_price(rs in records(30)) {
        let rs = sorted(rs);
        let csv = to_csv(&rs);
        let body = csv.splitn(2, |&b| b == b'\n').nth(1).unwrap().to_vec();
        let mut doubled = csv.clone();
        doubled.extend_from_slice(&body);
        let (parsed, report) = parse_transactions(doubled.as_slice(), &manifest(10)).unwrap();
        prop_assert_eq!(report.duplicates_collapsed, rs.len());
        for token in rs.iter().map(|r| r.token_id.clone()).collect::<BTreeSet<_>>() {
            prop_assert_eq!(
                average_token_price(&parsed, &token, PriceField::Usd).unwrap(),
                average_token_price(&rs, &token, PriceField::Usd).unwrap()
            );
        }
    }
}

fn digraph(max_nodes: usize) -> impl Strategy<Value = Vec<Vec<usize>>> {
    (1..=max_nodes).prop_flat_map(|n| {
        prop::collection::vec(prop::bool::weighted(0.3), n * n).prop_map(move |bits| {
            (0..n)
                .map(|v| (0..n).filter(|&w| w != v && bits[v * n + w]).collect())
                .collect()
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn circuits_match_brute_force(g in digraph(7), bound in prop::option::of(2usize..6)) {
        let fast: BTreeSet<Vec<usize>> = elementary_circuits_indexed(&g, bound, 1 << 20).unwrap().into_iter().collect();
        prop_assert_eq!(fast, brute_force_cycles(&g, bound));
    }

    #[test]
    fn circuits_are_closed_walks_without_repeats(rs in records(50)) {
        let g = TradeGraph::from_records(&rs);
        for c in find_elementary_circuits(&g, Some(8), 1 << 20).unwrap() {
            prop_assert_eq!(c.wallets.first(), c.wallets.last());
            let inner: BTreeSet<_> = c.wallets[..c.wallets.len() - 1].iter().collect();
            prop_assert_eq!(inner.len(), c.wallets.len() - 1);
            for (hop, edges) in c.wallets.windows(2).zip(&c.edges) {
                prop_assert!(!edges.is_empty());
                for &e in edges {
                    let e = &g.edges()[e];
                    prop_assert_eq!(&g.nodes()[e.from], &hop[0]);
                    prop_assert_eq!(&g.nodes()[e.to], &hop[1]);
                }
            }
        }
    }

    #[test]
    fn unique_wallet_ratio_is_bounded(rs in records(50)) {
        for token in rs.iter().map(|r| r.token_id.clone()).collect::<BTreeSet<_>>() {
            let ratio = unique_wallet_ratio(&rs, &token).unwrap();
            prop_assert!(ratio > 0.0 && ratio <= 2.0);
        }
    }

    #[test]
    fn chain_and_ping_pong_ratios(n in 1usize..40) {
        let chain: Vec<_> = (0..n).map(|i| record(i, "t", &format!("w{i}"), &format!("w{}", i + 1), i as i64, 1.0)).collect();
        prop_assert_eq!(unique_wallet_ratio(&chain, "t").unwrap(), (n + 1) as f64 / n as f64);
        let m = n + 1;
        let pp: Vec<_> = (0..m).map(|i| {
            let (a, b) = if i % 2 == 0 { ("x", "y") } else { ("y", "x") };
            record(i, "t", a, b, i as i64, 1.0)
        }).collect();
        prop_assert_eq!(unique_wallet_ratio(&pp, "t").unwrap(), 2.0 / m as f64);
    }

    #[test]
    fn pair_repetition_ignores_direction(rs in records(50)) {
        let reversed: Vec<_> = rs.iter().cloned().map(|mut r| {
            std::mem::swap(&mut r.from_wallet, &mut r.to_wallet);
            r
        }).collect();
        for token in rs.iter().map(|r| r.token_id.clone()).collect::<BTreeSet<_>>() {
            prop_assert_eq!(
                wallet_pair_repetition(&rs, &token).unwrap(),
                wallet_pair_repetition(&reversed, &token).unwrap()
            );
        }
    }

    #[test]
    fn raising_threshold_never_adds_suspects(rs in records(60), t in 2u32..6, k in 1u32..4, circuits in any::<bool>()) {
        let cfg = |threshold| WashConfig {
            pair_repetition_threshold: threshold,
            enable_circuit_rule: circuits,
            ..WashConfig::default()
        };
        let low = flag_wash_suspects(&rs, &cfg(t)).unwrap();
        let high = flag_wash_suspects(&rs, &cfg(t + k)).unwrap();
        let low: BTreeSet<_> = low.suspects().map(str::to_string).collect();
        for s in high.suspects() {
            prop_assert!(low.contains(s));
        }
    }

    #[test]
    fn benford_ignores_powers_of_ten(
        mantissas in prop::collection::vec((1u32..100_000, -8i32..8), 1..200),
        shift in -20i32..20,
    ) {
        // built from decimal strings so the scaled value has exactly the same digits
        let parse = |m: u32, e: i32| format!("{m}e{e}").parse::<f64>().unwrap();
        let base: Vec<f64> = mantissas.iter().map(|&(m, e)| parse(m, e)).collect();
        let moved: Vec<f64> = mantissas.iter().map(|&(m, e)| parse(m, e + shift)).collect();
        let a = benford_test(&base).unwrap();
        let b = benford_test(&moved).unwrap();
        prop_assert_eq!(a.observed, b.observed);
        prop_assert_eq!(a.chi_square, b.chi_square);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn price_scale_invariance(rs in positive_records(80), c in 1e-3f64..1e3) {
        let scaled: Vec<_> = rs.iter().cloned().map(|mut r| { r.price_native *= c; r }).collect();
        let a = daily_aggregate(&rs, PriceField::Native);
        let b = daily_aggregate(&scaled, PriceField::Native);
        for (x, y) in a.days.iter().zip(&b.days) {
            prop_assert!(rel_close(y.floor, c * x.floor, 1e-12));
            prop_assert!(rel_close(y.mean, c * x.mean, 1e-12));
            prop_assert!(rel_close(y.max, c * x.max, 1e-12));
            prop_assert!(rel_close(y.volume, c * x.volume, 1e-12));
        }
        prop_assume!(a.days.len() >= 3);
        let (ra, rb) = (daily_log_returns(&a).unwrap(), daily_log_returns(&b).unwrap());
        for (x, y) in ra.points.iter().zip(&rb.points) {
            prop_assert!((x.log_return - y.log_return).abs() < 1e-9);
        }
        let (va, vb) = (realized_volatility(&ra, 365).unwrap(), realized_volatility(&rb, 365).unwrap());
        prop_assert!((va.realized_vol - vb.realized_vol).abs() <= 1e-9 * va.realized_vol.max(1.0));
    }

    #[test]
    fn log_returns_telescope(rs in positive_records(80)) {
        let s = daily_aggregate(&rs, PriceField::Native);
        prop_assume!(s.days.len() >= 2);
        let total: f64 = daily_log_returns(&s).unwrap().points.iter().map(|p| p.log_return).sum();
        let expected = (s.days.last().unwrap().mean / s.days[0].mean).ln();
        prop_assert!((total - expected).abs() < 1e-9);
    }

    #[test]
    fn aggregate_of_disjoint_days_is_the_union(rs in positive_records(80), split in 1u32..59) {
        let cut = NaiveDate::from_ymd_opt(2021, 1, 1).unwrap() + chrono::Duration::days(i64::from(split));
        let (early, late): (Vec<_>, Vec<_>) = rs.iter().cloned().partition(|r| r.timestamp.date_naive() < cut);
        let whole = daily_aggregate(&rs, PriceField::Native);
        let mut parts = daily_aggregate(&late, PriceField::Native).days;
        parts.extend(daily_aggregate(&early, PriceField::Native).days);
        parts.sort_by_key(|d| d.date);
        prop_assert_eq!(whole.days, parts);
    }

    #[test]
    fn summary_matches_direct_computation(counts in prop::collection::vec(1u64..50, 1..60)) {
        let first = NaiveDate::from_ymd_opt(2022, 1, 1).unwrap();
        let days: Vec<DayEntry> = counts.iter().enumerate().map(|(i, &c)| DayEntry {
            date: first + chrono::Duration::days(2 * i as i64),
            tx_count: c,
            floor: 1.0,
            mean: 1.0,
            max: 1.0,
            volume: c as f64,
        }).collect();
        let s = summarize(&DailyMarketSeries { price_field: PriceField::Usd, days }).unwrap();
        let mut v = counts.clone();
        v.sort_unstable();
        let n = v.len();
        let med = if n % 2 == 1 { v[n / 2] as f64 } else { (v[n / 2 - 1] + v[n / 2]) as f64 / 2.0 };
        prop_assert_eq!(s.median_daily_tx, med);
        prop_assert_eq!(median(&counts.iter().map(|&c| c as f64).collect::<Vec<_>>()), Some(med));
        if n >= 2 {
            let mean = counts.iter().sum::<u64>() as f64 / n as f64;
            let var = counts.iter().map(|&c| (c as f64 - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            prop_assert!(rel_close(s.std_daily_tx.unwrap(), var.sqrt(), 1e-12) || var == 0.0);
        } else {
            prop_assert_eq!(s.std_daily_tx, None);
        }
        prop_assert_eq!(s.total_tx_count, counts.iter().sum::<u64>());
        prop_assert_eq!(s.calendar_days, 2 * (n as i64 - 1) + 1);
    }
}
