//! Seeded generators for synthetic collections, trade histories and price
//! series. The same seed always gives the same data.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use chrono::{DateTime, Duration, NaiveDate, TimeZone, Utc};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal, Normal};

use crate::error::Result;
use crate::model::{
    write_manifest, write_traits, write_transactions, Chain, CollectionManifest, TokenTraitSet,
    TransactionRecord, ABSENT_TRAIT,
};
use crate::rarity::{rarity_scores, trait_frequencies};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn manifest(
    slug: &str,
    chain: Chain,
    launch_date: NaiveDate,
    token_count: u64,
) -> CollectionManifest {
    CollectionManifest {
        slug: slug.to_string(),
        name: slug.to_string(),
        chain,
        native_currency: chain.native_currency(),
        launch_date,
        token_count,
    }
}

/// Appends trades for one collection, handing out unique wallets and
/// transaction hashes.
pub struct HistoryBuilder {
    rng: ChaCha8Rng,
    slug: String,
    start: DateTime<Utc>,
    span_days: i64,
    usd_per_native: f64,
    ids: u64,
    records: Vec<TransactionRecord>,
}

impl HistoryBuilder {
    /// Token histories start at a random day in `[start, start + span_days)`.
    pub fn new(slug: &str, start: DateTime<Utc>, span_days: i64, seed: u64) -> Self {
        Self {
            rng: rng(seed),
            slug: slug.to_string(),
            start,
            span_days: span_days.max(1),
            usd_per_native: 3000.0,
            ids: 0,
            records: Vec::new(),
        }
    }

    pub fn wallet(&mut self) -> String {
        self.ids += 1;
        format!("0x{:08x}{:032x}", self.ids, self.rng.random::<u128>())
    }

    fn tx_hash(&mut self) -> String {
        self.ids += 1;
        format!("0x{:032x}{:032x}", self.ids, self.rng.random::<u128>())
    }

    fn random_price(&mut self) -> f64 {
        let d = LogNormal::new(0.0f64, 0.8).expect("valid lognormal");
        (d.sample(&mut self.rng) * 1e4).round() / 1e4 + 0.01
    }

    fn history_start(&mut self) -> DateTime<Utc> {
        self.start
            + Duration::days(self.rng.random_range(0..self.span_days))
            + Duration::seconds(self.rng.random_range(0..86_400))
    }

    pub fn trade(
        &mut self,
        token_id: &str,
        from: &str,
        to: &str,
        timestamp: DateTime<Utc>,
        price_native: f64,
    ) {
        let tx_hash = self.tx_hash();
        self.records.push(TransactionRecord {
            collection: self.slug.clone(),
            token_id: token_id.to_string(),
            tx_hash,
            timestamp,
            price_native,
            price_usd: price_native * self.usd_per_native,
            from_wallet: from.to_string(),
            to_wallet: to.to_string(),
            marketplace: "opensea".to_string(),
        });
    }

    /// One trade per hop along `wallets`, at random prices, 1 to 72 hours
    /// apart.
    pub fn walk(&mut self, token_id: &str, wallets: &[String]) {
        let mut at = self.history_start();
        for hop in wallets.windows(2) {
            let price = self.random_price();
            self.trade(token_id, &hop[0], &hop[1], at, price);
            at += Duration::hours(self.rng.random_range(1..=72));
        }
    }

    /// `hops` trades through distinct fresh wallets.
    pub fn chain(&mut self, token_id: &str, hops: usize) {
        let wallets: Vec<String> = (0..=hops).map(|_| self.wallet()).collect();
        self.walk(token_id, &wallets);
    }

    /// `trades` trades back and forth between two fresh wallets.
    pub fn ping_pong(&mut self, token_id: &str, trades: usize) {
        let (a, b) = (self.wallet(), self.wallet());
        let wallets: Vec<String> = (0..=trades)
            .map(|i| if i % 2 == 0 { a.clone() } else { b.clone() })
            .collect();
        self.walk(token_id, &wallets);
    }

    /// `rounds` passes around a ring of `size` fresh wallets.
    pub fn circular(&mut self, token_id: &str, size: usize, rounds: usize) {
        let ring: Vec<String> = (0..size).map(|_| self.wallet()).collect();
        let wallets: Vec<String> = (0..=size * rounds)
            .map(|i| ring[i % size].clone())
            .collect();
        self.walk(token_id, &wallets);
    }

    /// Records in the order `parse_transactions` produces.
    pub fn finish(mut self) -> Vec<TransactionRecord> {
        self.records.sort_by(|a, b| {
            (a.timestamp, &a.tx_hash, &a.token_id).cmp(&(b.timestamp, &b.tx_hash, &b.token_id))
        });
        self.records
    }
}

/// A collection with known wash-trading labels: `n_chain` tokens sold
/// along chains of distinct wallets, `n_ping_pong` tokens traded 4 to 8
/// times between two wallets and `n_circular` tokens passed around a ring
/// of three wallets once or twice. Labels are `true` for injected tokens.
pub fn wash_injection(
    seed: u64,
    n_chain: usize,
    n_ping_pong: usize,
    n_circular: usize,
) -> (Vec<TransactionRecord>, BTreeMap<String, bool>) {
    let start = Utc.with_ymd_and_hms(2021, 5, 1, 0, 0, 0).unwrap();
    let mut b = HistoryBuilder::new("synthetic-wash", start, 365, seed);
    let mut pick = rng(seed ^ 0x5eed);
    let mut labels = BTreeMap::new();
    for i in 0..n_chain + n_ping_pong + n_circular {
        let token = i.to_string();
        if i < n_chain {
            b.chain(&token, pick.random_range(1..=6));
        } else if i < n_chain + n_ping_pong {
            b.ping_pong(&token, pick.random_range(4..=8));
        } else {
            b.circular(&token, 3, pick.random_range(1..=2));
        }
        labels.insert(token, i >= n_chain);
    }
    (b.finish(), labels)
}

/// Geometric Brownian motion sampled daily: `days` values starting at
/// `start`, log increments drawn from `N(-sigma^2/2, sigma)`.
pub fn gbm_path<R: Rng>(rng: &mut R, days: usize, start: f64, sigma: f64) -> Vec<f64> {
    let step = Normal::new(-sigma * sigma / 2.0, sigma).expect("valid normal");
    let mut level = start;
    (0..days)
        .map(|i| {
            if i > 0 {
                level *= step.sample(rng).exp();
            }
            level
        })
        .collect()
}

/// One trade per day at noon UTC priced at `means[i]` native units, so the
/// daily mean equals the given value.
pub fn records_from_daily_means(
    slug: &str,
    first_day: NaiveDate,
    means: &[f64],
) -> Vec<TransactionRecord> {
    means
        .iter()
        .enumerate()
        .map(|(i, &m)| {
            let date = first_day + Duration::days(i as i64);
            TransactionRecord {
                collection: slug.to_string(),
                token_id: (i % 97).to_string(),
                tx_hash: format!("0x{i:064x}"),
                timestamp: date.and_hms_opt(12, 0, 0).unwrap().and_utc(),
                price_native: m,
                price_usd: m * 2500.0,
                from_wallet: format!("0xa{i:039x}"),
                to_wallet: format!("0xb{i:039x}"),
                marketplace: "opensea".to_string(),
            }
        })
        .collect()
}

/// Values whose leading digits follow Benford's law exactly: `10^u` with
/// `u` uniform over six whole decades.
pub fn benford_values<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    (0..n)
        .map(|_| 10f64.powf(rng.random_range(-2.0..4.0)))
        .collect()
}

/// Trait sets for tokens `"0" .. n_tokens-1`. Type `k` takes values
/// `v0 .. v{m-1}` with `m` drawn from `1..=max_values`; each token lacks a
/// type with probability `absent_prob`.
pub fn random_traits<R: Rng>(
    rng: &mut R,
    n_tokens: usize,
    n_types: usize,
    max_values: usize,
    absent_prob: f64,
) -> BTreeMap<String, TokenTraitSet> {
    let value_counts: Vec<usize> = (0..n_types)
        .map(|_| rng.random_range(1..=max_values))
        .collect();
    (0..n_tokens)
        .map(|t| {
            let traits = value_counts
                .iter()
                .enumerate()
                .map(|(k, &m)| {
                    let value = if rng.random_bool(absent_prob) {
                        ABSENT_TRAIT.to_string()
                    } else {
                        format!("v{}", rng.random_range(0..m))
                    };
                    (format!("type{k}"), value)
                })
                .collect();
            (
                t.to_string(),
                TokenTraitSet {
                    token_id: t.to_string(),
                    traits,
                },
            )
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct SyntheticCollection {
    pub manifest: CollectionManifest,
    pub records: Vec<TransactionRecord>,
    pub traits: BTreeMap<String, TokenTraitSet>,
}

pub const MANIFEST_FILE: &str = "manifest.json";
pub const TRANSACTIONS_FILE: &str = "transactions.csv";
pub const TRAITS_FILE: &str = "traits.csv";

impl SyntheticCollection {
    pub fn write_to(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        write_manifest(
            &self.manifest,
            BufWriter::new(File::create(dir.join(MANIFEST_FILE))?),
        )?;
        write_transactions(
            &self.records,
            &self.manifest,
            BufWriter::new(File::create(dir.join(TRANSACTIONS_FILE))?),
        )?;
        write_traits(
            &self.traits,
            BufWriter::new(File::create(dir.join(TRAITS_FILE))?),
        )
    }
}

/// A small Ethereum collection exercising every analysis: a drifting
/// market level with rarity-dependent premiums, lateral swaps at the swap
/// fee, a few ping-pong and circular tokens, one self-transfer and days
/// without trades.
pub fn demo_collection(seed: u64) -> SyntheticCollection {
    const TOKENS: usize = 200;
    const DAYS: i64 = 420;
    let launch = NaiveDate::from_ymd_opt(2021, 4, 23).unwrap();
    let manifest = manifest("demo-apes", Chain::Ethereum, launch, TOKENS as u64);
    let mut r = rng(seed);

    let traits = random_traits(&mut r, TOKENS, 4, 8, 0.15);
    let table = trait_frequencies(&traits, &manifest);
    let scores: BTreeMap<String, f64> = rarity_scores(&traits, &table)
        .expect("generated traits are consistent")
        .into_iter()
        .map(|s| (s.token_id, s.score))
        .collect();
    let level = gbm_path(&mut r, DAYS as usize, 0.8, 0.06);
    let start = launch.and_hms_opt(0, 0, 0).unwrap().and_utc();

    let mut b = HistoryBuilder::new(&manifest.slug, start, DAYS, seed.wrapping_add(1));
    let mut records = Vec::new();
    let mut hash = 0u64;
    let mut push = |records: &mut Vec<TransactionRecord>,
                    token: &str,
                    from: &str,
                    to: &str,
                    day: i64,
                    secs: i64,
                    native: f64| {
        hash += 1;
        let fx = 2500.0 + 800.0 * (day as f64 / 60.0).sin();
        records.push(TransactionRecord {
            collection: manifest.slug.clone(),
            token_id: token.to_string(),
            tx_hash: format!("0x{hash:016x}{:048x}", seed),
            timestamp: start + Duration::days(day) + Duration::seconds(secs),
            price_native: native,
            price_usd: (native * fx * 100.0).round() / 100.0,
            from_wallet: from.to_string(),
            to_wallet: to.to_string(),
            marketplace: if hash.is_multiple_of(3) {
                "looksrare"
            } else {
                "opensea"
            }
            .to_string(),
        });
    };

    for t in 0..TOKENS {
        let token = t.to_string();
        let premium = 1.0 + 4.0 * (0.35 - scores[&token]).max(0.0);
        let minter = b.wallet();
        let mut owner = minter;
        let sales = r.random_range(0..=5);
        let mut day = r.random_range(0..DAYS / 2);
        for _ in 0..sales {
            if day >= DAYS {
                break;
            }
            let buyer = b.wallet();
            let noise: f64 = r.random_range(0.85..1.15);
            let native = ((level[day as usize] * premium * noise) * 1e4).round() / 1e4;
            push(
                &mut records,
                &token,
                &owner,
                &buyer,
                day,
                r.random_range(0..86_400),
                native,
            );
            owner = buyer;
            day += r.random_range(1..60);
        }
    }

    // lateral swaps at the swap contract fee
    for k in 0..12 {
        let token = ((k * 17) % TOKENS).to_string();
        let (from, to) = (b.wallet(), b.wallet());
        push(
            &mut records,
            &token,
            &from,
            &to,
            30 + k as i64 * 31,
            3600,
            0.005,
        );
    }
    // ping-pong tokens
    for k in 0..4 {
        let token = (TOKENS - 1 - k).to_string();
        let (x, y) = (b.wallet(), b.wallet());
        for i in 0..6 {
            let (from, to) = if i % 2 == 0 { (&x, &y) } else { (&y, &x) };
            let day = 200 + k as i64 * 40 + i;
            push(
                &mut records,
                &token,
                from,
                to,
                day,
                7200,
                (level[day as usize] * 1e4).round() / 1e4,
            );
        }
    }
    // circular tokens
    for k in 0..2 {
        let token = (TOKENS - 10 - k).to_string();
        let ring = [b.wallet(), b.wallet(), b.wallet()];
        for i in 0..3 {
            let day = 300 + k as i64 * 20 + i as i64;
            push(
                &mut records,
                &token,
                &ring[i],
                &ring[(i + 1) % 3],
                day,
                600,
                (level[day as usize] * 1e4).round() / 1e4,
            );
        }
    }
    // a self-transfer
    let w = b.wallet();
    push(
        &mut records,
        "42",
        &w,
        &w,
        250,
        100,
        (level[250] * 1e4).round() / 1e4,
    );

    records.sort_by(|a, b| {
        (a.timestamp, &a.tx_hash, &a.token_id).cmp(&(b.timestamp, &b.tx_hash, &b.token_id))
    });
    SyntheticCollection {
        manifest,
        records,
        traits,
    }
}
