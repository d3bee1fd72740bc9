//! Analytics for NFT collection transaction histories: ingestion and
//! validation, lateral-swap filtering, trait rarity, wash-trade screening on
//! wallet graphs, and daily market statistics.

pub mod error;
pub mod market_stats;
pub mod model;
pub mod pipeline;
pub mod preprocess;
pub mod rarity;
pub mod report;
pub mod synth;
pub mod tradegraph;

pub use error::{Error, Result};
pub use model::{
    Chain, CollectionManifest, Currency, PriceField, TokenTraitSet, TransactionRecord,
    ValidationReport,
};
