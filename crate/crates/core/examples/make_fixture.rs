//! Writes the synthetic demo collection (manifest.json, transactions.csv,
//! traits.csv) into a directory.
//!
//! cargo run -p nftledger-core --example make_fixture -- fixtures/demo [seed]

use std::path::PathBuf;
use std::process::ExitCode;

use nftledger::synth::demo_collection;

fn main() -> ExitCode {
    let mut args = std::env::args().skip(1);
    let Some(dir) = args.next().map(PathBuf::from) else {
        eprintln!("usage: make_fixture <out-dir> [seed]");
        return ExitCode::from(2);
    };
    let seed = match args.next().map(|s| s.parse::<u64>()) {
        None => 2021,
        Some(Ok(s)) => s,
        Some(Err(e)) => {
            eprintln!("bad seed: {e}");
            return ExitCode::from(2);
        }
    };
    let collection = demo_collection(seed);
    if let Err(e) = collection.write_to(&dir) {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    println!(
        "wrote {} transactions for {} tokens to {}",
        collection.records.len(),
        collection.traits.len(),
        dir.display()
    );
    ExitCode::SUCCESS
}
