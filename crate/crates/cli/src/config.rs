//! Run configuration: an optional TOML file, overridden by command-line flags.

use std::path::{Path, PathBuf};

use clap::Args;
use nftledger::model::PriceField;
use nftledger::pipeline::{AnalysisConfig, InputPaths};
use nftledger::report::TableFormat;
use serde::Deserialize;

#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    /// TOML file with default settings; flags take precedence.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    #[arg(long, value_name = "PATH")]
    pub transactions: Option<PathBuf>,
    #[arg(long, value_name = "PATH")]
    pub traits: Option<PathBuf>,
    #[arg(long, value_name = "PATH")]
    pub manifest: Option<PathBuf>,
    /// Output directory, created if missing [default: out]
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    #[arg(long, value_name = "FIELD", value_parser = ["native", "usd"])]
    pub price_field: Option<String>,
    /// Exclude lateral-swap suspects from market, wash and Benford analyses.
    #[arg(long, num_args = 0..=1, default_missing_value = "true", value_name = "BOOL")]
    pub drop_lateral_swaps: Option<bool>,
    #[arg(long, value_name = "N")]
    pub pair_threshold: Option<u32>,
    /// Longest circuit searched, in hops; 0 searches without a bound.
    #[arg(long, value_name = "N")]
    pub max_circuit_len: Option<usize>,
    #[arg(long, value_name = "N")]
    pub window_days: Option<u32>,
    #[arg(long, value_name = "FORMAT", value_parser = ["csv", "json"])]
    pub format: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct FileConfig {
    transactions: Option<PathBuf>,
    traits: Option<PathBuf>,
    manifest: Option<PathBuf>,
    out: Option<PathBuf>,
    analysis: AnalysisConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub inputs: InputPaths,
    pub out: PathBuf,
    pub analysis: AnalysisConfig,
}

/// A problem with the invocation itself (exit code 2).
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

fn load_file(path: &Path) -> Result<FileConfig, UsageError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| UsageError(format!("{}: {e}", path.display())))?;
    let mut cfg: FileConfig =
        toml::from_str(&text).map_err(|e| UsageError(format!("{}: {e}", path.display())))?;
    // paths in the file are relative to the file
    let base = path.parent().unwrap_or(Path::new(""));
    for p in [
        &mut cfg.transactions,
        &mut cfg.traits,
        &mut cfg.manifest,
        &mut cfg.out,
    ]
    .into_iter()
    .flatten()
    {
        if p.is_relative() {
            *p = base.join(&*p);
        }
    }
    Ok(cfg)
}

impl RunArgs {
    pub fn resolve(&self) -> Result<RunConfig, UsageError> {
        let file = match &self.config {
            Some(p) => load_file(p)?,
            None => FileConfig::default(),
        };
        let mut analysis = file.analysis;
        if let Some(f) = &self.price_field {
            analysis.price_field = f
                .parse::<PriceField>()
                .map_err(|e| UsageError(e.to_string()))?;
        }
        if let Some(d) = self.drop_lateral_swaps {
            analysis.drop_lateral_swaps = d;
        }
        if let Some(n) = self.pair_threshold {
            analysis.wash.pair_repetition_threshold = n;
        }
        if let Some(n) = self.max_circuit_len {
            analysis.wash.max_circuit_length = (n > 0).then_some(n);
        }
        if let Some(n) = self.window_days {
            analysis.window_days = n;
        }
        if let Some(f) = &self.format {
            analysis.format = f
                .parse::<TableFormat>()
                .map_err(|e| UsageError(e.to_string()))?;
        }
        analysis.validate().map_err(|e| UsageError(e.to_string()))?;

        let manifest = self
            .manifest
            .clone()
            .or(file.manifest)
            .ok_or_else(|| UsageError("--manifest is required".into()))?;
        let transactions = self
            .transactions
            .clone()
            .or(file.transactions)
            .ok_or_else(|| UsageError("--transactions is required".into()))?;
        Ok(RunConfig {
            inputs: InputPaths {
                manifest,
                transactions,
                traits: self.traits.clone().or(file.traits),
            },
            out: self
                .out
                .clone()
                .or(file.out)
                .unwrap_or_else(|| PathBuf::from("out")),
            analysis,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn args() -> RunArgs {
        RunArgs {
            manifest: Some("m.json".into()),
            transactions: Some("t.csv".into()),
            ..RunArgs::default()
        }
    }

    #[test]
    fn defaults_without_file() {
        let cfg = args().resolve().unwrap();
        assert_eq!(cfg.analysis, AnalysisConfig::default());
        assert_eq!(cfg.out, PathBuf::from("out"));
        assert_eq!(cfg.inputs.traits, None);
    }

    #[test]
    fn flags_override_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(
            &path,
            "traits = \"traits.csv\"\nout = \"/tmp/x\"\n[analysis]\nwindow_days = 30\nprice_field = \"native\"\n[analysis.wash]\npair_repetition_threshold = 5\n",
        )
        .unwrap();
        let mut a = args();
        a.config = Some(path);
        a.window_days = Some(90);
        a.max_circuit_len = Some(0);
        let cfg = a.resolve().unwrap();
        assert_eq!(cfg.analysis.window_days, 90);
        assert_eq!(cfg.analysis.price_field, PriceField::Native);
        assert_eq!(cfg.analysis.wash.pair_repetition_threshold, 5);
        assert_eq!(cfg.analysis.wash.max_circuit_length, None);
        assert_eq!(cfg.inputs.traits, Some(dir.path().join("traits.csv")));
        assert_eq!(cfg.out, PathBuf::from("/tmp/x"));
    }

    #[test]
    fn unknown_keys_and_bad_values_are_usage_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(&path, "colour = 1\n").unwrap();
        let mut a = args();
        a.config = Some(path);
        assert!(a.resolve().is_err());

        let mut a = args();
        a.pair_threshold = Some(1);
        assert!(a.resolve().is_err());
    }

    #[test]
    fn missing_inputs() {
        assert!(RunArgs::default().resolve().is_err());
    }
}
