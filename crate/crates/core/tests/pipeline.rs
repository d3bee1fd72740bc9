use std::collections::BTreeSet;
use std::fs::File;
use std::path::{Path, PathBuf};

use nftledger::market_stats::{DayEntry, MarketSummary, ReturnPoint, VolatilityResult};
use nftledger::model::ValidationReport;
use nftledger::pipeline::{self, AnalysisConfig, Dataset, InputPaths};
use nftledger::preprocess::{read_flags_csv, FlagKind};
use nftledger::rarity::RegressionResult;
use nftledger::report::{read_json, read_table, RarityRow, TableFormat, WashRow};
use nftledger::synth::{demo_collection, MANIFEST_FILE, TRAITS_FILE, TRANSACTIONS_FILE};
use nftledger::tradegraph::BenfordResult;
use nftledger::Error;

fn fixture(dir: &Path) -> Dataset {
    demo_collection(2021).write_to(dir).unwrap();
    pipeline::load(&InputPaths {
        manifest: dir.join(MANIFEST_FILE),
        transactions: dir.join(TRANSACTIONS_FILE),
        traits: Some(dir.join(TRAITS_FILE)),
    })
    .unwrap()
}

fn names(paths: &[PathBuf]) -> Vec<String> {
    paths
        .iter()
        .map(|p| p.file_name().unwrap().to_string_lossy().into_owned())
        .collect()
}

fn open(p: &Path) -> File {
    File::open(p).unwrap()
}

#[test]
fn committed_fixture_matches_generator() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/demo");
    let tmp = tempfile::tempdir().unwrap();
    demo_collection(2021).write_to(tmp.path()).unwrap();
    for f in [MANIFEST_FILE, TRANSACTIONS_FILE, TRAITS_FILE] {
        assert_eq!(
            std::fs::read(root.join(f)).unwrap(),
            std::fs::read(tmp.path().join(f)).unwrap(),
            "{f} differs from the generator output"
        );
    }
}

#[test]
fn report_files_read_back() {
    for format in [TableFormat::Csv, TableFormat::Json] {
        let tmp = tempfile::tempdir().unwrap();
        let data = fixture(&tmp.path().join("in"));
        let out = tmp.path().join("out");
        let cfg = AnalysisConfig {
            format,
            ..AnalysisConfig::default()
        };
        let written = pipeline::run_report(&data, &cfg, &out).unwrap();
        let ext = format.extension();
        assert_eq!(
            names(&written),
            [
                format!("daily_series.{ext}"),
                format!("returns.{ext}"),
                "volatility.json".into(),
                format!("rarity.{ext}"),
                "regression.json".into(),
                format!("wash_report.{ext}"),
                "benford.json".into(),
            ]
        );

        let market = pipeline::market_analysis(&data.records, &cfg).unwrap();
        let days: Vec<DayEntry> = read_table(open(&written[0]), format).unwrap();
        assert_eq!(days.len(), market.series.days.len());
        for (a, b) in days.iter().zip(&market.series.days) {
            assert_eq!(a.date, b.date);
            assert_eq!(a.tx_count, b.tx_count);
            assert!((a.volume - b.volume).abs() <= 5e-7);
        }
        let returns: Vec<ReturnPoint> = read_table(open(&written[1]), format).unwrap();
        assert_eq!(returns.len(), market.returns.points.len());
        let vol: VolatilityResult = read_json(open(&written[2])).unwrap();
        assert!((vol.realized_vol - market.volatility.realized_vol).abs() <= 5e-7);
        assert_eq!(vol.n_returns, market.volatility.n_returns);

        let rarity: Vec<RarityRow> = read_table(open(&written[3]), format).unwrap();
        assert_eq!(rarity.len(), 200);
        assert!(rarity
            .iter()
            .any(|r| r.avg_price_usd.is_none() && r.n_sales == 0));
        let reg: RegressionResult = read_json(open(&written[4])).unwrap();
        assert_eq!(reg.n, rarity.iter().filter(|r| r.n_sales > 0).count());

        let wash: Vec<WashRow> = read_table(open(&written[5]), format).unwrap();
        let suspects: BTreeSet<&str> = wash
            .iter()
            .filter(|w| w.suspect)
            .map(|w| w.token_id.as_str())
            .collect();
        // four ping-pong tokens, two circular tokens and one self-transfer
        assert_eq!(
            suspects,
            BTreeSet::from(["189", "190", "196", "197", "198", "199", "42"])
        );
        let benford: BenfordResult = read_json(open(&written[6])).unwrap();
        assert_eq!(benford.n as usize, data.records.len());
    }
}

#[test]
fn dropping_swaps_changes_the_volatility_input() {
    let tmp = tempfile::tempdir().unwrap();
    let data = fixture(&tmp.path().join("in"));
    let cfg = AnalysisConfig {
        drop_lateral_swaps: true,
        ..AnalysisConfig::default()
    };
    let written = pipeline::run_volatility(&data, &cfg, &tmp.path().join("out")).unwrap();
    let vol: VolatilityResult = read_json(open(&written[1])).unwrap();

    let filtered = data.without_swaps(&cfg.swap).unwrap();
    assert_eq!(filtered.len(), data.records.len() - 12);
    let expected = pipeline::market_analysis(&filtered, &cfg)
        .unwrap()
        .volatility;
    let unfiltered = pipeline::market_analysis(&data.records, &cfg)
        .unwrap()
        .volatility;
    assert!((vol.realized_vol - expected.realized_vol).abs() <= 5e-7);
    assert!((vol.realized_vol - unfiltered.realized_vol).abs() > 1e-3);
}

#[test]
fn side_outputs_read_back() {
    let tmp = tempfile::tempdir().unwrap();
    let data = fixture(&tmp.path().join("in"));
    let out = tmp.path().join("out");
    let cfg = AnalysisConfig::default();

    let v = pipeline::run_validate(&data, &out).unwrap();
    let report: ValidationReport = read_json(open(&v[0])).unwrap();
    assert_eq!(report, data.validation);

    let s = pipeline::run_swaps(&data, &cfg, &out).unwrap();
    let flags = read_flags_csv(open(&s[0])).unwrap();
    assert_eq!(flags.len(), data.records.len());
    assert_eq!(
        flags
            .iter()
            .filter(|f| f.flag == FlagKind::LateralSwapSuspect)
            .count(),
        12
    );

    let w = pipeline::run_wash_scan(&data, &cfg, &out).unwrap();
    assert_eq!(
        names(&w),
        ["wash_report.csv", "wash_flags.csv", "circuits.json"]
    );
    let wash_flags = read_flags_csv(open(&w[1])).unwrap();
    assert!(wash_flags.iter().any(|f| f.flag == FlagKind::WashSuspect));
    let circuits: Vec<Vec<String>> = read_json(open(&w[2])).unwrap();
    assert!(circuits
        .iter()
        .all(|c| c.len() >= 3 && c.first() == c.last()));

    let m = pipeline::run_summarize(&data, &cfg, &out).unwrap();
    let summary: MarketSummary = read_json(open(&m[1])).unwrap();
    assert_eq!(summary.total_tx_count as usize, data.records.len());

    let r = pipeline::run_rarity(&data, &cfg, &out).unwrap();
    assert_eq!(names(&r), ["rarity.csv", "regression.json"]);
}

#[test]
fn report_is_byte_identical_across_runs() {
    let tmp = tempfile::tempdir().unwrap();
    let data = fixture(&tmp.path().join("in"));
    let cfg = AnalysisConfig::default();
    let a = pipeline::run_report(&data, &cfg, &tmp.path().join("a")).unwrap();
    let b = pipeline::run_report(&data, &cfg, &tmp.path().join("b")).unwrap();
    for (x, y) in a.iter().zip(&b) {
        assert_eq!(std::fs::read(x).unwrap(), std::fs::read(y).unwrap());
    }
}

#[test]
fn report_without_traits_fails_before_writing() {
    let tmp = tempfile::tempdir().unwrap();
    let mut data = fixture(&tmp.path().join("in"));
    data.traits = None;
    let out = tmp.path().join("out");
    let err = pipeline::run_report(&data, &AnalysisConfig::default(), &out).unwrap_err();
    assert!(matches!(err, Error::InvalidConfig(_)));
    assert!(!out.exists());
}
