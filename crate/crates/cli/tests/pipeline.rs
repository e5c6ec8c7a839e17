use std::fs;
use std::path::Path;
use std::process::Command;

use qpe_spectra::purify::EnsembleSpec;
use qpe_spectra_cli::config::{PrepConfig, PrepMode};
use qpe_spectra_cli::{run_experiment, run_oracle, validate_config, CliError, ExperimentConfig, ExperimentReport};

const TWO_LEVEL: &str = r#"{
    "model": {"name": "sigma_z", "n": 1, "terms": [{"coefficient": 1.0, "paulis": "Z"}]},
    "observable": {"name": "sigma_x", "n": 1, "terms": [{"coefficient": 1.0, "paulis": "X"}]},
    "qpe": {"l": 3, "delta": 0.7853981633974483}
}"#;

const ISING: &str = r#"{
    "model": {"preset": "tilted_ising", "n": 3},
    "observable": "total_sz",
    "qpe": {"l": 6, "delta": 0.37}
}"#;

fn config_in(raw: &str, dir: &Path) -> ExperimentConfig {
    let mut c = validate_config(raw).unwrap();
    c.output_dir = dir.to_path_buf();
    c
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r.records().map(|rec| rec.unwrap().iter().map(String::from).collect()).collect();
    (header, rows)
}

fn without_timings(mut report: ExperimentReport) -> ExperimentReport {
    report.metadata.timings_ms.clear();
    report
}

#[test]
fn two_level_worked_example() {
    let dir = tempfile::tempdir().unwrap();
    let report = run_experiment(&config_in(TWO_LEVEL, dir.path())).unwrap();
    let p = &report.exact_distribution.probabilities;
    for (f, &x) in p.iter().enumerate() {
        let expect = if f == 2 || f == 6 { 0.5 } else { 0.0 };
        assert!((x - expect).abs() <= 1e-10, "P({f}) = {x}");
    }
    assert!(report.distances.exact_vs_oracle.total_variation <= 1e-10);
    assert!(report.empirical_distribution.is_none());
    assert_eq!(report.schema_version, 1);
    for name in ["distributions.csv", "spectrum.csv", "report.json"] {
        assert!(dir.path().join(name).is_file(), "{name}");
    }
    let (header, rows) = read_csv(&dir.path().join("distributions.csv"));
    assert_eq!(header, ["f", "omega", "p_exact", "p_oracle", "p_empirical"]);
    assert_eq!(rows.len(), 8);
    assert!(rows.iter().all(|r| r[4].is_empty()));
    let (header, _) = read_csv(&dir.path().join("spectrum.csv"));
    assert_eq!(header, ["omega", "sigma"]);
}

#[test]
fn sampled_run_is_close_and_reproducible() {
    let raw = TWO_LEVEL.replace("\"qpe\"", "\"shots\": 100000, \"seed\": 17, \"qpe\"");
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let first = run_experiment(&config_in(&raw, a.path())).unwrap();
    let second = run_experiment(&config_in(&raw, b.path())).unwrap();
    let tv = first.distances.empirical_vs_exact.unwrap().total_variation;
    assert!(tv <= 0.02, "TV = {tv}");
    assert_eq!(first.empirical_distribution.as_ref().unwrap().shots, Some(100_000));
    for name in ["distributions.csv", "spectrum.csv"] {
        assert_eq!(fs::read(a.path().join(name)).unwrap(), fs::read(b.path().join(name)).unwrap(), "{name}");
    }
    let mut first = without_timings(first);
    let mut second = without_timings(second);
    first.config = serde_json::Value::Null;
    second.config = serde_json::Value::Null;
    assert_eq!(first, second);

    let other = tempfile::tempdir().unwrap();
    let reseeded = run_experiment(&config_in(&raw.replace("\"seed\": 17", "\"seed\": 18"), other.path())).unwrap();
    assert_ne!(
        reseeded.empirical_distribution.unwrap().probabilities,
        first.empirical_distribution.unwrap().probabilities
    );
}

#[test]
fn identical_config_gives_identical_files() {
    let raw = ISING.replace("\"qpe\"", "\"shots\": 5000, \"seed\": 3, \"prep\": {\"mode\": \"circuit\"}, \"qpe\"");
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    run_experiment(&config_in(&raw, a.path())).unwrap();
    run_experiment(&config_in(&raw, b.path())).unwrap();
    for name in ["distributions.csv", "spectrum.csv"] {
        assert_eq!(fs::read(a.path().join(name)).unwrap(), fs::read(b.path().join(name)).unwrap(), "{name}");
    }
}

#[test]
fn files_round_trip_losslessly() {
    let raw = ISING.replace("\"qpe\"", "\"shots\": 1000, \"ensemble\": {\"kind\": \"gibbs\", \"beta\": 0.7}, \"qpe\"");
    let dir = tempfile::tempdir().unwrap();
    let report = run_experiment(&config_in(&raw, dir.path())).unwrap();

    let (_, rows) = read_csv(&dir.path().join("distributions.csv"));
    let omegas = report.exact_distribution.frequencies();
    for (f, row) in rows.iter().enumerate() {
        assert_eq!(row[0].parse::<usize>().unwrap(), f);
        assert_eq!(row[1].parse::<f64>().unwrap(), omegas[f]);
        assert_eq!(row[2].parse::<f64>().unwrap(), report.exact_distribution.probabilities[f]);
        assert_eq!(row[3].parse::<f64>().unwrap(), report.oracle_distribution.probabilities[f]);
        assert_eq!(
            row[4].parse::<f64>().unwrap(),
            report.empirical_distribution.as_ref().unwrap().probabilities[f]
        );
    }
    let (_, rows) = read_csv(&dir.path().join("spectrum.csv"));
    assert_eq!(rows.len(), report.spectrum.values.len());
    for (k, row) in rows.iter().enumerate() {
        assert_eq!(row[0].parse::<f64>().unwrap(), report.spectrum.frequencies[k]);
        assert_eq!(row[1].parse::<f64>().unwrap(), report.spectrum.values[k]);
    }
    let parsed: ExperimentReport = serde_json::from_slice(&fs::read(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(parsed, report);
}

#[test]
fn auto_plan_embeds_a_valid_plan() {
    let raw = ISING.replace(r#"{"l": 6, "delta": 0.37}"#, r#"{"gamma": 0.1, "auto_plan": true}"#);
    let dir = tempfile::tempdir().unwrap();
    let report = run_experiment(&config_in(&raw, dir.path())).unwrap();
    let plan = report.qpe.plan.unwrap();
    assert!(report.qpe.auto_plan);
    assert!(plan.satisfies_bounds());
    assert_eq!((plan.l, plan.delta), (report.qpe.l, report.qpe.delta));
    assert!(report.distances.exact_vs_oracle.max_abs <= 1e-10);
}

#[test]
fn circuit_prep_records_statistics() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = config_in(ISING, dir.path());
    config.prep = PrepConfig {
        mode: PrepMode::Circuit,
        epsilon: 0.01,
        max_attempts: 10_000,
    };
    config.ensemble = EnsembleSpec::GroundState;
    let report = run_experiment(&config).unwrap();
    let stats = report.prep_stats;
    assert!(stats.attempts >= 1);
    assert!(stats.fidelity >= 1.0 - 0.012);
    assert!(stats.p1.unwrap() > 0.0);
    assert!(report.metadata.ground_degeneracy.is_some());
    // prep infidelity bounds the gap to the oracle
    assert!(report.distances.exact_vs_oracle.total_variation <= (1.0 - stats.fidelity).sqrt() + 1e-9);
}

#[test]
fn prep_exhaustion_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = config_in(ISING, dir.path());
    config.prep = PrepConfig {
        mode: PrepMode::Circuit,
        epsilon: 1e-9,
        max_attempts: 3,
    };
    let err = run_experiment(&config).unwrap_err();
    assert!(matches!(err, CliError::PrepExhausted { attempts: 3, .. }), "{err:?}");
    assert_eq!(err.exit_code(), 3);
}

#[test]
fn oversized_register_is_a_resource_error() {
    let raw = ISING.replace(r#""n": 3"#, r#""n": 10"#).replace(r#""l": 6"#, r#""l": 4"#);
    let dir = tempfile::tempdir().unwrap();
    let err = run_experiment(&config_in(&raw, dir.path())).unwrap_err();
    assert_eq!(err.exit_code(), 2, "{err}");
}

#[test]
fn oracle_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let report = run_oracle(&config_in(TWO_LEVEL, dir.path())).unwrap();
    assert!((report.golden_rule.weights[0][1] - 0.5).abs() < 1e-12);
    for name in ["spectrum.csv", "spectrum.json", "oracle.csv", "oracle_report.json"] {
        assert!(dir.path().join(name).is_file(), "{name}");
    }
}

fn binary() -> Command {
    Command::new(env!("CARGO_BIN_EXE_qpe-spectra"))
}

#[test]
fn binary_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let good = dir.path().join("good.json");
    fs::write(&good, TWO_LEVEL).unwrap();
    let out = dir.path().join("out");
    let status = binary()
        .args(["run", "--config"])
        .arg(&good)
        .arg("--out")
        .arg(&out)
        .args(["--seed", "5"])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_slice(&fs::read(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["metadata"]["seed"], 5);

    let bad = dir.path().join("bad.json");
    fs::write(&bad, TWO_LEVEL.replace("\"qpe\"", "\"shots\": -1, \"qpe\"")).unwrap();
    let output = binary().args(["run", "--config"]).arg(&bad).output().unwrap();
    assert_eq!(output.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&output.stderr).contains("shots"));

    let big = dir.path().join("big.json");
    fs::write(&big, ISING.replace(r#""n": 3"#, r#""n": 10"#)).unwrap();
    let status = binary().args(["run", "--config"]).arg(&big).arg("--out").arg(&out).status().unwrap();
    assert_eq!(status.code(), Some(2));

    let starved = dir.path().join("starved.json");
    fs::write(
        &starved,
        ISING.replace("\"qpe\"", r#""prep": {"mode": "circuit", "epsilon": 1e-9, "max_attempts": 2}, "qpe""#),
    )
    .unwrap();
    let status = binary().args(["run", "--config"]).arg(&starved).arg("--out").arg(&out).status().unwrap();
    assert_eq!(status.code(), Some(3));
}

#[test]
fn binary_prepstudy_and_plan() {
    let dir = tempfile::tempdir().unwrap();
    let study = dir.path().join("study.json");
    fs::write(&study, r#"{"prepstudy": {"distributions": ["semicircle", "gaussian"], "n": 6, "points": 5}}"#).unwrap();
    let status = binary().args(["prepstudy", "--config"]).arg(&study).arg("--out").arg(dir.path()).status().unwrap();
    assert_eq!(status.code(), Some(0));
    let (header, rows) = read_csv(&dir.path().join("prepstudy.csv"));
    assert_eq!(header, ["phi", "P1", "fidelity", "distribution", "N", "seed"]);
    assert_eq!(rows.len(), 10);

    let output = binary().args(["plan", "--omega-max", "8", "--gamma", "0.1"]).output().unwrap();
    assert_eq!(output.status.code(), Some(0));
    let plan: qpe_spectra::ResolutionPlan = serde_json::from_slice(&output.stdout).unwrap();
    assert_eq!(plan.l, 7);
    assert!(plan.satisfies_bounds());
}
