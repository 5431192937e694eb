use std::process::{Command, Output};

use ldamp::bench::{run_se_compare, DenoiserChoice, ExperimentConfig};
use ldamp::channel::{generate_dataset, ChannelDataset};
use ldamp::cnn::{DnCnnWeights, InputAffine};

fn ldamp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ldamp")).args(args).output().unwrap()
}

#[test]
fn generate_writes_a_readable_dataset() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("train.bchd");
    let res = ldamp(&[
        "generate", "--count", "5", "--m", "16", "--n", "8", "--seed", "3", "--out",
        out.to_str().unwrap(),
    ]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let ds = ChannelDataset::load(&out).unwrap();
    assert_eq!((ds.m(), ds.n(), ds.count(), ds.seed()), (16, 8, 5, 3));
    assert_eq!(ds, generate_dataset(5, 4, 16, 8, 3).unwrap());
}

#[test]
fn estimate_prints_every_layer() {
    let res = ldamp(&["estimate", "--m", "32", "--n", "32", "--delta", "0.2", "--layers", "6", "--verbose"]);
    assert!(res.status.success());
    let stdout = String::from_utf8(res.stdout).unwrap();
    let lines: Vec<&str> = stdout.lines().collect();
    assert!(lines[0].starts_with("# K = 205"));
    assert_eq!(lines[1], "layer,sigma_hat,nmse_db_estimate,nmse_db_truth");
    assert_eq!(lines.len(), 2 + 7);
    assert!(lines[2].ends_with(",undefined,0.000000"));
}

#[test]
fn se_prints_trajectory() {
    let res = ldamp(&["se", "--m", "32", "--n", "32", "--layers", "10", "--mc-trials", "4"]);
    assert!(res.status.success());
    let stdout = String::from_utf8(res.stdout).unwrap();
    assert_eq!(stdout.lines().count(), 1 + 11);
}

#[test]
fn sweep_csv_format() {
    let res = ldamp(&[
        "sweep", "--m", "16", "--n", "16", "--trials", "2", "--delta", "0.25", "--snr-db", "0,10",
        "--denoiser", "wiener,soft", "--layers", "2", "--nmse-denominator", "truth",
    ]);
    assert!(res.status.success());
    let stdout = String::from_utf8(res.stdout).unwrap();
    assert!(!stdout.contains('\r'));
    let mut lines = stdout.lines();
    assert_eq!(lines.next().unwrap(), "delta,snr_db,denoiser,layer,nmse_db_mean,nmse_db_stderr,trials");
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 2 * 2 * 3);
    assert_eq!(rows[0], "0.250000,0.000000,soft,0,0.000000,0.000000,2");
}

#[test]
fn configuration_errors_exit_with_2() {
    let res = ldamp(&["sweep", "--denoiser", "dncnn", "--trials", "1"]);
    assert_eq!(res.status.code(), Some(2));
    let res = ldamp(&["sweep", "--denoiser", "dncnn", "--weights", "/nonexistent.dncw", "--trials", "1"]);
    assert_eq!(res.status.code(), Some(2));
    let res = ldamp(&["sweep", "--delta", "1.5"]);
    assert_eq!(res.status.code(), Some(2));
    let res = ldamp(&["sweep", "--nmse-denominator", "median"]);
    assert_eq!(res.status.code(), Some(2));
    let res = ldamp(&["sweep", "--trials", "0"]);
    assert_eq!(res.status.code(), Some(2));
}

#[test]
fn dncnn_weights_are_accepted() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("zero.dncw");
    DnCnnWeights::zeros(2, InputAffine::IDENTITY).unwrap().save(&path).unwrap();
    let res = ldamp(&[
        "sweep", "--m", "8", "--n", "8", "--trials", "1", "--layers", "2", "--denoiser", "dncnn,soft",
        "--weights", path.to_str().unwrap(), "--nmse-denominator", "truth",
    ]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    assert!(String::from_utf8(res.stdout).unwrap().contains(",dncnn,"));
}

#[test]
fn oracle_se_compare_is_exact_from_layer_one() {
    let cfg = ExperimentConfig {
        m: 16,
        n: 16,
        deltas: vec![1.0],
        snrs_db: vec![300.0],
        denoisers: vec![DenoiserChoice::Oracle],
        trials: 3,
        mc_trials: 2,
        ..ExperimentConfig::default()
    };
    let res = run_se_compare(&cfg).unwrap();
    assert_eq!(res.rows.len(), 2 * (cfg.layers + 1));
    for row in &res.rows {
        if row.layer == 0 {
            assert_eq!(row.nmse_db_mean, 0.0);
        } else {
            assert_eq!(row.nmse_db_mean, f64::NEG_INFINITY, "{row:?}");
        }
    }
}
