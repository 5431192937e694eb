//! NMSE metric, experiment sweeps and CSV output.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use rayon::prelude::*;

use crate::channel::{sample_channel, DEFAULT_M, DEFAULT_N, DEFAULT_NUM_PATHS};
use crate::cnn::{load_weights, DnCnnDenoiser, DnCnnWeights};
use crate::denoise::{Denoiser, OracleDenoiser, SoftThreshold, WienerDenoiser, DEFAULT_SOFT_LAMBDA};
use crate::error::{Error, Result};
use crate::measurement::{measure, rf_chains, sample_selection_network, snr_to_sigma};
use crate::rng::sub_rng;
use crate::se::{se_run, DEFAULT_MC_TRIALS};
use crate::solver::{normalize_system, DampSolver, LayerError, DEFAULT_LAYERS};
use crate::vecops;

pub const CSV_HEADER: &str = "delta,snr_db,denoiser,layer,nmse_db_mean,nmse_db_stderr,trials";

// Stream labels for seed derivation.
const CHANNEL_STREAM: u64 = 1;
const OPERATOR_STREAM: u64 = 2;
const NOISE_STREAM: u64 = 3;
const PROBE_STREAM: u64 = 4;
const SE_STREAM: u64 = 5;

/// Which energy normalises the squared error.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NmseDenominator {
    /// `‖ĥ − h‖² / ‖ĥ‖²`.
    #[default]
    Estimate,
    /// `‖ĥ − h‖² / ‖h‖²`.
    Truth,
}

impl FromStr for NmseDenominator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "estimate" => Ok(Self::Estimate),
            "truth" => Ok(Self::Truth),
            other => Err(Error::Config(format!("unknown NMSE denominator {other:?}"))),
        }
    }
}

impl fmt::Display for NmseDenominator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Estimate => "estimate",
            Self::Truth => "truth",
        })
    }
}

impl NmseDenominator {
    pub fn ratio(self, err: &LayerError) -> Result<f64> {
        let denom = match self {
            Self::Estimate => err.estimate_energy,
            Self::Truth => err.truth_energy,
        };
        if denom > 0.0 {
            Ok(err.squared_error / denom)
        } else {
            Err(Error::MetricUndefined(format!("zero {self} energy in NMSE denominator")))
        }
    }
}

pub fn nmse(h_hat: &[f64], h: &[f64], mode: NmseDenominator) -> Result<f64> {
    if h_hat.len() != h.len() {
        return Err(Error::invalid("nmse: length mismatch"));
    }
    mode.ratio(&LayerError::new(h_hat, h))
}

/// `10 log10(v)`; zero maps to `-inf`.
pub fn to_db(v: f64) -> f64 {
    10.0 * v.log10()
}

#[derive(Debug, Clone, PartialEq)]
pub enum DenoiserChoice {
    Wiener,
    Soft { lambda: f64 },
    Dncnn { weights: PathBuf },
    /// Returns the true channel; sanity bound only.
    Oracle,
}

impl DenoiserChoice {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Wiener => "wiener",
            Self::Soft { .. } => "soft",
            Self::Dncnn { .. } => "dncnn",
            Self::Oracle => "oracle",
        }
    }

    /// Parses a registered name; `dncnn` needs a weight path.
    pub fn parse(name: &str, soft_lambda: f64, weights: Option<&Path>) -> Result<Self> {
        match name {
            "wiener" => Ok(Self::Wiener),
            "soft" => Ok(Self::Soft { lambda: soft_lambda }),
            "oracle" => Ok(Self::Oracle),
            "dncnn" => weights
                .map(|p| Self::Dncnn { weights: p.to_path_buf() })
                .ok_or_else(|| Error::Config("denoiser dncnn requires --weights".into())),
            other => Err(Error::Config(format!(
                "unknown denoiser {other:?} (expected wiener, soft, dncnn or oracle)"
            ))),
        }
    }
}

/// Denoiser instantiated once per sweep; the oracle is rebuilt per trial.
enum Prepared {
    Shared(Box<dyn Denoiser>),
    Oracle,
}

impl Prepared {
    fn build(choice: &DenoiserChoice, m: usize, n: usize) -> Result<Self> {
        Ok(match choice {
            DenoiserChoice::Wiener => Self::Shared(Box::new(WienerDenoiser::new())),
            DenoiserChoice::Soft { lambda } => {
                Self::Shared(Box::new(SoftThreshold::new(*lambda).map_err(|e| Error::Config(e.to_string()))?))
            }
            DenoiserChoice::Dncnn { weights } => {
                if !weights.is_file() {
                    return Err(Error::Config(format!("weight file {} not found", weights.display())));
                }
                let w: Arc<DnCnnWeights> = Arc::new(load_weights(weights)?);
                Self::Shared(Box::new(DnCnnDenoiser::with_shape(w, m, n)))
            }
            DenoiserChoice::Oracle => Self::Oracle,
        })
    }

    fn with<T>(&self, truth: &[f64], f: impl FnOnce(&dyn Denoiser) -> T) -> T {
        match self {
            Self::Shared(d) => f(d.as_ref()),
            Self::Oracle => f(&OracleDenoiser::new(truth.to_vec())),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub m: usize,
    pub n: usize,
    pub num_paths: usize,
    pub deltas: Vec<f64>,
    pub snrs_db: Vec<f64>,
    pub denoisers: Vec<DenoiserChoice>,
    pub layers: usize,
    pub trials: usize,
    pub seed: u64,
    /// Monte-Carlo draws per state-evolution update.
    pub mc_trials: usize,
    pub nmse_denominator: NmseDenominator,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            m: DEFAULT_M,
            n: DEFAULT_N,
            num_paths: DEFAULT_NUM_PATHS,
            deltas: vec![0.1],
            snrs_db: vec![10.0],
            denoisers: vec![DenoiserChoice::Soft {
                lambda: DEFAULT_SOFT_LAMBDA,
            }],
            layers: DEFAULT_LAYERS,
            trials: 100,
            seed: 0,
            mc_trials: DEFAULT_MC_TRIALS,
            nmse_denominator: NmseDenominator::Estimate,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.m == 0 || self.n == 0 {
            return fail("dimensions must be positive".into());
        }
        if self.num_paths == 0 {
            return fail("paths must be at least 1".into());
        }
        if self.trials == 0 {
            return fail("trials must be at least 1".into());
        }
        if self.layers == 0 {
            return fail("layers must be at least 1".into());
        }
        if self.mc_trials == 0 {
            return fail("mc_trials must be at least 1".into());
        }
        if self.deltas.is_empty() || self.snrs_db.is_empty() || self.denoisers.is_empty() {
            return fail("delta, SNR and denoiser lists must be non-empty".into());
        }
        if let Some(d) = self.deltas.iter().find(|d| !(**d > 0.0 && **d <= 1.0)) {
            return fail(format!("delta {d} outside (0, 1]"));
        }
        if let Some(s) = self.snrs_db.iter().find(|s| !s.is_finite()) {
            return fail(format!("SNR {s} is not finite"));
        }
        Ok(())
    }

    fn prepare(&self) -> Result<Vec<Prepared>> {
        self.validate()?;
        self.denoisers
            .iter()
            .map(|c| Prepared::build(c, self.m, self.n))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub delta: f64,
    pub snr_db: f64,
    pub denoiser: String,
    pub layer: usize,
    pub nmse_db_mean: f64,
    pub nmse_db_stderr: f64,
    /// Trials that contributed (undefined ratios are excluded).
    pub trials: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    /// Per-trial ratios excluded because the NMSE denominator was zero.
    pub excluded: usize,
}

impl SweepResult {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&format!(
                "{:.6},{:.6},{},{},{:.6},{:.6},{}\n",
                r.delta, r.snr_db, r.denoiser, r.layer, r.nmse_db_mean, r.nmse_db_stderr, r.trials
            ));
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }

    pub fn find(&self, delta: f64, snr_db: f64, denoiser: &str, layer: usize) -> Option<&SweepRow> {
        self.rows
            .iter()
            .find(|r| r.delta == delta && r.snr_db == snr_db && r.denoiser == denoiser && r.layer == layer)
    }

    fn sort(&mut self) {
        self.rows.sort_by(|a, b| {
            a.delta
                .total_cmp(&b.delta)
                .then(a.snr_db.total_cmp(&b.snr_db))
                .then_with(|| a.denoiser.cmp(&b.denoiser))
                .then(a.layer.cmp(&b.layer))
        });
    }
}

/// Mean and standard error of per-trial ratios, expressed in dB.
///
/// The mean is taken before the logarithm; the standard error is carried
/// through to dB to first order.
pub fn aggregate_db(ratios: &[f64]) -> (f64, f64) {
    let n = ratios.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = ratios.iter().sum::<f64>() / n as f64;
    let stderr = if n > 1 {
        let var = ratios.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        (var / n as f64).sqrt()
    } else {
        0.0
    };
    let stderr_db = if mean > 0.0 {
        10.0 / std::f64::consts::LN_10 * stderr / mean
    } else {
        0.0
    };
    (to_db(mean), stderr_db)
}

/// One simulated trial of the full pipeline.
pub struct Trial {
    pub truth: Vec<f64>,
    pub errors: Vec<LayerError>,
    pub sigma_hats: Vec<f64>,
}

fn label(x: f64) -> u64 {
    x.to_bits()
}

/// Channel, operator and measurement for trial `t` of one (δ, SNR) point.
///
/// Channels depend only on `(seed, t)` and operators on `(seed, t, δ)`, so
/// different SNRs, ratios and denoisers are compared on common draws.
pub fn trial_problem(
    cfg: &ExperimentConfig,
    delta: f64,
    snr_db: f64,
    t: usize,
) -> Result<(Vec<f64>, crate::measurement::MeasurementOperator, Vec<f64>)> {
    let t = t as u64;
    let mn = cfg.m * cfg.n;
    let h = sample_channel(&mut sub_rng(cfg.seed, &[CHANNEL_STREAM, t]), cfg.num_paths, cfg.m, cfg.n)?
        .vectorize()
        .0;
    let k = rf_chains(delta, mn);
    let op = sample_selection_network(k, cfg.m, cfg.n, &mut sub_rng(cfg.seed, &[OPERATOR_STREAM, t, label(delta)]))?;
    let r = measure(
        &op,
        &h,
        snr_to_sigma(snr_db),
        &mut sub_rng(cfg.seed, &[NOISE_STREAM, t, label(delta), label(snr_db)]),
    )?;
    Ok((h, op, r))
}

fn simulate_trial(
    cfg: &ExperimentConfig,
    delta: f64,
    snr_db: f64,
    denoiser_index: usize,
    prepared: &Prepared,
    t: usize,
) -> Result<Trial> {
    let (h, op, r) = trial_problem(cfg, delta, snr_db, t)?;
    let mut probe_rng = sub_rng(
        cfg.seed,
        &[PROBE_STREAM, t as u64, label(delta), label(snr_db), denoiser_index as u64],
    );
    let (a, r_a) = normalize_system(&op, &r)?;
    let (_, traj) = prepared.with(&h, |d| DampSolver::new(&a, d).run(&r_a, cfg.layers, &mut probe_rng, Some(&h)))?;
    Ok(Trial {
        errors: traj.records.iter().map(|r| r.error.expect("truth supplied")).collect(),
        sigma_hats: traj.sigma_hats(),
        truth: h,
    })
}

fn rows_for_point(
    delta: f64,
    snr_db: f64,
    name: &str,
    per_layer: Vec<Vec<Option<f64>>>,
    excluded: &mut usize,
) -> Vec<SweepRow> {
    per_layer
        .into_iter()
        .enumerate()
        .map(|(layer, ratios)| {
            let defined: Vec<f64> = ratios.iter().flatten().copied().collect();
            *excluded += ratios.len() - defined.len();
            let (mean, stderr) = aggregate_db(&defined);
            SweepRow {
                delta,
                snr_db,
                denoiser: name.to_string(),
                layer,
                nmse_db_mean: mean,
                nmse_db_stderr: stderr,
                trials: defined.len(),
            }
        })
        .collect()
}

fn transpose(trials: &[Vec<Option<f64>>], layers: usize) -> Vec<Vec<Option<f64>>> {
    (0..=layers).map(|l| trials.iter().map(|t| t[l]).collect()).collect()
}

/// Simulated per-layer NMSE for every (δ, SNR, denoiser) point.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<SweepResult> {
    let prepared = cfg.prepare()?;
    let mut result = SweepResult::default();
    for &delta in &cfg.deltas {
        for &snr_db in &cfg.snrs_db {
            for (di, (choice, prep)) in cfg.denoisers.iter().zip(&prepared).enumerate() {
                let trials = (0..cfg.trials)
                    .into_par_iter()
                    .map(|t| {
                        let trial = simulate_trial(cfg, delta, snr_db, di, prep, t)?;
                        Ok(trial
                            .errors
                            .iter()
                            .map(|e| cfg.nmse_denominator.ratio(e).ok())
                            .collect::<Vec<_>>())
                    })
                    .collect::<Result<Vec<_>>>()?;
                let per_layer = transpose(&trials, cfg.layers);
                result
                    .rows
                    .extend(rows_for_point(delta, snr_db, choice.name(), per_layer, &mut result.excluded));
            }
        }
    }
    result.sort();
    Ok(result)
}

/// Raw per-trial outcomes of one configuration point, for analyses the CSV
/// rows do not cover.
pub fn simulate_point(cfg: &ExperimentConfig, delta: f64, snr_db: f64, denoiser_index: usize) -> Result<Vec<Trial>> {
    let prepared = cfg.prepare()?;
    let prep = prepared
        .get(denoiser_index)
        .ok_or_else(|| Error::Config(format!("no denoiser at index {denoiser_index}")))?;
    (0..cfg.trials)
        .into_par_iter()
        .map(|t| simulate_trial(cfg, delta, snr_db, denoiser_index, prep, t))
        .collect()
}

/// Noise variance of the column-normalised system the solver runs on,
/// `σ_n² MN/K`, which is what state evolution needs as its `σ_n²`.
pub fn effective_measurement_noise(cfg: &ExperimentConfig, delta: f64, snr_db: f64) -> f64 {
    let mn = cfg.m * cfg.n;
    let sigma_n = snr_to_sigma(snr_db);
    sigma_n * sigma_n * mn as f64 / rf_chains(delta, mn) as f64
}

/// Paired state-evolution prediction and simulation.
///
/// Rows are labelled `<denoiser>-se` and `<denoiser>-sim`. Both sides use the
/// truth-normalised NMSE, which is the quantity state evolution predicts;
/// the configured denominator does not apply here.
pub fn run_se_compare(cfg: &ExperimentConfig) -> Result<SweepResult> {
    let prepared = cfg.prepare()?;
    let mut result = SweepResult::default();
    for &delta in &cfg.deltas {
        for &snr_db in &cfg.snrs_db {
            let noise_var = effective_measurement_noise(cfg, delta, snr_db);
            for (di, (choice, prep)) in cfg.denoisers.iter().zip(&prepared).enumerate() {
                let pairs = (0..cfg.trials)
                    .into_par_iter()
                    .map(|t| {
                        let trial = simulate_trial(cfg, delta, snr_db, di, prep, t)?;
                        let sim: Vec<Option<f64>> =
                            trial.errors.iter().map(|e| NmseDenominator::Truth.ratio(e).ok()).collect();
                        let mut se_rng = sub_rng(
                            cfg.seed,
                            &[SE_STREAM, t as u64, label(delta), label(snr_db), di as u64],
                        );
                        let traj = prep.with(&trial.truth, |d| {
                            se_run(&trial.truth, d, cfg.layers, delta, noise_var, cfg.mc_trials, &mut se_rng)
                        })?;
                        let se: Vec<Option<f64>> = if traj.signal_power > 0.0 {
                            traj.nmse().into_iter().map(Some).collect()
                        } else {
                            vec![None; cfg.layers + 1]
                        };
                        Ok((se, sim))
                    })
                    .collect::<Result<Vec<_>>>()?;
                let (se, sim): (Vec<_>, Vec<_>) = pairs.into_iter().unzip();
                let name = choice.name();
                result.rows.extend(rows_for_point(
                    delta,
                    snr_db,
                    &format!("{name}-se"),
                    transpose(&se, cfg.layers),
                    &mut result.excluded,
                ));
                result.rows.extend(rows_for_point(
                    delta,
                    snr_db,
                    &format!("{name}-sim"),
                    transpose(&sim, cfg.layers),
                    &mut result.excluded,
                ));
            }
        }
    }
    result.sort();
    Ok(result)
}

/// Per-layer NMSE of a single estimation instance.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimateReport {
    pub k: usize,
    pub sigma_hats: Vec<f64>,
    pub nmse_estimate: Vec<Option<f64>>,
    pub nmse_truth: Vec<Option<f64>>,
}

/// Runs trial 0 of the first (δ, SNR, denoiser) of `cfg`.
pub fn estimate_once(cfg: &ExperimentConfig) -> Result<EstimateReport> {
    let prepared = cfg.prepare()?;
    let (delta, snr_db) = (cfg.deltas[0], cfg.snrs_db[0]);
    let trial = simulate_trial(cfg, delta, snr_db, 0, &prepared[0], 0)?;
    Ok(EstimateReport {
        k: rf_chains(delta, cfg.m * cfg.n),
        sigma_hats: trial.sigma_hats,
        nmse_estimate: trial.errors.iter().map(|e| NmseDenominator::Estimate.ratio(e).ok()).collect(),
        nmse_truth: trial.errors.iter().map(|e| NmseDenominator::Truth.ratio(e).ok()).collect(),
    })
}

/// State-evolution trajectory for the channel of trial 0.
pub fn se_once(cfg: &ExperimentConfig) -> Result<crate::se::SeTrajectory> {
    let prepared = cfg.prepare()?;
    let (delta, snr_db) = (cfg.deltas[0], cfg.snrs_db[0]);
    let (h, _, _) = trial_problem(cfg, delta, snr_db, 0)?;
    let noise_var = effective_measurement_noise(cfg, delta, snr_db);
    let mut rng = sub_rng(cfg.seed, &[SE_STREAM, 0, label(delta), label(snr_db), 0]);
    prepared[0].with(&h, |d| se_run(&h, d, cfg.layers, delta, noise_var, cfg.mc_trials, &mut rng))
}

/// Mean `‖h‖²/MN` over the trial channels of `cfg`.
pub fn mean_signal_power(cfg: &ExperimentConfig) -> Result<f64> {
    let total: f64 = (0..cfg.trials)
        .map(|t| {
            let (h, _, _) = trial_problem(cfg, cfg.deltas[0], cfg.snrs_db[0], t)?;
            Ok(vecops::norm_sq(&h) / h.len() as f64)
        })
        .sum::<Result<f64>>()?;
    Ok(total / cfg.trials as f64)
}
