//! State evolution for D-AMP on a fixed channel realisation.
//!
//! The recursion alternates
//!
//! ```text
//! σ_e²  = θ / δ + σ_n²
//! θ'    = E ‖D_{σ_e}(h_o + σ_e ε) − h_o‖² / MN,   ε ~ N(0, I)
//! ```
//!
//! starting from `θ⁰ = ‖h_o‖² / MN`, the error of the all-zero estimate.
//! The expectation is a Monte-Carlo average over `mc_trials` noise draws.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::denoise::Denoiser;
use crate::error::{Error, Result};
use crate::rng::sub_rng;
use crate::vecops;

pub const DEFAULT_MC_TRIALS: usize = 50;

#[derive(Debug, Clone, PartialEq)]
pub struct SeTrajectory {
    /// `θ⁰ … θᴸ`.
    pub theta: Vec<f64>,
    /// `σ_e²` fed to layer `l + 1`, computed from `theta[l]`.
    pub sigma_e_sq: Vec<f64>,
    pub delta: f64,
    pub sigma_n_sq: f64,
    pub mc_trials: usize,
    /// `‖h_o‖² / MN`.
    pub signal_power: f64,
}

impl SeTrajectory {
    /// Predicted `‖ĥ − h‖² / ‖h‖²` per layer.
    pub fn nmse(&self) -> Vec<f64> {
        self.theta.iter().map(|t| t / self.signal_power).collect()
    }
}

fn check_delta(delta: f64) -> Result<()> {
    if delta > 0.0 && delta <= 1.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("delta = {delta} must lie in (0, 1]")))
    }
}

/// `σ_e² = θ/δ + σ_n²`.
pub fn effective_noise_variance(theta: f64, delta: f64, sigma_n_sq: f64) -> f64 {
    theta / delta + sigma_n_sq
}

/// One state-evolution update; returns `(θ_next, σ_e²)`.
pub fn se_step<R: Rng + ?Sized>(
    h_o: &[f64],
    denoiser: &dyn Denoiser,
    theta_prev: f64,
    delta: f64,
    sigma_n_sq: f64,
    mc_trials: usize,
    rng: &mut R,
) -> Result<(f64, f64)> {
    check_delta(delta)?;
    if !(theta_prev >= 0.0) {
        return Err(Error::invalid(format!("theta_prev = {theta_prev} must be non-negative")));
    }
    if !(sigma_n_sq >= 0.0) {
        return Err(Error::invalid(format!("sigma_n_sq = {sigma_n_sq} must be non-negative")));
    }
    if mc_trials == 0 {
        return Err(Error::invalid("mc_trials must be at least 1"));
    }
    if h_o.is_empty() {
        return Err(Error::invalid("empty channel"));
    }
    let sigma_e_sq = effective_noise_variance(theta_prev, delta, sigma_n_sq);
    let sigma_e = sigma_e_sq.sqrt();
    let base_seed: u64 = rng.random();
    let errors = (0..mc_trials)
        .into_par_iter()
        .map(|t| {
            let mut trial_rng = sub_rng(base_seed, &[t as u64]);
            let noisy: Vec<f64> = h_o
                .iter()
                .map(|&h| {
                    let e: f64 = StandardNormal.sample(&mut trial_rng);
                    h + sigma_e * e
                })
                .collect();
            let denoised = denoiser.denoise(&noisy, sigma_e)?;
            Ok(vecops::dist_sq(&denoised, h_o))
        })
        .collect::<Result<Vec<f64>>>()?;
    let theta_next = errors.iter().sum::<f64>() / (h_o.len() * mc_trials) as f64;
    Ok((theta_next, sigma_e_sq))
}

/// Runs `layers` updates from `θ⁰ = ‖h_o‖²/MN`.
pub fn se_run<R: Rng + ?Sized>(
    h_o: &[f64],
    denoiser: &dyn Denoiser,
    layers: usize,
    delta: f64,
    sigma_n_sq: f64,
    mc_trials: usize,
    rng: &mut R,
) -> Result<SeTrajectory> {
    if layers == 0 {
        return Err(Error::invalid("layers must be at least 1"));
    }
    check_delta(delta)?;
    if h_o.is_empty() {
        return Err(Error::invalid("empty channel"));
    }
    let signal_power = vecops::norm_sq(h_o) / h_o.len() as f64;
    let mut theta = vec![signal_power];
    let mut sigma_e_sq = Vec::with_capacity(layers);
    for _ in 0..layers {
        let prev = *theta.last().expect("theta is never empty");
        let (next, s) = se_step(h_o, denoiser, prev, delta, sigma_n_sq, mc_trials, rng)?;
        theta.push(next);
        sigma_e_sq.push(s);
    }
    Ok(SeTrajectory {
        theta,
        sigma_e_sq,
        delta,
        sigma_n_sq,
        mc_trials,
        signal_power,
    })
}
