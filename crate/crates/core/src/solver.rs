//! Layered D-AMP recursion.
//!
//! Each layer forms the pseudo-data `x = ĥ + Wᵀz`, denoises it at the noise
//! level `σ̂ = ‖z‖/√K`, and updates the residual with the Onsager correction
//! `(div D(x) / K) · z`, where the divergence is a single-probe Monte-Carlo
//! estimate taken at the same `x`. The same denoiser is reused by every layer.
//!
//! The recursion assumes unit-norm operator columns. The selection network
//! has unit-norm rows instead, so measurements are first mapped onto the
//! column-normalised system with [`normalize_system`]; [`estimate_channel`]
//! does this automatically.

use rand::Rng;

use crate::channel::ChannelVector;
use crate::denoise::{mc_divergence_from, Denoiser, DivergenceEstimate};
use crate::error::{Error, Result};
use crate::measurement::MeasurementOperator;
use crate::vecops;

pub const DEFAULT_LAYERS: usize = 10;

/// `(ĥˡ, zˡ, σ̂ˡ)` after `layer_index` layers.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverState {
    h_hat: Vec<f64>,
    z: Vec<f64>,
    sigma_hat: f64,
    layer_index: usize,
}

impl SolverState {
    pub fn new(h_hat: Vec<f64>, z: Vec<f64>, layer_index: usize) -> Result<Self> {
        if z.is_empty() {
            return Err(Error::invalid("residual must be non-empty"));
        }
        let sigma_hat = vecops::norm(&z) / (z.len() as f64).sqrt();
        Ok(Self {
            h_hat,
            z,
            sigma_hat,
            layer_index,
        })
    }

    pub fn h_hat(&self) -> &[f64] {
        &self.h_hat
    }

    pub fn z(&self) -> &[f64] {
        &self.z
    }

    pub fn sigma_hat(&self) -> f64 {
        self.sigma_hat
    }

    pub fn layer_index(&self) -> usize {
        self.layer_index
    }
}

/// Denoiser input `x = ĥ + Wᵀz` of one layer.
#[derive(Debug, Clone, PartialEq)]
pub struct NoisyInput(pub Vec<f64>);

/// Everything one layer produced.
#[derive(Debug, Clone)]
pub struct StepOutput {
    pub state: SolverState,
    pub input: NoisyInput,
    pub divergence: DivergenceEstimate,
}

/// Squared error and energies of an estimate against the true channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LayerError {
    pub squared_error: f64,
    pub estimate_energy: f64,
    pub truth_energy: f64,
}

impl LayerError {
    pub fn new(estimate: &[f64], truth: &[f64]) -> Self {
        Self {
            squared_error: vecops::dist_sq(estimate, truth),
            estimate_energy: vecops::norm_sq(estimate),
            truth_energy: vecops::norm_sq(truth),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerRecord {
    pub layer: usize,
    pub sigma_hat: f64,
    /// Divergence used to produce this layer's residual; `None` at initialisation.
    pub divergence: Option<f64>,
    pub error: Option<LayerError>,
}

/// Per-layer records, starting with the initial state.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SolverTrajectory {
    pub records: Vec<LayerRecord>,
}

impl SolverTrajectory {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn sigma_hats(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.sigma_hat).collect()
    }

    /// `‖ĥ − h‖² / ‖h‖²` per layer, when the truth was supplied.
    pub fn nmse_truth(&self) -> Option<Vec<f64>> {
        self.records
            .iter()
            .map(|r| r.error.map(|e| e.squared_error / e.truth_energy))
            .collect()
    }
}

/// `ĥ⁰ = 0`, `z⁰ = r`.
pub fn init(r: &[f64], mn: usize) -> Result<SolverState> {
    if r.is_empty() {
        return Err(Error::invalid("measurement vector is empty"));
    }
    SolverState::new(vec![0.0; mn], r.to_vec(), 0)
}

/// D-AMP with a fixed operator and denoiser.
pub struct DampSolver<'a> {
    op: &'a MeasurementOperator,
    denoiser: &'a dyn Denoiser,
    onsager: bool,
    probes: usize,
}

impl<'a> DampSolver<'a> {
    pub fn new(op: &'a MeasurementOperator, denoiser: &'a dyn Denoiser) -> Self {
        Self {
            op,
            denoiser,
            onsager: true,
            probes: 1,
        }
    }

    /// Drops the Onsager correction, turning the recursion into plain
    /// iterative denoising. Only useful as an ablation.
    pub fn without_onsager(mut self) -> Self {
        self.onsager = false;
        self
    }

    /// Averages the divergence over `probes` Gaussian probes per layer.
    pub fn with_probes(mut self, probes: usize) -> Self {
        self.probes = probes.max(1);
        self
    }

    pub fn step<R: Rng + ?Sized>(&self, state: &SolverState, r: &[f64], rng: &mut R) -> Result<StepOutput> {
        let k = self.op.k();
        if r.len() != k || state.z.len() != k {
            return Err(Error::invalid(format!(
                "residual/measurement length must equal K = {k}"
            )));
        }
        if state.h_hat.len() != self.op.mn() {
            return Err(Error::invalid(format!("estimate length must equal MN = {}", self.op.mn())));
        }
        let layer = state.layer_index + 1;
        let mut x = self.op.apply_adjoint(&state.z)?;
        for (xi, hi) in x.iter_mut().zip(&state.h_hat) {
            *xi += hi;
        }
        let sigma_hat = state.sigma_hat;
        let h_next = self.denoiser.denoise(&x, sigma_hat)?;
        let divergence = mc_divergence_from(self.denoiser, &x, &h_next, sigma_hat, self.probes, rng)?;
        if !divergence.value.is_finite() {
            return Err(Error::Numeric {
                layer,
                message: format!("divergence estimate is {}", divergence.value),
            });
        }
        let w_h = self.op.apply(&h_next)?;
        let c = if self.onsager { divergence.value / k as f64 } else { 0.0 };
        let z_next: Vec<f64> = r
            .iter()
            .zip(&w_h)
            .zip(&state.z)
            .map(|((ri, whi), zi)| ri - whi + c * zi)
            .collect();
        if z_next.iter().any(|v| !v.is_finite()) || h_next.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric {
                layer,
                message: "non-finite iterate".into(),
            });
        }
        Ok(StepOutput {
            state: SolverState::new(h_next, z_next, layer)?,
            input: NoisyInput(x),
            divergence,
        })
    }

    /// Runs exactly `layers` layers from the zero initialisation.
    pub fn run<R: Rng + ?Sized>(
        &self,
        r: &[f64],
        layers: usize,
        rng: &mut R,
        truth: Option<&[f64]>,
    ) -> Result<(ChannelVector, SolverTrajectory)> {
        if layers == 0 {
            return Err(Error::invalid("layers must be at least 1"));
        }
        if let Some(t) = truth {
            if t.len() != self.op.mn() {
                return Err(Error::invalid("truth length must equal MN"));
            }
        }
        let mut state = init(r, self.op.mn())?;
        let mut trajectory = SolverTrajectory::default();
        let record = |state: &SolverState, divergence: Option<f64>| LayerRecord {
            layer: state.layer_index,
            sigma_hat: state.sigma_hat,
            divergence,
            error: truth.map(|t| LayerError::new(&state.h_hat, t)),
        };
        trajectory.records.push(record(&state, None));
        for _ in 0..layers {
            let out = self.step(&state, r, rng)?;
            state = out.state;
            trajectory.records.push(record(&state, Some(out.divergence.value)));
        }
        Ok((ChannelVector(state.h_hat), trajectory))
    }
}

/// Rescales `(W, r)` to `(A, r')` with `A = W √(MN/K)` and `r' = r √(MN/K)`.
///
/// The noise variance in `r'` is `σ_n² MN/K`.
pub fn normalize_system(op: &MeasurementOperator, r: &[f64]) -> Result<(MeasurementOperator, Vec<f64>)> {
    if r.len() != op.k() {
        return Err(Error::invalid(format!("expected {} measurements, got {}", op.k(), r.len())));
    }
    let (a, gain) = op.column_normalized();
    Ok((a, r.iter().map(|v| v * gain).collect()))
}

/// Estimates the channel from measurements taken with the selection network.
pub fn estimate_channel<R: Rng + ?Sized>(
    op: &MeasurementOperator,
    r: &[f64],
    denoiser: &dyn Denoiser,
    layers: usize,
    rng: &mut R,
    truth: Option<&[f64]>,
) -> Result<(ChannelVector, SolverTrajectory)> {
    let (a, r_a) = normalize_system(op, r)?;
    DampSolver::new(&a, denoiser).run(&r_a, layers, rng, truth)
}

pub fn layer_step<R: Rng + ?Sized>(
    state: &SolverState,
    op: &MeasurementOperator,
    r: &[f64],
    denoiser: &dyn Denoiser,
    rng: &mut R,
) -> Result<SolverState> {
    Ok(DampSolver::new(op, denoiser).step(state, r, rng)?.state)
}

pub fn run<R: Rng + ?Sized>(
    r: &[f64],
    op: &MeasurementOperator,
    denoiser: &dyn Denoiser,
    layers: usize,
    rng: &mut R,
    truth: Option<&[f64]>,
) -> Result<(ChannelVector, SolverTrajectory)> {
    DampSolver::new(op, denoiser).run(r, layers, rng, truth)
}
