//! Beamspace mmWave massive MIMO channel estimation.
//!
//! The crate reconstructs an `M x N` beamspace channel from `K << MN`
//! RF-chain measurements with the denoising approximate message passing
//! recursion, using either analytic denoisers or a DnCNN loaded from disk,
//! and predicts per-layer error with a state-evolution recursion.
//!
//! Module map:
//!
//! * [`channel`] - Saleh-Valenzuela beamspace channels and dataset files.
//! * [`measurement`] - the `±1/√(MN)` selection network and noisy measurements.
//! * [`denoise`] - the [`Denoiser`] trait, analytic denoisers and the
//!   Monte-Carlo divergence estimator.
//! * [`cnn`] - a forward-only DnCNN engine and its weight file format.
//! * [`solver`] - the layered D-AMP / LDAMP recursion.
//! * [`se`] - state evolution.
//! * [`bench`] - NMSE, sweeps and CSV output used by the `ldamp` binary.

pub mod bench;
pub mod channel;
pub mod cnn;
pub mod denoise;
pub mod error;
pub mod measurement;
pub mod rng;
pub mod se;
pub mod solver;
mod vecops;

pub use channel::{ChannelDataset, ChannelImage, ChannelVector, PathParameters};
pub use denoise::{Denoiser, DivergenceEstimate};
pub use error::{Error, Result};
pub use measurement::{MeasurementConfig, MeasurementOperator};
