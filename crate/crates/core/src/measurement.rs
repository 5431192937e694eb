//! Selection network and compressed measurements `r = W h + n`.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

/// Dense `K x MN` matrix of `±1/√(MN)` entries, stored as signs plus a scale.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementOperator {
    k: usize,
    mn: usize,
    /// Row-major signs.
    signs: Vec<i8>,
    scale: f64,
}

impl MeasurementOperator {
    /// Builds an operator from explicit row-major signs.
    pub fn from_signs(k: usize, mn: usize, signs: Vec<i8>) -> Result<Self> {
        if k == 0 || k > mn {
            return Err(Error::invalid(format!("k = {k} must lie in [1, {mn}]")));
        }
        if signs.len() != k * mn {
            return Err(Error::invalid(format!("expected {} signs, got {}", k * mn, signs.len())));
        }
        if signs.iter().any(|&s| s != 1 && s != -1) {
            return Err(Error::invalid("signs must be +1 or -1"));
        }
        Ok(Self {
            k,
            mn,
            signs,
            scale: 1.0 / (mn as f64).sqrt(),
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn mn(&self) -> usize {
        self.mn
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn sign(&self, row: usize, col: usize) -> i8 {
        self.signs[row * self.mn + col]
    }

    /// Effective matrix entry `W[row, col]`.
    pub fn entry(&self, row: usize, col: usize) -> f64 {
        f64::from(self.sign(row, col)) * self.scale
    }

    /// The same signs scaled by `1/√K`, which gives every column exactly unit
    /// norm, together with the factor `√(MN/K)` that maps measurements taken
    /// with `self` onto the rescaled operator.
    pub fn column_normalized(&self) -> (MeasurementOperator, f64) {
        let gain = (self.mn as f64 / self.k as f64).sqrt();
        let op = MeasurementOperator {
            k: self.k,
            mn: self.mn,
            signs: self.signs.clone(),
            scale: 1.0 / (self.k as f64).sqrt(),
        };
        (op, gain)
    }

    fn row(&self, i: usize) -> &[i8] {
        &self.signs[i * self.mn..(i + 1) * self.mn]
    }

    /// `W h`.
    pub fn apply(&self, h: &[f64]) -> Result<Vec<f64>> {
        if h.len() != self.mn {
            return Err(Error::invalid(format!("apply: expected length {}, got {}", self.mn, h.len())));
        }
        Ok((0..self.k)
            .map(|i| {
                let acc: f64 = self.row(i).iter().zip(h).map(|(&s, &v)| f64::from(s) * v).sum();
                acc * self.scale
            })
            .collect())
    }

    /// `Wᵀ z`.
    pub fn apply_adjoint(&self, z: &[f64]) -> Result<Vec<f64>> {
        if z.len() != self.k {
            return Err(Error::invalid(format!(
                "apply_adjoint: expected length {}, got {}",
                self.k,
                z.len()
            )));
        }
        let mut out = vec![0.0; self.mn];
        for (i, &zi) in z.iter().enumerate() {
            let c = zi * self.scale;
            for (o, &s) in out.iter_mut().zip(self.row(i)) {
                *o += f64::from(s) * c;
            }
        }
        Ok(out)
    }
}

/// Samples i.i.d. equiprobable signs for a `k x (m n)` selection network.
pub fn sample_selection_network<R: Rng + ?Sized>(k: usize, m: usize, n: usize, rng: &mut R) -> Result<MeasurementOperator> {
    let mn = m * n;
    if k == 0 || k > mn {
        return Err(Error::invalid(format!("k = {k} must lie in [1, {mn}]")));
    }
    let mut signs = Vec::with_capacity(k * mn);
    while signs.len() < k * mn {
        let bits: u64 = rng.random();
        let take = (k * mn - signs.len()).min(64);
        signs.extend((0..take).map(|b| if (bits >> b) & 1 == 1 { 1i8 } else { -1i8 }));
    }
    MeasurementOperator::from_signs(k, mn, signs)
}

/// `r = W h + n̄` with `n̄ ~ N(0, σ_n² I_K)` drawn directly in measurement space.
pub fn measure<R: Rng + ?Sized>(op: &MeasurementOperator, h: &[f64], sigma_n: f64, rng: &mut R) -> Result<Vec<f64>> {
    if !(sigma_n >= 0.0) {
        return Err(Error::invalid(format!("sigma_n = {sigma_n} must be non-negative")));
    }
    let mut r = op.apply(h)?;
    if sigma_n > 0.0 {
        for v in &mut r {
            let e: f64 = StandardNormal.sample(rng);
            *v += sigma_n * e;
        }
    }
    Ok(r)
}

/// Noise standard deviation for a given SNR, taking unit per-entry channel energy.
pub fn snr_to_sigma(snr_db: f64) -> f64 {
    10f64.powf(-snr_db / 20.0)
}

/// Measurement ratio and SNR for one experiment point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasurementConfig {
    delta: f64,
    snr_db: f64,
    seed: u64,
}

impl MeasurementConfig {
    pub fn new(delta: f64, snr_db: f64, seed: u64) -> Result<Self> {
        if !(delta > 0.0 && delta <= 1.0) {
            return Err(Error::invalid(format!("delta = {delta} must lie in (0, 1]")));
        }
        if !snr_db.is_finite() {
            return Err(Error::invalid("snr_db must be finite"));
        }
        Ok(Self { delta, snr_db, seed })
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn snr_db(&self) -> f64 {
        self.snr_db
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn sigma_n(&self) -> f64 {
        snr_to_sigma(self.snr_db)
    }

    /// Number of RF chains, `round(delta * mn)` clamped to at least one.
    pub fn num_rf_chains(&self, mn: usize) -> usize {
        rf_chains(self.delta, mn)
    }
}

pub fn rf_chains(delta: f64, mn: usize) -> usize {
    ((delta * mn as f64).round() as usize).clamp(1, mn)
}
