//! Saleh-Valenzuela beamspace channels.
//!
//! A channel is a sum of `P + 1` paths, each a real gain times the response of
//! a lens array to a plane wave. The response is modelled as a separable sinc
//! kernel centred on the path's spatial frequency, normalised to unit
//! Frobenius norm, so the beamspace image is sparse but leaks into
//! neighbouring beams when a path falls between grid points.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::rng::sub_rng;
use crate::vecops;

/// Default lens dimensions.
pub const DEFAULT_M: usize = 64;
pub const DEFAULT_N: usize = 64;
/// One line-of-sight path plus three scattered paths.
pub const DEFAULT_NUM_PATHS: usize = 4;

const DATASET_MAGIC: &[u8; 4] = b"BCHD";
const DATASET_VERSION: u32 = 1;

fn check_freq(name: &str, f: f64) -> Result<()> {
    if (-0.5..0.5).contains(&f) {
        Ok(())
    } else {
        Err(Error::invalid(format!("{name} = {f} outside [-1/2, 1/2)")))
    }
}

/// Gain and spatial frequencies of one propagation path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathParameters {
    gain: f64,
    azimuth_freq: f64,
    elevation_freq: f64,
}

impl PathParameters {
    pub fn new(gain: f64, azimuth_freq: f64, elevation_freq: f64) -> Result<Self> {
        check_freq("azimuth_freq", azimuth_freq)?;
        check_freq("elevation_freq", elevation_freq)?;
        if !gain.is_finite() {
            return Err(Error::invalid("path gain must be finite"));
        }
        Ok(Self {
            gain,
            azimuth_freq,
            elevation_freq,
        })
    }

    pub fn gain(&self) -> f64 {
        self.gain
    }

    pub fn azimuth_freq(&self) -> f64 {
        self.azimuth_freq
    }

    pub fn elevation_freq(&self) -> f64 {
        self.elevation_freq
    }
}

/// Real `rows x cols` beamspace matrix, stored column-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelImage {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl ChannelImage {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    /// Builds an image from column-major entries.
    pub fn from_column_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::invalid("image dimensions must be positive"));
        }
        if data.len() != rows * cols {
            return Err(Error::invalid(format!(
                "expected {} entries for a {rows}x{cols} image, got {}",
                rows * cols,
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("image entries must be finite"));
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds an image from a row-major nested vector.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let m = rows.len();
        let n = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::invalid("ragged rows"));
        }
        let mut data = vec![0.0; m * n];
        for (p, row) in rows.iter().enumerate() {
            for (q, &v) in row.iter().enumerate() {
                data[q * m + p] = v;
            }
        }
        Self::from_column_major(m, n, data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[col * self.rows + row]
    }

    pub fn as_column_major(&self) -> &[f64] {
        &self.data
    }

    pub fn frobenius_norm(&self) -> f64 {
        vecops::norm(&self.data)
    }

    pub fn vectorize(&self) -> ChannelVector {
        ChannelVector(self.data.clone())
    }
}

/// Column-major vectorisation of a [`ChannelImage`].
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelVector(pub Vec<f64>);

impl ChannelVector {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn norm(&self) -> f64 {
        vecops::norm(&self.0)
    }

    pub fn devectorize(&self, rows: usize, cols: usize) -> Result<ChannelImage> {
        ChannelImage::from_column_major(rows, cols, self.0.clone())
    }
}

pub fn vectorize(image: &ChannelImage) -> ChannelVector {
    image.vectorize()
}

pub fn devectorize(vector: &ChannelVector, rows: usize, cols: usize) -> Result<ChannelImage> {
    vector.devectorize(rows, cols)
}

/// Draws `num_paths` paths with N(0,1) gains and uniform spatial frequencies.
pub fn sample_paths<R: Rng + ?Sized>(rng: &mut R, num_paths: usize) -> Result<Vec<PathParameters>> {
    if num_paths == 0 {
        return Err(Error::invalid("num_paths must be at least 1"));
    }
    Ok((0..num_paths)
        .map(|_| {
            let gain: f64 = StandardNormal.sample(rng);
            let azimuth_freq = rng.random_range(-0.5..0.5);
            let elevation_freq = rng.random_range(-0.5..0.5);
            PathParameters {
                gain,
                azimuth_freq,
                elevation_freq,
            }
        })
        .collect())
}

fn sinc(t: f64) -> f64 {
    if t == 0.0 {
        1.0
    } else {
        let pt = std::f64::consts::PI * t;
        pt.sin() / pt
    }
}

/// Sinc kernel sampled on the centred grid `k - (len-1)/2`, peaking at `len * freq`.
fn sinc_profile(freq: f64, len: usize) -> Vec<f64> {
    let centre = (len as f64 - 1.0) / 2.0;
    let target = len as f64 * freq;
    (0..len).map(|k| sinc(k as f64 - centre - target)).collect()
}

/// Lens array response for one plane wave, normalised to unit Frobenius norm.
pub fn array_response(azimuth_freq: f64, elevation_freq: f64, m: usize, n: usize) -> Result<ChannelImage> {
    check_freq("azimuth_freq", azimuth_freq)?;
    check_freq("elevation_freq", elevation_freq)?;
    if m == 0 || n == 0 {
        return Err(Error::invalid("array dimensions must be positive"));
    }
    let row_profile = sinc_profile(azimuth_freq, m);
    let col_profile = sinc_profile(elevation_freq, n);
    // The outer product of two vectors has Frobenius norm ‖u‖·‖v‖.
    let scale = 1.0 / (vecops::norm(&row_profile) * vecops::norm(&col_profile));
    let mut data = Vec::with_capacity(m * n);
    for &c in &col_profile {
        data.extend(row_profile.iter().map(|&r| r * c * scale));
    }
    ChannelImage::from_column_major(m, n, data)
}

/// `H = sqrt(mn / (P+1)) * sum_i gain_i * A(az_i, el_i)`.
pub fn synthesize_channel(paths: &[PathParameters], m: usize, n: usize) -> Result<ChannelImage> {
    if paths.is_empty() {
        return Err(Error::invalid("at least one path is required"));
    }
    let amplitude = ((m * n) as f64 / paths.len() as f64).sqrt();
    let mut data = vec![0.0; m * n];
    for path in paths {
        let response = array_response(path.azimuth_freq, path.elevation_freq, m, n)?;
        let g = amplitude * path.gain;
        for (d, a) in data.iter_mut().zip(response.as_column_major()) {
            *d += g * a;
        }
    }
    ChannelImage::from_column_major(m, n, data)
}

/// Draws one channel realisation from `rng`.
pub fn sample_channel<R: Rng + ?Sized>(rng: &mut R, num_paths: usize, m: usize, n: usize) -> Result<ChannelImage> {
    let paths = sample_paths(rng, num_paths)?;
    synthesize_channel(&paths, m, n)
}

/// A set of channel images sharing one geometry.
///
/// Entries are rounded to `f32` at generation time so that the in-memory
/// dataset and its file representation are identical.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelDataset {
    m: usize,
    n: usize,
    seed: u64,
    samples: Vec<ChannelImage>,
}

impl ChannelDataset {
    pub fn new(m: usize, n: usize, seed: u64, samples: Vec<ChannelImage>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::invalid("dataset must contain at least one sample"));
        }
        if samples.iter().any(|s| s.rows() != m || s.cols() != n) {
            return Err(Error::invalid(format!("every sample must be {m}x{n}")));
        }
        Ok(Self { m, n, seed, samples })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn count(&self) -> usize {
        self.samples.len()
    }

    pub fn samples(&self) -> &[ChannelImage] {
        &self.samples
    }

    pub fn write<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        w.write_all(DATASET_MAGIC)?;
        w.write_all(&DATASET_VERSION.to_le_bytes())?;
        w.write_all(&(self.m as u32).to_le_bytes())?;
        w.write_all(&(self.n as u32).to_le_bytes())?;
        w.write_all(&(self.samples.len() as u32).to_le_bytes())?;
        w.write_all(&self.seed.to_le_bytes())?;
        for sample in &self.samples {
            for &v in sample.as_column_major() {
                w.write_all(&(v as f32).to_le_bytes())?;
            }
        }
        w.flush()
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        self.write(BufWriter::new(file)).map_err(|e| Error::io(path, e))
    }

    pub fn read<R: Read>(mut r: R) -> Result<Self> {
        Self::read_inner(&mut r, Path::new("<stream>"))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_inner(&mut BufReader::new(file), path)
    }

    fn read_inner<R: Read>(r: &mut R, path: &Path) -> Result<Self> {
        let io = |e| Error::io(path, e);
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic).map_err(io)?;
        if &magic != DATASET_MAGIC {
            return Err(Error::Format(format!("bad dataset magic {magic:?}")));
        }
        let version = read_u32(r).map_err(io)?;
        if version != DATASET_VERSION {
            return Err(Error::Format(format!("unsupported dataset version {version}")));
        }
        let m = read_u32(r).map_err(io)? as usize;
        let n = read_u32(r).map_err(io)? as usize;
        let count = read_u32(r).map_err(io)? as usize;
        let mut seed = [0u8; 8];
        r.read_exact(&mut seed).map_err(io)?;
        if m == 0 || n == 0 || count == 0 {
            return Err(Error::Format(format!("degenerate dataset header m={m} n={n} count={count}")));
        }
        let mut buf = vec![0u8; 4 * m * n];
        let mut samples = Vec::with_capacity(count);
        for _ in 0..count {
            r.read_exact(&mut buf).map_err(io)?;
            let data = buf
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
                .collect();
            samples.push(
                ChannelImage::from_column_major(m, n, data).map_err(|e| Error::Format(e.to_string()))?,
            );
        }
        Self::new(m, n, u64::from_le_bytes(seed), samples)
    }
}

pub(crate) fn read_u32<R: Read>(r: &mut R) -> std::io::Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

/// Generates `count` independent channels; sample `i` uses a sub-seed of `(seed, i)`.
pub fn generate_dataset(count: usize, num_paths: usize, m: usize, n: usize, seed: u64) -> Result<ChannelDataset> {
    if count == 0 {
        return Err(Error::invalid("count must be at least 1"));
    }
    if num_paths == 0 {
        return Err(Error::invalid("num_paths must be at least 1"));
    }
    let samples = (0..count)
        .into_par_iter()
        .map(|i| {
            let mut rng = sub_rng(seed, &[i as u64]);
            let h = sample_channel(&mut rng, num_paths, m, n)?;
            let data = h.as_column_major().iter().map(|&v| v as f32 as f64).collect();
            ChannelImage::from_column_major(m, n, data)
        })
        .collect::<Result<Vec<_>>>()?;
    ChannelDataset::new(m, n, seed, samples)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;

    #[test]
    fn four_paths_are_sampled() {
        let mut rng = rng_from_seed(1);
        let paths = sample_paths(&mut rng, 4).unwrap();
        assert_eq!(paths.len(), 4);
        for p in &paths {
            assert!((-0.5..0.5).contains(&p.azimuth_freq()));
            assert!((-0.5..0.5).contains(&p.elevation_freq()));
        }
        assert!(sample_paths(&mut rng, 0).is_err());
    }

    #[test]
    fn path_sampling_is_deterministic() {
        let a = sample_paths(&mut rng_from_seed(9), 4).unwrap();
        let b = sample_paths(&mut rng_from_seed(9), 4).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn gain_moments() {
        let mut rng = rng_from_seed(3);
        let gains: Vec<f64> = sample_paths(&mut rng, 10_000).unwrap().iter().map(|p| p.gain()).collect();
        let mean = gains.iter().sum::<f64>() / gains.len() as f64;
        let var = gains.iter().map(|g| (g - mean).powi(2)).sum::<f64>() / (gains.len() - 1) as f64;
        assert!(mean.abs() < 0.05, "mean {mean}");
        assert!((var - 1.0).abs() < 0.05, "var {var}");
    }

    #[test]
    fn on_grid_response_is_one_hot() {
        // u_1 = -0.5 and v_2 = 0.5 on a 4x4 grid.
        let a = array_response(-0.5 / 4.0, 0.5 / 4.0, 4, 4).unwrap();
        for p in 0..4 {
            for q in 0..4 {
                let expected = if (p, q) == (1, 2) { 1.0 } else { 0.0 };
                assert!((a.get(p, q) - expected).abs() < 1e-15, "({p},{q}) = {}", a.get(p, q));
            }
        }
    }

    #[test]
    fn off_grid_response_spreads() {
        // The 64-point grid sits on half-integers, so integer targets fall midway.
        let a = array_response(1.0 / 64.0, 0.0, 64, 64).unwrap();
        let max = vecops::max_abs(a.as_column_major());
        assert!(max < 0.9, "max {max}");
        let significant = |v: f64| v.abs() > 0.1 * max;
        let cols = (0..64).filter(|&q| (0..64).any(|p| significant(a.get(p, q)))).count();
        let rows = (0..64).filter(|&p| (0..64).any(|q| significant(a.get(p, q)))).count();
        assert!(cols >= 2 && rows >= 2);
        assert!((a.frobenius_norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn response_rejects_out_of_range() {
        assert!(array_response(0.5, 0.0, 4, 4).is_err());
        assert!(array_response(0.0, -0.6, 4, 4).is_err());
    }

    #[test]
    fn single_on_grid_path_has_norm_sqrt_mn() {
        let p = PathParameters::new(1.0, 0.5 / 64.0, -0.5 / 64.0).unwrap();
        let h = synthesize_channel(&[p], 64, 64).unwrap();
        assert!((h.frobenius_norm() - 64.0).abs() < 1e-9);
    }

    #[test]
    fn opposite_paths_cancel() {
        let a = PathParameters::new(1.0, 0.12, -0.3).unwrap();
        let b = PathParameters::new(-1.0, 0.12, -0.3).unwrap();
        let h = synthesize_channel(&[a, b], 16, 16).unwrap();
        assert!(h.as_column_major().iter().all(|&v| v == 0.0));
        assert!(synthesize_channel(&[], 4, 4).is_err());
    }

    #[test]
    fn ensemble_energy_per_entry_near_one() {
        let mut total = 0.0;
        let trials = 1000;
        for t in 0..trials {
            let h = sample_channel(&mut sub_rng(11, &[t]), 4, 64, 64).unwrap();
            total += h.frobenius_norm().powi(2) / 4096.0;
        }
        let mean = total / trials as f64;
        assert!((0.8..=1.2).contains(&mean), "mean {mean}");
    }

    #[test]
    fn vectorize_is_column_major() {
        let h = ChannelImage::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        assert_eq!(h.vectorize().0, vec![1.0, 3.0, 2.0, 4.0]);
        assert!(h.vectorize().devectorize(3, 2).is_err());
    }

    #[test]
    fn dataset_round_trip_and_seeds() {
        let ds = generate_dataset(1, 4, 8, 8, 5).unwrap();
        let mut buf = Vec::new();
        ds.write(&mut buf).unwrap();
        assert_eq!(buf.len(), 28 + 4 * 64);
        let back = ChannelDataset::read(buf.as_slice()).unwrap();
        assert_eq!(back, ds);
        let other = generate_dataset(1, 4, 8, 8, 6).unwrap();
        assert_ne!(other.samples()[0], ds.samples()[0]);
    }

    #[test]
    fn dataset_rejects_bad_magic_and_truncation() {
        let ds = generate_dataset(2, 4, 4, 4, 1).unwrap();
        let mut buf = Vec::new();
        ds.write(&mut buf).unwrap();
        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(matches!(ChannelDataset::read(bad.as_slice()), Err(Error::Format(_))));
        buf.truncate(buf.len() - 3);
        assert!(matches!(ChannelDataset::read(buf.as_slice()), Err(Error::Io { .. })));
        assert!(generate_dataset(0, 4, 4, 4, 1).is_err());
    }
}
