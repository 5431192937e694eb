//! Forward-only DnCNN engine.
//!
//! The network is a stack of 3x3 same-padding convolutions with ReLU between
//! them. Batch-norm is folded into the convolution weights before export, so
//! the runtime only knows conv, bias and ReLU. The network predicts the noise
//! residual; the denoised image is the input minus that residual.
//!
//! Weight file layout (little-endian, no padding):
//!
//! ```text
//! "DNCW" | version u32 = 1 | num_layers u32 | affine scale f32 | affine offset f32
//! per layer: in u32 | out u32 | kernel f32[out][in][3][3] | bias f32[out]
//! ```

use std::fs::{self, File};
use std::io::{BufReader, Read, Write};
use std::path::Path;
use std::sync::Arc;

use rayon::prelude::*;

use crate::channel::{read_u32, ChannelImage};
use crate::denoise::Denoiser;
use crate::error::{Error, Result};

const WEIGHTS_MAGIC: &[u8; 4] = b"DNCW";
const WEIGHTS_VERSION: u32 = 1;
const FIXTURE_MAGIC: &[u8; 4] = b"DNPF";
const FIXTURE_VERSION: u32 = 1;

pub const KERNEL_TAPS: usize = 9;
pub const HIDDEN_WIDTH: usize = 64;
pub const DEFAULT_DEPTH: usize = 20;
/// Max-abs agreement expected between this engine and the trainer's forward pass.
pub const PARITY_TOLERANCE: f32 = 1e-4;

/// One 3x3 convolution with bias.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvLayer {
    in_channels: usize,
    out_channels: usize,
    /// `[out][in][3][3]`, rows then columns within each 3x3 tap block.
    kernel: Vec<f32>,
    bias: Vec<f32>,
}

impl ConvLayer {
    pub fn new(in_channels: usize, out_channels: usize, kernel: Vec<f32>, bias: Vec<f32>) -> Result<Self> {
        if in_channels == 0 || out_channels == 0 {
            return Err(Error::invalid("channel counts must be positive"));
        }
        if kernel.len() != out_channels * in_channels * KERNEL_TAPS {
            return Err(Error::invalid(format!(
                "kernel has {} values, expected {}x{}x3x3",
                kernel.len(),
                out_channels,
                in_channels
            )));
        }
        if bias.len() != out_channels {
            return Err(Error::invalid(format!("bias has {} values, expected {out_channels}", bias.len())));
        }
        Ok(Self {
            in_channels,
            out_channels,
            kernel,
            bias,
        })
    }

    pub fn zeros(in_channels: usize, out_channels: usize) -> Self {
        Self {
            in_channels,
            out_channels,
            kernel: vec![0.0; in_channels * out_channels * KERNEL_TAPS],
            bias: vec![0.0; out_channels],
        }
    }

    pub fn in_channels(&self) -> usize {
        self.in_channels
    }

    pub fn out_channels(&self) -> usize {
        self.out_channels
    }

    pub fn kernel(&self) -> &[f32] {
        &self.kernel
    }

    pub fn kernel_mut(&mut self) -> &mut [f32] {
        &mut self.kernel
    }

    pub fn bias(&self) -> &[f32] {
        &self.bias
    }

    pub fn bias_mut(&mut self) -> &mut [f32] {
        &mut self.bias
    }

    fn taps(&self, out: usize, input: usize) -> &[f32] {
        let start = (out * self.in_channels + input) * KERNEL_TAPS;
        &self.kernel[start..start + KERNEL_TAPS]
    }
}

/// Affine map from channel units into the network's training domain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InputAffine {
    pub scale: f32,
    pub offset: f32,
}

impl InputAffine {
    pub const IDENTITY: InputAffine = InputAffine { scale: 1.0, offset: 0.0 };
}

/// Validated network weights.
#[derive(Debug, Clone, PartialEq)]
pub struct DnCnnWeights {
    layers: Vec<ConvLayer>,
    affine: InputAffine,
}

fn check_layer_shape(index: usize, count: usize, in_ch: usize, out_ch: usize, prev_out: Option<usize>) -> Result<()> {
    let fail = |message: String| Err(Error::Validation { layer: index, message });
    let last = index + 1 == count;
    let expected_in = prev_out.unwrap_or(1);
    let expected_out = if last { 1 } else { HIDDEN_WIDTH };
    if in_ch != expected_in {
        return fail(format!("in_channels = {in_ch}, expected {expected_in}"));
    }
    if out_ch != expected_out {
        return fail(format!("out_channels = {out_ch}, expected {expected_out}"));
    }
    Ok(())
}

impl DnCnnWeights {
    pub fn new(layers: Vec<ConvLayer>, affine: InputAffine) -> Result<Self> {
        if layers.len() < 2 {
            return Err(Error::Validation {
                layer: 0,
                message: format!("need at least 2 layers, got {}", layers.len()),
            });
        }
        if !(affine.scale.is_finite() && affine.offset.is_finite()) || affine.scale == 0.0 {
            return Err(Error::Validation {
                layer: 0,
                message: format!("invalid input affine {affine:?}"),
            });
        }
        let mut prev_out = None;
        for (i, layer) in layers.iter().enumerate() {
            check_layer_shape(i, layers.len(), layer.in_channels, layer.out_channels, prev_out)?;
            if layer.kernel.iter().chain(&layer.bias).any(|v| !v.is_finite()) {
                return Err(Error::Validation {
                    layer: i,
                    message: "non-finite parameter".into(),
                });
            }
            prev_out = Some(layer.out_channels);
        }
        Ok(Self { layers, affine })
    }

    /// An all-zero network of the given depth; it predicts a zero residual.
    pub fn zeros(num_layers: usize, affine: InputAffine) -> Result<Self> {
        let layers = (0..num_layers)
            .map(|i| {
                let in_ch = if i == 0 { 1 } else { HIDDEN_WIDTH };
                let out_ch = if i + 1 == num_layers { 1 } else { HIDDEN_WIDTH };
                ConvLayer::zeros(in_ch, out_ch)
            })
            .collect();
        Self::new(layers, affine)
    }

    pub fn num_layers(&self) -> usize {
        self.layers.len()
    }

    pub fn layers(&self) -> &[ConvLayer] {
        &self.layers
    }

    pub fn affine(&self) -> InputAffine {
        self.affine
    }

    /// Applies `f` to a copy of the layers and re-validates.
    pub fn map_layers(&self, f: impl FnOnce(&mut [ConvLayer])) -> Result<Self> {
        let mut layers = self.layers.clone();
        f(&mut layers);
        Self::new(layers, self.affine)
    }

    pub fn write<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        w.write_all(WEIGHTS_MAGIC)?;
        w.write_all(&WEIGHTS_VERSION.to_le_bytes())?;
        w.write_all(&(self.layers.len() as u32).to_le_bytes())?;
        w.write_all(&self.affine.scale.to_le_bytes())?;
        w.write_all(&self.affine.offset.to_le_bytes())?;
        for layer in &self.layers {
            w.write_all(&(layer.in_channels as u32).to_le_bytes())?;
            w.write_all(&(layer.out_channels as u32).to_le_bytes())?;
            write_f32s(&mut w, &layer.kernel)?;
            write_f32s(&mut w, &layer.bias)?;
        }
        w.flush()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::new();
        self.write(&mut buf).expect("writing to a Vec cannot fail");
        buf
    }

    /// Writes to a temporary sibling and renames it into place.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let tmp = path.with_extension("tmp");
        fs::write(&tmp, self.to_bytes()).map_err(|e| Error::io(&tmp, e))?;
        fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
    }

    pub fn read<R: Read>(mut r: R) -> Result<Self> {
        read_weights(&mut r, Path::new("<stream>"))
    }
}

fn write_f32s<W: Write>(w: &mut W, values: &[f32]) -> std::io::Result<()> {
    for v in values {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

fn read_f32s<R: Read>(r: &mut R, count: usize) -> std::io::Result<Vec<f32>> {
    let mut buf = vec![0u8; 4 * count];
    r.read_exact(&mut buf)?;
    Ok(buf
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect())
}

fn read_weights<R: Read>(r: &mut R, path: &Path) -> Result<DnCnnWeights> {
    let io = |e| Error::io(path, e);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic).map_err(io)?;
    if &magic != WEIGHTS_MAGIC {
        return Err(Error::Format(format!("bad weight magic {magic:?}")));
    }
    let version = read_u32(r).map_err(io)?;
    if version != WEIGHTS_VERSION {
        return Err(Error::Format(format!("unsupported weight version {version}")));
    }
    let num_layers = read_u32(r).map_err(io)? as usize;
    let scale = read_f32s(r, 1).map_err(io)?[0];
    let offset = read_f32s(r, 1).map_err(io)?[0];
    if num_layers < 2 {
        return Err(Error::Validation {
            layer: 0,
            message: format!("need at least 2 layers, got {num_layers}"),
        });
    }
    let mut layers = Vec::with_capacity(num_layers);
    let mut prev_out = None;
    for i in 0..num_layers {
        let in_ch = read_u32(r).map_err(io)? as usize;
        let out_ch = read_u32(r).map_err(io)? as usize;
        // Shapes are checked before anything is allocated from them.
        check_layer_shape(i, num_layers, in_ch, out_ch, prev_out)?;
        let kernel = read_f32s(r, in_ch * out_ch * KERNEL_TAPS).map_err(io)?;
        let bias = read_f32s(r, out_ch).map_err(io)?;
        layers.push(ConvLayer::new(in_ch, out_ch, kernel, bias)?);
        prev_out = Some(out_ch);
    }
    DnCnnWeights::new(layers, InputAffine { scale, offset })
}

pub fn load_weights(path: impl AsRef<Path>) -> Result<DnCnnWeights> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_weights(&mut BufReader::new(file), path)
}

/// Multi-channel image, channel-major, each plane row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap {
    channels: usize,
    height: usize,
    width: usize,
    data: Vec<f32>,
}

impl FeatureMap {
    pub fn new(channels: usize, height: usize, width: usize, data: Vec<f32>) -> Result<Self> {
        if channels == 0 || height == 0 || width == 0 {
            return Err(Error::invalid("feature map dimensions must be positive"));
        }
        if data.len() != channels * height * width {
            return Err(Error::invalid(format!(
                "feature map expects {} values, got {}",
                channels * height * width,
                data.len()
            )));
        }
        Ok(Self {
            channels,
            height,
            width,
            data,
        })
    }

    /// Single-channel map from a channel image, `height = rows`, `width = cols`.
    pub fn from_image(image: &ChannelImage, affine: InputAffine) -> Self {
        let (h, w) = (image.rows(), image.cols());
        let mut data = vec![0.0f32; h * w];
        for q in 0..w {
            for p in 0..h {
                data[p * w + q] = affine.scale * image.get(p, q) as f32 + affine.offset;
            }
        }
        Self {
            channels: 1,
            height: h,
            width: w,
            data,
        }
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn plane(&self, c: usize) -> &[f32] {
        let size = self.height * self.width;
        &self.data[c * size..(c + 1) * size]
    }

    pub fn get(&self, c: usize, y: usize, x: usize) -> f32 {
        self.data[(c * self.height + y) * self.width + x]
    }

    fn relu_in_place(&mut self) {
        for v in &mut self.data {
            *v = v.max(0.0);
        }
    }

    fn to_image(&self, channel: usize, map: impl Fn(f32) -> f64) -> Result<ChannelImage> {
        let (h, w) = (self.height, self.width);
        let plane = self.plane(channel);
        let mut data = vec![0.0f64; h * w];
        for p in 0..h {
            for q in 0..w {
                data[q * h + p] = map(plane[p * w + q]);
            }
        }
        ChannelImage::from_column_major(h, w, data)
    }
}

/// 3x3 cross-correlation with zero padding 1 and stride 1, plus per-channel bias.
pub fn conv2d_same(input: &FeatureMap, layer: &ConvLayer) -> Result<FeatureMap> {
    if layer.in_channels != input.channels {
        return Err(Error::invalid(format!(
            "layer expects {} input channels, feature map has {}",
            layer.in_channels, input.channels
        )));
    }
    let (h, w) = (input.height, input.width);
    let size = h * w;
    let mut data = vec![0.0f32; layer.out_channels * size];
    data.par_chunks_mut(size).enumerate().for_each(|(o, out)| {
        out.fill(layer.bias[o]);
        for i in 0..layer.in_channels {
            let src = input.plane(i);
            let taps = layer.taps(o, i);
            for dy in 0..3usize {
                for dx in 0..3usize {
                    let k = taps[dy * 3 + dx];
                    if k == 0.0 {
                        continue;
                    }
                    // Output (y, x) reads input (y + dy - 1, x + dx - 1).
                    let y_lo = 1usize.saturating_sub(dy);
                    let y_hi = (h + 1 - dy).min(h);
                    let x_lo = 1usize.saturating_sub(dx);
                    let x_hi = (w + 1 - dx).min(w);
                    if x_lo >= x_hi {
                        continue;
                    }
                    for y in y_lo..y_hi {
                        let sy = y + dy - 1;
                        let dst = &mut out[y * w + x_lo..y * w + x_hi];
                        let s = &src[sy * w + x_lo + dx - 1..sy * w + x_hi + dx - 1];
                        for (d, &v) in dst.iter_mut().zip(s) {
                            *d += k * v;
                        }
                    }
                }
            }
        }
    });
    FeatureMap::new(layer.out_channels, h, w, data)
}

/// Output of one forward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct DnCnnOutput {
    /// Predicted noise, in the network's training domain.
    pub residual: ChannelImage,
    /// Input minus residual, mapped back to channel units.
    pub denoised: ChannelImage,
}

/// Runs the network on the input image mapped through the weights' affine.
pub fn residual_map(noisy: &FeatureMap, weights: &DnCnnWeights) -> Result<FeatureMap> {
    let last = weights.layers.len() - 1;
    let mut act = conv2d_same(noisy, &weights.layers[0])?;
    if last > 0 {
        act.relu_in_place();
    }
    for (i, layer) in weights.layers.iter().enumerate().skip(1) {
        act = conv2d_same(&act, layer)?;
        if i != last {
            act.relu_in_place();
        }
    }
    Ok(act)
}

pub fn dncnn_forward(noisy_image: &ChannelImage, weights: &DnCnnWeights) -> Result<DnCnnOutput> {
    let affine = weights.affine;
    let input = FeatureMap::from_image(noisy_image, affine);
    let residual = residual_map(&input, weights)?;
    let residual_image = residual.to_image(0, f64::from)?;
    let (h, w) = (input.height, input.width);
    let mut cleaned = vec![0.0f32; h * w];
    for ((c, &x), &r) in cleaned.iter_mut().zip(&input.data).zip(residual.plane(0)) {
        *c = x - r;
    }
    let cleaned = FeatureMap::new(1, h, w, cleaned)?;
    let denoised = cleaned.to_image(0, |v| f64::from((v - affine.offset) / affine.scale))?;
    Ok(DnCnnOutput {
        residual: residual_image,
        denoised,
    })
}

/// Blind [`Denoiser`] backed by a DnCNN.
///
/// Vectors are reshaped column-major into `rows x cols`; without an explicit
/// shape the input must have a perfect-square length.
#[derive(Debug, Clone)]
pub struct DnCnnDenoiser {
    weights: Arc<DnCnnWeights>,
    shape: Option<(usize, usize)>,
}

impl DnCnnDenoiser {
    pub fn new(weights: Arc<DnCnnWeights>) -> Self {
        Self { weights, shape: None }
    }

    pub fn with_shape(weights: Arc<DnCnnWeights>, rows: usize, cols: usize) -> Self {
        Self {
            weights,
            shape: Some((rows, cols)),
        }
    }

    fn shape_for(&self, len: usize) -> Result<(usize, usize)> {
        match self.shape {
            Some((r, c)) if r * c == len => Ok((r, c)),
            Some((r, c)) => Err(Error::invalid(format!("input of length {len} does not fit {r}x{c}"))),
            None => {
                let side = (len as f64).sqrt().round() as usize;
                if side > 0 && side * side == len {
                    Ok((side, side))
                } else {
                    Err(Error::invalid(format!("input of length {len} is not a square image")))
                }
            }
        }
    }
}

impl Denoiser for DnCnnDenoiser {
    fn name(&self) -> &str {
        "dncnn"
    }

    fn denoise(&self, x: &[f64], _sigma_hat: f64) -> Result<Vec<f64>> {
        let (rows, cols) = self.shape_for(x.len())?;
        let image = ChannelImage::from_column_major(rows, cols, x.to_vec())?;
        let out = dncnn_forward(&image, &self.weights)?;
        Ok(out.denoised.as_column_major().to_vec())
    }
}

/// Input and reference residual exported by the trainer for parity checks.
#[derive(Debug, Clone, PartialEq)]
pub struct ParityFixture {
    pub m: usize,
    pub n: usize,
    /// Column-major, in the network's training domain.
    pub input: Vec<f32>,
    /// Column-major.
    pub residual: Vec<f32>,
}

impl ParityFixture {
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
        if &magic != FIXTURE_MAGIC {
            return Err(Error::Format(format!("bad fixture magic {magic:?}")));
        }
        let version = read_u32(r).map_err(io)?;
        if version != FIXTURE_VERSION {
            return Err(Error::Format(format!("unsupported fixture version {version}")));
        }
        let m = read_u32(r).map_err(io)? as usize;
        let n = read_u32(r).map_err(io)? as usize;
        if m == 0 || n == 0 {
            return Err(Error::Format(format!("degenerate fixture {m}x{n}")));
        }
        let input = read_f32s(r, m * n).map_err(io)?;
        let residual = read_f32s(r, m * n).map_err(io)?;
        Ok(Self { m, n, input, residual })
    }

    pub fn write<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        w.write_all(FIXTURE_MAGIC)?;
        w.write_all(&FIXTURE_VERSION.to_le_bytes())?;
        w.write_all(&(self.m as u32).to_le_bytes())?;
        w.write_all(&(self.n as u32).to_le_bytes())?;
        write_f32s(&mut w, &self.input)?;
        write_f32s(&mut w, &self.residual)?;
        w.flush()
    }

    /// Runs this engine on the fixture input and returns the max-abs residual gap.
    pub fn max_abs_deviation(&self, weights: &DnCnnWeights) -> Result<f32> {
        let mut data = vec![0.0f32; self.m * self.n];
        for q in 0..self.n {
            for p in 0..self.m {
                data[p * self.n + q] = self.input[q * self.m + p];
            }
        }
        let map = FeatureMap::new(1, self.m, self.n, data)?;
        let out = residual_map(&map, weights)?;
        let mut worst = 0.0f32;
        for q in 0..self.n {
            for p in 0..self.m {
                worst = worst.max((out.get(0, p, q) - self.residual[q * self.m + p]).abs());
            }
        }
        Ok(worst)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single(h: usize, w: usize, data: Vec<f32>) -> FeatureMap {
        FeatureMap::new(1, h, w, data).unwrap()
    }

    #[test]
    fn identity_kernel() {
        let mut k = vec![0.0; 9];
        k[4] = 1.0;
        let layer = ConvLayer::new(1, 1, k, vec![0.0]).unwrap();
        let input = single(3, 4, (0..12).map(|v| v as f32).collect());
        assert_eq!(conv2d_same(&input, &layer).unwrap(), input);
    }

    #[test]
    fn bias_only() {
        let layer = ConvLayer::new(1, 1, vec![0.0; 9], vec![2.5]).unwrap();
        let out = conv2d_same(&single(2, 2, vec![1.0, -3.0, 7.0, 0.0]), &layer).unwrap();
        assert_eq!(out.data(), &[2.5; 4]);
    }

    #[test]
    fn hand_worked_3x3() {
        // input          kernel
        // 1 2 3          0 1 0
        // 4 5 6          1 2 0
        // 7 8 9          0 0 -1
        let input = single(3, 3, (1..=9).map(|v| v as f32).collect());
        let layer = ConvLayer::new(1, 1, vec![0.0, 1.0, 0.0, 1.0, 2.0, 0.0, 0.0, 0.0, -1.0], vec![0.5]).unwrap();
        let out = conv2d_same(&input, &layer).unwrap();
        // out(y,x) = in(y-1,x) + in(y,x-1) + 2 in(y,x) - in(y+1,x+1) + 0.5
        let expected = [-2.5, -0.5, 8.5, 1.5, 7.5, 20.5, 18.5, 28.5, 32.5];
        assert_eq!(out.data(), &expected);
    }

    #[test]
    fn channel_mismatch_is_rejected() {
        let layer = ConvLayer::zeros(2, 1);
        assert!(conv2d_same(&single(2, 2, vec![0.0; 4]), &layer).is_err());
    }

    #[test]
    fn zero_network_returns_input() {
        let w = DnCnnWeights::zeros(3, InputAffine { scale: 0.5, offset: 0.25 }).unwrap();
        let img = ChannelImage::from_rows(&[vec![1.0, -2.0], vec![0.5, 4.0]]).unwrap();
        let out = dncnn_forward(&img, &w).unwrap();
        assert!(out.residual.as_column_major().iter().all(|&v| v == 0.0));
        for (a, b) in out.denoised.as_column_major().iter().zip(img.as_column_major()) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn validation_names_the_layer() {
        let mut layers: Vec<ConvLayer> = DnCnnWeights::zeros(4, InputAffine::IDENTITY).unwrap().layers().to_vec();
        layers[2] = ConvLayer::zeros(HIDDEN_WIDTH, 32);
        match DnCnnWeights::new(layers, InputAffine::IDENTITY) {
            Err(Error::Validation { layer, .. }) => assert_eq!(layer, 2),
            other => panic!("unexpected {other:?}"),
        }
        assert!(DnCnnWeights::zeros(1, InputAffine::IDENTITY).is_err());
        assert!(DnCnnWeights::zeros(3, InputAffine { scale: 0.0, offset: 0.0 }).is_err());
    }

    #[test]
    fn weight_bytes_reject_bad_magic_and_truncation() {
        let bytes = DnCnnWeights::zeros(3, InputAffine::IDENTITY).unwrap().to_bytes();
        let mut bad = bytes.clone();
        bad[..4].copy_from_slice(b"XXXX");
        assert!(matches!(DnCnnWeights::read(bad.as_slice()), Err(Error::Format(_))));
        let short = &bytes[..bytes.len() - 10];
        assert!(matches!(DnCnnWeights::read(short), Err(Error::Io { .. })));
    }

    #[test]
    fn adapter_shapes() {
        let w = Arc::new(DnCnnWeights::zeros(2, InputAffine::IDENTITY).unwrap());
        let d = DnCnnDenoiser::new(w.clone());
        assert!(d.denoise(&[0.0; 12], 1.0).is_err());
        assert_eq!(d.denoise(&[1.0; 16], 1.0).unwrap().len(), 16);
        let rect = DnCnnDenoiser::with_shape(w, 3, 4);
        assert_eq!(rect.denoise(&[1.0; 12], 1.0).unwrap().len(), 12);
        assert!(rect.denoise(&[1.0; 16], 1.0).is_err());
    }

    #[test]
    fn fixture_round_trip() {
        let fx = ParityFixture {
            m: 2,
            n: 3,
            input: vec![0.1, 0.2, 0.3, 0.4, 0.5, 0.6],
            residual: vec![0.0; 6],
        };
        let mut buf = Vec::new();
        fx.write(&mut buf).unwrap();
        assert_eq!(ParityFixture::read(buf.as_slice()).unwrap(), fx);
        let w = DnCnnWeights::zeros(2, InputAffine::IDENTITY).unwrap();
        assert_eq!(fx.max_abs_deviation(&w).unwrap(), 0.0);
    }
}
