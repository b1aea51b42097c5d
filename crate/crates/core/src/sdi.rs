//! Multi-scale semantics-and-detail infusion guided by a topology attention map.
//!
//! Per scale `j`: an attention hook (identity unless supplied), a 1x1 channel
//! reduction, a Hadamard product with the attention map resized to that
//! scale. Then for every target scale `i`, each injected map is brought to
//! the scale-`i` resolution (adaptive average pooling, identity, or bilinear),
//! passed through a 3x3 convolution, and the four results are multiplied
//! elementwise.

use nalgebra::DMatrix;
use thiserror::Error;

use crate::attention::{AttentionMap, AttnError};
use crate::io::tnsr::{Tensor, TensorError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SdiError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("tensor dimensions must be at least 1")]
    Empty,
    #[error("non-finite feature value at index {0}")]
    NonFinite(usize),
    #[error("attention hook changed tensor dims from {from:?} to {to:?}")]
    HookChangedDims { from: (usize, usize, usize), to: (usize, usize, usize) },
    #[error(transparent)]
    Attention(#[from] AttnError),
}

/// `height x width x channels` feature map, stored row-major as `(h, w, ch)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTensor {
    height: usize,
    width: usize,
    channels: usize,
    values: Vec<f64>,
}

impl FeatureTensor {
    pub fn new(height: usize, width: usize, channels: usize, values: Vec<f64>) -> Result<Self, SdiError> {
        if height == 0 || width == 0 || channels == 0 {
            return Err(SdiError::Empty);
        }
        if values.len() != height * width * channels {
            return Err(SdiError::Shape(format!(
                "{} values for a {height}x{width}x{channels} tensor",
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(SdiError::NonFinite(i));
        }
        Ok(Self { height, width, channels, values })
    }

    pub fn filled(height: usize, width: usize, channels: usize, value: f64) -> Result<Self, SdiError> {
        Self::new(height, width, channels, vec![value; height * width * channels])
    }

    pub fn from_fn(
        height: usize,
        width: usize,
        channels: usize,
        mut f: impl FnMut(usize, usize, usize) -> f64,
    ) -> Result<Self, SdiError> {
        let mut values = Vec::with_capacity(height * width * channels);
        for h in 0..height {
            for w in 0..width {
                for c in 0..channels {
                    values.push(f(h, w, c));
                }
            }
        }
        Self::new(height, width, channels, values)
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.height, self.width, self.channels)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, h: usize, w: usize, c: usize) -> f64 {
        self.values[(h * self.width + w) * self.channels + c]
    }

    pub fn to_tensor(&self) -> Tensor {
        Tensor {
            dims: vec![self.height, self.width, self.channels],
            data: self.values.iter().map(|&v| v as f32).collect(),
        }
    }

    pub fn from_tensor(t: &Tensor) -> Result<Self, SdiError> {
        t.expect_rank(3).map_err(|e: TensorError| SdiError::Shape(e.to_string()))?;
        Self::new(t.dims[0], t.dims[1], t.dims[2], t.data.iter().map(|&v| f64::from(v)).collect())
    }
}

/// External attention module applied to each scale before reduction.
pub type AttentionHook<'a> = &'a (dyn Fn(&FeatureTensor) -> FeatureTensor + Sync);

/// Identity unless a hook is supplied; a hook must preserve dims.
pub fn cbam_stub(f0: &FeatureTensor, hook: Option<AttentionHook<'_>>) -> Result<FeatureTensor, SdiError> {
    match hook {
        None => Ok(f0.clone()),
        Some(hook) => {
            let out = hook(f0);
            if out.dims() != f0.dims() {
                return Err(SdiError::HookChangedDims { from: f0.dims(), to: out.dims() });
            }
            Ok(out)
        }
    }
}

/// 1x1 convolution: `weights` is `c_out x c_in`.
pub fn channel_reduce(f1: &FeatureTensor, weights: &DMatrix<f64>) -> Result<FeatureTensor, SdiError> {
    if weights.ncols() != f1.channels || weights.nrows() == 0 {
        return Err(SdiError::Shape(format!(
            "{}x{} reduction for {} input channels",
            weights.nrows(),
            weights.ncols(),
            f1.channels
        )));
    }
    let c_out = weights.nrows();
    let mut values = Vec::with_capacity(f1.height * f1.width * c_out);
    for pixel in f1.values.chunks_exact(f1.channels) {
        for o in 0..c_out {
            values.push(pixel.iter().enumerate().map(|(i, &x)| weights[(o, i)] * x).sum());
        }
    }
    FeatureTensor::new(f1.height, f1.width, c_out, values)
}

/// 3x3 same-padding convolution without bias, weights indexed `[out][in][ky][kx]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Conv3x3 {
    c_out: usize,
    c_in: usize,
    weights: Vec<f64>,
}

impl Conv3x3 {
    pub fn new(c_out: usize, c_in: usize, weights: Vec<f64>) -> Result<Self, SdiError> {
        if c_out == 0 || c_in == 0 || weights.len() != c_out * c_in * 9 {
            return Err(SdiError::Shape(format!(
                "{} weights for a {c_out}x{c_in}x3x3 kernel",
                weights.len()
            )));
        }
        Ok(Self { c_out, c_in, weights })
    }

    /// Kernel whose only nonzero tap is the centre of each channel's own filter.
    pub fn identity(channels: usize) -> Self {
        let mut weights = vec![0.0; channels * channels * 9];
        for c in 0..channels {
            weights[(c * channels + c) * 9 + 4] = 1.0;
        }
        Self { c_out: channels, c_in: channels, weights }
    }

    fn tap(&self, o: usize, i: usize, ky: usize, kx: usize) -> f64 {
        self.weights[((o * self.c_in + i) * 3 + ky) * 3 + kx]
    }

    pub fn apply(&self, f: &FeatureTensor) -> Result<FeatureTensor, SdiError> {
        if f.channels != self.c_in {
            return Err(SdiError::Shape(format!("conv expects {} channels, got {}", self.c_in, f.channels)));
        }
        let (h, w) = (f.height as isize, f.width as isize);
        FeatureTensor::from_fn(f.height, f.width, self.c_out, |y, x, o| {
            let mut acc = 0.0;
            for ky in 0..3 {
                for kx in 0..3 {
                    let (sy, sx) = (y as isize + ky as isize - 1, x as isize + kx as isize - 1);
                    if sy < 0 || sx < 0 || sy >= h || sx >= w {
                        continue;
                    }
                    for i in 0..self.c_in {
                        acc += self.tap(o, i, ky, kx) * f.get(sy as usize, sx as usize, i);
                    }
                }
            }
            acc
        })
    }
}

/// Source taps for one output index along one axis.
#[derive(Debug, Clone, PartialEq)]
enum Taps {
    Copy(usize),
    /// `v[lo] + frac * (v[hi] - v[lo])`
    Lerp { lo: usize, hi: usize, frac: f64 },
    /// Mean over `[start, end)`.
    Mean { start: usize, end: usize },
}

/// Half-pixel-centre bilinear taps (source index clamped at 0 and `src - 1`).
fn bilinear_taps(src: usize, dst: usize) -> Vec<Taps> {
    if src == dst {
        return (0..dst).map(Taps::Copy).collect();
    }
    let ratio = src as f64 / dst as f64;
    (0..dst)
        .map(|d| {
            let pos = ((d as f64 + 0.5) * ratio - 0.5).max(0.0);
            let lo = (pos.floor() as usize).min(src - 1);
            let hi = (lo + 1).min(src - 1);
            Taps::Lerp { lo, hi, frac: pos - lo as f64 }
        })
        .collect()
}

/// Adaptive average pooling windows `[floor(a*src/dst), ceil((a+1)*src/dst))`.
fn pooling_taps(src: usize, dst: usize) -> Vec<Taps> {
    if src == dst {
        return (0..dst).map(Taps::Copy).collect();
    }
    (0..dst)
        .map(|a| Taps::Mean { start: a * src / dst, end: ((a + 1) * src).div_ceil(dst) })
        .collect()
}

fn resample_taps(src: usize, dst: usize) -> Vec<Taps> {
    if dst < src { pooling_taps(src, dst) } else { bilinear_taps(src, dst) }
}

fn eval_taps(taps: &Taps, at: impl Fn(usize) -> f64) -> f64 {
    match *taps {
        Taps::Copy(i) => at(i),
        Taps::Lerp { lo, hi, frac } => {
            let a = at(lo);
            a + frac * (at(hi) - a)
        }
        Taps::Mean { start, end } => (start..end).map(&at).sum::<f64>() / (end - start) as f64,
    }
}

/// Separable resampling of a `(h, w, c)` buffer: columns first, then rows.
fn resample(
    values: &[f64],
    (h, w, c): (usize, usize, usize),
    row_taps: &[Taps],
    col_taps: &[Taps],
) -> Vec<f64> {
    let (ht, wt) = (row_taps.len(), col_taps.len());
    let mut across = vec![0.0; h * wt * c];
    for y in 0..h {
        for (x, taps) in col_taps.iter().enumerate() {
            for ch in 0..c {
                across[(y * wt + x) * c + ch] = eval_taps(taps, |sx| values[(y * w + sx) * c + ch]);
            }
        }
    }
    let mut out = vec![0.0; ht * wt * c];
    for (y, taps) in row_taps.iter().enumerate() {
        for x in 0..wt {
            for ch in 0..c {
                out[(y * wt + x) * c + ch] = eval_taps(taps, |sy| across[(sy * wt + x) * c + ch]);
            }
        }
    }
    out
}

/// Bilinear resize (half-pixel centres) of an attention map, clamped to `[0, 1]`.
pub fn resize_attention(attn: &AttentionMap, height: usize, width: usize) -> Result<AttentionMap, SdiError> {
    if height == 0 || width == 0 {
        return Err(SdiError::Empty);
    }
    if (attn.height(), attn.width()) == (height, width) {
        return Ok(attn.clone());
    }
    let out = resample(
        attn.weights(),
        (attn.height(), attn.width(), 1),
        &bilinear_taps(attn.height(), height),
        &bilinear_taps(attn.width(), width),
    );
    Ok(AttentionMap::new(width, height, out.into_iter().map(|v| v.clamp(0.0, 1.0)).collect())?)
}

/// `f3[h, w, c] = f2[h, w, c] * T[h, w]`.
pub fn hadamard_inject(f2: &FeatureTensor, attn: &AttentionMap) -> Result<FeatureTensor, SdiError> {
    if (f2.height, f2.width) != (attn.height(), attn.width()) {
        return Err(SdiError::Shape(format!(
            "feature {}x{} vs attention {}x{}",
            f2.height,
            f2.width,
            attn.height(),
            attn.width()
        )));
    }
    let values = f2
        .values
        .chunks_exact(f2.channels)
        .zip(attn.weights())
        .flat_map(|(pixel, &t)| pixel.iter().map(move |&v| v * t))
        .collect();
    FeatureTensor::new(f2.height, f2.width, f2.channels, values)
}

/// Brings a feature map to `height x width` (pool down, copy, or bilinear up,
/// per axis) and applies the 3x3 convolution.
pub fn rescale_feature(f: &FeatureTensor, height: usize, width: usize, conv: &Conv3x3) -> Result<FeatureTensor, SdiError> {
    if height == 0 || width == 0 {
        return Err(SdiError::Empty);
    }
    let resized = if (f.height, f.width) == (height, width) {
        f.clone()
    } else {
        let values = resample(
            &f.values,
            f.dims(),
            &resample_taps(f.height, height),
            &resample_taps(f.width, width),
        );
        FeatureTensor::new(height, width, f.channels, values)?
    };
    conv.apply(&resized)
}

/// Elementwise product of same-shaped tensors, left to right.
pub fn fuse(maps: &[FeatureTensor]) -> Result<FeatureTensor, SdiError> {
    let (first, rest) = maps.split_first().ok_or_else(|| SdiError::Shape("nothing to fuse".into()))?;
    let mut values = first.values.clone();
    for m in rest {
        if m.dims() != first.dims() {
            return Err(SdiError::Shape(format!("fusing {:?} with {:?}", first.dims(), m.dims())));
        }
        for (acc, &v) in values.iter_mut().zip(&m.values) {
            *acc *= v;
        }
    }
    FeatureTensor::new(first.height, first.width, first.channels, values)
}

/// Encoder features, one per scale, with strictly decreasing spatial dims.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalePyramid {
    scales: Vec<FeatureTensor>,
}

impl ScalePyramid {
    pub fn new(scales: Vec<FeatureTensor>) -> Result<Self, SdiError> {
        if scales.is_empty() {
            return Err(SdiError::Empty);
        }
        for pair in scales.windows(2) {
            if pair[1].height >= pair[0].height || pair[1].width >= pair[0].width {
                return Err(SdiError::Shape(format!(
                    "scale dims must strictly decrease, got {:?} then {:?}",
                    pair[0].dims(),
                    pair[1].dims()
                )));
            }
        }
        Ok(Self { scales })
    }

    pub fn scales(&self) -> &[FeatureTensor] {
        &self.scales
    }

    pub fn len(&self) -> usize {
        self.scales.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scales.is_empty()
    }
}

/// Learned weights of the fusion block: one channel reduction per scale and
/// one 3x3 convolution per (target scale, source scale) pair.
#[derive(Debug, Clone, PartialEq)]
pub struct SdiWeights {
    pub reduce: Vec<DMatrix<f64>>,
    pub smooth: Vec<Vec<Conv3x3>>,
}

impl SdiWeights {
    /// Identity reductions and convolutions; every scale must have `channels` channels.
    pub fn identity(scales: usize, channels: usize) -> Self {
        Self {
            reduce: vec![DMatrix::identity(channels, channels); scales],
            smooth: vec![vec![Conv3x3::identity(channels); scales]; scales],
        }
    }

    /// Given reductions, identity convolutions at the common output width.
    pub fn with_reductions(reduce: Vec<DMatrix<f64>>) -> Result<Self, SdiError> {
        let c = reduce.first().map(|r| r.nrows()).ok_or(SdiError::Empty)?;
        if reduce.iter().any(|r| r.nrows() != c) {
            return Err(SdiError::Shape("reductions disagree on output channels".into()));
        }
        let m = reduce.len();
        Ok(Self { reduce, smooth: vec![vec![Conv3x3::identity(c); m]; m] })
    }
}

/// Topology-guided fusion; returns one fused map per scale.
pub fn topo_sdi(
    pyramid: &ScalePyramid,
    attn: &AttentionMap,
    weights: &SdiWeights,
    hook: Option<AttentionHook<'_>>,
) -> Result<Vec<FeatureTensor>, SdiError> {
    run_sdi(pyramid, Some(attn), weights, hook)
}

/// The same dataflow with no attention injection.
pub fn sdi(pyramid: &ScalePyramid, weights: &SdiWeights, hook: Option<AttentionHook<'_>>) -> Result<Vec<FeatureTensor>, SdiError> {
    run_sdi(pyramid, None, weights, hook)
}

fn run_sdi(
    pyramid: &ScalePyramid,
    attn: Option<&AttentionMap>,
    weights: &SdiWeights,
    hook: Option<AttentionHook<'_>>,
) -> Result<Vec<FeatureTensor>, SdiError> {
    let m = pyramid.len();
    if weights.reduce.len() != m || weights.smooth.len() != m || weights.smooth.iter().any(|row| row.len() != m) {
        return Err(SdiError::Shape(format!("weights do not cover {m} scales")));
    }
    let injected = pyramid
        .scales()
        .iter()
        .zip(&weights.reduce)
        .map(|(f0, reduce)| {
            let f2 = channel_reduce(&cbam_stub(f0, hook)?, reduce)?;
            match attn {
                Some(a) => hadamard_inject(&f2, &resize_attention(a, f2.height, f2.width)?),
                None => Ok(f2),
            }
        })
        .collect::<Result<Vec<_>, SdiError>>()?;

    let targets: Vec<usize> = (0..m).collect();
    crate::par::map(&targets, |&i| {
        let (h, w) = (injected[i].height, injected[i].width);
        let rescaled = injected
            .iter()
            .zip(&weights.smooth[i])
            .map(|(f3, conv)| rescale_feature(f3, h, w, conv))
            .collect::<Result<Vec<_>, _>>()?;
        fuse(&rescaled)
    })
    .into_iter()
    .collect()
}
