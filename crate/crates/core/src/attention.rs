//! Topology attention maps: significance filtering of a persistence diagram,
//! birth-location score maps, and sigmoid weighting.

use thiserror::Error;

use crate::grid::{quantize, GridError, GridMap, Level, LevelMap, DEFAULT_L_MAX};
use crate::io::pgm::PgmImage;
use crate::io::tnsr::Tensor;
use crate::ph::{build_filtration, compute_persistence, PersistenceDiagram};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AttnError {
    #[error("percentile must lie in [0, 100], got {0}")]
    InvalidPercentile(f64),
    #[error("scale must be a positive finite number, got {0}")]
    InvalidScale(f64),
    #[error("attention weight {value} at index {index} is outside [0, 1]")]
    WeightOutOfRange { index: usize, value: f64 },
    #[error(transparent)]
    Grid(#[from] GridError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttnConfig {
    /// Lifespan percentile below which features are dropped.
    pub percentile: f64,
    /// Pixels within this many levels of a birth value count as its location.
    pub birth_tolerance: Level,
    /// Divisor applied to scores before the sigmoid.
    pub scale: f64,
    /// Divide scores by the image's maximum score before the sigmoid.
    pub normalize: bool,
    /// Compute the percentile over dims 0 and 1 together rather than per dimension.
    pub pool_dimensions: bool,
    /// Upper bound of the quantized level scale.
    pub l_max: Level,
}

impl Default for AttnConfig {
    fn default() -> Self {
        Self {
            percentile: 50.0,
            birth_tolerance: 0,
            scale: 1.0,
            normalize: false,
            pool_dimensions: true,
            l_max: DEFAULT_L_MAX,
        }
    }
}

impl AttnConfig {
    pub fn validate(&self) -> Result<(), AttnError> {
        if !(0.0..=100.0).contains(&self.percentile) {
            return Err(AttnError::InvalidPercentile(self.percentile));
        }
        if !(self.scale.is_finite() && self.scale > 0.0) {
            return Err(AttnError::InvalidScale(self.scale));
        }
        if self.l_max == 0 {
            return Err(GridError::InvalidLMax.into());
        }
        Ok(())
    }
}

/// Nearest-rank percentile of an ascending slice: the element at 1-based
/// position `ceil(p / 100 * n)`, clamped to `[1, n]`.
pub fn nearest_rank(sorted: &[Level], percentile: f64) -> Option<Level> {
    let n = sorted.len();
    if n == 0 {
        return None;
    }
    let rank = (percentile * n as f64 / 100.0).ceil() as usize;
    Some(sorted[rank.clamp(1, n) - 1])
}

/// Keeps features whose lifespan reaches the given percentile of all
/// lifespans. Essential classes die at `l_max` for this purpose. Features
/// with zero lifespan are never retained.
pub fn filter_significant(pd: &PersistenceDiagram, percentile: f64, pooled: bool) -> PersistenceDiagram {
    let threshold = |dim: Option<u8>| {
        let mut spans: Vec<Level> = pd
            .pairs()
            .iter()
            .filter(|p| dim.is_none_or(|d| p.dim == d))
            .map(|p| pd.lifespan(p))
            .collect();
        spans.sort_unstable();
        nearest_rank(&spans, percentile)
    };
    let taus: [Option<Level>; 2] = if pooled {
        let t = threshold(None);
        [t, t]
    } else {
        [threshold(Some(0)), threshold(Some(1))]
    };
    pd.retain(|p| {
        let span = pd.lifespan(p);
        let tau = taus.get(p.dim as usize).copied().flatten();
        span > 0 && tau.is_some_and(|tau| span >= tau)
    })
}

/// Per-pixel persistence scores: the largest lifespan among retained
/// features born within `birth_tolerance` of the pixel's level.
#[derive(Debug, Clone, PartialEq)]
pub struct PersistenceScoreMap {
    width: usize,
    height: usize,
    scores: Vec<f64>,
}

impl PersistenceScoreMap {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn max_score(&self) -> f64 {
        self.scores.iter().copied().fold(0.0, f64::max)
    }

    pub fn to_tensor(&self) -> Tensor {
        Tensor { dims: vec![self.height, self.width], data: self.scores.iter().map(|&s| s as f32).collect() }
    }
}

pub fn score_map(levels: &LevelMap, retained: &PersistenceDiagram, birth_tolerance: Level) -> PersistenceScoreMap {
    let top = levels.l_max().max(retained.l_max()) as usize;
    let mut by_level = vec![0 as Level; top + 1];
    for p in retained.pairs() {
        let span = retained.lifespan(p);
        let lo = p.birth.saturating_sub(birth_tolerance) as usize;
        let hi = (p.birth.saturating_add(birth_tolerance) as usize).min(top);
        for slot in &mut by_level[lo..=hi] {
            *slot = (*slot).max(span);
        }
    }
    PersistenceScoreMap {
        width: levels.width(),
        height: levels.height(),
        scores: levels.levels().iter().map(|&l| f64::from(by_level[l as usize])).collect(),
    }
}

/// Largest `f64` strictly below 1. The logistic function never reaches 1,
/// but rounds to it for arguments past ~37.
const BELOW_ONE: f64 = 1.0 - f64::EPSILON / 2.0;

fn sigmoid(x: f64) -> f64 {
    (1.0 / (1.0 + (-x).exp())).min(BELOW_ONE)
}

/// Single-channel weights in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AttentionMap {
    width: usize,
    height: usize,
    weights: Vec<f64>,
}

impl AttentionMap {
    pub fn new(width: usize, height: usize, weights: Vec<f64>) -> Result<Self, AttnError> {
        if width == 0 || height == 0 {
            return Err(GridError::EmptyDims { width, height }.into());
        }
        if weights.len() != width * height {
            return Err(GridError::LengthMismatch { expected: width * height, actual: weights.len() }.into());
        }
        if let Some(index) = weights.iter().position(|w| !(0.0..=1.0).contains(w)) {
            return Err(AttnError::WeightOutOfRange { index, value: weights[index] });
        }
        Ok(Self { width, height, weights })
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Result<Self, AttnError> {
        Self::new(width, height, vec![value; width.saturating_mul(height)])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.weights[row * self.width + col]
    }

    pub fn transpose(&self) -> Self {
        let weights = (0..self.width)
            .flat_map(|c| (0..self.height).map(move |r| (r, c)))
            .map(|(r, c)| self.get(r, c))
            .collect();
        Self { width: self.height, height: self.width, weights }
    }

    pub fn to_tensor(&self) -> Tensor {
        Tensor { dims: vec![self.height, self.width], data: self.weights.iter().map(|&w| w as f32).collect() }
    }

    /// 8-bit PGM with level `round(weight * 255)`.
    pub fn to_pgm(&self) -> PgmImage {
        PgmImage {
            width: self.width,
            height: self.height,
            maxval: 255,
            samples: self.weights.iter().map(|&w| (w * 255.0).round() as u16).collect(),
        }
    }

    /// Reads weights back from a 2-D tensor; values must lie in `[0, 1]`.
    pub fn from_tensor(t: &Tensor) -> Result<Self, AttnError> {
        if t.dims.len() != 2 {
            return Err(GridError::LengthMismatch { expected: 2, actual: t.dims.len() }.into());
        }
        Self::new(t.dims[1], t.dims[0], t.data.iter().map(|&v| f64::from(v)).collect())
    }
}

pub fn to_attention(scores: &PersistenceScoreMap, config: &AttnConfig) -> AttentionMap {
    let max = scores.max_score();
    let weights = scores
        .scores
        .iter()
        .map(|&s| {
            let s = if config.normalize {
                if max > 0.0 { s / max } else { 0.0 }
            } else {
                s
            };
            sigmoid(s / config.scale)
        })
        .collect();
    AttentionMap { width: scores.width, height: scores.height, weights }
}

/// Probability map to attention map: quantize, filter, compute persistence,
/// keep significant features, score birth locations, apply the sigmoid.
pub fn generate_attention_map(prob: &GridMap, config: &AttnConfig) -> Result<AttentionMap, AttnError> {
    config.validate()?;
    let levels = quantize(prob, config.l_max)?;
    Ok(attention_from_levels(&levels, config))
}

pub fn attention_from_levels(levels: &LevelMap, config: &AttnConfig) -> AttentionMap {
    let pd = compute_persistence(&build_filtration(levels));
    let retained = filter_significant(&pd, config.percentile, config.pool_dimensions);
    to_attention(&score_map(levels, &retained, config.birth_tolerance), config)
}
