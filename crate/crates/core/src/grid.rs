//! Row-major 2-D scalar grids and the integer level scale used for filtrations.
//!
//! Coordinates are `(row, col)` with row 0 at the top. Both grid types are
//! immutable once built.

use thiserror::Error;

/// Filtration level on the quantized scale.
pub type Level = u16;

/// Default upper bound of the level scale (256 levels).
pub const DEFAULT_L_MAX: Level = 255;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error("grid dimensions must be at least 1x1, got {width}x{height}")]
    EmptyDims { width: usize, height: usize },
    #[error("expected {expected} values for the grid, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("non-finite value at index {index}")]
    NonFinite { index: usize },
    #[error("value {value} at index {index} is outside [0, 1]")]
    OutOfRange { index: usize, value: f32 },
    #[error("level {level} at index {index} exceeds maximum level {l_max}")]
    LevelOutOfRange { index: usize, level: Level, l_max: Level },
    #[error("maximum level must be at least 1")]
    InvalidLMax,
}

fn check_dims(width: usize, height: usize, len: usize) -> Result<(), GridError> {
    if width == 0 || height == 0 {
        return Err(GridError::EmptyDims { width, height });
    }
    let expected = width
        .checked_mul(height)
        .ok_or(GridError::EmptyDims { width, height })?;
    if expected != len {
        return Err(GridError::LengthMismatch { expected, actual: len });
    }
    Ok(())
}

/// A 2-D field of finite `f32` values, typically a probability map in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridMap {
    width: usize,
    height: usize,
    values: Vec<f32>,
}

impl GridMap {
    pub fn new(width: usize, height: usize, values: Vec<f32>) -> Result<Self, GridError> {
        check_dims(width, height, values.len())?;
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(GridError::NonFinite { index });
        }
        Ok(Self { width, height, values })
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> f32,
    ) -> Result<Self, GridError> {
        let mut values = Vec::with_capacity(width.saturating_mul(height));
        for row in 0..height {
            for col in 0..width {
                values.push(f(row, col));
            }
        }
        Self::new(width, height, values)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn get(&self, row: usize, col: usize) -> f32 {
        self.values[row * self.width + col]
    }

    pub fn transpose(&self) -> Self {
        let values = (0..self.width)
            .flat_map(|c| (0..self.height).map(move |r| (r, c)))
            .map(|(r, c)| self.get(r, c))
            .collect();
        Self { width: self.height, height: self.width, values }
    }
}

/// A 2-D field of integer levels in `[0, l_max]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LevelMap {
    width: usize,
    height: usize,
    l_max: Level,
    levels: Vec<Level>,
}

impl LevelMap {
    pub fn new(
        width: usize,
        height: usize,
        l_max: Level,
        levels: Vec<Level>,
    ) -> Result<Self, GridError> {
        check_dims(width, height, levels.len())?;
        if l_max == 0 {
            return Err(GridError::InvalidLMax);
        }
        if let Some(index) = levels.iter().position(|&l| l > l_max) {
            return Err(GridError::LevelOutOfRange { index, level: levels[index], l_max });
        }
        Ok(Self { width, height, l_max, levels })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn l_max(&self) -> Level {
        self.l_max
    }

    pub fn levels(&self) -> &[Level] {
        &self.levels
    }

    pub fn get(&self, row: usize, col: usize) -> Level {
        self.levels[row * self.width + col]
    }

    pub fn transpose(&self) -> Self {
        let levels = (0..self.width)
            .flat_map(|c| (0..self.height).map(move |r| (r, c)))
            .map(|(r, c)| self.get(r, c))
            .collect();
        Self { width: self.height, height: self.width, l_max: self.l_max, levels }
    }

    /// Applies `f` to every level; the result must stay within `new_l_max`.
    pub fn map_levels(
        &self,
        new_l_max: Level,
        f: impl Fn(Level) -> Level,
    ) -> Result<Self, GridError> {
        Self::new(self.width, self.height, new_l_max, self.levels.iter().map(|&l| f(l)).collect())
    }
}

/// Maps a `[0, 1]` probability map onto `0..=l_max`, rounding half away from zero.
pub fn quantize(map: &GridMap, l_max: Level) -> Result<LevelMap, GridError> {
    if l_max == 0 {
        return Err(GridError::InvalidLMax);
    }
    let scale = f64::from(l_max);
    let levels = map
        .values
        .iter()
        .enumerate()
        .map(|(index, &value)| {
            if !(0.0..=1.0).contains(&value) {
                return Err(GridError::OutOfRange { index, value });
            }
            // f64::round is half-away-from-zero
            Ok((f64::from(value) * scale).round() as Level)
        })
        .collect::<Result<Vec<_>, _>>()?;
    LevelMap::new(map.width, map.height, l_max, levels)
}
