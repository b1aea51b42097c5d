//! Flat-buffer entry points for foreign-language bindings.
//!
//! Inputs are contiguous row-major `f32` buffers in `[0, 1]`, quantized to
//! the configured level scale inside the call. Outputs match the CLI
//! bit-for-bit: attention weights are the `f32` payload the `attn`
//! subcommand writes to a TNSR file, and persistence rows are the rows of
//! the `pd` CSV.

use thiserror::Error;

use crate::attention::{generate_attention_map, AttnConfig, AttnError};
use crate::grid::{quantize, GridError, GridMap, Level};
use crate::ph::{build_filtration, compute_persistence};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Error kinds mirroring the CLI exit-code classes.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum ApiError {
    /// Exit code 1.
    #[error("validation error: {0}")]
    Validation(String),
    /// Exit code 3.
    #[error("internal error: {0}")]
    Internal(String),
}

impl ApiError {
    pub fn exit_code(&self) -> i32 {
        match self {
            ApiError::Validation(_) => crate::cli::EXIT_USAGE,
            ApiError::Internal(_) => crate::cli::EXIT_INTERNAL,
        }
    }
}

impl From<GridError> for ApiError {
    fn from(e: GridError) -> Self {
        ApiError::Validation(e.to_string())
    }
}

impl From<AttnError> for ApiError {
    fn from(e: AttnError) -> Self {
        ApiError::Validation(e.to_string())
    }
}

fn grid(values: &[f32], height: usize, width: usize) -> Result<GridMap, ApiError> {
    Ok(GridMap::new(width, height, values.to_vec())?)
}

/// Attention weights for a `height x width` probability buffer.
pub fn attention_array(values: &[f32], height: usize, width: usize, config: &AttnConfig) -> Result<Vec<f32>, ApiError> {
    let map = generate_attention_map(&grid(values, height, width)?, config)?;
    Ok(map.to_tensor().data)
}

/// `(dim, birth, death)` rows, `None` for an essential class, in CSV order.
pub fn persistence_array(
    values: &[f32],
    height: usize,
    width: usize,
    l_max: Level,
) -> Result<Vec<(u8, Level, Option<Level>)>, ApiError> {
    let levels = quantize(&grid(values, height, width)?, l_max)?;
    let pd = compute_persistence(&build_filtration(&levels));
    Ok(pd.pairs().iter().map(|p| (p.dim, p.birth, p.death)).collect())
}
