//! `TNSR1` raw tensor files.
//!
//! Layout: the ASCII line `TNSR1`, an ASCII line `<ndim> <d0> <d1> ...`, then
//! exactly `d0 * d1 * ...` little-endian `f32` values in row-major order.
//! Grids are stored with `ndim = 2` as `height width`.

use std::path::Path;

use thiserror::Error;

use crate::grid::{GridError, GridMap};

const MAGIC: &[u8] = b"TNSR1\n";

#[derive(Debug, Error)]
pub enum TensorError {
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("bad magic")]
    BadMagic,
    #[error("malformed shape line: {0}")]
    BadShape(String),
    #[error("payload size mismatch: header declares {expected} floats, payload holds {actual_bytes} bytes")]
    PayloadMismatch { expected: usize, actual_bytes: usize },
    #[error("expected a {expected}-D tensor, got {actual}-D")]
    Rank { expected: usize, actual: usize },
    #[error(transparent)]
    Grid(#[from] GridError),
}

impl TensorError {
    pub fn is_io(&self) -> bool {
        matches!(self, TensorError::Io(_))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    pub dims: Vec<usize>,
    pub data: Vec<f32>,
}

impl Tensor {
    pub fn encode(&self) -> Vec<u8> {
        let shape: Vec<String> = self.dims.iter().map(|d| d.to_string()).collect();
        let mut out = MAGIC.to_vec();
        out.extend(format!("{} {}\n", self.dims.len(), shape.join(" ")).into_bytes());
        out.reserve(self.data.len() * 4);
        for v in &self.data {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, TensorError> {
        let rest = bytes.strip_prefix(MAGIC).ok_or(TensorError::BadMagic)?;
        let nl = rest
            .iter()
            .position(|&b| b == b'\n')
            .ok_or_else(|| TensorError::BadShape("missing newline".into()))?;
        let line = std::str::from_utf8(&rest[..nl])
            .map_err(|_| TensorError::BadShape("not ASCII".into()))?;
        let fields = line
            .split(' ')
            .map(|t| t.parse::<usize>().map_err(|_| TensorError::BadShape(format!("bad token {t:?}"))))
            .collect::<Result<Vec<_>, _>>()?;
        let (&ndim, dims) = fields
            .split_first()
            .ok_or_else(|| TensorError::BadShape("empty".into()))?;
        if ndim == 0 || dims.len() != ndim {
            return Err(TensorError::BadShape(format!(
                "ndim {ndim} does not match {} dimensions",
                dims.len()
            )));
        }
        let expected = dims
            .iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .ok_or_else(|| TensorError::BadShape("element count overflows".into()))?;
        let payload = &rest[nl + 1..];
        if expected.checked_mul(4) != Some(payload.len()) {
            return Err(TensorError::PayloadMismatch { expected, actual_bytes: payload.len() });
        }
        let data = payload
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect();
        Ok(Self { dims: dims.to_vec(), data })
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self, TensorError> {
        Self::decode(&std::fs::read(path)?)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<(), TensorError> {
        super::write_atomic(path.as_ref(), &self.encode())?;
        Ok(())
    }

    pub fn expect_rank(&self, ndim: usize) -> Result<(), TensorError> {
        if self.dims.len() == ndim {
            Ok(())
        } else {
            Err(TensorError::Rank { expected: ndim, actual: self.dims.len() })
        }
    }
}

impl From<&GridMap> for Tensor {
    fn from(grid: &GridMap) -> Self {
        Tensor { dims: vec![grid.height(), grid.width()], data: grid.values().to_vec() }
    }
}

impl TryFrom<Tensor> for GridMap {
    type Error = TensorError;

    fn try_from(t: Tensor) -> Result<Self, Self::Error> {
        t.expect_rank(2)?;
        Ok(GridMap::new(t.dims[1], t.dims[0], t.data)?)
    }
}

pub fn save_tensor(grid: &GridMap, path: impl AsRef<Path>) -> Result<(), TensorError> {
    Tensor::from(grid).write(path)
}

pub fn load_tensor(path: impl AsRef<Path>) -> Result<GridMap, TensorError> {
    GridMap::try_from(Tensor::read(path)?)
}
