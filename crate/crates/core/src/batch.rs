//! Many-image attention map generation.

use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::attention::{generate_attention_map, AttentionMap, AttnConfig, AttnError};
use crate::grid::GridMap;
use crate::io::pgm::{load_pgm, PgmError, PgmEncoding};
use crate::io::tnsr::TensorError;
use crate::io::write_atomic;
use crate::par;

#[derive(Debug, Error)]
pub enum BatchError {
    #[error("{path}: {source}")]
    Pgm { path: PathBuf, source: PgmError },
    #[error("{path}: {source}")]
    Attention { path: PathBuf, source: AttnError },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Tensor { path: PathBuf, source: TensorError },
}

impl BatchError {
    pub fn is_io(&self) -> bool {
        match self {
            BatchError::Pgm { source, .. } => source.is_io(),
            BatchError::Io { .. } => true,
            BatchError::Tensor { source, .. } => source.is_io(),
            BatchError::Attention { .. } => false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Tnsr,
    Pgm,
}

impl OutputFormat {
    pub fn extension(self) -> &'static str {
        match self {
            OutputFormat::Tnsr => "tnsr",
            OutputFormat::Pgm => "pgm",
        }
    }

    /// `.pgm` selects PGM; anything else is TNSR.
    pub fn for_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("pgm") => OutputFormat::Pgm,
            _ => OutputFormat::Tnsr,
        }
    }

    pub fn encode(self, attn: &AttentionMap) -> Vec<u8> {
        match self {
            OutputFormat::Tnsr => attn.to_tensor().encode(),
            OutputFormat::Pgm => attn.to_pgm().encode(PgmEncoding::Binary),
        }
    }
}

pub fn generate_batch_sequential(maps: &[GridMap], config: &AttnConfig) -> Vec<Result<AttentionMap, AttnError>> {
    maps.iter().map(|m| generate_attention_map(m, config)).collect()
}

/// Same results as [`generate_batch_sequential`], computed with the data-parallel backend.
pub fn generate_batch(maps: &[GridMap], config: &AttnConfig) -> Vec<Result<AttentionMap, AttnError>> {
    par::map(maps, |m| generate_attention_map(m, config))
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchReport {
    pub outputs: Vec<PathBuf>,
    /// Per-image wall time: load, compute, write.
    pub per_image: Vec<Duration>,
    pub total: Duration,
}

impl BatchReport {
    pub fn images(&self) -> usize {
        self.outputs.len()
    }

    pub fn mean(&self) -> Duration {
        if self.per_image.is_empty() {
            Duration::ZERO
        } else {
            self.per_image.iter().sum::<Duration>() / self.per_image.len() as u32
        }
    }
}

/// `.pgm` files directly inside `dir`, sorted by name.
pub fn list_pgms(dir: &Path) -> std::io::Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && OutputFormat::for_path(p) == OutputFormat::Pgm)
        .collect();
    files.sort();
    Ok(files)
}

/// Writes an attention map for every PGM in `input_dir` to `output_dir`
/// under the same file stem, using `jobs` worker threads.
pub fn process_dir(
    input_dir: &Path,
    output_dir: &Path,
    config: &AttnConfig,
    format: OutputFormat,
    jobs: usize,
) -> Result<BatchReport, BatchError> {
    let start = Instant::now();
    let inputs = list_pgms(input_dir).map_err(|source| BatchError::Io { path: input_dir.into(), source })?;
    std::fs::create_dir_all(output_dir).map_err(|source| BatchError::Io { path: output_dir.into(), source })?;

    let one = |input: &PathBuf| -> Result<(PathBuf, Duration), BatchError> {
        let t0 = Instant::now();
        let grid = load_pgm(input).map_err(|source| BatchError::Pgm { path: input.clone(), source })?;
        let attn = generate_attention_map(&grid, config)
            .map_err(|source| BatchError::Attention { path: input.clone(), source })?;
        let stem = input.file_stem().unwrap_or_default();
        let out = output_dir.join(stem).with_extension(format.extension());
        write_atomic(&out, &format.encode(&attn)).map_err(|source| BatchError::Io { path: out.clone(), source })?;
        Ok((out, t0.elapsed()))
    };
    let results = par::with_jobs(jobs, || par::map(&inputs, one));

    let mut outputs = Vec::with_capacity(results.len());
    let mut per_image = Vec::with_capacity(results.len());
    for r in results {
        let (out, dt) = r?;
        outputs.push(out);
        per_image.push(dt);
    }
    Ok(BatchReport { outputs, per_image, total: start.elapsed() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::blob_map;

    #[test]
    fn parallel_matches_sequential() {
        let maps: Vec<_> = (0..6).map(|s| blob_map(40, 30, s)).collect();
        let cfg = AttnConfig::default();
        assert_eq!(generate_batch(&maps, &cfg), generate_batch_sequential(&maps, &cfg));
    }

    #[test]
    fn format_by_extension() {
        assert_eq!(OutputFormat::for_path(Path::new("a/b.PGM")), OutputFormat::Pgm);
        assert_eq!(OutputFormat::for_path(Path::new("a/b.tnsr")), OutputFormat::Tnsr);
        assert_eq!(OutputFormat::for_path(Path::new("a/b")), OutputFormat::Tnsr);
    }
}
