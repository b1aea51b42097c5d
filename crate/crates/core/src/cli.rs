//! Command-line front end.
//!
//! Exit codes: 0 success, 1 usage or validation error (including malformed
//! input files), 2 I/O error, 3 internal invariant violation. Every failure
//! prints one line to standard error.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use nalgebra::DMatrix;

use crate::attention::{filter_significant, generate_attention_map, score_map, to_attention, AttentionMap, AttnConfig};
use crate::batch::{process_dir, OutputFormat};
use crate::grid::{quantize, GridMap, Level, LevelMap};
use crate::io::diagram_csv::write_diagram;
use crate::io::pgm::{load_pgm, PgmError};
use crate::io::tnsr::{Tensor, TensorError};
use crate::io::write_atomic;
use crate::ph::{betti_oracle, build_filtration, compute_persistence};
use crate::sdi::{topo_sdi, FeatureTensor, ScalePyramid, SdiWeights};
use crate::ssm::duality_check;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_IO: i32 = 2;
pub const EXIT_INTERNAL: i32 = 3;

/// Tolerance of the recurrence/convolution duality self-check.
pub const DUALITY_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Parser)]
#[command(name = "topoattn", version, about = "Topology attention maps from cubical persistent homology")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write the persistence diagram of a PGM image as CSV.
    Pd {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        #[arg(long, default_value_t = 255)]
        levels: Level,
    },
    /// Write the topology attention map of a PGM image (TNSR, or PGM for a .pgm output).
    Attn {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        /// Also write the persistence score map as TNSR.
        #[arg(long)]
        scores: Option<PathBuf>,
        #[command(flatten)]
        attn: AttnFlags,
    },
    /// Print a Betti number of one sublevel set, computed by brute force.
    Betti {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        threshold: Level,
        #[arg(long)]
        dim: u8,
        #[arg(long, default_value_t = 255)]
        levels: Level,
    },
    /// Check that the SSM recurrence and its convolution kernel agree on random systems.
    SsmCheck {
        #[arg(long, default_value_t = 16)]
        state_dim: usize,
        #[arg(long, default_value_t = 64)]
        length: usize,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Topology-guided multi-scale fusion of four TNSR feature maps.
    Fuse {
        /// Feature map per scale (H x W x C TNSR), largest first; give exactly four.
        #[arg(long = "feature", required = true, num_args = 1)]
        features: Vec<PathBuf>,
        /// Attention map: 2-D TNSR, or PGM.
        #[arg(long)]
        attention: PathBuf,
        /// Optional 1x1 reduction per scale (c_out x c_in TNSR); give none or four.
        #[arg(long = "reduce", num_args = 1)]
        reduce: Vec<PathBuf>,
        #[arg(long)]
        output_dir: PathBuf,
    },
    /// Attention maps for every PGM in a directory.
    Batch {
        #[arg(long)]
        input_dir: PathBuf,
        #[arg(long)]
        output_dir: PathBuf,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        #[arg(long, value_enum, default_value_t = Format::Tnsr)]
        format: Format,
        #[command(flatten)]
        attn: AttnFlags,
    },
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
enum Format {
    Tnsr,
    Pgm,
}

#[derive(Debug, Args)]
struct AttnFlags {
    #[arg(long, default_value_t = 50.0)]
    percentile: f64,
    #[arg(long, default_value_t = 0)]
    tolerance: Level,
    #[arg(long, default_value_t = 1.0)]
    scale: f64,
    #[arg(long)]
    normalize: bool,
    /// Apply the percentile filter separately per homology dimension.
    #[arg(long)]
    per_dimension: bool,
    #[arg(long, default_value_t = 255)]
    levels: Level,
}

impl AttnFlags {
    fn config(&self) -> Result<AttnConfig, Failure> {
        let cfg = AttnConfig {
            percentile: self.percentile,
            birth_tolerance: self.tolerance,
            scale: self.scale,
            normalize: self.normalize,
            pool_dimensions: !self.per_dimension,
            l_max: self.levels,
        };
        cfg.validate().map_err(Failure::usage)?;
        Ok(cfg)
    }
}

#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn usage(e: impl std::fmt::Display) -> Self {
        Self { code: EXIT_USAGE, message: e.to_string() }
    }

    fn io(path: &Path, e: impl std::fmt::Display) -> Self {
        Self { code: EXIT_IO, message: format!("{}: {e}", path.display()) }
    }

    fn pgm(path: &Path, e: PgmError) -> Self {
        let code = if e.is_io() { EXIT_IO } else { EXIT_USAGE };
        Self { code, message: format!("{}: {e}", path.display()) }
    }

    fn tensor(path: &Path, e: TensorError) -> Self {
        let code = if e.is_io() { EXIT_IO } else { EXIT_USAGE };
        Self { code, message: format!("{}: {e}", path.display()) }
    }
}

/// Parses `args` (including the program name), runs the command, and
/// returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return EXIT_OK;
            }
            let rendered = e.to_string();
            let line = rendered.lines().find(|l| !l.trim().is_empty()).unwrap_or("invalid arguments");
            eprintln!("{line}");
            return EXIT_USAGE;
        }
    };
    let mut stdout = std::io::stdout().lock();
    match execute(cli.command, &mut stdout) {
        Ok(()) => EXIT_OK,
        Err(f) => {
            eprintln!("error: {}", f.message.replace('\n', " "));
            f.code
        }
    }
}

fn load_levels(path: &Path, l_max: Level) -> Result<LevelMap, Failure> {
    let grid = load_pgm(path).map_err(|e| Failure::pgm(path, e))?;
    quantize(&grid, l_max).map_err(Failure::usage)
}

fn write_out(out: &mut impl Write, text: std::fmt::Arguments<'_>) -> Result<(), Failure> {
    writeln!(out, "{text}").map_err(|e| Failure::io(Path::new("<stdout>"), e))
}

fn execute(command: Command, out: &mut impl Write) -> Result<(), Failure> {
    match command {
        Command::Pd { input, output, levels } => {
            let lm = load_levels(&input, levels)?;
            let pd = compute_persistence(&build_filtration(&lm));
            write_diagram(&pd, &output).map_err(|e| {
                let code = if e.is_io() { EXIT_IO } else { EXIT_INTERNAL };
                Failure { code, message: format!("{}: {e}", output.display()) }
            })?;
        }
        Command::Attn { input, output, scores, attn } => {
            let cfg = attn.config()?;
            let lm = load_levels(&input, cfg.l_max)?;
            let pd = compute_persistence(&build_filtration(&lm));
            let retained = filter_significant(&pd, cfg.percentile, cfg.pool_dimensions);
            let sm = score_map(&lm, &retained, cfg.birth_tolerance);
            let map = to_attention(&sm, &cfg);
            if let Some(path) = scores {
                sm.to_tensor().write(&path).map_err(|e| Failure::tensor(&path, e))?;
            }
            let bytes = OutputFormat::for_path(&output).encode(&map);
            write_atomic(&output, &bytes).map_err(|e| Failure::io(&output, e))?;
        }
        Command::Betti { input, threshold, dim, levels } => {
            if dim > 1 {
                return Err(Failure::usage(format!("--dim must be 0 or 1, got {dim}")));
            }
            let lm = load_levels(&input, levels)?;
            write_out(out, format_args!("{}", betti_oracle(&lm, threshold, dim)))?;
        }
        Command::SsmCheck { state_dim, length, trials, seed } => {
            if state_dim == 0 || length == 0 || trials == 0 {
                return Err(Failure::usage("--state-dim, --length and --trials must be at least 1"));
            }
            let report = duality_check(state_dim, length, trials, seed)
                .map_err(|e| Failure { code: EXIT_INTERNAL, message: e.to_string() })?;
            let pass = report.max_abs_error <= DUALITY_TOLERANCE;
            write_out(
                out,
                format_args!(
                    "max_abs_error={:e} tolerance={:e} trials={} {}",
                    report.max_abs_error,
                    DUALITY_TOLERANCE,
                    report.trials,
                    if pass { "PASS" } else { "FAIL" }
                ),
            )?;
            if !pass {
                return Err(Failure { code: EXIT_INTERNAL, message: "duality check exceeded tolerance".into() });
            }
        }
        Command::Fuse { features, attention, reduce, output_dir } => fuse_command(&features, &attention, &reduce, &output_dir)?,
        Command::Batch { input_dir, output_dir, jobs, format, attn } => {
            if jobs == 0 {
                return Err(Failure::usage("--jobs must be at least 1"));
            }
            let cfg = attn.config()?;
            let format = match format {
                Format::Tnsr => OutputFormat::Tnsr,
                Format::Pgm => OutputFormat::Pgm,
            };
            let report = process_dir(&input_dir, &output_dir, &cfg, format, jobs).map_err(|e| Failure {
                code: if e.is_io() { EXIT_IO } else { EXIT_USAGE },
                message: e.to_string(),
            })?;
            let ms = |d: std::time::Duration| d.as_secs_f64() * 1e3;
            write_out(out, format_args!("images={}", report.images()))?;
            write_out(out, format_args!("mean_ms_per_image={:.3}", ms(report.mean())))?;
            write_out(out, format_args!("total_ms={:.3}", ms(report.total)))?;
        }
    }
    Ok(())
}

fn read_attention(path: &Path) -> Result<AttentionMap, Failure> {
    if OutputFormat::for_path(path) == OutputFormat::Pgm {
        let g: GridMap = load_pgm(path).map_err(|e| Failure::pgm(path, e))?;
        let weights = g.values().iter().map(|&v| f64::from(v)).collect();
        AttentionMap::new(g.width(), g.height(), weights).map_err(Failure::usage)
    } else {
        let t = Tensor::read(path).map_err(|e| Failure::tensor(path, e))?;
        AttentionMap::from_tensor(&t).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
    }
}

fn fuse_command(features: &[PathBuf], attention: &Path, reduce: &[PathBuf], output_dir: &Path) -> Result<(), Failure> {
    if features.len() != 4 {
        return Err(Failure::usage(format!("expected 4 --feature inputs, got {}", features.len())));
    }
    if !reduce.is_empty() && reduce.len() != 4 {
        return Err(Failure::usage(format!("expected 0 or 4 --reduce inputs, got {}", reduce.len())));
    }
    let scales = features
        .iter()
        .map(|p| {
            let t = Tensor::read(p).map_err(|e| Failure::tensor(p, e))?;
            FeatureTensor::from_tensor(&t).map_err(|e| Failure::usage(format!("{}: {e}", p.display())))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let attn = read_attention(attention)?;
    let weights = if reduce.is_empty() {
        let c = scales[0].channels();
        if scales.iter().any(|s| s.channels() != c) {
            return Err(Failure::usage("scales differ in channel count; supply --reduce weights"));
        }
        SdiWeights::identity(4, c)
    } else {
        let mats = reduce
            .iter()
            .map(|p| {
                let t = Tensor::read(p).map_err(|e| Failure::tensor(p, e))?;
                t.expect_rank(2).map_err(|e| Failure::tensor(p, e))?;
                let data: Vec<f64> = t.data.iter().map(|&v| f64::from(v)).collect();
                Ok(DMatrix::from_row_slice(t.dims[0], t.dims[1], &data))
            })
            .collect::<Result<Vec<_>, Failure>>()?;
        SdiWeights::with_reductions(mats).map_err(Failure::usage)?
    };
    let pyramid = ScalePyramid::new(scales).map_err(Failure::usage)?;
    let fused = topo_sdi(&pyramid, &attn, &weights, None).map_err(Failure::usage)?;
    std::fs::create_dir_all(output_dir).map_err(|e| Failure::io(output_dir, e))?;
    for (i, f5) in fused.iter().enumerate() {
        let path = output_dir.join(format!("fused_{}.tnsr", i + 1));
        f5.to_tensor().write(&path).map_err(|e| Failure::tensor(&path, e))?;
    }
    Ok(())
}

/// The `attn` pipeline on an in-memory map, byte-for-byte as the CLI writes it.
pub fn attention_bytes(prob: &GridMap, config: &AttnConfig, format: OutputFormat) -> Result<Vec<u8>, crate::attention::AttnError> {
    Ok(format.encode(&generate_attention_map(prob, config)?))
}
