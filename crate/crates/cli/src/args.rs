use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use stvmd_core::{DecompositionConfig, InitScheme, WindowKind};

use crate::error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "stvmd", version, about = "Variational and short-time variational mode decomposition")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic recording and its ground-truth frequency tracks.
    Generate(GenerateArgs),
    /// Decompose a recording CSV and export modes, tracks and heatmaps.
    Decompose(DecomposeArgs),
    /// Online dynamic STVMD over CSV rows read from standard input.
    Stream(StreamArgs),
    /// Reconstruction-RMSE grid for simulated signals 1-3.
    BenchTable2(BenchArgs),
    /// Re-run the command recorded in a manifest.json.
    Replay(ReplayArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Solver {
    Vmd,
    Mvmd,
    Stvmd,
    StvmdDynamic,
}

impl Solver {
    pub fn name(self) -> &'static str {
        match self {
            Solver::Vmd => "vmd",
            Solver::Mvmd => "mvmd",
            Solver::Stvmd => "stvmd",
            Solver::StvmdDynamic => "stvmd-dynamic",
        }
    }

    pub fn is_short_time(self) -> bool {
        matches!(self, Solver::Stvmd | Solver::StvmdDynamic)
    }
}

/// Decomposition parameters; flags override `--config`, which overrides
/// the built-in defaults.
#[derive(Debug, Clone, Default, Args)]
pub struct ConfigArgs {
    /// TOML file with decomposition parameters.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Number of modes K, residual included.
    #[arg(long, value_name = "K")]
    pub modes: Option<usize>,
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Window length N (even).
    #[arg(long, value_name = "N")]
    pub window_len: Option<usize>,
    /// hamming, hann or rect.
    #[arg(long)]
    pub window: Option<WindowKind>,
    #[arg(long)]
    pub hop: Option<usize>,
    #[arg(long)]
    pub dual_step: Option<f64>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub max_iters: Option<usize>,
    /// uniform, zero, or a comma list of K frequencies in cycles/sample.
    #[arg(long)]
    pub init: Option<InitScheme>,
}

impl ConfigArgs {
    pub fn resolve(&self) -> CliResult<DecompositionConfig> {
        let mut cfg = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
                DecompositionConfig::from_toml_str(&text)
                    .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?
            }
            None => DecompositionConfig::default(),
        };
        if let Some(v) = self.modes {
            cfg.num_modes = v;
        }
        if let Some(v) = self.alpha {
            cfg.alpha = v;
        }
        if let Some(v) = self.window_len {
            cfg.window_len = v;
        }
        if let Some(v) = self.window {
            cfg.window_kind = v;
        }
        if let Some(v) = self.hop {
            cfg.hop = v;
        }
        if let Some(v) = self.dual_step {
            cfg.dual_step = v;
        }
        if let Some(v) = self.tol {
            cfg.tolerance = v;
        }
        if let Some(v) = self.max_iters {
            cfg.max_iters = v;
        }
        if let Some(v) = &self.init {
            cfg.init = v.clone();
        }
        cfg.check()?;
        Ok(cfg)
    }
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// two_tone, common_pair, sim1, sim2, sim3, align_pair or ssvep_surrogate.
    pub signal: String,
    /// Sample rate in Hz (default 128, or 250 for ssvep_surrogate).
    #[arg(long)]
    pub fs: Option<f64>,
    /// Seconds (default 8, or 10 for two_tone and ssvep_surrogate).
    #[arg(long)]
    pub duration: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Noise standard deviation (default 0.2, or 0.5 for ssvep_surrogate).
    #[arg(long)]
    pub noise: Option<f64>,
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct DecomposeArgs {
    /// Recording CSV.
    pub input: PathBuf,
    #[arg(long, value_enum)]
    pub solver: Solver,
    #[command(flatten)]
    pub config: ConfigArgs,
    /// Lower bandpass edge in Hz; with --band-hi enables epoch averaging,
    /// z-scoring and brickwall bandpass before decomposition.
    #[arg(long, requires = "band_hi")]
    pub band_lo: Option<f64>,
    #[arg(long, requires = "band_lo")]
    pub band_hi: Option<f64>,
    /// Skip the PGM heatmaps.
    #[arg(long)]
    pub no_heatmaps: bool,
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct StreamArgs {
    /// Sample rate used to report frequencies in Hz.
    #[arg(long, default_value_t = 128.0)]
    pub fs: f64,
    #[command(flatten)]
    pub config: ConfigArgs,
    /// Re-initialize every block instead of seeding from the previous one.
    #[arg(long)]
    pub cold_start: bool,
    /// Decompose every STRIDE samples.
    #[arg(long, default_value_t = 1)]
    pub stride: usize,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    pub manifest: PathBuf,
    /// Output directory (defaults to the one recorded in the manifest).
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}
