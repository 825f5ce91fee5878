//! Run configuration: command-line flags layered over an optional JSON
//! file. Flags win, then the output-directory environment variable, then
//! the file, then per-command defaults.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;
use smms::warped_smms::{Family, ModelConfig, ModelParams, DEFAULT_GRID};
use smms::variational::MinimizeOptions;
use smms::DimParam;

use crate::CliError;

/// Only environment variable read by the tool.
pub const OUT_DIR_ENV: &str = "SMMS_OUT_DIR";

#[derive(Debug, Parser)]
#[command(name = "smms", version, about = "Weighted curvature, quasi-Einstein models and conformal energies")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub flags: Flags,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Build a model and dump its profiles and curvature channels.
    Model,
    /// Minimize the (m,mu)-energy or the m-energy.
    Energy,
    /// Run the identity and estimate check suite.
    Verify,
    /// Integrate the quasi-Einstein ODE from a smooth pole.
    QeSolve,
    /// Evaluate a model or energy task over a list of parameter values.
    Sweep,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitKind {
    Constant,
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepParam {
    M,
    N,
    Grid,
    Mu,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepTask {
    Model,
    Energy,
}

#[derive(Debug, Default, Args)]
pub struct Flags {
    /// JSON configuration file; flags override its fields.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory (default ".", or $SMMS_OUT_DIR).
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,

    #[arg(long, global = true)]
    pub family: Option<String>,
    #[arg(long, global = true)]
    pub n: Option<usize>,
    /// Weight dimension: a number >= 0 or "inf".
    #[arg(long, global = true)]
    pub m: Option<String>,
    /// Number of grid nodes (odd, >= 65).
    #[arg(long, global = true)]
    pub grid: Option<usize>,
    #[arg(long, global = true)]
    pub radius: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub v_amp: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub phi_amp: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub squash: Option<f64>,
    /// Characteristic constant.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub mu: Option<f64>,
    #[arg(long, global = true)]
    pub r_max: Option<f64>,
    /// Quasi-Einstein constant for residuals; fitted when omitted.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub lambda: Option<f64>,

    /// Minimize the m-energy (optimizing the scale τ) instead of the
    /// (m,mu)-energy.
    #[arg(long, global = true)]
    pub optimize_tau: bool,
    #[arg(long, global = true)]
    pub max_iter: Option<usize>,
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    #[arg(long, global = true, value_enum)]
    pub init: Option<InitKind>,
    #[arg(long, global = true)]
    pub amplitude: Option<f64>,

    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub trials: Option<usize>,
    /// Size of the perturbation used by the negative controls.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub perturb: Option<f64>,
    /// Worker threads for independent checks and sweep points.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,

    /// Second derivative of f at the pole.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub f2: Option<f64>,
    #[arg(long, global = true)]
    pub r_end: Option<f64>,
    /// Shoot on f''(0) for a solution that closes up.
    #[arg(long, global = true)]
    pub shoot: bool,
    /// Shooting bracket "lo,hi" for f''(0).
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub bracket: Option<String>,
    /// Fraction of the closing radius kept in a shot solution.
    #[arg(long, global = true)]
    pub keep: Option<f64>,
    /// Number of grid doublings for the residual convergence study.
    #[arg(long, global = true)]
    pub refine: Option<usize>,

    #[arg(long, global = true, value_enum)]
    pub param: Option<SweepParam>,
    /// Comma-separated sweep values.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub values: Option<String>,
    #[arg(long, global = true, value_enum)]
    pub task: Option<SweepTask>,
}

/// Contents of `--config`. Field names match the long flags with `_`.
#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub out_dir: Option<PathBuf>,
    pub family: Option<Family>,
    pub n: Option<usize>,
    pub m: Option<DimParam>,
    pub grid: Option<usize>,
    pub radius: Option<f64>,
    pub v_amp: Option<f64>,
    pub phi_amp: Option<f64>,
    pub squash: Option<f64>,
    pub mu: Option<f64>,
    pub r_max: Option<f64>,
    pub lambda: Option<f64>,
    pub r: Option<Vec<f64>>,
    pub psi: Option<Vec<f64>>,
    pub density: Option<Vec<f64>>,
    pub optimize_tau: Option<bool>,
    pub max_iter: Option<usize>,
    pub tol: Option<f64>,
    pub init: Option<InitKind>,
    pub amplitude: Option<f64>,
    pub seed: Option<u64>,
    pub trials: Option<usize>,
    pub perturb: Option<f64>,
    pub jobs: Option<usize>,
    pub f2: Option<f64>,
    pub r_end: Option<f64>,
    pub shoot: Option<bool>,
    pub bracket: Option<[f64; 2]>,
    pub keep: Option<f64>,
    pub refine: Option<usize>,
    pub param: Option<SweepParam>,
    pub values: Option<Vec<f64>>,
    pub task: Option<SweepTask>,
}

/// Fully resolved settings.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: Command,
    pub out_dir: PathBuf,
    pub model: ModelConfig,
    pub lambda: Option<f64>,
    pub optimize_tau: bool,
    pub max_iter: usize,
    pub tol: f64,
    pub init: InitKind,
    pub amplitude: f64,
    pub seed: u64,
    pub trials: usize,
    pub perturb: f64,
    pub jobs: usize,
    pub f2: f64,
    pub r_end: f64,
    pub shoot: bool,
    pub bracket: (f64, f64),
    pub keep: f64,
    pub refine: usize,
    pub param: SweepParam,
    pub values: Vec<f64>,
    pub task: SweepTask,
}

fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

fn parse_list(s: &str) -> Result<Vec<f64>, CliError> {
    s.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| config_err(format!("cannot parse {t:?} as a number"))))
        .collect()
}

impl RunConfig {
    pub fn resolve(command: Command, flags: Flags, env_out_dir: Option<PathBuf>) -> Result<Self, CliError> {
        let file: FileConfig = match &flags.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| config_err(format!("cannot read {}: {e}", path.display())))?;
                serde_json::from_str(&text).map_err(|e| config_err(format!("bad config {}: {e}", path.display())))?
            }
            None => FileConfig::default(),
        };
        let family = match flags.family.as_deref() {
            Some(s) => s.parse::<Family>().map_err(|e| config_err(e.to_string()))?,
            None => file.family.unwrap_or(Family::Gaussian),
        };
        let m = match flags.m.as_deref() {
            Some(s) => s.parse::<DimParam>().map_err(|e| config_err(e.to_string()))?,
            None => file.m.unwrap_or(DimParam::Finite(2.0)),
        };
        let n = flags.n.or(file.n).unwrap_or(4);
        let default_grid = if command == Command::Verify { 257 } else { DEFAULT_GRID };
        let grid = flags.grid.or(file.grid).unwrap_or(default_grid);
        if n < 3 {
            return Err(config_err(format!("n must be >= 3, got {n}")));
        }
        if grid < 65 {
            return Err(config_err(format!("grid must be >= 65, got {grid}")));
        }
        let params = ModelParams {
            radius: flags.radius.or(file.radius),
            v_amp: flags.v_amp.or(file.v_amp),
            phi_amp: flags.phi_amp.or(file.phi_amp),
            squash: flags.squash.or(file.squash),
            mu: flags.mu.or(file.mu),
            r_max: flags.r_max.or(file.r_max),
            r: file.r,
            psi: file.psi,
            density: file.density,
        };
        let bracket = match flags.bracket.as_deref() {
            Some(s) => match parse_list(s)?.as_slice() {
                [lo, hi] => (*lo, *hi),
                _ => return Err(config_err("bracket needs exactly two values")),
            },
            None => file.bracket.map(|[a, b]| (a, b)).unwrap_or((-1.0, 1.0)),
        };
        let values = match flags.values.as_deref() {
            Some(s) => parse_list(s)?,
            None => file.values.unwrap_or_default(),
        };
        let jobs = flags.jobs.or(file.jobs).unwrap_or(1);
        if jobs == 0 {
            return Err(config_err("jobs must be >= 1"));
        }
        Ok(RunConfig {
            command,
            out_dir: flags.out_dir.or(env_out_dir).or(file.out_dir).unwrap_or_else(|| PathBuf::from(".")),
            model: ModelConfig { family, n, m, params, grid },
            lambda: flags.lambda.or(file.lambda),
            optimize_tau: flags.optimize_tau || file.optimize_tau.unwrap_or(false),
            max_iter: flags.max_iter.or(file.max_iter).unwrap_or(5000),
            tol: flags.tol.or(file.tol).unwrap_or_else(|| MinimizeOptions::default().tol),
            init: flags.init.or(file.init).unwrap_or(InitKind::Constant),
            amplitude: flags.amplitude.or(file.amplitude).unwrap_or(0.3),
            seed: flags.seed.or(file.seed).unwrap_or(0),
            trials: flags.trials.or(file.trials).unwrap_or(100),
            perturb: flags.perturb.or(file.perturb).unwrap_or(0.1),
            jobs,
            f2: flags.f2.or(file.f2).unwrap_or(0.0),
            r_end: flags.r_end.or(file.r_end).unwrap_or(3.0),
            shoot: flags.shoot || file.shoot.unwrap_or(false),
            bracket,
            keep: flags.keep.or(file.keep).unwrap_or(0.9),
            refine: flags.refine.or(file.refine).unwrap_or(0),
            param: flags.param.or(file.param).unwrap_or(SweepParam::M),
            values,
            task: flags.task.or(file.task).unwrap_or(SweepTask::Model),
        })
    }
}
