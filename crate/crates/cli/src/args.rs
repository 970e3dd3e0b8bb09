//! Command-line arguments. Every argument struct is also the `config` of the
//! manifest it produces.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use obrs_core::fdiv::Generator;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Debug, Parser)]
#[command(name = "obrs", version, about = "Optimal budgeted rejection sampling experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Tabulate each generator, its conjugate and the discriminator round trip.
    Table1(Table1Args),
    /// Densities, acceptance functions and PR curves for the 1D two-mode pair.
    Fig2(Fig2Args),
    /// Budget-aware loss over the spacing of a ten-mode model.
    Landscape(LandscapeArgs),
    /// Grid fit of a single Gaussian to a two-mode target, per budget.
    Fit(FitArgs),
    /// Improvement bounds over random finite instances.
    Bounds(BoundsArgs),
    /// Precision and recall on the 5x5 Gaussian grid for plain, OBRS and DRS sampling.
    Gaussians25(Gaussians25Args),
    /// Solve for an acceptance function and write it as JSON.
    Solve(SolveArgs),
    /// Rejection-sample from a proposal.
    Sample(SampleArgs),
    /// Rerun a command from its manifest.
    Replay(ReplayArgs),
}

fn parse_generator(s: &str) -> std::result::Result<Generator, String> {
    s.parse().map_err(|e: obrs_core::Error| e.to_string())
}

/// Sampling budget, given either as `K` or as the acceptance rate `1/K`.
#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[group(multiple = false)]
pub struct Budget {
    /// Expected proposals per accepted sample (K >= 1).
    #[arg(long)]
    pub budget: Option<f64>,
    /// Target acceptance rate in (0, 1].
    #[arg(long)]
    pub rate: Option<f64>,
}

impl Budget {
    pub fn resolve(&self, default_k: f64) -> Result<f64> {
        match (self.budget, self.rate) {
            (Some(k), None) if k >= 1.0 && k.is_finite() => Ok(k),
            (Some(k), None) => Err(CliError::Usage(format!("--budget must be finite and >= 1, got {k}"))),
            (None, Some(r)) if r > 0.0 && r <= 1.0 => Ok(1.0 / r),
            (None, Some(r)) => Err(CliError::Usage(format!("--rate must lie in (0, 1], got {r}"))),
            (None, None) => Ok(default_k),
            (Some(_), Some(_)) => Err(CliError::Usage("--budget and --rate are mutually exclusive".into())),
        }
    }
}

/// Quadrature resolution for continuous pairs.
#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct QuadArgs {
    /// Trapezoid nodes.
    #[arg(long, default_value_t = 4096)]
    pub nodes: usize,
    /// Half-width of each component's interval, in standard deviations.
    #[arg(long, default_value_t = 8.0)]
    pub sigmas: f64,
}

impl QuadArgs {
    pub fn quadrature(&self) -> obrs_core::dist::Quadrature {
        obrs_core::dist::Quadrature {
            nodes: self.nodes,
            sigmas: self.sigmas,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Finite supports, exact sums.
    Exact,
    /// 1D mixtures, trapezoid quadrature.
    Quadrature,
    /// Proposal samples.
    Mc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Obrs,
    Drs,
    /// `a = r/M`.
    Unbudgeted,
    /// `a = 1`.
    Unit,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct Table1Args {
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    #[arg(long, default_value_t = 1e-3)]
    pub u_min: f64,
    #[arg(long, default_value_t = 1e3)]
    pub u_max: f64,
    /// Log-spaced ratio values.
    #[arg(long, default_value_t = 61)]
    pub points: usize,
    /// Weights of the PR generators to include.
    #[arg(long, value_delimiter = ',', default_value = "0.5,2")]
    pub pr_lambdas: Vec<f64>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct Fig2Args {
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    #[command(flatten)]
    pub budget: Budget,
    #[command(flatten)]
    pub quad: QuadArgs,
    #[arg(long, default_value_t = -5.0, allow_hyphen_values = true)]
    pub x_min: f64,
    #[arg(long, default_value_t = 5.0)]
    pub x_max: f64,
    #[arg(long, default_value_t = 401)]
    pub x_points: usize,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct LandscapeArgs {
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    #[arg(long = "gen", default_value = "gan", value_parser = parse_generator)]
    pub generator: Generator,
    #[arg(long, value_delimiter = ',', default_value = "1,2,5")]
    pub budgets: Vec<f64>,
    #[arg(long, default_value_t = 0.1)]
    pub theta_min: f64,
    #[arg(long, default_value_t = 2.5)]
    pub theta_max: f64,
    #[arg(long, default_value_t = 241)]
    pub theta_points: usize,
    /// Spacing of the target's modes.
    #[arg(long, default_value_t = obrs_core::dist::TEN_MODE_TARGET_SPACING)]
    pub target_spacing: f64,
    #[command(flatten)]
    pub quad: QuadArgs,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct FitArgs {
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    #[arg(long = "gen", default_value = "gan", value_parser = parse_generator)]
    pub generator: Generator,
    #[arg(long, value_delimiter = ',', default_value = "1,2")]
    pub budgets: Vec<f64>,
    #[arg(long, default_value_t = -3.0, allow_hyphen_values = true)]
    pub mu_min: f64,
    #[arg(long, default_value_t = 3.0)]
    pub mu_max: f64,
    #[arg(long, default_value_t = 121)]
    pub mu_points: usize,
    #[arg(long, default_value_t = 0.2)]
    pub sigma_min: f64,
    #[arg(long, default_value_t = 3.0)]
    pub sigma_max: f64,
    #[arg(long, default_value_t = 141)]
    pub sigma_points: usize,
    /// The target's modes sit at ±this value.
    #[arg(long, default_value_t = obrs_core::dist::TWO_MODE_TARGET_MODE)]
    pub target_mode: f64,
    #[arg(long, default_value_t = obrs_core::dist::TWO_MODE_TARGET_STD)]
    pub target_std: f64,
    #[command(flatten)]
    pub quad: QuadArgs,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct BoundsArgs {
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, default_value_t = 200)]
    pub instances: usize,
    #[arg(long, default_value_t = 32)]
    pub max_atoms: usize,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct Gaussians25Args {
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: u64,
    /// Defaults to a rate of 0.4.
    #[command(flatten)]
    pub budget: Budget,
    /// Accepted samples per method and repeat.
    #[arg(long, default_value_t = 2500)]
    pub samples: usize,
    #[arg(long, default_value_t = 50)]
    pub repeats: usize,
    #[arg(long, default_value_t = 0.05)]
    pub target_std: f64,
    #[arg(long, default_value_t = 0.10)]
    pub proposal_std: f64,
    #[arg(long, default_value_t = 1.0)]
    pub spacing: f64,
    /// Mixing weight of the Dirichlet draw in the proposal's weights.
    #[arg(long, default_value_t = 0.2)]
    pub jitter: f64,
    /// Proposal draws used to estimate M and calibrate both samplers.
    #[arg(long, default_value_t = 100_000)]
    pub calibration_samples: usize,
    /// A sample is high quality within this many target stds of a mode.
    #[arg(long, default_value_t = 4.0)]
    pub radius_stds: f64,
}

/// Target, proposal and how to calibrate against them.
#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct PairArgs {
    /// Target distribution as JSON (`{"type": "finite", "weights": [...]}` or
    /// `{"type": "gaussian_mixture", "weights", "means", "stds"}`).
    #[arg(long)]
    pub target: PathBuf,
    /// Proposal distribution, same format.
    #[arg(long)]
    pub proposal: PathBuf,
    /// Defaults to exact for finite pairs, quadrature for 1D mixtures and mc
    /// otherwise.
    #[arg(long, value_enum)]
    pub mode: Option<Mode>,
    #[arg(long, default_value_t = 100_000)]
    pub calibration_samples: usize,
    #[command(flatten)]
    pub quad: QuadArgs,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct SolveArgs {
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    #[command(flatten)]
    pub pair: PairArgs,
    #[command(flatten)]
    pub budget: Budget,
    #[arg(long, value_enum, default_value = "obrs")]
    pub method: Method,
    /// Required in mc mode.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct SampleArgs {
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    #[command(flatten)]
    pub pair: PairArgs,
    /// Acceptance function JSON as written by `solve`; otherwise one is
    /// solved from the budget and method.
    #[arg(long, conflicts_with_all = ["budget", "rate", "method"])]
    pub acceptance: Option<PathBuf>,
    #[command(flatten)]
    pub budget: Budget,
    #[arg(long, value_enum)]
    pub method: Option<Method>,
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub seed: u64,
    /// Give up after this many proposals; defaults to 1000·n.
    #[arg(long)]
    pub max_draws: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct ReplayArgs {
    pub manifest: PathBuf,
    /// Write to this directory instead of the recorded one.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn parser_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn budget_resolution() {
        let b = |budget, rate| Budget { budget, rate };
        assert_eq!(b(None, None).resolve(2.0).unwrap(), 2.0);
        assert_eq!(b(Some(3.0), None).resolve(2.0).unwrap(), 3.0);
        assert_eq!(b(None, Some(0.4)).resolve(2.0).unwrap(), 2.5);
        assert!(b(Some(0.5), None).resolve(2.0).is_err());
        assert!(b(None, Some(0.0)).resolve(2.0).is_err());
        assert!(b(Some(2.0), Some(0.5)).resolve(2.0).is_err());
    }
}
