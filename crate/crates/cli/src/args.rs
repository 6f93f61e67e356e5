use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "spde-milstein",
    version,
    about = "Stability analysis, convergence studies, multilevel tranche pricing and single-path solves \
             for theta-sigma Milstein finite differences"
)]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,

    #[command(subcommand)]
    pub command: Command,
}

/// Flags shared by every command. Unset values fall back to `--config`, then
/// to the command's defaults.
#[derive(Debug, Clone, Default, Args)]
pub struct Common {
    /// Correlation with the common factor, in [0, 1).
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub rho: Option<f64>,
    /// Drift of the firm-value process.
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub mu: Option<f64>,
    /// Implicitness of the drift and diffusion terms, in [0, 1].
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub theta: Option<f64>,
    /// Implicitness of the Ito correction, in [-1, 1].
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub sigma: Option<f64>,
    /// Discretisation of the Ito correction.
    #[arg(long, global = true, value_enum)]
    pub variant: Option<Variant>,
    /// Grid stretching exponent (1 = uniform, 0.5 = square root).
    #[arg(long, global = true)]
    pub alpha: Option<f64>,
    /// Number of refinement levels.
    #[arg(long, global = true)]
    pub levels: Option<u32>,
    /// Monte Carlo sample count.
    #[arg(long, global = true)]
    pub samples: Option<usize>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Output file; standard output when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Emit JSON instead of CSV.
    #[arg(long, global = true)]
    pub json: bool,
    /// Run even when the mesh violates the stability condition.
    #[arg(long, global = true)]
    pub force: bool,
    /// Flat key=value file; keys are long flag names.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Variant {
    Compact,
    Iterated,
}

impl std::str::FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        <Variant as ValueEnum>::from_str(s, true)
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Closed-form mean-square stability limits over a range of rho.
    Stability(StabilityArgs),
    /// Mean-square error measures over refinement levels.
    Converge(ConvergeArgs),
    /// Multilevel estimates of the discounted tranche spread leg.
    Price(PriceArgs),
    /// Terminal field of one sample path.
    Solve(SolveArgs),
    /// Monte Carlo growth rate of a single Fourier mode.
    ModeDecay(ModeDecayArgs),
}

#[derive(Debug, Clone, Args)]
pub struct StabilityArgs {
    #[arg(long)]
    pub rho_min: Option<f64>,
    #[arg(long)]
    pub rho_max: Option<f64>,
    /// Number of intervals between rho-min and rho-max.
    #[arg(long)]
    pub steps: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SchemeName {
    Explicit,
    Implicit,
    CrankNicolson,
}

impl std::str::FromStr for SchemeName {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        <SchemeName as ValueEnum>::from_str(s, true)
    }
}

#[derive(Debug, Clone, Args)]
pub struct ConvergeArgs {
    /// Absorbing boundary at 0 on [0, 16]; only the two-grid measure is available.
    #[arg(long)]
    pub bounded: bool,
    /// Final time.
    #[arg(long)]
    pub horizon: Option<f64>,
    /// Coarsest timestep.
    #[arg(long)]
    pub k0: Option<f64>,
    /// Schemes to compare; ignored when --theta or --sigma is given.
    #[arg(long, value_enum, value_delimiter = ',')]
    pub schemes: Vec<SchemeName>,
}

#[derive(Debug, Clone, Args)]
pub struct PriceArgs {
    #[arg(long)]
    pub attach: Option<f64>,
    #[arg(long)]
    pub detach: Option<f64>,
    /// Continuously compounded interest rate.
    #[arg(long)]
    pub rate: Option<f64>,
    /// Years between payments.
    #[arg(long)]
    pub interval: Option<f64>,
    #[arg(long)]
    pub payments: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct SolveArgs {
    /// Refinement level of the solve.
    #[arg(long)]
    pub level: Option<u32>,
    /// Index of the sample path.
    #[arg(long)]
    pub index: Option<u64>,
    /// Absorbing boundary at 0 on [0, 16].
    #[arg(long)]
    pub bounded: bool,
    #[arg(long)]
    pub horizon: Option<f64>,
    #[arg(long)]
    pub k0: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct ModeDecayArgs {
    /// Fourier angle in (0, pi].
    #[arg(long)]
    pub phi: Option<f64>,
    /// Mesh ratio k/h^2.
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Steps of the recursion per sample.
    #[arg(long)]
    pub steps: Option<usize>,
}
