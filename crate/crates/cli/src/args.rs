//! Command-line flags.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::report::Tolerances;

#[derive(Debug, Parser)]
#[command(
    name = "curvkit",
    version,
    about = "Zero-curvature verification for semi-discrete Lax pairs"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the randomized algebraic identity suites.
    Identities(IdentitiesArgs),
    /// Verify zero curvature on a computed solution.
    #[command(subcommand)]
    Verify(VerifyCommand),
    /// Run a solver and write the field file.
    #[command(subcommand)]
    Simulate(SimulateCommand),
    /// Convert a field file to CSV.
    Dump(DumpArgs),
    /// Print the report JSON schema.
    Schema,
}

#[derive(Debug, Args)]
pub struct ToleranceArgs {
    /// Tolerance of the example's main curvature check.
    #[arg(long)]
    pub tolerance: Option<f64>,
    #[arg(long, default_value_t = 1e-12)]
    pub tol_algebraic: f64,
    #[arg(long, default_value_t = 1e-10)]
    pub tol_discrete: f64,
    #[arg(long, default_value_t = 1e-7)]
    pub tol_solver: f64,
}

/// Which tolerance class `--tolerance` replaces.
#[derive(Clone, Copy, Debug)]
pub enum TolClass {
    Algebraic,
    Discrete,
    Solver,
}

impl ToleranceArgs {
    pub fn resolve(&self, class: TolClass) -> Tolerances {
        let mut t = Tolerances {
            algebraic: self.tol_algebraic,
            discrete: self.tol_discrete,
            solver: self.tol_solver,
        };
        if let Some(v) = self.tolerance {
            match class {
                TolClass::Algebraic => t.algebraic = v,
                TolClass::Discrete => t.discrete = v,
                TolClass::Solver => t.solver = v,
            }
        }
        t
    }
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct IdentitiesArgs {
    #[arg(long, default_value_t = 2024)]
    pub seed: u64,
    /// Box sides; every size must be at least 4.
    #[arg(long, value_delimiter = ',', default_value = "4,6,8")]
    pub sizes: Vec<usize>,
    /// Random cases per suite.
    #[arg(long, default_value_t = 100)]
    pub cases: usize,
    #[command(flatten)]
    pub tol: ToleranceArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Subcommand)]
pub enum VerifyCommand {
    Nls(VerifyNlsArgs),
    Sg(VerifySgArgs),
    Toda(VerifyTodaArgs),
}

#[derive(Debug, Args)]
pub struct VerifyCommon {
    /// Verify this field file instead of a freshly computed solution.
    #[arg(long)]
    pub field: Option<PathBuf>,
    /// Write CSV dumps of the solution and curvature fields into this directory.
    #[arg(long)]
    pub dump: Option<PathBuf>,
    #[command(flatten)]
    pub tol: ToleranceArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum NlsMethod {
    Spectral,
    CrankNicolson,
}

#[derive(Debug, Args)]
pub struct VerifyNlsArgs {
    /// Use the connection matrices exactly as printed.
    #[arg(long)]
    pub as_printed: bool,
    /// Coarsest spacing of the refinement study (then halved twice).
    #[arg(long, default_value_t = 0.1)]
    pub conv_h: f64,
    /// Spatial half-width of the refinement window.
    #[arg(long, default_value_t = 5.0)]
    pub conv_half_width: f64,
    /// Solver spacing.
    #[arg(long, default_value_t = 0.05)]
    pub h: f64,
    #[arg(long, default_value_t = -20.0, allow_hyphen_values = true)]
    pub x_min: f64,
    #[arg(long, default_value_t = 20.0, allow_hyphen_values = true)]
    pub x_max: f64,
    #[arg(long, default_value_t = 1e-3)]
    pub dt: f64,
    #[arg(long, default_value_t = 1000)]
    pub steps: usize,
    #[arg(long, value_enum, default_value_t = NlsMethod::Spectral)]
    pub method: NlsMethod,
    #[command(flatten)]
    pub common: VerifyCommon,
}

#[derive(Debug, Args)]
pub struct VerifySgArgs {
    #[arg(long, default_value_t = 1.0)]
    pub gamma: f64,
    #[arg(long, default_value_t = 1.0)]
    pub k: f64,
    /// Coefficient of the chain equation used to generate the solution.
    #[arg(long, default_value_t = 4.0)]
    pub coefficient: f64,
    #[command(flatten)]
    pub chain: ChainArgs,
    /// Spectral parameters of the scan.
    #[arg(long, value_delimiter = ',', default_value = "0.5,1,2")]
    pub scan_params: Vec<f64>,
    #[command(flatten)]
    pub common: VerifyCommon,
}

#[derive(Debug, Args)]
pub struct VerifyTodaArgs {
    #[arg(long, default_value_t = 1.0)]
    pub lambda: f64,
    #[command(flatten)]
    pub lattice: TodaLatticeArgs,
    #[arg(long, value_delimiter = ',', default_value = "0.5,1,2")]
    pub scan_params: Vec<f64>,
    /// Size of the single-site perturbation used for the negative control.
    #[arg(long, default_value_t = 0.1)]
    pub perturbation: f64,
    #[command(flatten)]
    pub common: VerifyCommon,
}

/// Sine-Gordon chain set-up shared by `verify` and `simulate`.
#[derive(Debug, Args)]
pub struct ChainArgs {
    /// Number of chain sites.
    #[arg(long, default_value_t = 64)]
    pub n: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub dt: f64,
    #[arg(long, default_value_t = 1000)]
    pub steps: usize,
    #[arg(long, default_value_t = 10)]
    pub record_every: usize,
    /// Initial angles are uniform in (−amplitude, amplitude).
    #[arg(long, default_value_t = 0.1)]
    pub amplitude: f64,
    /// Constant edge velocity.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub drive: f64,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Rows {
    Zero,
    Bump,
    Random,
}

/// Toda lattice set-up shared by `verify` and `simulate`.
#[derive(Debug, Args)]
pub struct TodaLatticeArgs {
    /// Rows (m) by sites (n), e.g. `64x64`.
    #[arg(long, default_value = "64x64", value_parser = parse_size)]
    pub size: (usize, usize),
    #[arg(long, value_enum, default_value_t = Rows::Bump)]
    pub rows: Rows,
    /// Bump height or random amplitude.
    #[arg(long, default_value_t = 0.5)]
    pub amplitude: f64,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
}

#[derive(Debug, Subcommand)]
pub enum SimulateCommand {
    Nls(SimulateNlsArgs),
    Sg(SimulateSgArgs),
    Toda(SimulateTodaArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Profile {
    Soliton,
    Zero,
}

#[derive(Debug, Args)]
pub struct SimulateNlsArgs {
    #[arg(long, value_enum, default_value_t = Profile::Soliton)]
    pub profile: Profile,
    #[arg(long, default_value_t = 0.05)]
    pub h: f64,
    #[arg(long, default_value_t = -20.0, allow_hyphen_values = true)]
    pub x_min: f64,
    #[arg(long, default_value_t = 20.0, allow_hyphen_values = true)]
    pub x_max: f64,
    #[arg(long, default_value_t = 1e-3)]
    pub dt: f64,
    #[arg(long, default_value_t = 1000)]
    pub steps: usize,
    #[arg(long, default_value_t = 10)]
    pub record_every: usize,
    #[arg(long, value_enum, default_value_t = NlsMethod::Spectral)]
    pub method: NlsMethod,
    /// Solver configuration as a JSON document; overrides the step flags.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Field file; `.csv` selects the CSV layout.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SimulateSgArgs {
    #[arg(long, default_value_t = 1.0)]
    pub gamma: f64,
    #[arg(long, default_value_t = 4.0)]
    pub coefficient: f64,
    #[command(flatten)]
    pub chain: ChainArgs,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SimulateTodaArgs {
    #[command(flatten)]
    pub lattice: TodaLatticeArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct DumpArgs {
    #[arg(long)]
    pub field: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

fn parse_size(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("expected ROWSxSITES, got `{s}`"))?;
    let parse = |v: &str| v.trim().parse::<usize>().map_err(|e| format!("`{v}`: {e}"));
    Ok((parse(a)?, parse(b)?))
}
