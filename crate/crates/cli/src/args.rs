use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Largest number of points a single axis may expand to.
pub const MAX_AXIS_POINTS: usize = 1_000_000;

#[derive(Debug, Parser)]
#[command(name = "lmg-metrology", version, about = "Quantum Fisher information of thermal LMG spin systems")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// QFI, magnetization Fisher information and gap on a (γ, h, β) grid.
    Surface(SurfaceArgs),
    /// Field maximising the QFI for each (γ, β).
    Optimal(OptimalArgs),
    /// Ratio of field-averaged QFI to its peak value.
    Robustness(RobustnessArgs),
    /// Bosonic large-N QFIs on a (γ, h, β) grid.
    Thermo(ThermoArgs),
    /// Runs the oracle suite and writes a pass/fail report.
    Validate(ValidateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TargetArg {
    Anisotropy,
    Temperature,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum QuantityArg {
    GGamma,
    GBeta,
    FiMagnetization,
    Gap,
}

/// Where and how results are written.
#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    /// Output file; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Worker threads for grid evaluation (0 picks the number of cores).
    #[arg(long, default_value_t = 0)]
    pub workers: usize,
}

/// Inverse temperatures, given directly or as temperatures.
#[derive(Debug, Clone, Args)]
#[group(required = true, multiple = false)]
pub struct BetaArgs {
    /// Comma-separated inverse temperatures.
    #[arg(long, value_delimiter = ',')]
    pub beta: Vec<f64>,
    /// Comma-separated temperatures, converted with β = 1/T.
    #[arg(long, value_delimiter = ',')]
    pub temperature: Vec<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct SurfaceArgs {
    #[arg(long, default_value_t = 2)]
    pub n_sites: usize,
    /// Anisotropy, `value` or `start:stop:step`.
    #[arg(long)]
    pub gamma: Axis,
    /// Field, `value` or `start:stop:step`.
    #[arg(long)]
    pub field: Axis,
    #[command(flatten)]
    pub betas: BetaArgs,
    /// Quantities to compute; columns of the others are left empty.
    #[arg(long, value_enum, value_delimiter = ',', default_values_t = [QuantityArg::GGamma, QuantityArg::GBeta, QuantityArg::FiMagnetization, QuantityArg::Gap])]
    pub quantities: Vec<QuantityArg>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct OptimalArgs {
    #[arg(long, default_value_t = 2)]
    pub n_sites: usize,
    #[arg(long)]
    pub gamma: Axis,
    #[command(flatten)]
    pub betas: BetaArgs,
    #[arg(long, value_enum, default_value_t = TargetArg::Anisotropy)]
    pub target: TargetArg,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct RobustnessArgs {
    #[arg(long, default_value_t = 2)]
    pub n_sites: usize,
    #[arg(long)]
    pub gamma: Axis,
    #[command(flatten)]
    pub betas: BetaArgs,
    /// Comma-separated Gaussian widths of the field distribution.
    #[arg(long, value_delimiter = ',', required = true)]
    pub sigma: Vec<f64>,
    /// Read `--sigma` as fractions of the critical field.
    #[arg(long)]
    pub relative_sigma: bool,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct ThermoArgs {
    #[arg(long)]
    pub gamma: Axis,
    #[arg(long)]
    pub field: Axis,
    #[command(flatten)]
    pub betas: BetaArgs,
    /// Fock truncation; chosen from βΔ when omitted.
    #[arg(long)]
    pub cutoff: Option<usize>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct ValidateArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Random points per randomized check.
    #[arg(long, default_value_t = 20)]
    pub draws: usize,
    /// Test hook: scales every numerically computed QFI by (1 + 1e-2) before
    /// comparison, so the oracle checks must report failures.
    #[arg(long)]
    pub inject_perturbation: bool,
    #[command(flatten)]
    pub output: OutputArgs,
}

/// A grid axis: one value or an inclusive `start:stop:step` range.
#[derive(Debug, Clone, PartialEq)]
pub struct Axis(pub Vec<f64>);

#[derive(Debug, Clone, PartialEq)]
pub struct AxisError(String);

impl fmt::Display for AxisError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for AxisError {}

impl FromStr for Axis {
    type Err = AxisError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let number = |t: &str| {
            let v: f64 = t.trim().parse().map_err(|_| AxisError(format!("`{t}` is not a number")))?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(AxisError(format!("`{t}` is not finite")))
            }
        };
        let parts: Vec<&str> = s.split(':').collect();
        match parts.as_slice() {
            [v] => Ok(Axis(vec![number(v)?])),
            [a, b, c] => {
                let (start, stop, step) = (number(a)?, number(b)?, number(c)?);
                if step <= 0.0 {
                    return Err(AxisError(format!("step {step} must be positive")));
                }
                if stop < start {
                    return Err(AxisError(format!("range {s} is empty")));
                }
                let span = (stop - start) / step;
                if span >= MAX_AXIS_POINTS as f64 {
                    return Err(AxisError(format!("range {s} has more than {MAX_AXIS_POINTS} points")));
                }
                // The slack keeps `0:1:0.05` from losing its endpoint to rounding.
                let count = (span + 1e-9).floor() as usize + 1;
                Ok(Axis((0..count).map(|i| start + i as f64 * step).collect()))
            }
            _ => Err(AxisError(format!("`{s}` is neither a value nor start:stop:step"))),
        }
    }
}
