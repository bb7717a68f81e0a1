use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use twinphase::constants::SR87_MASS;

/// Phase decomposition and quantum-clock interference for light-pulse atom
/// interferometers. All numeric flags are SI.
#[derive(Parser, Debug)]
#[command(name = "twinphase", version, about)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Phase breakdown of one geometry; `--omega` adds the clock beat.
    Simulate(SimulateArgs),
    /// Sweep T or k over a builder family, one CSV row per grid point.
    Scan(ScanArgs),
    /// Phase-space closure report; exits 2 if the geometry is open.
    Check(CheckArgs),
    /// Finite-pulse numerical oracle against the closed form.
    Oracle(OracleArgs),
    /// Branch trajectories as CSV `t,z1,v1,z2,v2,zg`.
    Trajectory(TrajectoryArgs),
    /// Write a geometry in the text file format.
    Export(ExportArgs),
}

#[derive(Args, Debug, Clone)]
pub struct GeometryArgs {
    /// mzi, rbi-sym, rbi-asym, rbi-double or file:<path>
    #[arg(long, value_name = "GEOMETRY")]
    pub geometry: String,

    /// Effective wave number (1/m)
    #[arg(long, value_name = "1/m", allow_negative_numbers = true, conflicts_with = "k_in_km")]
    pub k: Option<f64>,

    /// Wave number in multiples of k_m = 1.5e7 /m
    #[arg(long = "k-in-km", value_name = "MULTIPLE", allow_negative_numbers = true)]
    pub k_in_km: Option<f64>,

    /// Pulse separation (s)
    #[arg(long = "T", value_name = "s", allow_negative_numbers = true)]
    pub t: Option<f64>,

    /// Central pause of the Ramsey-Bordé builders (s)
    #[arg(long = "Tprime", value_name = "s", allow_negative_numbers = true)]
    pub t_prime: Option<f64>,
}

#[derive(Args, Debug, Clone)]
pub struct PhysicsArgs {
    /// Gravitational acceleration (m/s²)
    #[arg(long, value_name = "m/s2", default_value_t = 9.81, allow_negative_numbers = true)]
    pub g: f64,

    /// Atomic mass (kg), mean mass in clock mode
    #[arg(long, value_name = "kg", default_value_t = SR87_MASS, allow_negative_numbers = true)]
    pub mass: f64,

    /// Initial height (m)
    #[arg(long, value_name = "m", default_value_t = 0.0, allow_negative_numbers = true)]
    pub z0: f64,

    /// Initial vertical velocity (m/s)
    #[arg(long, value_name = "m/s", default_value_t = 0.0, allow_negative_numbers = true)]
    pub v0: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
    Csv,
}

impl Format {
    pub fn as_str(self) -> &'static str {
        match self {
            Format::Text => "text",
            Format::Json => "json",
            Format::Csv => "csv",
        }
    }
}

#[derive(Args, Debug, Clone)]
pub struct OutputArgs {
    #[arg(long, value_enum)]
    pub format: Option<Format>,

    /// Write to a file instead of stdout
    #[arg(long, short, value_name = "PATH")]
    pub output: Option<PathBuf>,

    /// Record the wall-clock time in the manifest
    #[arg(long)]
    pub stamp: bool,

    /// Evaluate on one thread (output is identical either way)
    #[arg(long)]
    pub sequential: bool,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub geometry: GeometryArgs,
    #[command(flatten)]
    pub physics: PhysicsArgs,
    /// Clock splitting Ω (rad/s); enables clock mode
    #[arg(long, value_name = "rad/s", allow_negative_numbers = true)]
    pub omega: Option<f64>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Vary {
    #[value(name = "T")]
    T,
    #[value(name = "k")]
    K,
}

#[derive(Args, Debug)]
pub struct ScanArgs {
    #[command(flatten)]
    pub geometry: GeometryArgs,
    #[command(flatten)]
    pub physics: PhysicsArgs,
    #[arg(long, value_name = "rad/s", allow_negative_numbers = true)]
    pub omega: Option<f64>,
    #[arg(long, value_enum)]
    pub vary: Vary,
    #[arg(long, allow_negative_numbers = true)]
    pub from: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub to: f64,
    #[arg(long)]
    pub steps: usize,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args, Debug)]
pub struct CheckArgs {
    #[command(flatten)]
    pub geometry: GeometryArgs,
    /// Mass used for the final separation (kg)
    #[arg(long, value_name = "kg", default_value_t = SR87_MASS, allow_negative_numbers = true)]
    pub mass: f64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Shape {
    Tophat,
    Cosine,
}

#[derive(Args, Debug)]
pub struct OracleArgs {
    #[command(flatten)]
    pub geometry: GeometryArgs,
    #[command(flatten)]
    pub physics: PhysicsArgs,
    /// Pulse width σ (s); defaults to 1e-6 of the reference time
    #[arg(long, value_name = "s", allow_negative_numbers = true)]
    pub sigma: Option<f64>,
    /// Integration steps per segment
    #[arg(long, default_value_t = 100)]
    pub steps: usize,
    #[arg(long, value_enum, default_value_t = Shape::Tophat)]
    pub shape: Shape,
    /// Run σ/T_ref ∈ {1e-3, 1e-4, 1e-5, 1e-6} and report the residual table
    #[arg(long, conflicts_with = "sigma")]
    pub sweep_sigma: bool,
    /// Largest accepted relative residual
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args, Debug)]
pub struct TrajectoryArgs {
    #[command(flatten)]
    pub geometry: GeometryArgs,
    #[command(flatten)]
    pub physics: PhysicsArgs,
    /// Sampling step (s); defaults to t_end/200
    #[arg(long, value_name = "s")]
    pub dt: Option<f64>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args, Debug)]
pub struct ExportArgs {
    #[command(flatten)]
    pub geometry: GeometryArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}
