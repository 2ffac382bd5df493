mod commands;
mod io;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Exact Lip / lip analysis of finite unions of rational intervals.
///
/// Every number is read and written as an exact rational ("p/q", an
/// integer, or a finite decimal). Exit status: 0 when every requested check
/// passes, 1 when a check fails, 2 on bad input, 3 when a size budget is
/// exceeded.
#[derive(Debug, Parser)]
#[command(name = "liplab", version)]
pub struct Cli {
    /// Write the JSON report here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Also write a CSV table (with decimal columns) here.
    #[arg(long, global = true)]
    pub csv: Option<PathBuf>,
    /// Fractional digits for the CSV decimal columns.
    #[arg(long, global = true, default_value_t = 12)]
    pub precision: usize,
    /// Seed for every sampled check.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Algebra on interval sets.
    Set(SetArgs),
    /// Density ratios, sweeps and density checks at a point.
    Density(DensityArgs),
    /// Exact reconstruction of a density level set.
    Levelset(LevelsetArgs),
    /// Builders with their audits.
    #[command(subcommand)]
    Construct(Construct),
    /// M-ratio sweeps and exact local Lipschitz numbers.
    Estimate(EstimateArgs),
    /// The recursive weakly dense non-Lip-1 system.
    #[command(subcommand)]
    Counterexample(Counterexample),
    /// Increment-bound audit of a function against a set.
    Audit(AuditArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SetOp {
    Canon,
    Union,
    Intersect,
    Difference,
    Complement,
    Measure,
    Hull,
    Translate,
    Scale,
    Reflect,
    Distance,
    Contains,
}

#[derive(Debug, Args)]
pub struct SetArgs {
    pub op: SetOp,
    #[arg(long)]
    pub a: PathBuf,
    #[arg(long)]
    pub b: Option<PathBuf>,
    /// `lo,hi` (complement).
    #[arg(long)]
    pub window: Option<String>,
    /// Shift or factor (translate, scale).
    #[arg(long, allow_hyphen_values = true)]
    pub by: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub point: Option<String>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SideArg {
    Left,
    Right,
    Max,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum DensityCheck {
    Weak,
    Strong,
    Center,
    StrongOneSided,
}

#[derive(Debug, Args)]
pub struct DensityArgs {
    #[arg(long)]
    pub set: PathBuf,
    #[arg(long, allow_hyphen_values = true)]
    pub point: String,
    #[arg(long, value_enum, default_value_t = SideArg::Max)]
    pub side: SideArg,
    /// A single radius.
    #[arg(long)]
    pub r: Option<String>,
    /// `start,factor,count` geometric radius grid.
    #[arg(long)]
    pub r_grid: Option<String>,
    #[arg(long, value_enum)]
    pub check: Option<DensityCheck>,
    #[arg(long, default_value = "1/16")]
    pub eps: String,
    /// Tolerance for the grid-based strong one-sided check.
    #[arg(long, default_value = "0")]
    pub tolerance: String,
}

#[derive(Debug, Args)]
pub struct LevelsetArgs {
    #[arg(long)]
    pub set: PathBuf,
    #[arg(long)]
    pub gamma: String,
    #[arg(long)]
    pub delta: String,
    #[arg(long, allow_hyphen_values = true)]
    pub window: String,
    /// Spacing of the self-audit grid.
    #[arg(long, default_value = "1/64")]
    pub resolution: String,
    /// Points whose membership is reported with its certificate.
    #[arg(long, allow_hyphen_values = true)]
    pub point: Vec<String>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModeArg {
    #[value(name = "Lip1")]
    BigLip,
    #[value(name = "lip1")]
    LittleLip,
}

#[derive(Debug, Subcommand)]
pub enum Construct {
    /// `φ = ∫ 1_E` and the density conditions for Lip/lip.
    Monotone {
        #[arg(long)]
        set: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        window: Option<String>,
        #[arg(long, value_enum, default_value_t = ModeArg::BigLip)]
        mode: ModeArg,
        #[arg(long, default_value = "1/16")]
        resolution: String,
    },
    /// `∫ (1_{E₁} − 1_{E₋₁})` from a ternary decomposition.
    Ternary {
        #[arg(long)]
        e1: PathBuf,
        #[arg(long)]
        e0: PathBuf,
        #[arg(long)]
        em1: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        window: String,
        #[arg(long, allow_hyphen_values = true)]
        base: Option<String>,
        #[arg(long, default_value = "1/16")]
        resolution: String,
    },
    /// Sawtooth with `0 ≤ f ≤ ε/2` and zero-lip on `E`.
    SmallLip {
        #[arg(long)]
        set: PathBuf,
        #[arg(long)]
        eps: String,
        #[arg(long, allow_hyphen_values = true)]
        window: String,
    },
    /// Sum of small-lip terms over disjoint parts.
    LipSum {
        #[arg(long, value_delimiter = ',', required = true)]
        parts: Vec<PathBuf>,
        #[arg(long, allow_hyphen_values = true)]
        window: String,
    },
    /// Rise-fall refinement of `f` inside an envelope.
    Refine {
        #[arg(long)]
        function: PathBuf,
        #[arg(long)]
        set: PathBuf,
        #[arg(long)]
        lower: PathBuf,
        #[arg(long)]
        upper: PathBuf,
        #[arg(long)]
        eps: String,
        #[arg(long)]
        delta: String,
        /// Interval set whose components are the compacts (default: hull of E).
        #[arg(long)]
        compacts: Option<PathBuf>,
    },
    /// Flattening of `f` on `H` inside an envelope.
    Flatten {
        #[arg(long)]
        function: PathBuf,
        #[arg(long)]
        set: PathBuf,
        #[arg(long)]
        h: PathBuf,
        #[arg(long)]
        lower: PathBuf,
        #[arg(long)]
        upper: PathBuf,
        #[arg(long)]
        eps: String,
        #[arg(long)]
        delta: String,
    },
    /// Staged construction for a nested closed system.
    Udt {
        /// `{"domain", "target", "flat_sets"}` JSON.
        #[arg(long, conflicts_with = "fat_cantor")]
        system: Option<PathBuf>,
        /// Built-in fat Cantor system with this many levels.
        #[arg(long)]
        fat_cantor: Option<u32>,
        #[arg(long)]
        stages: usize,
        #[arg(long, default_value_t = 50)]
        samples: usize,
        /// Include every stage function in the report.
        #[arg(long)]
        emit_functions: bool,
    },
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    #[arg(long)]
    pub function: PathBuf,
    #[arg(long, allow_hyphen_values = true)]
    pub point: String,
    #[arg(long)]
    pub r_grid: Option<String>,
    /// Report the exact one-sided slopes as `(Lip, lip)`.
    #[arg(long)]
    pub exact: bool,
}

#[derive(Debug, Subcommand)]
pub enum Counterexample {
    /// Blocks, ratio checks and the finite-depth sandwich.
    Gen {
        #[arg(long)]
        depth: usize,
    },
    /// Runs the adversarial recursion against a candidate function.
    Verify {
        #[arg(long)]
        function: PathBuf,
        #[arg(long, default_value_t = 3)]
        depth: usize,
        #[arg(long, default_value = "1/16")]
        eps: String,
    },
}

#[derive(Debug, Args)]
pub struct AuditArgs {
    #[arg(long)]
    pub function: PathBuf,
    #[arg(long)]
    pub set: PathBuf,
    #[arg(long, default_value = "1")]
    pub factor: String,
    /// Random pairs checked in addition to the exact segment audit.
    #[arg(long, default_value_t = 1000)]
    pub pairs: usize,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
