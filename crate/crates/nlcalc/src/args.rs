use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "nlcalc", version, about = "Nonlocal fractional gradients with a finite horizon", arg_required_else_help = true)]
pub struct Cli {
    /// File of `key = value` lines used as defaults for the subcommand's flags.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Print a short summary of each run to standard error.
    #[arg(long, short, global = true)]
    pub verbose: bool,

    #[command(subcommand)]
    pub command: Command,
}

/// Kernel parameters shared by every subcommand.
#[derive(Debug, Clone, Args)]
pub struct KernelOpts {
    /// Fractional order s in (0, 1).
    #[arg(long, default_value_t = 0.5)]
    pub s: f64,
    /// Horizon δ.
    #[arg(long, default_value_t = 0.25)]
    pub delta: f64,
    /// Plateau height of the cut-off.
    #[arg(long, default_value_t = 1.0)]
    pub a0: f64,
    /// Plateau radius as a fraction of δ.
    #[arg(long, default_value_t = 0.5)]
    pub b0: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FieldFormat {
    Nlf,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BumpKind {
    Gauss,
    Poly,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum IneqKind {
    Poincare,
    Sobolev,
    Morrey,
    Trudinger,
    Hardy,
    Translation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FamilyKind {
    Bumps,
    Trig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EnergyKind {
    Quadratic,
    Plaplace,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Tabulate the cut-off w̄, the profile q̄ and the radial kernel Q̄.
    #[command(args_override_self = true)]
    Kernel {
        #[arg(long, default_value_t = 1)]
        n: usize,
        #[command(flatten)]
        kernel: KernelOpts,
        /// Number of radii sampled on (0, δ].
        #[arg(long, default_value_t = 200)]
        samples: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate the nonlocal gradient of a field stored as NLF1.
    #[command(args_override_self = true)]
    Grad {
        #[command(flatten)]
        kernel: KernelOpts,
        #[arg(long = "in", value_name = "FILE")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = FieldFormat::Nlf)]
        format: FieldFormat,
    },
    /// Refinement study of the integration-by-parts identity.
    #[command(args_override_self = true)]
    IbpCheck {
        #[command(flatten)]
        kernel: KernelOpts,
        /// Comma-separated cell counts.
        #[arg(long, value_delimiter = ',', default_values_t = [128usize, 256, 512])]
        refine: Vec<usize>,
        /// Refinement factor of the grid used for the collar integral.
        #[arg(long, default_value_t = 4)]
        factor: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build the inverse kernel V and report its checks.
    #[command(args_override_self = true)]
    Vkernel {
        #[arg(long, default_value_t = 1)]
        n: usize,
        #[command(flatten)]
        kernel: KernelOpts,
        /// Cells per axis across [-1, 1]ⁿ.
        #[arg(long = "N", default_value_t = 1024)]
        cells: usize,
        /// Padding factor of the transform grid.
        #[arg(long, default_value_t = 4)]
        pad: usize,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = FieldFormat::Nlf)]
        format: FieldFormat,
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long, hide = true)]
        inject_negative_qhat: bool,
    },
    /// Round trip u → D u → u through the inverse kernel at N and 2N.
    #[command(args_override_self = true)]
    FtcCheck {
        #[arg(long, default_value_t = 1)]
        n: usize,
        #[command(flatten)]
        kernel: KernelOpts,
        /// Cells per axis of the base box [-0.5, 1.5]ⁿ.
        #[arg(long = "N", default_value_t = 1024)]
        cells: usize,
        #[arg(long, default_value_t = 4)]
        pad: usize,
        #[arg(long, value_enum, default_value_t = BumpKind::Gauss)]
        bump: BumpKind,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Ensemble estimates of a functional inequality.
    #[command(args_override_self = true)]
    Ineq {
        #[arg(value_enum)]
        kind: IneqKind,
        #[arg(long, default_value_t = 1)]
        n: usize,
        #[command(flatten)]
        kernel: KernelOpts,
        /// Integrability exponent; Trudinger defaults to n/s, the others to 2.
        #[arg(long)]
        p: Option<f64>,
        /// Target exponent of the Sobolev ratio; defaults to p.
        #[arg(long)]
        q: Option<f64>,
        /// Cells per axis of [-0.5, 1.5]ⁿ; 256 in one dimension and 64 in two by default.
        #[arg(long = "N")]
        cells: Option<usize>,
        #[arg(long, default_value_t = 50)]
        members: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = FamilyKind::Bumps)]
        family: FamilyKind,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Minimise a convex energy over functions fixed outside the inner domain.
    #[command(args_override_self = true)]
    Minimize {
        #[arg(long, default_value_t = 1)]
        n: usize,
        #[command(flatten)]
        kernel: KernelOpts,
        #[arg(long, value_enum, default_value_t = EnergyKind::Quadratic)]
        energy: EnergyKind,
        /// Growth exponent of the p-Laplace energy (default 4).
        #[arg(long)]
        p: Option<f64>,
        #[arg(long = "N", default_value_t = 64)]
        cells: usize,
        /// Source term f as NLF1.
        #[arg(long)]
        source: Option<PathBuf>,
        /// Boundary datum g as NLF1; zero when absent.
        #[arg(long)]
        datum: Option<PathBuf>,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        #[arg(long, default_value_t = 10_000)]
        max_iters: usize,
        #[arg(long, default_value_t = 0.0)]
        momentum: f64,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = FieldFormat::Nlf)]
        format: FieldFormat,
        #[arg(long)]
        trace: Option<PathBuf>,
    },
}
