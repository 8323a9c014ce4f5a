use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;
mod config;
mod output;

use commands::Failure;
use config::RunConfig;

/// Self-dual Ginzburg-Landau vortex lattices: solves, chi sweeps, phase data and checks.
#[derive(Parser)]
#[command(name = "glsd", version)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// key=value file; flags take precedence
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Lattice preset (square, hex)
    #[arg(long, global = true)]
    lattice: Option<String>,
    /// Length of the first period vector (custom lattice)
    #[arg(long, global = true)]
    u: Option<String>,
    /// Shear of the second period vector (custom lattice)
    #[arg(long, global = true)]
    w: Option<String>,
    /// Grid points per side (disables automatic refinement at small H)
    #[arg(long, global = true)]
    grid: Option<String>,
    #[arg(long = "theta-trunc", global = true)]
    theta_trunc: Option<String>,
    /// Residual tolerance of the nonlinear solver
    #[arg(long, global = true)]
    tol: Option<String>,
    /// Internal field for `solve`
    #[arg(long = "H", global = true)]
    h: Option<String>,
    /// Comma-separated descending internal fields
    #[arg(long = "H-grid", global = true)]
    h_grid: Option<String>,
    /// k_min,k_max[,samples]
    #[arg(long = "k-range", global = true)]
    k_range: Option<String>,
    /// Output directory (default: $GLSD_OUT_DIR, else standard output)
    #[arg(long, global = true)]
    out: Option<String>,
    /// csv or json
    #[arg(long, global = true)]
    format: Option<String>,
    /// Worker threads
    #[arg(long, global = true)]
    jobs: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the self-dual pair at one internal field
    Solve,
    /// Tabulate chi along a descending list of internal fields
    ChiSweep,
    /// Critical-field bounds over a k range and point classification
    Phase {
        /// k,H_ext point to classify (repeatable)
        #[arg(long, value_name = "K,H")]
        classify: Vec<String>,
    },
    /// Run the invariant battery
    Verify {
        #[arg(long, hide = true)]
        inject_fault: bool,
    },
}

impl Common {
    fn run_config(&self) -> Result<RunConfig, String> {
        let base = match &self.config {
            Some(p) => RunConfig::from_file(p)?,
            None => RunConfig::default(),
        };
        let mut flags = RunConfig::default();
        let pairs = [
            ("lattice", &self.lattice),
            ("u", &self.u),
            ("w", &self.w),
            ("grid", &self.grid),
            ("theta-trunc", &self.theta_trunc),
            ("tol", &self.tol),
            ("H", &self.h),
            ("H-grid", &self.h_grid),
            ("k-range", &self.k_range),
            ("out", &self.out),
            ("format", &self.format),
            ("jobs", &self.jobs),
        ];
        for (key, value) in pairs {
            if let Some(v) = value {
                flags.set(key, v)?;
            }
        }
        Ok(base.overridden_by(flags))
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let cfg = cli.common.run_config().map_err(Failure::Config)?;
    if let Some(j) = cfg.jobs {
        if j == 0 {
            return Err(Failure::Config("jobs must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new().num_threads(j).build_global().map_err(|e| Failure::Config(e.to_string()))?;
    }
    match cli.command {
        Command::Solve => commands::solve(&cfg),
        Command::ChiSweep => commands::chi_sweep_cmd(&cfg),
        Command::Phase { classify } => commands::phase(&cfg, &classify),
        Command::Verify { inject_fault } => commands::verify(&cfg, inject_fault),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Config(m) => eprintln!("error: {m}"),
                Failure::Solver(diag) => eprintln!("{diag}"),
                Failure::Verification => eprintln!("verification failed"),
                Failure::Io(e) => eprintln!("error: {e}"),
            }
            ExitCode::from(f.exit_code() as u8)
        }
    }
}
