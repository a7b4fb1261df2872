//! `catkit`: catability sweeps, verification suites and claim reports.
//!
//! Exit status: 0 success, 1 usage or runtime error, 2 verification failure.

mod commands;
mod config;
mod state;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, Context, Result};
use catkit::catability::ParityVariant;
use catkit::fock::{Branch, C64};
use clap::{Parser, Subcommand};

use commands::{Outcome, PhasePoints, XiArgs};
use config::{Overrides, RunConfig};
use state::StateSpec;

#[derive(Parser, Debug)]
#[command(name = "catkit", version, about = "Catability witness toolkit for bosonic states")]
struct Cli {
    #[command(flatten)]
    overrides: Overrides,
    /// Run only brute-force reference paths and emit fixtures
    #[arg(long, global = true)]
    oracle: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Algebra and arena invariant suite
    Verify {
        /// Basis states excluded below the cutoff
        #[arg(long, default_value_t = 4)]
        guard: usize,
    },
    /// Catability of one test state
    Xi {
        /// cat:A:even|odd, coherent:A, fock:N, squeezed_fock:N:R:THETA, lossy_cat:A:even|odd:TAU
        #[arg(long)]
        state: String,
        /// Witness amplitude (real, or complex as `a+bi`)
        #[arg(long)]
        alpha: Option<C64>,
        #[arg(long)]
        branch: Option<Branch>,
        /// Phase of the phase-dependent witness, radians
        #[arg(long)]
        phi: Option<f64>,
        /// conjugated | phase_weighted
        #[arg(long, default_value = "phase_weighted")]
        variant: ParityVariant,
    },
    /// Phase-dependent catability over a phase or flux list
    SweepPhase {
        #[arg(long)]
        alpha: C64,
        #[arg(long, default_value = "even")]
        branch: Branch,
        /// Uniform phases in [0, 2π)
        #[arg(long, default_value_t = 9, conflicts_with = "flux")]
        points: usize,
        /// Comma-separated fluxes in units of the flux quantum
        #[arg(long, value_delimiter = ',')]
        flux: Option<Vec<f64>>,
        #[arg(long, default_value = "phase_weighted")]
        variant: ParityVariant,
        /// Test state (defaults to the matching ideal cat)
        #[arg(long)]
        state: Option<String>,
    },
    /// Even/odd cat robustness under photon loss
    SweepLoss {
        #[arg(long, default_value = "1.2")]
        alpha: C64,
        /// Comma-separated transmissivities
        #[arg(long, value_delimiter = ',', default_value = "1,0.95,0.9,0.8")]
        taus: Vec<f64>,
    },
    /// Closed-form claims against independent oracles
    Claims {
        /// Oracle fixture file replacing the embedded one
        #[arg(long)]
        fixtures: Option<PathBuf>,
    },
    /// Green-function projection consistency on a ring
    GreensDemo {
        #[arg(long, default_value_t = 16)]
        sites: usize,
        /// single:M, thermal:NU or modes:M=NU,M=NU,...
        #[arg(long, default_value = "single:1")]
        occupation: String,
        /// Mode to project onto (defaults to the first occupied mode)
        #[arg(long, allow_hyphen_values = true)]
        mode: Option<i64>,
    },
}

fn configure_threads() -> Result<()> {
    let Ok(raw) = std::env::var("CATKIT_THREADS") else {
        return Ok(());
    };
    let n: usize = raw.trim().parse().map_err(|_| anyhow!("CATKIT_THREADS must be a non-negative integer, got `{raw}`"))?;
    if n > 0 {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().context("configuring thread pool")?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<Outcome> {
    configure_threads()?;
    let cfg = RunConfig::resolve(&cli.overrides)?;
    match cli.command {
        Command::Verify { guard } => commands::cmd_verify(&cfg, guard),
        Command::Xi { state, alpha, branch, phi, variant } => {
            let state: StateSpec = state.parse()?;
            commands::cmd_xi(&cfg, &XiArgs { state, alpha, branch, phi, variant, oracle: cli.oracle })
        }
        Command::SweepPhase { alpha, branch, points, flux, variant, state } => {
            let state = state.map(|s| s.parse::<StateSpec>()).transpose()?;
            let points = match flux {
                Some(list) => PhasePoints::Flux(list),
                None => PhasePoints::Uniform(points),
            };
            commands::cmd_sweep_phase(&cfg, alpha, branch, variant, state.as_ref(), &points)
        }
        Command::SweepLoss { alpha, taus } => commands::cmd_sweep_loss(&cfg, alpha, &taus),
        Command::Claims { fixtures } => commands::cmd_claims(&cfg, fixtures.as_ref(), cli.oracle),
        Command::GreensDemo { sites, occupation, mode } => commands::cmd_greens_demo(&cfg, sites, &occupation, mode),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(Outcome::Ok) => ExitCode::SUCCESS,
        Ok(Outcome::VerificationFailed) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
