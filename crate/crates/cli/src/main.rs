//! Scenario runner for covariant open-system dynamics.
//!
//! Exit codes: 0 on success, 1 on errors, 2 when a witness or validation
//! reports a finding (non-Markovian data, invalid channel file).

mod commands;
mod io;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};

use commands::{Outcome, TimesSpec, TransferArgs};

#[derive(Parser)]
#[command(
    name = "covlind",
    about = "Covariant open-system dynamics: evolution, coherence bounds, relaxation times, transfer scenarios, non-Markovianity witnesses and thermal bounds",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct CommonOut {
    /// Output file (stdout when omitted)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Emit JSON instead of CSV
    #[arg(long)]
    json: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the master equation on a time grid
    Evolve {
        /// JSON config: {"generator": ..., "rho0": ..., "times": ..., "lab_frame": bool}
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        output: CommonOut,
    },
    /// Optimal coherence envelope against the actual evolution
    Bound {
        /// JSON config: {"generator": ..., "rho0": ..., "omega": w, "times": ...}
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        output: CommonOut,
    },
    /// Relaxation/decoherence times and the harmonic-mean bound (JSON)
    T1t2 {
        /// JSON config: {"generator": ..., "beta": optional}
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Reports are always JSON; accepted for uniformity
        #[arg(long)]
        json: bool,
    },
    /// Coherence transfer and mixing scenarios
    Transfer {
        /// qutrit, four-level or mixing
        #[arg(long)]
        scenario: String,
        /// Search the qutrit rate space instead of evaluating a curve
        #[arg(long)]
        optimize: bool,
        /// Rate scale of the built-in scenarios
        #[arg(long, default_value_t = 1.0)]
        lambda: f64,
        /// Initial lower-entry coherence magnitude
        #[arg(long, default_value_t = 0.25)]
        c1: f64,
        /// Initial |rho_10| for the mixing scenario
        #[arg(long, default_value_t = 0.25)]
        m10: f64,
        /// Initial |rho_32| for the mixing scenario
        #[arg(long, default_value_t = 0.0)]
        m32: f64,
        /// Custom 3-level rate matrix JSON ({"L": [[..]]}) for the qutrit curve
        #[arg(long)]
        rates: Option<PathBuf>,
        #[arg(long, default_value_t = 0.0)]
        t_start: f64,
        #[arg(long, default_value_t = 10.0)]
        t_stop: f64,
        #[arg(long, default_value_t = 101)]
        t_num: usize,
        /// Starting grid density of the optimizer
        #[arg(long, default_value_t = 24)]
        grid_density: usize,
        #[command(flatten)]
        output: CommonOut,
    },
    /// Non-Markovianity witnesses (verdict JSON; exit 2 on findings)
    Witness {
        #[command(subcommand)]
        mode: WitnessMode,
    },
    /// Embeddable-eigenvalue region curve and stochastic spectra samples
    EmbedRegion {
        #[arg(long)]
        d: usize,
        /// Number of random stochastic matrices to sample (0 to skip)
        #[arg(long, default_value_t = 0)]
        samples: usize,
        /// RNG seed (the COVLIND_SEED environment variable overrides the default)
        #[arg(long)]
        seed: Option<u64>,
        /// Curve output file (stdout when omitted)
        #[arg(long)]
        out: Option<PathBuf>,
        /// Sample output file (stdout when omitted)
        #[arg(long)]
        samples_out: Option<PathBuf>,
        /// Emit a single JSON document instead of CSV
        #[arg(long)]
        json: bool,
    },
    /// Thermal qubit coherence bounds over a final-population grid
    Gto {
        #[arg(long)]
        p0: f64,
        #[arg(long)]
        c0: f64,
        #[arg(long)]
        beta: f64,
        #[arg(long, default_value_t = 1.0)]
        omega: f64,
        #[arg(long)]
        pt_min: f64,
        #[arg(long)]
        pt_max: f64,
        #[arg(long, default_value_t = 200)]
        num: usize,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Emit JSON instead of CSV
        #[arg(long)]
        json: bool,
    },
    /// Validate a channel/generator/rate-matrix file (exit 2 when invalid)
    Validate {
        #[arg(long)]
        file: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Reports are always JSON; accepted for uniformity
        #[arg(long)]
        json: bool,
    },
}

#[derive(Subcommand)]
enum WitnessMode {
    /// Before/after snapshot of a qubit with known stationary population
    Snapshot {
        /// JSON config: {"p0":, "c0":, "pt":, "ct":, "pi":}
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Verdicts are always JSON; accepted for uniformity
        #[arg(long)]
        json: bool,
    },
    /// Monitored trajectory: per-mode coherence totals must not rise
    Trajectory {
        /// JSON config: {"omegas": [..], "csv": path} or inline states
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Verdicts are always JSON; accepted for uniformity
        #[arg(long)]
        json: bool,
    },
    /// Population transfer matrix against the embeddable eigenvalue region
    Spectral {
        /// JSON config: {"P": [[..]]}
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Verdicts are always JSON; accepted for uniformity
        #[arg(long)]
        json: bool,
    },
}

fn effective_seed(flag: Option<u64>) -> u64 {
    flag.or_else(|| {
        std::env::var("COVLIND_SEED")
            .ok()
            .and_then(|s| s.parse().ok())
    })
    .unwrap_or(0)
}

fn run(cli: Cli) -> Result<Outcome> {
    match cli.command {
        Command::Evolve { config, output } => {
            commands::evolve_cmd(&config, output.out.as_ref(), output.json)
        }
        Command::Bound { config, output } => {
            commands::bound_cmd(&config, output.out.as_ref(), output.json)
        }
        Command::T1t2 {
            config,
            out,
            json: _,
        } => commands::t1t2_cmd(&config, out.as_ref()),
        Command::Transfer {
            scenario,
            optimize,
            lambda,
            c1,
            m10,
            m32,
            rates,
            t_start,
            t_stop,
            t_num,
            grid_density,
            output,
        } => {
            let args = TransferArgs {
                scenario,
                optimize,
                lambda,
                c1,
                m10,
                m32,
                rates,
                times: TimesSpec::Grid {
                    start: t_start,
                    stop: t_stop,
                    num: t_num,
                },
                grid_density,
            };
            commands::transfer_cmd(&args, output.out.as_ref(), output.json)
        }
        Command::Witness { mode } => match mode {
            WitnessMode::Snapshot {
                config,
                out,
                json: _,
            } => commands::witness_snapshot_cmd(&config, out.as_ref()),
            WitnessMode::Trajectory {
                config,
                out,
                json: _,
            } => commands::witness_trajectory_cmd(&config, out.as_ref()),
            WitnessMode::Spectral {
                config,
                out,
                json: _,
            } => commands::witness_spectral_cmd(&config, out.as_ref()),
        },
        Command::EmbedRegion {
            d,
            samples,
            seed,
            out,
            samples_out,
            json,
        } => commands::embed_region_cmd(
            d,
            samples,
            effective_seed(seed),
            out.as_ref(),
            samples_out.as_ref(),
            json,
        ),
        Command::Gto {
            p0,
            c0,
            beta,
            omega,
            pt_min,
            pt_max,
            num,
            out,
            json,
        } => commands::gto_cmd(p0, c0, beta, omega, pt_min, pt_max, num, out.as_ref(), json),
        Command::Validate { file, out, json: _ } => commands::validate_cmd(&file, out.as_ref()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(outcome) => ExitCode::from(outcome.code() as u8),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}
