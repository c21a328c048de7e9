//! kinlab: command line driver. Exit codes: 0 ok, 2 invalid input, 3 numerical failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use kinetic_core::euler::{self, EulerState, KSet};
use kinetic_core::flux::Flux;
use kinetic_core::riemann::solve_riemann_scalar;
use kinetic_core::run::{decompose_current, run};
use kinetic_core::scenario::{load_scenario, Problem};
use kinetic_core::{report, Error, Result};

#[derive(Parser)]
#[command(name = "kinlab", version, about = "Front tracking and kinetic diagnostics for 1-D conservation laws")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a scenario file and write its bundle
    Run {
        scenario: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Scalar Riemann fan as JSON
    Riemann {
        #[arg(long, default_value = "burgers")]
        flux: String,
        #[arg(long, allow_hyphen_values = true)]
        left: f64,
        #[arg(long, allow_hyphen_values = true)]
        right: f64,
    },
    /// γ = 3 Riemann fan as JSON; states are given as ρ,m
    #[command(name = "euler3-riemann")]
    Euler3Riemann {
        #[arg(long, allow_hyphen_values = true)]
        left: String,
        #[arg(long, allow_hyphen_values = true)]
        right: String,
    },
    /// Shock strength sweep as CSV (strength, z_jump, sigma_offset, d_E)
    #[command(name = "sweep-shocks")]
    SweepShocks {
        #[arg(long, default_value_t = 1)]
        family: u8,
        /// comma separated strengths
        #[arg(long)]
        strengths: String,
        /// base state ρ,m
        #[arg(long, default_value = "1,1", allow_hyphen_values = true)]
        left: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Discrete current of μ₁ for a scalar scenario and its path decomposition
    #[command(name = "decompose-current")]
    DecomposeCurrent {
        scenario: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn numbers(s: &str, key: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| Error::Invalid(format!("{key}: `{p}`: {e}"))))
        .collect()
}

fn state(s: &str, key: &str) -> Result<EulerState> {
    match numbers(s, key)?.as_slice() {
        [rho, m] => Ok(EulerState::new(*rho, *m)),
        _ => Err(Error::Invalid(format!("{key}: expected ρ,m"))),
    }
}

fn write_or_print(text: &str, out: Option<PathBuf>) -> Result<()> {
    match out {
        Some(p) => Ok(std::fs::write(p, text)?),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn main_inner(cli: Cli) -> Result<()> {
    match cli.cmd {
        Cmd::Run { scenario, out } => {
            let sc = load_scenario(&scenario)?;
            let bundle = run(&sc)?;
            let dir = sc.output_dir(out.as_deref());
            bundle.write(&dir)?;
            eprintln!("wrote {} files to {}", bundle.files.len() + 2, dir.display());
        }
        Cmd::Riemann { flux, left, right } => {
            let f = Flux::by_name(&flux)?;
            let waves = solve_riemann_scalar(&f, left, right)?;
            println!("{}", serde_json::to_string(&waves).expect("plain record"));
        }
        Cmd::Euler3Riemann { left, right } => {
            let fan = euler::solve_riemann_euler(state(&left, "--left")?, state(&right, "--right")?, &KSet::default())?;
            println!("{}", fan.to_json());
        }
        Cmd::SweepShocks { family, strengths, left, out } => {
            let s = numbers(&strengths, "--strengths")?;
            let rows = euler::sweep_shocks(state(&left, "--left")?, family, &s, &KSet::default())?;
            write_or_print(&report::sweep_csv(&rows)?, out)?;
        }
        Cmd::DecomposeCurrent { scenario, out } => {
            let sc = load_scenario(&scenario)?;
            if sc.problem != Problem::Scalar {
                return Err(Error::Config("decompose-current needs a scalar scenario".into()));
            }
            let bundle = decompose_current(&sc)?;
            let dir = sc.output_dir(out.as_deref());
            bundle.write(&dir)?;
            eprintln!("wrote {} files to {}", bundle.files.len() + 2, dir.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match main_inner(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("kinlab: {e}");
            ExitCode::from(if e.is_validation() { 2 } else { 3 })
        }
    }
}
