//! `trotterlab`: configuration-driven runner for the splitting experiments.

mod commands;
mod config;
mod plot;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::{Failure, Options};
use config::RawConfig;

#[derive(Parser)]
#[command(name = "trotterlab", version, about = "Lie and Strang splitting experiments for -Δ ± c/r")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Flat `key = value` configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Output path prefix; overrides the `output` key.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for independent grids.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Error sweep over grids and step counts, slope fits and the verdict.
    /// Keys: scheme, state, ell_condition, c, sign, grid_n, r_max, T, L,
    /// output, seed, predicted, tol, window, threshold, backend.
    /// Exit 0 iff the finest grid passes.
    Rates(Common),
    /// Operator identity checks on a seeded random Hermitian pair.
    /// Keys: dim, seed, t, nodes, steps, check (strang, lie, comm, relation or all).
    Oracle(Common),
    /// C_N, C~_N, the step bound, the rate table and the two-body reduction.
    /// Keys: particles, c0, abs_const, T, t_step, h2_norm, ell_max, m_e, m_p, hbar, e_sq.
    Constants(Common),
    /// Hardy norm estimate on each grid. Keys: grid_n, r_max, ell_max.
    Hardy(Common),
    /// Cutoff-function constants against their bounds. Keys: beta, samples.
    CutoffConstants(Common),
    /// Weighted-norm monitor along the exact flow.
    /// Keys: state, ell_condition, grid_n, r_max, c, sign, times_end, times_n, free_end, free_n.
    Monitor(Common),
    /// State-condition verdict on each grid.
    /// Keys: state, ell_condition, grid_n, r_max, norm_threshold.
    CheckState(Common),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (common, run): (&Common, fn(&RawConfig, &Options) -> commands::Outcome) = match &cli.command {
        Command::Rates(c) => (c, commands::rates),
        Command::Oracle(c) => (c, commands::oracle),
        Command::Constants(c) => (c, commands::constants),
        Command::Hardy(c) => (c, commands::hardy),
        Command::CutoffConstants(c) => (c, commands::cutoff),
        Command::Monitor(c) => (c, commands::monitor),
        Command::CheckState(c) => (c, commands::check_state),
    };
    let result = RawConfig::load(&common.config).map_err(Failure::from).and_then(|raw| {
        run(
            &raw,
            &Options {
                out: common.out.clone(),
                jobs: common.jobs.max(1),
            },
        )
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("trotterlab: {f}");
            ExitCode::from(f.exit_code() as u8)
        }
    }
}
