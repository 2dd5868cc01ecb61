use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;

use qoe_cache::bnb::solve_ec_ve;
use qoe_cache::harness::{
    min_capacity, round_sig, run_sweep, solve_scheme, write_csv, Axis, CapacityRow, ResultRow,
    RunConfig, SweepSpec,
};
use qoe_cache::oracle::{oracle_solve_with, snap_to_grid, SplitMode};
use qoe_cache::{Scheme, SolveResult, SolveStatus, SolverOptions};

#[derive(Parser)]
#[command(
    name = "qoe-cache",
    version,
    about = "Secure edge caching and encoding-rate optimisation"
)]
struct Cli {
    /// Seed for the multi-start solver.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Write CSV here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Greedy rate increment in Mbps.
    #[arg(long, global = true)]
    step: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one scenario with one scheme.
    Solve {
        config: PathBuf,
        #[arg(long)]
        scheme: Scheme,
    },
    /// Run a parameter sweep described by a spec file.
    Sweep { spec: PathBuf },
    /// Smallest uniform server capacity at which a scheme is feasible.
    MinCapacity {
        config: PathBuf,
        #[arg(long)]
        scheme: Scheme,
        #[arg(long)]
        resolution: f64,
    },
    /// Compare EC-VE against exhaustive enumeration on a tiny scenario.
    OracleCheck {
        config: PathBuf,
        #[arg(long)]
        grid: usize,
    },
}

/// One line of the oracle comparison table.
#[derive(Serialize)]
struct CheckRow {
    method: &'static str,
    status: SolveStatus,
    q_total: Option<f64>,
    mean_mos: Option<f64>,
    enumerated: u64,
}

impl CheckRow {
    fn new(method: &'static str, r: &SolveResult) -> Self {
        CheckRow {
            method,
            status: r.status,
            q_total: r.q().map(round_sig),
            mean_mos: r.mean_mos().map(round_sig),
            enumerated: r.counters.enumerated,
        }
    }
}

fn apply_flags(mut options: SolverOptions, cli: &Cli) -> SolverOptions {
    if let Some(seed) = cli.seed {
        options.seed = seed;
    }
    if let Some(step) = cli.step {
        options.step_override = Some(step);
    }
    options
}

fn emit<R: Serialize>(rows: &[R], out: Option<&Path>) -> qoe_cache::Result<()> {
    match out {
        Some(path) => write_csv(rows, File::create(path)?),
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            write_csv(rows, &mut lock)?;
            lock.flush()?;
            Ok(())
        }
    }
}

fn run(cli: &Cli) -> qoe_cache::Result<bool> {
    let out = cli.out.as_deref();
    match &cli.command {
        Command::Solve { config, scheme } => {
            let cfg = RunConfig::load(config)?;
            let scenario = cfg.build()?;
            let options = apply_flags(cfg.solver.clone(), cli);
            let result = solve_scheme(&scenario, *scheme, &options)?;
            let row = ResultRow::new(Axis::Point, scenario.total_capacity(), &scenario, &result);
            emit(&[row], out)?;
            Ok(result.is_feasible())
        }
        Command::Sweep { spec } => {
            let mut spec = SweepSpec::load(spec)?;
            spec.solver = apply_flags(spec.solver, cli);
            for opts in spec.scheme_options.values_mut() {
                *opts = apply_flags(opts.clone(), cli);
            }
            let rows = run_sweep(&spec)?;
            emit(&rows, out)?;
            Ok(true)
        }
        Command::MinCapacity {
            config,
            scheme,
            resolution,
        } => {
            let cfg = RunConfig::load(config)?;
            let options = apply_flags(cfg.solver.clone(), cli);
            let found = min_capacity(&cfg.scenario, *scheme, *resolution, &options)?;
            let row = CapacityRow::new(*scheme, cfg.scenario.total_requests, *resolution, found);
            emit(&[row], out)?;
            Ok(found.is_some())
        }
        Command::OracleCheck { config, grid } => {
            let cfg = RunConfig::load(config)?;
            let scenario = cfg.build()?;
            let options = apply_flags(cfg.solver.clone(), cli);
            let equal = oracle_solve_with(&scenario, *grid, SplitMode::Equal)?;
            let mut rows = vec![CheckRow::new("oracle-equal-split", &equal)];
            let optimal = if scenario.num_servers() == 1 {
                let r = oracle_solve_with(&scenario, *grid, SplitMode::Optimal)?;
                rows.push(CheckRow::new("oracle-optimal-split", &r));
                Some(r)
            } else {
                None
            };
            let ec_ve = solve_ec_ve(&scenario, &options)?;
            rows.push(CheckRow::new("ec-ve", &ec_ve));
            if ec_ve.is_feasible() {
                let snapped = snap_to_grid(&scenario, &ec_ve, *grid)?;
                rows.push(CheckRow::new("ec-ve-snapped", &snapped));
            }
            emit(&rows, out)?;
            Ok(optimal.unwrap_or(equal).is_feasible())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
