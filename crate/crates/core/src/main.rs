use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::info;

use ma_beamopt::array::Scenario;
use ma_beamopt::bench::{run_experiment, solution_pattern, write_pattern_csv, ExperimentSpec};
use ma_beamopt::convex::SolverSettings;
use ma_beamopt::io::{read_scenario, read_solution, write_solution};
use ma_beamopt::schemes::SchemeRegistry;
use ma_beamopt::{Error, Result};

#[derive(Parser)]
#[command(
    name = "ma-beamopt",
    version,
    about = "Multi-beam forming for linear movable-antenna arrays"
)]
struct Cli {
    /// Suppress progress logs.
    #[arg(long, global = true)]
    quiet: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Copy, Default)]
struct Overrides {
    /// Interference gain cap.
    #[arg(long)]
    eta: Option<f64>,
    /// Outer convergence threshold.
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    max_outer: Option<usize>,
}

impl Overrides {
    fn apply(self, sc: &mut Scenario) {
        if let Some(v) = self.eta {
            sc.interference_cap = v;
        }
        if let Some(v) = self.epsilon {
            sc.eps_outer = v;
        }
        if let Some(v) = self.max_outer {
            sc.max_outer = v;
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Solve one scenario file; writes solution.json and pattern.csv.
    Solve {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        #[arg(long, default_value = "proposed")]
        scheme: String,
        #[arg(long, default_value_t = 0.5)]
        grid_deg: f64,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Run fig2, fig3 or fig4 and write the result tables.
    Benchmark {
        #[arg(long)]
        experiment: String,
        /// Trials per sweep point (sweeps only, default 50).
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Beam pattern of a stored solution.
    Pattern {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        solution: PathBuf,
        #[arg(long, default_value_t = 0.5)]
        grid_deg: f64,
        /// Output file, default pattern.csv.
        #[arg(long, default_value = "pattern.csv")]
        out: PathBuf,
    },
    /// List registered schemes.
    Schemes,
}

fn check_grid(step: f64) -> Result<()> {
    if !(step > 0.0 && step <= 180.0) {
        return Err(Error::InvalidInput(format!("grid step {step} must be in (0, 180]")));
    }
    Ok(())
}

/// Unreadable input files are the caller's fault.
fn input<T>(r: Result<T>, path: &Path) -> Result<T> {
    r.map_err(|e| match e {
        Error::Io(m) => Error::InvalidInput(format!("{}: {m}", path.display())),
        e => e,
    })
}

fn ensure_dir(p: &Path) -> Result<()> {
    fs::create_dir_all(p)?;
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let settings = SolverSettings::default();
    let registry = SchemeRegistry::with_defaults();
    match cli.command {
        Command::Solve {
            scenario,
            out,
            scheme,
            grid_deg,
            overrides,
        } => {
            check_grid(grid_deg)?;
            let mut sc = input(read_scenario(&scenario), &scenario)?;
            overrides.apply(&mut sc);
            sc.validate()?;
            let report = registry.get(&scheme)?.solve(&sc, &settings)?;
            ensure_dir(&out)?;
            write_solution(&out.join("solution.json"), &scheme, &report.solution)?;
            write_pattern_csv(&out.join("pattern.csv"), &solution_pattern(&report.solution, grid_deg))?;
            println!(
                "{scheme}: min gain {:.6}, max interference {:.6}, {} outer passes",
                report.solution.delta,
                report.solution.max_interference(),
                report.outer_iterations
            );
        }
        Command::Benchmark {
            experiment,
            trials,
            seed,
            out,
            overrides,
        } => {
            let mut spec = ExperimentSpec::by_name(&experiment, trials, seed)?;
            overrides.apply(&mut spec.base);
            let output = run_experiment(&spec, &registry, &settings)?;
            ensure_dir(&out)?;
            let results = out.join(format!("{}_results.csv", spec.id));
            output.table.write_csv(&results)?;
            output
                .table
                .write_means_csv(&out.join(format!("{}_means.csv", spec.id)))?;
            for (scheme, sol) in &output.solutions {
                write_pattern_csv(
                    &out.join(format!("{}_pattern_{scheme}.csv", spec.id)),
                    &solution_pattern(sol, 0.5),
                )?;
            }
            info!("wrote {}", results.display());
            for m in output.table.means() {
                println!(
                    "{} {}={} mean {:.4} ({} ok, {} failed)",
                    m.scheme,
                    spec.kind.sweep_param(),
                    m.sweep_value,
                    m.mean_delta,
                    m.completed,
                    m.failed
                );
            }
        }
        Command::Pattern {
            scenario,
            solution,
            grid_deg,
            out,
        } => {
            check_grid(grid_deg)?;
            let sc = input(read_scenario(&scenario), &scenario)?;
            let f = input(read_solution(&solution), &solution)?;
            if f.solution.apv.len() != sc.n_antennas || f.solution.awv.len() != sc.n_antennas {
                return Err(Error::InvalidInput("solution size does not match the scenario".into()));
            }
            if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
                ensure_dir(parent)?;
            }
            write_pattern_csv(&out, &solution_pattern(&f.solution, grid_deg))?;
        }
        Command::Schemes => {
            for info in registry.describe() {
                println!("{:10} {}", info.name, info.description);
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.quiet { "error" } else { "info" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.root_cause().is_input_error() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
