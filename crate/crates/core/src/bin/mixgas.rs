use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::Parser;

use mixgas::checks;
use mixgas::config::{parse_config, Mode, RunConfig};
use mixgas::hyperbolic::{epsilon_sweep, run_type1};
use mixgas::output;
use mixgas::parabolic::ParabolicSolver;

const EXIT_VALIDATION: u8 = 1;
const EXIT_SOLVER: u8 = 2;
const EXIT_CHECK: u8 = 3;

/// Multicomponent gas mixture solver.
#[derive(Debug, Parser)]
#[command(name = "mixgas", version)]
struct Cli {
    /// Configuration file; defaults are used when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the configured mode: run-parabolic, run-type1, sweep or check.
    #[arg(long)]
    mode: Option<String>,
    /// Overrides the output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Prints the default configuration and exits.
    #[arg(long)]
    print_defaults: bool,
    /// Overrides the seed of the randomized checks.
    #[arg(long)]
    seed: Option<u64>,
}

enum Failure {
    Validation(String),
    Solver(String),
    Check,
}

impl Failure {
    fn solver(e: impl std::fmt::Display) -> Self {
        Failure::Solver(e.to_string())
    }
}

fn load(cli: &Cli) -> Result<RunConfig, Failure> {
    let mut config = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| Failure::Validation(format!("cannot read {}: {e}", path.display())))?;
            parse_config(&text).map_err(|e| Failure::Validation(format!("{}:\n{e}", path.display())))?
        }
        None => RunConfig::default(),
    };
    if let Some(m) = &cli.mode {
        config.mode = Mode::parse(m).ok_or_else(|| {
            Failure::Validation(format!("unknown mode `{m}` (run-parabolic, run-type1, sweep, check)"))
        })?;
    }
    if let Some(dir) = &cli.out {
        config.output.directory = dir.clone();
    }
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    Ok(config)
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<(), Failure> {
    let path = dir.join(name);
    output::write_atomic(&path, contents).map_err(|e| Failure::Solver(format!("writing {}: {e}", path.display())))
}

fn run_parabolic(config: &RunConfig, dir: &Path) -> Result<(), Failure> {
    let params = config.params().map_err(|e| Failure::Validation(e.to_string()))?;
    let grid = config.grid().map_err(|e| Failure::Validation(e.to_string()))?;
    let initial = config.initial_fields().map_err(|e| Failure::Validation(e.to_string()))?;
    let solver =
        ParabolicSolver::new(grid, params.clone(), config.parabolic_config()).map_err(|e| Failure::Validation(e.to_string()))?;
    let traj = solver.run(&initial).map_err(Failure::solver)?;
    write(dir, "trajectory.csv", &output::parabolic_trajectory_csv(&traj, &params))?;
    write(dir, "budget.csv", &output::budget_csv(&traj.budgets, params.species()))?;
    let t = traj.snapshots.last().map(|s| s.time).unwrap_or(0.0);
    eprintln!("run-parabolic: {} steps, reached t = {t}", traj.reports.len());
    match traj.failure {
        Some(e) => Err(Failure::solver(e)),
        None => Ok(()),
    }
}

fn run_type1_mode(config: &RunConfig, dir: &Path) -> Result<(), Failure> {
    let params = config.params().map_err(|e| Failure::Validation(e.to_string()))?;
    let initial = config.initial_conserved().map_err(|e| Failure::Validation(e.to_string()))?;
    let run_cfg = config.type1_config().map_err(|e| Failure::Validation(e.to_string()))?;
    let traj = run_type1(&run_cfg, &initial, &params, params.epsilon(), 1.0).map_err(Failure::solver)?;
    write(dir, "trajectory.csv", &output::type1_trajectory_csv(&traj, &params, 1).map_err(Failure::solver)?)?;
    let budgets = traj.budget_series(&params).map_err(Failure::solver)?;
    write(dir, "budget.csv", &output::budget_csv(&budgets, params.species()))?;
    eprintln!("run-type1: {} steps, reached t = {}", traj.steps, config.time.t_end);
    Ok(())
}

fn run_sweep(config: &RunConfig, dir: &Path) -> Result<(), Failure> {
    let params = config.params().map_err(|e| Failure::Validation(e.to_string()))?;
    let initial = config.initial_conserved().map_err(|e| Failure::Validation(e.to_string()))?;
    let relax = config.relax_config().map_err(|e| Failure::Validation(e.to_string()))?;
    let report = epsilon_sweep(&relax, &initial, &params).map_err(Failure::solver)?;
    let every = config.output.every;
    if let Some(r) = &report.reference {
        write(dir, "trajectory_reference.csv", &output::type1_trajectory_csv(r, &params, every).map_err(Failure::solver)?)?;
    }
    for (idx, e) in report.entries.iter().enumerate() {
        if let Some(t) = &e.trajectory {
            let csv = output::type1_trajectory_csv(t, &params, every).map_err(Failure::solver)?;
            write(dir, &format!("trajectory_eps{}.csv", idx + 1), &csv)?;
        }
    }
    write(dir, "sweep.csv", &output::sweep_csv(&report, &params))?;
    let summary = output::sweep_summary(&report);
    write(dir, "summary.txt", &summary)?;
    print!("{summary}");
    let failed = report.reference_failure.is_some() || report.entries.iter().any(|e| e.failure.is_some());
    if failed {
        Err(Failure::Solver("sweep incomplete; see summary.txt".into()))
    } else {
        Ok(())
    }
}

fn run_check(config: &RunConfig) -> Result<(), Failure> {
    let suite = checks::run_checks(config.seed);
    print!("{}", suite.table());
    if suite.all_passed() {
        Ok(())
    } else {
        Err(Failure::Check)
    }
}

fn execute(cli: &Cli) -> Result<(), Failure> {
    let config = load(cli)?;
    if config.mode == Mode::Check {
        return run_check(&config);
    }
    let dir = config.output.directory.clone();
    fs::create_dir_all(&dir).map_err(|e| Failure::Solver(format!("creating {}: {e}", dir.display())))?;
    match config.mode {
        Mode::RunParabolic => run_parabolic(&config, &dir),
        Mode::RunType1 => run_type1_mode(&config, &dir),
        Mode::Sweep => run_sweep(&config, &dir),
        Mode::Check => unreachable!("handled above"),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_VALIDATION)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    if cli.print_defaults {
        print!("{}", RunConfig::default().to_text());
        return ExitCode::SUCCESS;
    }
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Validation(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_VALIDATION)
        }
        Err(Failure::Solver(msg)) => {
            eprintln!("solver failure: {msg}");
            ExitCode::from(EXIT_SOLVER)
        }
        Err(Failure::Check) => {
            eprintln!("invariant checks failed");
            ExitCode::from(EXIT_CHECK)
        }
    }
}
