use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hybrid_cis::conic::SolverOptions;
use hybrid_cis::verify::{VerifyOptions, DEFAULT_DIRECTIONS, DEFAULT_SEED};
use hybrid_cis_cli::config::LoadedConfig;
use hybrid_cis_cli::{
    exit_code, load_solution, summary, table, to_json, write_file, write_plots, write_solution, CliError, RunInput,
    EXIT_OK, EXIT_UNVERIFIED,
};

/// Controlled invariant sets for linear hybrid control systems.
#[derive(Parser)]
#[command(name = "hybrid-cis", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct VerifyFlags {
    /// Seed of the sampled verification.
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Number of sampled directions per condition.
    #[arg(long, default_value_t = DEFAULT_DIRECTIONS)]
    dirs: usize,
}

impl VerifyFlags {
    fn options(&self) -> VerifyOptions {
        VerifyOptions { n_dirs: self.dirs, seed: self.seed, ..VerifyOptions::default() }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize a set for one configuration and write solution, report and plots.
    Solve {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        output_dir: Option<PathBuf>,
        #[command(flatten)]
        verify: VerifyFlags,
        /// Solver option override, `key=value` (max_iters, feas_tol, gap_tol, verbose).
        #[arg(long = "solver-opt", value_name = "KEY=VALUE")]
        solver_opt: Vec<String>,
    },
    /// Write primal and polar boundary curves of a solution as CSV and SVG.
    Plot {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        solution: PathBuf,
        #[arg(long)]
        output_dir: Option<PathBuf>,
        /// Number of plot directions (defaults to the config's plot setting).
        #[arg(long)]
        dirs: Option<usize>,
    },
    /// Re-run the sampled invariance and inclusion checks on a solution.
    Verify {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        solution: PathBuf,
        #[arg(long)]
        output_dir: Option<PathBuf>,
        #[command(flatten)]
        verify: VerifyFlags,
    },
    /// Run the reference γ table on the double integrator with jump.
    Reproduce {
        /// Base configuration (system, objective, plots); the bundled one by default.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = "reproduction")]
        output_dir: PathBuf,
        /// Restrict to these runs (comma separated or repeated).
        #[arg(long, value_delimiter = ',')]
        only: Vec<String>,
        #[command(flatten)]
        verify: VerifyFlags,
        #[arg(long = "solver-opt", value_name = "KEY=VALUE")]
        solver_opt: Vec<String>,
    },
}

fn apply_solver_opts(options: &mut SolverOptions, overrides: &[String]) -> Result<(), CliError> {
    for kv in overrides {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| CliError::Parse(format!("--solver-opt expects key=value, got `{kv}`")))?;
        options.set(k.trim(), v.trim()).map_err(|e| CliError::Parse(e.to_string()))?;
    }
    Ok(())
}

fn output_dir(flag: Option<PathBuf>, cfg: &LoadedConfig) -> PathBuf {
    flag.or_else(|| cfg.config.output_dir.as_ref().map(|p| cfg.resolve(p)))
        .unwrap_or_else(|| PathBuf::from("out"))
}

fn plot_solution(input: &RunInput, sol: &hybrid_cis::synthesis::SynthesisSolution, dir: &Path, dirs: usize) -> Result<(), CliError> {
    let data = input.plot_data(sol, dirs)?;
    for w in &data.warnings {
        eprintln!("warning: {w}");
    }
    write_plots(dir, &data, &input.plot.formats, &sol.template.label())
}

fn run(cli: Cli) -> Result<i32, CliError> {
    match cli.command {
        Command::Solve { config, output_dir: out, verify, solver_opt } => {
            let cfg = LoadedConfig::load(&config)?;
            let mut input = RunInput::from_config(&cfg)?;
            apply_solver_opts(&mut input.solver, &solver_opt)?;
            let dir = output_dir(out, &cfg);
            let sol = input.solve(&verify.options())?;
            write_solution(&dir, &sol)?;
            if sol.gamma.is_some() && !sol.nodes.is_empty() {
                plot_solution(&input, &sol, &dir, input.plot.directions)?;
            }
            println!("{}", summary(&sol));
            if let Some(v) = &sol.verification {
                for f in v.failures() {
                    println!("  failed: {} {:?} (max violation {:e})", f.location, f.kind, f.max_violation);
                }
            }
            Ok(exit_code(sol.status))
        }
        Command::Plot { config, solution, output_dir: out, dirs } => {
            let cfg = LoadedConfig::load(&config)?;
            let input = RunInput::from_config(&cfg)?;
            let sol = load_solution(&solution)?;
            let dir = output_dir(out, &cfg);
            plot_solution(&input, &sol, &dir, dirs.unwrap_or(input.plot.directions))?;
            Ok(EXIT_OK)
        }
        Command::Verify { config, solution, output_dir: out, verify } => {
            let cfg = LoadedConfig::load(&config)?;
            let input = RunInput::from_config(&cfg)?;
            let sol = load_solution(&solution)?;
            let report = input.reverify(&sol, &verify.options())?;
            write_file(&output_dir(out, &cfg).join("verification.json"), &to_json(&report))?;
            for c in &report.conditions {
                println!(
                    "{} {:<28} {:<11} samples {:>6}  max violation {:e}",
                    if c.pass { "pass" } else { "FAIL" },
                    c.location,
                    format!("{:?}", c.kind),
                    c.samples,
                    c.max_violation
                );
            }
            Ok(if report.pass() { EXIT_OK } else { EXIT_UNVERIFIED })
        }
        Command::Reproduce { config, output_dir: out, only, verify, solver_opt } => {
            let mut input = match &config {
                Some(p) => RunInput::from_config(&LoadedConfig::load(p)?)?,
                None => RunInput::bundled(),
            };
            apply_solver_opts(&mut input.solver, &solver_opt)?;
            let rows = table::run_table(&input, &only, &verify.options())?;
            print!("{}", table::format_table(&rows, true));
            table::write_table(&out, &input, &rows)?;
            Ok(rows.iter().map(table::Row::exit_code).max().unwrap_or(EXIT_OK))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
