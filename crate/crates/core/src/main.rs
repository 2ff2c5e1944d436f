use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use wfem::experiments::{
    emit_interp, emit_report, format_interp, format_report, run_bonito, run_convergence_f1, run_exact_case,
    run_interp_demo, summarize, ExperimentConfig, ExperimentKind,
};
use wfem::{Result, WeightKind, WfemError};

#[derive(Debug, Parser)]
#[command(name = "wfem", version, about = "Weighted finite elements for the 1D fractional Laplacian")]
struct Cli {
    /// JSON experiment description; flags given after a subcommand override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// f = 1 with delta = poly2, where the discrete solution is exact
    Exact(RunArgs),
    /// f = 1 convergence study
    Convergence(RunArgs),
    /// u = (1 - x^2)_+ on the shrunk interval
    Bonito(RunArgs),
    /// Pointwise interpolant profiles on a 2001-point grid
    InterpDemo(RunArgs),
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Fractional order; repeat for several values
    #[arg(long = "s")]
    s: Vec<f64>,
    /// Refinement levels as `k_min..k_max` (inclusive) or a single `k`
    #[arg(long, value_parser = parse_levels)]
    levels: Option<Levels>,
    /// Weight function: poly2, poly4 or dist
    #[arg(long)]
    delta: Option<WeightKind>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    quad_order: Option<usize>,
    /// CSV output file; printed to stdout when absent
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write the stiffness matrices as text
    #[arg(long)]
    dump_matrix: Option<PathBuf>,
}

#[derive(Debug, Clone)]
struct Levels(Vec<u32>);

fn parse_levels(text: &str) -> std::result::Result<Levels, String> {
    let bad = || format!("expected `k_min..k_max` or `k`, got '{text}'");
    match text.split_once("..") {
        Some((lo, hi)) => {
            let lo: u32 = lo.trim().parse().map_err(|_| bad())?;
            let hi: u32 = hi.trim().parse().map_err(|_| bad())?;
            if lo > hi {
                return Err(bad());
            }
            Ok(Levels((lo..=hi).collect()))
        }
        None => Ok(Levels(vec![text.trim().parse().map_err(|_| bad())?])),
    }
}

impl Command {
    fn kind(&self) -> ExperimentKind {
        match self {
            Command::Exact(_) => ExperimentKind::Exact,
            Command::Convergence(_) => ExperimentKind::ConvergenceF1,
            Command::Bonito(_) => ExperimentKind::Bonito,
            Command::InterpDemo(_) => ExperimentKind::InterpDemo,
        }
    }

    fn args(&self) -> &RunArgs {
        match self {
            Command::Exact(a) | Command::Convergence(a) | Command::Bonito(a) | Command::InterpDemo(a) => a,
        }
    }
}

fn build_config(cli: &Cli) -> Result<ExperimentConfig> {
    let mut cfg = match (&cli.config, &cli.command) {
        (Some(path), command) => {
            let cfg = ExperimentConfig::from_file(path)?;
            if let Some(cmd) = command {
                if cmd.kind() != cfg.experiment {
                    return Err(WfemError::Argument(format!(
                        "config describes {} but the subcommand is {}",
                        cfg.experiment.name(),
                        cmd.kind().name()
                    )));
                }
            }
            cfg
        }
        (None, Some(cmd)) => ExperimentConfig::defaults(cmd.kind()),
        (None, None) => return Err(WfemError::Argument("give a subcommand or --config".into())),
    };
    if let Some(cmd) = &cli.command {
        let a = cmd.args();
        if !a.s.is_empty() {
            cfg.s_values = a.s.clone();
        }
        if let Some(Levels(v)) = &a.levels {
            cfg.levels = v.clone();
        }
        if let Some(v) = a.delta {
            cfg.delta_kind = v;
        }
        if let Some(v) = a.epsilon {
            cfg.epsilon = v;
        }
        if let Some(v) = a.quad_order {
            cfg.quad_order = v;
        }
        if a.out.is_some() {
            cfg.out_path = a.out.clone();
        }
        if a.dump_matrix.is_some() {
            cfg.dump_matrix = a.dump_matrix.clone();
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Runs the experiment and returns the acceptance breaches it found.
fn run(cfg: &ExperimentConfig) -> Result<Vec<String>> {
    if cfg.experiment == ExperimentKind::InterpDemo {
        let profiles = run_interp_demo(cfg)?;
        match &cfg.out_path {
            Some(path) => emit_interp(&profiles, path)?,
            None => print!("{}", format_interp(&profiles)),
        }
        return Ok(Vec::new());
    }
    let report = match cfg.experiment {
        ExperimentKind::Exact => run_exact_case(cfg)?,
        ExperimentKind::ConvergenceF1 => run_convergence_f1(cfg)?,
        ExperimentKind::Bonito => run_bonito(cfg)?,
        ExperimentKind::InterpDemo => unreachable!(),
    };
    match &cfg.out_path {
        Some(path) => {
            emit_report(&report, path)?;
            print!("{}", summarize(&report));
        }
        None => print!("{}", format_report(&report)),
    }
    Ok(report.failures)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = build_config(&cli).and_then(|cfg| run(&cfg));
    match outcome {
        Ok(failures) if failures.is_empty() => ExitCode::SUCCESS,
        Ok(failures) => {
            for line in &failures {
                println!("{line}");
            }
            ExitCode::from(2)
        }
        Err(e) => {
            println!("FAIL error {e}");
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
