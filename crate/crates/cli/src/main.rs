use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use vicsek::library;
use vicsek::runner::{self, RunOptions};
use vicsek::scalar::format_significant;
use vicsek::scenario::{parse_scenario, Scenario};

/// Scenario runner for nearest-neighbor heading averaging.
#[derive(Debug, Parser)]
#[command(name = "vicsek-sim", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate and write trajectory.csv and report.json.
    Run(Target),
    /// Simulate while checking the per-step invariants; exits 2 on a violation.
    Verify(Target),
    /// List the built-in scenarios.
    Scenarios,
}

#[derive(Debug, Args)]
struct Target {
    /// Scenario file or built-in scenario name.
    #[arg(required_unless_present = "batch", conflicts_with = "batch")]
    scenario: Option<String>,
    /// Run every *.json scenario file in a directory.
    #[arg(long, value_name = "DIR")]
    batch: Option<PathBuf>,
    #[arg(long, default_value = "./out", value_name = "DIR")]
    out: PathBuf,
    /// Override the scenario's step count.
    #[arg(long)]
    steps: Option<usize>,
    /// Override the scenario's convergence tolerance.
    #[arg(long)]
    tolerance: Option<f64>,
    /// Also write graphs.log.
    #[arg(long)]
    graph_log: bool,
}

fn load(target: &str) -> Result<Scenario> {
    let path = Path::new(target);
    if path.is_file() {
        let text = fs::read_to_string(path).with_context(|| format!("reading {target}"))?;
        return parse_scenario(&text).with_context(|| format!("parsing {target}"));
    }
    match library::builtin(target) {
        Some(s) => Ok(s),
        None => bail!("{target:?} is neither a scenario file nor a built-in scenario"),
    }
}

fn scenarios(target: &Target) -> Result<Vec<Scenario>> {
    let mut out = match (&target.scenario, &target.batch) {
        (Some(s), _) => vec![load(s)?],
        (None, Some(dir)) => {
            let mut files: Vec<PathBuf> = fs::read_dir(dir)
                .with_context(|| format!("reading {}", dir.display()))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.extension().is_some_and(|x| x == "json"))
                .collect();
            files.sort();
            files
                .iter()
                .map(|p| load(&p.to_string_lossy()))
                .collect::<Result<_>>()?
        }
        (None, None) => unreachable!("clap requires a scenario or --batch"),
    };
    for s in &mut out {
        if let Some(steps) = target.steps {
            s.steps = steps;
        }
        if let Some(tol) = target.tolerance {
            if !(tol > 0.0 && tol.is_finite()) {
                bail!("--tolerance must be a positive number");
            }
            s.tolerance = tol;
        }
    }
    Ok(out)
}

fn run(target: &Target) -> Result<ExitCode> {
    let opts = RunOptions {
        graph_log: target.graph_log,
    };
    for scn in scenarios(target)? {
        let outcome = runner::run_scenario(&scn, &target.out, opts)?;
        let r = &outcome.report;
        let steps = r
            .steps_to_tolerance
            .map_or_else(|| "not reached".to_string(), |s| s.to_string());
        println!(
            "{}: converged={} steps_to_tolerance={} theta_ss={} -> {}",
            scn.name,
            r.converged,
            steps,
            format_significant(r.theta_ss, 17),
            outcome.dir.display()
        );
    }
    Ok(ExitCode::SUCCESS)
}

fn verify(target: &Target) -> Result<ExitCode> {
    let mut all_passed = true;
    for scn in scenarios(target)? {
        let s = runner::verify_invariants(&scn, &target.out)?;
        println!(
            "{}: {} | envelope {}/{} | hull {}/{} | leader {}/{} | separation {} confirmed, {} failed, {} ambiguous",
            s.scenario,
            if s.passed { "PASS" } else { "FAIL" },
            s.envelope.checked - s.envelope.failed,
            s.envelope.checked,
            s.hull.checked - s.hull.failed,
            s.hull.checked,
            s.leader.checked - s.leader.failed,
            s.leader.checked,
            s.separation.confirmed,
            s.separation.failed,
            s.separation.with_ambiguity,
        );
        if let Some(f) = &s.first_failure {
            println!("  first failure: {f}");
        }
        all_passed &= s.passed;
    }
    Ok(if all_passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(t) => run(t),
        Command::Verify(t) => verify(t),
        Command::Scenarios => {
            for b in library::list_scenarios() {
                println!("{:<24} [{}] {}", b.name, b.exercises, b.description);
            }
            Ok(ExitCode::SUCCESS)
        }
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            log::error!("{e:#}");
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
