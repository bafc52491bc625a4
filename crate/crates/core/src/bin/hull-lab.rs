use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};

use hull_lab::cli::suite::{format_table, run_suite, SuiteOptions, CRITERIA};
use hull_lab::cli::{exit, run_experiment, with_workers, ExperimentConfig, Outcome};

#[derive(Parser)]
#[command(name = "hull-lab", version, about = "Convex hull properties of planar maps, checked on grids")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Directory for report.json and artifacts.
    #[arg(long, global = true, default_value = "out")]
    out_dir: PathBuf,
    /// Refine every grid: n nodes per axis become (n-1)*k+1.
    #[arg(long, global = true, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
    grid_scale: u32,
    /// Run on a single thread.
    #[arg(long, global = true)]
    sequential: bool,
    /// Multiply every suite tolerance (0 forces failures).
    #[arg(long, global = true, default_value_t = 1.0, hide = true)]
    tolerance_scale: f64,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment from a TOML config.
    Run { config: PathBuf },
    /// Run the acceptance criteria and print a table.
    Suite {
        /// Restrict to these criteria.
        #[arg(long, value_delimiter = ',')]
        only: Vec<u32>,
    },
    /// The strip-embedding regression.
    Remark1,
}

enum Failure {
    Parse(String),
    Internal(anyhow::Error),
}

fn finish(outcome: &Outcome, dir: &Path) -> anyhow::Result<bool> {
    let written = outcome.write(dir).with_context(|| format!("writing to {}", dir.display()))?;
    for v in &outcome.report.verdicts {
        println!("{:<5} {:<28} {}", if v.passed { "PASS" } else { "FAIL" }, v.name, v.detail);
    }
    for p in written {
        println!("wrote {}", p.display());
    }
    Ok(outcome.report.passed())
}

fn run(cli: &Cli) -> Result<bool, Failure> {
    let scale = cli.grid_scale as usize;
    match &cli.command {
        Command::Run { config } => {
            let src = std::fs::read_to_string(config)
                .with_context(|| format!("reading {}", config.display()))
                .map_err(Failure::Internal)?;
            let cfg = ExperimentConfig::parse(&src)
                .map_err(|e| Failure::Parse(format!("{}:{e}", config.display())))?;
            let outcome = run_experiment(&cfg, scale).map_err(|e| Failure::Internal(e.into()))?;
            finish(&outcome, &cli.out_dir).map_err(Failure::Internal)
        }
        Command::Remark1 => {
            let cfg = ExperimentConfig::parse("kind = \"remark1\"\n").map_err(|e| Failure::Parse(e.to_string()))?;
            let outcome = run_experiment(&cfg, scale).map_err(|e| Failure::Internal(e.into()))?;
            finish(&outcome, &cli.out_dir).map_err(Failure::Internal)
        }
        Command::Suite { only } => {
            let ids: Vec<u32> = if only.is_empty() { CRITERIA.iter().map(|c| c.0).collect() } else { only.clone() };
            if let Some(bad) = ids.iter().find(|&&i| !(1..=10).contains(&i)) {
                return Err(Failure::Parse(format!("no criterion {bad}")));
            }
            let results = run_suite(&ids, SuiteOptions { tolerance_scale: cli.tolerance_scale });
            print!("{}", format_table(&results));
            std::fs::create_dir_all(&cli.out_dir)
                .and_then(|_| {
                    std::fs::write(
                        cli.out_dir.join("suite.json"),
                        serde_json::to_string_pretty(&results).expect("results serialize"),
                    )
                })
                .context("writing suite.json")
                .map_err(Failure::Internal)?;
            Ok(results.iter().all(|r| r.passed))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match with_workers(cli.sequential, || run(&cli)) {
        Ok(true) => ExitCode::from(exit::PASS),
        Ok(false) => ExitCode::from(exit::VERDICT_FAILED),
        Err(Failure::Parse(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(exit::PARSE_ERROR)
        }
        Err(Failure::Internal(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit::INTERNAL_ERROR)
        }
    }
}
