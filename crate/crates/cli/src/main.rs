use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use malliavin_lab::harness::{
    read_csv, run_experiment, write_csv, write_metadata, ExperimentConfig, EXPERIMENTS,
};

#[derive(Parser)]
#[command(
    name = "mlab",
    version,
    about = "Run numerical experiments on the drift SDE flow"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and write `<out>/<experiment>.csv` plus a sidecar.
    Run {
        #[arg(long)]
        experiment: String,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    ListExperiments,
    /// Summarise every report in a directory.
    Report {
        #[arg(long = "in")]
        input: PathBuf,
    },
}

fn run(
    experiment: String,
    config: PathBuf,
    seed: Option<u64>,
    out: Option<PathBuf>,
) -> Result<bool> {
    let mut cfg = ExperimentConfig::parse_config(&config)?;
    cfg.experiment = Some(experiment.clone());
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(o) = out {
        cfg.out = o;
    }
    let rows = run_experiment(&cfg)?;
    let path = cfg.out.join(format!("{experiment}.csv"));
    write_csv(&rows, &path)?;
    write_metadata(&cfg, rows.len(), &path)?;
    let failed: Vec<_> = rows.iter().filter(|r| r.pass == Some(false)).collect();
    let checked = rows.iter().filter(|r| r.pass.is_some()).count();
    println!(
        "{experiment}: {} rows, {} checks, {} failed -> {}",
        rows.len(),
        checked,
        failed.len(),
        path.display()
    );
    for r in &failed {
        println!(
            "  FAIL {} value={} tolerance={} {}",
            r.metric, r.value, r.tolerance, r.note
        );
    }
    Ok(failed.is_empty())
}

fn report(input: PathBuf) -> Result<()> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(&input)
        .with_context(|| format!("reading {}", input.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .collect();
    files.sort();
    println!(
        "{:<26} {:>6} {:>6} {:>6}",
        "experiment", "rows", "pass", "fail"
    );
    for f in files {
        let rows = read_csv(&f)?;
        let name = f
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        let pass = rows.iter().filter(|r| r.pass == Some(true)).count();
        let fail = rows.iter().filter(|r| r.pass == Some(false)).count();
        println!("{name:<26} {:>6} {pass:>6} {fail:>6}", rows.len());
    }
    Ok(())
}

fn main() -> Result<ExitCode> {
    match Cli::parse().command {
        Command::Run {
            experiment,
            config,
            seed,
            out,
        } => {
            let ok = run(experiment, config, seed, out)?;
            Ok(if ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            })
        }
        Command::ListExperiments => {
            for e in EXPERIMENTS {
                println!("{e}");
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Report { input } => {
            report(input)?;
            Ok(ExitCode::SUCCESS)
        }
    }
}
