use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use evolang::experiment::output::{write_sweep_table, OutputError};
use evolang::experiment::{
    load_config, preset_baldwin, run_single, run_sweep, write_csv, write_snapshot, Config,
    ConfigError, Error, Execution, RunArtifacts,
};
use evolang::RunStatus;

#[derive(Parser)]
#[command(name = "evolang", version, about = "Evolutionary naming game on a square lattice")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// key=value configuration file
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed (overrides the config file)
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory (overrides the config file)
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Run the control variant with this constant learning ability
    #[arg(long, global = true)]
    fixed_learning: Option<f64>,
    /// Write a PGM language snapshot every this many sweeps
    #[arg(long, global = true)]
    snapshot_every: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// One run at constant p (or the configured schedule)
    Run,
    /// Steady-state scan over p_grid × replicas
    Sweep,
    /// p = 0.1 until sweep 8000, then 0.98
    Baldwin,
    /// Like `run`, always emitting snapshots (final sweep by default)
    Snapshot,
}

fn io_error(path: &Path, source: std::io::Error) -> Error {
    Error::Output(OutputError {
        path: path.to_path_buf(),
        source,
    })
}

fn build_config(common: &Common) -> Result<Config, Error> {
    let mut config = match &common.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| io_error(path, e))?;
            load_config(&text)?
        }
        None => Config::default(),
    };
    if let Some(seed) = common.seed {
        config.seed = seed;
    }
    if let Some(out) = &common.out {
        config.out_dir = out.clone();
    }
    if let Some(l) = common.fixed_learning {
        config.model.fixed_learning = Some(l);
    }
    if let Some(k) = common.snapshot_every {
        config.snapshot_every = Some(k);
    }
    config.validate().map_err(|e| match e {
        ConfigError::Invariant { key, reason } if key == "fixed_learning" => {
            ConfigError::Invariant {
                key: "--fixed-learning".into(),
                reason,
            }
        }
        other => other,
    })?;
    fs::create_dir_all(&config.out_dir).map_err(|e| io_error(&config.out_dir, e))?;
    Ok(config)
}

fn describe(status: RunStatus) -> String {
    match status {
        RunStatus::Completed => "completed".into(),
        RunStatus::Halted { sweep } => format!("halted at sweep {sweep}"),
        RunStatus::Extinct { sweep } => format!("extinct at sweep {sweep}"),
    }
}

fn emit_run(config: &Config, stem: &str, art: &RunArtifacts) -> Result<(), Error> {
    let csv = config.out_dir.join(format!("{stem}.csv"));
    write_csv(&art.rows, &csv)?;
    for snap in &art.snapshots {
        let path = config.out_dir.join(format!("snapshot_{:07}.pgm", snap.sweep));
        write_snapshot(&snap.map, &snap.clusters, &path)?;
    }
    let fmt = |v: Option<f64>| v.map_or("n/a".to_string(), |v| format!("{v:.6}"));
    match &art.summary {
        Ok(s) => println!(
            "{}: s = {}, l = {} over {} windows ({})",
            csv.display(),
            fmt(s.success_rate),
            fmt(s.mean_learning),
            s.windows,
            describe(art.status)
        ),
        Err(e) => println!("{}: {e} ({})", csv.display(), describe(art.status)),
    }
    Ok(())
}

fn execute(cli: &Cli) -> Result<(), Error> {
    let mut config = build_config(&cli.common)?;
    match cli.command {
        Command::Run => emit_run(&config, "timeseries", &run_single(&config)?),
        Command::Baldwin => emit_run(&config, "baldwin", &preset_baldwin(&config)?),
        Command::Snapshot => {
            if config.snapshot_every.is_none() {
                config.snapshot_every = Some(config.n_sweeps);
            }
            emit_run(&config, "timeseries", &run_single(&config)?)
        }
        Command::Sweep => {
            let rows = run_sweep(&config, Execution::Parallel)?;
            let path = config.out_dir.join("sweep.csv");
            write_sweep_table(&rows, &path)?;
            let extinct = rows
                .iter()
                .filter(|r| matches!(r.status, RunStatus::Extinct { .. }))
                .count();
            println!("{}: {} rows, {extinct} extinct", path.display(), rows.len());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
