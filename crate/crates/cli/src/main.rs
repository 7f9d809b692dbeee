use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rbcom_sim::config::Experiment;
use rbcom_sim::{run, validate, RunOptions};

#[derive(Parser)]
#[command(name = "rbcom-sim", version, about = "Resonant beam communication link simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and write <experiment>.csv, <experiment>.svg and manifest.txt.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory (overrides RBCOM_OUT and `output_dir`).
        #[arg(long, env = "RBCOM_OUT")]
        out: Option<PathBuf>,
        /// RNG seed (overrides RBCOM_SEED and `seed`).
        #[arg(long, env = "RBCOM_SEED")]
        seed: Option<u64>,
        /// Experiment name (overrides `experiment`).
        #[arg(long)]
        experiment: Option<Experiment>,
    },
    /// Parse and validate a config file.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run {
            config,
            out,
            seed,
            experiment,
        } => run(&RunOptions {
            config,
            out,
            seed,
            experiment,
        })
        .map(|s| {
            for f in &s.files {
                println!("{}", f.display());
            }
        }),
        Command::Validate { config } => validate(&config).map(|c| {
            let name = c.experiment.map_or("(none)", |e| e.name());
            println!("ok: experiment={name} seed={}", c.seed);
        }),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("rbcom-sim: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
