//! Command-line front end for the resonant beam link simulator.
//!
//! The binary is a thin wrapper around [`run`] and [`validate`] so that the
//! whole pipeline, including exit codes, can be driven from tests.

pub mod config;
pub mod experiments;
pub mod manifest;
pub mod svg;

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use rbcom_core::framing::FramingError;
use rbcom_core::{PhysicsError, SimError};
use thiserror::Error;

use crate::config::{ConfigError, Experiment, ExperimentConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_PARSE: i32 = 3;
pub const EXIT_VALIDATION: i32 = 4;
pub const EXIT_BELOW_THRESHOLD: i32 = 5;
pub const EXIT_FRAME_TOO_SHORT: i32 = 6;
pub const EXIT_SIMULATION: i32 = 7;
pub const EXIT_IO: i32 = 8;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("config: {0}")]
    Config(#[from] ConfigError),
    #[error("experiment {experiment}: {source}")]
    Sim { experiment: Experiment, source: SimError },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Config(ConfigError::Parse { .. }) => EXIT_PARSE,
            CliError::Config(ConfigError::Invalid { .. }) => EXIT_VALIDATION,
            CliError::Sim { source, .. } => match source {
                SimError::Physics(PhysicsError::BelowThreshold { .. }) => EXIT_BELOW_THRESHOLD,
                SimError::Framing(FramingError::FrameTooShort { .. }) => EXIT_FRAME_TOO_SHORT,
                // Physical parameter problems caught by the core are still bad input.
                SimError::Config(_) => EXIT_VALIDATION,
                _ => EXIT_SIMULATION,
            },
            CliError::Io { .. } => EXIT_IO,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Command-line overrides; each wins over the config file when set.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub config: PathBuf,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub experiment: Option<Experiment>,
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub experiment: Experiment,
    pub out_dir: PathBuf,
    pub files: Vec<PathBuf>,
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig, CliError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    Ok(ExperimentConfig::parse(&text)?)
}

/// Parses and validates a config file without running anything.
pub fn validate(path: &Path) -> Result<ExperimentConfig, CliError> {
    load_config(path)
}

pub fn run(opts: &RunOptions) -> Result<RunSummary, CliError> {
    let mut config = load_config(&opts.config)?;
    if let Some(seed) = opts.seed {
        config.seed = seed;
    }
    if let Some(e) = opts.experiment {
        config.experiment = Some(e);
    }
    let experiment = config
        .experiment
        .ok_or_else(|| CliError::Usage("no experiment given (set `experiment` or pass --experiment)".into()))?;
    let out_dir = opts
        .out
        .clone()
        .or_else(|| config.output_dir.clone())
        .ok_or_else(|| CliError::Usage("no output directory given (set `output_dir` or pass --out)".into()))?;
    // The output location does not affect results, so keep it out of the hash.
    config.output_dir = None;

    let output = experiments::run_experiment(&config, experiment).map_err(|source| CliError::Sim { experiment, source })?;
    let csv_name = format!("{}.csv", experiment.name());
    let svg_name = format!("{}.svg", experiment.name());
    let manifest = manifest::render(experiment.name(), config.seed, &config.canonical(), &[&csv_name, &svg_name]);

    fs::create_dir_all(&out_dir).map_err(io_err(&out_dir))?;
    let mut written = Vec::new();
    let contents = [
        (csv_name, output.csv),
        (svg_name, output.svg),
        ("manifest.txt".to_string(), manifest),
    ];
    for (name, body) in contents {
        let path = out_dir.join(name);
        if let Err(e) = fs::write(&path, body) {
            for p in &written {
                let _ = fs::remove_file(p);
            }
            let _ = fs::remove_file(&path);
            return Err(io_err(&path)(e));
        }
        written.push(path);
    }
    Ok(RunSummary {
        experiment,
        out_dir,
        files: written,
    })
}
