//! The `wormsim` command line.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use wormsim::{detector, load_config, DetectionReport, DetectorParams, EventTrace, Protocol, ScenarioConfig};

use crate::matrix::{read_rows, run_cell, run_matrix_with, write_rows, Cell, ExperimentMatrix, MatrixError, ResultRow};
use crate::summary::summarize;

/// Process exit codes.
pub mod exit {
    pub const OK: u8 = 0;
    /// Unknown flag, missing argument, bad flag value.
    pub const USAGE: u8 = 2;
    /// A file could not be read or written.
    pub const IO: u8 = 3;
    /// The scenario config is malformed or violates a constraint.
    pub const CONFIG: u8 = 4;
    /// A trace, report or results file is malformed.
    pub const INPUT: u8 = 5;
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{}: {source}", .path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}: {source}", .path.display())]
    Config { path: PathBuf, source: wormsim::ConfigError },
    #[error("{0}")]
    InvalidScenario(wormsim::ConfigError),
    #[error("{}: {reason}", .path.display())]
    Input { path: PathBuf, reason: String },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => exit::USAGE,
            CliError::Io { .. } => exit::IO,
            CliError::Config { .. } | CliError::InvalidScenario(_) => exit::CONFIG,
            CliError::Input { .. } => exit::INPUT,
        }
    }
}

impl From<MatrixError> for CliError {
    fn from(e: MatrixError) -> Self {
        match e {
            MatrixError::Empty(_) => CliError::Usage(e.to_string()),
            MatrixError::InvalidCell { source, .. } => CliError::InvalidScenario(source),
            MatrixError::Io { path, source } => CliError::Io { path, source },
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "wormsim", version, about = "Wormhole attack simulation and detection")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate one scenario and write its trace and report.
    Run {
        /// Scenario config file; omitted keys take reference values.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_parser = parse_protocol)]
        protocol: Option<Protocol>,
        /// Total population, wormhole endpoints included.
        #[arg(long)]
        nodes: Option<usize>,
        /// Output directory for trace.txt, report.txt and row.csv.
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Sweep node totals x protocols x seeds and write a results CSV.
    Matrix {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Seeds 1..=N per cell.
        #[arg(long, default_value_t = 5)]
        seeds: u64,
        /// Comma-separated node totals.
        #[arg(long, value_delimiter = ',', default_values_t = [58usize, 64, 70, 76])]
        nodes: Vec<usize>,
        /// Comma-separated protocols; all four by default.
        #[arg(long, value_delimiter = ',', value_parser = parse_protocol)]
        protocols: Vec<Protocol>,
        #[arg(long, default_value = "results.csv")]
        out: PathBuf,
        /// Also write every cell's trace into this directory.
        #[arg(long)]
        traces: Option<PathBuf>,
    },
    /// Summarize a results CSV into tables and plot-data files.
    Report {
        #[arg(long, default_value = "results.csv")]
        input: PathBuf,
        /// Directory for summary.csv, series.csv and density.csv.
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// Preset pair count used to turn series counts into rates.
        #[arg(long, default_value_t = 5)]
        pairs: usize,
    },
    /// Re-run the detector over a saved trace.
    Replay {
        #[arg(long)]
        trace: PathBuf,
        /// Config file whose detector settings replace the trace's own.
        #[arg(long)]
        params: Option<PathBuf>,
        /// Write the report here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_protocol(s: &str) -> Result<Protocol, String> {
    s.parse()
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn create_dir(path: &Path) -> Result<(), CliError> {
    fs::create_dir_all(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn base_config(path: Option<&Path>) -> Result<ScenarioConfig, CliError> {
    match path {
        None => Ok(ScenarioConfig::default()),
        Some(p) => load_config(&read(p)?).map_err(|source| CliError::Config {
            path: p.to_path_buf(),
            source,
        }),
    }
}

fn rows_csv(rows: &[ResultRow]) -> String {
    let mut buf = Vec::new();
    write_rows(rows, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("csv is utf-8")
}

/// Executes a parsed command, returning what it printed.
pub fn execute(cli: Cli) -> Result<String, CliError> {
    match cli.command {
        Command::Run {
            config,
            seed,
            protocol,
            nodes,
            out,
        } => {
            let mut cfg = base_config(config.as_deref())?;
            if let Some(s) = seed {
                cfg.rng_seed = s;
            }
            if let Some(p) = protocol {
                cfg.routing_protocol = p;
            }
            if let Some(n) = nodes {
                cfg.set_total_nodes(n).map_err(CliError::InvalidScenario)?;
            }
            let (trace, report, wall) = run_cell(&cfg).map_err(CliError::InvalidScenario)?;
            create_dir(&out)?;
            write(&out.join("trace.txt"), trace.to_text())?;
            write(&out.join("report.txt"), report.to_record_file())?;
            let cell = Cell {
                node_total: cfg.total_nodes(),
                protocol: cfg.routing_protocol,
                seed: cfg.rng_seed,
            };
            write(&out.join("row.csv"), rows_csv(&[ResultRow::from_report(&cell, &report, wall)]))?;
            Ok(format!(
                "{} nodes, {}, seed {}: {} true / {} false pairs ({} records, {:.1} s)\n",
                cell.node_total,
                cell.protocol,
                cell.seed,
                report.true_detections,
                report.false_detections,
                trace.len(),
                wall
            ))
        }
        Command::Matrix {
            config,
            seeds,
            nodes,
            protocols,
            out,
            traces,
        } => {
            let matrix = ExperimentMatrix {
                node_totals: nodes,
                protocols: if protocols.is_empty() {
                    Protocol::ALL.to_vec()
                } else {
                    protocols
                },
                seeds: (1..=seeds).collect(),
                base_config: base_config(config.as_deref())?,
            };
            if let Some(dir) = &traces {
                create_dir(dir)?;
            }
            let rows = run_matrix_with(&matrix, traces.as_deref())?;
            write(&out, rows_csv(&rows))?;
            Ok(format!("{} rows written to {}\n", rows.len(), out.display()))
        }
        Command::Report { input, out, pairs } => {
            let text = read(&input)?;
            let rows = read_rows(text.as_bytes()).map_err(|e| CliError::Input {
                path: input.clone(),
                reason: e.to_string(),
            })?;
            if rows.is_empty() {
                return Err(CliError::Input {
                    path: input,
                    reason: "no result rows".into(),
                });
            }
            let tables = summarize(&rows, pairs);
            create_dir(&out)?;
            write(&out.join("summary.csv"), tables.cells_csv())?;
            write(&out.join("series.csv"), tables.series_csv())?;
            write(&out.join("density.csv"), tables.density_csv())?;
            Ok(tables.render())
        }
        Command::Replay { trace, params, out } => {
            let report = replay(&trace, params.as_deref())?;
            let text = report.to_record_file();
            match out {
                Some(path) => {
                    write(&path, &text)?;
                    Ok(String::new())
                }
                None => Ok(text),
            }
        }
    }
}

/// Runs the detector over the trace at `trace_path`, with detector settings
/// from `params_path` when given and from the trace header otherwise.
pub fn replay(trace_path: &Path, params_path: Option<&Path>) -> Result<DetectionReport, CliError> {
    let trace = EventTrace::parse(&read(trace_path)?).map_err(|e| CliError::Input {
        path: trace_path.to_path_buf(),
        reason: e.to_string(),
    })?;
    let params: DetectorParams = match params_path {
        Some(p) => base_config(Some(p))?.detector_params,
        None => trace.detector_params().cloned().unwrap_or_default(),
    };
    Ok(detector::detect(&trace, &params))
}

/// Parses `args` (program name first), executes, prints, and maps errors to
/// exit codes.
pub fn main_with<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { exit::USAGE } else { exit::OK });
        }
    };
    match execute(cli) {
        Ok(text) => {
            print!("{text}");
            ExitCode::from(exit::OK)
        }
        Err(e) => {
            eprintln!("wormsim: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
