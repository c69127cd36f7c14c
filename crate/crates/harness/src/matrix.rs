//! The scenario matrix: node totals x protocols x seeds.

use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use wormsim::detector::TimelinePoint;
use wormsim::{run_simulation, ConfigError, DetectionReport, EventTrace, Protocol, ScenarioConfig};

/// Environment variable holding the number of worker threads for
/// [`run_matrix`]. Unset or `0` means one per available core.
pub const WORKERS_ENV: &str = "WORMSIM_WORKERS";

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentMatrix {
    pub node_totals: Vec<usize>,
    pub protocols: Vec<Protocol>,
    pub seeds: Vec<u64>,
    pub base_config: ScenarioConfig,
}

impl Default for ExperimentMatrix {
    fn default() -> Self {
        Self::with_seed_count(5)
    }
}

impl ExperimentMatrix {
    /// Node totals 58/64/70/76, all four protocols, seeds `1..=n`.
    pub fn with_seed_count(n: u64) -> Self {
        Self {
            node_totals: vec![58, 64, 70, 76],
            protocols: Protocol::ALL.to_vec(),
            seeds: (1..=n).collect(),
            base_config: ScenarioConfig::default(),
        }
    }

    /// Every cell in row order: node total, then protocol, then seed.
    pub fn cells(&self) -> Vec<Cell> {
        let mut out = Vec::new();
        for &node_total in &self.node_totals {
            for &protocol in &self.protocols {
                for &seed in &self.seeds {
                    out.push(Cell {
                        node_total,
                        protocol,
                        seed,
                    });
                }
            }
        }
        out
    }

    pub fn config_for(&self, cell: &Cell) -> Result<ScenarioConfig, ConfigError> {
        let mut cfg = self.base_config.clone();
        cfg.set_total_nodes(cell.node_total)?;
        cfg.routing_protocol = cell.protocol;
        cfg.rng_seed = cell.seed;
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Cell {
    pub node_total: usize,
    pub protocol: Protocol,
    pub seed: u64,
}

#[derive(Debug, thiserror::Error)]
pub enum MatrixError {
    #[error("matrix has no {0}")]
    Empty(&'static str),
    #[error("cell (nodes {}, {}, seed {}): {source}", .cell.node_total, .cell.protocol, .cell.seed)]
    InvalidCell { cell: Cell, source: ConfigError },
    #[error("writing trace {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

/// One CSV row per simulated cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub node_total: usize,
    #[serde(serialize_with = "ser_protocol", deserialize_with = "de_protocol")]
    pub protocol: Protocol,
    pub seed: u64,
    pub true_detections: usize,
    pub false_detections: usize,
    pub success_rate: f64,
    pub false_alarm_rate: f64,
    /// Empty when no true pair was declared.
    pub mean_detection_time: Option<f64>,
    pub wall_time: f64,
    /// Cumulative declarations as `time:true:false` points joined by `;`,
    /// listing the first detector run and every run where a count changed.
    pub timeline: String,
}

fn ser_protocol<S: Serializer>(p: &Protocol, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(p.name())
}

fn de_protocol<'de, D: Deserializer<'de>>(d: D) -> Result<Protocol, D::Error> {
    let s = String::deserialize(d)?;
    s.parse().map_err(serde::de::Error::custom)
}

impl ResultRow {
    pub fn from_report(cell: &Cell, report: &DetectionReport, wall_time: f64) -> Self {
        Self {
            node_total: cell.node_total,
            protocol: cell.protocol,
            seed: cell.seed,
            true_detections: report.true_detections,
            false_detections: report.false_detections,
            success_rate: report.detection_success_rate,
            false_alarm_rate: report.false_alarm_rate,
            mean_detection_time: report.mean_detection_time,
            wall_time,
            timeline: encode_timeline(&report.timeline),
        }
    }

    pub fn cell(&self) -> Cell {
        Cell {
            node_total: self.node_total,
            protocol: self.protocol,
            seed: self.seed,
        }
    }

    pub fn timeline_points(&self) -> Result<Vec<TimelinePoint>, String> {
        decode_timeline(&self.timeline)
    }

    /// Equal in everything but wall time.
    pub fn same_outcome(&self, other: &ResultRow) -> bool {
        ResultRow {
            wall_time: 0.0,
            ..self.clone()
        } == ResultRow {
            wall_time: 0.0,
            ..other.clone()
        }
    }
}

pub fn encode_timeline(points: &[TimelinePoint]) -> String {
    let mut out: Vec<String> = Vec::new();
    let mut last: Option<(usize, usize)> = None;
    for p in points {
        if last != Some((p.true_pairs, p.false_pairs)) {
            out.push(format!("{}:{}:{}", p.time, p.true_pairs, p.false_pairs));
            last = Some((p.true_pairs, p.false_pairs));
        }
    }
    out.join(";")
}

pub fn decode_timeline(text: &str) -> Result<Vec<TimelinePoint>, String> {
    if text.trim().is_empty() {
        return Ok(Vec::new());
    }
    text.split(';')
        .map(|item| {
            let parts: Vec<&str> = item.split(':').collect();
            let bad = || format!("malformed timeline point `{item}`");
            if parts.len() != 3 {
                return Err(bad());
            }
            Ok(TimelinePoint {
                time: parts[0].parse().map_err(|_| bad())?,
                true_pairs: parts[1].parse().map_err(|_| bad())?,
                false_pairs: parts[2].parse().map_err(|_| bad())?,
            })
        })
        .collect()
}

/// Runs one scenario and times it.
pub fn run_cell(cfg: &ScenarioConfig) -> Result<(EventTrace, DetectionReport, f64), ConfigError> {
    let start = Instant::now();
    let (trace, report) = run_simulation(cfg)?;
    Ok((trace, report, start.elapsed().as_secs_f64()))
}

pub fn worker_count() -> usize {
    std::env::var(WORKERS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|n| *n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

/// Runs every cell. All cell configs are validated before any simulation
/// starts; rows come back in [`ExperimentMatrix::cells`] order.
pub fn run_matrix(matrix: &ExperimentMatrix) -> Result<Vec<ResultRow>, MatrixError> {
    run_matrix_with(matrix, None)
}

/// Like [`run_matrix`], also writing each cell's trace into `trace_dir` as
/// `trace_n{nodes}_{protocol}_s{seed}.txt`.
pub fn run_matrix_with(matrix: &ExperimentMatrix, trace_dir: Option<&Path>) -> Result<Vec<ResultRow>, MatrixError> {
    if matrix.node_totals.is_empty() {
        return Err(MatrixError::Empty("node totals"));
    }
    if matrix.protocols.is_empty() {
        return Err(MatrixError::Empty("protocols"));
    }
    if matrix.seeds.is_empty() {
        return Err(MatrixError::Empty("seeds"));
    }
    let jobs: Vec<(Cell, ScenarioConfig)> = matrix
        .cells()
        .into_iter()
        .map(|cell| {
            matrix
                .config_for(&cell)
                .map(|cfg| (cell, cfg))
                .map_err(|source| MatrixError::InvalidCell { cell, source })
        })
        .collect::<Result<_, _>>()?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(worker_count())
        .build()
        .expect("thread pool");
    pool.install(|| {
        jobs.par_iter()
            .map(|(cell, cfg)| {
                let (trace, report, wall) =
                    run_cell(cfg).map_err(|source| MatrixError::InvalidCell { cell: *cell, source })?;
                if let Some(dir) = trace_dir {
                    let path = dir.join(trace_file_name(cell));
                    std::fs::write(&path, trace.to_text()).map_err(|source| MatrixError::Io { path, source })?;
                }
                Ok(ResultRow::from_report(cell, &report, wall))
            })
            .collect()
    })
}

pub fn trace_file_name(cell: &Cell) -> String {
    format!("trace_n{}_{}_s{}.txt", cell.node_total, cell.protocol, cell.seed)
}

pub fn write_rows<W: std::io::Write>(rows: &[ResultRow], out: W) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_rows<R: std::io::Read>(input: R) -> Result<Vec<ResultRow>, csv::Error> {
    csv::Reader::from_reader(input).deserialize().collect()
}
