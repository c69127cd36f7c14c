//! Aggregation of result rows into per-cell tables and plot series.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use wormsim::Protocol;

use crate::matrix::ResultRow;

/// Mean and spread of one metric over the seeds of a cell. `std` is the
/// sample standard deviation (0 for a single row).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Stat {
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub max: f64,
    pub n: usize,
}

impl Stat {
    pub fn of(values: &[f64]) -> Option<Stat> {
        if values.is_empty() {
            return None;
        }
        let n = values.len();
        let mean = values.iter().sum::<f64>() / n as f64;
        let std = if n > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Some(Stat { mean, std, min, max, n })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SummaryCell {
    pub protocol: Protocol,
    pub node_total: usize,
    pub runs: usize,
    pub true_detections: Stat,
    pub false_detections: Stat,
    pub success_rate: Stat,
    pub false_alarm_rate: Stat,
    /// Over the runs that declared at least one true pair.
    pub mean_detection_time: Option<Stat>,
    pub wall_time: Stat,
}

/// Success rate over time for one run, one point per recorded change.
#[derive(Clone, Debug, PartialEq)]
pub struct RunSeries {
    pub protocol: Protocol,
    pub node_total: usize,
    pub seed: u64,
    /// `(time, cumulative true pairs, success rate in percent)`.
    pub points: Vec<(f64, usize, f64)>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SummaryTables {
    pub cells: Vec<SummaryCell>,
    pub series: Vec<RunSeries>,
}

/// Groups rows by (protocol, node total). Rows whose timeline cannot be
/// decoded contribute no series.
pub fn summarize(rows: &[ResultRow], preset_pairs: usize) -> SummaryTables {
    let mut groups: BTreeMap<(Protocol, usize), Vec<&ResultRow>> = BTreeMap::new();
    for r in rows {
        groups.entry((r.protocol, r.node_total)).or_default().push(r);
    }
    let cells = groups
        .into_iter()
        .map(|((protocol, node_total), rs)| {
            let col = |f: &dyn Fn(&ResultRow) -> f64| Stat::of(&rs.iter().map(|r| f(r)).collect::<Vec<_>>()).expect("group non-empty");
            let times: Vec<f64> = rs.iter().filter_map(|r| r.mean_detection_time).collect();
            SummaryCell {
                protocol,
                node_total,
                runs: rs.len(),
                true_detections: col(&|r| r.true_detections as f64),
                false_detections: col(&|r| r.false_detections as f64),
                success_rate: col(&|r| r.success_rate),
                false_alarm_rate: col(&|r| r.false_alarm_rate),
                mean_detection_time: Stat::of(&times),
                wall_time: col(&|r| r.wall_time),
            }
        })
        .collect();
    let series = rows
        .iter()
        .filter_map(|r| {
            let points = r.timeline_points().ok()?;
            Some(RunSeries {
                protocol: r.protocol,
                node_total: r.node_total,
                seed: r.seed,
                points: points
                    .iter()
                    .map(|p| {
                        let rate = if preset_pairs == 0 {
                            0.0
                        } else {
                            (p.true_pairs as f64 / preset_pairs as f64 * 100.0).min(100.0)
                        };
                        (p.time, p.true_pairs, rate)
                    })
                    .collect(),
            })
        })
        .collect();
    SummaryTables { cells, series }
}

impl SummaryTables {
    /// One line per cell: `protocol,node_total,runs,` then mean and std of
    /// each metric.
    pub fn cells_csv(&self) -> String {
        let mut out = String::from(
            "protocol,node_total,runs,true_mean,true_std,false_mean,false_std,success_mean,success_std,false_alarm_mean,false_alarm_std,detection_time_mean,detection_time_std,wall_time_mean\n",
        );
        for c in &self.cells {
            let (dt_mean, dt_std) = c
                .mean_detection_time
                .map_or((String::new(), String::new()), |s| (s.mean.to_string(), s.std.to_string()));
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                c.protocol,
                c.node_total,
                c.runs,
                c.true_detections.mean,
                c.true_detections.std,
                c.false_detections.mean,
                c.false_detections.std,
                c.success_rate.mean,
                c.success_rate.std,
                c.false_alarm_rate.mean,
                c.false_alarm_rate.std,
                dt_mean,
                dt_std,
                c.wall_time.mean
            );
        }
        out
    }

    /// Long-format series: `protocol,node_total,seed,time,true_pairs,success_rate`.
    pub fn series_csv(&self) -> String {
        let mut out = String::from("protocol,node_total,seed,time,true_pairs,success_rate\n");
        for s in &self.series {
            for (t, k, rate) in &s.points {
                let _ = writeln!(out, "{},{},{},{},{},{}", s.protocol, s.node_total, s.seed, t, k, rate);
            }
        }
        out
    }

    /// Mean detections per node total, one column pair per protocol.
    pub fn density_csv(&self) -> String {
        let protocols: Vec<Protocol> = {
            let mut p: Vec<Protocol> = self.cells.iter().map(|c| c.protocol).collect();
            p.sort();
            p.dedup();
            p
        };
        let mut out = String::from("node_total");
        for p in &protocols {
            let _ = write!(out, ",{p}_true,{p}_false");
        }
        out.push('\n');
        let mut totals: Vec<usize> = self.cells.iter().map(|c| c.node_total).collect();
        totals.sort_unstable();
        totals.dedup();
        for n in totals {
            let _ = write!(out, "{n}");
            for p in &protocols {
                match self.cells.iter().find(|c| c.protocol == *p && c.node_total == n) {
                    Some(c) => {
                        let _ = write!(out, ",{},{}", c.true_detections.mean, c.false_detections.mean);
                    }
                    None => out.push_str(",,"),
                }
            }
            out.push('\n');
        }
        out
    }

    /// Human-readable table for the terminal.
    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<15} {:>5} {:>4} {:>13} {:>13} {:>15} {:>15}",
            "protocol", "nodes", "runs", "true pairs", "false pairs", "success %", "detect time s"
        );
        for c in &self.cells {
            let dt = c
                .mean_detection_time
                .map_or("-".to_string(), |s| format!("{:.0} ± {:.0}", s.mean, s.std));
            let _ = writeln!(
                out,
                "{:<15} {:>5} {:>4} {:>13} {:>13} {:>15} {:>15}",
                c.protocol.name(),
                c.node_total,
                c.runs,
                format!("{:.1} ± {:.1}", c.true_detections.mean, c.true_detections.std),
                format!("{:.1} ± {:.1}", c.false_detections.mean, c.false_detections.std),
                format!("{:.1} ± {:.1}", c.success_rate.mean, c.success_rate.std),
                dt
            );
        }
        out
    }
}
