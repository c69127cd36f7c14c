//! Detection results and their scoring against ground truth.
//!
//! Report files are plain `key value...` lines in this order:
//!
//! ```text
//! preset_pairs 5
//! suspects 48 49 52
//! pair 48 49 2400
//! true_detections 1
//! false_detections 0
//! detection_success_rate 20
//! false_alarm_rate 0
//! mean_detection_time 2400
//! timeline 1800 0 0
//! timeline 2400 1 0
//! ```
//!
//! `pair` and `timeline` repeat; `mean_detection_time` is `none` when no true
//! pair was declared.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use crate::trace::EventTrace;
use crate::{NodeClass, NodeId};

/// Which pairs are really wormholes, and when the attack began.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct GroundTruth {
    pub true_pairs: BTreeSet<(NodeId, NodeId)>,
    pub attack_start: f64,
}

impl GroundTruth {
    pub fn from_trace(trace: &EventTrace) -> Self {
        let mut ends: BTreeMap<u32, Vec<NodeId>> = BTreeMap::new();
        for (id, class) in trace.node_classes() {
            if let NodeClass::Wormhole { pair } = class {
                ends.entry(pair).or_default().push(id);
            }
        }
        let true_pairs = ends
            .values()
            .filter(|v| v.len() == 2)
            .map(|v| crate::link::ordered(v[0], v[1]))
            .collect();
        Self {
            true_pairs,
            attack_start: trace.scenario().map_or(0.0, |h| h.attack_start),
        }
    }

    pub fn is_true_pair(&self, a: NodeId, b: NodeId) -> bool {
        self.true_pairs.contains(&crate::link::ordered(a, b))
    }
}

/// Cumulative declarations after one detector run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimelinePoint {
    pub time: f64,
    pub true_pairs: usize,
    pub false_pairs: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DetectionReport {
    pub preset_pairs: usize,
    pub suspects: BTreeSet<NodeId>,
    /// Declared pairs (smaller id first) and the time of first declaration.
    pub confirmed_pairs: BTreeMap<(NodeId, NodeId), f64>,
    pub true_detections: usize,
    pub false_detections: usize,
    /// Percent of preset pairs declared.
    pub detection_success_rate: f64,
    /// False declarations as a percent of preset pairs, capped at 100.
    pub false_alarm_rate: f64,
    pub mean_detection_time: Option<f64>,
    pub timeline: Vec<TimelinePoint>,
}

impl DetectionReport {
    pub fn empty(preset_pairs: usize) -> Self {
        Self {
            preset_pairs,
            suspects: BTreeSet::new(),
            confirmed_pairs: BTreeMap::new(),
            true_detections: 0,
            false_detections: 0,
            detection_success_rate: 0.0,
            false_alarm_rate: 0.0,
            mean_detection_time: None,
            timeline: Vec::new(),
        }
    }

    /// Merges another run's declarations, keeping the earliest time per pair.
    pub fn absorb(&mut self, other: &DetectionReport) {
        self.suspects.extend(other.suspects.iter().copied());
        for (pair, t) in &other.confirmed_pairs {
            let slot = self.confirmed_pairs.entry(*pair).or_insert(*t);
            if *t < *slot {
                *slot = *t;
            }
        }
    }

    /// Recomputes the metrics and appends a timeline point at `now`.
    pub fn finish(&mut self, truth: &GroundTruth, now: f64) {
        let (mut t, mut f) = (0usize, 0usize);
        let mut delays = Vec::new();
        for (&(a, b), &at) in &self.confirmed_pairs {
            if truth.is_true_pair(a, b) {
                t += 1;
                delays.push(at - truth.attack_start);
            } else {
                f += 1;
            }
        }
        self.true_detections = t;
        self.false_detections = f;
        let pct = |k: usize| {
            if self.preset_pairs == 0 {
                if k == 0 {
                    0.0
                } else {
                    100.0
                }
            } else {
                (k as f64 / self.preset_pairs as f64 * 100.0).min(100.0)
            }
        };
        self.detection_success_rate = pct(t);
        self.false_alarm_rate = pct(f);
        self.mean_detection_time = (!delays.is_empty()).then(|| delays.iter().sum::<f64>() / delays.len() as f64);
        self.timeline.push(TimelinePoint {
            time: now,
            true_pairs: t,
            false_pairs: f,
        });
    }

    pub fn to_record_file(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "preset_pairs {}", self.preset_pairs);
        out.push_str("suspects");
        for s in &self.suspects {
            let _ = write!(out, " {s}");
        }
        out.push('\n');
        for ((a, b), t) in &self.confirmed_pairs {
            let _ = writeln!(out, "pair {a} {b} {t}");
        }
        let _ = writeln!(out, "true_detections {}", self.true_detections);
        let _ = writeln!(out, "false_detections {}", self.false_detections);
        let _ = writeln!(out, "detection_success_rate {}", self.detection_success_rate);
        let _ = writeln!(out, "false_alarm_rate {}", self.false_alarm_rate);
        match self.mean_detection_time {
            Some(t) => {
                let _ = writeln!(out, "mean_detection_time {t}");
            }
            None => out.push_str("mean_detection_time none\n"),
        }
        for p in &self.timeline {
            let _ = writeln!(out, "timeline {} {} {}", p.time, p.true_pairs, p.false_pairs);
        }
        out
    }

    pub fn parse_record_file(text: &str) -> Result<DetectionReport, String> {
        let mut r = DetectionReport::empty(0);
        for (i, line) in text.lines().enumerate() {
            let mut it = line.split_whitespace();
            let Some(key) = it.next() else { continue };
            let rest: Vec<&str> = it.collect();
            let bad = || format!("report line {}: malformed `{line}`", i + 1);
            fn num<T: std::str::FromStr>(s: Option<&&str>, bad: &dyn Fn() -> String) -> Result<T, String> {
                s.ok_or_else(bad)?.parse().map_err(|_| bad())
            }
            match key {
                "preset_pairs" => r.preset_pairs = num(rest.first(), &bad)?,
                "suspects" => {
                    for s in &rest {
                        r.suspects.insert(s.parse().map_err(|_| bad())?);
                    }
                }
                "pair" => {
                    let a: NodeId = num(rest.first(), &bad)?;
                    let b: NodeId = num(rest.get(1), &bad)?;
                    r.confirmed_pairs.insert((a, b), num(rest.get(2), &bad)?);
                }
                "true_detections" => r.true_detections = num(rest.first(), &bad)?,
                "false_detections" => r.false_detections = num(rest.first(), &bad)?,
                "detection_success_rate" => r.detection_success_rate = num(rest.first(), &bad)?,
                "false_alarm_rate" => r.false_alarm_rate = num(rest.first(), &bad)?,
                "mean_detection_time" => {
                    r.mean_detection_time = match rest.first() {
                        Some(&"none") => None,
                        other => Some(num(other, &bad)?),
                    }
                }
                "timeline" => r.timeline.push(TimelinePoint {
                    time: num(rest.first(), &bad)?,
                    true_pairs: num(rest.get(1), &bad)?,
                    false_pairs: num(rest.get(2), &bad)?,
                }),
                _ => return Err(bad()),
            }
        }
        Ok(r)
    }
}
