//! Third-party-auditor detection engine.
//!
//! Every `audit_window` seconds after `warmup` the auditor builds a ledger of
//! the trailing window and runs three steps:
//!
//! 1. relay counts are scored with the configured Z-Score variant and nodes
//!    above `z_threshold` are marked as suspects; marks persist across runs;
//! 2. marked suspects are bound into pairs by greedy maximum mutual traffic;
//! 3. a pair whose neighbor sets barely overlap is declared a wormhole.
//!
//! Declarations accumulate over the run. The detector is a pure function of
//! the trace and the parameters.

pub mod ledger;
pub mod report;
pub mod stats;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

pub use ledger::{build_ledger, AuditLedger, LedgerScanner};
pub use report::{DetectionReport, GroundTruth, TimelinePoint};

use crate::trace::EventTrace;
use crate::NodeId;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ZVariant {
    Standard,
    Modified,
    Local,
    Dynamic,
}

impl ZVariant {
    pub fn name(self) -> &'static str {
        match self {
            ZVariant::Standard => "standard",
            ZVariant::Modified => "modified",
            ZVariant::Local => "local",
            ZVariant::Dynamic => "dynamic",
        }
    }
}

impl fmt::Display for ZVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ZVariant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "standard" => Ok(ZVariant::Standard),
            "modified" => Ok(ZVariant::Modified),
            "local" => Ok(ZVariant::Local),
            "dynamic" => Ok(ZVariant::Dynamic),
            _ => Err(format!("unknown z-score variant `{s}`")),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DetectorParams {
    pub z_variant: ZVariant,
    pub z_threshold: f64,
    /// Pairs with neighbor similarity strictly below this are declared.
    pub similarity_threshold: f64,
    pub audit_window: f64,
    pub warmup: f64,
    /// History span for the dynamic variant.
    pub sliding_window: f64,
}

impl Default for DetectorParams {
    fn default() -> Self {
        Self::for_variant(ZVariant::Standard)
    }
}

impl DetectorParams {
    /// Defaults for a variant: threshold 3.5 for the MAD-based score, 2.5
    /// otherwise.
    pub fn for_variant(z_variant: ZVariant) -> Self {
        Self {
            z_variant,
            z_threshold: if z_variant == ZVariant::Modified { 3.5 } else { 2.5 },
            similarity_threshold: 0.1,
            audit_window: 600.0,
            warmup: 1800.0,
            sliding_window: 3600.0,
        }
    }

    /// Times of the detector runs over a run of `duration` seconds.
    pub fn run_times(&self, duration: f64) -> Vec<f64> {
        let mut out = Vec::new();
        let mut k = 0u64;
        loop {
            let t = self.warmup.max(self.audit_window) + k as f64 * self.audit_window;
            if t > duration {
                break;
            }
            out.push(t);
            k += 1;
        }
        out
    }
}

/// Per-node relay-count scores under `params.z_variant`, or `None` when the
/// distribution is degenerate.
///
/// `history` feeds the dynamic variant: earlier `(time, relay count)`
/// samples, one per node per past window. `partition` feeds the local
/// variant; without one it behaves like the standard score.
pub fn relay_scores(
    ledger: &AuditLedger,
    params: &DetectorParams,
    history: &[(f64, f64)],
    partition: Option<&BTreeMap<NodeId, u32>>,
) -> Option<BTreeMap<NodeId, f64>> {
    let nodes: Vec<NodeId> = ledger.nodes().collect();
    let counts: Vec<f64> = nodes.iter().map(|n| ledger.relay_count[n] as f64).collect();
    match params.z_variant {
        ZVariant::Standard => {
            let s = stats::zscore(&counts);
            (!s.degenerate).then(|| nodes.into_iter().zip(s.values).collect())
        }
        ZVariant::Modified => {
            let s = stats::modified_zscore(&counts);
            (!s.degenerate).then(|| nodes.into_iter().zip(s.values).collect())
        }
        ZVariant::Local => {
            let values: BTreeMap<NodeId, f64> = nodes.iter().copied().zip(counts).collect();
            let single = BTreeMap::new();
            let local = stats::local_zscore(&values, partition.unwrap_or(&single));
            (local.degenerate_groups.len() < local.scores.len().max(1)).then_some(local.scores)
        }
        ZVariant::Dynamic => {
            let now = ledger.window.1;
            let mut stream: Vec<(f64, f64)> = history
                .iter()
                .copied()
                .filter(|(t, _)| *t > now - params.sliding_window && *t <= now)
                .collect();
            let first_current = stream.len();
            stream.extend(counts.iter().map(|c| (now, *c)));
            let scored = stats::dynamic_zscore(&stream, params.sliding_window);
            let current = &scored[first_current..];
            if current.iter().all(|s| s.degenerate) {
                return None;
            }
            Some(nodes.into_iter().zip(current.iter().map(|s| s.score)).collect())
        }
    }
}

/// Nodes whose relay-count score exceeds `params.z_threshold`. A degenerate
/// distribution flags nobody.
pub fn flag_suspects(ledger: &AuditLedger, params: &DetectorParams) -> BTreeSet<NodeId> {
    flag_with(ledger, params, &[], None)
}

fn flag_with(
    ledger: &AuditLedger,
    params: &DetectorParams,
    history: &[(f64, f64)],
    partition: Option<&BTreeMap<NodeId, u32>>,
) -> BTreeSet<NodeId> {
    match relay_scores(ledger, params, history, partition) {
        Some(scores) => scores
            .into_iter()
            .filter(|(_, z)| *z > params.z_threshold)
            .map(|(n, _)| n)
            .collect(),
        None => BTreeSet::new(),
    }
}

/// Greedy maximum-mutual-traffic matching among suspects. Ties go to the
/// lexicographically smallest pair. Pairs with no traffic are never bound,
/// and neither are pairs ever seen in radio contact: their traffic is
/// explained by the radio link.
pub fn pair_suspects(suspects: &BTreeSet<NodeId>, ledger: &AuditLedger) -> BTreeSet<(NodeId, NodeId)> {
    let list: Vec<NodeId> = suspects.iter().copied().collect();
    let mut candidates = Vec::new();
    for (i, &a) in list.iter().enumerate() {
        for &b in &list[i + 1..] {
            let t = ledger.traffic(a, b);
            if t > 0 && !ledger.have_met(a, b) {
                candidates.push((t, a, b));
            }
        }
    }
    candidates.sort_by(|x, y| y.0.cmp(&x.0).then((x.1, x.2).cmp(&(y.1, y.2))));
    let mut matched = BTreeSet::new();
    let mut pairs = BTreeSet::new();
    for (_, a, b) in candidates {
        if !matched.contains(&a) && !matched.contains(&b) {
            matched.insert(a);
            matched.insert(b);
            pairs.insert((a, b));
        }
    }
    pairs
}

/// Jaccard similarity of the two neighbor sets after removing each node from
/// the other's set (the pair may list each other). Two empty sets count as
/// identical.
pub fn neighbor_similarity(na: &BTreeSet<NodeId>, nb: &BTreeSet<NodeId>, a: NodeId, b: NodeId) -> f64 {
    let x = na.iter().filter(|n| **n != b);
    let y: BTreeSet<&NodeId> = nb.iter().filter(|n| **n != a).collect();
    let mut inter = 0usize;
    let mut x_len = 0usize;
    for n in x {
        x_len += 1;
        if y.contains(n) {
            inter += 1;
        }
    }
    let union = x_len + y.len() - inter;
    if union == 0 {
        1.0
    } else {
        inter as f64 / union as f64
    }
}

/// Declares the pairs whose neighbor similarity is below the threshold and
/// scores them against `truth` as if this were the only detector run.
pub fn confirm_wormholes(
    pairs: &BTreeSet<(NodeId, NodeId)>,
    ledger: &AuditLedger,
    params: &DetectorParams,
    now: f64,
    truth: &GroundTruth,
) -> DetectionReport {
    let mut report = DetectionReport::empty(truth.true_pairs.len());
    for &(a, b) in pairs {
        report.suspects.insert(a);
        report.suspects.insert(b);
        let s = neighbor_similarity(&ledger.neighbors(a), &ledger.neighbors(b), a, b);
        if s < params.similarity_threshold {
            report.confirmed_pairs.entry((a, b)).or_insert(now);
        }
    }
    report.finish(truth, now);
    report
}

/// Runs the full detector over a trace.
pub fn detect(trace: &EventTrace, params: &DetectorParams) -> DetectionReport {
    let truth = GroundTruth::from_trace(trace);
    let Some(header) = trace.scenario() else {
        return DetectionReport::empty(truth.true_pairs.len());
    };
    let mut report = DetectionReport::empty(truth.true_pairs.len());
    let mut scanner = LedgerScanner::new(trace);
    let mut history: Vec<(f64, f64)> = Vec::new();
    for now in params.run_times(header.duration) {
        let ledger = scanner.ledger((now - params.audit_window, now));
        report.suspects.extend(flag_with(&ledger, params, &history, None));
        let pairs = pair_suspects(&report.suspects, &ledger);
        let round = confirm_wormholes(&pairs, &ledger, params, now, &truth);
        report.absorb(&round);
        report.finish(&truth, now);
        if params.z_variant == ZVariant::Dynamic {
            history.extend(ledger.relay_count.values().map(|c| (now, *c as f64)));
            history.retain(|(t, _)| *t > now - params.sliding_window);
        }
    }
    report
}
