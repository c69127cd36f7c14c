//! Auditor-side aggregation of what legit nodes report.
//!
//! The auditor sees radio contacts and completed radio transfers, each of
//! which has at least one legit party to report it. Tunnel traffic has no
//! legit witness and is never read. A wormhole endpoint's neighborhood is
//! therefore whatever legit nodes say about it.

use std::collections::{BTreeMap, BTreeSet};

use crate::trace::{EventTrace, TraceEvent, TraceRecord};
use crate::{MessageId, NodeId};

#[derive(Clone, Debug, Default, PartialEq)]
pub struct AuditLedger {
    /// Half-open window `(start, end]`.
    pub window: (f64, f64),
    /// Completed radio transfers sent by each node.
    pub relay_count: BTreeMap<NodeId, u64>,
    /// Contacts that came up inside the window, per node.
    pub contact_count: BTreeMap<NodeId, u64>,
    /// `m` is in `observed_neighbors[n]` iff a contact `n`-`m` was up at some
    /// point in the window. Symmetric.
    pub observed_neighbors: BTreeMap<NodeId, BTreeSet<NodeId>>,
    /// Distinct messages whose reported hop trace has the two nodes adjacent.
    pub mutual_traffic: BTreeMap<(NodeId, NodeId), u64>,
    /// Pairs seen in radio contact at any time up to the window end.
    pub met: BTreeSet<(NodeId, NodeId)>,
}

impl AuditLedger {
    pub fn nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.relay_count.keys().copied()
    }

    pub fn neighbors(&self, n: NodeId) -> BTreeSet<NodeId> {
        self.observed_neighbors.get(&n).cloned().unwrap_or_default()
    }

    pub fn traffic(&self, a: NodeId, b: NodeId) -> u64 {
        self.mutual_traffic.get(&crate::link::ordered(a, b)).copied().unwrap_or(0)
    }

    pub fn have_met(&self, a: NodeId, b: NodeId) -> bool {
        self.met.contains(&crate::link::ordered(a, b))
    }

    pub fn is_empty(&self) -> bool {
        self.relay_count.values().all(|c| *c == 0) && self.observed_neighbors.is_empty()
    }
}

/// Builds the ledger for `window = (start, end]` from a full trace.
pub fn build_ledger(trace: &EventTrace, window: (f64, f64)) -> AuditLedger {
    LedgerScanner::new(trace).ledger(window)
}

/// Builds ledgers for a sequence of windows with non-decreasing start times
/// in one forward pass over the trace.
pub struct LedgerScanner<'a> {
    records: &'a [TraceRecord],
    population: Vec<NodeId>,
    cursor: usize,
    up: BTreeSet<(NodeId, NodeId)>,
    met: BTreeSet<(NodeId, NodeId)>,
}

impl<'a> LedgerScanner<'a> {
    pub fn new(trace: &'a EventTrace) -> Self {
        let mut population: Vec<NodeId> = trace.node_classes().into_keys().collect();
        // Traces without NODE headers: fall back to every id mentioned.
        if population.is_empty() {
            let mut seen = BTreeSet::new();
            for r in &trace.records {
                match &r.event {
                    TraceEvent::ContactUp { a, b } | TraceEvent::ContactDown { a, b } => {
                        seen.insert(*a);
                        seen.insert(*b);
                    }
                    TraceEvent::XferDone { from, to, .. } => {
                        seen.insert(*from);
                        seen.insert(*to);
                    }
                    _ => {}
                }
            }
            population = seen.into_iter().collect();
        }
        Self {
            records: &trace.records,
            population,
            cursor: 0,
            up: BTreeSet::new(),
            met: BTreeSet::new(),
        }
    }

    fn track(up: &mut BTreeSet<(NodeId, NodeId)>, met: &mut BTreeSet<(NodeId, NodeId)>, ev: &TraceEvent) {
        match ev {
            TraceEvent::ContactUp { a, b } => {
                up.insert(crate::link::ordered(*a, *b));
                met.insert(crate::link::ordered(*a, *b));
            }
            TraceEvent::ContactDown { a, b } => {
                up.remove(&crate::link::ordered(*a, *b));
            }
            _ => {}
        }
    }

    pub fn ledger(&mut self, window: (f64, f64)) -> AuditLedger {
        let (start, end) = window;
        let mut ledger = AuditLedger {
            window,
            relay_count: self.population.iter().map(|n| (*n, 0)).collect(),
            contact_count: self.population.iter().map(|n| (*n, 0)).collect(),
            ..AuditLedger::default()
        };
        if !(end > start) {
            return ledger;
        }

        while self.cursor < self.records.len() && self.records[self.cursor].time <= start {
            Self::track(&mut self.up, &mut self.met, &self.records[self.cursor].event);
            self.cursor += 1;
        }

        let mut up = self.up.clone();
        let mut met = self.met.clone();
        let mut neighbor_pairs: BTreeSet<(NodeId, NodeId)> = up.clone();
        let mut adjacency: BTreeSet<(MessageId, NodeId, NodeId)> = BTreeSet::new();

        for rec in self.records[self.cursor..].iter().take_while(|r| r.time <= end) {
            match &rec.event {
                TraceEvent::ContactUp { a, b } => {
                    *ledger.contact_count.entry(*a).or_default() += 1;
                    *ledger.contact_count.entry(*b).or_default() += 1;
                    neighbor_pairs.insert(crate::link::ordered(*a, *b));
                }
                TraceEvent::XferDone { msg, from, hops, .. } => {
                    *ledger.relay_count.entry(*from).or_default() += 1;
                    for w in hops.windows(2) {
                        if w[0] != w[1] {
                            let (u, v) = crate::link::ordered(w[0], w[1]);
                            adjacency.insert((*msg, u, v));
                        }
                    }
                }
                _ => {}
            }
            Self::track(&mut up, &mut met, &rec.event);
        }
        ledger.met = met;

        for (a, b) in neighbor_pairs {
            ledger.observed_neighbors.entry(a).or_default().insert(b);
            ledger.observed_neighbors.entry(b).or_default().insert(a);
        }
        for (_, u, v) in adjacency {
            *ledger.mutual_traffic.entry((u, v)).or_default() += 1;
        }
        ledger
    }
}
