//! Replays a trace's buffer bookkeeping and checks protocol invariants.
//!
//! The replay mirrors the engine's copy semantics: every resident copy must
//! have been created at its node or handed to it by a completed transfer,
//! buffers stay within capacity, Spray-and-Wait never has more live copies
//! than its budget, and First Contact never has two custodians.

use std::collections::BTreeMap;
use std::fmt;

use crate::config::Protocol;
use crate::trace::{EventTrace, TraceEvent};
use crate::{MessageId, NodeId};

#[derive(Clone, Debug, PartialEq)]
pub struct Violation {
    /// Index of the offending record.
    pub record: usize,
    pub time: f64,
    pub reason: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "record {} (t={}): {}", self.record, self.time, self.reason)
    }
}

impl std::error::Error for Violation {}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct CheckSummary {
    pub messages: usize,
    /// Largest number of live copies any message reached (sum of budgets for
    /// Spray-and-Wait, number of holders otherwise).
    pub max_live_copies: u32,
    pub max_holders: usize,
    /// Largest buffer fill as a fraction of capacity.
    pub peak_occupancy: f64,
}

#[derive(Clone, Copy)]
struct Info {
    size: u64,
    dst: NodeId,
    budget: u32,
}

#[derive(Default)]
struct Live {
    holders: usize,
    copies: u32,
}

struct Replay {
    protocol: Protocol,
    capacity: Vec<u64>,
    used: Vec<u64>,
    held: Vec<BTreeMap<MessageId, u32>>,
    info: BTreeMap<MessageId, Info>,
    live: BTreeMap<MessageId, Live>,
    summary: CheckSummary,
}

impl Replay {
    fn info(&self, msg: MessageId) -> Result<Info, String> {
        self.info.get(&msg).copied().ok_or_else(|| format!("{msg} was never created"))
    }

    fn slot(&self, node: NodeId) -> Result<usize, String> {
        let i = node.index();
        if i < self.capacity.len() {
            Ok(i)
        } else {
            Err(format!("unknown node {node}"))
        }
    }

    fn add(&mut self, node: NodeId, msg: MessageId, copies: u32) -> Result<(), String> {
        let i = self.slot(node)?;
        let info = self.info(msg)?;
        if self.held[i].insert(msg, copies).is_some() {
            return Err(format!("{node} received {msg} twice"));
        }
        self.used[i] += info.size;
        if self.used[i] > self.capacity[i] {
            return Err(format!("{node} holds {} bytes, capacity {}", self.used[i], self.capacity[i]));
        }
        let occ = self.used[i] as f64 / self.capacity[i] as f64;
        self.summary.peak_occupancy = self.summary.peak_occupancy.max(occ);
        let live = self.live.entry(msg).or_default();
        live.holders += 1;
        live.copies += copies;
        self.summary.max_holders = self.summary.max_holders.max(live.holders);
        let measure = if self.protocol == Protocol::SprayAndWait {
            live.copies
        } else {
            live.holders as u32
        };
        self.summary.max_live_copies = self.summary.max_live_copies.max(measure);
        if self.protocol == Protocol::SprayAndWait && live.copies > info.budget {
            return Err(format!("{msg} has {} live copies, budget {}", live.copies, info.budget));
        }
        if self.protocol == Protocol::FirstContact && live.holders > 1 {
            return Err(format!("{msg} has {} custodians", live.holders));
        }
        Ok(())
    }

    /// Takes `copies` away from `node`'s copy, dropping it when none remain.
    fn take(&mut self, node: NodeId, msg: MessageId, copies: Option<u32>) -> Result<(), String> {
        let i = self.slot(node)?;
        let have = *self.held[i].get(&msg).ok_or_else(|| format!("{node} does not hold {msg}"))?;
        let left = match copies {
            None => 0,
            Some(c) if c <= have => have - c,
            Some(c) => return Err(format!("{node} gives {c} copies of {msg} but holds {have}")),
        };
        let size = self.info(msg)?.size;
        let live = self.live.get_mut(&msg).expect("held messages are live");
        live.copies -= have - left;
        if left == 0 {
            self.held[i].remove(&msg);
            self.used[i] -= size;
            live.holders -= 1;
        } else {
            self.held[i].insert(msg, left);
        }
        Ok(())
    }

    fn holds(&self, node: NodeId, msg: MessageId) -> Result<bool, String> {
        Ok(self.held[self.slot(node)?].contains_key(&msg))
    }

    fn apply(&mut self, ev: &TraceEvent) -> Result<(), String> {
        match ev {
            TraceEvent::Node { id, buffer, .. } => {
                let i = id.index();
                if i >= self.capacity.len() {
                    self.capacity.resize(i + 1, 0);
                    self.used.resize(i + 1, 0);
                    self.held.resize_with(i + 1, BTreeMap::new);
                }
                self.capacity[i] = *buffer;
            }
            TraceEvent::MsgCreate {
                msg,
                src,
                dst,
                size,
                copies,
            } => {
                if self.info.contains_key(msg) {
                    return Err(format!("{msg} created twice"));
                }
                let budget = copies.unwrap_or(1);
                self.info.insert(
                    *msg,
                    Info {
                        size: *size,
                        dst: *dst,
                        budget,
                    },
                );
                self.summary.messages += 1;
                self.add(*src, *msg, budget)?;
            }
            TraceEvent::Drop { msg, node } => self.take(*node, *msg, None)?,
            TraceEvent::XferDone {
                msg, from, to, copies, ..
            } => {
                if !self.holds(*from, *msg)? {
                    return Err(format!("{from} sent {msg} without holding it"));
                }
                let delivery = self.info(*msg)?.dst == *to;
                match self.protocol {
                    Protocol::Epidemic | Protocol::Prophet => {
                        if !delivery {
                            self.add(*to, *msg, 1)?;
                        }
                    }
                    Protocol::FirstContact => {
                        self.take(*from, *msg, None)?;
                        if !delivery {
                            self.add(*to, *msg, 1)?;
                        }
                    }
                    Protocol::SprayAndWait => {
                        self.take(*from, *msg, Some(*copies))?;
                        if !delivery {
                            self.add(*to, *msg, *copies)?;
                        }
                    }
                }
            }
            TraceEvent::TunnelXfer { msg, from, to, copies } => {
                if !self.holds(*from, *msg)? {
                    return Err(format!("{from} tunnelled {msg} without holding it"));
                }
                match self.protocol {
                    Protocol::Epidemic | Protocol::Prophet => self.add(*to, *msg, 1)?,
                    Protocol::FirstContact => {
                        self.take(*from, *msg, None)?;
                        self.add(*to, *msg, 1)?;
                    }
                    Protocol::SprayAndWait => {
                        self.take(*from, *msg, Some(*copies))?;
                        self.add(*to, *msg, *copies)?;
                    }
                }
            }
            _ => {}
        }
        Ok(())
    }
}

/// Replays `trace` and returns the first invariant violation, if any.
pub fn check_trace(trace: &EventTrace) -> Result<CheckSummary, Violation> {
    let protocol = trace.scenario().map_or(Protocol::Epidemic, |h| h.protocol);
    let mut replay = Replay {
        protocol,
        capacity: Vec::new(),
        used: Vec::new(),
        held: Vec::new(),
        info: BTreeMap::new(),
        live: BTreeMap::new(),
        summary: CheckSummary::default(),
    };
    for (i, rec) in trace.records.iter().enumerate() {
        replay.apply(&rec.event).map_err(|reason| Violation {
            record: i,
            time: rec.time,
            reason,
        })?;
    }
    Ok(replay.summary)
}
