//! Forwarding decisions for the four DTN routers.
//!
//! Everything here is a pure function over node-local state. The engine asks
//! these functions which message to hand over when a contact is idle and
//! applies the answer.

use std::collections::{BTreeMap, BTreeSet};

use crate::config::RoutingParams;
use crate::link::Buffer;
use crate::{MessageId, NodeId};

/// A bundle. Each node holds its own copy with its own hop trace and, under
/// Spray-and-Wait, its own share of the copy budget.
#[derive(Clone, Debug, PartialEq)]
pub struct Message {
    pub id: MessageId,
    pub src: NodeId,
    pub dst: NodeId,
    pub size: u64,
    pub created_at: f64,
    /// Remaining copy budget; only used by Spray-and-Wait.
    pub copies_left: Option<u32>,
    /// Nodes this copy visited, starting with `src`.
    pub hops: Vec<NodeId>,
}

impl Message {
    pub fn new(id: MessageId, src: NodeId, dst: NodeId, size: u64, created_at: f64) -> Self {
        Self {
            id,
            src,
            dst,
            size,
            created_at,
            copies_left: None,
            hops: vec![src],
        }
    }

    pub fn with_copies(mut self, copies: u32) -> Self {
        self.copies_left = Some(copies);
        self
    }

    /// The copy that lands at `to`.
    pub fn forwarded_to(&self, to: NodeId, copies: Option<u32>) -> Message {
        let mut m = self.clone();
        m.hops.push(to);
        m.copies_left = copies;
        m
    }

    pub fn visited(&self, node: NodeId) -> bool {
        self.hops.contains(&node)
    }
}

/// Anti-entropy: everything the peer does not already have. Local copies
/// are kept.
pub fn on_contact_epidemic<'a>(self_buf: &'a Buffer, peer_summary: &BTreeSet<MessageId>) -> Vec<&'a Message> {
    self_buf
        .iter()
        .filter(|m| !peer_summary.contains(&m.id))
        .collect()
}

/// Single-copy forwarding: every message goes to the first contact it has
/// not already visited, and the sender then drops it.
pub fn on_contact_first_contact(self_buf: &Buffer, peer: NodeId) -> Vec<&Message> {
    self_buf.iter().filter(|m| !m.visited(peer)).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SprayDecision {
    /// Hand `give` copies to the peer and keep `keep`.
    Split { give: u32, keep: u32 },
    /// Peer is the destination; the whole remaining budget goes with it.
    Deliver,
    /// Wait phase: only the destination may receive the last copy.
    Hold,
}

/// Binary Spray-and-Wait.
pub fn on_contact_spray_wait(msg: &Message, peer: NodeId) -> SprayDecision {
    if peer == msg.dst {
        return SprayDecision::Deliver;
    }
    match msg.copies_left.unwrap_or(1) {
        n if n > 1 => SprayDecision::Split {
            give: n / 2,
            keep: n - n / 2,
        },
        _ => SprayDecision::Hold,
    }
}

/// Delivery predictabilities of one node.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ProphetTable {
    p: BTreeMap<NodeId, f64>,
    pub last_aged: f64,
}

/// What a node's table looks like to a peer. Wormhole endpoints advertise
/// certainty for every destination.
#[derive(Clone, Copy, Debug)]
pub enum ProphetView<'a> {
    Table(&'a ProphetTable),
    Saturated { population: u32 },
}

impl ProphetView<'_> {
    pub fn get(&self, node: NodeId) -> f64 {
        match self {
            ProphetView::Table(t) => t.get(node),
            ProphetView::Saturated { .. } => 1.0,
        }
    }

    fn entries(&self) -> Vec<(NodeId, f64)> {
        match self {
            ProphetView::Table(t) => t.p.iter().map(|(k, v)| (*k, *v)).collect(),
            ProphetView::Saturated { population } => (0..*population).map(|i| (NodeId(i), 1.0)).collect(),
        }
    }
}

impl ProphetTable {
    pub fn get(&self, node: NodeId) -> f64 {
        self.p.get(&node).copied().unwrap_or(0.0)
    }

    pub fn entries(&self) -> impl Iterator<Item = (NodeId, f64)> + '_ {
        self.p.iter().map(|(k, v)| (*k, *v))
    }

    /// Multiplies every entry by `gamma^(elapsed / aging_unit)`.
    pub fn age(&mut self, now: f64, params: &RoutingParams) {
        let elapsed = now - self.last_aged;
        if elapsed > 0.0 {
            let factor = params.prophet_gamma.powf(elapsed / params.prophet_aging_unit);
            for v in self.p.values_mut() {
                *v = (*v * factor).clamp(0.0, 1.0);
            }
            self.last_aged = now;
        }
    }

    pub fn direct(&mut self, peer: NodeId, params: &RoutingParams) {
        let old = self.get(peer);
        let new = old + (1.0 - old) * params.prophet_p_init;
        self.p.insert(peer, new.clamp(0.0, 1.0));
    }

    pub fn transitive(&mut self, me: NodeId, peer: NodeId, peer_view: ProphetView<'_>, params: &RoutingParams) {
        let via = self.get(peer);
        for (c, pc) in peer_view.entries() {
            if c == me || c == peer {
                continue;
            }
            let cand = (via * pc * params.prophet_beta).clamp(0.0, 1.0);
            let slot = self.p.entry(c).or_insert(0.0);
            if cand > *slot {
                *slot = cand;
            }
        }
    }
}

/// Aging, then the direct encounter update, then transitivity through the
/// peer's table.
pub fn prophet_update(
    self_table: &ProphetTable,
    me: NodeId,
    peer: NodeId,
    peer_table: ProphetView<'_>,
    now: f64,
    params: &RoutingParams,
) -> ProphetTable {
    let mut t = self_table.clone();
    t.age(now, params);
    t.direct(peer, params);
    t.transitive(me, peer, peer_table, params);
    t
}

/// PRoPHET forwarding rule for a message bound to `dst`.
pub fn prophet_should_forward(self_p: f64, peer_p: f64) -> bool {
    peer_p > self_p
}
