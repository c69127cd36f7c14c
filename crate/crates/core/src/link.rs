//! Radio contacts, node buffers and transfer timing.

use std::collections::{BTreeMap, VecDeque};

use thiserror::Error;

use crate::mobility::Position;
use crate::routing::Message;
use crate::{MessageId, NodeClass, NodeId};

/// Radio capabilities of one node.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Radio {
    pub range: f64,
    pub class: NodeClass,
}

/// Maximum distance at which `a` and `b` hear each other, or `None` if they
/// never form a radio contact.
///
/// Legit pairs need both radios to reach (`min` of the ranges). A wormhole
/// endpoint captures any legit node inside its own, larger range. Wormhole
/// endpoints do not form radio contacts with one another; a pair talks only
/// over its tunnel.
pub fn contact_range(a: &Radio, b: &Radio) -> Option<f64> {
    match (a.class.is_legit(), b.class.is_legit()) {
        (true, true) => Some(a.range.min(b.range)),
        (false, false) => None,
        _ => Some(a.range.max(b.range)),
    }
}

pub fn in_range(pa: &Position, ra: &Radio, pb: &Position, rb: &Radio) -> bool {
    contact_range(ra, rb).is_some_and(|r| pa.distance_sq(pb) <= r * r)
}

/// Seconds needed to push `size` bytes at `bitrate` bytes/second.
pub fn transfer_duration(size: u64, bitrate: f64) -> f64 {
    size as f64 / bitrate
}

/// An undirected radio link; `a < b`.
#[derive(Clone, Debug, PartialEq)]
pub struct Contact {
    pub a: NodeId,
    pub b: NodeId,
    pub up_since: f64,
    pub bitrate: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ContactChange {
    Up(NodeId, NodeId),
    Down(NodeId, NodeId),
}

/// Currently-up radio contacts.
#[derive(Clone, Debug, Default)]
pub struct ContactTable {
    up: BTreeMap<(NodeId, NodeId), Contact>,
}

impl ContactTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Recomputes reachability and returns link-downs followed by link-ups,
    /// each in ascending pair order. `positions` and `radios` are indexed by
    /// node id.
    pub fn detect(&mut self, positions: &[Position], radios: &[Radio], now: f64, bitrate: f64) -> Vec<ContactChange> {
        let reachable = detect_contacts(positions, radios);
        let mut downs = Vec::new();
        let mut ups = Vec::new();
        let mut next = reachable.iter().peekable();
        let current: Vec<(NodeId, NodeId)> = self.up.keys().copied().collect();
        let mut cur = current.iter().peekable();
        loop {
            match (cur.peek(), next.peek()) {
                (Some(&&c), Some(&&n)) if c == n => {
                    cur.next();
                    next.next();
                }
                (Some(&&c), Some(&&n)) if c < n => {
                    downs.push(c);
                    cur.next();
                }
                (Some(_), Some(&&n)) => {
                    ups.push(n);
                    next.next();
                }
                (Some(&&c), None) => {
                    downs.push(c);
                    cur.next();
                }
                (None, Some(&&n)) => {
                    ups.push(n);
                    next.next();
                }
                (None, None) => break,
            }
        }
        let mut changes = Vec::with_capacity(downs.len() + ups.len());
        for (a, b) in downs {
            self.up.remove(&(a, b));
            changes.push(ContactChange::Down(a, b));
        }
        for (a, b) in ups {
            self.up.insert(
                (a, b),
                Contact {
                    a,
                    b,
                    up_since: now,
                    bitrate,
                },
            );
            changes.push(ContactChange::Up(a, b));
        }
        changes
    }

    pub fn get(&self, a: NodeId, b: NodeId) -> Option<&Contact> {
        self.up.get(&ordered(a, b))
    }

    pub fn is_up(&self, a: NodeId, b: NodeId) -> bool {
        self.up.contains_key(&ordered(a, b))
    }

    pub fn iter(&self) -> impl Iterator<Item = &Contact> {
        self.up.values()
    }

    pub fn len(&self) -> usize {
        self.up.len()
    }

    pub fn is_empty(&self) -> bool {
        self.up.is_empty()
    }
}

pub fn ordered(a: NodeId, b: NodeId) -> (NodeId, NodeId) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

/// All pairs `(i, j)`, `i < j`, currently within contact range, ascending.
pub fn detect_contacts(positions: &[Position], radios: &[Radio]) -> Vec<(NodeId, NodeId)> {
    let mut out = Vec::new();
    for i in 0..positions.len() {
        for j in (i + 1)..positions.len() {
            if in_range(&positions[i], &radios[i], &positions[j], &radios[j]) {
                out.push((NodeId(i as u32), NodeId(j as u32)));
            }
        }
    }
    out
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum BufferError {
    #[error("message of {size} bytes exceeds buffer capacity {capacity}")]
    TooLarge { size: u64, capacity: u64 },
}

/// FIFO message store. Residents are kept in order of receipt.
#[derive(Clone, Debug)]
pub struct Buffer {
    capacity: u64,
    used: u64,
    resident: VecDeque<Message>,
}

impl Buffer {
    pub fn new(capacity: u64) -> Self {
        Self {
            capacity,
            used: 0,
            resident: VecDeque::new(),
        }
    }

    pub fn capacity(&self) -> u64 {
        self.capacity
    }

    pub fn used(&self) -> u64 {
        self.used
    }

    pub fn len(&self) -> usize {
        self.resident.len()
    }

    pub fn is_empty(&self) -> bool {
        self.resident.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Message> {
        self.resident.iter()
    }

    pub fn contains(&self, id: MessageId) -> bool {
        self.resident.iter().any(|m| m.id == id)
    }

    pub fn get(&self, id: MessageId) -> Option<&Message> {
        self.resident.iter().find(|m| m.id == id)
    }

    pub fn get_mut(&mut self, id: MessageId) -> Option<&mut Message> {
        self.resident.iter_mut().find(|m| m.id == id)
    }

    pub fn remove(&mut self, id: MessageId) -> Option<Message> {
        let pos = self.resident.iter().position(|m| m.id == id)?;
        let m = self.resident.remove(pos)?;
        self.used -= m.size;
        Some(m)
    }

    /// Makes `msg` resident, evicting oldest-received messages until it fits.
    /// Returns the evicted messages in eviction order.
    pub fn enqueue(&mut self, msg: Message) -> Result<Vec<Message>, BufferError> {
        if msg.size > self.capacity {
            return Err(BufferError::TooLarge {
                size: msg.size,
                capacity: self.capacity,
            });
        }
        let mut evicted = Vec::new();
        while self.used + msg.size > self.capacity {
            let old = self.resident.pop_front().expect("non-empty while over capacity");
            self.used -= old.size;
            evicted.push(old);
        }
        self.used += msg.size;
        self.resident.push_back(msg);
        Ok(evicted)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const LEGIT: Radio = Radio {
        range: 10.0,
        class: NodeClass::Legit,
    };
    const WORM: Radio = Radio {
        range: 500.0,
        class: NodeClass::Wormhole { pair: 0 },
    };

    fn msg(id: u32, size: u64) -> Message {
        Message::new(MessageId(id), NodeId(0), NodeId(1), size, 0.0)
    }

    #[test]
    fn legit_radio_boundary() {
        let o = Position::new(0.0, 0.0);
        assert!(in_range(&o, &LEGIT, &Position::new(9.0, 0.0), &LEGIT));
        assert!(in_range(&o, &LEGIT, &Position::new(10.0, 0.0), &LEGIT));
        assert!(!in_range(&o, &LEGIT, &Position::new(11.0, 0.0), &LEGIT));
    }

    #[test]
    fn wormhole_captures_distant_legit() {
        let o = Position::new(0.0, 0.0);
        let far = Position::new(300.0, 0.0);
        assert!(in_range(&o, &LEGIT, &far, &WORM));
        assert!(in_range(&far, &WORM, &o, &LEGIT));
        assert!(!in_range(&o, &LEGIT, &Position::new(501.0, 0.0), &WORM));
        assert!(!in_range(&o, &WORM, &far, &WORM));
    }

    #[test]
    fn detect_reports_changes_symmetrically() {
        let radios = [LEGIT, LEGIT, LEGIT];
        let mut table = ContactTable::new();
        let pos = [Position::new(0.0, 0.0), Position::new(5.0, 0.0), Position::new(100.0, 0.0)];
        let ch = table.detect(&pos, &radios, 0.0, 1.0);
        assert_eq!(ch, vec![ContactChange::Up(NodeId(0), NodeId(1))]);
        assert!(table.is_up(NodeId(1), NodeId(0)));
        assert!(table.detect(&pos, &radios, 1.0, 1.0).is_empty());
        let pos = [Position::new(0.0, 0.0), Position::new(50.0, 0.0), Position::new(55.0, 0.0)];
        let ch = table.detect(&pos, &radios, 2.0, 1.0);
        assert_eq!(
            ch,
            vec![ContactChange::Down(NodeId(0), NodeId(1)), ContactChange::Up(NodeId(1), NodeId(2))]
        );
        assert_eq!(table.get(NodeId(2), NodeId(1)).unwrap().up_since, 2.0);
    }

    #[test]
    fn transfer_times() {
        assert_eq!(transfer_duration(500_000, 250_000.0), 2.0);
        assert_eq!(transfer_duration(1_000_000, 10_000_000.0), 0.1);
    }

    #[test]
    fn enqueue_fits() {
        let mut b = Buffer::new(5_000_000);
        assert!(b.enqueue(msg(1, 1_000_000)).unwrap().is_empty());
        assert!(b.contains(MessageId(1)));
        assert_eq!(b.used(), 1_000_000);
    }

    #[test]
    fn enqueue_evicts_oldest_first() {
        // 3 MB buffer holding 1 MB + 1 MB + 1 MB; a 1.5 MB arrival needs 1.5 MB
        // freed, so the two oldest go, in receipt order.
        let mut b = Buffer::new(3_000_000);
        for i in 1..=3 {
            b.enqueue(msg(i, 1_000_000)).unwrap();
        }
        let evicted = b.enqueue(msg(4, 1_500_000)).unwrap();
        let ids: Vec<u32> = evicted.iter().map(|m| m.id.0).collect();
        assert_eq!(ids, [1, 2]);
        let left: Vec<u32> = b.iter().map(|m| m.id.0).collect();
        assert_eq!(left, [3, 4]);
        assert_eq!(b.used(), 2_500_000);
    }

    #[test]
    fn oversize_rejected() {
        let mut b = Buffer::new(5_000_000);
        b.enqueue(msg(1, 1_000_000)).unwrap();
        assert_eq!(
            b.enqueue(msg(2, 6_000_000)),
            Err(BufferError::TooLarge {
                size: 6_000_000,
                capacity: 5_000_000
            })
        );
        assert_eq!(b.len(), 1);
    }

    #[test]
    fn remove_releases_space() {
        let mut b = Buffer::new(2_000_000);
        b.enqueue(msg(1, 1_000_000)).unwrap();
        b.enqueue(msg(2, 1_000_000)).unwrap();
        assert_eq!(b.remove(MessageId(1)).unwrap().id, MessageId(1));
        assert_eq!(b.used(), 1_000_000);
        assert!(b.remove(MessageId(1)).is_none());
    }
}
