//! Exposed-mode wormhole pairs.
//!
//! Each endpoint takes part in routing like any relay, accepts whatever it is
//! offered, and pushes every message it captures from a legit node through
//! the tunnel to its partner, which replays it to its own neighborhood. The
//! tunnel is a FIFO pipe at a fixed bitrate. A message crosses a given tunnel
//! at most once.

use std::collections::{BTreeSet, VecDeque};

use crate::link::transfer_duration;
use crate::routing::Message;
use crate::{MessageId, NodeId};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WormholePair {
    pub end_a: NodeId,
    pub end_b: NodeId,
    pub tunnel_bitrate: f64,
}

impl WormholePair {
    pub fn new(end_a: NodeId, end_b: NodeId, tunnel_bitrate: f64) -> Self {
        assert_ne!(end_a, end_b, "a wormhole needs two distinct endpoints");
        Self {
            end_a,
            end_b,
            tunnel_bitrate,
        }
    }

    pub fn far_end(&self, at: NodeId) -> Option<NodeId> {
        if at == self.end_a {
            Some(self.end_b)
        } else if at == self.end_b {
            Some(self.end_a)
        } else {
            None
        }
    }

    pub fn contains(&self, n: NodeId) -> bool {
        n == self.end_a || n == self.end_b
    }
}

/// A tunnel crossing in progress.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScheduledReplay {
    pub msg: MessageId,
    pub from: NodeId,
    pub far_end: NodeId,
    pub completes_at: f64,
}

/// Schedules the tunnel crossing of `msg`, captured at `at_end`, starting
/// `now`. Panics if `at_end` is not part of `pair`.
pub fn on_capture(pair: &WormholePair, msg: &Message, at_end: NodeId, now: f64) -> ScheduledReplay {
    let far_end = pair.far_end(at_end).expect("capturing node belongs to the pair");
    ScheduledReplay {
        msg: msg.id,
        from: at_end,
        far_end,
        completes_at: now + transfer_duration(msg.size, pair.tunnel_bitrate),
    }
}

/// Tunnel state for one pair: the capture queue, the crossing in flight, and
/// every message id that has already been shuttled.
#[derive(Clone, Debug)]
pub struct Tunnel {
    pub pair: WormholePair,
    queue: VecDeque<(NodeId, MessageId)>,
    pub in_flight: Option<ScheduledReplay>,
    shuttled: BTreeSet<MessageId>,
}

impl Tunnel {
    pub fn new(pair: WormholePair) -> Self {
        Self {
            pair,
            queue: VecDeque::new(),
            in_flight: None,
            shuttled: BTreeSet::new(),
        }
    }

    /// Queues a capture unless the message already crossed or is waiting.
    pub fn capture(&mut self, at_end: NodeId, msg: MessageId) -> bool {
        if self.shuttled.contains(&msg) || self.queue.iter().any(|(_, m)| *m == msg) {
            return false;
        }
        self.queue.push_back((at_end, msg));
        true
    }

    pub fn is_pending(&self, msg: MessageId) -> bool {
        self.queue.iter().any(|(_, m)| *m == msg) || self.in_flight.is_some_and(|r| r.msg == msg)
    }

    pub fn has_shuttled(&self, msg: MessageId) -> bool {
        self.shuttled.contains(&msg)
    }

    /// Next queued capture; the caller either starts it or discards it.
    pub fn pop(&mut self) -> Option<(NodeId, MessageId)> {
        let next = self.queue.pop_front()?;
        self.shuttled.insert(next.1);
        Some(next)
    }

    pub fn mark_shuttled(&mut self, msg: MessageId) {
        self.shuttled.insert(msg);
    }

    pub fn queued(&self) -> usize {
        self.queue.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_megabyte_crosses_in_a_tenth_of_a_second() {
        let pair = WormholePair::new(NodeId(48), NodeId(49), 10_000_000.0);
        let m = Message::new(MessageId(1), NodeId(0), NodeId(3), 1_000_000, 0.0);
        let r = on_capture(&pair, &m, NodeId(48), 5.0);
        assert_eq!(r.far_end, NodeId(49));
        assert!((r.completes_at - 5.1).abs() < 1e-12);
        assert_eq!(on_capture(&pair, &m, NodeId(49), 0.0).far_end, NodeId(48));
    }

    #[test]
    fn capture_is_once_per_message() {
        let pair = WormholePair::new(NodeId(48), NodeId(49), 10_000_000.0);
        let mut t = Tunnel::new(pair);
        assert!(t.capture(NodeId(48), MessageId(1)));
        assert!(!t.capture(NodeId(49), MessageId(1)));
        assert!(t.is_pending(MessageId(1)));
        assert_eq!(t.pop(), Some((NodeId(48), MessageId(1))));
        assert!(!t.capture(NodeId(48), MessageId(1)));
        assert!(t.has_shuttled(MessageId(1)));
        assert_eq!(t.pop(), None);
    }

    #[test]
    #[should_panic]
    fn degenerate_pair_rejected() {
        WormholePair::new(NodeId(1), NodeId(1), 1.0);
    }
}
