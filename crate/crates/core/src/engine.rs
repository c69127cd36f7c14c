//! Time-ordered event engine.
//!
//! A run is single-threaded and deterministic: events are ordered by time,
//! then by kind (the declaration order of [`SimEventKind`]), then by
//! insertion sequence. Mobility and contact sampling happen on `Tick`s;
//! transfers complete at exact fractional times in between.

use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeMap, BTreeSet, BinaryHeap};

use crate::config::{ConfigError, Protocol, ScenarioConfig};
use crate::detector::{self, DetectionReport};
use crate::link::{transfer_duration, Buffer, ContactChange, ContactTable, Radio};
use crate::mobility::{self, Mover, Position};
use crate::rng::Rng;
use crate::routing::{self, Message, ProphetTable, ProphetView, SprayDecision};
use crate::trace::{EventTrace, ScenarioHeader, TraceEvent};
use crate::wormhole::{on_capture, Tunnel, WormholePair};
use crate::{MessageId, NodeClass, NodeId};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SimEventKind {
    Tick,
    MessageCreate,
    TransferComplete,
    ReportToTpa,
    DetectorRun,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Payload {
    None,
    Transfer(u64),
}

#[derive(Clone, Copy, Debug)]
pub struct SimEvent {
    pub time: f64,
    pub kind: SimEventKind,
    pub payload: Payload,
    seq: u64,
}

impl PartialEq for SimEvent {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for SimEvent {}

impl PartialOrd for SimEvent {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for SimEvent {
    fn cmp(&self, other: &Self) -> Ordering {
        self.time
            .total_cmp(&other.time)
            .then(self.kind.cmp(&other.kind))
            .then(self.seq.cmp(&other.seq))
    }
}

#[derive(Default)]
struct EventQueue {
    heap: BinaryHeap<Reverse<SimEvent>>,
    seq: u64,
}

impl EventQueue {
    fn push(&mut self, time: f64, kind: SimEventKind, payload: Payload) {
        self.seq += 1;
        self.heap.push(Reverse(SimEvent {
            time,
            kind,
            payload,
            seq: self.seq,
        }));
    }

    fn pop(&mut self) -> Option<SimEvent> {
        self.heap.pop().map(|Reverse(e)| e)
    }

    fn peek_time(&self) -> Option<f64> {
        self.heap.peek().map(|Reverse(e)| e.time)
    }
}

struct Node {
    class: NodeClass,
    radio: Radio,
    mover: Mover,
    rng: Rng,
    buffer: Buffer,
    /// Messages this node received as their final destination.
    delivered: BTreeSet<MessageId>,
    incoming: BTreeSet<MessageId>,
    outgoing: BTreeSet<MessageId>,
    prophet: ProphetTable,
}

#[derive(Clone, Copy, Debug, Default)]
struct LinkState {
    busy: Option<u64>,
    turn: bool,
}

#[derive(Clone, Copy, Debug)]
enum Route {
    Radio((NodeId, NodeId)),
    Tunnel(usize),
}

#[derive(Clone, Copy, Debug)]
struct Transfer {
    msg: MessageId,
    from: NodeId,
    to: NodeId,
    route: Route,
}

/// A simulation in progress. [`run_simulation`] drives one to completion;
/// the stepping API exists for interactive front ends.
pub struct Simulation {
    cfg: ScenarioConfig,
    now: f64,
    queue: EventQueue,
    nodes: Vec<Node>,
    contacts: ContactTable,
    links: BTreeMap<(NodeId, NodeId), LinkState>,
    transfers: BTreeMap<u64, Transfer>,
    next_transfer: u64,
    tunnels: Vec<Tunnel>,
    pair_of: Vec<Option<usize>>,
    next_msg: u32,
    rng: Rng,
    tick_index: u64,
    trace: EventTrace,
}

impl Simulation {
    pub fn new(cfg: ScenarioConfig) -> Result<Self, ConfigError> {
        cfg.validate()?;
        let mut rng = Rng::new(cfg.rng_seed);
        let movers = mobility::init_positions(&cfg, &mut rng);
        let mut nodes = Vec::with_capacity(movers.len());
        let mut pair_of = Vec::with_capacity(movers.len());
        for (id, mover) in movers {
            let legit = id.index() < cfg.num_legit_nodes;
            let class = if legit {
                NodeClass::Legit
            } else {
                NodeClass::Wormhole {
                    pair: ((id.index() - cfg.num_legit_nodes) / 2) as u32,
                }
            };
            let (range, capacity) = if legit {
                (cfg.legit_radio_range, cfg.legit_buffer)
            } else {
                (cfg.wormhole_radio_range, cfg.wormhole_buffer)
            };
            pair_of.push(class.pair().map(|p| p as usize));
            nodes.push(Node {
                class,
                radio: Radio { range, class },
                mover,
                rng: Rng::for_node(cfg.rng_seed, id),
                buffer: Buffer::new(capacity),
                delivered: BTreeSet::new(),
                incoming: BTreeSet::new(),
                outgoing: BTreeSet::new(),
                prophet: ProphetTable::default(),
            });
        }
        let tunnels = (0..cfg.num_wormhole_pairs)
            .map(|p| {
                let a = NodeId((cfg.num_legit_nodes + 2 * p) as u32);
                Tunnel::new(WormholePair::new(a, NodeId(a.0 + 1), cfg.wormhole_tunnel_bitrate))
            })
            .collect();

        let mut sim = Self {
            now: 0.0,
            queue: EventQueue::default(),
            nodes,
            contacts: ContactTable::new(),
            links: BTreeMap::new(),
            transfers: BTreeMap::new(),
            next_transfer: 0,
            tunnels,
            pair_of,
            next_msg: 0,
            rng,
            tick_index: 0,
            trace: EventTrace::new(),
            cfg,
        };
        sim.write_header();
        sim.schedule_initial();
        Ok(sim)
    }

    fn write_header(&mut self) {
        let cfg = &self.cfg;
        self.trace.push(
            0.0,
            TraceEvent::Scenario(ScenarioHeader {
                nodes: cfg.total_nodes() as u32,
                pairs: cfg.num_wormhole_pairs as u32,
                duration: cfg.sim_duration,
                protocol: cfg.routing_protocol,
                seed: cfg.rng_seed,
                attack_start: 0.0,
            }),
        );
        self.trace.push(0.0, TraceEvent::Detector(cfg.detector_params.clone()));
        for (i, n) in self.nodes.iter().enumerate() {
            self.trace.push(
                0.0,
                TraceEvent::Node {
                    id: NodeId(i as u32),
                    class: n.class,
                    buffer: n.buffer.capacity(),
                    range: n.radio.range,
                },
            );
        }
        self.log_positions();
    }

    fn log_positions(&mut self) {
        for (i, n) in self.nodes.iter().enumerate() {
            let p = n.mover.state.current;
            self.trace.push(
                self.now,
                TraceEvent::Pos {
                    node: NodeId(i as u32),
                    x: p.x,
                    y: p.y,
                },
            );
        }
    }

    fn schedule_initial(&mut self) {
        let dur = self.cfg.sim_duration;
        self.queue.push(0.0, SimEventKind::Tick, Payload::None);
        let (lo, hi) = self.cfg.message_interval_range;
        let first = self.rng.uniform(lo, hi);
        if first <= dur {
            self.queue.push(first, SimEventKind::MessageCreate, Payload::None);
        }
        let window = self.cfg.detector_params.audit_window;
        let mut k = 1u64;
        while k as f64 * window <= dur {
            self.queue.push(k as f64 * window, SimEventKind::ReportToTpa, Payload::None);
            k += 1;
        }
        for t in self.cfg.detector_params.run_times(dur) {
            self.queue.push(t, SimEventKind::DetectorRun, Payload::None);
        }
    }

    pub fn config(&self) -> &ScenarioConfig {
        &self.cfg
    }

    pub fn now(&self) -> f64 {
        self.now
    }

    pub fn trace(&self) -> &EventTrace {
        &self.trace
    }

    pub fn positions(&self) -> Vec<Position> {
        self.nodes.iter().map(|n| n.mover.state.current).collect()
    }

    pub fn classes(&self) -> Vec<NodeClass> {
        self.nodes.iter().map(|n| n.class).collect()
    }

    pub fn contacts(&self) -> &ContactTable {
        &self.contacts
    }

    pub fn buffer(&self, node: NodeId) -> &Buffer {
        &self.nodes[node.index()].buffer
    }

    pub fn is_finished(&self) -> bool {
        self.queue.peek_time().is_none_or(|t| t > self.cfg.sim_duration)
    }

    /// Processes every event with time `<= until` (capped at the duration).
    pub fn advance_to(&mut self, until: f64) {
        let limit = until.min(self.cfg.sim_duration);
        while let Some(t) = self.queue.peek_time() {
            if t > limit {
                break;
            }
            let ev = self.queue.pop().expect("peeked");
            debug_assert!(ev.time >= self.now, "event time went backwards");
            self.now = ev.time;
            self.handle(ev);
        }
    }

    /// Runs to the end and hands back the trace and the detector's report.
    pub fn finish(mut self) -> (EventTrace, DetectionReport) {
        self.advance_to(self.cfg.sim_duration);
        let report = detector::detect(&self.trace, &self.cfg.detector_params);
        (self.trace, report)
    }

    fn handle(&mut self, ev: SimEvent) {
        match ev.kind {
            SimEventKind::Tick => self.on_tick(),
            SimEventKind::MessageCreate => self.on_message_create(),
            SimEventKind::TransferComplete => {
                if let Payload::Transfer(id) = ev.payload {
                    self.on_transfer_complete(id);
                }
            }
            SimEventKind::ReportToTpa => {
                let w = self.cfg.detector_params.audit_window;
                self.trace.push(
                    self.now,
                    TraceEvent::TpaReport {
                        start: (self.now - w).max(0.0),
                        end: self.now,
                    },
                );
                self.log_positions();
            }
            SimEventKind::DetectorRun => self.trace.push(self.now, TraceEvent::DetectorRun),
        }
    }

    fn on_tick(&mut self) {
        let dt = self.cfg.tick;
        if self.tick_index > 0 {
            for n in &mut self.nodes {
                n.mover.state = mobility::step(&n.mover.state, &n.mover.profile, dt, &mut n.rng);
            }
        }
        let positions = self.positions();
        let radios: Vec<Radio> = self.nodes.iter().map(|n| n.radio).collect();
        let changes = self.contacts.detect(&positions, &radios, self.now, self.cfg.legit_bitrate);
        for change in changes {
            match change {
                ContactChange::Down(a, b) => self.link_down(a, b),
                ContactChange::Up(a, b) => self.link_up(a, b),
            }
        }
        let idle: Vec<(NodeId, NodeId)> = self
            .links
            .iter()
            .filter(|(_, s)| s.busy.is_none())
            .map(|(k, _)| *k)
            .collect();
        for key in idle {
            self.try_start_radio(key);
        }
        for p in 0..self.tunnels.len() {
            self.try_start_tunnel(p);
        }

        self.tick_index += 1;
        let next = self.tick_index as f64 * dt;
        if next <= self.cfg.sim_duration {
            self.queue.push(next, SimEventKind::Tick, Payload::None);
        }
    }

    fn link_down(&mut self, a: NodeId, b: NodeId) {
        if let Some(state) = self.links.remove(&(a, b)) {
            if let Some(id) = state.busy {
                if let Some(t) = self.transfers.remove(&id) {
                    self.nodes[t.to.index()].incoming.remove(&t.msg);
                    self.nodes[t.from.index()].outgoing.remove(&t.msg);
                    self.trace.push(
                        self.now,
                        TraceEvent::XferAbort {
                            msg: t.msg,
                            from: t.from,
                            to: t.to,
                        },
                    );
                }
            }
        }
        self.trace.push(self.now, TraceEvent::ContactDown { a, b });
    }

    fn link_up(&mut self, a: NodeId, b: NodeId) {
        self.trace.push(self.now, TraceEvent::ContactUp { a, b });
        self.links.insert((a, b), LinkState::default());
        if self.cfg.routing_protocol == Protocol::Prophet {
            self.prophet_encounter(a, b);
        }
    }

    fn prophet_encounter(&mut self, a: NodeId, b: NodeId) {
        let params = &self.cfg.routing;
        let now = self.now;
        let population = self.nodes.len() as u32;
        let mut ta = self.nodes[a.index()].prophet.clone();
        let mut tb = self.nodes[b.index()].prophet.clone();
        ta.age(now, params);
        tb.age(now, params);
        ta.direct(b, params);
        tb.direct(a, params);
        let (va, vb) = (ta.clone(), tb.clone());
        ta.transitive(a, b, advertised(self.nodes[b.index()].class, &vb, population), params);
        tb.transitive(b, a, advertised(self.nodes[a.index()].class, &va, population), params);
        self.nodes[a.index()].prophet = ta;
        self.nodes[b.index()].prophet = tb;
    }

    /// Predictability `node` claims for `dst` when asked by a peer.
    fn advertised_p(&self, node: NodeId, dst: NodeId) -> f64 {
        let n = &self.nodes[node.index()];
        if n.class.is_legit() {
            n.prophet.get(dst)
        } else {
            1.0
        }
    }

    fn tunnel_pending(&self, node: NodeId, msg: MessageId) -> bool {
        self.pair_of[node.index()].is_some_and(|p| self.tunnels[p].is_pending(msg))
    }

    fn moves_custody(&self) -> bool {
        matches!(self.cfg.routing_protocol, Protocol::FirstContact | Protocol::SprayAndWait)
    }

    /// First message `from` should hand to `to` right now, deliverables first.
    fn pick(&self, from: NodeId, to: NodeId) -> Option<MessageId> {
        let s = &self.nodes[from.index()];
        let r = &self.nodes[to.index()];
        let usable = |m: &&Message| {
            !r.buffer.contains(m.id)
                && !r.incoming.contains(&m.id)
                && !r.delivered.contains(&m.id)
                && !(self.moves_custody() && s.outgoing.contains(&m.id))
                && !self.tunnel_pending(from, m.id)
        };
        if let Some(m) = s.buffer.iter().filter(|m| m.dst == to).find(usable) {
            return Some(m.id);
        }
        let allowed = |m: &Message| match self.cfg.routing_protocol {
            Protocol::Epidemic => true,
            Protocol::FirstContact => !m.visited(to),
            Protocol::SprayAndWait => matches!(routing::on_contact_spray_wait(m, to), SprayDecision::Split { .. }),
            Protocol::Prophet => routing::prophet_should_forward(s.prophet.get(m.dst), self.advertised_p(to, m.dst)),
        };
        s.buffer.iter().filter(usable).find(|m| allowed(m)).map(|m| m.id)
    }

    fn try_start_radio(&mut self, key: (NodeId, NodeId)) {
        let Some(state) = self.links.get(&key).copied() else { return };
        if state.busy.is_some() {
            return;
        }
        let (a, b) = key;
        let order = if state.turn { [(b, a), (a, b)] } else { [(a, b), (b, a)] };
        for (from, to) in order {
            if let Some(msg) = self.pick(from, to) {
                let size = self.nodes[from.index()].buffer.get(msg).expect("picked from buffer").size;
                let bitrate = self.contacts.get(a, b).map_or(self.cfg.legit_bitrate, |c| c.bitrate);
                let id = self.start_transfer(msg, from, to, Route::Radio(key), self.now + transfer_duration(size, bitrate));
                let link = self.links.get_mut(&key).expect("link present");
                link.busy = Some(id);
                link.turn = !state.turn;
                return;
            }
        }
    }

    fn start_transfer(&mut self, msg: MessageId, from: NodeId, to: NodeId, route: Route, done_at: f64) -> u64 {
        self.next_transfer += 1;
        let id = self.next_transfer;
        self.transfers.insert(id, Transfer { msg, from, to, route });
        self.nodes[to.index()].incoming.insert(msg);
        self.nodes[from.index()].outgoing.insert(msg);
        self.queue.push(done_at, SimEventKind::TransferComplete, Payload::Transfer(id));
        id
    }

    fn try_start_tunnel(&mut self, p: usize) {
        if self.tunnels[p].in_flight.is_some() {
            return;
        }
        while let Some((at_end, msg)) = self.tunnels[p].pop() {
            let pair = self.tunnels[p].pair;
            let far = pair.far_end(at_end).expect("tunnel endpoint");
            let Some(m) = self.nodes[at_end.index()].buffer.get(msg) else { continue };
            let fr = &self.nodes[far.index()];
            if fr.buffer.contains(msg) || fr.incoming.contains(&msg) {
                continue;
            }
            let replay = on_capture(&pair, m, at_end, self.now);
            self.start_transfer(msg, at_end, far, Route::Tunnel(p), replay.completes_at);
            self.tunnels[p].in_flight = Some(replay);
            return;
        }
    }

    fn on_message_create(&mut self) {
        let legit = self.cfg.num_legit_nodes;
        if legit >= 2 {
            let src = self.rng.index(legit);
            let mut dst = self.rng.index(legit - 1);
            if dst >= src {
                dst += 1;
            }
            let (smin, smax) = self.cfg.message_size_range;
            let size = self.rng.uniform(smin, smax);
            let id = MessageId(self.next_msg);
            self.next_msg += 1;
            let (src, dst) = (NodeId(src as u32), NodeId(dst as u32));
            let mut msg = Message::new(id, src, dst, size, self.now);
            let copies = (self.cfg.routing_protocol == Protocol::SprayAndWait).then_some(self.cfg.routing.spray_copies);
            if let Some(c) = copies {
                msg = msg.with_copies(c);
            }
            self.store(src, msg);
            self.trace.push(
                self.now,
                TraceEvent::MsgCreate {
                    msg: id,
                    src,
                    dst,
                    size,
                    copies,
                },
            );
        }
        let (lo, hi) = self.cfg.message_interval_range;
        let next = self.now + self.rng.uniform(lo, hi);
        if next <= self.cfg.sim_duration {
            self.queue.push(next, SimEventKind::MessageCreate, Payload::None);
        }
    }

    /// Puts a message into `node`'s buffer, logging evictions.
    fn store(&mut self, node: NodeId, msg: Message) {
        let evicted = self.nodes[node.index()]
            .buffer
            .enqueue(msg)
            .expect("config validation bounds message size by buffer capacity");
        for old in evicted {
            self.trace.push(self.now, TraceEvent::Drop { msg: old.id, node });
        }
    }

    fn on_transfer_complete(&mut self, id: u64) {
        let Some(t) = self.transfers.remove(&id) else { return };
        self.nodes[t.to.index()].incoming.remove(&t.msg);
        self.nodes[t.from.index()].outgoing.remove(&t.msg);
        match t.route {
            Route::Radio(key) => {
                if let Some(link) = self.links.get_mut(&key) {
                    link.busy = None;
                }
                self.complete_radio(t);
                self.try_start_radio(key);
            }
            Route::Tunnel(p) => {
                self.tunnels[p].in_flight = None;
                self.complete_tunnel(t);
                self.try_start_tunnel(p);
            }
        }
    }

    fn abort(&mut self, t: &Transfer) {
        self.trace.push(
            self.now,
            TraceEvent::XferAbort {
                msg: t.msg,
                from: t.from,
                to: t.to,
            },
        );
    }

    fn complete_radio(&mut self, t: Transfer) {
        let Some(msg) = self.nodes[t.from.index()].buffer.get(t.msg).cloned() else {
            self.abort(&t);
            return;
        };
        let r = &self.nodes[t.to.index()];
        if r.buffer.contains(t.msg) || r.delivered.contains(&t.msg) {
            self.abort(&t);
            return;
        }
        let delivery = msg.dst == t.to;
        // (copies handed over, sender keeps its copy, receiver's budget)
        let (given, sender_keeps, budget) = match self.cfg.routing_protocol {
            Protocol::Epidemic | Protocol::Prophet => (1, true, None),
            Protocol::FirstContact => (1, false, None),
            Protocol::SprayAndWait => match routing::on_contact_spray_wait(&msg, t.to) {
                SprayDecision::Deliver => (msg.copies_left.unwrap_or(1), false, msg.copies_left),
                SprayDecision::Split { give, keep } => {
                    if let Some(m) = self.nodes[t.from.index()].buffer.get_mut(t.msg) {
                        m.copies_left = Some(keep);
                    }
                    (give, true, Some(give))
                }
                SprayDecision::Hold => {
                    self.abort(&t);
                    return;
                }
            },
        };
        let copy = msg.forwarded_to(t.to, budget);
        let hops = copy.hops.clone();
        if delivery {
            self.trace.push(
                self.now,
                TraceEvent::XferDone {
                    msg: t.msg,
                    from: t.from,
                    to: t.to,
                    copies: given,
                    hops,
                },
            );
            self.trace.push(self.now, TraceEvent::Delivered { msg: t.msg, node: t.to });
            self.nodes[t.to.index()].delivered.insert(t.msg);
        } else {
            self.store(t.to, copy);
            self.trace.push(
                self.now,
                TraceEvent::XferDone {
                    msg: t.msg,
                    from: t.from,
                    to: t.to,
                    copies: given,
                    hops,
                },
            );
            let captured = !self.nodes[t.to.index()].class.is_legit() && self.nodes[t.from.index()].class.is_legit();
            if captured {
                if let Some(p) = self.pair_of[t.to.index()] {
                    self.tunnels[p].capture(t.to, t.msg);
                    self.try_start_tunnel(p);
                }
            }
        }
        if !sender_keeps {
            self.nodes[t.from.index()].buffer.remove(t.msg);
        }
    }

    fn complete_tunnel(&mut self, t: Transfer) {
        let Some(msg) = self.nodes[t.from.index()].buffer.get(t.msg).cloned() else { return };
        if self.nodes[t.to.index()].buffer.contains(t.msg) {
            return;
        }
        let (given, sender_keeps) = match self.cfg.routing_protocol {
            Protocol::Epidemic | Protocol::Prophet => (None, true),
            Protocol::FirstContact => (None, false),
            Protocol::SprayAndWait => {
                let c = msg.copies_left.unwrap_or(1);
                if c > 1 {
                    let give = c / 2;
                    if let Some(m) = self.nodes[t.from.index()].buffer.get_mut(t.msg) {
                        m.copies_left = Some(c - give);
                    }
                    (Some(give), true)
                } else {
                    (Some(c), false)
                }
            }
        };
        let copy = msg.forwarded_to(t.to, given);
        self.store(t.to, copy);
        self.trace.push(
            self.now,
            TraceEvent::TunnelXfer {
                msg: t.msg,
                from: t.from,
                to: t.to,
                copies: given.unwrap_or(1),
            },
        );
        if !sender_keeps {
            self.nodes[t.from.index()].buffer.remove(t.msg);
        }
    }
}

/// Wormholes claim certain delivery to everyone.
fn advertised(class: NodeClass, table: &ProphetTable, population: u32) -> ProphetView<'_> {
    if class.is_legit() {
        ProphetView::Table(table)
    } else {
        ProphetView::Saturated { population }
    }
}

/// Runs a scenario from t = 0 to its duration. A zero duration yields an
/// empty trace and an empty report.
pub fn run_simulation(config: &ScenarioConfig) -> Result<(EventTrace, DetectionReport), ConfigError> {
    if config.sim_duration == 0.0 {
        return Ok((EventTrace::new(), DetectionReport::empty(0)));
    }
    Ok(Simulation::new(config.clone())?.finish())
}
