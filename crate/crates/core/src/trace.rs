//! Line-oriented event trace.
//!
//! Each record is one line: `time KIND key=value ...`. Times and coordinates
//! are printed in shortest round-trip form, so a parsed trace is identical to
//! the one that was written. Field sets per kind:
//!
//! | kind           | fields                                                            |
//! |----------------|-------------------------------------------------------------------|
//! | `SCENARIO`     | `nodes pairs duration protocol seed attack_start`                 |
//! | `DETECTOR`     | `variant z similarity window warmup sliding`                      |
//! | `NODE`         | `id class` (`legit` or `wormhole`) `pair` (wormholes) `buffer range` |
//! | `POS`          | `node x y`                                                        |
//! | `CONTACT_UP`   | `a b`                                                             |
//! | `CONTACT_DOWN` | `a b`                                                             |
//! | `MSG_CREATE`   | `msg src dst size` `copies` (Spray-and-Wait)                      |
//! | `XFER_DONE`    | `msg from to copies hops` (hops comma separated, ends with `to`)  |
//! | `XFER_ABORT`   | `msg from to`                                                     |
//! | `DELIVERED`    | `msg node`                                                        |
//! | `DROP`         | `msg node`                                                        |
//! | `TUNNEL_XFER`  | `msg from to copies`                                              |
//! | `TPA_REPORT`   | `start end`                                                       |
//! | `DETECTOR_RUN` | (none)                                                            |
//!
//! `TUNNEL_XFER` records are ground truth for verification; the auditor
//! never reads them.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::str::FromStr;

use thiserror::Error;

use crate::config::Protocol;
use crate::detector::{DetectorParams, ZVariant};
use crate::{MessageId, NodeClass, NodeId};

#[derive(Debug, Error, PartialEq)]
#[error("trace line {line}: {reason}")]
pub struct TraceError {
    pub line: usize,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioHeader {
    pub nodes: u32,
    pub pairs: u32,
    pub duration: f64,
    pub protocol: Protocol,
    pub seed: u64,
    pub attack_start: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum TraceEvent {
    Scenario(ScenarioHeader),
    Detector(DetectorParams),
    Node { id: NodeId, class: NodeClass, buffer: u64, range: f64 },
    Pos { node: NodeId, x: f64, y: f64 },
    ContactUp { a: NodeId, b: NodeId },
    ContactDown { a: NodeId, b: NodeId },
    MsgCreate { msg: MessageId, src: NodeId, dst: NodeId, size: u64, copies: Option<u32> },
    XferDone { msg: MessageId, from: NodeId, to: NodeId, copies: u32, hops: Vec<NodeId> },
    XferAbort { msg: MessageId, from: NodeId, to: NodeId },
    Delivered { msg: MessageId, node: NodeId },
    Drop { msg: MessageId, node: NodeId },
    TunnelXfer { msg: MessageId, from: NodeId, to: NodeId, copies: u32 },
    TpaReport { start: f64, end: f64 },
    DetectorRun,
}

impl TraceEvent {
    pub fn kind(&self) -> &'static str {
        match self {
            TraceEvent::Scenario(_) => "SCENARIO",
            TraceEvent::Detector(_) => "DETECTOR",
            TraceEvent::Node { .. } => "NODE",
            TraceEvent::Pos { .. } => "POS",
            TraceEvent::ContactUp { .. } => "CONTACT_UP",
            TraceEvent::ContactDown { .. } => "CONTACT_DOWN",
            TraceEvent::MsgCreate { .. } => "MSG_CREATE",
            TraceEvent::XferDone { .. } => "XFER_DONE",
            TraceEvent::XferAbort { .. } => "XFER_ABORT",
            TraceEvent::Delivered { .. } => "DELIVERED",
            TraceEvent::Drop { .. } => "DROP",
            TraceEvent::TunnelXfer { .. } => "TUNNEL_XFER",
            TraceEvent::TpaReport { .. } => "TPA_REPORT",
            TraceEvent::DetectorRun => "DETECTOR_RUN",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TraceRecord {
    pub time: f64,
    pub event: TraceEvent,
}

impl fmt::Display for TraceRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.time, self.event.kind())?;
        match &self.event {
            TraceEvent::Scenario(h) => write!(
                f,
                " nodes={} pairs={} duration={} protocol={} seed={} attack_start={}",
                h.nodes, h.pairs, h.duration, h.protocol, h.seed, h.attack_start
            ),
            TraceEvent::Detector(p) => write!(
                f,
                " variant={} z={} similarity={} window={} warmup={} sliding={}",
                p.z_variant, p.z_threshold, p.similarity_threshold, p.audit_window, p.warmup, p.sliding_window
            ),
            TraceEvent::Node { id, class, buffer, range } => match class {
                NodeClass::Legit => write!(f, " id={id} class=legit buffer={buffer} range={range}"),
                NodeClass::Wormhole { pair } => {
                    write!(f, " id={id} class=wormhole pair={pair} buffer={buffer} range={range}")
                }
            },
            TraceEvent::Pos { node, x, y } => write!(f, " node={node} x={x} y={y}"),
            TraceEvent::ContactUp { a, b } | TraceEvent::ContactDown { a, b } => write!(f, " a={a} b={b}"),
            TraceEvent::MsgCreate {
                msg,
                src,
                dst,
                size,
                copies,
            } => {
                write!(f, " msg={msg} src={src} dst={dst} size={size}")?;
                match copies {
                    Some(c) => write!(f, " copies={c}"),
                    None => Ok(()),
                }
            }
            TraceEvent::XferDone {
                msg,
                from,
                to,
                copies,
                hops,
            } => {
                write!(f, " msg={msg} from={from} to={to} copies={copies} hops=")?;
                for (i, h) in hops.iter().enumerate() {
                    if i > 0 {
                        f.write_char(',')?;
                    }
                    write!(f, "{h}")?;
                }
                Ok(())
            }
            TraceEvent::XferAbort { msg, from, to } => write!(f, " msg={msg} from={from} to={to}"),
            TraceEvent::Delivered { msg, node } | TraceEvent::Drop { msg, node } => {
                write!(f, " msg={msg} node={node}")
            }
            TraceEvent::TunnelXfer { msg, from, to, copies } => {
                write!(f, " msg={msg} from={from} to={to} copies={copies}")
            }
            TraceEvent::TpaReport { start, end } => write!(f, " start={start} end={end}"),
            TraceEvent::DetectorRun => Ok(()),
        }
    }
}

struct Fields<'a> {
    line: usize,
    map: BTreeMap<&'a str, &'a str>,
}

impl<'a> Fields<'a> {
    fn err(&self, reason: impl Into<String>) -> TraceError {
        TraceError {
            line: self.line,
            reason: reason.into(),
        }
    }

    fn raw(&self, key: &str) -> Result<&'a str, TraceError> {
        self.map.get(key).copied().ok_or_else(|| self.err(format!("missing field `{key}`")))
    }

    fn get<T: FromStr>(&self, key: &str) -> Result<T, TraceError> {
        let raw = self.raw(key)?;
        raw.parse().map_err(|_| self.err(format!("bad value `{raw}` for `{key}`")))
    }

    fn opt<T: FromStr>(&self, key: &str) -> Result<Option<T>, TraceError> {
        if self.map.contains_key(key) {
            self.get(key).map(Some)
        } else {
            Ok(None)
        }
    }
}

impl TraceRecord {
    pub fn parse_line(line_no: usize, line: &str) -> Result<TraceRecord, TraceError> {
        let mut parts = line.split_whitespace();
        let err = |reason: String| TraceError { line: line_no, reason };
        let time_raw = parts.next().ok_or_else(|| err("empty record".into()))?;
        let time: f64 = time_raw.parse().map_err(|_| err(format!("bad time `{time_raw}`")))?;
        let kind = parts.next().ok_or_else(|| err("missing record kind".into()))?;
        let mut map = BTreeMap::new();
        for kv in parts {
            let (k, v) = kv.split_once('=').ok_or_else(|| err(format!("expected key=value, got `{kv}`")))?;
            map.insert(k, v);
        }
        let f = Fields { line: line_no, map };
        let event = match kind {
            "SCENARIO" => TraceEvent::Scenario(ScenarioHeader {
                nodes: f.get("nodes")?,
                pairs: f.get("pairs")?,
                duration: f.get("duration")?,
                protocol: f.raw("protocol")?.parse().map_err(|e: String| f.err(e))?,
                seed: f.get("seed")?,
                attack_start: f.get("attack_start")?,
            }),
            "DETECTOR" => {
                let variant: ZVariant = f.raw("variant")?.parse().map_err(|e: String| f.err(e))?;
                TraceEvent::Detector(DetectorParams {
                    z_variant: variant,
                    z_threshold: f.get("z")?,
                    similarity_threshold: f.get("similarity")?,
                    audit_window: f.get("window")?,
                    warmup: f.get("warmup")?,
                    sliding_window: f.get("sliding")?,
                })
            }
            "NODE" => {
                let class = match f.raw("class")? {
                    "legit" => NodeClass::Legit,
                    "wormhole" => NodeClass::Wormhole { pair: f.get("pair")? },
                    other => return Err(f.err(format!("unknown node class `{other}`"))),
                };
                TraceEvent::Node {
                    id: f.get("id")?,
                    class,
                    buffer: f.get("buffer")?,
                    range: f.get("range")?,
                }
            }
            "POS" => TraceEvent::Pos {
                node: f.get("node")?,
                x: f.get("x")?,
                y: f.get("y")?,
            },
            "CONTACT_UP" => TraceEvent::ContactUp {
                a: f.get("a")?,
                b: f.get("b")?,
            },
            "CONTACT_DOWN" => TraceEvent::ContactDown {
                a: f.get("a")?,
                b: f.get("b")?,
            },
            "MSG_CREATE" => TraceEvent::MsgCreate {
                msg: f.get("msg")?,
                src: f.get("src")?,
                dst: f.get("dst")?,
                size: f.get("size")?,
                copies: f.opt("copies")?,
            },
            "XFER_DONE" => {
                let hops_raw = f.raw("hops")?;
                let hops = hops_raw
                    .split(',')
                    .filter(|s| !s.is_empty())
                    .map(|s| s.parse().map_err(|_| f.err(format!("bad hop `{s}`"))))
                    .collect::<Result<Vec<NodeId>, _>>()?;
                TraceEvent::XferDone {
                    msg: f.get("msg")?,
                    from: f.get("from")?,
                    to: f.get("to")?,
                    copies: f.get("copies")?,
                    hops,
                }
            }
            "XFER_ABORT" => TraceEvent::XferAbort {
                msg: f.get("msg")?,
                from: f.get("from")?,
                to: f.get("to")?,
            },
            "DELIVERED" => TraceEvent::Delivered {
                msg: f.get("msg")?,
                node: f.get("node")?,
            },
            "DROP" => TraceEvent::Drop {
                msg: f.get("msg")?,
                node: f.get("node")?,
            },
            "TUNNEL_XFER" => TraceEvent::TunnelXfer {
                msg: f.get("msg")?,
                from: f.get("from")?,
                to: f.get("to")?,
                copies: f.get("copies")?,
            },
            "TPA_REPORT" => TraceEvent::TpaReport {
                start: f.get("start")?,
                end: f.get("end")?,
            },
            "DETECTOR_RUN" => TraceEvent::DetectorRun,
            other => return Err(f.err(format!("unknown record kind `{other}`"))),
        };
        Ok(TraceRecord { time, event })
    }
}

/// Chronological, append-only list of records from one run.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct EventTrace {
    pub records: Vec<TraceRecord>,
}

impl EventTrace {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, time: f64, event: TraceEvent) {
        debug_assert!(self.records.last().is_none_or(|r| r.time <= time), "trace must stay chronological");
        self.records.push(TraceRecord { time, event });
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &TraceRecord> {
        self.records.iter()
    }

    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity(self.records.len() * 48);
        for r in &self.records {
            writeln!(out, "{r}").expect("writing to a String cannot fail");
        }
        out
    }

    pub fn parse(text: &str) -> Result<EventTrace, TraceError> {
        let mut trace = EventTrace::new();
        for (i, line) in text.lines().enumerate() {
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let rec = TraceRecord::parse_line(i + 1, trimmed)?;
            if trace.records.last().is_some_and(|last| last.time > rec.time) {
                return Err(TraceError {
                    line: i + 1,
                    reason: format!("time {} goes backwards", rec.time),
                });
            }
            trace.records.push(rec);
        }
        Ok(trace)
    }

    pub fn scenario(&self) -> Option<&ScenarioHeader> {
        self.records.iter().find_map(|r| match &r.event {
            TraceEvent::Scenario(h) => Some(h),
            _ => None,
        })
    }

    pub fn detector_params(&self) -> Option<&DetectorParams> {
        self.records.iter().find_map(|r| match &r.event {
            TraceEvent::Detector(p) => Some(p),
            _ => None,
        })
    }

    /// Node roles from the `NODE` header records.
    pub fn node_classes(&self) -> BTreeMap<NodeId, NodeClass> {
        self.records
            .iter()
            .filter_map(|r| match &r.event {
                TraceEvent::Node { id, class, .. } => Some((*id, *class)),
                _ => None,
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> EventTrace {
        let mut t = EventTrace::new();
        t.push(
            0.0,
            TraceEvent::Scenario(ScenarioHeader {
                nodes: 3,
                pairs: 1,
                duration: 100.0,
                protocol: Protocol::SprayAndWait,
                seed: 4,
                attack_start: 0.0,
            }),
        );
        t.push(0.0, TraceEvent::Detector(DetectorParams::default()));
        t.push(
            0.0,
            TraceEvent::Node {
                id: NodeId(0),
                class: NodeClass::Legit,
                buffer: 5_000_000,
                range: 10.0,
            },
        );
        t.push(
            0.0,
            TraceEvent::Node {
                id: NodeId(1),
                class: NodeClass::Wormhole { pair: 0 },
                buffer: 50_000_000,
                range: 500.0,
            },
        );
        t.push(0.0, TraceEvent::Pos { node: NodeId(0), x: 0.1 + 0.2, y: 3399.999 });
        t.push(1.0, TraceEvent::ContactUp { a: NodeId(0), b: NodeId(1) });
        t.push(
            1.5,
            TraceEvent::MsgCreate {
                msg: MessageId(0),
                src: NodeId(0),
                dst: NodeId(2),
                size: 600_000,
                copies: Some(6),
            },
        );
        t.push(
            3.9000000000000004,
            TraceEvent::XferDone {
                msg: MessageId(0),
                from: NodeId(0),
                to: NodeId(1),
                copies: 3,
                hops: vec![NodeId(0), NodeId(1)],
            },
        );
        t.push(
            4.0,
            TraceEvent::TunnelXfer {
                msg: MessageId(0),
                from: NodeId(1),
                to: NodeId(2),
                copies: 1,
            },
        );
        t.push(5.0, TraceEvent::Drop { msg: MessageId(0), node: NodeId(2) });
        t.push(6.0, TraceEvent::ContactDown { a: NodeId(0), b: NodeId(1) });
        t.push(600.0, TraceEvent::TpaReport { start: 0.0, end: 600.0 });
        t.push(600.0, TraceEvent::DetectorRun);
        t
    }

    #[test]
    fn text_round_trip_is_exact() {
        let t = sample();
        let text = t.to_text();
        let back = EventTrace::parse(&text).unwrap();
        assert_eq!(back, t);
        assert_eq!(back.to_text(), text);
    }

    #[test]
    fn line_format() {
        let text = sample().to_text();
        assert!(text.contains("1 CONTACT_UP a=0 b=1\n"));
        assert!(text.contains("3.9000000000000004 XFER_DONE msg=M0 from=0 to=1 copies=3 hops=0,1\n"));
        assert!(text.contains("600 DETECTOR_RUN\n"));
    }

    #[test]
    fn header_accessors() {
        let t = sample();
        assert_eq!(t.scenario().unwrap().protocol, Protocol::SprayAndWait);
        assert_eq!(t.detector_params(), Some(&DetectorParams::default()));
        assert_eq!(t.node_classes()[&NodeId(1)], NodeClass::Wormhole { pair: 0 });
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let err = EventTrace::parse("0 CONTACT_UP a=0 b=1\n1 CONTACT_UP a=0\n").unwrap_err();
        assert_eq!(err.line, 2);
        let err = EventTrace::parse("5 DETECTOR_RUN\n4 DETECTOR_RUN\n").unwrap_err();
        assert_eq!(err.line, 2);
        assert!(EventTrace::parse("0 WHATEVER\n").is_err());
    }
}
