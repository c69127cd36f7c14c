//! Opportunistic-network simulator with an exposed-mode wormhole attack and a
//! third-party-auditor detector built on Z-Score outlier analysis plus
//! neighbor-table comparison.
//!
//! A run is a pure function of its [`ScenarioConfig`]: the engine in
//! [`engine`] drives [`mobility`], [`link`], [`routing`] and [`wormhole`],
//! emitting an [`EventTrace`]. The [`detector`] only ever reads that trace.

pub mod check;
pub mod config;
pub mod detector;
pub mod engine;
pub mod link;
pub mod mobility;
pub mod rng;
pub mod routing;
pub mod trace;
pub mod wormhole;

mod ids;

pub use config::{load_config, ConfigError, Protocol, RoutingParams, ScenarioConfig, SpeedRange};
pub use detector::{DetectionReport, DetectorParams, ZVariant};
pub use engine::{run_simulation, SimEvent, SimEventKind, Simulation};
pub use ids::{MessageId, NodeClass, NodeId};
pub use trace::{EventTrace, TraceError, TraceRecord};
