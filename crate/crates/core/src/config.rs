//! Scenario configuration.
//!
//! Configs are TOML documents written with dotted keys, one setting per line:
//!
//! ```toml
//! nodes.legit = 48
//! nodes.wormhole_pairs = 5
//! sim.duration = 43200
//! routing.protocol = "prophet"
//! detector.z_threshold = 2.5
//! ```
//!
//! Every key is optional; omitted keys take the reference scenario values
//! listed on [`ScenarioConfig::default`]. Unknown keys are a parse error.
//! The full key set is documented in the repository README.

use std::fmt;
use std::str::FromStr;

use serde::Deserialize;
use thiserror::Error;

use crate::detector::{DetectorParams, ZVariant};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("malformed config document: {0}")]
    Parse(String),
    #[error("invalid value for `{field}`: {reason}")]
    Invalid { field: &'static str, reason: String },
}

impl ConfigError {
    fn invalid(field: &'static str, reason: impl Into<String>) -> Self {
        ConfigError::Invalid {
            field,
            reason: reason.into(),
        }
    }

    /// Dotted key of the offending field, for validation errors.
    pub fn field(&self) -> Option<&'static str> {
        match self {
            ConfigError::Invalid { field, .. } => Some(field),
            ConfigError::Parse(_) => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Protocol {
    Epidemic,
    SprayAndWait,
    Prophet,
    FirstContact,
}

impl Protocol {
    pub const ALL: [Protocol; 4] = [
        Protocol::FirstContact,
        Protocol::Epidemic,
        Protocol::Prophet,
        Protocol::SprayAndWait,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Protocol::Epidemic => "epidemic",
            Protocol::SprayAndWait => "spray-and-wait",
            Protocol::Prophet => "prophet",
            Protocol::FirstContact => "first-contact",
        }
    }
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Protocol {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key: String = s
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .map(|c| c.to_ascii_lowercase())
            .collect();
        match key.as_str() {
            "epidemic" => Ok(Protocol::Epidemic),
            "sprayandwait" | "snw" => Ok(Protocol::SprayAndWait),
            "prophet" => Ok(Protocol::Prophet),
            "firstcontact" => Ok(Protocol::FirstContact),
            _ => Err(format!("unknown routing protocol `{s}`")),
        }
    }
}

/// Closed speed interval in m/s.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpeedRange {
    pub min: f64,
    pub max: f64,
}

impl SpeedRange {
    pub const fn new(min: f64, max: f64) -> Self {
        Self { min, max }
    }

    pub fn contains(&self, v: f64) -> bool {
        v >= self.min && v <= self.max
    }
}

/// Router parameters; the defaults are the customary ONE settings.
#[derive(Clone, Debug, PartialEq)]
pub struct RoutingParams {
    /// Initial copy budget L for binary Spray-and-Wait.
    pub spray_copies: u32,
    pub prophet_p_init: f64,
    pub prophet_beta: f64,
    pub prophet_gamma: f64,
    /// Seconds per aging unit.
    pub prophet_aging_unit: f64,
}

impl Default for RoutingParams {
    fn default() -> Self {
        Self {
            spray_copies: 6,
            prophet_p_init: 0.75,
            prophet_beta: 0.25,
            prophet_gamma: 0.98,
            prophet_aging_unit: 30.0,
        }
    }
}

/// Complete description of one simulation run. Units: meters, seconds,
/// bytes, bytes/second.
#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioConfig {
    pub area_width: f64,
    pub area_height: f64,
    pub num_legit_nodes: usize,
    pub num_wormhole_pairs: usize,
    pub sim_duration: f64,
    pub tick: f64,
    pub legit_radio_range: f64,
    pub wormhole_radio_range: f64,
    pub legit_speed_ranges: Vec<SpeedRange>,
    pub wormhole_speed_range: SpeedRange,
    pub legit_buffer: u64,
    pub wormhole_buffer: u64,
    pub legit_bitrate: f64,
    pub wormhole_tunnel_bitrate: f64,
    pub message_size_range: (u64, u64),
    pub message_interval_range: (f64, f64),
    pub routing_protocol: Protocol,
    pub routing: RoutingParams,
    pub detector_params: DetectorParams,
    pub rng_seed: u64,
}

impl Default for ScenarioConfig {
    /// The reference scenario: 4500 m x 3400 m, 58 nodes of which 10 are
    /// wormhole endpoints (5 pairs), 12 h, legit radios 10 m at 250 kB/s with
    /// 5 MB buffers, wormhole radios 500 m with 50 MB buffers and a 10 MB/s
    /// tunnel, 500 kB - 1 MB messages every 25 - 35 s.
    fn default() -> Self {
        Self {
            area_width: 4500.0,
            area_height: 3400.0,
            num_legit_nodes: 48,
            num_wormhole_pairs: 5,
            sim_duration: 12.0 * 3600.0,
            tick: 1.0,
            legit_radio_range: 10.0,
            wormhole_radio_range: 500.0,
            legit_speed_ranges: vec![SpeedRange::new(0.5, 1.5), SpeedRange::new(2.7, 13.9)],
            wormhole_speed_range: SpeedRange::new(7.0, 10.0),
            legit_buffer: 5_000_000,
            wormhole_buffer: 50_000_000,
            legit_bitrate: 250_000.0,
            wormhole_tunnel_bitrate: 10_000_000.0,
            message_size_range: (500_000, 1_000_000),
            message_interval_range: (25.0, 35.0),
            routing_protocol: Protocol::Epidemic,
            routing: RoutingParams::default(),
            detector_params: DetectorParams::default(),
            rng_seed: 1,
        }
    }
}

impl ScenarioConfig {
    pub fn total_nodes(&self) -> usize {
        self.num_legit_nodes + 2 * self.num_wormhole_pairs
    }

    /// Reference scenario with `total` nodes, 10 of them wormhole endpoints.
    pub fn with_total_nodes(total: usize) -> Result<Self, ConfigError> {
        let mut cfg = Self::default();
        cfg.set_total_nodes(total)?;
        Ok(cfg)
    }

    /// Keeps the pair count and adjusts the legit count so the population
    /// totals `total`.
    pub fn set_total_nodes(&mut self, total: usize) -> Result<(), ConfigError> {
        let attackers = 2 * self.num_wormhole_pairs;
        if total <= attackers {
            return Err(ConfigError::invalid(
                "nodes.legit",
                format!("total population {total} leaves no legit nodes next to {attackers} wormhole endpoints"),
            ));
        }
        self.num_legit_nodes = total - attackers;
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        fn positive(field: &'static str, v: f64) -> Result<(), ConfigError> {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(ConfigError::invalid(field, format!("must be > 0, got {v}")))
            }
        }
        fn ordered<T: PartialOrd + fmt::Display>(field: &'static str, lo: T, hi: T) -> Result<(), ConfigError> {
            if lo <= hi {
                Ok(())
            } else {
                Err(ConfigError::invalid(field, format!("min {lo} exceeds max {hi}")))
            }
        }

        positive("area.width", self.area_width)?;
        positive("area.height", self.area_height)?;
        if self.num_legit_nodes == 0 {
            return Err(ConfigError::invalid("nodes.legit", "at least one legit node is required"));
        }
        positive("sim.duration", self.sim_duration)?;
        positive("sim.tick", self.tick)?;
        if self.tick > self.sim_duration {
            return Err(ConfigError::invalid(
                "sim.tick",
                format!("tick {} exceeds duration {}", self.tick, self.sim_duration),
            ));
        }
        positive("legit.radio_range", self.legit_radio_range)?;
        positive("wormhole.radio_range", self.wormhole_radio_range)?;
        if self.legit_speed_ranges.is_empty() {
            return Err(ConfigError::invalid("legit.speed_ranges", "at least one range is required"));
        }
        for r in &self.legit_speed_ranges {
            positive("legit.speed_ranges", r.min)?;
            ordered("legit.speed_ranges", r.min, r.max)?;
        }
        positive("wormhole.speed_range", self.wormhole_speed_range.min)?;
        ordered("wormhole.speed_range", self.wormhole_speed_range.min, self.wormhole_speed_range.max)?;
        if self.legit_buffer == 0 {
            return Err(ConfigError::invalid("legit.buffer", "must be > 0"));
        }
        if self.wormhole_buffer == 0 {
            return Err(ConfigError::invalid("wormhole.buffer", "must be > 0"));
        }
        positive("legit.bitrate", self.legit_bitrate)?;
        positive("wormhole.tunnel_bitrate", self.wormhole_tunnel_bitrate)?;
        let (smin, smax) = self.message_size_range;
        if smin == 0 {
            return Err(ConfigError::invalid("messages.size_range", "sizes must be > 0"));
        }
        ordered("messages.size_range", smin, smax)?;
        if smax > self.legit_buffer {
            return Err(ConfigError::invalid(
                "messages.size_range",
                format!("max size {smax} does not fit a legit buffer of {}", self.legit_buffer),
            ));
        }
        if self.num_wormhole_pairs > 0 && smax > self.wormhole_buffer {
            return Err(ConfigError::invalid(
                "wormhole.buffer",
                format!("{} cannot hold a message of {smax} bytes", self.wormhole_buffer),
            ));
        }
        let (imin, imax) = self.message_interval_range;
        positive("messages.interval_range", imin)?;
        ordered("messages.interval_range", imin, imax)?;

        let r = &self.routing;
        if r.spray_copies == 0 {
            return Err(ConfigError::invalid("routing.spray_copies", "must be >= 1"));
        }
        for (field, v) in [
            ("routing.prophet_p_init", r.prophet_p_init),
            ("routing.prophet_beta", r.prophet_beta),
            ("routing.prophet_gamma", r.prophet_gamma),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(ConfigError::invalid(field, format!("must lie in [0,1], got {v}")));
            }
        }
        positive("routing.prophet_aging_unit", r.prophet_aging_unit)?;

        let d = &self.detector_params;
        positive("detector.z_threshold", d.z_threshold)?;
        if !(0.0..=1.0).contains(&d.similarity_threshold) || d.similarity_threshold <= 0.0 {
            return Err(ConfigError::invalid(
                "detector.similarity_threshold",
                format!("must lie in (0,1], got {}", d.similarity_threshold),
            ));
        }
        positive("detector.audit_window", d.audit_window)?;
        positive("detector.sliding_window", d.sliding_window)?;
        if !(d.warmup >= 0.0 && d.warmup.is_finite()) {
            return Err(ConfigError::invalid(
                "detector.warmup",
                format!("must be a finite value >= 0, got {}", d.warmup),
            ));
        }
        Ok(())
    }

    /// Renders the config in the same dotted-key grammar `load_config` reads.
    pub fn to_document(&self) -> String {
        let speeds: Vec<String> = self
            .legit_speed_ranges
            .iter()
            .map(|r| format!("[{:?}, {:?}]", r.min, r.max))
            .collect();
        let d = &self.detector_params;
        let r = &self.routing;
        let lines = [
            format!("area.width = {:?}", self.area_width),
            format!("area.height = {:?}", self.area_height),
            format!("nodes.legit = {}", self.num_legit_nodes),
            format!("nodes.wormhole_pairs = {}", self.num_wormhole_pairs),
            format!("sim.duration = {:?}", self.sim_duration),
            format!("sim.tick = {:?}", self.tick),
            format!("sim.seed = {}", self.rng_seed),
            format!("legit.radio_range = {:?}", self.legit_radio_range),
            format!("legit.speed_ranges = [{}]", speeds.join(", ")),
            format!("legit.buffer = {}", self.legit_buffer),
            format!("legit.bitrate = {:?}", self.legit_bitrate),
            format!("wormhole.radio_range = {:?}", self.wormhole_radio_range),
            format!(
                "wormhole.speed_range = [{:?}, {:?}]",
                self.wormhole_speed_range.min, self.wormhole_speed_range.max
            ),
            format!("wormhole.buffer = {}", self.wormhole_buffer),
            format!("wormhole.tunnel_bitrate = {:?}", self.wormhole_tunnel_bitrate),
            format!(
                "messages.size_range = [{}, {}]",
                self.message_size_range.0, self.message_size_range.1
            ),
            format!(
                "messages.interval_range = [{:?}, {:?}]",
                self.message_interval_range.0, self.message_interval_range.1
            ),
            format!("routing.protocol = \"{}\"", self.routing_protocol),
            format!("routing.spray_copies = {}", r.spray_copies),
            format!("routing.prophet_p_init = {:?}", r.prophet_p_init),
            format!("routing.prophet_beta = {:?}", r.prophet_beta),
            format!("routing.prophet_gamma = {:?}", r.prophet_gamma),
            format!("routing.prophet_aging_unit = {:?}", r.prophet_aging_unit),
            format!("detector.variant = \"{}\"", d.z_variant),
            format!("detector.z_threshold = {:?}", d.z_threshold),
            format!("detector.similarity_threshold = {:?}", d.similarity_threshold),
            format!("detector.audit_window = {:?}", d.audit_window),
            format!("detector.warmup = {:?}", d.warmup),
            format!("detector.sliding_window = {:?}", d.sliding_window),
        ];
        let mut out = lines.join("\n");
        out.push('\n');
        out
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct Document {
    #[serde(default)]
    area: AreaDoc,
    #[serde(default)]
    nodes: NodesDoc,
    #[serde(default)]
    sim: SimDoc,
    #[serde(default)]
    legit: LegitDoc,
    #[serde(default)]
    wormhole: WormholeDoc,
    #[serde(default)]
    messages: MessagesDoc,
    #[serde(default)]
    routing: RoutingDoc,
    #[serde(default)]
    detector: DetectorDoc,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct AreaDoc {
    width: Option<f64>,
    height: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct NodesDoc {
    legit: Option<usize>,
    wormhole_pairs: Option<usize>,
    total: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct SimDoc {
    duration: Option<f64>,
    tick: Option<f64>,
    seed: Option<u64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct LegitDoc {
    radio_range: Option<f64>,
    speed_ranges: Option<Vec<[f64; 2]>>,
    buffer: Option<u64>,
    bitrate: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct WormholeDoc {
    radio_range: Option<f64>,
    speed_range: Option<[f64; 2]>,
    buffer: Option<u64>,
    tunnel_bitrate: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct MessagesDoc {
    size_range: Option<[u64; 2]>,
    interval_range: Option<[f64; 2]>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RoutingDoc {
    protocol: Option<String>,
    spray_copies: Option<u32>,
    prophet_p_init: Option<f64>,
    prophet_beta: Option<f64>,
    prophet_gamma: Option<f64>,
    prophet_aging_unit: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct DetectorDoc {
    variant: Option<String>,
    z_threshold: Option<f64>,
    similarity_threshold: Option<f64>,
    audit_window: Option<f64>,
    warmup: Option<f64>,
    sliding_window: Option<f64>,
}

/// Parses and validates a config document. Omitted keys keep their
/// reference-scenario defaults.
pub fn load_config(text: &str) -> Result<ScenarioConfig, ConfigError> {
    let doc: Document = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
    let mut cfg = ScenarioConfig::default();

    set(&mut cfg.area_width, doc.area.width);
    set(&mut cfg.area_height, doc.area.height);

    set(&mut cfg.num_wormhole_pairs, doc.nodes.wormhole_pairs);
    match (doc.nodes.legit, doc.nodes.total) {
        (Some(_), Some(_)) => {
            return Err(ConfigError::invalid("nodes.total", "set either nodes.total or nodes.legit, not both"))
        }
        (Some(legit), None) => cfg.num_legit_nodes = legit,
        (None, Some(total)) => cfg.set_total_nodes(total)?,
        (None, None) => {}
    }

    set(&mut cfg.sim_duration, doc.sim.duration);
    set(&mut cfg.tick, doc.sim.tick);
    set(&mut cfg.rng_seed, doc.sim.seed);

    set(&mut cfg.legit_radio_range, doc.legit.radio_range);
    if let Some(ranges) = doc.legit.speed_ranges {
        cfg.legit_speed_ranges = ranges.iter().map(|[lo, hi]| SpeedRange::new(*lo, *hi)).collect();
    }
    set(&mut cfg.legit_buffer, doc.legit.buffer);
    set(&mut cfg.legit_bitrate, doc.legit.bitrate);

    set(&mut cfg.wormhole_radio_range, doc.wormhole.radio_range);
    if let Some([lo, hi]) = doc.wormhole.speed_range {
        cfg.wormhole_speed_range = SpeedRange::new(lo, hi);
    }
    set(&mut cfg.wormhole_buffer, doc.wormhole.buffer);
    set(&mut cfg.wormhole_tunnel_bitrate, doc.wormhole.tunnel_bitrate);

    if let Some([lo, hi]) = doc.messages.size_range {
        cfg.message_size_range = (lo, hi);
    }
    if let Some([lo, hi]) = doc.messages.interval_range {
        cfg.message_interval_range = (lo, hi);
    }

    if let Some(p) = doc.routing.protocol {
        cfg.routing_protocol = p
            .parse()
            .map_err(|e: String| ConfigError::invalid("routing.protocol", e))?;
    }
    set(&mut cfg.routing.spray_copies, doc.routing.spray_copies);
    set(&mut cfg.routing.prophet_p_init, doc.routing.prophet_p_init);
    set(&mut cfg.routing.prophet_beta, doc.routing.prophet_beta);
    set(&mut cfg.routing.prophet_gamma, doc.routing.prophet_gamma);
    set(&mut cfg.routing.prophet_aging_unit, doc.routing.prophet_aging_unit);

    let det = &mut cfg.detector_params;
    if let Some(v) = doc.detector.variant {
        let variant: ZVariant = v
            .parse()
            .map_err(|e: String| ConfigError::invalid("detector.variant", e))?;
        *det = DetectorParams::for_variant(variant);
    }
    set(&mut det.z_threshold, doc.detector.z_threshold);
    set(&mut det.similarity_threshold, doc.detector.similarity_threshold);
    set(&mut det.audit_window, doc.detector.audit_window);
    set(&mut det.warmup, doc.detector.warmup);
    set(&mut det.sliding_window, doc.detector.sliding_window);

    cfg.validate()?;
    Ok(cfg)
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_is_reference_scenario() {
        let cfg = load_config("").unwrap();
        assert_eq!(cfg.area_width, 4500.0);
        assert_eq!(cfg.area_height, 3400.0);
        assert_eq!(cfg.num_wormhole_pairs, 5);
        assert_eq!(cfg.sim_duration, 43_200.0);
        assert_eq!(cfg.total_nodes(), 58);
        assert_eq!(cfg, ScenarioConfig::default());
    }

    #[test]
    fn zero_tick_names_tick() {
        let err = load_config("sim.tick = 0").unwrap_err();
        assert_eq!(err.field(), Some("sim.tick"));
        assert!(err.to_string().contains("tick"));
    }

    #[test]
    fn legit_count_plus_pairs() {
        let cfg = load_config("nodes.legit = 48\nnodes.wormhole_pairs = 5").unwrap();
        assert_eq!(cfg.total_nodes(), 58);
        let cfg = load_config("nodes.total = 76").unwrap();
        assert_eq!(cfg.num_legit_nodes, 66);
    }

    #[test]
    fn malformed_document() {
        assert!(matches!(load_config("sim.tick = = 3"), Err(ConfigError::Parse(_))));
        assert!(matches!(load_config("sim.bogus = 3"), Err(ConfigError::Parse(_))));
        assert!(matches!(load_config("sim.tick = \"fast\""), Err(ConfigError::Parse(_))));
    }

    #[test]
    fn range_order_checked() {
        let err = load_config("messages.interval_range = [35, 25]").unwrap_err();
        assert_eq!(err.field(), Some("messages.interval_range"));
        let err = load_config("legit.speed_ranges = [[2.0, 1.0]]").unwrap_err();
        assert_eq!(err.field(), Some("legit.speed_ranges"));
    }

    #[test]
    fn no_legit_nodes_rejected() {
        let err = load_config("nodes.legit = 0").unwrap_err();
        assert_eq!(err.field(), Some("nodes.legit"));
    }

    #[test]
    fn tick_longer_than_run_rejected() {
        let err = load_config("sim.duration = 10\nsim.tick = 20\ndetector.warmup = 0").unwrap_err();
        assert_eq!(err.field(), Some("sim.tick"));
    }

    #[test]
    fn modified_variant_gets_its_own_threshold() {
        let cfg = load_config("detector.variant = \"modified\"").unwrap();
        assert_eq!(cfg.detector_params.z_variant, ZVariant::Modified);
        assert_eq!(cfg.detector_params.z_threshold, 3.5);
        let cfg = load_config("detector.variant = \"modified\"\ndetector.z_threshold = 4.0").unwrap();
        assert_eq!(cfg.detector_params.z_threshold, 4.0);
    }

    #[test]
    fn protocol_names() {
        for p in Protocol::ALL {
            assert_eq!(p.name().parse::<Protocol>().unwrap(), p);
        }
        assert_eq!("SprayAndWait".parse::<Protocol>().unwrap(), Protocol::SprayAndWait);
        assert!(load_config("routing.protocol = \"maxprop\"").is_err());
    }

    #[test]
    fn document_round_trip() {
        let mut cfg = ScenarioConfig::with_total_nodes(70).unwrap();
        cfg.routing_protocol = Protocol::Prophet;
        cfg.rng_seed = 99;
        cfg.legit_speed_ranges = vec![SpeedRange::new(0.1, 0.30000000000000004)];
        cfg.detector_params.z_threshold = 2.75;
        assert_eq!(load_config(&cfg.to_document()).unwrap(), cfg);
    }
}
