//! WebAssembly bindings behind `www/index.html`.
//!
//! Three things are exposed: scoring a list of relay counts, stepping a small
//! scenario and reading back its state, and comparing two neighbor sets.

use std::collections::BTreeSet;

use wasm_bindgen::prelude::*;
use wormsim::detector::neighbor_similarity;
use wormsim::detector::stats::{modified_zscore, zscore};
use wormsim::trace::TraceEvent;
use wormsim::{NodeClass, NodeId, Protocol, ScenarioConfig, Simulation};

/// Scores `values` with the standard (`"standard"`) or MAD-based
/// (`"modified"`) Z-Score. A degenerate list scores all zeros.
#[wasm_bindgen]
pub fn score(values: &[f64], variant: &str) -> Result<Vec<f64>, JsError> {
    let s = match variant {
        "standard" => zscore(values),
        "modified" => modified_zscore(values),
        other => return Err(JsError::new(&format!("unknown variant `{other}`"))),
    };
    if s.degenerate {
        Ok(vec![0.0; values.len()])
    } else {
        Ok(s.values)
    }
}

/// Neighbor similarity of nodes `a` and `b` given their neighbor id lists.
#[wasm_bindgen]
pub fn similarity(a: u32, na: &[u32], b: u32, nb: &[u32]) -> f64 {
    let set = |ids: &[u32]| ids.iter().map(|i| NodeId(*i)).collect::<BTreeSet<_>>();
    neighbor_similarity(&set(na), &set(nb), NodeId(a), NodeId(b))
}

/// A running scenario.
#[wasm_bindgen]
pub struct Scenario {
    sim: Simulation,
    relays: Vec<u32>,
    scanned: usize,
}

#[wasm_bindgen]
impl Scenario {
    /// Reference scenario with `nodes` nodes in total, five of the pairs
    /// wormholes unless `attack` is false.
    #[wasm_bindgen(constructor)]
    pub fn new(nodes: usize, protocol: &str, seed: u64, attack: bool) -> Result<Scenario, JsError> {
        let mut cfg = ScenarioConfig::default();
        if !attack {
            cfg.num_wormhole_pairs = 0;
        }
        cfg.set_total_nodes(nodes).map_err(|e| JsError::new(&e.to_string()))?;
        cfg.routing_protocol = protocol.parse::<Protocol>().map_err(|e| JsError::new(&e))?;
        cfg.rng_seed = seed;
        let sim = Simulation::new(cfg).map_err(|e| JsError::new(&e.to_string()))?;
        Ok(Scenario {
            relays: vec![0; nodes],
            sim,
            scanned: 0,
        })
    }

    pub fn now(&self) -> f64 {
        self.sim.now()
    }

    pub fn width(&self) -> f64 {
        self.sim.config().area_width
    }

    pub fn height(&self) -> f64 {
        self.sim.config().area_height
    }

    /// Runs the scenario forward by `seconds`.
    pub fn step(&mut self, seconds: f64) {
        let until = self.sim.now() + seconds;
        self.sim.advance_to(until);
        let records = &self.sim.trace().records[self.scanned..];
        for r in records {
            if let TraceEvent::XferDone { from, .. } = r.event {
                self.relays[from.index()] += 1;
            }
        }
        self.scanned = self.sim.trace().records.len();
    }

    /// Interleaved `x, y` per node.
    pub fn positions(&self) -> Vec<f64> {
        self.sim.positions().iter().flat_map(|p| [p.x, p.y]).collect()
    }

    /// 0 for a legit node, `1 + pair` for a wormhole endpoint.
    pub fn classes(&self) -> Vec<u32> {
        self.sim
            .classes()
            .iter()
            .map(|c| match c {
                NodeClass::Legit => 0,
                NodeClass::Wormhole { pair } => 1 + pair,
            })
            .collect()
    }

    /// Flattened `a, b` ids of the radio contacts currently up.
    pub fn contacts(&self) -> Vec<u32> {
        self.sim.contacts().iter().flat_map(|c| [c.a.0, c.b.0]).collect()
    }

    /// Completed radio transfers sent by each node so far.
    pub fn relay_counts(&self) -> Vec<u32> {
        self.relays.clone()
    }
}
