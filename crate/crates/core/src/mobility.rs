//! Random-waypoint movement with zero pause time.
//!
//! Legit nodes roam the whole area; the pedestrian and vehicular speed
//! classes alternate by node index. Each wormhole endpoint is confined to an
//! inset of its home quadrant, and the two endpoints of a pair live in
//! opposite quadrants.

use std::collections::BTreeMap;

use crate::config::{ScenarioConfig, SpeedRange};
use crate::rng::Rng;
use crate::NodeId;

const ARRIVAL_EPS: f64 = 1e-9;
const PLACEMENT_ATTEMPTS: usize = 1000;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Position {
    pub x: f64,
    pub y: f64,
}

impl Position {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance_sq(&self, other: &Position) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }

    pub fn distance(&self, other: &Position) -> f64 {
        self.distance_sq(other).sqrt()
    }
}

/// Axis-aligned rectangle `[x0,x1] x [y0,y1]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Region {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl Region {
    pub fn area(width: f64, height: f64) -> Self {
        Self {
            x0: 0.0,
            y0: 0.0,
            x1: width,
            y1: height,
        }
    }

    /// Quadrant `q` (0 lower-left, 1 lower-right, 2 upper-right, 3 upper-left)
    /// of a `width x height` area, pulled back from the centre lines by
    /// `inset` (capped at a quarter of each side).
    pub fn quadrant(width: f64, height: f64, q: usize, inset: f64) -> Self {
        let mx = inset.min(width / 4.0);
        let my = inset.min(height / 4.0);
        let (hw, hh) = (width / 2.0, height / 2.0);
        let (x0, x1) = if q == 0 || q == 3 { (0.0, hw - mx) } else { (hw + mx, width) };
        let (y0, y1) = if q < 2 { (0.0, hh - my) } else { (hh + my, height) };
        Self { x0, y0, x1, y1 }
    }

    pub fn contains(&self, p: &Position) -> bool {
        p.x >= self.x0 && p.x <= self.x1 && p.y >= self.y0 && p.y <= self.y1
    }

    pub fn sample(&self, rng: &mut Rng) -> Position {
        Position::new(rng.uniform(self.x0, self.x1), rng.uniform(self.y0, self.y1))
    }

    fn clamp(&self, p: Position) -> Position {
        Position::new(p.x.clamp(self.x0, self.x1), p.y.clamp(self.y0, self.y1))
    }

    fn corner_farthest_from_centre(&self, width: f64, height: f64) -> Position {
        let x = if self.x0 + self.x1 < width { self.x0 } else { self.x1 };
        let y = if self.y0 + self.y1 < height { self.y0 } else { self.y1 };
        Position::new(x, y)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WaypointState {
    pub current: Position,
    pub target: Position,
    pub speed: f64,
    pub pause_until: f64,
}

/// What a node is allowed to do: where it may go and how fast.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MobilityProfile {
    pub region: Region,
    pub speeds: SpeedRange,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mover {
    pub state: WaypointState,
    pub profile: MobilityProfile,
}

impl Mover {
    fn start(at: Position, profile: MobilityProfile, rng: &mut Rng) -> Self {
        let target = profile.region.sample(rng);
        let speed = rng.uniform(profile.speeds.min, profile.speeds.max);
        Self {
            state: WaypointState {
                current: at,
                target,
                speed,
                pause_until: 0.0,
            },
            profile,
        }
    }
}

/// Mobility profile of node `id` under `config`.
pub fn profile_of(config: &ScenarioConfig, id: NodeId) -> MobilityProfile {
    let i = id.index();
    if i < config.num_legit_nodes {
        let speeds = config.legit_speed_ranges[i % config.legit_speed_ranges.len()];
        MobilityProfile {
            region: Region::area(config.area_width, config.area_height),
            speeds,
        }
    } else {
        let w = i - config.num_legit_nodes;
        let (pair, end) = (w / 2, w % 2);
        let base = pair % 4;
        let q = if end == 0 { base } else { (base + 2) % 4 };
        MobilityProfile {
            region: Region::quadrant(config.area_width, config.area_height, q, config.wormhole_radio_range),
            speeds: config.wormhole_speed_range,
        }
    }
}

/// Places every node and draws its first waypoint. Wormhole pair endpoints
/// start at least half the area diagonal apart.
pub fn init_positions(config: &ScenarioConfig, rng: &mut Rng) -> BTreeMap<NodeId, Mover> {
    let mut out = BTreeMap::new();
    for i in 0..config.num_legit_nodes {
        let id = NodeId(i as u32);
        let profile = profile_of(config, id);
        let at = profile.region.sample(rng);
        out.insert(id, Mover::start(at, profile, rng));
    }

    let min_sep = 0.5 * config.area_width.hypot(config.area_height);
    for pair in 0..config.num_wormhole_pairs {
        let a = NodeId((config.num_legit_nodes + 2 * pair) as u32);
        let b = NodeId(a.0 + 1);
        let (pa, pb) = (profile_of(config, a), profile_of(config, b));
        let mut placed = None;
        for _ in 0..PLACEMENT_ATTEMPTS {
            let (x, y) = (pa.region.sample(rng), pb.region.sample(rng));
            if x.distance(&y) >= min_sep {
                placed = Some((x, y));
                break;
            }
        }
        let (x, y) = placed.unwrap_or_else(|| {
            (
                pa.region.corner_farthest_from_centre(config.area_width, config.area_height),
                pb.region.corner_farthest_from_centre(config.area_width, config.area_height),
            )
        });
        out.insert(a, Mover::start(x, pa, rng));
        out.insert(b, Mover::start(y, pb, rng));
    }
    out
}

/// Advances one node by `dt` seconds. A node sitting on its waypoint draws a
/// fresh target and speed and stays put for this step; otherwise it moves
/// toward the target, stopping on it if it would overshoot.
pub fn step(state: &WaypointState, profile: &MobilityProfile, dt: f64, rng: &mut Rng) -> WaypointState {
    let mut next = *state;
    let remaining = state.current.distance(&state.target);
    if remaining <= ARRIVAL_EPS {
        next.target = profile.region.sample(rng);
        next.speed = rng.uniform(profile.speeds.min, profile.speeds.max);
        return next;
    }
    let travel = state.speed * dt;
    next.current = if travel >= remaining {
        state.target
    } else {
        let f = travel / remaining;
        profile.region.clamp(Position::new(
            state.current.x + (state.target.x - state.current.x) * f,
            state.current.y + (state.target.y - state.current.y) * f,
        ))
    };
    next
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;
    use proptest::prelude::*;

    fn walker(speeds: SpeedRange) -> MobilityProfile {
        MobilityProfile {
            region: Region::area(100.0, 100.0),
            speeds,
        }
    }

    #[test]
    fn reference_population_inside_area() {
        let cfg = ScenarioConfig::default();
        let movers = init_positions(&cfg, &mut Rng::new(3));
        assert_eq!(movers.len(), 58);
        let area = Region::area(4500.0, 3400.0);
        assert!(movers.values().all(|m| area.contains(&m.state.current)));
    }

    #[test]
    fn wormhole_pairs_start_far_apart() {
        let cfg = ScenarioConfig::default();
        let half_diag = 0.5 * 4500f64.hypot(3400.0);
        for seed in 0..20 {
            let movers = init_positions(&cfg, &mut Rng::new(seed));
            for pair in 0..5u32 {
                let a = NodeId(48 + 2 * pair);
                let b = NodeId(a.0 + 1);
                let d = movers[&a].state.current.distance(&movers[&b].state.current);
                assert!(d >= half_diag, "seed {seed} pair {pair}: {d} < {half_diag}");
            }
        }
    }

    #[test]
    fn empty_population() {
        let mut cfg = ScenarioConfig::default();
        cfg.num_legit_nodes = 0;
        cfg.num_wormhole_pairs = 0;
        assert!(init_positions(&cfg, &mut Rng::new(1)).is_empty());
    }

    #[test]
    fn opposite_quadrants_never_touch() {
        for q in 0..2 {
            let a = Region::quadrant(4500.0, 3400.0, q, 500.0);
            let b = Region::quadrant(4500.0, 3400.0, q + 2, 500.0);
            let gap = Position::new(a.x1.min(b.x1), a.y1.min(b.y1))
                .distance(&Position::new(a.x0.max(b.x0), a.y0.max(b.y0)));
            assert!(gap >= 1000.0, "quadrants {q}/{}: gap {gap}", q + 2);
        }
    }

    #[test]
    fn arrival_draws_new_target_without_moving() {
        let p = Position::new(5.0, 5.0);
        let s = WaypointState {
            current: p,
            target: p,
            speed: 1.0,
            pause_until: 0.0,
        };
        let next = step(&s, &walker(SpeedRange::new(0.5, 1.5)), 1.0, &mut Rng::new(1));
        assert_eq!(next.current, p);
        assert_ne!(next.target, p);
        assert!((0.5..=1.5).contains(&next.speed));
    }

    #[test]
    fn straight_line_kinematics() {
        let s = WaypointState {
            current: Position::new(0.0, 0.0),
            target: Position::new(10.0, 0.0),
            speed: 1.0,
            pause_until: 0.0,
        };
        let next = step(&s, &walker(SpeedRange::new(1.0, 1.0)), 1.0, &mut Rng::new(1));
        assert_eq!(next.current, Position::new(1.0, 0.0));
        assert_eq!(next.target, s.target);
    }

    #[test]
    fn legit_speed_samples_stay_in_class_ranges() {
        let cfg = ScenarioConfig::default();
        let mut rng = Rng::new(11);
        let movers = init_positions(&cfg, &mut rng);
        for id in [NodeId(0), NodeId(1)] {
            let mut m = movers[&id];
            for _ in 0..10_000 {
                m.state = step(&m.state, &m.profile, 1.0, &mut rng);
                let s = m.state.speed;
                assert!(
                    (0.5..=1.5).contains(&s) || (2.7..=13.9).contains(&s),
                    "speed {s} outside legit classes"
                );
                assert!(m.profile.speeds.contains(s));
            }
        }
    }

    proptest! {
        #[test]
        fn positions_stay_in_region_and_displacement_bounded(
            seed in any::<u64>(), dt in 0.1f64..5.0, steps in 1usize..400,
        ) {
            let cfg = ScenarioConfig::default();
            let mut rng = Rng::new(seed);
            let movers = init_positions(&cfg, &mut rng);
            for (id, m) in movers {
                let mut state = m.state;
                let mut node_rng = Rng::for_node(seed, id);
                for _ in 0..steps.min(50) {
                    let next = step(&state, &m.profile, dt, &mut node_rng);
                    prop_assert!(m.profile.region.contains(&next.current));
                    let moved = state.current.distance(&next.current);
                    prop_assert!(moved <= m.profile.speeds.max * dt + 1e-9);
                    state = next;
                }
            }
        }
    }
}
