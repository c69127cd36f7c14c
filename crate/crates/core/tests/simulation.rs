use std::collections::{BTreeMap, BTreeSet};

use wormsim::check::check_trace;
use wormsim::detector::{self, build_ledger};
use wormsim::trace::TraceEvent;
use wormsim::{run_simulation, EventTrace, NodeClass, NodeId, Protocol, ScenarioConfig, Simulation};

fn scenario(protocol: Protocol, seed: u64, hours: f64) -> ScenarioConfig {
    ScenarioConfig {
        routing_protocol: protocol,
        rng_seed: seed,
        sim_duration: hours * 3600.0,
        ..ScenarioConfig::default()
    }
}

fn wormholes(trace: &EventTrace) -> BTreeMap<NodeId, u32> {
    trace
        .node_classes()
        .into_iter()
        .filter_map(|(id, c)| c.pair().map(|p| (id, p)))
        .collect()
}

#[test]
fn same_seed_same_bytes() {
    let cfg = scenario(Protocol::Epidemic, 7, 2.0);
    let (a, ra) = run_simulation(&cfg).unwrap();
    let (b, rb) = run_simulation(&cfg).unwrap();
    assert_eq!(a.to_text(), b.to_text());
    assert_eq!(ra, rb);
}

#[test]
fn different_seeds_different_traces() {
    for (s, t) in [(1, 2), (3, 4), (5, 6)] {
        let a = run_simulation(&scenario(Protocol::SprayAndWait, s, 1.0)).unwrap().0;
        let b = run_simulation(&scenario(Protocol::SprayAndWait, t, 1.0)).unwrap().0;
        assert_ne!(a.to_text(), b.to_text(), "seeds {s} and {t}");
    }
}

#[test]
fn replayed_trace_gives_the_live_report() {
    let cfg = scenario(Protocol::Prophet, 3, 4.0);
    let (trace, live) = run_simulation(&cfg).unwrap();
    let parsed = EventTrace::parse(&trace.to_text()).unwrap();
    assert_eq!(parsed, trace);
    let params = parsed.detector_params().unwrap().clone();
    assert_eq!(detector::detect(&parsed, &params), live);
}

#[test]
fn stepping_matches_a_single_run() {
    let cfg = scenario(Protocol::FirstContact, 11, 1.0);
    let mut sim = Simulation::new(cfg.clone()).unwrap();
    let mut t = 0.0;
    while !sim.is_finished() {
        t += 97.0;
        sim.advance_to(t);
        assert!(sim.now() <= t);
    }
    let (stepped, r1) = sim.finish();
    let (whole, r2) = run_simulation(&cfg).unwrap();
    assert_eq!(stepped, whole);
    assert_eq!(r1, r2);
}

#[test]
fn record_times_never_decrease() {
    let (trace, _) = run_simulation(&scenario(Protocol::Epidemic, 2, 1.0)).unwrap();
    assert!(trace.records.windows(2).all(|w| w[0].time <= w[1].time));
}

#[test]
fn wormholes_outrelay_the_legit_median() {
    for protocol in Protocol::ALL {
        let cfg = scenario(protocol, 1, 12.0);
        let (trace, _) = run_simulation(&cfg).unwrap();
        let ledger = build_ledger(&trace, (0.0, cfg.sim_duration));
        let worm = wormholes(&trace);
        let mut legit: Vec<u64> = ledger
            .relay_count
            .iter()
            .filter(|(id, _)| !worm.contains_key(id))
            .map(|(_, c)| *c)
            .collect();
        legit.sort_unstable();
        let median = if legit.len() % 2 == 1 {
            legit[legit.len() / 2] as f64
        } else {
            (legit[legit.len() / 2 - 1] + legit[legit.len() / 2]) as f64 / 2.0
        };
        for w in worm.keys() {
            assert!(ledger.relay_count[w] as f64 > median, "{protocol}: {w} relays {} vs median {median}", ledger.relay_count[w]);
        }
    }
}

#[test]
fn wormhole_endpoints_never_share_a_radio_contact() {
    let (trace, _) = run_simulation(&scenario(Protocol::Epidemic, 4, 3.0)).unwrap();
    let worm = wormholes(&trace);
    for r in &trace.records {
        if let TraceEvent::ContactUp { a, b } = r.event {
            assert!(!(worm.contains_key(&a) && worm.contains_key(&b)), "{a}-{b} at {}", r.time);
        }
    }
}

#[test]
fn each_message_crosses_a_tunnel_at_most_once() {
    for protocol in Protocol::ALL {
        let (trace, _) = run_simulation(&scenario(protocol, 5, 3.0)).unwrap();
        let worm = wormholes(&trace);
        let mut seen = BTreeSet::new();
        let mut crossings = 0;
        for r in &trace.records {
            if let TraceEvent::TunnelXfer { msg, from, to, .. } = r.event {
                assert_eq!(worm[&from], worm[&to], "{protocol}: tunnel joins one pair");
                assert_ne!(from, to);
                assert!(seen.insert((msg, worm[&from])), "{protocol}: {msg} crossed twice");
                crossings += 1;
            }
        }
        assert!(crossings > 0, "{protocol}: tunnel unused");
    }
}

#[test]
fn tunnel_then_direct_delivery_happens() {
    let (trace, _) = run_simulation(&scenario(Protocol::Epidemic, 1, 6.0)).unwrap();
    let worm = wormholes(&trace);
    let dst: BTreeMap<_, _> = trace
        .records
        .iter()
        .filter_map(|r| match r.event {
            TraceEvent::MsgCreate { msg, dst, .. } => Some((msg, dst)),
            _ => None,
        })
        .collect();
    let found = trace.records.iter().any(|r| match &r.event {
        TraceEvent::XferDone { msg, to, hops, .. } if *to == dst[msg] && hops.len() >= 3 => {
            let n = hops.len();
            let (a, b) = (hops[n - 3], hops[n - 2]);
            worm.get(&a).is_some_and(|p| worm.get(&b) == Some(p))
        }
        _ => false,
    });
    assert!(found, "no delivery straight off a tunnel exit");
}

#[test]
fn clean_network_has_no_tunnel_and_no_declarations() {
    for protocol in Protocol::ALL {
        let cfg = ScenarioConfig {
            num_legit_nodes: 58,
            num_wormhole_pairs: 0,
            ..scenario(protocol, 9, 12.0)
        };
        let (trace, report) = run_simulation(&cfg).unwrap();
        assert!(trace.records.iter().all(|r| !matches!(r.event, TraceEvent::TunnelXfer { .. })));
        assert!(trace.node_classes().values().all(|c| *c == NodeClass::Legit));
        assert!(report.confirmed_pairs.is_empty(), "{protocol}: {:?}", report.confirmed_pairs);
        assert_eq!((report.detection_success_rate, report.false_alarm_rate), (0.0, 0.0));
    }
}

#[test]
fn traces_satisfy_protocol_invariants() {
    for protocol in Protocol::ALL {
        let (trace, _) = run_simulation(&scenario(protocol, 8, 12.0)).unwrap();
        let summary = check_trace(&trace).unwrap_or_else(|v| panic!("{protocol}: {v}"));
        assert!(summary.peak_occupancy <= 1.0);
        match protocol {
            Protocol::FirstContact => assert_eq!(summary.max_holders, 1),
            Protocol::SprayAndWait => assert!(summary.max_live_copies <= 6),
            _ => {}
        }
    }
}

#[test]
fn header_describes_the_population() {
    let cfg = ScenarioConfig::with_total_nodes(64).unwrap();
    let cfg = ScenarioConfig { sim_duration: 60.0, ..cfg };
    let (trace, report) = run_simulation(&cfg).unwrap();
    let h = trace.scenario().unwrap();
    assert_eq!((h.nodes, h.pairs), (64, 5));
    assert_eq!(wormholes(&trace).len(), 10);
    assert_eq!(report.preset_pairs, 5);
}
