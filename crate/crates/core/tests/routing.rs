mod common;

use adhoc_sim::mobility::Point2;
use adhoc_sim::routing::aodv::{expanding_ring_ttls, AodvParams};
use adhoc_sim::routing::{Preset, Protocol, Variant};
use adhoc_sim::sim::trace::TraceRecord;
use adhoc_sim::sim::{RadioConfig, Simulator};
use common::*;
use proptest::prelude::*;
use rand::Rng;

fn preset(p: Protocol, v: Variant) -> Preset {
    Preset::new(p, v)
}

#[test]
fn ring_sequences() {
    assert_eq!(
        expanding_ring_ttls(&AodvParams::default_preset()),
        vec![1, 3, 5, 7, 30, 30, 30]
    );
    assert_eq!(
        expanding_ring_ttls(&AodvParams::modified_preset()),
        vec![1, 5, 9, 10, 10, 10]
    );
}

#[test]
fn proactive_routes_are_shortest_paths() {
    let mut rng = rng(11);
    for _ in 0..10 {
        let n = rng.random_range(2..=12);
        let pts = random_connected(&mut rng, n, RANGE);
        for p in [Protocol::Fsr, Protocol::Olsr] {
            for v in [Variant::Def, Variant::Mod] {
                proactive_routes_match(&pts, preset(p, v), 200.0).unwrap();
            }
        }
    }
}

#[test]
fn aodv_discovers_shortest_paths() {
    let mut rng = rng(12);
    for _ in 0..5 {
        let n = rng.random_range(2..=10);
        let pts = random_connected(&mut rng, n, RANGE);
        for v in [Variant::Def, Variant::Mod] {
            aodv_hops_match(&pts, preset(Protocol::Aodv, v)).unwrap();
        }
    }
}

#[test]
fn line_topology_hop_counts() {
    let pts: Vec<Point2> = (0..6).map(|i| Point2::new(200.0 * i as f64, 0.0)).collect();
    for p in Preset::ALL {
        match p.protocol {
            Protocol::Aodv => aodv_hops_match(&pts, p).unwrap(),
            _ => proactive_routes_match(&pts, p, 200.0).unwrap(),
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn greedy_mprs_cover_and_stay_within_twice_minimum(seed in any::<u64>(), n in 2usize..=8, p in 0.2f64..0.8) {
        let nb = random_neighborhood(&mut rng(seed), n, p);
        prop_assert!(check_mprs(&nb).is_ok(), "{:?}", check_mprs(&nb));
    }
}

/// Two static nodes in range, one packet at 0.5 s: the control traffic is
/// one HELLO per node per second, one RREQ and one RREP.
#[test]
fn aodv_two_node_routing_load_matches_hand_count() {
    let pts = [Point2::new(0.0, 0.0), Point2::new(100.0, 0.0)];
    let horizon = 10.0;
    let setup = static_setup(
        &pts,
        preset(Protocol::Aodv, Variant::Def),
        RadioConfig::ideal(RANGE, 0.001),
        vec![flow(0, 1, 1.0, 0.5, 1.5)],
        horizon,
        3,
        true,
    );
    let out = Simulator::new(setup).unwrap().run();
    let trace = out.trace.as_deref().unwrap();
    let records: Vec<TraceRecord> = trace
        .lines()
        .filter_map(TraceRecord::parse)
        .map(Result::unwrap)
        .collect();
    let tx = |kind: &str| {
        records
            .iter()
            .filter(|r| r.event == "tx" && r.packet == kind)
            .count() as u64
    };
    let m = &out.metrics;
    assert_eq!(m.data_sent, 1);
    assert_eq!(m.data_delivered, 1);
    assert_eq!(tx("aodv_rreq"), 1);
    assert_eq!(tx("aodv_rrep"), 1);
    assert_eq!(tx("aodv_rerr"), 0);
    let hellos = tx("aodv_hello");
    assert!(
        hellos >= 2 * (horizon as u64 - 1) && hellos <= 2 * horizon as u64 + 2,
        "{hellos}"
    );
    assert_eq!(m.routing_packets, hellos + 2);
    let nro = m.nro().unwrap();
    assert_eq!(nro, (hellos + 2) as f64);
}
