mod common;

use std::collections::BTreeMap;

use adhoc_sim::mobility::{
    generate_trajectory, parse_trajectories, write_trajectories, MobilityConfig, MobilityModel,
    Point2,
};
use adhoc_sim::routing::Preset;
use adhoc_sim::scenario::{sweep, NetType, Scenario};
use adhoc_sim::sim::trace::TraceRecord;
use adhoc_sim::sim::{unit_disk_neighbors, RadioConfig, Simulator};
use adhoc_sim::traffic::{read_csv, write_csv, CsvRow};
use common::*;
use proptest::prelude::*;

fn small(net: NetType, preset: Preset, n: usize, seed: u64, horizon: f64) -> Scenario {
    let mut sc = Scenario::new(net);
    sc.preset = preset;
    sc.node_count = n;
    sc.seed = seed;
    sc.horizon = horizon;
    sc
}

fn csv_bytes(rows: &[CsvRow]) -> Vec<u8> {
    let mut buf = Vec::new();
    write_csv(&mut buf, rows).unwrap();
    buf
}

#[test]
fn perfect_link_delivers_everything() {
    let pts = [Point2::new(0.0, 0.0), Point2::new(120.0, 0.0)];
    for p in Preset::ALL {
        let setup = static_setup(
            &pts,
            p,
            RadioConfig::ideal(RANGE, 0.002),
            vec![flow(0, 1, 4.0, 20.0, 50.0)],
            60.0,
            1,
            false,
        );
        let out = Simulator::new(setup).unwrap().run();
        assert_eq!(out.metrics.data_sent, 120, "{p}");
        assert_eq!(out.metrics.pdr().unwrap(), 100.0, "{p}");
        assert!(out.metrics.e2ed().unwrap() > 0.0);
    }
}

#[test]
fn disconnected_pair_delivers_nothing() {
    let pts = [Point2::new(0.0, 0.0), Point2::new(250.5, 0.0)];
    for p in Preset::ALL {
        let setup = static_setup(
            &pts,
            p,
            RadioConfig::ideal(RANGE, 0.002),
            vec![flow(0, 1, 4.0, 20.0, 50.0)],
            60.0,
            1,
            false,
        );
        let out = Simulator::new(setup).unwrap().run();
        assert_eq!(out.metrics.pdr().unwrap(), 0.0, "{p}");
        assert!(out.ledger.data_balanced());
    }
}

#[test]
fn range_boundary_is_inclusive() {
    let pts = [Point2::new(0.0, 0.0), Point2::new(250.0, 0.0)];
    let n = unit_disk_neighbors(&pts, 250.0);
    assert_eq!(n[0].len(), 1);
    assert_eq!(n[1].len(), 1);
}

#[test]
fn runs_are_reproducible_and_conserve_packets() {
    for net in [NetType::Manet, NetType::Vanet] {
        for p in Preset::ALL {
            let sc = small(net, p, 20, 4, 90.0);
            let a = sc.run(true).unwrap();
            let b = sc.run(true).unwrap();
            assert_eq!(a.trace, b.trace, "{}", sc.run_label());
            assert_eq!(csv_bytes(&[sc.csv_row(&a)]), csv_bytes(&[sc.csv_row(&b)]));
            assert!(a.ledger.data_balanced(), "{:?}", a.ledger);
            assert!(a.ledger.control_balanced(), "{:?}", a.ledger);
            assert_eq!(a.ledger.data_sent, a.metrics.data_sent);
        }
    }
}

#[test]
fn seeds_change_the_run() {
    let a = small(NetType::Manet, Preset::ALL[0], 15, 1, 60.0)
        .run(true)
        .unwrap();
    let b = small(NetType::Manet, Preset::ALL[0], 15, 2, 60.0)
        .run(true)
        .unwrap();
    assert_ne!(a.trace, b.trace);
}

#[test]
fn counters_match_a_trace_recount() {
    for p in Preset::ALL {
        let sc = small(NetType::Vanet, p, 25, 2, 90.0);
        let out = sc.run(true).unwrap();
        let mut counts: BTreeMap<(String, bool), u64> = BTreeMap::new();
        for rec in out
            .trace
            .as_deref()
            .unwrap()
            .lines()
            .filter_map(TraceRecord::parse)
        {
            let rec = rec.unwrap();
            *counts
                .entry((rec.event.clone(), rec.packet == "data"))
                .or_default() += 1;
        }
        let get = |e: &str, data: bool| counts.get(&(e.to_string(), data)).copied().unwrap_or(0);
        let m = &out.metrics;
        assert_eq!(get("gen", true), m.data_sent);
        assert_eq!(get("recv", true), m.data_delivered);
        assert_eq!(get("drop", true), m.data_dropped);
        assert_eq!(get("tx", false), m.routing_packets);
        assert_eq!(get("rx", false), out.ledger.control_delivered);
        assert_eq!(get("gen", false), 0);
    }
}

#[test]
fn metrics_stay_in_range() {
    for net in [NetType::Manet, NetType::Vanet] {
        for p in Preset::ALL {
            let out = small(net, p, 15, 3, 120.0).run(false).unwrap();
            let m = &out.metrics;
            let pdr = m.pdr().unwrap();
            assert!((0.0..=100.0).contains(&pdr));
            if m.data_delivered > 0 {
                assert!(m.e2ed().unwrap() > 0.0);
                assert!(m.nro().unwrap() >= 0.0);
            } else {
                assert!(m.e2ed().is_err() && m.nro().is_err());
            }
        }
    }
}

#[test]
fn sweep_order_and_job_independence() {
    let base = small(NetType::Vanet, Preset::ALL[0], 10, 1, 40.0);
    let presets = [Preset::ALL[1], Preset::ALL[2], Preset::ALL[5]];
    let one = sweep(&base, &[5, 8], &[1, 2], &presets, 1, false).unwrap();
    let two = sweep(&base, &[5, 8], &[1, 2], &presets, 2, false).unwrap();
    assert!(one.failures.is_empty());
    assert_eq!(one.cells.len(), 3 * 2 * 2);
    assert_eq!(csv_bytes(&one.rows()), csv_bytes(&two.rows()));
    let order: Vec<(String, usize, u64)> = one
        .rows()
        .into_iter()
        .map(|r| (r.preset, r.nodes, r.seed))
        .collect();
    assert_eq!(order[0], ("aodv-mod".to_string(), 5, 1));
    assert_eq!(order[1], ("aodv-mod".to_string(), 5, 2));
    assert_eq!(order[2], ("aodv-mod".to_string(), 8, 1));
    assert_eq!(order[11], ("olsr-mod".to_string(), 8, 2));
    let back = read_csv(csv_bytes(&one.rows()).as_slice()).unwrap();
    assert_eq!(back.len(), 12);
    assert_eq!(back, one.rows());
    assert!(sweep(&base, &[], &[1], &presets, 1, false).is_err());
}

#[test]
fn single_cell_sweep_is_one_row() {
    let base = small(NetType::Manet, Preset::ALL[0], 4, 1, 30.0);
    let out = sweep(&base, &[4], &[1], &[Preset::ALL[3]], 1, false).unwrap();
    assert_eq!(out.rows().len(), 1);
}

#[test]
fn random_waypoint_speed_and_area() {
    let cfg = MobilityConfig::manet(21);
    for node in 0..10 {
        let tr = generate_trajectory(&cfg, node, 900.0).unwrap();
        let w = tr.waypoints();
        assert!(w.len() > 2);
        for seg in w.windows(2) {
            let v = seg[0].pos.dist(seg[1].pos) / (seg[1].arrive_t - seg[0].arrive_t);
            assert!((v - 40.0 / 3.6).abs() < 1e-9, "{v}");
        }
        for k in 0..=9000 {
            let p = tr.position_at(k as f64 * 0.1).unwrap();
            assert!(cfg.area.contains(p), "{p:?}");
        }
    }
}

#[test]
fn road_grid_stays_on_roads() {
    let mut cfg = MobilityConfig::vanet(8);
    cfg.grid_spacing = 100.0;
    let on_grid = |x: f64| (x / 100.0 - (x / 100.0).round()).abs() < 1e-9;
    for node in 0..10 {
        let tr = generate_trajectory(&cfg, node, 900.0).unwrap();
        for w in tr.waypoints() {
            assert!(on_grid(w.pos.x) || on_grid(w.pos.y), "{:?}", w.pos);
            assert!(cfg.area.contains(w.pos));
        }
        for seg in tr.waypoints().windows(2) {
            let (a, b) = (seg[0].pos, seg[1].pos);
            assert!((a.x - b.x).abs() < 1e-9 || (a.y - b.y).abs() < 1e-9);
        }
    }
}

#[test]
fn position_interpolates() {
    use adhoc_sim::mobility::{Trajectory, Waypoint};
    let tr = Trajectory::new(
        vec![
            Waypoint {
                pos: Point2::new(0.0, 0.0),
                arrive_t: 0.0,
            },
            Waypoint {
                pos: Point2::new(10.0, 0.0),
                arrive_t: 1.0,
            },
        ],
        2.0,
    )
    .unwrap();
    assert_eq!(tr.position_at(0.5).unwrap(), Point2::new(5.0, 0.0));
    assert_eq!(tr.position_at(0.0).unwrap(), Point2::new(0.0, 0.0));
    assert_eq!(tr.position_at(2.0).unwrap(), Point2::new(10.0, 0.0));
    assert!(tr.position_at(2.5).is_err());
}

#[test]
fn static_model_is_one_waypoint() {
    let mut cfg = MobilityConfig::manet(3);
    cfg.model = MobilityModel::Static;
    let tr = generate_trajectory(&cfg, 4, 900.0).unwrap();
    assert_eq!(tr.waypoints().len(), 1);
    assert_eq!(tr.position_at(0.0).unwrap(), tr.position_at(900.0).unwrap());
}

#[test]
fn trajectories_serialize_identically_and_round_trip() {
    let cfg = MobilityConfig::vanet(5);
    let gen = || {
        (0..4u32)
            .map(|i| (i, generate_trajectory(&cfg, i, 300.0).unwrap()))
            .collect::<Vec<_>>()
    };
    let a = gen();
    let b = gen();
    let text_a = write_trajectories(a.iter().map(|(i, t)| (*i, t)));
    let text_b = write_trajectories(b.iter().map(|(i, t)| (*i, t)));
    assert_eq!(text_a, text_b);
    let back = parse_trajectories(&text_a, 300.0).unwrap();
    for (i, t) in &a {
        assert_eq!(back[i].waypoints(), t.waypoints());
    }
}

#[test]
fn zero_area_is_rejected() {
    let mut cfg = MobilityConfig::manet(1);
    cfg.area.width = 0.0;
    assert!(generate_trajectory(&cfg, 0, 10.0).is_err());
}

#[test]
fn defaults_round_trip() {
    let sc = Scenario::from_config("[scenario]\nnet_type = vanet\n").unwrap();
    let again = Scenario::from_config(&sc.to_config()).unwrap();
    assert_eq!(sc, again);
    assert_eq!(again.horizon, 900.0);
    assert_eq!(again.traffic.packet_size, 1000);
    assert_eq!(again.mobility.speed_kph, 40.0);
    assert_eq!(again.sweep.node_counts, vec![10, 20, 30, 40, 50, 60, 70]);
}

#[test]
fn explicit_radio_overrides_pairing() {
    let sc =
        Scenario::from_config("[scenario]\nnet_type = manet\n[radio]\nmac = 802.11p\n").unwrap();
    assert_eq!(
        sc.radio,
        RadioConfig::for_profile(adhoc_sim::sim::MacProfile::Mac80211p)
    );
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn config_round_trips(
        vanet in any::<bool>(),
        preset in 0usize..6,
        n in 2usize..200,
        seed in any::<u32>(),
        horizon in 1u32..2000,
        speed in 1u32..200,
        flows in 1usize..30,
        rate in 1u32..20,
        counts in proptest::collection::vec(2usize..100, 1..5),
    ) {
        let net = if vanet { NetType::Vanet } else { NetType::Manet };
        let mut sc = Scenario::new(net);
        sc.preset = Preset::ALL[preset];
        sc.node_count = n;
        sc.seed = seed as u64;
        sc.horizon = horizon as f64 + 0.25;
        sc.mobility.speed_kph = speed as f64 / 4.0;
        sc.traffic.flows = flows;
        sc.traffic.rate = rate as f64 / 8.0;
        sc.traffic.start_min = 0.0;
        sc.traffic.start_max = sc.traffic.start_max.min(horizon as f64 / 2.0);
        sc.sweep.node_counts = counts;
        let text = sc.to_config();
        let back = Scenario::from_config(&text);
        prop_assert!(back.is_ok(), "{:?}\n{}", back.err(), text);
        prop_assert_eq!(back.unwrap(), sc);
    }

    #[test]
    fn neighbors_are_symmetric(pts in proptest::collection::vec((0.0f64..1000.0, 0.0f64..1000.0), 2..40)) {
        let pts: Vec<Point2> = pts.into_iter().map(|(x, y)| Point2::new(x, y)).collect();
        let nb = unit_disk_neighbors(&pts, 250.0);
        for (i, list) in nb.iter().enumerate() {
            for j in list {
                prop_assert!(j.index() != i);
                prop_assert!(nb[j.index()].iter().any(|k| k.index() == i));
                prop_assert!(pts[i].dist(pts[j.index()]) <= 250.0);
            }
        }
    }

    #[test]
    fn cbr_emission_count(rate in 0.5f64..20.0, start in 0.0f64..50.0, len in 0.1f64..60.0) {
        let stop = start + len;
        let pts = [Point2::new(0.0, 0.0), Point2::new(50.0, 0.0)];
        let setup = static_setup(
            &pts,
            Preset::ALL[2],
            RadioConfig::ideal(RANGE, 0.001),
            vec![flow(0, 1, rate, start, stop)],
            stop + 1.0,
            1,
            false,
        );
        let out = Simulator::new(setup).unwrap().run();
        prop_assert_eq!(out.metrics.data_sent, ((stop - start) * rate).floor() as u64);
    }
}

#[test]
fn kernel_link_forecast_tracks_true_motion() {
    use adhoc_sim::mobility::{Trajectory, Waypoint};
    use adhoc_sim::sim::NodeId;
    use adhoc_sim::time::SimTime;
    let horizon = 20.0;
    let mover = Trajectory::new(
        vec![
            Waypoint {
                pos: Point2::new(100.0, 0.0),
                arrive_t: 0.0,
            },
            Waypoint {
                pos: Point2::new(300.0, 0.0),
                arrive_t: 20.0,
            },
        ],
        horizon,
    )
    .unwrap();
    let mut setup = static_setup(
        &[Point2::new(0.0, 0.0), Point2::new(100.0, 0.0)],
        Preset::ALL[0],
        RadioConfig::ideal(RANGE, 0.001),
        Vec::new(),
        horizon,
        1,
        false,
    );
    setup.trajectories[1] = mover;
    let mut sim = Simulator::new(setup).unwrap();
    assert!(sim.link_forecast(NodeId(0), NodeId(1), 1.0).is_none());
    sim.run_until(SimTime::from_secs_f64(1.0));
    let f = sim
        .link_forecast(NodeId(0), NodeId(1), 1.0)
        .unwrap()
        .unwrap()
        .unwrap();
    assert!((f.speed - 10.0).abs() < 1e-6);
    assert!((f.expiry - 14.0).abs() < 1e-6);
    assert_eq!(f.prob, 1.0);
    sim.run_until(SimTime::from_secs_f64(16.0));
    assert!(sim.link_forecast(NodeId(0), NodeId(1), 1.0).is_none());
}
