#![allow(dead_code, clippy::needless_range_loop)]

use std::collections::{BTreeMap, BTreeSet};

use adhoc_sim::mobility::{Point2, Trajectory};
use adhoc_sim::routing::olsr::select_mprs;
use adhoc_sim::routing::{Agent, Preset, Protocol};
use adhoc_sim::sim::{NodeId, RadioConfig, SimSetup, Simulator};
use adhoc_sim::time::SimTime;
use adhoc_sim::traffic::FlowConfig;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, UnitCircle};

pub const RANGE: f64 = 250.0;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn static_setup(
    positions: &[Point2],
    preset: Preset,
    radio: RadioConfig,
    flows: Vec<FlowConfig>,
    horizon: f64,
    seed: u64,
    trace: bool,
) -> SimSetup {
    let params = preset.params();
    SimSetup {
        seed,
        horizon,
        radio,
        trajectories: positions
            .iter()
            .map(|&p| Trajectory::stationary(p, horizon))
            .collect(),
        agents: (0..positions.len())
            .map(|i| Agent::new(NodeId(i as u32), &params))
            .collect(),
        flows,
        trace,
    }
}

pub fn flow(src: u32, dst: u32, rate: f64, start: f64, stop: f64) -> FlowConfig {
    FlowConfig {
        src: NodeId(src),
        dst: NodeId(dst),
        packet_size: 1000,
        rate,
        start,
        stop,
    }
}

/// Random connected placement: every new node lands inside the radio disk
/// of a uniformly chosen earlier node.
pub fn random_connected(rng: &mut ChaCha8Rng, n: usize, range: f64) -> Vec<Point2> {
    let mut pts = vec![Point2::new(0.0, 0.0)];
    while pts.len() < n {
        let anchor = pts[rng.random_range(0..pts.len())];
        let r = range * 0.98 * rng.random::<f64>().sqrt();
        let a = rng.random_range(0.0..std::f64::consts::TAU);
        pts.push(Point2::new(anchor.x + r * a.cos(), anchor.y + r * a.sin()));
    }
    pts
}

pub fn adjacency_matrix(pts: &[Point2], range: f64) -> Vec<Vec<bool>> {
    let n = pts.len();
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| i != j && pts[i].dist(pts[j]) <= range)
                .collect()
        })
        .collect()
}

/// All-pairs hop counts by Floyd-Warshall.
pub fn hop_matrix(adj: &[Vec<bool>]) -> Vec<Vec<Option<u32>>> {
    let n = adj.len();
    let mut d = vec![vec![None; n]; n];
    for i in 0..n {
        d[i][i] = Some(0);
        for j in 0..n {
            if adj[i][j] {
                d[i][j] = Some(1);
            }
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if let (Some(a), Some(b)) = (d[i][k], d[k][j]) {
                    if d[i][j].is_none_or(|c| a + b < c) {
                        d[i][j] = Some(a + b);
                    }
                }
            }
        }
    }
    d
}

/// Runs a proactive protocol on a static placement and compares every
/// route against the brute-force hop matrix.
pub fn proactive_routes_match(pts: &[Point2], preset: Preset, settle: f64) -> Result<(), String> {
    assert_ne!(preset.protocol, Protocol::Aodv);
    let hops = hop_matrix(&adjacency_matrix(pts, RANGE));
    let setup = static_setup(
        pts,
        preset,
        RadioConfig::ideal(RANGE, 0.001),
        Vec::new(),
        settle + 1.0,
        1,
        false,
    );
    let mut sim = Simulator::new(setup).map_err(|e| e.to_string())?;
    sim.run_until(SimTime::from_secs_f64(settle));
    let n = pts.len();
    for s in 0..n {
        for t in 0..n {
            if s == t {
                continue;
            }
            let got = sim
                .route(NodeId(s as u32), NodeId(t as u32))
                .map(|r| r.hops);
            if got != hops[s][t] {
                return Err(format!(
                    "{preset} {s}->{t}: route hops {got:?}, shortest {:?}",
                    hops[s][t]
                ));
            }
        }
    }
    Ok(())
}

/// One fresh simulation per ordered pair; the source starts sending at 3 s
/// and the hop count is read as soon as the route appears.
pub fn aodv_hops_match(pts: &[Point2], preset: Preset) -> Result<(), String> {
    assert_eq!(preset.protocol, Protocol::Aodv);
    let hops = hop_matrix(&adjacency_matrix(pts, RANGE));
    let n = pts.len();
    for s in 0..n {
        for t in 0..n {
            if s == t {
                continue;
            }
            let setup = static_setup(
                pts,
                preset,
                RadioConfig::ideal(RANGE, 0.001),
                vec![flow(s as u32, t as u32, 1.0, 3.0, 4.0)],
                8.0,
                1,
                false,
            );
            let mut sim = Simulator::new(setup).map_err(|e| e.to_string())?;
            let (src, dst) = (NodeId(s as u32), NodeId(t as u32));
            sim.run_until(SimTime::from_secs_f64(3.0));
            let mut found = None;
            for step in 1..=500 {
                sim.run_until(SimTime::from_secs_f64(3.0 + step as f64 * 0.01));
                if let Some(r) = sim.route(src, dst) {
                    found = Some(r.hops);
                    break;
                }
            }
            if found != hops[s][t] {
                return Err(format!(
                    "{preset} {s}->{t}: discovered hops {found:?}, shortest {:?}",
                    hops[s][t]
                ));
            }
        }
    }
    Ok(())
}

/// Neighborhood of node 0 in a random graph, as MPR selection sees it.
pub struct Neighborhood {
    pub one_hop: BTreeSet<NodeId>,
    pub coverage: BTreeMap<NodeId, BTreeSet<NodeId>>,
    pub strict_two_hop: BTreeSet<NodeId>,
}

pub fn random_neighborhood(rng: &mut ChaCha8Rng, n: usize, p_edge: f64) -> Neighborhood {
    let mut adj = vec![vec![false; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            if rng.random_bool(p_edge) {
                adj[i][j] = true;
                adj[j][i] = true;
            }
        }
    }
    let me = 0;
    let one_hop: BTreeSet<NodeId> = (0..n)
        .filter(|&j| adj[me][j])
        .map(|j| NodeId(j as u32))
        .collect();
    let coverage: BTreeMap<NodeId, BTreeSet<NodeId>> = one_hop
        .iter()
        .map(|&a| {
            let reach = (0..n)
                .filter(|&j| j != me && adj[a.index()][j])
                .map(|j| NodeId(j as u32))
                .collect();
            (a, reach)
        })
        .collect();
    let strict_two_hop = coverage
        .values()
        .flatten()
        .copied()
        .filter(|x| !one_hop.contains(x))
        .collect();
    Neighborhood {
        one_hop,
        coverage,
        strict_two_hop,
    }
}

/// Smallest subset of one-hop neighbors covering every strict two-hop
/// neighbor, by exhaustive search.
pub fn minimum_cover(nb: &Neighborhood) -> usize {
    let cands: Vec<NodeId> = nb.one_hop.iter().copied().collect();
    let mut best = cands.len();
    for mask in 0u32..(1 << cands.len()) {
        let size = mask.count_ones() as usize;
        if size >= best {
            continue;
        }
        let covered: BTreeSet<NodeId> = cands
            .iter()
            .enumerate()
            .filter(|(i, _)| mask & (1 << i) != 0)
            .flat_map(|(_, c)| nb.coverage[c].iter().copied())
            .collect();
        if nb.strict_two_hop.is_subset(&covered) {
            best = size;
        }
    }
    best
}

/// Checks greedy MPR coverage and the factor-two bound.
pub fn check_mprs(nb: &Neighborhood) -> Result<(), String> {
    let mprs = select_mprs(&nb.one_hop, &nb.coverage);
    if !mprs.is_subset(&nb.one_hop) {
        return Err(format!("MPRs {mprs:?} not all one-hop neighbors"));
    }
    let covered: BTreeSet<NodeId> = mprs
        .iter()
        .flat_map(|m| nb.coverage[m].iter().copied())
        .collect();
    if !nb.strict_two_hop.is_subset(&covered) {
        return Err(format!("MPRs {mprs:?} leave two-hop nodes uncovered"));
    }
    let min = minimum_cover(nb);
    if mprs.len() > 2 * min {
        return Err(format!("{} MPRs, minimum cover {min}", mprs.len()));
    }
    Ok(())
}

/// Fraction of uniformly random unit directions that keep a node which
/// moves `z` meters from distance `d` within `range` of its peer.
pub fn mc_availability(rng: &mut ChaCha8Rng, d: f64, range: f64, z: f64, draws: u32) -> f64 {
    let mut inside = 0u32;
    for _ in 0..draws {
        let [ux, uy]: [f64; 2] = UnitCircle.sample(rng);
        let (x, y) = (d + z * ux, z * uy);
        if x * x + y * y <= range * range {
            inside += 1;
        }
    }
    inside as f64 / draws as f64
}

/// Straight-line relative motion from `p0` with velocity `v`.
pub fn distance_at(p0: [f64; 2], v: [f64; 2], t: f64) -> f64 {
    (p0[0] + v[0] * t).hypot(p0[1] + v[1] * t)
}

/// First multiple of `dt` after `t0` where the distance exceeds `range`,
/// measured from `t0`; `None` if it stays inside until `t0 + limit`.
pub fn stepped_exit(
    p0: [f64; 2],
    v: [f64; 2],
    t0: f64,
    range: f64,
    dt: f64,
    limit: f64,
) -> Option<f64> {
    let steps = (limit / dt).ceil() as u64;
    (0..=steps)
        .map(|k| k as f64 * dt)
        .find(|&s| distance_at(p0, v, t0 + s) > range)
}
