use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use thiserror::Error;

use super::trace::{TraceEvent, TraceWriter};
use super::{Action, Ctx, DataPacket, Dest, NodeId, Payload, RadioConfig, Timer, DATA_TTL};
use crate::linkmath::{self, DistanceSample, LinkForecast};
use crate::mobility::{Point2, Trajectory};
use crate::rng::{hash_words, stream, unit_interval};
use crate::routing::{Agent, RouteView};
use crate::time::SimTime;
use crate::traffic::{FlowConfig, RunMetrics};

/// Positions are resampled on this grid for neighbor and contention checks.
pub const MOBILITY_SAMPLE: SimTime = SimTime::from_millis(100);

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("invalid simulation setup: {0}")]
    Setup(String),
}

/// Everything a run needs, already validated by the scenario layer.
#[derive(Debug)]
pub struct SimSetup {
    pub seed: u64,
    pub horizon: f64,
    pub radio: RadioConfig,
    pub trajectories: Vec<Trajectory>,
    pub agents: Vec<Agent>,
    pub flows: Vec<FlowConfig>,
    pub trace: bool,
}

/// Packet conservation counters.
///
/// Data is counted per application packet. Control traffic is counted per
/// frame copy: a broadcast heard by three neighbors is three copies.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PacketLedger {
    pub data_sent: u64,
    pub data_delivered: u64,
    pub data_dropped: u64,
    pub data_in_flight: u64,
    pub control_sent: u64,
    pub control_delivered: u64,
    pub control_dropped: u64,
    pub control_in_flight: u64,
}

impl PacketLedger {
    pub fn data_balanced(&self) -> bool {
        self.data_sent == self.data_delivered + self.data_dropped + self.data_in_flight
    }

    pub fn control_balanced(&self) -> bool {
        self.control_sent == self.control_delivered + self.control_dropped + self.control_in_flight
    }
}

#[derive(Debug)]
pub struct RunOutput {
    pub metrics: RunMetrics,
    pub ledger: PacketLedger,
    /// Unicasts addressed to a node outside radio range.
    pub unicast_failures: u64,
    pub trace: Option<String>,
}

#[derive(Debug)]
enum Event {
    PacketRx {
        node: NodeId,
        from: NodeId,
        frame: u64,
        payload: Payload,
    },
    TimerFire {
        node: NodeId,
        timer: Timer,
    },
    MobilitySample,
    TrafficSend {
        flow: usize,
        seq: u64,
    },
}

#[derive(Debug)]
struct Scheduled {
    t: SimTime,
    seq: u64,
    event: Event,
}

impl PartialEq for Scheduled {
    fn eq(&self, other: &Self) -> bool {
        (self.t, self.seq) == (other.t, other.seq)
    }
}

impl Eq for Scheduled {}

impl PartialOrd for Scheduled {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Scheduled {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.t, self.seq).cmp(&(other.t, other.seq))
    }
}

/// Neighbor lists of a unit-disk graph with a closed boundary; each list is
/// sorted and excludes the node itself.
pub fn unit_disk_neighbors(positions: &[Point2], range: f64) -> Vec<Vec<NodeId>> {
    let mut out = vec![Vec::new(); positions.len()];
    for i in 0..positions.len() {
        for j in (i + 1)..positions.len() {
            if positions[i].dist(positions[j]) <= range {
                out[i].push(NodeId(j as u32));
                out[j].push(NodeId(i as u32));
            }
        }
    }
    for list in &mut out {
        list.sort_unstable();
    }
    out
}

/// Single-threaded discrete-event simulator. Events pop in `(time, insertion
/// order)` order, so a run is a pure function of its setup.
pub struct Simulator {
    now: SimTime,
    horizon: SimTime,
    queue: BinaryHeap<Reverse<Scheduled>>,
    next_seq: u64,
    agents: Vec<Agent>,
    trajectories: Vec<Trajectory>,
    positions: Vec<Point2>,
    neighbors: Vec<Vec<NodeId>>,
    radio: RadioConfig,
    flows: Vec<FlowConfig>,
    seed: u64,
    next_frame: u64,
    metrics: RunMetrics,
    ledger: PacketLedger,
    unicast_failures: u64,
    trace: Option<TraceWriter>,
}

impl Simulator {
    pub fn new(setup: SimSetup) -> Result<Self, SimError> {
        let n = setup.agents.len();
        if n < 2 {
            return Err(SimError::Setup("need at least two nodes".into()));
        }
        if setup.trajectories.len() != n {
            return Err(SimError::Setup(format!(
                "{} trajectories for {n} nodes",
                setup.trajectories.len()
            )));
        }
        if !(setup.horizon.is_finite() && setup.horizon > 0.0) {
            return Err(SimError::Setup("horizon must be positive".into()));
        }
        setup.radio.validate().map_err(SimError::Setup)?;
        for (i, tr) in setup.trajectories.iter().enumerate() {
            if tr.start() > 0.0 || tr.end() < setup.horizon {
                return Err(SimError::Setup(format!(
                    "trajectory of node {i} does not cover [0, {}]",
                    setup.horizon
                )));
            }
        }
        for f in &setup.flows {
            f.validate(setup.horizon, n).map_err(SimError::Setup)?;
        }

        let mobile = setup.trajectories.iter().any(|t| t.waypoints().len() > 1);
        let mut sim = Self {
            now: SimTime::ZERO,
            horizon: SimTime::from_secs_f64(setup.horizon),
            queue: BinaryHeap::new(),
            next_seq: 0,
            agents: setup.agents,
            trajectories: setup.trajectories,
            positions: Vec::new(),
            neighbors: Vec::new(),
            radio: setup.radio,
            flows: setup.flows,
            seed: setup.seed,
            next_frame: 0,
            metrics: RunMetrics::default(),
            ledger: PacketLedger::default(),
            unicast_failures: 0,
            trace: setup.trace.then(TraceWriter::new),
        };
        sim.sample_positions();
        if mobile {
            sim.push(MOBILITY_SAMPLE, Event::MobilitySample);
        }
        for idx in 0..sim.flows.len() {
            if sim.flows[idx].emission_count() > 0 {
                let t = sim.flows[idx].emission_time(0);
                sim.push(t, Event::TrafficSend { flow: idx, seq: 0 });
            }
        }
        for i in 0..n {
            let node = NodeId(i as u32);
            let mut ctx = Ctx::new(sim.now, node);
            sim.agents[i].start(&mut ctx);
            sim.apply(node, ctx.take_actions());
        }
        Ok(sim)
    }

    pub fn now(&self) -> SimTime {
        self.now
    }

    pub fn node_count(&self) -> usize {
        self.agents.len()
    }

    pub fn positions(&self) -> &[Point2] {
        &self.positions
    }

    /// Nodes within range of `node` at the latest mobility sample.
    pub fn neighbors(&self, node: NodeId) -> &[NodeId] {
        &self.neighbors[node.index()]
    }

    pub fn agent(&self, node: NodeId) -> &Agent {
        &self.agents[node.index()]
    }

    pub fn route(&self, from: NodeId, to: NodeId) -> Option<RouteView> {
        self.agents[from.index()].route(to, self.now)
    }

    pub fn metrics(&self) -> &RunMetrics {
        &self.metrics
    }

    /// Exact distance between two nodes at time `t`.
    pub fn distance_at(&self, a: NodeId, b: NodeId, t: f64) -> Option<f64> {
        let pa = self.trajectories[a.index()].position_at(t).ok()?;
        let pb = self.trajectories[b.index()].position_at(t).ok()?;
        Some(pa.dist(pb))
    }

    /// Forecast for the link `a`-`b` from three exact distance samples taken
    /// one mobility step apart, ending now.
    pub fn link_forecast(
        &self,
        a: NodeId,
        b: NodeId,
        lookahead: f64,
    ) -> Option<Result<Option<LinkForecast>, linkmath::LinkMathError>> {
        let step = MOBILITY_SAMPLE.as_secs_f64();
        let now = self.now.as_secs_f64();
        if now < 2.0 * step {
            return None;
        }
        let mut samples = [DistanceSample { t: 0.0, dist: 0.0 }; 3];
        for (k, s) in samples.iter_mut().enumerate() {
            let t = now - (2 - k) as f64 * step;
            *s = DistanceSample {
                t,
                dist: self.distance_at(a, b, t)?,
            };
        }
        let d = samples[2].dist;
        if d > self.radio.range {
            return None;
        }
        Some(linkmath::forecast(samples, self.radio.range, lookahead))
    }

    /// Processes every event scheduled at or before `until` (capped at the
    /// horizon) and advances the clock to it.
    pub fn run_until(&mut self, until: SimTime) {
        let until = until.min(self.horizon);
        while let Some(Reverse(head)) = self.queue.peek() {
            if head.t > until {
                break;
            }
            let Reverse(Scheduled { t, event, .. }) = self.queue.pop().expect("peeked");
            debug_assert!(t >= self.now);
            self.now = t;
            self.dispatch(event);
        }
        self.now = self.now.max(until);
    }

    pub fn run(mut self) -> RunOutput {
        self.run_until(self.horizon);
        self.finish()
    }

    /// Stops the run and closes the books: whatever is still queued or buffered
    /// counts as in flight.
    pub fn finish(self) -> RunOutput {
        let mut ledger = self.ledger;
        for Reverse(s) in &self.queue {
            if let Event::PacketRx { payload, .. } = &s.event {
                if payload.is_data() {
                    ledger.data_in_flight += 1;
                } else {
                    ledger.control_in_flight += 1;
                }
            }
        }
        ledger.data_in_flight += self
            .agents
            .iter()
            .map(|a| a.buffered_data() as u64)
            .sum::<u64>();
        RunOutput {
            metrics: self.metrics,
            ledger,
            unicast_failures: self.unicast_failures,
            trace: self.trace.map(TraceWriter::into_string),
        }
    }

    fn push(&mut self, t: SimTime, event: Event) {
        let seq = self.next_seq;
        self.next_seq += 1;
        self.queue.push(Reverse(Scheduled { t, seq, event }));
    }

    fn sample_positions(&mut self) {
        let t = self.now.as_secs_f64();
        self.positions = self
            .trajectories
            .iter()
            .map(|tr| tr.position_at(t).expect("trajectory covers the horizon"))
            .collect();
        self.neighbors = unit_disk_neighbors(&self.positions, self.radio.range);
    }

    fn dispatch(&mut self, event: Event) {
        match event {
            Event::MobilitySample => {
                self.sample_positions();
                self.push(self.now + MOBILITY_SAMPLE, Event::MobilitySample);
            }
            Event::TrafficSend { flow, seq } => {
                let f = &self.flows[flow];
                let pkt = DataPacket {
                    id: self.next_frame,
                    flow: flow as u32,
                    seq: seq as u32,
                    src: f.src,
                    dst: f.dst,
                    size: f.packet_size,
                    created: self.now,
                    ttl: DATA_TTL,
                    hops: 0,
                };
                self.next_frame += 1;
                if seq + 1 < f.emission_count() {
                    let next = f.emission_time(seq + 1);
                    self.push(next, Event::TrafficSend { flow, seq: seq + 1 });
                }
                let src = pkt.src;
                self.metrics.data_sent += 1;
                self.ledger.data_sent += 1;
                let payload = Payload::Data(pkt);
                self.log(TraceEvent::Gen, src, &payload, None);
                let Payload::Data(pkt) = payload else {
                    unreachable!()
                };
                let mut ctx = Ctx::new(self.now, src);
                self.agents[src.index()].on_app_data(&mut ctx, pkt);
                self.apply(src, ctx.take_actions());
            }
            Event::TimerFire { node, timer } => {
                let mut ctx = Ctx::new(self.now, node);
                self.agents[node.index()].on_timer(&mut ctx, timer);
                self.apply(node, ctx.take_actions());
            }
            Event::PacketRx {
                node,
                from,
                frame,
                payload,
            } => {
                self.log_frame(TraceEvent::Rx, node, frame, &payload, None);
                if !payload.is_data() {
                    self.ledger.control_delivered += 1;
                }
                let mut ctx = Ctx::new(self.now, node);
                self.agents[node.index()].on_receive(&mut ctx, from, payload);
                self.apply(node, ctx.take_actions());
            }
        }
    }

    fn apply(&mut self, node: NodeId, actions: Vec<Action>) {
        for action in actions {
            match action {
                Action::Send { to, payload } => {
                    if let Some((next_hop, bounced)) = self.transmit(node, to, payload) {
                        let mut ctx = Ctx::new(self.now, node);
                        self.agents[node.index()].on_link_failure(&mut ctx, next_hop, bounced);
                        self.apply(node, ctx.take_actions());
                    }
                }
                Action::Timer { at, timer } => {
                    debug_assert!(at >= self.now, "timer scheduled in the past");
                    self.push(at.max(self.now), Event::TimerFire { node, timer });
                }
                Action::Deliver(pkt) => {
                    let latency = self.now - pkt.created;
                    self.metrics.record_delivery(latency);
                    self.ledger.data_delivered += 1;
                    let payload = Payload::Data(pkt);
                    self.log(TraceEvent::Recv, node, &payload, None);
                }
                Action::Drop(pkt, _reason) => {
                    self.metrics.data_dropped += 1;
                    self.ledger.data_dropped += 1;
                    let payload = Payload::Data(pkt);
                    self.log(TraceEvent::Drop, node, &payload, None);
                }
            }
        }
    }

    /// Puts one frame on the air. A unicast to a node outside range is handed
    /// back to the sender as a link failure.
    fn transmit(&mut self, src: NodeId, to: Dest, payload: Payload) -> Option<(NodeId, Payload)> {
        let frame = match &payload {
            Payload::Data(d) => d.id,
            Payload::Control(_) => {
                self.next_frame += 1;
                self.next_frame - 1
            }
        };
        let ident = match &payload {
            Payload::Data(d) => hash_words(&[0, d.flow as u64, d.seq as u64]),
            Payload::Control(c) => hash_words(&[1, c.ident()]),
        };
        if let Payload::Control(c) = &payload {
            self.metrics.routing_packets += 1;
            self.metrics.routing_bytes += c.size() as u64;
        }
        self.log_frame(TraceEvent::Tx, src, frame, &payload, Some(to));

        let in_range = &self.neighbors[src.index()];
        let contenders = in_range.len().saturating_sub(1);
        let delay = self.radio.delay(contenders);
        let loss = self.radio.loss(contenders);

        let receivers: Vec<NodeId> = match to {
            Dest::Broadcast => in_range.clone(),
            Dest::Unicast(dst) => {
                if in_range.binary_search(&dst).is_ok() {
                    vec![dst]
                } else {
                    self.unicast_failures += 1;
                    if !payload.is_data() {
                        self.ledger.control_sent += 1;
                        self.ledger.control_dropped += 1;
                        self.log_frame(TraceEvent::Drop, src, frame, &payload, Some(to));
                    }
                    return Some((dst, payload));
                }
            }
        };

        let is_data = payload.is_data();
        let last = receivers.len().saturating_sub(1);
        let mut payload = Some(payload);
        for (i, rx) in receivers.into_iter().enumerate() {
            let copy = if i == last {
                payload.take().expect("one copy per receiver")
            } else {
                payload.clone().expect("one copy per receiver")
            };
            if !is_data {
                self.ledger.control_sent += 1;
            }
            let draw = unit_interval(hash_words(&[
                self.seed,
                stream::CHANNEL,
                ident,
                src.0 as u64,
                rx.0 as u64,
            ]));
            if draw < loss {
                if is_data {
                    self.metrics.data_dropped += 1;
                    self.ledger.data_dropped += 1;
                } else {
                    self.ledger.control_dropped += 1;
                }
                self.log_frame(TraceEvent::Drop, rx, frame, &copy, Some(to));
                continue;
            }
            self.push(
                self.now + delay,
                Event::PacketRx {
                    node: rx,
                    from: src,
                    frame,
                    payload: copy,
                },
            );
        }
        None
    }

    fn log(&mut self, event: TraceEvent, node: NodeId, payload: &Payload, to: Option<Dest>) {
        let frame = match payload {
            Payload::Data(d) => d.id,
            Payload::Control(_) => u64::MAX,
        };
        self.log_frame(event, node, frame, payload, to);
    }

    fn log_frame(
        &mut self,
        event: TraceEvent,
        node: NodeId,
        frame: u64,
        payload: &Payload,
        to: Option<Dest>,
    ) {
        if let Some(tr) = self.trace.as_mut() {
            tr.record(self.now, event, node, frame, payload, to);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_disk_is_closed_and_symmetric() {
        let pts = [
            Point2::new(0.0, 0.0),
            Point2::new(0.0, 0.0),
            Point2::new(250.0, 0.0),
            Point2::new(500.1, 0.0),
        ];
        let nb = unit_disk_neighbors(&pts, 250.0);
        assert_eq!(nb[0], vec![NodeId(1), NodeId(2)]);
        assert_eq!(nb[1], vec![NodeId(0), NodeId(2)]);
        assert_eq!(nb[2], vec![NodeId(0), NodeId(1)]);
        assert!(nb[3].is_empty());
    }

    #[test]
    fn queue_orders_by_time_then_insertion() {
        let mut heap = BinaryHeap::new();
        for (t, seq) in [(5, 0), (1, 1), (5, 2), (1, 3)] {
            heap.push(Reverse(Scheduled {
                t: SimTime::from_millis(t),
                seq,
                event: Event::MobilitySample,
            }));
        }
        let order: Vec<u64> = std::iter::from_fn(|| heap.pop().map(|Reverse(s)| s.seq)).collect();
        assert_eq!(order, vec![1, 3, 0, 2]);
    }
}
