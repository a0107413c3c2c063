//! Optimized link state routing.
//!
//! HELLOs sense links and two-hop neighborhoods, each node picks multipoint
//! relays (MPRs) that cover its strict two-hop neighbors, and topology
//! control (TC) messages carrying MPR-selector sets are flooded through MPRs
//! only.

use std::collections::{BTreeMap, BTreeSet};

use super::{bfs_routes, Adjacency, RouteView};
use crate::rng::hash_words;
use crate::sim::{Control, Ctx, DataPacket, DropReason, NodeId, Payload, Timer as SimTimer};
use crate::time::SimTime;

/// How long a forwarded message is remembered for duplicate suppression.
pub const DUPLICATE_HOLD: SimTime = SimTime::from_secs(30);
pub const TC_TTL: u8 = 255;

#[derive(Debug, Clone, PartialEq)]
pub struct OlsrParams {
    pub hello_interval: f64,
    pub tc_interval: f64,
    /// Entry validity in multiples of the interval that refreshes it.
    pub hold_time_multiplier: u32,
}

impl OlsrParams {
    pub fn default_preset() -> Self {
        Self {
            hello_interval: 2.0,
            tc_interval: 5.0,
            hold_time_multiplier: 3,
        }
    }

    pub fn modified_preset() -> Self {
        Self {
            hello_interval: 1.0,
            tc_interval: 3.0,
            ..Self::default_preset()
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        for (name, v) in [
            ("hello_interval", self.hello_interval),
            ("tc_interval", self.tc_interval),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(format!("olsr {name} must be positive"));
            }
        }
        if self.hold_time_multiplier < 3 {
            return Err("olsr hold_time_multiplier must be at least 3".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum LinkStatus {
    Asym,
    Sym,
    /// Symmetric and selected as MPR by the HELLO's sender.
    Mpr,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Hello {
    pub sender: NodeId,
    pub seq: u32,
    pub neighbors: Vec<(NodeId, LinkStatus)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tc {
    pub origin: NodeId,
    pub msg_seq: u32,
    /// Advertised neighbor sequence number; bumps when the set changes.
    pub ansn: u32,
    pub selectors: Vec<NodeId>,
    pub ttl: u8,
    pub hops: u8,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Message {
    Hello(Hello),
    Tc(Tc),
}

impl Message {
    pub fn kind(&self) -> &'static str {
        match self {
            Message::Hello(_) => "olsr_hello",
            Message::Tc(_) => "olsr_tc",
        }
    }

    pub fn size(&self) -> u32 {
        match self {
            Message::Hello(h) => 16 + 8 * h.neighbors.len() as u32,
            Message::Tc(t) => 16 + 4 * t.selectors.len() as u32,
        }
    }

    pub fn ttl(&self) -> u8 {
        match self {
            Message::Hello(_) => 1,
            Message::Tc(t) => t.ttl,
        }
    }

    pub fn origin(&self) -> NodeId {
        match self {
            Message::Hello(h) => h.sender,
            Message::Tc(t) => t.origin,
        }
    }

    pub fn ident(&self) -> u64 {
        match self {
            Message::Hello(h) => hash_words(&[30, h.sender.0 as u64, h.seq as u64]),
            Message::Tc(t) => hash_words(&[31, t.origin.0 as u64, t.msg_seq as u64]),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Timer {
    Hello,
    Tc,
}

/// Greedy MPR selection.
///
/// Nodes that are the only cover of some strict two-hop neighbor go in first;
/// then the node covering the most still-uncovered two-hop neighbors is added
/// until everything is covered, ties to the lowest id. `coverage` must not
/// mention the selecting node itself.
pub fn select_mprs(
    one_hop: &BTreeSet<NodeId>,
    coverage: &BTreeMap<NodeId, BTreeSet<NodeId>>,
) -> BTreeSet<NodeId> {
    let cover: BTreeMap<NodeId, BTreeSet<NodeId>> = coverage
        .iter()
        .filter(|(n1, _)| one_hop.contains(n1))
        .map(|(&n1, set)| (n1, set.difference(one_hop).copied().collect()))
        .collect();
    let mut uncovered: BTreeSet<NodeId> = cover.values().flatten().copied().collect();
    let mut mprs = BTreeSet::new();

    for n2 in &uncovered {
        let mut coverers = cover.iter().filter(|(_, s)| s.contains(n2));
        if let (Some((&only, _)), None) = (coverers.next(), coverers.next()) {
            mprs.insert(only);
        }
    }
    for m in &mprs {
        for n2 in &cover[m] {
            uncovered.remove(n2);
        }
    }
    while !uncovered.is_empty() {
        let mut best: Option<(usize, NodeId)> = None;
        for (&n1, set) in &cover {
            if mprs.contains(&n1) {
                continue;
            }
            let gain = set.intersection(&uncovered).count();
            if gain > best.map_or(0, |(g, _)| g) {
                best = Some((gain, n1));
            }
        }
        let Some((_, pick)) = best else { break };
        mprs.insert(pick);
        for n2 in &cover[&pick] {
            uncovered.remove(n2);
        }
    }
    mprs
}

/// Snapshot of a node's neighborhood state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NeighborSet {
    pub one_hop: BTreeSet<NodeId>,
    pub two_hop: BTreeMap<NodeId, BTreeSet<NodeId>>,
    pub mprs: BTreeSet<NodeId>,
    pub selectors: BTreeSet<NodeId>,
}

/// What happened to a received TC.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TcOutcome {
    Processed { forwarded: bool },
    Duplicate,
    Stale,
    NotSymmetric,
    Own,
}

#[derive(Debug, Clone, Copy)]
struct Link {
    heard_until: SimTime,
    sym_until: SimTime,
}

#[derive(Debug, Clone)]
struct TopologyEntry {
    ansn: u32,
    selectors: BTreeSet<NodeId>,
    expires: SimTime,
}

#[derive(Debug)]
pub struct OlsrAgent {
    me: NodeId,
    params: OlsrParams,
    links: BTreeMap<NodeId, Link>,
    two_hop: BTreeMap<NodeId, (BTreeSet<NodeId>, SimTime)>,
    mprs: BTreeSet<NodeId>,
    selectors: BTreeMap<NodeId, SimTime>,
    topology: BTreeMap<NodeId, TopologyEntry>,
    duplicates: BTreeMap<(NodeId, u32), SimTime>,
    hello_seq: u32,
    msg_seq: u32,
    ansn: u32,
    advertised: BTreeSet<NodeId>,
    last_sym: BTreeSet<NodeId>,
    routes: BTreeMap<NodeId, RouteView>,
    dirty: bool,
}

impl OlsrAgent {
    pub fn new(me: NodeId, params: OlsrParams) -> Self {
        Self {
            me,
            params,
            links: BTreeMap::new(),
            two_hop: BTreeMap::new(),
            mprs: BTreeSet::new(),
            selectors: BTreeMap::new(),
            topology: BTreeMap::new(),
            duplicates: BTreeMap::new(),
            hello_seq: 0,
            msg_seq: 0,
            ansn: 0,
            advertised: BTreeSet::new(),
            last_sym: BTreeSet::new(),
            routes: BTreeMap::new(),
            dirty: false,
        }
    }

    fn hello_period(&self) -> SimTime {
        SimTime::from_secs_f64(self.params.hello_interval)
    }

    fn tc_period(&self) -> SimTime {
        SimTime::from_secs_f64(self.params.tc_interval)
    }

    fn neighbor_hold(&self) -> SimTime {
        self.hello_period()
            .mul(self.params.hold_time_multiplier as u64)
    }

    fn topology_hold(&self) -> SimTime {
        self.tc_period()
            .mul(self.params.hold_time_multiplier as u64)
    }

    pub fn start(&mut self, ctx: &mut Ctx) {
        ctx.schedule(self.hello_period(), SimTimer::Olsr(Timer::Hello));
        ctx.schedule(self.tc_period(), SimTimer::Olsr(Timer::Tc));
    }

    pub fn on_timer(&mut self, ctx: &mut Ctx, timer: Timer) {
        match timer {
            Timer::Hello => {
                let hello = self.emit_hello(ctx.now);
                ctx.broadcast(Control::Olsr(Message::Hello(hello)));
                ctx.schedule(self.hello_period(), SimTimer::Olsr(Timer::Hello));
            }
            Timer::Tc => {
                if let Some(tc) = self.emit_tc(ctx.now) {
                    ctx.broadcast(Control::Olsr(Message::Tc(tc)));
                }
                ctx.schedule(self.tc_period(), SimTimer::Olsr(Timer::Tc));
            }
        }
    }

    /// HELLO listing every heard neighbor with its link status.
    pub fn emit_hello(&mut self, now: SimTime) -> Hello {
        self.expire(now);
        self.hello_seq += 1;
        let neighbors = self
            .links
            .iter()
            .map(|(&n, link)| {
                let status = if link.sym_until >= now {
                    if self.mprs.contains(&n) {
                        LinkStatus::Mpr
                    } else {
                        LinkStatus::Sym
                    }
                } else {
                    LinkStatus::Asym
                };
                (n, status)
            })
            .collect();
        Hello {
            sender: self.me,
            seq: self.hello_seq,
            neighbors,
        }
    }

    /// TC advertising the MPR-selector set; nothing when the set is empty.
    pub fn emit_tc(&mut self, now: SimTime) -> Option<Tc> {
        self.expire(now);
        let current: BTreeSet<NodeId> = self.selectors.keys().copied().collect();
        if current.is_empty() {
            return None;
        }
        if current != self.advertised {
            self.ansn = self.ansn.wrapping_add(1);
            self.advertised = current.clone();
        }
        self.msg_seq = self.msg_seq.wrapping_add(1);
        Some(Tc {
            origin: self.me,
            msg_seq: self.msg_seq,
            ansn: self.ansn,
            selectors: current.into_iter().collect(),
            ttl: TC_TTL,
            hops: 0,
        })
    }

    pub fn on_message(&mut self, ctx: &mut Ctx, from: NodeId, msg: Message) {
        match msg {
            Message::Hello(h) => self.on_hello(ctx.now, from, &h),
            Message::Tc(tc) => {
                self.on_tc(ctx, from, tc);
            }
        }
    }

    pub fn on_hello(&mut self, now: SimTime, from: NodeId, hello: &Hello) {
        self.expire(now);
        let before = (
            self.is_symmetric(from, now),
            self.two_hop.get(&from).map(|(set, _)| set.clone()),
        );
        let until = now + self.neighbor_hold();
        let mine = hello
            .neighbors
            .iter()
            .find(|(n, _)| *n == self.me)
            .map(|&(_, s)| s);
        let link = self.links.entry(from).or_insert(Link {
            heard_until: until,
            sym_until: SimTime::ZERO,
        });
        link.heard_until = until;
        if mine.is_some() {
            link.sym_until = until;
        }
        let symmetric = link.sym_until >= now && link.sym_until > SimTime::ZERO;

        if symmetric {
            let reach: BTreeSet<NodeId> = hello
                .neighbors
                .iter()
                .filter(|(n, s)| *n != self.me && *s != LinkStatus::Asym)
                .map(|&(n, _)| n)
                .collect();
            self.two_hop.insert(from, (reach, until));
            if mine == Some(LinkStatus::Mpr) {
                self.selectors.insert(from, until);
            } else {
                self.selectors.remove(&from);
            }
        } else {
            self.two_hop.remove(&from);
            self.selectors.remove(&from);
        }
        let after = (
            symmetric,
            self.two_hop.get(&from).map(|(set, _)| set.clone()),
        );
        if before != after {
            self.last_sym = self.symmetric_neighbors(now);
            self.refresh_mprs(now);
            self.dirty = true;
        }
    }

    /// Processes a TC and re-floods it when the previous hop picked this node
    /// as an MPR.
    pub fn on_tc(&mut self, ctx: &mut Ctx, from: NodeId, tc: Tc) -> TcOutcome {
        let now = ctx.now;
        self.expire(now);
        if !self.is_symmetric(from, now) {
            return TcOutcome::NotSymmetric;
        }
        if tc.origin == self.me {
            return TcOutcome::Own;
        }
        let key = (tc.origin, tc.msg_seq);
        if self.duplicates.contains_key(&key) {
            return TcOutcome::Duplicate;
        }
        self.duplicates.insert(key, now + DUPLICATE_HOLD);
        if let Some(cur) = self.topology.get(&tc.origin) {
            if cur.ansn > tc.ansn {
                return TcOutcome::Stale;
            }
        }
        let selectors: BTreeSet<NodeId> = tc.selectors.iter().copied().collect();
        let changed = self
            .topology
            .get(&tc.origin)
            .is_none_or(|cur| cur.selectors != selectors);
        self.topology.insert(
            tc.origin,
            TopologyEntry {
                ansn: tc.ansn,
                selectors,
                expires: now + self.topology_hold(),
            },
        );
        if changed {
            self.dirty = true;
        }

        let forward = self.selectors.contains_key(&from) && tc.ttl > 1;
        if forward {
            ctx.broadcast(Control::Olsr(Message::Tc(Tc {
                ttl: tc.ttl - 1,
                hops: tc.hops.saturating_add(1),
                ..tc
            })));
        }
        TcOutcome::Processed { forwarded: forward }
    }

    pub fn route_data(&mut self, ctx: &mut Ctx, mut pkt: DataPacket) {
        if pkt.dst == self.me {
            ctx.deliver(pkt);
            return;
        }
        if pkt.ttl == 0 {
            ctx.drop_data(pkt, DropReason::TtlExpired);
            return;
        }
        self.expire(ctx.now);
        self.recompute(ctx.now);
        match self.routes.get(&pkt.dst) {
            Some(r) => {
                pkt.ttl -= 1;
                pkt.hops = pkt.hops.saturating_add(1);
                ctx.unicast(r.next_hop, Payload::Data(pkt));
            }
            None => ctx.drop_data(pkt, DropReason::NoRoute),
        }
    }

    pub fn on_unicast_failure(&mut self, ctx: &mut Ctx, next_hop: NodeId, payload: Payload) {
        if self.links.remove(&next_hop).is_some() {
            self.two_hop.remove(&next_hop);
            self.selectors.remove(&next_hop);
            self.refresh_mprs(ctx.now);
            self.dirty = true;
        }
        if let Payload::Data(pkt) = payload {
            ctx.drop_data(pkt, DropReason::LinkFailure);
        }
    }

    /// Route from the state valid at `now`.
    pub fn route(&self, dest: NodeId, now: SimTime) -> Option<RouteView> {
        bfs_routes(self.me, &self.adjacency(now))
            .get(&dest)
            .copied()
    }

    pub fn neighbor_set(&self, now: SimTime) -> NeighborSet {
        let one_hop = self.symmetric_neighbors(now);
        NeighborSet {
            two_hop: self.coverage(&one_hop, now),
            one_hop,
            mprs: self.mprs.clone(),
            selectors: self.selectors.keys().copied().collect(),
        }
    }

    fn is_symmetric(&self, n: NodeId, now: SimTime) -> bool {
        self.links
            .get(&n)
            .is_some_and(|l| l.sym_until >= now && l.sym_until > SimTime::ZERO)
    }

    fn symmetric_neighbors(&self, now: SimTime) -> BTreeSet<NodeId> {
        self.links
            .keys()
            .copied()
            .filter(|&n| self.is_symmetric(n, now))
            .collect()
    }

    fn coverage(
        &self,
        one_hop: &BTreeSet<NodeId>,
        now: SimTime,
    ) -> BTreeMap<NodeId, BTreeSet<NodeId>> {
        self.two_hop
            .iter()
            .filter(|(n1, (_, exp))| one_hop.contains(n1) && *exp >= now)
            .map(|(&n1, (set, _))| (n1, set.clone()))
            .collect()
    }

    fn refresh_mprs(&mut self, now: SimTime) {
        let one_hop = self.symmetric_neighbors(now);
        let coverage = self.coverage(&one_hop, now);
        self.mprs = select_mprs(&one_hop, &coverage);
    }

    fn expire(&mut self, now: SimTime) {
        let links_before = self.links.len();
        self.links.retain(|_, l| l.heard_until >= now);
        let two_before = self.two_hop.len();
        self.two_hop.retain(|_, (_, exp)| *exp >= now);
        let sel_before = self.selectors.len();
        self.selectors.retain(|_, exp| *exp >= now);
        let topo_before = self.topology.len();
        self.topology.retain(|_, e| e.expires >= now);
        self.duplicates.retain(|_, exp| *exp >= now);
        let sym = self.symmetric_neighbors(now);
        let neighborhood_changed = links_before != self.links.len()
            || two_before != self.two_hop.len()
            || sel_before != self.selectors.len()
            || sym != self.last_sym;
        if neighborhood_changed {
            self.last_sym = sym;
            self.refresh_mprs(now);
        }
        if neighborhood_changed || topo_before != self.topology.len() {
            self.dirty = true;
        }
    }

    fn adjacency(&self, now: SimTime) -> Adjacency {
        let mut adj = Adjacency::new();
        let one_hop = self.symmetric_neighbors(now);
        for (n1, reach) in self.coverage(&one_hop, now) {
            adj.entry(n1).or_default().extend(reach);
        }
        adj.insert(self.me, one_hop);
        for (&origin, e) in self.topology.iter().filter(|(_, e)| e.expires >= now) {
            adj.entry(origin)
                .or_default()
                .extend(e.selectors.iter().copied());
        }
        adj
    }

    fn recompute(&mut self, now: SimTime) {
        if !self.dirty {
            return;
        }
        self.routes = bfs_routes(self.me, &self.adjacency(now));
        self.dirty = false;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(v: &[u32]) -> BTreeSet<NodeId> {
        v.iter().copied().map(NodeId).collect()
    }

    #[test]
    fn presets() {
        let d = OlsrParams::default_preset();
        assert_eq!((d.hello_interval, d.tc_interval), (2.0, 5.0));
        let m = OlsrParams::modified_preset();
        assert_eq!((m.hello_interval, m.tc_interval), (1.0, 3.0));
        assert_eq!(m.hold_time_multiplier, 3);
        assert!(OlsrParams {
            hold_time_multiplier: 2,
            ..d
        }
        .validate()
        .is_err());
    }

    #[test]
    fn fully_connected_needs_no_mprs() {
        // Node 0's view of a 5-clique: every other node is one hop away.
        let one = ids(&[1, 2, 3, 4]);
        let cov: BTreeMap<_, _> = one
            .iter()
            .map(|&n| (n, one.iter().copied().filter(|&m| m != n).collect()))
            .collect();
        assert!(select_mprs(&one, &cov).is_empty());
    }

    #[test]
    fn star_leaf_picks_center() {
        // Leaf 1 hangs off center 0, which also reaches 2, 3, 4.
        let one = ids(&[0]);
        let cov = BTreeMap::from([(NodeId(0), ids(&[2, 3, 4]))]);
        assert_eq!(select_mprs(&one, &cov), ids(&[0]));
    }

    #[test]
    fn greedy_prefers_wider_cover_then_lower_id() {
        let one = ids(&[1, 2, 3]);
        let cov = BTreeMap::from([
            (NodeId(1), ids(&[10, 11])),
            (NodeId(2), ids(&[10, 11])),
            (NodeId(3), ids(&[11])),
        ]);
        assert_eq!(select_mprs(&one, &cov), ids(&[1]));
    }

    fn hello(sender: u32, seq: u32, nbrs: &[(u32, LinkStatus)]) -> Hello {
        Hello {
            sender: NodeId(sender),
            seq,
            neighbors: nbrs.iter().map(|&(n, s)| (NodeId(n), s)).collect(),
        }
    }

    #[test]
    fn hello_handshake_builds_symmetric_link() {
        let mut a = OlsrAgent::new(NodeId(0), OlsrParams::default_preset());
        let t = SimTime::from_secs(2);
        a.on_hello(t, NodeId(1), &hello(1, 1, &[]));
        assert!(a.neighbor_set(t).one_hop.is_empty());
        let h = a.emit_hello(t);
        assert_eq!(h.neighbors, vec![(NodeId(1), LinkStatus::Asym)]);
        a.on_hello(
            t,
            NodeId(1),
            &hello(1, 2, &[(0, LinkStatus::Asym), (5, LinkStatus::Sym)]),
        );
        let ns = a.neighbor_set(t);
        assert_eq!(ns.one_hop, ids(&[1]));
        assert_eq!(ns.two_hop[&NodeId(1)], ids(&[5]));
        assert_eq!(ns.mprs, ids(&[1]));
        assert_eq!(
            a.emit_hello(t).neighbors,
            vec![(NodeId(1), LinkStatus::Mpr)]
        );
    }

    #[test]
    fn empty_selector_set_suppresses_tc() {
        let mut a = OlsrAgent::new(NodeId(0), OlsrParams::default_preset());
        assert_eq!(a.emit_tc(SimTime::from_secs(5)), None);
        let t = SimTime::from_secs(6);
        a.on_hello(t, NodeId(1), &hello(1, 1, &[(0, LinkStatus::Mpr)]));
        let tc = a.emit_tc(t).unwrap();
        assert_eq!(tc.selectors, vec![NodeId(1)]);
        assert_eq!(tc.ansn, 1);
        assert_eq!(a.emit_tc(t).unwrap().ansn, 1);
    }

    fn tc(origin: u32, msg_seq: u32, ansn: u32, sel: &[u32]) -> Tc {
        Tc {
            origin: NodeId(origin),
            msg_seq,
            ansn,
            selectors: sel.iter().copied().map(NodeId).collect(),
            ttl: TC_TTL,
            hops: 0,
        }
    }

    /// Node 0 with symmetric neighbor 1; `selector` decides whether 1 picked
    /// node 0 as an MPR.
    fn agent_with_neighbor(selector: bool) -> (OlsrAgent, SimTime) {
        let mut a = OlsrAgent::new(NodeId(0), OlsrParams::default_preset());
        let t = SimTime::from_secs(4);
        let status = if selector {
            LinkStatus::Mpr
        } else {
            LinkStatus::Sym
        };
        a.on_hello(
            t,
            NodeId(1),
            &hello(1, 1, &[(0, status), (7, LinkStatus::Sym)]),
        );
        (a, t)
    }

    #[test]
    fn tc_forwarding_rules() {
        let (mut a, t) = agent_with_neighbor(true);
        let mut ctx = Ctx::new(t, NodeId(0));
        assert_eq!(
            a.on_tc(&mut ctx, NodeId(1), tc(7, 1, 3, &[8])),
            TcOutcome::Processed { forwarded: true }
        );
        let fwd: Vec<_> = ctx.sent_control().collect();
        assert_eq!(fwd.len(), 1);
        match fwd[0].1 {
            Control::Olsr(Message::Tc(f)) => {
                assert_eq!(f.ttl, TC_TTL - 1);
                assert_eq!(f.hops, 1);
            }
            other => panic!("unexpected {other:?}"),
        }
        // Same message again.
        let mut ctx = Ctx::new(t, NodeId(0));
        assert_eq!(
            a.on_tc(&mut ctx, NodeId(1), tc(7, 1, 3, &[8])),
            TcOutcome::Duplicate
        );
        // Older topology information.
        assert_eq!(
            a.on_tc(&mut ctx, NodeId(1), tc(7, 2, 2, &[])),
            TcOutcome::Stale
        );
        assert_eq!(ctx.sent_control().count(), 0);
        assert_eq!(a.route(NodeId(8), t).unwrap().hops, 3);
    }

    #[test]
    fn non_mpr_processes_without_forwarding() {
        let (mut a, t) = agent_with_neighbor(false);
        let mut ctx = Ctx::new(t, NodeId(0));
        assert_eq!(
            a.on_tc(&mut ctx, NodeId(1), tc(7, 1, 1, &[8])),
            TcOutcome::Processed { forwarded: false }
        );
        assert_eq!(ctx.sent_control().count(), 0);
        assert_eq!(a.route(NodeId(8), t).unwrap().next_hop, NodeId(1));
        // Unknown sender.
        assert_eq!(
            a.on_tc(&mut ctx, NodeId(9), tc(7, 2, 2, &[])),
            TcOutcome::NotSymmetric
        );
    }

    #[test]
    fn topology_expires_after_hold_time() {
        let (mut a, t) = agent_with_neighbor(false);
        let mut ctx = Ctx::new(t, NodeId(0));
        a.on_tc(&mut ctx, NodeId(1), tc(7, 1, 1, &[8]));
        assert!(a.route(NodeId(8), t).is_some());
        // Keep the neighbor alive, let the topology entry lapse (3 x 5 s).
        let mut now = t;
        for k in 0..10 {
            now = t + SimTime::from_secs(2 * k);
            a.on_hello(
                now,
                NodeId(1),
                &hello(1, 2 + k as u32, &[(0, LinkStatus::Sym)]),
            );
        }
        assert!(now > t + SimTime::from_secs(15));
        let mut ctx = Ctx::new(now, NodeId(0));
        a.route_data(
            &mut ctx,
            DataPacket {
                id: 0,
                flow: 0,
                seq: 0,
                src: NodeId(0),
                dst: NodeId(8),
                size: 1000,
                created: now,
                ttl: 64,
                hops: 0,
            },
        );
        assert!(matches!(
            ctx.actions()[0],
            crate::sim::Action::Drop(_, DropReason::NoRoute)
        ));
    }
}
