//! Ad hoc on-demand distance vector routing.
//!
//! Routes are discovered with expanding-ring RREQ floods and answered by the
//! destination or by an intermediate node holding a fresh enough route, which
//! may also send a gratuitous RREP toward the destination. HELLOs sense
//! links; a broken active route is either repaired locally or reported
//! upstream with RERR.

use std::collections::{BTreeMap, BTreeSet};

use super::RouteView;
use crate::rng::hash_words;
use crate::sim::{Control, Ctx, DataPacket, DropReason, NodeId, Payload, Timer as SimTimer};
use crate::time::SimTime;

pub const NODE_TRAVERSAL_TIME: SimTime = SimTime::from_millis(40);
pub const ACTIVE_ROUTE_TIMEOUT: SimTime = SimTime::from_secs(3);
pub const MY_ROUTE_TIMEOUT: SimTime = SimTime::from_secs(6);
/// How long an `(origin, rreq_id)` pair is remembered.
pub const RREQ_MEMORY: SimTime = SimTime::from_secs(10);
/// Packets waiting for a route longer than this are dropped.
pub const BUFFER_TIMEOUT: SimTime = SimTime::from_secs(30);
pub const BUFFER_CAPACITY: usize = 256;
const RREP_TTL: u8 = 255;

#[derive(Debug, Clone, PartialEq)]
pub struct AodvParams {
    pub ttl_start: u8,
    pub ttl_increment: u8,
    pub ttl_threshold: u8,
    pub net_diameter: u8,
    pub hello_interval: f64,
    pub allowed_hello_loss: u32,
    pub local_repair: bool,
    pub grat_rrep: bool,
    /// Extra RREQ attempts at `net_diameter` after the ring is exhausted.
    pub rreq_retries: u32,
}

impl AodvParams {
    pub fn default_preset() -> Self {
        Self {
            ttl_start: 1,
            ttl_increment: 2,
            ttl_threshold: 7,
            net_diameter: 30,
            hello_interval: 1.0,
            allowed_hello_loss: 2,
            local_repair: true,
            grat_rrep: true,
            rreq_retries: 2,
        }
    }

    pub fn modified_preset() -> Self {
        Self {
            ttl_increment: 4,
            ttl_threshold: 9,
            net_diameter: 10,
            ..Self::default_preset()
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.ttl_start < 1 {
            return Err("aodv ttl_start must be at least 1".into());
        }
        if self.ttl_increment < 1 {
            return Err("aodv ttl_increment must be at least 1".into());
        }
        if self.ttl_threshold < self.ttl_start {
            return Err("aodv ttl_threshold must be at least ttl_start".into());
        }
        if self.ttl_threshold > self.net_diameter {
            return Err("aodv ttl_threshold must not exceed net_diameter".into());
        }
        if !(self.hello_interval.is_finite() && self.hello_interval > 0.0) {
            return Err("aodv hello_interval must be positive".into());
        }
        if self.allowed_hello_loss < 1 {
            return Err("aodv allowed_hello_loss must be at least 1".into());
        }
        Ok(())
    }
}

/// TTLs of successive RREQ attempts for one discovery.
pub fn expanding_ring_ttls(p: &AodvParams) -> Vec<u8> {
    let mut ttls = Vec::new();
    let mut ttl = p.ttl_start;
    while ttl <= p.ttl_threshold {
        ttls.push(ttl);
        match ttl.checked_add(p.ttl_increment) {
            Some(next) => ttl = next,
            None => break,
        }
    }
    ttls.extend(std::iter::repeat_n(
        p.net_diameter,
        1 + p.rreq_retries as usize,
    ));
    ttls
}

/// Time to wait for a reply to an RREQ sent with `ttl`.
pub fn ring_traversal_time(ttl: u8) -> SimTime {
    NODE_TRAVERSAL_TIME.mul(2 * (ttl as u64 + 2))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rreq {
    pub id: u32,
    pub origin: NodeId,
    pub origin_seq: u32,
    pub dest: NodeId,
    pub dest_seq: Option<u32>,
    pub hop_count: u8,
    pub ttl: u8,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rrep {
    pub replier: NodeId,
    /// Node the advertised route leads to.
    pub about: NodeId,
    pub about_seq: u32,
    /// Node the reply travels to.
    pub to: NodeId,
    pub hop_count: u8,
    pub lifetime: SimTime,
    pub gratuitous: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rerr {
    pub sender: NodeId,
    pub count: u32,
    pub unreachable: Vec<(NodeId, u32)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Hello {
    pub sender: NodeId,
    pub seq: u32,
    pub count: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Message {
    Rreq(Rreq),
    Rrep(Rrep),
    Rerr(Rerr),
    Hello(Hello),
}

impl Message {
    pub fn kind(&self) -> &'static str {
        match self {
            Message::Rreq(_) => "aodv_rreq",
            Message::Rrep(_) => "aodv_rrep",
            Message::Rerr(_) => "aodv_rerr",
            Message::Hello(_) => "aodv_hello",
        }
    }

    pub fn size(&self) -> u32 {
        match self {
            Message::Rreq(_) => 24,
            Message::Rrep(_) => 20,
            Message::Rerr(e) => 4 + 8 * e.unreachable.len() as u32,
            Message::Hello(_) => 20,
        }
    }

    pub fn ttl(&self) -> u8 {
        match self {
            Message::Rreq(r) => r.ttl,
            Message::Rrep(_) => RREP_TTL,
            Message::Rerr(_) | Message::Hello(_) => 1,
        }
    }

    pub fn origin(&self) -> NodeId {
        match self {
            Message::Rreq(r) => r.origin,
            Message::Rrep(r) => r.replier,
            Message::Rerr(e) => e.sender,
            Message::Hello(h) => h.sender,
        }
    }

    pub fn ident(&self) -> u64 {
        match self {
            Message::Rreq(r) => hash_words(&[40, r.origin.0 as u64, r.id as u64]),
            Message::Rrep(r) => hash_words(&[
                41,
                r.replier.0 as u64,
                r.about.0 as u64,
                r.to.0 as u64,
                r.about_seq as u64,
                r.gratuitous as u64,
            ]),
            Message::Rerr(e) => hash_words(&[42, e.sender.0 as u64, e.count as u64]),
            Message::Hello(h) => hash_words(&[43, h.sender.0 as u64, h.count as u64]),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Timer {
    Hello,
    Discovery { dest: NodeId, gen: u32 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RouteState {
    Valid,
    UnderRepair,
    Invalid,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RouteEntry {
    pub dest: NodeId,
    pub next_hop: NodeId,
    pub hop_count: u8,
    pub dest_seq: u32,
    pub seq_known: bool,
    pub lifetime: SimTime,
    pub state: RouteState,
    /// Upstream neighbors that forward through this entry.
    pub precursors: BTreeSet<NodeId>,
    /// Hops from the traffic source, learned from forwarded data.
    pub upstream_hops: Option<u8>,
}

impl RouteEntry {
    pub fn usable(&self, now: SimTime) -> bool {
        self.state == RouteState::Valid && self.lifetime >= now
    }
}

/// What a node did with a received RREQ.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RreqOutcome {
    Own,
    Duplicate,
    Replied { gratuitous: bool },
    Forwarded,
    Exhausted,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct AodvStats {
    pub rreq_originated: u64,
    pub rrep_sent: u64,
    pub grat_rrep_sent: u64,
    pub rerr_sent: u64,
    pub repairs_started: u64,
    pub repairs_succeeded: u64,
    pub repairs_failed: u64,
}

#[derive(Debug)]
struct Pending {
    gen: u32,
    attempt: usize,
    repair: bool,
    buffer: Vec<(SimTime, DataPacket)>,
}

#[derive(Debug)]
pub struct AodvAgent {
    me: NodeId,
    params: AodvParams,
    ttls: Vec<u8>,
    seq: u32,
    rreq_id: u32,
    hello_count: u32,
    rerr_count: u32,
    next_gen: u32,
    routes: BTreeMap<NodeId, RouteEntry>,
    seen: BTreeMap<(NodeId, u32), SimTime>,
    neighbors: BTreeMap<NodeId, SimTime>,
    pending: BTreeMap<NodeId, Pending>,
    pub stats: AodvStats,
}

impl AodvAgent {
    pub fn new(me: NodeId, params: AodvParams) -> Self {
        Self {
            me,
            ttls: expanding_ring_ttls(&params),
            params,
            seq: 0,
            rreq_id: 0,
            hello_count: 0,
            rerr_count: 0,
            next_gen: 0,
            routes: BTreeMap::new(),
            seen: BTreeMap::new(),
            neighbors: BTreeMap::new(),
            pending: BTreeMap::new(),
            stats: AodvStats::default(),
        }
    }

    pub fn seq(&self) -> u32 {
        self.seq
    }

    pub fn route_entry(&self, dest: NodeId) -> Option<&RouteEntry> {
        self.routes.get(&dest)
    }

    pub fn routes(&self) -> impl Iterator<Item = &RouteEntry> {
        self.routes.values()
    }

    pub fn route(&self, dest: NodeId, now: SimTime) -> Option<RouteView> {
        self.routes
            .get(&dest)
            .filter(|r| r.usable(now))
            .map(|r| RouteView {
                next_hop: r.next_hop,
                hops: r.hop_count as u32,
            })
    }

    pub fn buffered_data(&self) -> usize {
        self.pending.values().map(|p| p.buffer.len()).sum()
    }

    pub fn discovery_pending(&self, dest: NodeId) -> bool {
        self.pending.contains_key(&dest)
    }

    fn hello_period(&self) -> SimTime {
        SimTime::from_secs_f64(self.params.hello_interval)
    }

    fn neighbor_hold(&self) -> SimTime {
        self.hello_period()
            .mul(self.params.allowed_hello_loss as u64)
    }

    fn usable(&self, dest: NodeId, now: SimTime) -> bool {
        self.routes.get(&dest).is_some_and(|r| r.usable(now))
    }

    pub fn start(&mut self, ctx: &mut Ctx) {
        ctx.schedule(self.hello_period(), SimTimer::Aodv(Timer::Hello));
    }

    pub fn on_timer(&mut self, ctx: &mut Ctx, timer: Timer) {
        match timer {
            Timer::Hello => {
                self.hello_count += 1;
                ctx.broadcast(Control::Aodv(Message::Hello(Hello {
                    sender: self.me,
                    seq: self.seq,
                    count: self.hello_count,
                })));
                let hold = self.neighbor_hold();
                let lost: Vec<NodeId> = self
                    .neighbors
                    .iter()
                    .filter(|(_, &heard)| heard + hold < ctx.now)
                    .map(|(&n, _)| n)
                    .collect();
                for n in lost {
                    self.link_break(ctx, n);
                }
                self.seen.retain(|_, exp| *exp >= ctx.now);
                ctx.schedule(self.hello_period(), SimTimer::Aodv(Timer::Hello));
            }
            Timer::Discovery { dest, gen } => self.discovery_timeout(ctx, dest, gen),
        }
    }

    pub fn on_message(&mut self, ctx: &mut Ctx, from: NodeId, msg: Message) {
        match msg {
            Message::Rreq(r) => {
                self.on_rreq(ctx, from, r);
            }
            Message::Rrep(r) => self.on_rrep(ctx, from, r),
            Message::Rerr(e) => self.on_rerr(ctx, from, e),
            Message::Hello(h) => self.on_hello(ctx, from, h),
        }
    }

    pub fn on_hello(&mut self, ctx: &mut Ctx, from: NodeId, hello: Hello) {
        self.touch_neighbor(ctx, from);
        if let Some(r) = self.routes.get_mut(&from) {
            if !r.seq_known || hello.seq > r.dest_seq {
                r.dest_seq = hello.seq;
                r.seq_known = true;
            }
        }
    }

    pub fn on_rreq(&mut self, ctx: &mut Ctx, from: NodeId, rreq: Rreq) -> RreqOutcome {
        let now = ctx.now;
        self.touch_neighbor(ctx, from);
        if rreq.origin == self.me {
            return RreqOutcome::Own;
        }
        let key = (rreq.origin, rreq.id);
        if self.seen.get(&key).is_some_and(|&exp| exp >= now) {
            return RreqOutcome::Duplicate;
        }
        self.seen.insert(key, now + RREQ_MEMORY);

        let hop = rreq.hop_count.saturating_add(1);
        self.update_route(
            ctx,
            rreq.origin,
            from,
            hop,
            Some(rreq.origin_seq),
            now + MY_ROUTE_TIMEOUT,
        );

        if rreq.dest == self.me {
            if let Some(s) = rreq.dest_seq {
                self.seq = self.seq.max(s);
            }
            self.send_rrep(
                ctx,
                from,
                Rrep {
                    replier: self.me,
                    about: self.me,
                    about_seq: self.seq,
                    to: rreq.origin,
                    hop_count: 0,
                    lifetime: MY_ROUTE_TIMEOUT,
                    gratuitous: false,
                },
            );
            return RreqOutcome::Replied { gratuitous: false };
        }

        let fresh = self.routes.get(&rreq.dest).filter(|r| {
            r.usable(now) && r.seq_known && rreq.dest_seq.is_none_or(|s| r.dest_seq >= s)
        });
        if let Some(fwd) = fresh.cloned() {
            self.send_rrep(
                ctx,
                from,
                Rrep {
                    replier: self.me,
                    about: rreq.dest,
                    about_seq: fwd.dest_seq,
                    to: rreq.origin,
                    hop_count: fwd.hop_count,
                    lifetime: fwd.lifetime.saturating_sub(now),
                    gratuitous: false,
                },
            );
            self.add_precursor(rreq.dest, from);
            self.add_precursor(rreq.origin, fwd.next_hop);
            if self.params.grat_rrep {
                let back = self.routes[&rreq.origin].lifetime.saturating_sub(now);
                self.stats.grat_rrep_sent += 1;
                self.send_rrep(
                    ctx,
                    fwd.next_hop,
                    Rrep {
                        replier: self.me,
                        about: rreq.origin,
                        about_seq: rreq.origin_seq,
                        to: rreq.dest,
                        hop_count: hop,
                        lifetime: back,
                        gratuitous: true,
                    },
                );
            }
            return RreqOutcome::Replied {
                gratuitous: self.params.grat_rrep,
            };
        }

        if rreq.ttl > 1 {
            let known = self
                .routes
                .get(&rreq.dest)
                .filter(|r| r.seq_known)
                .map(|r| r.dest_seq);
            let dest_seq = match (rreq.dest_seq, known) {
                (Some(a), Some(b)) => Some(a.max(b)),
                (a, b) => a.or(b),
            };
            ctx.broadcast(Control::Aodv(Message::Rreq(Rreq {
                hop_count: hop,
                ttl: rreq.ttl - 1,
                dest_seq,
                ..rreq
            })));
            RreqOutcome::Forwarded
        } else {
            RreqOutcome::Exhausted
        }
    }

    pub fn on_rrep(&mut self, ctx: &mut Ctx, from: NodeId, rrep: Rrep) {
        let now = ctx.now;
        self.touch_neighbor(ctx, from);
        let hop = rrep.hop_count.saturating_add(1);
        let updated = self.update_route(
            ctx,
            rrep.about,
            from,
            hop,
            Some(rrep.about_seq),
            now + rrep.lifetime,
        );
        if rrep.to == self.me || !updated {
            return;
        }
        let Some(back) = self.routes.get(&rrep.to).filter(|r| r.usable(now)) else {
            return;
        };
        let next = back.next_hop;
        self.add_precursor(rrep.about, next);
        self.add_precursor(rrep.to, from);
        let fwd = Rrep {
            hop_count: hop,
            ..rrep
        };
        ctx.unicast(next, Payload::Control(Control::Aodv(Message::Rrep(fwd))));
    }

    pub fn on_rerr(&mut self, ctx: &mut Ctx, from: NodeId, rerr: Rerr) {
        self.touch_neighbor(ctx, from);
        let mut out = Vec::new();
        for &(dest, seq) in &rerr.unreachable {
            let Some(r) = self.routes.get_mut(&dest) else {
                continue;
            };
            if r.next_hop != from || r.state != RouteState::Valid {
                continue;
            }
            r.state = RouteState::Invalid;
            r.dest_seq = if r.seq_known {
                r.dest_seq.max(seq)
            } else {
                seq
            };
            r.seq_known = true;
            if !r.precursors.is_empty() {
                out.push((dest, r.dest_seq));
            }
        }
        self.send_rerr(ctx, out);
    }

    /// Routes, forwards or buffers a data packet. `from` is the previous hop,
    /// or `None` for locally generated or returned packets.
    pub fn route_data(&mut self, ctx: &mut Ctx, pkt: DataPacket, from: Option<NodeId>) {
        if pkt.dst == self.me {
            ctx.deliver(pkt);
            return;
        }
        if pkt.ttl == 0 {
            ctx.drop_data(pkt, DropReason::TtlExpired);
            return;
        }
        if self.usable(pkt.dst, ctx.now) {
            self.forward(ctx, pkt, from);
            return;
        }
        if self.pending.contains_key(&pkt.dst) {
            self.buffer(ctx, pkt);
            return;
        }
        if pkt.src == self.me && from.is_none() {
            let dest = pkt.dst;
            self.buffer_new(ctx.now, dest, false);
            self.buffer(ctx, pkt);
            self.send_discovery_rreq(ctx, dest);
            return;
        }
        let dest = pkt.dst;
        let seq = self.routes.get(&dest).map_or(0, |r| r.dest_seq);
        ctx.drop_data(pkt, DropReason::NoRoute);
        self.send_rerr(ctx, vec![(dest, seq)]);
    }

    pub fn on_unicast_failure(&mut self, ctx: &mut Ctx, next_hop: NodeId, payload: Payload) {
        self.link_break(ctx, next_hop);
        let Payload::Data(mut pkt) = payload else {
            return;
        };
        // The frame never left this node.
        pkt.ttl = pkt.ttl.saturating_add(1);
        pkt.hops = pkt.hops.saturating_sub(1);
        if pkt.src == self.me || self.pending.contains_key(&pkt.dst) {
            self.route_data(ctx, pkt, None);
        } else {
            ctx.drop_data(pkt, DropReason::LinkFailure);
        }
    }

    fn forward(&mut self, ctx: &mut Ctx, mut pkt: DataPacket, from: Option<NodeId>) {
        let now = ctx.now;
        let me = self.me;
        let r = self.routes.get_mut(&pkt.dst).expect("usable route");
        r.lifetime = r.lifetime.max(now + ACTIVE_ROUTE_TIMEOUT);
        if let Some(p) = from {
            r.precursors.insert(p);
        }
        if pkt.src != me {
            r.upstream_hops = Some(pkt.hops);
        }
        let next = r.next_hop;
        if let Some(nr) = self.routes.get_mut(&next).filter(|nr| nr.usable(now)) {
            nr.lifetime = nr.lifetime.max(now + ACTIVE_ROUTE_TIMEOUT);
        }
        pkt.ttl -= 1;
        pkt.hops = pkt.hops.saturating_add(1);
        ctx.unicast(next, Payload::Data(pkt));
    }

    fn buffer_new(&mut self, _now: SimTime, dest: NodeId, repair: bool) {
        self.pending.entry(dest).or_insert(Pending {
            gen: 0,
            attempt: 0,
            repair,
            buffer: Vec::new(),
        });
    }

    fn buffer(&mut self, ctx: &mut Ctx, pkt: DataPacket) {
        let p = self.pending.get_mut(&pkt.dst).expect("pending discovery");
        if p.buffer.len() >= BUFFER_CAPACITY {
            ctx.drop_data(pkt, DropReason::BufferFull);
        } else {
            p.buffer.push((ctx.now, pkt));
        }
    }

    fn send_rreq(&mut self, ctx: &mut Ctx, dest: NodeId, ttl: u8, dest_seq: Option<u32>) -> u32 {
        self.seq = self.seq.wrapping_add(1);
        self.rreq_id = self.rreq_id.wrapping_add(1);
        self.seen
            .insert((self.me, self.rreq_id), ctx.now + RREQ_MEMORY);
        self.stats.rreq_originated += 1;
        ctx.broadcast(Control::Aodv(Message::Rreq(Rreq {
            id: self.rreq_id,
            origin: self.me,
            origin_seq: self.seq,
            dest,
            dest_seq,
            hop_count: 0,
            ttl,
        })));
        self.next_gen = self.next_gen.wrapping_add(1);
        let gen = self.next_gen;
        ctx.schedule(
            ring_traversal_time(ttl),
            SimTimer::Aodv(Timer::Discovery { dest, gen }),
        );
        gen
    }

    /// Sends the RREQ for the current ring of a pending discovery.
    fn send_discovery_rreq(&mut self, ctx: &mut Ctx, dest: NodeId) {
        let attempt = self.pending[&dest].attempt;
        let ttl = self.ttls[attempt];
        let dest_seq = self
            .routes
            .get(&dest)
            .filter(|r| r.seq_known)
            .map(|r| r.dest_seq);
        let gen = self.send_rreq(ctx, dest, ttl, dest_seq);
        self.pending.get_mut(&dest).expect("pending discovery").gen = gen;
    }

    fn discovery_timeout(&mut self, ctx: &mut Ctx, dest: NodeId, gen: u32) {
        let now = ctx.now;
        let Some(p) = self.pending.get_mut(&dest) else {
            return;
        };
        if p.gen != gen {
            return;
        }
        let (stale, keep): (Vec<_>, Vec<_>) = std::mem::take(&mut p.buffer)
            .into_iter()
            .partition(|(at, _)| now.saturating_sub(*at) > BUFFER_TIMEOUT);
        p.buffer = keep;
        for (_, pkt) in stale {
            ctx.drop_data(pkt, DropReason::BufferTimeout);
        }

        if p.repair {
            let p = self.pending.remove(&dest).expect("pending");
            self.stats.repairs_failed += 1;
            let mut report = Vec::new();
            if let Some(r) = self.routes.get_mut(&dest) {
                r.state = RouteState::Invalid;
                r.dest_seq = r.dest_seq.wrapping_add(1);
                report.push((dest, r.dest_seq));
            }
            for (_, pkt) in p.buffer {
                ctx.drop_data(pkt, DropReason::RepairFailed);
            }
            self.send_rerr(ctx, report);
        } else if p.attempt + 1 < self.ttls.len() {
            p.attempt += 1;
            self.send_discovery_rreq(ctx, dest);
        } else {
            let p = self.pending.remove(&dest).expect("pending");
            for (_, pkt) in p.buffer {
                ctx.drop_data(pkt, DropReason::DiscoveryFailed);
            }
        }
    }

    /// Handles loss of the link to `next_hop`.
    fn link_break(&mut self, ctx: &mut Ctx, next_hop: NodeId) {
        let now = ctx.now;
        self.neighbors.remove(&next_hop);
        let affected: Vec<NodeId> = self
            .routes
            .values()
            .filter(|r| r.next_hop == next_hop && r.usable(now))
            .map(|r| r.dest)
            .collect();
        let mut report = Vec::new();
        for dest in affected {
            let r = self.routes.get_mut(&dest).expect("affected route");
            let repairable = self.params.local_repair
                && r.upstream_hops
                    .is_some_and(|up| up > 0 && r.hop_count <= up);
            if repairable {
                r.state = RouteState::UnderRepair;
                let ttl = r
                    .hop_count
                    .max(r.upstream_hops.unwrap_or(0) / 2)
                    .saturating_add(2)
                    .min(self.params.net_diameter);
                let dest_seq = r.dest_seq.wrapping_add(1);
                self.stats.repairs_started += 1;
                self.buffer_new(now, dest, true);
                let gen = self.send_rreq(ctx, dest, ttl, Some(dest_seq));
                let p = self.pending.get_mut(&dest).expect("pending repair");
                p.gen = gen;
                p.repair = true;
            } else {
                r.state = RouteState::Invalid;
                if r.seq_known {
                    r.dest_seq = r.dest_seq.wrapping_add(1);
                }
                if !r.precursors.is_empty() {
                    report.push((dest, r.dest_seq));
                }
            }
        }
        self.send_rerr(ctx, report);
    }

    fn send_rerr(&mut self, ctx: &mut Ctx, unreachable: Vec<(NodeId, u32)>) {
        if unreachable.is_empty() {
            return;
        }
        self.rerr_count = self.rerr_count.wrapping_add(1);
        self.stats.rerr_sent += 1;
        ctx.broadcast(Control::Aodv(Message::Rerr(Rerr {
            sender: self.me,
            count: self.rerr_count,
            unreachable,
        })));
    }

    fn send_rrep(&mut self, ctx: &mut Ctx, to: NodeId, rrep: Rrep) {
        if !rrep.gratuitous {
            self.stats.rrep_sent += 1;
        }
        ctx.unicast(to, Payload::Control(Control::Aodv(Message::Rrep(rrep))));
    }

    fn add_precursor(&mut self, dest: NodeId, p: NodeId) {
        if let Some(r) = self.routes.get_mut(&dest) {
            r.precursors.insert(p);
        }
    }

    /// Any frame from `n` proves the link; keeps a one-hop route to it.
    fn touch_neighbor(&mut self, ctx: &mut Ctx, n: NodeId) {
        let now = ctx.now;
        self.neighbors.insert(n, now);
        let until = now + self.neighbor_hold();
        let changed = match self.routes.get_mut(&n) {
            Some(r) if r.usable(now) && r.next_hop == n && r.hop_count == 1 => {
                r.lifetime = r.lifetime.max(until);
                false
            }
            Some(r) => {
                r.next_hop = n;
                r.hop_count = 1;
                r.state = RouteState::Valid;
                r.lifetime = until;
                true
            }
            None => {
                self.routes.insert(
                    n,
                    RouteEntry {
                        dest: n,
                        next_hop: n,
                        hop_count: 1,
                        dest_seq: 0,
                        seq_known: false,
                        lifetime: until,
                        state: RouteState::Valid,
                        precursors: BTreeSet::new(),
                        upstream_hops: None,
                    },
                );
                true
            }
        };
        if changed {
            self.route_updated(ctx, n);
        }
    }

    /// Applies the usual freshness rule; returns whether the entry changed.
    fn update_route(
        &mut self,
        ctx: &mut Ctx,
        dest: NodeId,
        next_hop: NodeId,
        hops: u8,
        seq: Option<u32>,
        lifetime: SimTime,
    ) -> bool {
        let now = ctx.now;
        if dest == self.me {
            return false;
        }
        let updated = match self.routes.get_mut(&dest) {
            None => {
                self.routes.insert(
                    dest,
                    RouteEntry {
                        dest,
                        next_hop,
                        hop_count: hops,
                        dest_seq: seq.unwrap_or(0),
                        seq_known: seq.is_some(),
                        lifetime,
                        state: RouteState::Valid,
                        precursors: BTreeSet::new(),
                        upstream_hops: None,
                    },
                );
                true
            }
            Some(r) => {
                let live = r.usable(now);
                let better = match seq {
                    Some(s) if r.seq_known => {
                        s > r.dest_seq || (s == r.dest_seq && (!live || hops < r.hop_count))
                    }
                    Some(_) => true,
                    None => !live || hops < r.hop_count,
                };
                if better {
                    r.next_hop = next_hop;
                    r.hop_count = hops;
                    if let Some(s) = seq {
                        r.dest_seq = if r.seq_known { r.dest_seq.max(s) } else { s };
                        r.seq_known = true;
                    }
                    r.lifetime = if live {
                        r.lifetime.max(lifetime)
                    } else {
                        lifetime
                    };
                    r.state = RouteState::Valid;
                } else if live && r.next_hop == next_hop && r.hop_count == hops {
                    r.lifetime = r.lifetime.max(lifetime);
                }
                better
            }
        };
        if updated {
            self.route_updated(ctx, dest);
        }
        updated
    }

    /// Releases packets waiting for `dest` once a route exists.
    fn route_updated(&mut self, ctx: &mut Ctx, dest: NodeId) {
        if !self.usable(dest, ctx.now) {
            return;
        }
        let Some(p) = self.pending.remove(&dest) else {
            return;
        };
        if p.repair {
            self.stats.repairs_succeeded += 1;
        }
        for (_, pkt) in p.buffer {
            self.forward(ctx, pkt, None);
        }
    }
}
