//! Fisheye state routing.
//!
//! Every node periodically broadcasts link-state entries to its one-hop
//! neighbors: entries for origins inside the fisheye scope at the short
//! interval and the whole table at the long interval. Routes are hop-count
//! shortest paths over the merged table.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use thiserror::Error;

use super::{bfs_routes, Adjacency, RouteView};
use crate::rng::hash_words;
use crate::sim::{Control, Ctx, DataPacket, DropReason, NodeId, Payload, Timer as SimTimer};
use crate::time::SimTime;

#[derive(Debug, Clone, PartialEq)]
pub struct FsrParams {
    pub intra_scope_interval: f64,
    pub inter_scope_interval: f64,
    pub scope_radius: u32,
    /// Recompute routes as soon as an update changes the table; otherwise
    /// only when an update is emitted.
    pub recompute_on_update: bool,
    /// Neighbor and table entry lifetimes, in multiples of the intra and
    /// inter intervals.
    pub hold_multiplier: u32,
}

impl FsrParams {
    pub fn default_preset() -> Self {
        Self {
            intra_scope_interval: 5.0,
            inter_scope_interval: 15.0,
            scope_radius: 2,
            recompute_on_update: true,
            hold_multiplier: 3,
        }
    }

    pub fn modified_preset() -> Self {
        Self {
            intra_scope_interval: 1.0,
            inter_scope_interval: 3.0,
            ..Self::default_preset()
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(self.intra_scope_interval > 0.0 && self.intra_scope_interval.is_finite()) {
            return Err("fsr intra_scope_interval must be positive".into());
        }
        if !(self.inter_scope_interval.is_finite()
            && self.intra_scope_interval <= self.inter_scope_interval)
        {
            return Err("fsr intra_scope_interval must not exceed inter_scope_interval".into());
        }
        if self.scope_radius < 1 {
            return Err("fsr scope_radius must be at least 1".into());
        }
        if self.hold_multiplier < 1 {
            return Err("fsr hold_multiplier must be at least 1".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinkStateEntry {
    pub origin: NodeId,
    pub seq: u32,
    pub neighbors: Vec<NodeId>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Message {
    pub sender: NodeId,
    pub seq: u32,
    /// Whole table (outer scope) rather than the inner scope only.
    pub full: bool,
    pub entries: Arc<[LinkStateEntry]>,
}

impl Message {
    pub fn kind(&self) -> &'static str {
        if self.full {
            "fsr_full"
        } else {
            "fsr_intra"
        }
    }

    pub fn size(&self) -> u32 {
        8 + self
            .entries
            .iter()
            .map(|e| 8 + 4 * e.neighbors.len() as u32)
            .sum::<u32>()
    }

    pub fn ident(&self) -> u64 {
        hash_words(&[20, self.sender.0 as u64, self.seq as u64, self.full as u64])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Timer {
    Intra,
    Inter,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum UpdateError {
    #[error("update from {0} is malformed")]
    Malformed(NodeId),
}

/// What an accepted update changed.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TableDelta {
    pub new_neighbor: bool,
    pub accepted: usize,
    pub stale: usize,
}

#[derive(Debug, Clone)]
struct TableEntry {
    seq: u32,
    neighbors: Vec<NodeId>,
    received: SimTime,
}

#[derive(Debug)]
pub struct FsrAgent {
    me: NodeId,
    params: FsrParams,
    seq: u32,
    neighbors: BTreeMap<NodeId, SimTime>,
    table: BTreeMap<NodeId, TableEntry>,
    routes: BTreeMap<NodeId, RouteView>,
    dirty: bool,
    pub intra_sent: u64,
    pub full_sent: u64,
    pub malformed: u64,
}

impl FsrAgent {
    pub fn new(me: NodeId, params: FsrParams) -> Self {
        Self {
            me,
            params,
            seq: 0,
            neighbors: BTreeMap::new(),
            table: BTreeMap::new(),
            routes: BTreeMap::new(),
            dirty: false,
            intra_sent: 0,
            full_sent: 0,
            malformed: 0,
        }
    }

    fn intra(&self) -> SimTime {
        SimTime::from_secs_f64(self.params.intra_scope_interval)
    }

    fn inter(&self) -> SimTime {
        SimTime::from_secs_f64(self.params.inter_scope_interval)
    }

    pub fn start(&mut self, ctx: &mut Ctx) {
        ctx.schedule(self.intra(), SimTimer::Fsr(Timer::Intra));
        ctx.schedule(self.inter(), SimTimer::Fsr(Timer::Inter));
    }

    pub fn on_timer(&mut self, ctx: &mut Ctx, timer: Timer) {
        let (full, period) = match timer {
            Timer::Intra => (false, self.intra()),
            Timer::Inter => (true, self.inter()),
        };
        let msg = self.periodic_update(ctx.now, full);
        ctx.broadcast(Control::Fsr(msg));
        ctx.schedule(period, SimTimer::Fsr(timer));
    }

    /// Builds the next update: inner-scope origins, or the whole table when
    /// `full` is set. The node's own entry is always first.
    pub fn periodic_update(&mut self, now: SimTime, full: bool) -> Message {
        self.expire(now);
        self.recompute();
        self.seq += 1;
        let mut entries = vec![LinkStateEntry {
            origin: self.me,
            seq: self.seq,
            neighbors: self.neighbors.keys().copied().collect(),
        }];
        for (&origin, e) in &self.table {
            let in_scope = self
                .routes
                .get(&origin)
                .is_some_and(|r| r.hops <= self.params.scope_radius);
            if full || in_scope {
                entries.push(LinkStateEntry {
                    origin,
                    seq: e.seq,
                    neighbors: e.neighbors.clone(),
                });
            }
        }
        if full {
            self.full_sent += 1;
        } else {
            self.intra_sent += 1;
        }
        Message {
            sender: self.me,
            seq: self.seq,
            full,
            entries: entries.into(),
        }
    }

    /// Merges an update heard from `from`; fresher sequence numbers win.
    pub fn on_update_received(&mut self, ctx: &mut Ctx, from: NodeId, msg: &Message) {
        let _ = self.merge(ctx.now, from, msg);
    }

    pub fn merge(
        &mut self,
        now: SimTime,
        from: NodeId,
        msg: &Message,
    ) -> Result<TableDelta, UpdateError> {
        if !well_formed(from, msg) {
            self.malformed += 1;
            return Err(UpdateError::Malformed(from));
        }
        let mut delta = TableDelta {
            new_neighbor: self.neighbors.insert(from, now).is_none(),
            ..Default::default()
        };
        for entry in msg.entries.iter() {
            if entry.origin == self.me {
                continue;
            }
            match self.table.get_mut(&entry.origin) {
                Some(cur) if entry.seq <= cur.seq => {
                    if entry.seq == cur.seq {
                        cur.received = cur.received.max(now);
                    } else {
                        delta.stale += 1;
                    }
                }
                _ => {
                    self.table.insert(
                        entry.origin,
                        TableEntry {
                            seq: entry.seq,
                            neighbors: entry.neighbors.clone(),
                            received: now,
                        },
                    );
                    delta.accepted += 1;
                }
            }
        }
        if delta.new_neighbor || delta.accepted > 0 {
            self.dirty = true;
        }
        Ok(delta)
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
        if self.params.recompute_on_update {
            self.recompute();
        }
        match self.routes.get(&pkt.dst).copied() {
            Some(r) => {
                pkt.ttl -= 1;
                pkt.hops = pkt.hops.saturating_add(1);
                ctx.unicast(r.next_hop, Payload::Data(pkt));
            }
            None => ctx.drop_data(pkt, DropReason::NoRoute),
        }
    }

    pub fn on_unicast_failure(&mut self, ctx: &mut Ctx, next_hop: NodeId, payload: Payload) {
        if self.neighbors.remove(&next_hop).is_some() {
            self.dirty = true;
        }
        if let Payload::Data(pkt) = payload {
            ctx.drop_data(pkt, DropReason::LinkFailure);
        }
    }

    /// With `recompute_on_update` the answer reflects every merged update;
    /// otherwise the table as of the last emission.
    pub fn route(&self, dest: NodeId, _now: SimTime) -> Option<RouteView> {
        if self.dirty && self.params.recompute_on_update {
            return bfs_routes(self.me, &self.adjacency()).get(&dest).copied();
        }
        self.routes.get(&dest).copied()
    }

    pub fn neighbors(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.neighbors.keys().copied()
    }

    pub fn routes(&self) -> &BTreeMap<NodeId, RouteView> {
        &self.routes
    }

    /// Sequence number currently held for `origin`.
    pub fn entry_seq(&self, origin: NodeId) -> Option<u32> {
        self.table.get(&origin).map(|e| e.seq)
    }

    fn expire(&mut self, now: SimTime) {
        let nb_hold = self.intra().mul(self.params.hold_multiplier as u64);
        let entry_hold = self.inter().mul(self.params.hold_multiplier as u64);
        let before = (self.neighbors.len(), self.table.len());
        self.neighbors.retain(|_, heard| *heard + nb_hold >= now);
        self.table.retain(|_, e| e.received + entry_hold >= now);
        if before != (self.neighbors.len(), self.table.len()) {
            self.dirty = true;
        }
    }

    fn recompute(&mut self) {
        if !self.dirty {
            return;
        }
        self.routes = bfs_routes(self.me, &self.adjacency());
        self.dirty = false;
    }

    fn adjacency(&self) -> Adjacency {
        let mut adj = Adjacency::new();
        adj.insert(self.me, self.neighbors.keys().copied().collect());
        for (&origin, e) in &self.table {
            let out: BTreeSet<NodeId> = e.neighbors.iter().copied().collect();
            adj.insert(origin, out);
        }
        adj
    }
}

/// The sender's own entry leads, carries the message sequence number, and
/// no origin repeats.
fn well_formed(from: NodeId, msg: &Message) -> bool {
    let Some(first) = msg.entries.first() else {
        return false;
    };
    if msg.sender != from || first.origin != from || first.seq != msg.seq {
        return false;
    }
    let mut seen = BTreeSet::new();
    msg.entries.iter().all(|e| seen.insert(e.origin))
}
