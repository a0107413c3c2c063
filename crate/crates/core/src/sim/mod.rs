//! Discrete-event engine, radio channel and the interface routing agents see.

mod kernel;
pub mod radio;
pub mod trace;

use std::fmt;

pub use kernel::{unit_disk_neighbors, PacketLedger, RunOutput, SimError, SimSetup, Simulator};
pub use radio::{MacProfile, RadioConfig};

use crate::routing::{aodv, fsr, olsr};
use crate::time::SimTime;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub u32);

impl NodeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Initial hop limit of application packets.
pub const DATA_TTL: u8 = 64;

#[derive(Debug, Clone, PartialEq)]
pub struct DataPacket {
    pub id: u64,
    pub flow: u32,
    pub seq: u32,
    pub src: NodeId,
    pub dst: NodeId,
    pub size: u32,
    pub created: SimTime,
    pub ttl: u8,
    /// Hops travelled so far.
    pub hops: u8,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Control {
    Aodv(aodv::Message),
    Fsr(fsr::Message),
    Olsr(olsr::Message),
}

impl Control {
    pub fn kind(&self) -> &'static str {
        match self {
            Control::Aodv(m) => m.kind(),
            Control::Fsr(m) => m.kind(),
            Control::Olsr(m) => m.kind(),
        }
    }

    pub fn size(&self) -> u32 {
        match self {
            Control::Aodv(m) => m.size(),
            Control::Fsr(m) => m.size(),
            Control::Olsr(m) => m.size(),
        }
    }

    pub fn ttl(&self) -> u8 {
        match self {
            Control::Aodv(m) => m.ttl(),
            Control::Fsr(_) => 1,
            Control::Olsr(m) => m.ttl(),
        }
    }

    pub fn origin(&self) -> NodeId {
        match self {
            Control::Aodv(m) => m.origin(),
            Control::Fsr(m) => m.sender,
            Control::Olsr(m) => m.origin(),
        }
    }

    /// Stable identity of the message content, used to key channel draws.
    pub fn ident(&self) -> u64 {
        match self {
            Control::Aodv(m) => m.ident(),
            Control::Fsr(m) => m.ident(),
            Control::Olsr(m) => m.ident(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Payload {
    Data(DataPacket),
    Control(Control),
}

impl Payload {
    pub fn kind(&self) -> &'static str {
        match self {
            Payload::Data(_) => "data",
            Payload::Control(c) => c.kind(),
        }
    }

    pub fn is_data(&self) -> bool {
        matches!(self, Payload::Data(_))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dest {
    Broadcast,
    Unicast(NodeId),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DropReason {
    NoRoute,
    TtlExpired,
    BufferTimeout,
    DiscoveryFailed,
    RepairFailed,
    LinkFailure,
    BufferFull,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Timer {
    Aodv(aodv::Timer),
    Fsr(fsr::Timer),
    Olsr(olsr::Timer),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Action {
    Send { to: Dest, payload: Payload },
    Timer { at: SimTime, timer: Timer },
    Deliver(DataPacket),
    Drop(DataPacket, DropReason),
}

/// Handler context: the current time, the node being run, and the actions
/// the handler requested. The kernel applies actions in order.
#[derive(Debug)]
pub struct Ctx {
    pub now: SimTime,
    pub me: NodeId,
    actions: Vec<Action>,
}

impl Ctx {
    pub fn new(now: SimTime, me: NodeId) -> Self {
        Self {
            now,
            me,
            actions: Vec::new(),
        }
    }

    pub fn broadcast(&mut self, msg: Control) {
        self.actions.push(Action::Send {
            to: Dest::Broadcast,
            payload: Payload::Control(msg),
        });
    }

    pub fn unicast(&mut self, to: NodeId, payload: Payload) {
        self.actions.push(Action::Send {
            to: Dest::Unicast(to),
            payload,
        });
    }

    pub fn schedule(&mut self, after: SimTime, timer: Timer) {
        self.actions.push(Action::Timer {
            at: self.now + after,
            timer,
        });
    }

    pub fn schedule_at(&mut self, at: SimTime, timer: Timer) {
        debug_assert!(at >= self.now);
        self.actions.push(Action::Timer {
            at: at.max(self.now),
            timer,
        });
    }

    pub fn deliver(&mut self, pkt: DataPacket) {
        self.actions.push(Action::Deliver(pkt));
    }

    pub fn drop_data(&mut self, pkt: DataPacket, reason: DropReason) {
        self.actions.push(Action::Drop(pkt, reason));
    }

    pub fn actions(&self) -> &[Action] {
        &self.actions
    }

    pub fn take_actions(&mut self) -> Vec<Action> {
        std::mem::take(&mut self.actions)
    }

    /// Control messages sent so far, with their link-layer destination.
    pub fn sent_control(&self) -> impl Iterator<Item = (Dest, &Control)> {
        self.actions.iter().filter_map(|a| match a {
            Action::Send {
                to,
                payload: Payload::Control(c),
            } => Some((*to, c)),
            _ => None,
        })
    }
}
