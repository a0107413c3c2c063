//! Routing agents and their parameter presets.

pub mod aodv;
pub mod fsr;
mod graph;
pub mod olsr;

use std::fmt;

pub use graph::{bfs_routes, Adjacency};

use crate::sim::{Control, Ctx, DataPacket, NodeId, Payload, Timer};
use crate::time::SimTime;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Protocol {
    Aodv,
    Fsr,
    Olsr,
}

impl Protocol {
    pub fn name(self) -> &'static str {
        match self {
            Protocol::Aodv => "aodv",
            Protocol::Fsr => "fsr",
            Protocol::Olsr => "olsr",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Variant {
    Def,
    Mod,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::Def => "def",
            Variant::Mod => "mod",
        }
    }
}

/// A protocol in its default or modified parameterization, e.g. `olsr-mod`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Preset {
    pub protocol: Protocol,
    pub variant: Variant,
}

impl Preset {
    pub const ALL: [Preset; 6] = [
        Preset::new(Protocol::Aodv, Variant::Def),
        Preset::new(Protocol::Aodv, Variant::Mod),
        Preset::new(Protocol::Fsr, Variant::Def),
        Preset::new(Protocol::Fsr, Variant::Mod),
        Preset::new(Protocol::Olsr, Variant::Def),
        Preset::new(Protocol::Olsr, Variant::Mod),
    ];

    pub const fn new(protocol: Protocol, variant: Variant) -> Self {
        Self { protocol, variant }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|p| p.name() == name)
    }

    pub fn name(self) -> String {
        format!("{}-{}", self.protocol.name(), self.variant.name())
    }

    pub fn names() -> Vec<String> {
        Self::ALL.iter().map(|p| p.name()).collect()
    }

    pub fn params(self) -> ProtocolParams {
        match (self.protocol, self.variant) {
            (Protocol::Aodv, Variant::Def) => {
                ProtocolParams::Aodv(aodv::AodvParams::default_preset())
            }
            (Protocol::Aodv, Variant::Mod) => {
                ProtocolParams::Aodv(aodv::AodvParams::modified_preset())
            }
            (Protocol::Fsr, Variant::Def) => ProtocolParams::Fsr(fsr::FsrParams::default_preset()),
            (Protocol::Fsr, Variant::Mod) => ProtocolParams::Fsr(fsr::FsrParams::modified_preset()),
            (Protocol::Olsr, Variant::Def) => {
                ProtocolParams::Olsr(olsr::OlsrParams::default_preset())
            }
            (Protocol::Olsr, Variant::Mod) => {
                ProtocolParams::Olsr(olsr::OlsrParams::modified_preset())
            }
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.protocol.name(), self.variant.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ProtocolParams {
    Aodv(aodv::AodvParams),
    Fsr(fsr::FsrParams),
    Olsr(olsr::OlsrParams),
}

impl ProtocolParams {
    pub fn protocol(&self) -> Protocol {
        match self {
            ProtocolParams::Aodv(_) => Protocol::Aodv,
            ProtocolParams::Fsr(_) => Protocol::Fsr,
            ProtocolParams::Olsr(_) => Protocol::Olsr,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        match self {
            ProtocolParams::Aodv(p) => p.validate(),
            ProtocolParams::Fsr(p) => p.validate(),
            ProtocolParams::Olsr(p) => p.validate(),
        }
    }
}

/// A usable route as seen from one node.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RouteView {
    pub next_hop: NodeId,
    pub hops: u32,
}

/// One routing agent per node; the kernel drives it through these hooks.
#[derive(Debug)]
pub enum Agent {
    Aodv(aodv::AodvAgent),
    Fsr(fsr::FsrAgent),
    Olsr(olsr::OlsrAgent),
}

impl Agent {
    pub fn new(me: NodeId, params: &ProtocolParams) -> Self {
        match params {
            ProtocolParams::Aodv(p) => Agent::Aodv(aodv::AodvAgent::new(me, p.clone())),
            ProtocolParams::Fsr(p) => Agent::Fsr(fsr::FsrAgent::new(me, p.clone())),
            ProtocolParams::Olsr(p) => Agent::Olsr(olsr::OlsrAgent::new(me, p.clone())),
        }
    }

    pub fn start(&mut self, ctx: &mut Ctx) {
        match self {
            Agent::Aodv(a) => a.start(ctx),
            Agent::Fsr(a) => a.start(ctx),
            Agent::Olsr(a) => a.start(ctx),
        }
    }

    /// A packet handed down by the local application.
    pub fn on_app_data(&mut self, ctx: &mut Ctx, pkt: DataPacket) {
        match self {
            Agent::Aodv(a) => a.route_data(ctx, pkt, None),
            Agent::Fsr(a) => a.route_data(ctx, pkt),
            Agent::Olsr(a) => a.route_data(ctx, pkt),
        }
    }

    pub fn on_receive(&mut self, ctx: &mut Ctx, from: NodeId, payload: Payload) {
        match (self, payload) {
            (Agent::Aodv(a), Payload::Data(pkt)) => a.route_data(ctx, pkt, Some(from)),
            (Agent::Fsr(a), Payload::Data(pkt)) => a.route_data(ctx, pkt),
            (Agent::Olsr(a), Payload::Data(pkt)) => a.route_data(ctx, pkt),
            (Agent::Aodv(a), Payload::Control(Control::Aodv(m))) => a.on_message(ctx, from, m),
            (Agent::Fsr(a), Payload::Control(Control::Fsr(m))) => {
                a.on_update_received(ctx, from, &m)
            }
            (Agent::Olsr(a), Payload::Control(Control::Olsr(m))) => a.on_message(ctx, from, m),
            // Another protocol's control traffic; agents of one run never mix.
            (_, Payload::Control(_)) => {}
        }
    }

    pub fn on_timer(&mut self, ctx: &mut Ctx, timer: Timer) {
        match (self, timer) {
            (Agent::Aodv(a), Timer::Aodv(t)) => a.on_timer(ctx, t),
            (Agent::Fsr(a), Timer::Fsr(t)) => a.on_timer(ctx, t),
            (Agent::Olsr(a), Timer::Olsr(t)) => a.on_timer(ctx, t),
            _ => {}
        }
    }

    /// The link layer could not reach `next_hop`; data payloads come back to
    /// the agent, which must forward, buffer or drop them.
    pub fn on_link_failure(&mut self, ctx: &mut Ctx, next_hop: NodeId, payload: Payload) {
        match self {
            Agent::Aodv(a) => a.on_unicast_failure(ctx, next_hop, payload),
            Agent::Fsr(a) => a.on_unicast_failure(ctx, next_hop, payload),
            Agent::Olsr(a) => a.on_unicast_failure(ctx, next_hop, payload),
        }
    }

    pub fn route(&self, dest: NodeId, now: SimTime) -> Option<RouteView> {
        match self {
            Agent::Aodv(a) => a.route(dest, now),
            Agent::Fsr(a) => a.route(dest, now),
            Agent::Olsr(a) => a.route(dest, now),
        }
    }

    /// Data packets parked inside the agent.
    pub fn buffered_data(&self) -> usize {
        match self {
            Agent::Aodv(a) => a.buffered_data(),
            Agent::Fsr(_) | Agent::Olsr(_) => 0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preset_names_round_trip() {
        let names = Preset::names();
        assert_eq!(
            names,
            ["aodv-def", "aodv-mod", "fsr-def", "fsr-mod", "olsr-def", "olsr-mod"]
        );
        for p in Preset::ALL {
            assert_eq!(Preset::from_name(&p.name()), Some(p));
            assert_eq!(p.params().protocol(), p.protocol);
            assert!(p.params().validate().is_ok());
        }
        assert_eq!(Preset::from_name("dsr-def"), None);
    }
}
