//! Line-oriented event trace.
//!
//! Columns: `t kind node src dst pkt_id size ttl`. `t` is seconds with six
//! decimals. `kind` is `<event>:<packet type>` where event is one of `gen`
//! (application send), `tx`, `rx`, `recv` (delivered to the application) or
//! `drop`. `node` is where the event happened, `src` the packet originator and
//! `dst` its destination (`*` for broadcasts).

use std::fmt::Write as _;

use super::{Dest, NodeId, Payload};
use crate::time::SimTime;

pub const HEADER: &str = "# t kind node src dst pkt_id size ttl";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceEvent {
    Gen,
    Tx,
    Rx,
    Recv,
    Drop,
}

impl TraceEvent {
    pub fn as_str(self) -> &'static str {
        match self {
            TraceEvent::Gen => "gen",
            TraceEvent::Tx => "tx",
            TraceEvent::Rx => "rx",
            TraceEvent::Recv => "recv",
            TraceEvent::Drop => "drop",
        }
    }
}

#[derive(Debug, Default)]
pub struct TraceWriter {
    buf: String,
}

impl TraceWriter {
    pub fn new() -> Self {
        let mut buf = String::with_capacity(1 << 16);
        buf.push_str(HEADER);
        buf.push('\n');
        Self { buf }
    }

    #[allow(clippy::too_many_arguments)]
    pub fn record(
        &mut self,
        t: SimTime,
        event: TraceEvent,
        node: NodeId,
        pkt_id: u64,
        payload: &Payload,
        link_dst: Option<Dest>,
    ) {
        let (src, dst, size, ttl) = match payload {
            Payload::Data(d) => (d.src, Some(d.dst), d.size, d.ttl),
            Payload::Control(c) => {
                let dst = match link_dst {
                    Some(Dest::Unicast(n)) => Some(n),
                    _ => None,
                };
                (c.origin(), dst, c.size(), c.ttl())
            }
        };
        let _ = write!(
            self.buf,
            "{t} {}:{} {node} {src} ",
            event.as_str(),
            payload.kind()
        );
        match dst {
            Some(d) => {
                let _ = write!(self.buf, "{d}");
            }
            None => self.buf.push('*'),
        }
        let _ = writeln!(self.buf, " {pkt_id} {size} {ttl}");
    }

    pub fn into_string(self) -> String {
        self.buf
    }
}

/// One parsed trace line.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub t: f64,
    pub event: String,
    pub packet: String,
    pub node: u32,
    pub src: u32,
    pub dst: Option<u32>,
    pub pkt_id: u64,
    pub size: u32,
    pub ttl: u8,
}

impl TraceRecord {
    /// Parses a data line; header and comment lines yield `None`.
    pub fn parse(line: &str) -> Option<Result<Self, String>> {
        if line.starts_with('#') || line.trim().is_empty() {
            return None;
        }
        Some(Self::parse_fields(line))
    }

    fn parse_fields(line: &str) -> Result<Self, String> {
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() != 8 {
            return Err(format!("expected 8 columns, found {}", f.len()));
        }
        let (event, packet) = f[1]
            .split_once(':')
            .ok_or_else(|| format!("bad kind `{}`", f[1]))?;
        let err = |what: &str| format!("bad {what} in `{line}`");
        Ok(Self {
            t: f[0].parse().map_err(|_| err("time"))?,
            event: event.to_string(),
            packet: packet.to_string(),
            node: f[2].parse().map_err(|_| err("node"))?,
            src: f[3].parse().map_err(|_| err("src"))?,
            dst: if f[4] == "*" {
                None
            } else {
                Some(f[4].parse().map_err(|_| err("dst"))?)
            },
            pkt_id: f[5].parse().map_err(|_| err("pkt_id"))?,
            size: f[6].parse().map_err(|_| err("size"))?,
            ttl: f[7].parse().map_err(|_| err("ttl"))?,
        })
    }
}
