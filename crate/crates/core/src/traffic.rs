//! CBR traffic and the delivery / delay / overhead metrics.

use std::collections::BTreeSet;
use std::io;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::{stream, stream_rng};
use crate::sim::NodeId;
use crate::time::SimTime;

pub const DEFAULT_PACKET_SIZE: u32 = 1000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MetricError {
    #[error("{metric} is undefined: {reason}")]
    Undefined {
        metric: &'static str,
        reason: &'static str,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowConfig {
    pub src: NodeId,
    pub dst: NodeId,
    pub packet_size: u32,
    /// Packets per second.
    pub rate: f64,
    pub start: f64,
    pub stop: f64,
}

impl FlowConfig {
    pub fn validate(&self, horizon: f64, node_count: usize) -> Result<(), String> {
        if self.src == self.dst {
            return Err(format!(
                "flow {}->{}: source equals destination",
                self.src, self.dst
            ));
        }
        if self.src.index() >= node_count || self.dst.index() >= node_count {
            return Err(format!(
                "flow {}->{}: node id out of range (node_count = {node_count})",
                self.src, self.dst
            ));
        }
        if !(self.rate.is_finite() && self.rate > 0.0) {
            return Err(format!(
                "flow {}->{}: rate must be positive",
                self.src, self.dst
            ));
        }
        if !(self.start >= 0.0 && self.start < self.stop && self.stop <= horizon) {
            return Err(format!(
                "flow {}->{}: need 0 <= start < stop <= horizon ({} / {} / {horizon})",
                self.src, self.dst, self.start, self.stop
            ));
        }
        if self.packet_size == 0 {
            return Err(format!(
                "flow {}->{}: packet_size must be positive",
                self.src, self.dst
            ));
        }
        Ok(())
    }

    /// Packets emitted over `[start, stop)`.
    pub fn emission_count(&self) -> u64 {
        ((self.stop - self.start) * self.rate).floor().max(0.0) as u64
    }

    pub fn interval(&self) -> SimTime {
        SimTime::from_secs_f64(1.0 / self.rate)
    }

    pub fn emission_time(&self, seq: u64) -> SimTime {
        SimTime::from_secs_f64(self.start) + self.interval().mul(seq)
    }
}

/// Defaults for generated flows when a scenario does not list them.
#[derive(Debug, Clone, PartialEq)]
pub struct TrafficConfig {
    pub flows: usize,
    pub rate: f64,
    pub packet_size: u32,
    pub start_min: f64,
    pub start_max: f64,
}

impl Default for TrafficConfig {
    fn default() -> Self {
        Self {
            flows: 10,
            rate: 4.0,
            packet_size: DEFAULT_PACKET_SIZE,
            start_min: 10.0,
            start_max: 20.0,
        }
    }
}

/// Draws distinct `(src, dst)` pairs with start times uniform in
/// `[start_min, start_max]`; every flow runs to the horizon.
pub fn generate_flows(
    cfg: &TrafficConfig,
    node_count: usize,
    seed: u64,
    horizon: f64,
) -> Vec<FlowConfig> {
    let mut rng = stream_rng(seed, stream::TRAFFIC, 0);
    let pairs = node_count * node_count.saturating_sub(1);
    let wanted = cfg.flows.min(pairs);
    let mut used = BTreeSet::new();
    let mut flows = Vec::with_capacity(wanted);
    while flows.len() < wanted {
        let src = rng.random_range(0..node_count) as u32;
        let dst = rng.random_range(0..node_count) as u32;
        if src == dst || !used.insert((src, dst)) {
            continue;
        }
        let start = if cfg.start_max > cfg.start_min {
            rng.random_range(cfg.start_min..=cfg.start_max)
        } else {
            cfg.start_min
        };
        flows.push(FlowConfig {
            src: NodeId(src),
            dst: NodeId(dst),
            packet_size: cfg.packet_size,
            rate: cfg.rate,
            start,
            stop: horizon,
        });
    }
    flows
}

/// Per-run counters behind PDR, E2ED and NRO.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunMetrics {
    pub data_sent: u64,
    pub data_delivered: u64,
    pub data_dropped: u64,
    /// Routing transmissions; every hop of every control message counts.
    pub routing_packets: u64,
    pub routing_bytes: u64,
    pub latency_sum: SimTime,
    /// Seconds, one entry per delivered packet.
    pub latencies: Vec<f64>,
}

impl RunMetrics {
    pub fn record_delivery(&mut self, latency: SimTime) {
        self.data_delivered += 1;
        self.latency_sum += latency;
        self.latencies.push(latency.as_secs_f64());
    }

    /// Delivered percentage of sent data packets.
    pub fn pdr(&self) -> Result<f64, MetricError> {
        if self.data_sent == 0 {
            return Err(MetricError::Undefined {
                metric: "PDR",
                reason: "no data packets were sent",
            });
        }
        Ok(100.0 * self.data_delivered as f64 / self.data_sent as f64)
    }

    /// Mean application-to-application latency in seconds.
    pub fn e2ed(&self) -> Result<f64, MetricError> {
        if self.data_delivered == 0 {
            return Err(MetricError::Undefined {
                metric: "E2ED",
                reason: "no data packets were delivered",
            });
        }
        Ok(self.latency_sum.as_nanos() as f64 / self.data_delivered as f64 / 1e9)
    }

    /// Routing transmissions per delivered data packet.
    pub fn nro(&self) -> Result<f64, MetricError> {
        if self.data_delivered == 0 {
            return Err(MetricError::Undefined {
                metric: "NRO",
                reason: "no data packets were delivered",
            });
        }
        Ok(self.routing_packets as f64 / self.data_delivered as f64)
    }
}

/// One row of the sweep CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsvRow {
    pub protocol: String,
    pub preset: String,
    pub net_type: String,
    pub nodes: usize,
    pub seed: u64,
    pub pdr: Option<f64>,
    pub e2ed_s: Option<f64>,
    pub nro: Option<f64>,
    pub data_sent: u64,
    pub data_delivered: u64,
    pub routing_pkts: u64,
}

pub const CSV_HEADER: &str =
    "protocol,preset,net_type,nodes,seed,pdr,e2ed_s,nro,data_sent,data_delivered,routing_pkts";

impl CsvRow {
    pub fn from_metrics(
        protocol: &str,
        preset: &str,
        net_type: &str,
        nodes: usize,
        seed: u64,
        m: &RunMetrics,
    ) -> Self {
        Self {
            protocol: protocol.to_string(),
            preset: preset.to_string(),
            net_type: net_type.to_string(),
            nodes,
            seed,
            pdr: m.pdr().ok(),
            e2ed_s: m.e2ed().ok(),
            nro: m.nro().ok(),
            data_sent: m.data_sent,
            data_delivered: m.data_delivered,
            routing_pkts: m.routing_packets,
        }
    }
}

/// Writes the header and rows. Undefined metrics are empty fields.
pub fn write_csv<W: io::Write>(out: W, rows: &[CsvRow]) -> Result<(), csv::Error> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(out);
    w.write_record(CSV_HEADER.split(','))?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<R: io::Read>(input: R) -> Result<Vec<CsvRow>, csv::Error> {
    csv::Reader::from_reader(input).deserialize().collect()
}
