//! Scenario configuration, single runs and parameter sweeps.
//!
//! Configs are line-oriented `key = value` text with `[section]` headers and
//! `#` comments. Sections: `scenario`, `mobility`, `radio`, `traffic`,
//! `flow` (repeatable), `aodv`, `fsr`, `olsr`, `sweep`.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::path::PathBuf;

use rayon::prelude::*;
use thiserror::Error;

use crate::mobility::{
    self, generate_trajectory, parse_trajectories, Area, MobilityConfig, MobilityError,
    MobilityModel,
};
use crate::routing::{Agent, Preset, Protocol, ProtocolParams};
use crate::sim::{MacProfile, NodeId, RadioConfig, RunOutput, SimError, SimSetup, Simulator};
use crate::traffic::{generate_flows, CsvRow, FlowConfig, TrafficConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum NetType {
    Manet,
    Vanet,
}

impl NetType {
    pub fn name(self) -> &'static str {
        match self {
            NetType::Manet => "manet",
            NetType::Vanet => "vanet",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name.to_ascii_lowercase().as_str() {
            "manet" => Some(NetType::Manet),
            "vanet" => Some(NetType::Vanet),
            _ => None,
        }
    }

    pub fn default_mobility(self) -> MobilityModel {
        match self {
            NetType::Manet => MobilityModel::RandomWaypoint,
            NetType::Vanet => MobilityModel::RoadGrid,
        }
    }

    pub fn default_mac(self) -> MacProfile {
        match self {
            NetType::Manet => MacProfile::Mac80211,
            NetType::Vanet => MacProfile::Mac80211p,
        }
    }
}

/// A configuration problem, with the offending line when known.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub message: String,
}

impl ConfigError {
    fn at(line: usize, message: impl Into<String>) -> Self {
        Self {
            line: Some(line),
            message: message.into(),
        }
    }

    fn global(message: impl Into<String>) -> Self {
        Self {
            line: None,
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("invalid configuration ({} problem(s))", .0.len())]
    Config(Vec<ConfigError>),
    #[error(transparent)]
    Mobility(#[from] MobilityError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("cannot read {path}: {msg}")]
    Io { path: String, msg: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct MobilitySpec {
    pub model: MobilityModel,
    pub width: f64,
    pub height: f64,
    pub speed_kph: f64,
    pub pause: f64,
    pub grid_spacing: f64,
    /// Optional `node_id t x y` file replacing generated trajectories.
    pub trace_file: Option<PathBuf>,
}

impl MobilitySpec {
    pub fn for_net(net: NetType) -> Self {
        let base = match net {
            NetType::Manet => MobilityConfig::manet(0),
            NetType::Vanet => MobilityConfig::vanet(0),
        };
        Self {
            model: base.model,
            width: base.area.width,
            height: base.area.height,
            speed_kph: 40.0,
            pause: base.pause,
            grid_spacing: base.grid_spacing,
            trace_file: None,
        }
    }

    pub fn config(&self, seed: u64) -> MobilityConfig {
        MobilityConfig {
            model: self.model,
            area: Area {
                width: self.width,
                height: self.height,
            },
            speed: self.speed_kph / 3.6,
            pause: self.pause,
            grid_spacing: self.grid_spacing,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub node_counts: Vec<usize>,
    pub seeds: Vec<u64>,
    pub presets: Vec<Preset>,
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self {
            node_counts: (1..=7).map(|k| 10 * k).collect(),
            seeds: (1..=5).collect(),
            presets: Preset::ALL.to_vec(),
        }
    }
}

/// Protocol parameter overrides, kept verbatim and applied on top of
/// whichever preset a run uses.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub aodv: Vec<(String, String)>,
    pub fsr: Vec<(String, String)>,
    pub olsr: Vec<(String, String)>,
}

impl Overrides {
    fn for_protocol(&self, p: Protocol) -> &[(String, String)] {
        match p {
            Protocol::Aodv => &self.aodv,
            Protocol::Fsr => &self.fsr,
            Protocol::Olsr => &self.olsr,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub net_type: NetType,
    pub preset: Preset,
    pub node_count: usize,
    pub seed: u64,
    /// Seconds.
    pub horizon: f64,
    pub mobility: MobilitySpec,
    pub radio: RadioConfig,
    pub traffic: TrafficConfig,
    /// Explicit flows; when empty, `traffic` generates them.
    pub flows: Vec<FlowConfig>,
    pub overrides: Overrides,
    pub sweep: SweepSpec,
}

pub const DEFAULT_HORIZON: f64 = 900.0;
pub const DEFAULT_NODE_COUNT: usize = 10;

const SCENARIO_KEYS: &[&str] = &["net_type", "preset", "node_count", "seed", "horizon"];
const MOBILITY_KEYS: &[&str] = &[
    "model",
    "width",
    "height",
    "speed_kph",
    "pause",
    "grid_spacing",
    "trace_file",
];
const RADIO_KEYS: &[&str] = &[
    "mac",
    "range",
    "base_delay",
    "per_contender_delay",
    "loss_base",
    "loss_per_contender",
];
const TRAFFIC_KEYS: &[&str] = &["flows", "rate", "packet_size", "start_min", "start_max"];
const FLOW_KEYS: &[&str] = &["src", "dst", "rate", "packet_size", "start", "stop"];
const AODV_KEYS: &[&str] = &[
    "ttl_start",
    "ttl_increment",
    "ttl_threshold",
    "net_diameter",
    "hello_interval",
    "allowed_hello_loss",
    "local_repair",
    "grat_rrep",
    "rreq_retries",
];
const FSR_KEYS: &[&str] = &[
    "intra_scope_interval",
    "inter_scope_interval",
    "scope_radius",
    "recompute_on_update",
    "hold_multiplier",
];
const OLSR_KEYS: &[&str] = &["hello_interval", "tc_interval", "hold_time_multiplier"];
const SWEEP_KEYS: &[&str] = &["node_counts", "seeds", "presets"];
const SECTIONS: &[&str] = &[
    "scenario", "mobility", "radio", "traffic", "flow", "aodv", "fsr", "olsr", "sweep",
];

fn section_keys(section: &str) -> &'static [&'static str] {
    match section {
        "scenario" => SCENARIO_KEYS,
        "mobility" => MOBILITY_KEYS,
        "radio" => RADIO_KEYS,
        "traffic" => TRAFFIC_KEYS,
        "flow" => FLOW_KEYS,
        "aodv" => AODV_KEYS,
        "fsr" => FSR_KEYS,
        "olsr" => OLSR_KEYS,
        "sweep" => SWEEP_KEYS,
        _ => &[],
    }
}

fn nearest<'a>(word: &str, candidates: &[&'a str]) -> Option<&'a str> {
    candidates
        .iter()
        .map(|c| (strsim::levenshtein(word, c), *c))
        .min()
        .map(|(_, c)| c)
}

fn parse_bool(v: &str) -> Result<bool, String> {
    match v.to_ascii_lowercase().as_str() {
        "true" | "on" | "yes" | "1" => Ok(true),
        "false" | "off" | "no" | "0" => Ok(false),
        _ => Err(format!("expected a boolean, found `{v}`")),
    }
}

fn parse_num<T: std::str::FromStr>(v: &str) -> Result<T, String>
where
    T::Err: fmt::Display,
{
    v.parse::<T>().map_err(|e| format!("`{v}`: {e}"))
}

fn parse_list<T: std::str::FromStr>(v: &str) -> Result<Vec<T>, String>
where
    T::Err: fmt::Display,
{
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(parse_num)
        .collect()
}

fn parse_preset(v: &str) -> Result<Preset, String> {
    Preset::from_name(v).ok_or_else(|| {
        format!(
            "unknown preset `{v}`; valid presets: {}",
            Preset::names().join(", ")
        )
    })
}

/// Applies one `key = value` override to protocol parameters.
pub fn apply_param(params: &mut ProtocolParams, key: &str, value: &str) -> Result<(), String> {
    match params {
        ProtocolParams::Aodv(p) => match key {
            "ttl_start" => p.ttl_start = parse_num(value)?,
            "ttl_increment" => p.ttl_increment = parse_num(value)?,
            "ttl_threshold" => p.ttl_threshold = parse_num(value)?,
            "net_diameter" => p.net_diameter = parse_num(value)?,
            "hello_interval" => p.hello_interval = parse_num(value)?,
            "allowed_hello_loss" => p.allowed_hello_loss = parse_num(value)?,
            "local_repair" => p.local_repair = parse_bool(value)?,
            "grat_rrep" => p.grat_rrep = parse_bool(value)?,
            "rreq_retries" => p.rreq_retries = parse_num(value)?,
            _ => return Err(format!("unknown aodv parameter `{key}`")),
        },
        ProtocolParams::Fsr(p) => match key {
            "intra_scope_interval" => p.intra_scope_interval = parse_num(value)?,
            "inter_scope_interval" => p.inter_scope_interval = parse_num(value)?,
            "scope_radius" => p.scope_radius = parse_num(value)?,
            "recompute_on_update" => p.recompute_on_update = parse_bool(value)?,
            "hold_multiplier" => p.hold_multiplier = parse_num(value)?,
            _ => return Err(format!("unknown fsr parameter `{key}`")),
        },
        ProtocolParams::Olsr(p) => match key {
            "hello_interval" => p.hello_interval = parse_num(value)?,
            "tc_interval" => p.tc_interval = parse_num(value)?,
            "hold_time_multiplier" => p.hold_time_multiplier = parse_num(value)?,
            _ => return Err(format!("unknown olsr parameter `{key}`")),
        },
    }
    Ok(())
}

struct Entry {
    line: usize,
    key: String,
    value: String,
}

struct Section {
    name: String,
    entries: Vec<Entry>,
}

/// Splits config text into sections, reporting syntax errors, unknown
/// sections and unknown or duplicate keys.
fn lex(text: &str, errors: &mut Vec<ConfigError>) -> Vec<Section> {
    let mut sections = vec![Section {
        name: "scenario".into(),
        entries: Vec::new(),
    }];
    let mut known = true;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(rest) = content.strip_prefix('[') {
            let Some(name) = rest.strip_suffix(']') else {
                errors.push(ConfigError::at(
                    line,
                    format!("malformed section header `{content}`"),
                ));
                known = false;
                continue;
            };
            let name = name.trim().to_ascii_lowercase();
            known = SECTIONS.contains(&name.as_str());
            if !known {
                let hint = nearest(&name, SECTIONS)
                    .map(|s| format!("; did you mean `[{s}]`?"))
                    .unwrap_or_default();
                errors.push(ConfigError::at(
                    line,
                    format!("unknown section `[{name}]`{hint}"),
                ));
                continue;
            }
            sections.push(Section {
                name,
                entries: Vec::new(),
            });
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            errors.push(ConfigError::at(
                line,
                format!("expected `key = value`, found `{content}`"),
            ));
            continue;
        };
        if !known {
            continue;
        }
        let key = key.trim().to_ascii_lowercase();
        let value = value.trim().to_string();
        let section = sections.last_mut().expect("at least one section");
        let keys = section_keys(&section.name);
        if !keys.contains(&key.as_str()) {
            let hint = nearest(&key, keys)
                .map(|k| format!("; did you mean `{k}`?"))
                .unwrap_or_default();
            errors.push(ConfigError::at(
                line,
                format!("unknown key `{key}` in [{}]{hint}", section.name),
            ));
            continue;
        }
        if section.entries.iter().any(|e| e.key == key) {
            errors.push(ConfigError::at(
                line,
                format!("duplicate key `{key}` in [{}]", section.name),
            ));
            continue;
        }
        section.entries.push(Entry { line, key, value });
    }
    sections
}

fn check(errors: &mut Vec<ConfigError>, line: usize, r: Result<(), String>) {
    if let Err(m) = r {
        errors.push(ConfigError::at(line, m));
    }
}

#[derive(Default)]
struct FlowDraft {
    line: usize,
    src: Option<u32>,
    dst: Option<u32>,
    rate: Option<f64>,
    packet_size: Option<u32>,
    start: Option<f64>,
    stop: Option<f64>,
}

impl Scenario {
    /// Defaults for a network type: AODV-DEF, 10 nodes, 900 s, and the
    /// paired mobility model and MAC profile.
    pub fn new(net_type: NetType) -> Self {
        Self {
            net_type,
            preset: Preset::ALL[0],
            node_count: DEFAULT_NODE_COUNT,
            seed: 1,
            horizon: DEFAULT_HORIZON,
            mobility: MobilitySpec::for_net(net_type),
            radio: RadioConfig::for_profile(net_type.default_mac()),
            traffic: TrafficConfig::default(),
            flows: Vec::new(),
            overrides: Overrides::default(),
            sweep: SweepSpec::default(),
        }
    }

    /// Parses and validates config text, reporting every problem found.
    pub fn from_config(text: &str) -> Result<Self, Vec<ConfigError>> {
        let mut errors = Vec::new();
        let sections = lex(text, &mut errors);
        let mut by_name: BTreeMap<&str, Vec<&Section>> = BTreeMap::new();
        for s in &sections {
            by_name.entry(s.name.as_str()).or_default().push(s);
        }
        for (name, list) in &by_name {
            if *name != "flow" && *name != "scenario" && list.len() > 1 {
                errors.push(ConfigError::global(format!(
                    "section [{name}] appears more than once"
                )));
            }
        }
        let entries = |name: &str| -> Vec<&Entry> {
            by_name
                .get(name)
                .map(|l| l.iter().flat_map(|s| s.entries.iter()).collect())
                .unwrap_or_default()
        };

        // Net type first: it selects the mobility and radio defaults.
        let mut net_type = NetType::Manet;
        for e in entries("scenario").iter().filter(|e| e.key == "net_type") {
            match NetType::from_name(&e.value) {
                Some(n) => net_type = n,
                None => check(
                    &mut errors,
                    e.line,
                    Err(format!(
                        "unknown net_type `{}`; expected manet or vanet",
                        e.value
                    )),
                ),
            }
        }
        let mut sc = Scenario::new(net_type);

        for e in entries("scenario") {
            let r = match e.key.as_str() {
                "net_type" => Ok(()),
                "preset" => parse_preset(&e.value).map(|p| sc.preset = p),
                "node_count" => parse_num(&e.value).map(|v| sc.node_count = v),
                "seed" => parse_num(&e.value).map(|v| sc.seed = v),
                "horizon" => parse_num(&e.value).map(|v| sc.horizon = v),
                _ => unreachable!("lexer filters keys"),
            };
            check(&mut errors, e.line, r);
        }

        for e in entries("mobility") {
            let m = &mut sc.mobility;
            let r = match e.key.as_str() {
                "model" => MobilityModel::from_name(&e.value)
                    .map(|v| m.model = v)
                    .ok_or_else(|| {
                        format!(
                            "unknown mobility model `{}`; expected static, random_waypoint or road_grid",
                            e.value
                        )
                    }),
                "width" => parse_num(&e.value).map(|v| m.width = v),
                "height" => parse_num(&e.value).map(|v| m.height = v),
                "speed_kph" => parse_num(&e.value).map(|v| m.speed_kph = v),
                "pause" => parse_num(&e.value).map(|v| m.pause = v),
                "grid_spacing" => parse_num(&e.value).map(|v| m.grid_spacing = v),
                "trace_file" => {
                    m.trace_file = Some(PathBuf::from(&e.value));
                    Ok(())
                }
                _ => unreachable!("lexer filters keys"),
            };
            check(&mut errors, e.line, r);
        }

        let radio_entries = entries("radio");
        for e in radio_entries.iter().filter(|e| e.key == "mac") {
            match MacProfile::from_name(&e.value) {
                Some(p) => sc.radio = RadioConfig::for_profile(p),
                None => check(
                    &mut errors,
                    e.line,
                    Err(format!(
                        "unknown mac `{}`; expected 802.11 or 802.11p",
                        e.value
                    )),
                ),
            }
        }
        for e in radio_entries.iter().filter(|e| e.key != "mac") {
            let r = &mut sc.radio;
            let res = match e.key.as_str() {
                "range" => parse_num(&e.value).map(|v| r.range = v),
                "base_delay" => parse_num(&e.value).map(|v| r.base_delay = v),
                "per_contender_delay" => parse_num(&e.value).map(|v| r.per_contender_delay = v),
                "loss_base" => parse_num(&e.value).map(|v| r.loss_base = v),
                "loss_per_contender" => parse_num(&e.value).map(|v| r.loss_per_contender = v),
                _ => unreachable!("lexer filters keys"),
            };
            check(&mut errors, e.line, res);
        }

        for e in entries("traffic") {
            let t = &mut sc.traffic;
            let r = match e.key.as_str() {
                "flows" => parse_num(&e.value).map(|v| t.flows = v),
                "rate" => parse_num(&e.value).map(|v| t.rate = v),
                "packet_size" => parse_num(&e.value).map(|v| t.packet_size = v),
                "start_min" => parse_num(&e.value).map(|v| t.start_min = v),
                "start_max" => parse_num(&e.value).map(|v| t.start_max = v),
                _ => unreachable!("lexer filters keys"),
            };
            check(&mut errors, e.line, r);
        }

        let mut drafts = Vec::new();
        for s in by_name.get("flow").into_iter().flatten() {
            let mut d = FlowDraft {
                line: s.entries.first().map_or(0, |e| e.line),
                ..Default::default()
            };
            for e in &s.entries {
                let r = match e.key.as_str() {
                    "src" => parse_num(&e.value).map(|v| d.src = Some(v)),
                    "dst" => parse_num(&e.value).map(|v| d.dst = Some(v)),
                    "rate" => parse_num(&e.value).map(|v| d.rate = Some(v)),
                    "packet_size" => parse_num(&e.value).map(|v| d.packet_size = Some(v)),
                    "start" => parse_num(&e.value).map(|v| d.start = Some(v)),
                    "stop" => parse_num(&e.value).map(|v| d.stop = Some(v)),
                    _ => unreachable!("lexer filters keys"),
                };
                check(&mut errors, e.line, r);
            }
            drafts.push(d);
        }
        for d in drafts {
            let (Some(src), Some(dst)) = (d.src, d.dst) else {
                errors.push(ConfigError {
                    line: (d.line > 0).then_some(d.line),
                    message: "[flow] needs both `src` and `dst`".into(),
                });
                continue;
            };
            sc.flows.push(FlowConfig {
                src: NodeId(src),
                dst: NodeId(dst),
                packet_size: d.packet_size.unwrap_or(sc.traffic.packet_size),
                rate: d.rate.unwrap_or(sc.traffic.rate),
                start: d.start.unwrap_or(sc.traffic.start_min),
                stop: d.stop.unwrap_or(sc.horizon),
            });
        }

        for (name, proto) in [
            ("aodv", Protocol::Aodv),
            ("fsr", Protocol::Fsr),
            ("olsr", Protocol::Olsr),
        ] {
            for e in entries(name) {
                let pair = (e.key.clone(), e.value.clone());
                match proto {
                    Protocol::Aodv => sc.overrides.aodv.push(pair),
                    Protocol::Fsr => sc.overrides.fsr.push(pair),
                    Protocol::Olsr => sc.overrides.olsr.push(pair),
                }
                let mut probe = Preset::new(proto, crate::routing::Variant::Def).params();
                check(
                    &mut errors,
                    e.line,
                    apply_param(&mut probe, &e.key, &e.value),
                );
            }
        }

        for e in entries("sweep") {
            let r = match e.key.as_str() {
                "node_counts" => parse_list(&e.value).map(|v| sc.sweep.node_counts = v),
                "seeds" => parse_list(&e.value).map(|v| sc.sweep.seeds = v),
                "presets" => e
                    .value
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(parse_preset)
                    .collect::<Result<Vec<_>, _>>()
                    .map(|v| sc.sweep.presets = v),
                _ => unreachable!("lexer filters keys"),
            };
            check(&mut errors, e.line, r);
        }

        errors.extend(sc.validate());
        if errors.is_empty() {
            Ok(sc)
        } else {
            errors.sort_by_key(|e| e.line.unwrap_or(usize::MAX));
            Err(errors)
        }
    }

    /// Semantic checks; returns every violation.
    pub fn validate(&self) -> Vec<ConfigError> {
        let mut errors = Vec::new();
        let mut push = |m: String| errors.push(ConfigError::global(m));
        if self.node_count < 2 {
            push(format!(
                "node_count ≥ 2 required, found {}",
                self.node_count
            ));
        }
        if !(self.horizon.is_finite() && self.horizon > 0.0) {
            push(format!("horizon must be positive, found {}", self.horizon));
        }
        if let Err(e) = self.mobility.config(self.seed).validate() {
            push(e.to_string());
        }
        if !(self.mobility.speed_kph.is_finite() && self.mobility.speed_kph >= 0.0) {
            push("speed_kph must be non-negative".into());
        }
        if let Err(e) = self.radio.validate() {
            push(e);
        }
        if self.flows.is_empty() {
            let t = &self.traffic;
            if t.flows == 0 {
                push("at least one flow is required (traffic flows = 0 and no [flow])".into());
            }
            if !(t.rate.is_finite() && t.rate > 0.0) {
                push("traffic rate must be positive".into());
            }
            if t.packet_size == 0 {
                push("traffic packet_size must be positive".into());
            }
            if !(t.start_min >= 0.0 && t.start_min <= t.start_max && t.start_max < self.horizon) {
                push("traffic needs 0 ≤ start_min ≤ start_max < horizon".into());
            }
        }
        for f in &self.flows {
            if let Err(e) = f.validate(self.horizon, self.node_count) {
                push(e);
            }
        }
        let mut seen = std::collections::BTreeSet::new();
        for preset in std::iter::once(self.preset).chain(self.sweep.presets.iter().copied()) {
            if !seen.insert(preset) {
                continue;
            }
            match self.params_for(preset) {
                Ok(p) => {
                    if let Err(e) = p.validate() {
                        push(format!("{preset}: {e}"));
                    }
                }
                Err(e) => push(format!("{preset}: {e}")),
            }
        }
        if self.sweep.node_counts.is_empty() {
            push("sweep node_counts must not be empty".into());
        }
        if self.sweep.node_counts.iter().any(|&n| n < 2) {
            push("sweep node_counts: node_count ≥ 2 required for every entry".into());
        }
        if self.sweep.seeds.is_empty() {
            push("sweep seeds must not be empty".into());
        }
        if self.sweep.presets.is_empty() {
            push("sweep presets must not be empty".into());
        }
        errors
    }

    /// Preset parameters with this scenario's overrides applied.
    pub fn params_for(&self, preset: Preset) -> Result<ProtocolParams, String> {
        let mut p = preset.params();
        for (k, v) in self.overrides.for_protocol(preset.protocol) {
            apply_param(&mut p, k, v)?;
        }
        Ok(p)
    }

    pub fn params(&self) -> Result<ProtocolParams, String> {
        self.params_for(self.preset)
    }

    /// Canonical config text; parsing it yields an equal scenario.
    pub fn to_config(&self) -> String {
        let mut s = String::new();
        let m = &self.mobility;
        let r = &self.radio;
        let t = &self.traffic;
        let _ = writeln!(s, "[scenario]");
        let _ = writeln!(s, "net_type = {}", self.net_type.name());
        let _ = writeln!(s, "preset = {}", self.preset);
        let _ = writeln!(s, "node_count = {}", self.node_count);
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "horizon = {}", self.horizon);
        let _ = writeln!(s, "\n[mobility]");
        let _ = writeln!(s, "model = {}", m.model.name());
        let _ = writeln!(s, "width = {}", m.width);
        let _ = writeln!(s, "height = {}", m.height);
        let _ = writeln!(s, "speed_kph = {}", m.speed_kph);
        let _ = writeln!(s, "pause = {}", m.pause);
        let _ = writeln!(s, "grid_spacing = {}", m.grid_spacing);
        if let Some(p) = &m.trace_file {
            let _ = writeln!(s, "trace_file = {}", p.display());
        }
        let _ = writeln!(s, "\n[radio]");
        let _ = writeln!(s, "mac = {}", r.mac_profile.name());
        let _ = writeln!(s, "range = {}", r.range);
        let _ = writeln!(s, "base_delay = {}", r.base_delay);
        let _ = writeln!(s, "per_contender_delay = {}", r.per_contender_delay);
        let _ = writeln!(s, "loss_base = {}", r.loss_base);
        let _ = writeln!(s, "loss_per_contender = {}", r.loss_per_contender);
        let _ = writeln!(s, "\n[traffic]");
        let _ = writeln!(s, "flows = {}", t.flows);
        let _ = writeln!(s, "rate = {}", t.rate);
        let _ = writeln!(s, "packet_size = {}", t.packet_size);
        let _ = writeln!(s, "start_min = {}", t.start_min);
        let _ = writeln!(s, "start_max = {}", t.start_max);
        for f in &self.flows {
            let _ = writeln!(s, "\n[flow]");
            let _ = writeln!(s, "src = {}", f.src);
            let _ = writeln!(s, "dst = {}", f.dst);
            let _ = writeln!(s, "rate = {}", f.rate);
            let _ = writeln!(s, "packet_size = {}", f.packet_size);
            let _ = writeln!(s, "start = {}", f.start);
            let _ = writeln!(s, "stop = {}", f.stop);
        }
        for (name, list) in [
            ("aodv", &self.overrides.aodv),
            ("fsr", &self.overrides.fsr),
            ("olsr", &self.overrides.olsr),
        ] {
            if list.is_empty() {
                continue;
            }
            let _ = writeln!(s, "\n[{name}]");
            for (k, v) in list {
                let _ = writeln!(s, "{k} = {v}");
            }
        }
        let join = |v: Vec<String>| v.join(", ");
        let _ = writeln!(s, "\n[sweep]");
        let _ = writeln!(
            s,
            "node_counts = {}",
            join(
                self.sweep
                    .node_counts
                    .iter()
                    .map(|n| n.to_string())
                    .collect()
            )
        );
        let _ = writeln!(
            s,
            "seeds = {}",
            join(self.sweep.seeds.iter().map(|n| n.to_string()).collect())
        );
        let _ = writeln!(
            s,
            "presets = {}",
            join(self.sweep.presets.iter().map(|p| p.name()).collect())
        );
        s
    }

    /// Assembles the simulator input for this scenario.
    pub fn build(&self, trace: bool) -> Result<SimSetup, ScenarioError> {
        let problems = self.validate();
        if !problems.is_empty() {
            return Err(ScenarioError::Config(problems));
        }
        let params = self
            .params()
            .map_err(|m| ScenarioError::Config(vec![ConfigError::global(m)]))?;
        let trajectories = match &self.mobility.trace_file {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| ScenarioError::Io {
                    path: path.display().to_string(),
                    msg: e.to_string(),
                })?;
                let mut map = parse_trajectories(&text, self.horizon)?;
                (0..self.node_count as u32)
                    .map(|id| {
                        map.remove(&id).ok_or_else(|| {
                            MobilityError::Config(format!("trace has no trajectory for node {id}"))
                        })
                    })
                    .collect::<Result<Vec<_>, _>>()?
            }
            None => {
                let cfg = self.mobility.config(self.seed);
                (0..self.node_count as u32)
                    .map(|id| generate_trajectory(&cfg, id, self.horizon))
                    .collect::<Result<Vec<_>, _>>()?
            }
        };
        let flows = if self.flows.is_empty() {
            generate_flows(&self.traffic, self.node_count, self.seed, self.horizon)
        } else {
            self.flows.clone()
        };
        let agents = (0..self.node_count as u32)
            .map(|id| Agent::new(NodeId(id), &params))
            .collect();
        Ok(SimSetup {
            seed: self.seed,
            horizon: self.horizon,
            radio: self.radio,
            trajectories,
            agents,
            flows,
            trace,
        })
    }

    pub fn run(&self, trace: bool) -> Result<RunOutput, ScenarioError> {
        let setup = self.build(trace)?;
        Ok(Simulator::new(setup)?.run())
    }

    pub fn csv_row(&self, out: &RunOutput) -> CsvRow {
        CsvRow::from_metrics(
            self.preset.protocol.name(),
            &self.preset.name(),
            self.net_type.name(),
            self.node_count,
            self.seed,
            &out.metrics,
        )
    }

    /// File-name stem identifying one run.
    pub fn run_label(&self) -> String {
        format!(
            "{}-{}-n{}-s{}",
            self.net_type.name(),
            self.preset,
            self.node_count,
            self.seed
        )
    }

    /// Copy of this scenario for one sweep cell.
    pub fn cell(&self, preset: Preset, node_count: usize, seed: u64) -> Scenario {
        Scenario {
            preset,
            node_count,
            seed,
            ..self.clone()
        }
    }
}

type CellRun = Result<(CsvRow, Option<String>), String>;

/// One finished sweep cell.
#[derive(Debug)]
pub struct CellResult {
    pub label: String,
    pub row: CsvRow,
    pub trace: Option<String>,
}

#[derive(Debug, Default)]
pub struct SweepOutcome {
    /// Successful runs in sweep order.
    pub cells: Vec<CellResult>,
    /// `(label, error)` for runs that failed.
    pub failures: Vec<(String, String)>,
}

impl SweepOutcome {
    pub fn rows(&self) -> Vec<CsvRow> {
        self.cells.iter().map(|c| c.row.clone()).collect()
    }
}

/// Runs the cartesian product presets × node counts × seeds on at most
/// `jobs` threads. Results come back in that nesting order whatever the
/// completion order.
pub fn sweep(
    base: &Scenario,
    node_counts: &[usize],
    seeds: &[u64],
    presets: &[Preset],
    jobs: usize,
    trace: bool,
) -> Result<SweepOutcome, ScenarioError> {
    let mut problems = Vec::new();
    if node_counts.is_empty() {
        problems.push(ConfigError::global("sweep node_counts must not be empty"));
    }
    if seeds.is_empty() {
        problems.push(ConfigError::global("sweep seeds must not be empty"));
    }
    if presets.is_empty() {
        problems.push(ConfigError::global("sweep presets must not be empty"));
    }
    if !problems.is_empty() {
        return Err(ScenarioError::Config(problems));
    }
    let cells: Vec<Scenario> = presets
        .iter()
        .flat_map(|&p| {
            node_counts
                .iter()
                .flat_map(move |&n| seeds.iter().map(move |&s| (p, n, s)))
        })
        .map(|(p, n, s)| base.cell(p, n, s))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .expect("thread pool");
    let results: Vec<(String, CellRun)> = pool.install(|| {
        cells
            .par_iter()
            .map(|sc| {
                let r = sc
                    .run(trace)
                    .map(|out| (sc.csv_row(&out), out.trace))
                    .map_err(|e| match e {
                        ScenarioError::Config(list) => list
                            .iter()
                            .map(ToString::to_string)
                            .collect::<Vec<_>>()
                            .join("; "),
                        other => other.to_string(),
                    });
                (sc.run_label(), r)
            })
            .collect()
    });
    let mut outcome = SweepOutcome::default();
    for (label, r) in results {
        match r {
            Ok((row, trace)) => outcome.cells.push(CellResult { label, row, trace }),
            Err(e) => outcome.failures.push((label, e)),
        }
    }
    Ok(outcome)
}

/// Reads a trajectory file; convenience for callers that inject traces.
pub fn load_trajectories(
    path: &std::path::Path,
    horizon: f64,
) -> Result<BTreeMap<u32, mobility::Trajectory>, ScenarioError> {
    let text = std::fs::read_to_string(path).map_err(|e| ScenarioError::Io {
        path: path.display().to_string(),
        msg: e.to_string(),
    })?;
    Ok(parse_trajectories(&text, horizon)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_gets_defaults() {
        let sc = Scenario::from_config("[scenario]\nnet_type = vanet\n").unwrap();
        assert_eq!(sc.horizon, 900.0);
        assert_eq!(sc.traffic.packet_size, 1000);
        assert_eq!(sc.mobility.speed_kph, 40.0);
        assert_eq!(sc.mobility.model, MobilityModel::RoadGrid);
        assert_eq!(sc.radio.mac_profile, MacProfile::Mac80211p);
        assert_eq!(sc.sweep.node_counts, vec![10, 20, 30, 40, 50, 60, 70]);
        let manet = Scenario::from_config("").unwrap();
        assert_eq!(manet.mobility.model, MobilityModel::RandomWaypoint);
        assert_eq!(manet.radio.mac_profile, MacProfile::Mac80211);
    }

    #[test]
    fn all_errors_are_reported() {
        let text =
            "[scenario]\nnode_count = 1\nnod_count = 3\n[radoi]\nx = 1\n[aodv]\nttl_start = 0\n";
        let errs = Scenario::from_config(text).unwrap_err();
        let joined: Vec<String> = errs.iter().map(|e| e.to_string()).collect();
        assert!(
            joined.iter().any(|m| m.contains("node_count ≥ 2")),
            "{joined:?}"
        );
        assert!(joined
            .iter()
            .any(|m| m.contains("`nod_count`") && m.contains("did you mean `node_count`")));
        assert!(joined
            .iter()
            .any(|m| m.contains("[radoi]") && m.contains("[radio]")));
        assert!(joined.iter().any(|m| m.contains("ttl_start")));
    }

    #[test]
    fn bad_preset_lists_valid_ones() {
        let errs = Scenario::from_config("preset = dsr-def\n").unwrap_err();
        assert!(errs[0].message.contains("aodv-def, aodv-mod, fsr-def"));
    }

    #[test]
    fn round_trip() {
        let text = "[scenario]\nnet_type = vanet\npreset = olsr-mod\nnode_count = 30\nseed = 7\n\
                    [radio]\nloss_base = 0\n[flow]\nsrc = 0\ndst = 5\nrate = 2\n\
                    [olsr]\ntc_interval = 4\n[sweep]\nseeds = 1, 2\n";
        let sc = Scenario::from_config(text).unwrap();
        let again = Scenario::from_config(&sc.to_config()).unwrap();
        assert_eq!(sc, again);
        assert_eq!(again.to_config(), sc.to_config());
        match sc.params().unwrap() {
            ProtocolParams::Olsr(p) => assert_eq!((p.hello_interval, p.tc_interval), (1.0, 4.0)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn sweep_cells_are_ordered() {
        let mut base = Scenario::new(NetType::Manet);
        base.horizon = 5.0;
        base.traffic.start_min = 1.0;
        base.traffic.start_max = 2.0;
        let presets = [Preset::ALL[2], Preset::ALL[0]];
        let out = sweep(&base, &[2, 3], &[1, 2], &presets, 3, false).unwrap();
        assert!(out.failures.is_empty());
        let order: Vec<(String, usize, u64)> = out
            .cells
            .iter()
            .map(|c| (c.row.preset.clone(), c.row.nodes, c.row.seed))
            .collect();
        assert_eq!(order[0], ("fsr-def".to_string(), 2, 1));
        assert_eq!(order[1], ("fsr-def".to_string(), 2, 2));
        assert_eq!(order[4], ("aodv-def".to_string(), 2, 1));
        assert_eq!(order.len(), 8);
    }
}
