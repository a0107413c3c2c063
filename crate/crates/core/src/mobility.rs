//! Node trajectories: static placement, random waypoint and a road grid.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::Rng;
use thiserror::Error;

use crate::rng::{stream, stream_rng};

/// 40 km/h in m/s.
pub const DEFAULT_SPEED: f64 = 40.0 / 3.6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MobilityError {
    #[error("time {t} is outside the trajectory span [{start}, {end}]")]
    OutOfRange { t: f64, start: f64, end: f64 },
    #[error("invalid mobility configuration: {0}")]
    Config(String),
    #[error("invalid trajectory: {0}")]
    Trajectory(String),
    #[error("trace line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dist(self, other: Point2) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    fn lerp(self, other: Point2, frac: f64) -> Point2 {
        Point2::new(
            self.x + (other.x - self.x) * frac,
            self.y + (other.y - self.y) * frac,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Waypoint {
    pub pos: Point2,
    pub arrive_t: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MobilityModel {
    Static,
    RandomWaypoint,
    RoadGrid,
}

impl MobilityModel {
    pub fn name(self) -> &'static str {
        match self {
            MobilityModel::Static => "static",
            MobilityModel::RandomWaypoint => "random_waypoint",
            MobilityModel::RoadGrid => "road_grid",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "static" => Some(MobilityModel::Static),
            "random_waypoint" => Some(MobilityModel::RandomWaypoint),
            "road_grid" => Some(MobilityModel::RoadGrid),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Area {
    pub width: f64,
    pub height: f64,
}

impl Area {
    pub fn contains(&self, p: Point2) -> bool {
        (0.0..=self.width).contains(&p.x) && (0.0..=self.height).contains(&p.y)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MobilityConfig {
    pub model: MobilityModel,
    pub area: Area,
    pub speed: f64,
    pub pause: f64,
    pub grid_spacing: f64,
    pub seed: u64,
}

impl MobilityConfig {
    /// Random waypoint over 1000 m x 1000 m at 40 km/h, no pause.
    pub fn manet(seed: u64) -> Self {
        Self {
            model: MobilityModel::RandomWaypoint,
            area: Area {
                width: 1000.0,
                height: 1000.0,
            },
            speed: DEFAULT_SPEED,
            pause: 0.0,
            grid_spacing: 200.0,
            seed,
        }
    }

    /// Road grid over 1500 m x 1500 m with 200 m blocks at 40 km/h.
    pub fn vanet(seed: u64) -> Self {
        Self {
            model: MobilityModel::RoadGrid,
            area: Area {
                width: 1500.0,
                height: 1500.0,
            },
            ..Self::manet(seed)
        }
    }

    pub fn validate(&self) -> Result<(), MobilityError> {
        let finite_pos = |v: f64| v.is_finite() && v > 0.0;
        if !finite_pos(self.area.width) || !finite_pos(self.area.height) {
            return Err(MobilityError::Config(
                "area width and height must be positive".into(),
            ));
        }
        if self.model != MobilityModel::Static && !finite_pos(self.speed) {
            return Err(MobilityError::Config(
                "speed must be positive for mobile models".into(),
            ));
        }
        if !self.pause.is_finite() || self.pause < 0.0 {
            return Err(MobilityError::Config("pause must be non-negative".into()));
        }
        if self.model == MobilityModel::RoadGrid {
            if !finite_pos(self.grid_spacing) {
                return Err(MobilityError::Config(
                    "grid_spacing must be positive".into(),
                ));
            }
            if self.area.width < self.grid_spacing || self.area.height < self.grid_spacing {
                return Err(MobilityError::Config(
                    "road grid needs at least one block in each direction".into(),
                ));
            }
        }
        Ok(())
    }
}

/// Piecewise-linear motion through waypoints, valid on `[start, end]`.
/// The node rests at its last waypoint until `end`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    waypoints: Vec<Waypoint>,
    end: f64,
}

impl Trajectory {
    pub fn new(waypoints: Vec<Waypoint>, end: f64) -> Result<Self, MobilityError> {
        let first = waypoints
            .first()
            .ok_or_else(|| MobilityError::Trajectory("no waypoints".into()))?;
        if waypoints.windows(2).any(|w| w[1].arrive_t <= w[0].arrive_t) {
            return Err(MobilityError::Trajectory(
                "waypoint times must strictly increase".into(),
            ));
        }
        if waypoints
            .iter()
            .any(|w| !(w.arrive_t.is_finite() && w.pos.x.is_finite() && w.pos.y.is_finite()))
        {
            return Err(MobilityError::Trajectory("non-finite waypoint".into()));
        }
        if end.is_nan() || end < first.arrive_t {
            return Err(MobilityError::Trajectory(
                "end precedes the first waypoint".into(),
            ));
        }
        Ok(Self { waypoints, end })
    }

    pub fn stationary(pos: Point2, end: f64) -> Self {
        Self {
            waypoints: vec![Waypoint { pos, arrive_t: 0.0 }],
            end,
        }
    }

    pub fn waypoints(&self) -> &[Waypoint] {
        &self.waypoints
    }

    pub fn start(&self) -> f64 {
        self.waypoints[0].arrive_t
    }

    pub fn end(&self) -> f64 {
        self.end
    }

    pub fn position_at(&self, t: f64) -> Result<Point2, MobilityError> {
        if !(t >= self.start() && t <= self.end) {
            return Err(MobilityError::OutOfRange {
                t,
                start: self.start(),
                end: self.end,
            });
        }
        let idx = self.waypoints.partition_point(|w| w.arrive_t <= t) - 1;
        let here = self.waypoints[idx];
        match self.waypoints.get(idx + 1) {
            None => Ok(here.pos),
            Some(next) => {
                let frac = (t - here.arrive_t) / (next.arrive_t - here.arrive_t);
                Ok(here.pos.lerp(next.pos, frac))
            }
        }
    }
}

/// Generates the trajectory of one node up to `horizon`; deterministic in
/// `(cfg, node_id)`.
pub fn generate_trajectory(
    cfg: &MobilityConfig,
    node_id: u32,
    horizon: f64,
) -> Result<Trajectory, MobilityError> {
    cfg.validate()?;
    if !(horizon.is_finite() && horizon > 0.0) {
        return Err(MobilityError::Config("horizon must be positive".into()));
    }
    let mut rng = stream_rng(cfg.seed, stream::MOBILITY, node_id as u64);
    let area = cfg.area;
    let uniform_point = |rng: &mut rand_chacha::ChaCha8Rng| {
        Point2::new(
            rng.random_range(0.0..=area.width),
            rng.random_range(0.0..=area.height),
        )
    };

    let waypoints = match cfg.model {
        MobilityModel::Static => vec![Waypoint {
            pos: uniform_point(&mut rng),
            arrive_t: 0.0,
        }],
        MobilityModel::RandomWaypoint => {
            let mut t = 0.0;
            let mut here = uniform_point(&mut rng);
            let mut out = vec![Waypoint {
                pos: here,
                arrive_t: t,
            }];
            while t < horizon {
                let dest = uniform_point(&mut rng);
                let len = here.dist(dest);
                if len == 0.0 {
                    continue;
                }
                t += len / cfg.speed;
                out.push(Waypoint {
                    pos: dest,
                    arrive_t: t,
                });
                here = dest;
                if cfg.pause > 0.0 {
                    t += cfg.pause;
                    out.push(Waypoint {
                        pos: here,
                        arrive_t: t,
                    });
                }
            }
            out
        }
        MobilityModel::RoadGrid => road_grid(cfg, horizon, &mut rng),
    };
    Trajectory::new(waypoints, horizon)
}

const DIRS: [(i64, i64); 4] = [(1, 0), (0, 1), (-1, 0), (0, -1)];

fn road_grid(cfg: &MobilityConfig, horizon: f64, rng: &mut impl Rng) -> Vec<Waypoint> {
    let s = cfg.grid_spacing;
    let nx = (cfg.area.width / s).floor() as i64;
    let ny = (cfg.area.height / s).floor() as i64;
    let at = |i: i64, j: i64| Point2::new(i as f64 * s, j as f64 * s);

    // All block edges have length s, so a uniform edge plus a uniform offset
    // is uniform over the road network.
    let horizontal = (ny + 1) * nx;
    let vertical = (nx + 1) * ny;
    let edge = rng.random_range(0..horizontal + vertical);
    let offset: f64 = rng.random_range(0.0..1.0);
    let (start, a, b) = if edge < horizontal {
        let (j, i) = (edge / nx, edge % nx);
        (
            Point2::new((i as f64 + offset) * s, j as f64 * s),
            (i, j),
            (i + 1, j),
        )
    } else {
        let e = edge - horizontal;
        let (i, j) = (e / ny, e % ny);
        (
            Point2::new(i as f64 * s, (j as f64 + offset) * s),
            (i, j),
            (i, j + 1),
        )
    };
    let (mut node, mut heading) = if rng.random_bool(0.5) {
        (b, (b.0 - a.0, b.1 - a.1))
    } else {
        (a, (a.0 - b.0, a.1 - b.1))
    };

    let mut t = 0.0;
    let mut here = start;
    let mut out = vec![Waypoint {
        pos: here,
        arrive_t: t,
    }];
    loop {
        let dest = at(node.0, node.1);
        let len = here.dist(dest);
        if len > 0.0 {
            t += len / cfg.speed;
            out.push(Waypoint {
                pos: dest,
                arrive_t: t,
            });
            here = dest;
            if cfg.pause > 0.0 {
                t += cfg.pause;
                out.push(Waypoint {
                    pos: here,
                    arrive_t: t,
                });
            }
        }
        if t >= horizon {
            break;
        }
        let inside = |d: &(i64, i64)| {
            let (i, j) = (node.0 + d.0, node.1 + d.1);
            (0..=nx).contains(&i) && (0..=ny).contains(&j)
        };
        let reverse = (-heading.0, -heading.1);
        let mut options: Vec<(i64, i64)> = DIRS
            .iter()
            .copied()
            .filter(|d| inside(d) && *d != reverse)
            .collect();
        if options.is_empty() {
            options.push(reverse);
        }
        heading = options[rng.random_range(0..options.len())];
        node = (node.0 + heading.0, node.1 + heading.1);
    }
    out
}

/// Serializes trajectories as `node_id t x y` rows.
pub fn write_trajectories<'a>(items: impl IntoIterator<Item = (u32, &'a Trajectory)>) -> String {
    let mut out = String::from("# node_id t x y\n");
    for (id, traj) in items {
        for w in traj.waypoints() {
            let _ = writeln!(out, "{id} {} {} {}", w.arrive_t, w.pos.x, w.pos.y);
        }
    }
    out
}

/// Parses `node_id t x y` rows. Each trajectory is valid up to
/// `max(horizon, last waypoint time)`.
pub fn parse_trajectories(
    text: &str,
    horizon: f64,
) -> Result<BTreeMap<u32, Trajectory>, MobilityError> {
    let mut rows: BTreeMap<u32, Vec<Waypoint>> = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let fields: Vec<&str> = content.split_whitespace().collect();
        if fields.len() != 4 {
            return Err(MobilityError::Parse {
                line,
                msg: format!("expected `node_id t x y`, found {} fields", fields.len()),
            });
        }
        let id: u32 = fields[0].parse().map_err(|e| MobilityError::Parse {
            line,
            msg: format!("node id `{}`: {e}", fields[0]),
        })?;
        let num = |s: &str| {
            s.parse::<f64>().map_err(|e| MobilityError::Parse {
                line,
                msg: format!("`{s}`: {e}"),
            })
        };
        rows.entry(id).or_default().push(Waypoint {
            arrive_t: num(fields[1])?,
            pos: Point2::new(num(fields[2])?, num(fields[3])?),
        });
    }
    rows.into_iter()
        .map(|(id, wps)| {
            let end = wps.last().map_or(horizon, |w| w.arrive_t.max(horizon));
            Trajectory::new(wps, end)
                .map(|t| (id, t))
                .map_err(|e| MobilityError::Trajectory(format!("node {id}: {e}")))
        })
        .collect()
}
