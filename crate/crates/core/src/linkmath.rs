//! Link availability from distance-only measurements.
//!
//! Two nodes in constant relative motion see a squared distance that is a
//! quadratic in time, `d(t)^2 = d0^2 + 2 (p0 . v) t + |v|^2 t^2`. Three
//! timestamped distance samples therefore pin down the relative speed and the
//! radial component of the motion, which is enough to predict when the pair
//! leaves radio range and how likely the link is to survive a given amount of
//! travel in an unknown direction.

use std::f64::consts::PI;

use thiserror::Error;

/// Radicands in `[-RADICAND_SLACK, 0)` are treated as zero speed.
pub const RADICAND_SLACK: f64 = 1e-9;

const SEAM_ULPS: f64 = 4.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinkMathError {
    #[error("invalid distance sample (t={t}, dist={dist}): time and distance must be finite and non-negative")]
    InvalidSample { t: f64, dist: f64 },
    #[error("sample timestamps must strictly increase (got {earlier} then {later})")]
    NonMonotonicTimes { earlier: f64, later: f64 },
    #[error("invalid link geometry: {0}")]
    InvalidGeometry(&'static str),
    #[error("link is already down: distance {dist} exceeds range {range}")]
    LinkDown { dist: f64, range: f64 },
    #[error("motion estimate is invalid (no real speed fits the samples)")]
    InvalidEstimate,
    #[error("path has no links")]
    EmptyPath,
    #[error("link probability {0} is outside [0, 1]")]
    ProbabilityOutOfRange(f64),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

pub type Result<T, E = LinkMathError> = std::result::Result<T, E>;

/// A timestamped inter-node distance measurement (seconds, meters).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistanceSample {
    pub t: f64,
    pub dist: f64,
}

impl DistanceSample {
    pub fn new(t: f64, dist: f64) -> Result<Self> {
        let sample = Self { t, dist };
        sample.check()?;
        Ok(sample)
    }

    fn check(&self) -> Result<()> {
        if self.t.is_finite() && self.dist.is_finite() && self.t >= 0.0 && self.dist >= 0.0 {
            Ok(())
        } else {
            Err(LinkMathError::InvalidSample {
                t: self.t,
                dist: self.dist,
            })
        }
    }
}

/// Relative motion recovered from distance samples.
///
/// An invalid estimate carries no numbers at all. A valid one carries the
/// relative speed and the cosine of the angle between the relative velocity
/// and the outward line of sight at the most recent sample (positive when the
/// nodes are separating).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MotionEstimate {
    motion: Option<(f64, f64)>,
}

impl MotionEstimate {
    pub fn invalid() -> Self {
        Self { motion: None }
    }

    /// Builds an estimate from a known speed and heading. `heading_cos` is
    /// clamped to `[-1, 1]`; speeds must be finite and non-negative.
    pub fn from_motion(speed: f64, heading_cos: f64) -> Result<Self> {
        if !speed.is_finite() || speed < 0.0 || heading_cos.is_nan() {
            return Err(LinkMathError::InvalidEstimate);
        }
        Ok(Self {
            motion: Some((speed, heading_cos.clamp(-1.0, 1.0))),
        })
    }

    /// Pure radial motion: positive `radial_speed` recedes, negative approaches.
    pub fn radial(radial_speed: f64) -> Result<Self> {
        Self::from_motion(radial_speed.abs(), radial_speed.signum())
    }

    pub fn is_valid(&self) -> bool {
        self.motion.is_some()
    }

    pub fn speed(&self) -> Option<f64> {
        self.motion.map(|(v, _)| v)
    }

    pub fn heading_cos(&self) -> Option<f64> {
        self.motion.map(|(_, c)| c)
    }
}

/// Recovers relative speed from three distance samples.
///
/// `s0` is the reference sample; the elapsed times of `s1` and `s2` are
/// measured from it. Eliminating the unknown radial term between the two
/// cosine-law relations gives
///
/// ```text
/// v^2 = ((t2 - t1) d0^2 + t1 d2^2 - t2 d1^2) / (t1 t2 (t2 - t1))
/// ```
pub fn estimate_speed(
    s0: DistanceSample,
    s1: DistanceSample,
    s2: DistanceSample,
) -> Result<MotionEstimate> {
    for s in [s0, s1, s2] {
        s.check()?;
    }
    for (a, b) in [(s0, s1), (s1, s2)] {
        if b.t <= a.t {
            return Err(LinkMathError::NonMonotonicTimes {
                earlier: a.t,
                later: b.t,
            });
        }
    }

    let t1 = s1.t - s0.t;
    let t2 = s2.t - s0.t;
    // Differences of squares keep the cancellation inside the sample noise.
    let grow1 = (s1.dist - s0.dist) * (s1.dist + s0.dist);
    let grow2 = (s2.dist - s0.dist) * (s2.dist + s0.dist);
    let mut radicand = (t1 * grow2 - t2 * grow1) / (t1 * t2 * (t2 - t1));

    if !radicand.is_finite() {
        return Ok(MotionEstimate::invalid());
    }
    if radicand < 0.0 {
        if radicand >= -RADICAND_SLACK {
            radicand = 0.0;
        } else {
            return Ok(MotionEstimate::invalid());
        }
    }

    let speed = radicand.sqrt();
    // p0 . v from the first relation, then advanced to the last sample.
    let radial0 = 0.5 * (grow1 / t1 - radicand * t1);
    let radial2 = radial0 + radicand * t2;
    let heading_cos = if speed > 0.0 && s2.dist > 0.0 {
        radial2 / (speed * s2.dist)
    } else {
        0.0
    };
    MotionEstimate::from_motion(speed, heading_cos)
}

/// Distance, radio range and travelled displacement for one node pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkGeometry {
    dist: f64,
    range: f64,
    travel: f64,
}

impl LinkGeometry {
    pub fn new(dist: f64, range: f64, travel: f64) -> Result<Self> {
        if !(dist.is_finite() && range.is_finite() && travel.is_finite()) {
            return Err(LinkMathError::InvalidGeometry("fields must be finite"));
        }
        if range <= 0.0 {
            return Err(LinkMathError::InvalidGeometry("range must be positive"));
        }
        if dist < 0.0 || travel < 0.0 {
            return Err(LinkMathError::InvalidGeometry(
                "distance and travel must be non-negative",
            ));
        }
        Ok(Self {
            dist,
            range,
            travel,
        })
    }

    pub fn dist(&self) -> f64 {
        self.dist
    }

    pub fn range(&self) -> f64 {
        self.range
    }

    pub fn travel(&self) -> f64 {
        self.travel
    }

    pub fn with_travel(self, travel: f64) -> Result<Self> {
        Self::new(self.dist, self.range, travel)
    }
}

/// Time until the pair first leaves the closed disk of radius `range`.
///
/// Solves `T^2 - b T + c = 0` with `b = -2 d cos(psi) / v` and
/// `c = (d^2 - range^2) / v^2` and returns the smallest positive root.
/// A stationary pair never expires. A pair sitting exactly on the boundary and
/// not closing in expires immediately (`0.0`).
pub fn link_expiry_time(est: &MotionEstimate, geom: &LinkGeometry) -> Result<f64> {
    if geom.dist > geom.range {
        return Err(LinkMathError::LinkDown {
            dist: geom.dist,
            range: geom.range,
        });
    }
    let (speed, heading_cos) = est.motion.ok_or(LinkMathError::InvalidEstimate)?;
    if speed == 0.0 {
        return Ok(f64::INFINITY);
    }

    let b = -2.0 * geom.dist * heading_cos / speed;
    let c = (geom.dist - geom.range) * (geom.dist + geom.range) / (speed * speed);
    let disc = (b * b - 4.0 * c).max(0.0);
    let root = disc.sqrt();

    // c <= 0, so the larger root is the only non-negative one.
    let t = if b >= 0.0 {
        0.5 * (b + root)
    } else if root == b.abs() {
        0.0
    } else {
        2.0 * c / (b - root)
    };
    if t.is_finite() {
        Ok(t.max(0.0))
    } else {
        Ok(f64::INFINITY)
    }
}

/// Probability that the pair is still within range after one node has moved
/// `travel` meters in a uniformly random direction.
pub fn availability_probability(geom: &LinkGeometry) -> f64 {
    let (z, d, range) = (geom.travel, geom.dist, geom.range);
    if z == 0.0 {
        return if d <= range { 1.0 } else { 0.0 };
    }
    if d == 0.0 {
        return if z <= range { 1.0 } else { 0.0 };
    }
    if z <= range - d {
        return 1.0;
    }
    if z > range + d {
        return 0.0;
    }
    middle_branch(z, d, range)
}

/// `arccos((Z^2 + d^2 - D^2) / (2 Z d)) / pi`, with the cosine clamped.
///
/// The curve has a square-root singularity at both ends, so a `Z` within a
/// few ulps of `D - d` or `D + d` is snapped to the exact end value.
pub fn middle_branch(z: f64, d: f64, range: f64) -> f64 {
    let tol = SEAM_ULPS * f64::EPSILON * (z + d + range);
    if z <= range - d + tol {
        return 1.0;
    }
    if z >= range + d - tol {
        return 0.0;
    }
    let cos = ((z * z + d * d - range * range) / (2.0 * z * d)).clamp(-1.0, 1.0);
    cos.acos() / PI
}

/// Availability of a multi-hop path, taking link motions as independent.
pub fn path_availability(link_probs: &[f64]) -> Result<f64> {
    if link_probs.is_empty() {
        return Err(LinkMathError::EmptyPath);
    }
    link_probs.iter().try_fold(1.0, |acc, &p| {
        if (0.0..=1.0).contains(&p) {
            Ok(acc * p)
        } else {
            Err(LinkMathError::ProbabilityOutOfRange(p))
        }
    })
}

/// Predicted lifetime and survival probability of one link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkForecast {
    pub speed: f64,
    pub expiry: f64,
    pub prob: f64,
}

/// Forecast from the three most recent samples.
///
/// The current distance is taken from `s2`; the probability is evaluated for
/// `lookahead` seconds of travel at the estimated speed. `None` means no
/// real speed fits the samples.
pub fn forecast(
    samples: [DistanceSample; 3],
    range: f64,
    lookahead: f64,
) -> Result<Option<LinkForecast>> {
    let est = estimate_speed(samples[0], samples[1], samples[2])?;
    let Some(speed) = est.speed() else {
        return Ok(None);
    };
    let geom = LinkGeometry::new(samples[2].dist, range, speed * lookahead)?;
    let expiry = link_expiry_time(&est, &geom)?;
    Ok(Some(LinkForecast {
        speed,
        expiry,
        prob: availability_probability(&geom),
    }))
}

/// Parses `t dist` pairs, one per line. Blank lines and `#` comments are
/// skipped.
pub fn parse_samples(text: &str) -> Result<Vec<DistanceSample>> {
    let mut out: Vec<DistanceSample> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let fields: Vec<&str> = content.split_whitespace().collect();
        if fields.len() != 2 {
            return Err(LinkMathError::Parse {
                line,
                msg: format!("expected `t dist`, found {} fields", fields.len()),
            });
        }
        let num = |s: &str| {
            s.parse::<f64>().map_err(|e| LinkMathError::Parse {
                line,
                msg: format!("`{s}`: {e}"),
            })
        };
        let sample = DistanceSample::new(num(fields[0])?, num(fields[1])?).map_err(|e| {
            LinkMathError::Parse {
                line,
                msg: e.to_string(),
            }
        })?;
        if let Some(prev) = out.last() {
            if sample.t <= prev.t {
                return Err(LinkMathError::Parse {
                    line,
                    msg: format!("timestamp {} does not increase", sample.t),
                });
            }
        }
        out.push(sample);
    }
    Ok(out)
}
