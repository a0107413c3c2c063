use crate::time::SimTime;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MacProfile {
    Mac80211,
    Mac80211p,
}

impl MacProfile {
    pub fn name(self) -> &'static str {
        match self {
            MacProfile::Mac80211 => "802.11",
            MacProfile::Mac80211p => "802.11p",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "802.11" | "80211" => Some(MacProfile::Mac80211),
            "802.11p" | "80211p" => Some(MacProfile::Mac80211p),
            _ => None,
        }
    }
}

/// Fixed-radius radio with a contention-dependent latency and loss curve.
///
/// A frame sent while the transmitter has `k + 1` nodes in range reaches each
/// receiver after `base_delay + per_contender_delay * k` and is lost with
/// probability `min(1, loss_base + loss_per_contender * k)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadioConfig {
    pub range: f64,
    pub mac_profile: MacProfile,
    pub base_delay: f64,
    pub per_contender_delay: f64,
    pub loss_base: f64,
    pub loss_per_contender: f64,
}

/// Conventional TwoRayGround reception radius.
pub const DEFAULT_RANGE: f64 = 250.0;

impl RadioConfig {
    pub fn for_profile(mac_profile: MacProfile) -> Self {
        match mac_profile {
            MacProfile::Mac80211 => Self {
                range: DEFAULT_RANGE,
                mac_profile,
                base_delay: 0.002,
                per_contender_delay: 0.001,
                loss_base: 0.01,
                loss_per_contender: 0.004,
            },
            MacProfile::Mac80211p => Self {
                range: DEFAULT_RANGE,
                mac_profile,
                base_delay: 0.001,
                per_contender_delay: 0.0005,
                loss_base: 0.005,
                loss_per_contender: 0.002,
            },
        }
    }

    /// Loss-free and contention-free, `base_delay` per hop.
    pub fn ideal(range: f64, base_delay: f64) -> Self {
        Self {
            range,
            mac_profile: MacProfile::Mac80211,
            base_delay,
            per_contender_delay: 0.0,
            loss_base: 0.0,
            loss_per_contender: 0.0,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(self.range.is_finite() && self.range > 0.0) {
            return Err("radio range must be positive".into());
        }
        for (name, v) in [
            ("base_delay", self.base_delay),
            ("per_contender_delay", self.per_contender_delay),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(format!("{name} must be non-negative"));
            }
        }
        for (name, v) in [
            ("loss_base", self.loss_base),
            ("loss_per_contender", self.loss_per_contender),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(format!("{name} must be a probability in [0, 1]"));
            }
        }
        Ok(())
    }

    pub fn delay(&self, contenders: usize) -> SimTime {
        SimTime::from_secs_f64(self.base_delay)
            + SimTime::from_secs_f64(self.per_contender_delay).mul(contenders as u64)
    }

    pub fn loss(&self, contenders: usize) -> f64 {
        (self.loss_base + self.loss_per_contender * contenders as f64).min(1.0)
    }
}
