use serde::{Deserialize, Serialize};

use super::SimError;
use crate::domain::SimTime;

/// Closed interval `[low, high]` sampled uniformly (a point mass when equal).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UniformRange {
    pub low: f64,
    pub high: f64,
}

impl UniformRange {
    pub const fn new(low: f64, high: f64) -> Self {
        Self { low, high }
    }

    pub fn sample<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if self.low == self.high {
            self.low
        } else {
            rng.gen_range(self.low..self.high)
        }
    }

    pub fn mean(&self) -> f64 {
        0.5 * (self.low + self.high)
    }

    /// `P(X <= x)` for `X ~ U(low, high)`.
    pub fn cdf(&self, x: f64) -> f64 {
        if x < self.low {
            0.0
        } else if x >= self.high {
            1.0
        } else {
            (x - self.low) / (self.high - self.low)
        }
    }

    fn check(&self, name: &str) -> Result<(), SimError> {
        if !(self.low.is_finite() && self.high.is_finite() && self.low <= self.high) {
            return Err(SimError::InvalidConfig(format!(
                "{name}: bounds must be finite and ordered, got ({}, {})",
                self.low, self.high
            )));
        }
        Ok(())
    }
}

/// Observation lag regimes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LagPreset {
    Low,
    Medium,
    High,
}

impl LagPreset {
    pub const ALL: [LagPreset; 3] = [LagPreset::Low, LagPreset::Medium, LagPreset::High];

    pub const fn bounds(self) -> UniformRange {
        match self {
            LagPreset::Low => UniformRange::new(0.0, 0.3),
            LagPreset::Medium => UniformRange::new(0.1, 1.5),
            LagPreset::High => UniformRange::new(0.5, 3.0),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            LagPreset::Low => "low",
            LagPreset::Medium => "medium",
            LagPreset::High => "high",
        }
    }

    pub fn from_bounds(bounds: UniformRange) -> Option<Self> {
        Self::ALL.into_iter().find(|p| p.bounds() == bounds)
    }
}

impl std::str::FromStr for LagPreset {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|p| p.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| {
                SimError::InvalidConfig(format!("unknown lag preset {s:?} (expected low, medium or high)"))
            })
    }
}

/// Reference point for a disturbance window's start offset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowAnchor {
    /// Windows open relative to the latch of the first epoch that picks the
    /// job as its intent: the disturbance surfaces while the dispatch is in
    /// flight.
    FirstIntent,
    /// Windows open relative to the job's arrival.
    Arrival,
}

/// Machine time lost to a failed dispatch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureCost {
    /// The committed machine stays tied to the blocked job until the blocking
    /// window closes (plus the fault-handling delay for physical faults).
    HoldUntilClear,
    /// Only the decision window is lost on a rejection; a fault adds the
    /// fault-handling delay.
    WindowOnly,
}

/// Plant parameters for one replication.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub processing: UniformRange,
    pub interarrival: UniformRange,
    /// Due date = arrival + processing * factor.
    pub due_factor: UniformRange,
    /// Weights are drawn uniformly from `1..=max_weight`.
    pub max_weight: u32,
    pub p_sys: f64,
    pub p_phys: f64,
    pub p_hum: f64,
    pub decision_window: SimTime,
    pub lag: UniformRange,
    pub horizon: SimTime,
    pub warmup_fraction: f64,
    pub seed: u64,
    pub window_anchor: WindowAnchor,
    /// Window start offset from its anchor.
    pub window_offset: UniformRange,
    pub window_duration: UniformRange,
    pub failure_cost: FailureCost,
    pub fault_handling_delay: SimTime,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            processing: UniformRange::new(3.0, 8.0),
            interarrival: UniformRange::new(5.5, 10.5),
            due_factor: UniformRange::new(1.5, 3.0),
            max_weight: 5,
            p_sys: 0.14,
            p_phys: 0.10,
            p_hum: 0.07,
            decision_window: 0.85,
            lag: LagPreset::Medium.bounds(),
            horizon: 2000.0,
            warmup_fraction: 0.05,
            seed: 0,
            window_anchor: WindowAnchor::FirstIntent,
            window_offset: UniformRange::new(0.0, 0.85),
            window_duration: UniformRange::new(2.0, 6.0),
            failure_cost: FailureCost::HoldUntilClear,
            fault_handling_delay: 1.0,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        self.processing.check("processing")?;
        self.interarrival.check("interarrival")?;
        self.due_factor.check("due_factor")?;
        self.lag.check("lag")?;
        self.window_offset.check("window_offset")?;
        self.window_duration.check("window_duration")?;
        let bad = |msg: &str| Err(SimError::InvalidConfig(msg.to_string()));
        if self.processing.low <= 0.0 {
            return bad("processing times must be positive");
        }
        if self.interarrival.low <= 0.0 {
            return bad("interarrival times must be positive");
        }
        if self.due_factor.low < 0.0 {
            return bad("due_factor must be non-negative");
        }
        if self.lag.low < 0.0 {
            return bad("lag must be non-negative");
        }
        if self.window_offset.low < 0.0 {
            return bad("window_offset must be non-negative");
        }
        if self.window_duration.low <= 0.0 {
            return bad("window_duration must be positive");
        }
        if self.max_weight == 0 {
            return bad("max_weight must be at least 1");
        }
        for (name, p) in [("p_sys", self.p_sys), ("p_phys", self.p_phys), ("p_hum", self.p_hum)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(SimError::InvalidConfig(format!("{name} must lie in [0, 1], got {p}")));
            }
        }
        if !(self.decision_window >= 0.0 && self.decision_window.is_finite()) {
            return bad("decision_window must be non-negative");
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return bad("horizon must be positive");
        }
        if !(0.0..1.0).contains(&self.warmup_fraction) {
            return bad("warmup_fraction must lie in [0, 1)");
        }
        if !(self.fault_handling_delay >= 0.0) {
            return bad("fault_handling_delay must be non-negative");
        }
        Ok(())
    }

    pub fn warmup_cutoff(&self) -> SimTime {
        self.warmup_fraction * self.horizon
    }
}
