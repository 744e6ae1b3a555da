//! Deterministic single-machine plant: ground truth, disturbances, and the
//! lagged observation channel.

mod calendar;
mod config;
mod plant;
mod rng;

pub use calendar::{CalendarError, EventCalendar};
pub use config::{FailureCost, LagPreset, SimConfig, UniformRange, WindowAnchor};
pub use plant::{
    emit_observation, generate_job, schedule_disturbances, Adjudication, DisturbancePlan,
    DisturbanceWindow, MachineInterval, Occurrence, Plant, WindowChannel, WindowDraw,
};
pub use rng::{event_lag_rng, replication_seed, JobStreams, Stream};

use thiserror::Error;

use crate::domain::{DomainError, JobId};

#[derive(Debug, Error, PartialEq)]
pub enum SimError {
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
    #[error("unknown job {0}")]
    UnknownJob(JobId),
    #[error("machine busy at t={time} (commit of job {job})")]
    MachineBusy { job: JobId, time: f64 },
    #[error("job {job} cannot be committed: {reason}")]
    NotCommittable { job: JobId, reason: &'static str },
    #[error(transparent)]
    Calendar(#[from] CalendarError),
    #[error(transparent)]
    Domain(#[from] DomainError),
}
