//! The execution and measurement layer.
//!
//! Events are folded into an [`ExecutionCache`]. When the machine is idle and
//! the cache shows an admissible job, an epoch latches an immutable
//! [`Snapshot`](crate::domain::Snapshot), builds the decision request, asks the
//! policy for an intent, and commits it one decision window later. In
//! [`Architecture::Layer`](crate::domain::Architecture) mode deliveries during
//! the window are checked against the intent and can abort the decision.

mod cache;
mod contract;
mod engine;
mod invalidation;

pub use cache::ExecutionCache;
pub use contract::{build_request, compute_candidates};
pub use engine::{Engine, ExecConfig, ReplicationOutcome};
pub use invalidation::{check_invalidation, PendingDecision, Verdict};

use thiserror::Error;

use crate::domain::{DomainError, JobId, SimTime};
use crate::policy::PolicyError;
use crate::sim::{CalendarError, SimError};

#[derive(Debug, Error, PartialEq)]
pub enum ExecError {
    #[error("watermark regression: event ({time}, {seq}) precedes ({last_time}, {last_seq})")]
    WatermarkRegression {
        time: SimTime,
        seq: u64,
        last_time: SimTime,
        last_seq: u64,
    },
    #[error("arrival of job {0} carries no job attributes")]
    MissingRelease(JobId),
    #[error("job {0} is not waiting in the cache")]
    NotWaiting(JobId),
    #[error("epoch requested while the machine is busy")]
    MachineBusy,
    #[error("policy returned {0}, which is not a candidate")]
    IntentNotCandidate(JobId),
    #[error("disturbed dispatch of job {0} has no blocking event")]
    MissingBlockingEvent(JobId),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Calendar(#[from] CalendarError),
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error(transparent)]
    Domain(#[from] DomainError),
}
