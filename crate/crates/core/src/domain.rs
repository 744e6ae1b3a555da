//! Shared data model: jobs, readiness, events, snapshots, decision requests
//! and divergence records.
//!
//! Everything here is a plain value. Behavior is limited to validation and
//! outcome classification.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Simulation time in abstract time units.
pub type SimTime = f64;

#[derive(Debug, Error, PartialEq)]
pub enum DomainError {
    #[error("job {id}: {reason}")]
    InvalidJob { id: JobId, reason: &'static str },
    #[error("visibility is undefined for a clean dispatch (epoch {epoch})")]
    CleanRecord { epoch: u64 },
    #[error("candidate {job} violates the execution contract: {reason}")]
    ContractViolation { job: JobId, reason: &'static str },
    #[error("unknown architecture {0:?} (expected direct or layer)")]
    UnknownArchitecture(String),
}

/// Dense job identifier, assigned in arrival order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct JobId(pub u32);

impl fmt::Display for JobId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Dispatchable resource (a machine).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ResourceId(pub u32);

/// Ground-truth job attributes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Job {
    pub id: JobId,
    pub arrival_time: SimTime,
    pub processing_time: SimTime,
    pub due_date: SimTime,
    pub weight: f64,
    pub completion_time: Option<SimTime>,
}

impl Job {
    pub fn new(
        id: JobId,
        arrival_time: SimTime,
        processing_time: SimTime,
        due_date: SimTime,
        weight: f64,
    ) -> Result<Self, DomainError> {
        let invalid = |reason| DomainError::InvalidJob { id, reason };
        if !(processing_time > 0.0) {
            return Err(invalid("processing time must be positive"));
        }
        if !(weight > 0.0) {
            return Err(invalid("weight must be positive"));
        }
        if !(due_date >= arrival_time) {
            return Err(invalid("due date precedes arrival"));
        }
        Ok(Self {
            id,
            arrival_time,
            processing_time,
            due_date,
            weight,
            completion_time: None,
        })
    }

    /// Returns a copy completed at `time`.
    pub fn completed_at(mut self, time: SimTime) -> Result<Self, DomainError> {
        // Small slack for the float sum start + processing_time.
        if time + 1e-9 < self.arrival_time + self.processing_time {
            return Err(DomainError::InvalidJob {
                id: self.id,
                reason: "completion earlier than arrival plus processing time",
            });
        }
        self.completion_time = Some(time);
        Ok(self)
    }

    /// `w * max(0, C - d)`, or `None` while the job is incomplete.
    pub fn weighted_tardiness(&self) -> Option<f64> {
        self.completion_time
            .map(|c| self.weight * (c - self.due_date).max(0.0))
    }
}

/// Channel through which a state change reaches the execution layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Channel {
    Physical,
    Transactional,
    Human,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Arrival,
    BlockStart,
    BlockEnd,
    FaultStart,
    FaultEnd,
    Completion,
}

impl EventKind {
    /// Channel that carries this kind of event. Job release is a transactional
    /// fact; completions are reported by the machine.
    pub fn channel(self) -> Channel {
        match self {
            EventKind::Arrival | EventKind::BlockStart | EventKind::BlockEnd => {
                Channel::Transactional
            }
            EventKind::FaultStart | EventKind::FaultEnd | EventKind::Completion => {
                Channel::Physical
            }
        }
    }

    /// True for events that make a job inadmissible on their channel.
    pub fn removes_admissibility(self) -> bool {
        matches!(self, EventKind::BlockStart | EventKind::FaultStart)
    }
}

/// A timestamped state change.
///
/// `true_time` is when the change happened in the plant, `visible_time` when
/// the scheduler side can first observe it. `seq` is assigned at creation and
/// breaks ties between equal timestamps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub seq: u64,
    pub channel: Channel,
    pub kind: EventKind,
    pub job: JobId,
    pub true_time: SimTime,
    pub visible_time: SimTime,
    /// Job attributes released with an arrival. Not part of the trace format.
    #[serde(skip)]
    pub release: Option<Job>,
}

impl Event {
    pub fn lag(&self) -> SimTime {
        self.visible_time - self.true_time
    }

    /// Delivery order key.
    pub fn delivery_key(&self) -> (SimTime, u64) {
        (self.visible_time, self.seq)
    }
}

/// Observed (or true) readiness of one job on both channels.
///
/// Each channel keeps the true time of the change it last applied; a change
/// older than that is stale and ignored. Lags are sampled per event, so a
/// block end can be delivered before the block start it closes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReadinessState {
    pub transactional_ready: bool,
    pub physical_ready: bool,
    /// True time of the latest change applied on either channel.
    pub as_of: SimTime,
    transactional_as_of: SimTime,
    physical_as_of: SimTime,
}

impl ReadinessState {
    pub fn ready(as_of: SimTime) -> Self {
        Self {
            transactional_ready: true,
            physical_ready: true,
            as_of,
            transactional_as_of: as_of,
            physical_as_of: as_of,
        }
    }

    pub fn is_admissible(&self) -> bool {
        self.transactional_ready && self.physical_ready
    }

    /// Applies a readiness change observed on `channel`. Returns false when the
    /// change is older than what the channel already reflects.
    pub fn apply(&mut self, channel: Channel, ready: bool, true_time: SimTime) -> bool {
        let (flag, stamp) = match channel {
            Channel::Transactional => (&mut self.transactional_ready, &mut self.transactional_as_of),
            Channel::Physical => (&mut self.physical_ready, &mut self.physical_as_of),
            Channel::Human => return false,
        };
        if true_time < *stamp {
            return false;
        }
        *flag = ready;
        *stamp = true_time;
        self.as_of = self.as_of.max(true_time);
        true
    }
}

/// Lifecycle of a job as seen by the execution layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JobStatus {
    Waiting,
    Dispatched,
    Completed,
}

/// Scheduler-facing view of one job.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JobView {
    pub job: Job,
    pub readiness: ReadinessState,
    pub status: JobStatus,
}

/// Immutable point-in-time view latched at a decision epoch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    epoch: u64,
    latch_time: SimTime,
    resource: ResourceId,
    job_views: BTreeMap<JobId, JobView>,
}

impl Snapshot {
    pub fn new(
        epoch: u64,
        latch_time: SimTime,
        resource: ResourceId,
        job_views: BTreeMap<JobId, JobView>,
    ) -> Self {
        Self {
            epoch,
            latch_time,
            resource,
            job_views,
        }
    }

    pub fn epoch(&self) -> u64 {
        self.epoch
    }

    pub fn latch_time(&self) -> SimTime {
        self.latch_time
    }

    pub fn resource(&self) -> ResourceId {
        self.resource
    }

    pub fn job_views(&self) -> &BTreeMap<JobId, JobView> {
        &self.job_views
    }

    pub fn view(&self, job: JobId) -> Option<&JobView> {
        self.job_views.get(&job)
    }
}

/// The execution contract handed to a policy: snapshot, idle resource, and
/// the admissible candidates under that snapshot.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionRequest {
    snapshot: Arc<Snapshot>,
    resource: ResourceId,
    candidates: Vec<JobId>,
}

impl DecisionRequest {
    /// Builds a request, checking every candidate against the snapshot.
    pub fn new(snapshot: Arc<Snapshot>, mut candidates: Vec<JobId>) -> Result<Self, DomainError> {
        candidates.sort_unstable();
        candidates.dedup();
        for &job in &candidates {
            let view = snapshot.view(job).ok_or(DomainError::ContractViolation {
                job,
                reason: "not in snapshot",
            })?;
            if view.status != JobStatus::Waiting {
                return Err(DomainError::ContractViolation {
                    job,
                    reason: "already dispatched or completed",
                });
            }
            if !view.readiness.is_admissible() {
                return Err(DomainError::ContractViolation {
                    job,
                    reason: "not observed ready on both channels",
                });
            }
        }
        let resource = snapshot.resource();
        Ok(Self {
            snapshot,
            resource,
            candidates,
        })
    }

    pub fn snapshot(&self) -> &Snapshot {
        &self.snapshot
    }

    pub fn resource(&self) -> ResourceId {
        self.resource
    }

    /// Candidates in ascending job id order.
    pub fn candidates(&self) -> &[JobId] {
        &self.candidates
    }

    pub fn contains(&self, job: JobId) -> bool {
        self.candidates.binary_search(&job).is_ok()
    }

    /// Attributes of a candidate as latched in the snapshot.
    pub fn job(&self, job: JobId) -> Option<&Job> {
        self.snapshot.view(job).map(|v| &v.job)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SysOutcome {
    Accepted,
    Rejected,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhysOutcome {
    Started,
    Fault,
    NotAttempted,
}

/// Operator intervention at commit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HumanAction {
    None,
    /// The operator ran another job instead of the intent.
    Redirect(JobId),
    /// The operator cancelled the dispatch.
    Cancel,
}

impl HumanAction {
    pub fn is_override(self) -> bool {
        !matches!(self, HumanAction::None)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Visibility {
    NotApplicable,
    Visible,
    Hidden,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Architecture {
    Direct,
    Layer,
}

impl Architecture {
    pub const ALL: [Architecture; 2] = [Architecture::Direct, Architecture::Layer];

    pub fn as_str(self) -> &'static str {
        match self {
            Architecture::Direct => "direct",
            Architecture::Layer => "layer",
        }
    }
}

impl fmt::Display for Architecture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Architecture {
    type Err = DomainError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "direct" => Ok(Architecture::Direct),
            "layer" => Ok(Architecture::Layer),
            _ => Err(DomainError::UnknownArchitecture(s.to_string())),
        }
    }
}

/// Typed outcome of one committed dispatch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DivergenceRecord {
    pub epoch: u64,
    pub intent: JobId,
    pub sys: SysOutcome,
    pub phys: PhysOutcome,
    pub human: HumanAction,
    pub visibility: Visibility,
    pub commit_time: SimTime,
    pub arch: Architecture,
    /// Re-latches performed before this commit.
    pub retries: u32,
    /// Committed through the fallback heuristic after retries ran out.
    pub fallback: bool,
}

impl DivergenceRecord {
    pub fn category(&self) -> OutcomeCategory {
        classify_outcome(self)
    }

    pub fn is_disturbed(&self) -> bool {
        self.category() != OutcomeCategory::Clean
    }

    /// Checks that the outcome triple is one the adjudication can produce.
    ///
    /// A rejected dispatch whose intent is also under an active fault is
    /// recorded as `(Rejected, Fault)`: the physical channel reports the fault
    /// even though no start was attempted.
    pub fn is_well_formed(&self) -> bool {
        use HumanAction as H;
        use PhysOutcome as P;
        use SysOutcome as S;
        let outcome_ok = matches!(
            (self.sys, self.phys, self.human),
            (S::Accepted, P::Started, H::None)
                | (S::Accepted, P::Fault, H::None)
                | (S::Rejected, P::NotAttempted, H::None)
                | (S::Rejected, P::Fault, H::None)
                | (S::Accepted, P::Started, H::Redirect(_))
                | (S::Accepted, P::NotAttempted, H::Cancel)
        );
        let clean = self.category() == OutcomeCategory::Clean;
        outcome_ok && (self.visibility == Visibility::NotApplicable) == clean
    }

    pub fn log_line<'a>(&self, policy: &'a str, seed: u64) -> DivergenceLogLine<'a> {
        DivergenceLogLine {
            epoch: self.epoch,
            intent: self.intent,
            sys: self.sys,
            phys: self.phys,
            human: self.human,
            visibility: self.visibility,
            commit_time: self.commit_time,
            arch: self.arch,
            policy: policy.into(),
            seed,
        }
    }
}

/// One line of the divergence log. Field names and order are fixed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DivergenceLogLine<'a> {
    pub epoch: u64,
    pub intent: JobId,
    pub sys: SysOutcome,
    pub phys: PhysOutcome,
    pub human: HumanAction,
    pub visibility: Visibility,
    pub commit_time: SimTime,
    pub arch: Architecture,
    #[serde(borrow)]
    pub policy: std::borrow::Cow<'a, str>,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutcomeCategory {
    Clean,
    Transactional,
    Physical,
    Combined,
    HumanOverride,
}

impl OutcomeCategory {
    /// Disturbed categories, in reporting order.
    pub const DISTURBED: [OutcomeCategory; 4] = [
        OutcomeCategory::Transactional,
        OutcomeCategory::Physical,
        OutcomeCategory::Combined,
        OutcomeCategory::HumanOverride,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            OutcomeCategory::Clean => "clean",
            OutcomeCategory::Transactional => "transactional",
            OutcomeCategory::Physical => "physical",
            OutcomeCategory::Combined => "combined",
            OutcomeCategory::HumanOverride => "human_override",
        }
    }
}

/// Maps a record to exactly one outcome category.
///
/// Human intervention wins over every automated cause. Otherwise a rejection
/// together with a reported fault is `Combined`, a rejection alone is
/// `Transactional`, and any accepted dispatch that did not start is `Physical`.
pub fn classify_outcome(record: &DivergenceRecord) -> OutcomeCategory {
    if record.human.is_override() {
        return OutcomeCategory::HumanOverride;
    }
    match (record.sys, record.phys) {
        (SysOutcome::Accepted, PhysOutcome::Started) => OutcomeCategory::Clean,
        (SysOutcome::Accepted, _) => OutcomeCategory::Physical,
        (SysOutcome::Rejected, PhysOutcome::Fault) => OutcomeCategory::Combined,
        (SysOutcome::Rejected, _) => OutcomeCategory::Transactional,
    }
}

/// Visible when the event that established the blocking condition had been
/// delivered by commit time, hidden otherwise.
pub fn classify_visibility(
    record: &DivergenceRecord,
    blocking_event: &Event,
) -> Result<Visibility, DomainError> {
    if record.category() == OutcomeCategory::Clean {
        return Err(DomainError::CleanRecord {
            epoch: record.epoch,
        });
    }
    Ok(if blocking_event.visible_time <= record.commit_time {
        Visibility::Visible
    } else {
        Visibility::Hidden
    })
}
