use std::collections::BTreeMap;

use super::ExecError;
use crate::domain::{
    Channel, Event, EventKind, JobId, JobStatus, JobView, ReadinessState, ResourceId, SimTime,
    Snapshot,
};

/// Continuously updated scheduler-side state.
///
/// Holds the fold of every delivered event in `(visible_time, seq)` order,
/// plus the dispatch marks the layer sets itself when it commits.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExecutionCache {
    views: BTreeMap<JobId, JobView>,
    /// Readiness changes delivered before the job's arrival.
    early: BTreeMap<JobId, Vec<(Channel, bool, SimTime)>>,
    watermark: Option<(SimTime, u64)>,
}

impl ExecutionCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn watermark(&self) -> Option<(SimTime, u64)> {
        self.watermark
    }

    pub fn view(&self, job: JobId) -> Option<&JobView> {
        self.views.get(&job)
    }

    pub fn ingest_event(&mut self, event: &Event) -> Result<(), ExecError> {
        if let Some((last_time, last_seq)) = self.watermark {
            let ordered = event
                .visible_time
                .total_cmp(&last_time)
                .then(event.seq.cmp(&last_seq))
                .is_gt();
            if !ordered {
                return Err(ExecError::WatermarkRegression {
                    time: event.visible_time,
                    seq: event.seq,
                    last_time,
                    last_seq,
                });
            }
        }
        let change = match event.kind {
            EventKind::BlockStart => Some((Channel::Transactional, false)),
            EventKind::BlockEnd => Some((Channel::Transactional, true)),
            EventKind::FaultStart => Some((Channel::Physical, false)),
            EventKind::FaultEnd => Some((Channel::Physical, true)),
            EventKind::Arrival | EventKind::Completion => None,
        };
        match event.kind {
            EventKind::Arrival => {
                let job = event.release.ok_or(ExecError::MissingRelease(event.job))?;
                let mut readiness = ReadinessState::ready(event.true_time);
                for (channel, ready, at) in self.early.remove(&event.job).unwrap_or_default() {
                    readiness.apply(channel, ready, at);
                }
                self.views.insert(
                    event.job,
                    JobView {
                        job,
                        readiness,
                        status: JobStatus::Waiting,
                    },
                );
            }
            EventKind::Completion => {
                if let Some(view) = self.views.get_mut(&event.job) {
                    view.status = JobStatus::Completed;
                    view.job.completion_time = Some(event.true_time);
                }
            }
            _ => {
                let (channel, ready) = change.expect("readiness event");
                match self.views.get_mut(&event.job) {
                    Some(view) => {
                        view.readiness.apply(channel, ready, event.true_time);
                    }
                    None => self
                        .early
                        .entry(event.job)
                        .or_default()
                        .push((channel, ready, event.true_time)),
                }
            }
        }
        self.watermark = Some(event.delivery_key());
        Ok(())
    }

    /// Records that the layer committed `job` to the machine.
    pub fn mark_dispatched(&mut self, job: JobId) -> Result<(), ExecError> {
        match self.views.get_mut(&job) {
            Some(view) if view.status == JobStatus::Waiting => {
                view.status = JobStatus::Dispatched;
                Ok(())
            }
            _ => Err(ExecError::NotWaiting(job)),
        }
    }

    /// Deep copy of the current views as an immutable snapshot.
    pub fn latch_snapshot(&self, epoch: u64, t: SimTime, resource: ResourceId) -> Snapshot {
        debug_assert!(self.watermark.is_none_or(|(w, _)| w <= t));
        Snapshot::new(epoch, t, resource, self.views.clone())
    }

    /// True when some waiting job is observed ready on both channels.
    pub fn has_candidates(&self) -> bool {
        self.views
            .values()
            .any(|v| v.status == JobStatus::Waiting && v.readiness.is_admissible())
    }
}
