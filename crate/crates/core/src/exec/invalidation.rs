use crate::domain::{DecisionRequest, Event, EventKind, JobId, SimTime};

/// A decision waiting for its commit.
#[derive(Debug, Clone)]
pub struct PendingDecision {
    pub request: DecisionRequest,
    pub intent: JobId,
    pub latch_time: SimTime,
    pub commit_due: SimTime,
    /// Re-latches already performed in this epoch.
    pub retries: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Keep,
    Abort,
}

/// Decides whether a delivery during the decision window invalidates the
/// pending intent.
///
/// Only events that take the intended job out of admissibility (block or
/// fault start) or show it completed elsewhere abort. Events on other jobs
/// never do, which bounds how often a decision can be knocked back.
/// Deliveries outside `[latch_time, commit_due]` are not in scope and keep.
pub fn check_invalidation(pending: &PendingDecision, event: &Event) -> Verdict {
    let in_window =
        event.visible_time >= pending.latch_time && event.visible_time <= pending.commit_due;
    let hits_intent = event.job == pending.intent
        && (event.kind.removes_admissibility() || event.kind == EventKind::Completion);
    if in_window && hits_intent {
        Verdict::Abort
    } else {
        Verdict::Keep
    }
}
