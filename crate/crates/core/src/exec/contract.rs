use std::sync::Arc;

use super::ExecError;
use crate::domain::{DecisionRequest, JobId, JobStatus, Snapshot};

/// Jobs that are waiting and observed both transactionally admissible and
/// physically feasible under `snapshot`, by ascending id.
pub fn compute_candidates(snapshot: &Snapshot) -> Vec<JobId> {
    snapshot
        .job_views()
        .iter()
        .filter(|(_, v)| v.status == JobStatus::Waiting && v.readiness.is_admissible())
        .map(|(&id, _)| id)
        .collect()
}

pub fn build_request(snapshot: Arc<Snapshot>) -> Result<DecisionRequest, ExecError> {
    let candidates = compute_candidates(&snapshot);
    Ok(DecisionRequest::new(snapshot, candidates)?)
}
