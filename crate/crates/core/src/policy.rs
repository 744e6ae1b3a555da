//! Dispatch policies behind a policy-neutral interface.
//!
//! A policy only ever sees a [`DecisionRequest`] and must return one of its
//! candidates. Ties are broken by the lowest job id.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{DecisionRequest, Job, JobId};

#[derive(Debug, Error, PartialEq)]
pub enum PolicyError {
    #[error("decision request has no candidates")]
    EmptyCandidates,
    #[error("candidate {0} is missing from the snapshot")]
    MissingCandidate(JobId),
    #[error("unknown policy {0:?} (expected edd or spt)")]
    UnknownPolicy(String),
}

pub trait DispatchPolicy: Send + Sync {
    fn name(&self) -> &'static str;

    /// Picks the intended job. Must return a member of `request.candidates()`
    /// and be a pure function of the request.
    fn select(&self, request: &DecisionRequest) -> Result<JobId, PolicyError>;
}

fn select_min_by(
    request: &DecisionRequest,
    key: impl Fn(&Job) -> f64,
) -> Result<JobId, PolicyError> {
    let mut best: Option<(f64, JobId)> = None;
    // Candidates are in ascending id order, so a strict `<` keeps the lowest
    // id among equal keys.
    for &id in request.candidates() {
        let job = request.job(id).ok_or(PolicyError::MissingCandidate(id))?;
        let k = key(job);
        if best.is_none_or(|(b, _)| k < b) {
            best = Some((k, id));
        }
    }
    best.map(|(_, id)| id).ok_or(PolicyError::EmptyCandidates)
}

/// Earliest due date.
pub fn select_edd(request: &DecisionRequest) -> Result<JobId, PolicyError> {
    select_min_by(request, |j| j.due_date)
}

/// Shortest processing time.
pub fn select_spt(request: &DecisionRequest) -> Result<JobId, PolicyError> {
    select_min_by(request, |j| j.processing_time)
}

/// First admissible candidate (lowest id). Used once re-isolation retries are
/// exhausted.
pub fn select_fallback(request: &DecisionRequest) -> Result<JobId, PolicyError> {
    request
        .candidates()
        .first()
        .copied()
        .ok_or(PolicyError::EmptyCandidates)
}

/// The evaluated heuristics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    Edd,
    Spt,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 2] = [PolicyKind::Edd, PolicyKind::Spt];

    pub fn as_str(self) -> &'static str {
        match self {
            PolicyKind::Edd => "edd",
            PolicyKind::Spt => "spt",
        }
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PolicyKind {
    type Err = PolicyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "edd" => Ok(PolicyKind::Edd),
            "spt" => Ok(PolicyKind::Spt),
            _ => Err(PolicyError::UnknownPolicy(s.to_string())),
        }
    }
}

impl DispatchPolicy for PolicyKind {
    fn name(&self) -> &'static str {
        self.as_str()
    }

    fn select(&self, request: &DecisionRequest) -> Result<JobId, PolicyError> {
        match self {
            PolicyKind::Edd => select_edd(request),
            PolicyKind::Spt => select_spt(request),
        }
    }
}

/// Lowest-id heuristic as a standalone policy.
#[derive(Debug, Clone, Copy, Default)]
pub struct FirstAdmissible;

impl DispatchPolicy for FirstAdmissible {
    fn name(&self) -> &'static str {
        "fallback"
    }

    fn select(&self, request: &DecisionRequest) -> Result<JobId, PolicyError> {
        select_fallback(request)
    }
}
