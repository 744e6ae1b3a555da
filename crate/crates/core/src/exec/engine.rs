use std::sync::Arc;

use super::{build_request, check_invalidation, ExecError, ExecutionCache, PendingDecision, Verdict};
use crate::domain::{
    classify_visibility, Architecture, DivergenceRecord, Event, Job, OutcomeCategory, ResourceId,
    SimTime, Visibility,
};
use crate::policy::{select_fallback, DispatchPolicy};
use crate::sim::{EventCalendar, MachineInterval, Occurrence, Plant, SimConfig};

/// Execution-side settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExecConfig {
    pub mode: Architecture,
    /// Re-latches allowed per epoch before the fallback heuristic commits.
    pub max_reisolations: u32,
    pub resource: ResourceId,
}

impl ExecConfig {
    pub fn new(mode: Architecture) -> Self {
        Self {
            mode,
            max_reisolations: 5,
            resource: ResourceId(0),
        }
    }
}

/// Everything a finished replication produced.
#[derive(Debug, Clone)]
pub struct ReplicationOutcome {
    pub records: Vec<DivergenceRecord>,
    /// Jobs that received service, with completion times.
    pub completed_jobs: Vec<Job>,
    pub generated: usize,
    /// Jobs never served.
    pub incomplete: usize,
    pub trace: Vec<Event>,
    pub occupancy: Vec<MachineInterval>,
    /// Snapshots latched, including re-latches.
    pub latches: u64,
    pub aborts: u64,
    /// Largest retry count reached by any epoch.
    pub max_retries: u32,
}

/// One replication: plant, calendar, cache, and policy wired through the
/// dispatch loop.
pub struct Engine<'p> {
    exec: ExecConfig,
    calendar: EventCalendar<Occurrence>,
    cache: ExecutionCache,
    plant: Plant,
    policy: &'p dyn DispatchPolicy,
    horizon: SimTime,
    decision_window: SimTime,
    epoch: u64,
    aborts: u64,
    max_retries: u32,
    records: Vec<DivergenceRecord>,
}

impl<'p> Engine<'p> {
    pub fn new(
        sim: SimConfig,
        exec: ExecConfig,
        policy: &'p dyn DispatchPolicy,
    ) -> Result<Self, ExecError> {
        let mut calendar = EventCalendar::new();
        let horizon = sim.horizon;
        let decision_window = sim.decision_window;
        let plant = Plant::new(sim, &mut calendar)?;
        Ok(Self {
            exec,
            calendar,
            cache: ExecutionCache::new(),
            plant,
            policy,
            horizon,
            decision_window,
            epoch: 0,
            aborts: 0,
            max_retries: 0,
            records: Vec::new(),
        })
    }

    pub fn plant(&self) -> &Plant {
        &self.plant
    }

    pub fn cache(&self) -> &ExecutionCache {
        &self.cache
    }

    pub fn now(&self) -> SimTime {
        self.calendar.now()
    }

    fn handle(&mut self, occurrence: Occurrence) -> Result<Option<Event>, ExecError> {
        match occurrence {
            Occurrence::Delivery(event) => {
                self.cache.ingest_event(&event)?;
                Ok(Some(event))
            }
            Occurrence::MachineIdle => {
                self.plant.release_machine()?;
                Ok(None)
            }
        }
    }

    /// Processes every remaining occurrence at the current instant.
    fn drain_now(&mut self) -> Result<(), ExecError> {
        let now = self.calendar.now();
        while let Some((_, occurrence)) = self.calendar.pop_through(now) {
            self.handle(occurrence)?;
        }
        Ok(())
    }

    /// Runs until the calendar is empty. Epochs open only if their commit
    /// falls within the horizon; work already on the machine finishes.
    pub fn run(mut self) -> Result<ReplicationOutcome, ExecError> {
        while let Some((_, occurrence)) = self.calendar.pop() {
            self.handle(occurrence)?;
            self.drain_now()?;
            self.dispatch_while_possible()?;
        }
        let (completed, in_service, waiting) = self.plant.status_counts();
        debug_assert_eq!(in_service, 0);
        debug_assert_eq!(completed + waiting, self.plant.generated());
        Ok(ReplicationOutcome {
            completed_jobs: self.plant.completed_jobs(),
            generated: self.plant.generated(),
            incomplete: waiting,
            trace: self.plant.trace().to_vec(),
            occupancy: self.plant.occupancy().to_vec(),
            latches: self.epoch,
            aborts: self.aborts,
            max_retries: self.max_retries,
            records: self.records,
        })
    }

    fn dispatch_while_possible(&mut self) -> Result<(), ExecError> {
        while self.plant.is_idle()
            && self.calendar.now() + self.decision_window <= self.horizon
            && self.cache.has_candidates()
        {
            if let Some(record) = self.run_epoch()? {
                self.records.push(record);
            }
        }
        Ok(())
    }

    /// Runs one dispatch epoch from latch to commit.
    ///
    /// Returns `None` when a re-latch finds no candidates left; the trigger
    /// then re-arms on the next delivery.
    pub fn run_epoch(&mut self) -> Result<Option<DivergenceRecord>, ExecError> {
        if !self.plant.is_idle() {
            return Err(ExecError::MachineBusy);
        }
        let mut retries = 0u32;
        loop {
            let latch = self.calendar.now();
            self.epoch += 1;
            let snapshot = self
                .cache
                .latch_snapshot(self.epoch, latch, self.exec.resource);
            let request = build_request(Arc::new(snapshot))?;
            if request.candidates().is_empty() {
                return Ok(None);
            }
            let fallback = retries >= self.exec.max_reisolations;
            if !fallback && latch + self.decision_window > self.horizon {
                // No commit may land past the horizon.
                return Ok(None);
            }
            let intent = if fallback {
                select_fallback(&request)?
            } else {
                self.policy.select(&request)?
            };
            if !request.contains(intent) {
                return Err(ExecError::IntentNotCandidate(intent));
            }
            self.plant.on_intent(&mut self.calendar, intent, latch)?;
            let commit_due = if fallback {
                latch
            } else {
                latch + self.decision_window
            };
            let pending = PendingDecision {
                request,
                intent,
                latch_time: latch,
                commit_due,
                retries,
            };

            let mut aborted = false;
            while let Some((_, occurrence)) = self.calendar.pop_through(commit_due) {
                let delivered = self.handle(occurrence)?;
                if self.exec.mode == Architecture::Layer && !fallback {
                    if let Some(event) = delivered {
                        if check_invalidation(&pending, &event) == Verdict::Abort {
                            aborted = true;
                            break;
                        }
                    }
                }
            }
            if aborted {
                // Re-isolate at the abort instant with everything delivered
                // up to it.
                self.drain_now()?;
                self.aborts += 1;
                retries += 1;
                self.max_retries = self.max_retries.max(retries);
                continue;
            }

            self.calendar.advance_to(commit_due)?;
            return self.commit(pending, fallback).map(Some);
        }
    }

    fn commit(
        &mut self,
        pending: PendingDecision,
        fallback: bool,
    ) -> Result<DivergenceRecord, ExecError> {
        let t = pending.commit_due;
        let adjudication = self.plant.adjudicate_commit(
            &mut self.calendar,
            pending.intent,
            t,
            pending.request.candidates(),
        )?;
        if let Some(started) = adjudication.started {
            self.cache.mark_dispatched(started)?;
        }
        let mut record = DivergenceRecord {
            epoch: pending.request.snapshot().epoch(),
            intent: pending.intent,
            sys: adjudication.sys,
            phys: adjudication.phys,
            human: adjudication.human,
            visibility: Visibility::NotApplicable,
            commit_time: t,
            arch: self.exec.mode,
            retries: pending.retries,
            fallback,
        };
        record.visibility = match record.category() {
            OutcomeCategory::Clean => Visibility::NotApplicable,
            // An operator decision has no earlier observable trace.
            OutcomeCategory::HumanOverride => Visibility::Hidden,
            _ => {
                let blocking = adjudication
                    .blocking_event
                    .ok_or(ExecError::MissingBlockingEvent(pending.intent))?;
                classify_visibility(&record, &blocking)?
            }
        };
        Ok(record)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{HumanAction, PhysOutcome, SysOutcome};
    use crate::policy::PolicyKind;
    use crate::sim::{UniformRange, WindowAnchor};

    fn quiet(seed: u64) -> SimConfig {
        SimConfig {
            p_sys: 0.0,
            p_phys: 0.0,
            p_hum: 0.0,
            lag: UniformRange::new(0.0, 0.0),
            horizon: 300.0,
            seed,
            ..SimConfig::default()
        }
    }

    #[test]
    fn undisturbed_first_dispatch_is_clean_after_one_window() {
        let sim = quiet(1);
        let engine = Engine::new(sim, ExecConfig::new(Architecture::Layer), &PolicyKind::Edd).unwrap();
        let first_arrival = engine.plant().job(crate::domain::JobId(0)).unwrap().arrival_time;
        let out = engine.run().unwrap();
        let first = out.records[0];
        assert_eq!(first.category(), OutcomeCategory::Clean);
        assert_eq!(first.visibility, Visibility::NotApplicable);
        assert!((first.commit_time - (first_arrival + 0.85)).abs() < 1e-12);
        assert!(out.records.iter().all(|r| r.category() == OutcomeCategory::Clean));
        assert_eq!(out.occupancy[0].start, first.commit_time);
    }

    #[test]
    fn run_epoch_refuses_busy_machine() {
        let sim = quiet(2);
        let mut engine =
            Engine::new(sim, ExecConfig::new(Architecture::Direct), &PolicyKind::Edd).unwrap();
        // Deliver the first arrival and dispatch it.
        let (_, occ) = engine.calendar.pop().unwrap();
        engine.handle(occ).unwrap();
        let rec = engine.run_epoch().unwrap().unwrap();
        assert_eq!((rec.sys, rec.phys, rec.human), (SysOutcome::Accepted, PhysOutcome::Started, HumanAction::None));
        assert_eq!(engine.run_epoch(), Err(ExecError::MachineBusy));
    }

    #[test]
    fn layer_aborts_on_block_delivered_inside_window() {
        // Every job gets a transactional window opening inside its first
        // decision window and visible at once.
        let sim = SimConfig {
            p_sys: 1.0,
            window_anchor: WindowAnchor::FirstIntent,
            window_offset: UniformRange::new(0.3, 0.3),
            ..quiet(3)
        };
        let engine = Engine::new(sim, ExecConfig::new(Architecture::Layer), &PolicyKind::Edd).unwrap();
        let out = engine.run().unwrap();
        assert!(out.aborts > 0);
        // Each block is delivered 0.3 into the window, so every one of them is
        // intercepted and later dispatches run cleanly.
        assert!(out.records.iter().all(|r| r.category() == OutcomeCategory::Clean));
    }
}
