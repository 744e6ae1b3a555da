//! Ground-truth plant: job generation, disturbance windows, lagged
//! observations, and commit adjudication for a single non-preemptive machine.

use rand::Rng;
use serde::Serialize;

use super::calendar::EventCalendar;
use super::config::{FailureCost, SimConfig, UniformRange, WindowAnchor};
use super::rng::{event_lag_rng, JobStreams};
use super::SimError;
use crate::domain::{
    DomainError, Event, EventKind, HumanAction, Job, JobId, PhysOutcome, SimTime, SysOutcome,
};

/// Calendar payload.
#[derive(Debug, Clone, PartialEq)]
pub enum Occurrence {
    /// An event reaching the scheduler side at its `visible_time`.
    Delivery(Event),
    /// The machine finishes its current occupation.
    MachineIdle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowChannel {
    Transactional,
    Physical,
}

impl WindowChannel {
    fn index(self) -> usize {
        match self {
            WindowChannel::Transactional => 0,
            WindowChannel::Physical => 1,
        }
    }

    fn kinds(self) -> (EventKind, EventKind) {
        match self {
            WindowChannel::Transactional => (EventKind::BlockStart, EventKind::BlockEnd),
            WindowChannel::Physical => (EventKind::FaultStart, EventKind::FaultEnd),
        }
    }
}

/// Half-open interval `[start, end)` during which a job is inadmissible on
/// one channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DisturbanceWindow {
    pub job: JobId,
    pub channel: WindowChannel,
    pub start: SimTime,
    pub end: SimTime,
}

impl DisturbanceWindow {
    pub fn contains(&self, t: SimTime) -> bool {
        self.start <= t && t < self.end
    }
}

/// Window timing relative to its anchor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowDraw {
    pub offset: SimTime,
    pub duration: SimTime,
}

/// Disturbances drawn for one job at generation.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DisturbancePlan {
    pub transactional: Option<WindowDraw>,
    pub physical: Option<WindowDraw>,
    pub override_armed: bool,
}

impl DisturbancePlan {
    pub fn is_disturbed(&self) -> bool {
        self.transactional.is_some() || self.physical.is_some() || self.override_armed
    }

    /// Places the drawn windows relative to `anchor`.
    pub fn windows(&self, job: JobId, anchor: SimTime) -> Vec<DisturbanceWindow> {
        [
            (WindowChannel::Transactional, self.transactional),
            (WindowChannel::Physical, self.physical),
        ]
        .into_iter()
        .filter_map(|(channel, draw)| {
            draw.map(|d| DisturbanceWindow {
                job,
                channel,
                start: anchor + d.offset,
                end: anchor + d.offset + d.duration,
            })
        })
        .collect()
    }
}

/// Draws the next job after `prev_arrival`.
pub fn generate_job(
    streams: &mut JobStreams,
    id: JobId,
    prev_arrival: SimTime,
    config: &SimConfig,
) -> Result<Job, DomainError> {
    let arrival = prev_arrival + config.interarrival.sample(&mut streams.arrivals);
    let processing = config.processing.sample(&mut streams.processing);
    let due = arrival + processing * config.due_factor.sample(&mut streams.due_dates);
    let weight = f64::from(streams.weights.gen_range(1..=config.max_weight));
    Job::new(id, arrival, processing, due, weight)
}

/// Draws one job's disturbances. All timing variables are drawn whether or
/// not the corresponding Bernoulli fires, so the stream stays aligned across
/// jobs.
pub fn schedule_disturbances(streams: &mut JobStreams, config: &SimConfig) -> DisturbancePlan {
    let rng = &mut streams.disturbances;
    let sys = rng.gen_bool(config.p_sys);
    let phys = rng.gen_bool(config.p_phys);
    let draw = |rng: &mut rand_chacha::ChaCha8Rng| WindowDraw {
        offset: config.window_offset.sample(rng),
        duration: config.window_duration.sample(rng),
    };
    let sys_draw = draw(rng);
    let phys_draw = draw(rng);
    DisturbancePlan {
        transactional: sys.then_some(sys_draw),
        physical: phys.then_some(phys_draw),
        override_armed: streams.overrides.gen_bool(config.p_hum),
    }
}

/// Stamps `event` with a visible time one sampled lag after its true time.
pub fn emit_observation<R: Rng + ?Sized>(mut event: Event, lag: &UniformRange, rng: &mut R) -> Event {
    event.visible_time = event.true_time + lag.sample(rng);
    event
}

/// Result of committing a dispatch against ground truth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Adjudication {
    pub sys: SysOutcome,
    pub phys: PhysOutcome,
    pub human: HumanAction,
    /// Job that actually started, if any.
    pub started: Option<JobId>,
    /// Event that established the blocking condition on the intent, for
    /// rejected or faulted dispatches. The earliest delivered one wins when
    /// both channels block.
    pub blocking_event: Option<Event>,
}

/// One span of machine occupation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MachineInterval {
    pub job: JobId,
    pub start: SimTime,
    pub end: SimTime,
    /// True when the machine ran the job, false when it was held by a failed
    /// dispatch.
    pub productive: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum TrueStatus {
    Waiting,
    InService,
    Completed,
}

#[derive(Debug, Clone)]
struct JobRecord {
    job: Job,
    plan: DisturbancePlan,
    windows: Vec<DisturbanceWindow>,
    materialized: bool,
    /// Start events of the materialized windows, by channel.
    window_starts: [Option<Event>; 2],
    lag_seed: u64,
    override_pending: bool,
    status: TrueStatus,
}

/// Ground truth for one replication.
#[derive(Debug)]
pub struct Plant {
    config: SimConfig,
    jobs: Vec<JobRecord>,
    busy: Option<JobId>,
    trace: Vec<Event>,
    occupancy: Vec<MachineInterval>,
}

impl Plant {
    /// Generates every job arriving within the horizon and schedules the
    /// arrival deliveries.
    pub fn new(config: SimConfig, calendar: &mut EventCalendar<Occurrence>) -> Result<Self, SimError> {
        config.validate()?;
        let mut streams = JobStreams::new(config.seed);
        let mut plant = Self {
            config,
            jobs: Vec::new(),
            busy: None,
            trace: Vec::new(),
            occupancy: Vec::new(),
        };
        let mut prev = 0.0;
        loop {
            let id = JobId(plant.jobs.len() as u32);
            let job = generate_job(&mut streams, id, prev, &plant.config)?;
            if job.arrival_time > plant.config.horizon {
                break;
            }
            prev = job.arrival_time;
            let plan = schedule_disturbances(&mut streams, &plant.config);
            plant.jobs.push(JobRecord {
                job,
                plan,
                windows: Vec::new(),
                materialized: false,
                window_starts: [None, None],
                lag_seed: streams.next_lag_seed(),
                override_pending: plan.override_armed,
                status: TrueStatus::Waiting,
            });
            plant.emit(calendar, id, EventKind::Arrival, job.arrival_time)?;
            if plant.config.window_anchor == WindowAnchor::Arrival {
                plant.materialize(calendar, id, job.arrival_time)?;
            }
        }
        Ok(plant)
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    fn record(&self, id: JobId) -> Result<&JobRecord, SimError> {
        self.jobs.get(id.0 as usize).ok_or(SimError::UnknownJob(id))
    }

    fn record_mut(&mut self, id: JobId) -> Result<&mut JobRecord, SimError> {
        self.jobs.get_mut(id.0 as usize).ok_or(SimError::UnknownJob(id))
    }

    pub fn job(&self, id: JobId) -> Result<&Job, SimError> {
        self.record(id).map(|r| &r.job)
    }

    pub fn plan(&self, id: JobId) -> Result<&DisturbancePlan, SimError> {
        self.record(id).map(|r| &r.plan)
    }

    /// Windows placed so far for `id`.
    pub fn windows(&self, id: JobId) -> Result<&[DisturbanceWindow], SimError> {
        self.record(id).map(|r| r.windows.as_slice())
    }

    pub fn generated(&self) -> usize {
        self.jobs.len()
    }

    pub fn jobs(&self) -> impl Iterator<Item = &Job> {
        self.jobs.iter().map(|r| &r.job)
    }

    /// Jobs that started service; their completion time is fixed at start.
    pub fn completed_jobs(&self) -> Vec<Job> {
        self.jobs
            .iter()
            .filter(|r| r.job.completion_time.is_some())
            .map(|r| r.job)
            .collect()
    }

    /// Every event emitted so far, in creation order.
    pub fn trace(&self) -> &[Event] {
        &self.trace
    }

    pub fn occupancy(&self) -> &[MachineInterval] {
        &self.occupancy
    }

    pub fn is_idle(&self) -> bool {
        self.busy.is_none()
    }

    fn emit(
        &mut self,
        calendar: &mut EventCalendar<Occurrence>,
        id: JobId,
        kind: EventKind,
        true_time: SimTime,
    ) -> Result<Event, SimError> {
        let record = self.record(id)?;
        let release = (kind == EventKind::Arrival).then_some(record.job);
        let mut rng = event_lag_rng(record.lag_seed, kind);
        let raw = Event {
            seq: calendar.allocate_seq(),
            channel: kind.channel(),
            kind,
            job: id,
            true_time,
            visible_time: true_time,
            release,
        };
        let event = emit_observation(raw, &self.config.lag, &mut rng);
        calendar.schedule(event.visible_time, event.seq, Occurrence::Delivery(event))?;
        self.trace.push(event);
        Ok(event)
    }

    fn materialize(
        &mut self,
        calendar: &mut EventCalendar<Occurrence>,
        id: JobId,
        anchor: SimTime,
    ) -> Result<(), SimError> {
        let record = self.record_mut(id)?;
        if record.materialized {
            return Ok(());
        }
        record.materialized = true;
        let windows = record.plan.windows(id, anchor);
        record.windows = windows.clone();
        for window in windows {
            let (start_kind, end_kind) = window.channel.kinds();
            let start = self.emit(calendar, id, start_kind, window.start)?;
            self.emit(calendar, id, end_kind, window.end)?;
            self.record_mut(id)?.window_starts[window.channel.index()] = Some(start);
        }
        Ok(())
    }

    /// Notifies the plant that `id` became the intent of a decision latched at
    /// `latch`. Under first-intent anchoring this places the job's windows.
    pub fn on_intent(
        &mut self,
        calendar: &mut EventCalendar<Occurrence>,
        id: JobId,
        latch: SimTime,
    ) -> Result<(), SimError> {
        if self.config.window_anchor == WindowAnchor::FirstIntent {
            self.materialize(calendar, id, latch)?;
        }
        Ok(())
    }

    /// Ground-truth admissibility `(transactional, physical)` of `id` at `t`.
    pub fn true_admissible(&self, id: JobId, t: SimTime) -> Result<(bool, bool), SimError> {
        let record = self.record(id)?;
        let blocked = |channel| {
            record
                .windows
                .iter()
                .any(|w| w.channel == channel && w.contains(t))
        };
        Ok((
            !blocked(WindowChannel::Transactional),
            !blocked(WindowChannel::Physical),
        ))
    }

    fn active_window(&self, id: JobId, channel: WindowChannel, t: SimTime) -> Option<DisturbanceWindow> {
        self.jobs[id.0 as usize]
            .windows
            .iter()
            .copied()
            .find(|w| w.channel == channel && w.contains(t))
    }

    /// Resolves a commit of `intent` at `t` against ground truth and updates
    /// the machine. `candidates` are the admissible jobs of the request, used
    /// when an operator redirects the dispatch.
    pub fn adjudicate_commit(
        &mut self,
        calendar: &mut EventCalendar<Occurrence>,
        intent: JobId,
        t: SimTime,
        candidates: &[JobId],
    ) -> Result<Adjudication, SimError> {
        if !self.is_idle() {
            return Err(SimError::MachineBusy { job: intent, time: t });
        }
        let record = self.record(intent)?;
        if record.status != TrueStatus::Waiting {
            return Err(SimError::NotCommittable {
                job: intent,
                reason: "already dispatched",
            });
        }
        if record.job.arrival_time > t {
            return Err(SimError::NotCommittable {
                job: intent,
                reason: "not yet arrived",
            });
        }
        let sys_block = self.active_window(intent, WindowChannel::Transactional, t);
        let phys_block = self.active_window(intent, WindowChannel::Physical, t);
        let fault_delay = self.config.fault_handling_delay;
        let starts = record.window_starts;

        if let Some(sys_window) = sys_block {
            let hold_until = match self.config.failure_cost {
                FailureCost::HoldUntilClear => {
                    let phys_end = phys_block.map_or(t, |w| w.end + fault_delay);
                    sys_window.end.max(phys_end)
                }
                FailureCost::WindowOnly => phys_block.map_or(t, |_| t + fault_delay),
            };
            self.hold(calendar, intent, t, hold_until)?;
            let sys_event = starts[0];
            let phys_event = phys_block.and(starts[1]);
            let blocking_event = match (sys_event, phys_event) {
                (Some(a), Some(b)) if b.delivery_key() < a.delivery_key() => Some(b),
                (a, b) => a.or(b),
            };
            return Ok(Adjudication {
                sys: SysOutcome::Rejected,
                phys: if phys_block.is_some() {
                    PhysOutcome::Fault
                } else {
                    PhysOutcome::NotAttempted
                },
                human: HumanAction::None,
                started: None,
                blocking_event,
            });
        }

        if record.override_pending {
            self.record_mut(intent)?.override_pending = false;
            let mut redirect: Option<(SimTime, JobId)> = None;
            for &other in candidates.iter().filter(|&&c| c != intent) {
                let r = self.record(other)?;
                if r.status != TrueStatus::Waiting || r.job.arrival_time > t {
                    continue;
                }
                if self.true_admissible(other, t)? != (true, true) {
                    continue;
                }
                let key = (r.job.due_date, other);
                if redirect.is_none_or(|best| key.0 < best.0 || (key.0 == best.0 && key.1 < best.1)) {
                    redirect = Some(key);
                }
            }
            return Ok(match redirect {
                Some((_, job)) => {
                    self.start(calendar, job, t)?;
                    Adjudication {
                        sys: SysOutcome::Accepted,
                        phys: PhysOutcome::Started,
                        human: HumanAction::Redirect(job),
                        started: Some(job),
                        blocking_event: None,
                    }
                }
                None => Adjudication {
                    sys: SysOutcome::Accepted,
                    phys: PhysOutcome::NotAttempted,
                    human: HumanAction::Cancel,
                    started: None,
                    blocking_event: None,
                },
            });
        }

        if let Some(phys_window) = phys_block {
            let hold_until = match self.config.failure_cost {
                FailureCost::HoldUntilClear => phys_window.end + fault_delay,
                FailureCost::WindowOnly => t + fault_delay,
            };
            self.hold(calendar, intent, t, hold_until)?;
            return Ok(Adjudication {
                sys: SysOutcome::Accepted,
                phys: PhysOutcome::Fault,
                human: HumanAction::None,
                started: None,
                blocking_event: starts[1],
            });
        }

        self.start(calendar, intent, t)?;
        Ok(Adjudication {
            sys: SysOutcome::Accepted,
            phys: PhysOutcome::Started,
            human: HumanAction::None,
            started: Some(intent),
            blocking_event: None,
        })
    }

    fn start(
        &mut self,
        calendar: &mut EventCalendar<Occurrence>,
        id: JobId,
        t: SimTime,
    ) -> Result<(), SimError> {
        let record = self.record_mut(id)?;
        let end = t + record.job.processing_time;
        record.job = record.job.completed_at(end)?;
        record.status = TrueStatus::InService;
        self.busy = Some(id);
        self.occupancy.push(MachineInterval {
            job: id,
            start: t,
            end,
            productive: true,
        });
        let seq = calendar.allocate_seq();
        calendar.schedule(end, seq, Occurrence::MachineIdle)?;
        self.emit(calendar, id, EventKind::Completion, end)?;
        Ok(())
    }

    fn hold(
        &mut self,
        calendar: &mut EventCalendar<Occurrence>,
        id: JobId,
        t: SimTime,
        until: SimTime,
    ) -> Result<(), SimError> {
        if until <= t {
            return Ok(());
        }
        self.busy = Some(id);
        self.occupancy.push(MachineInterval {
            job: id,
            start: t,
            end: until,
            productive: false,
        });
        let seq = calendar.allocate_seq();
        calendar.schedule(until, seq, Occurrence::MachineIdle)?;
        Ok(())
    }

    /// Handles a `MachineIdle` occurrence.
    pub fn release_machine(&mut self) -> Result<(), SimError> {
        if let Some(id) = self.busy.take() {
            let record = self.record_mut(id)?;
            if record.status == TrueStatus::InService {
                record.status = TrueStatus::Completed;
            }
        }
        Ok(())
    }

    /// `(completed, in_service, waiting)` job counts.
    pub fn status_counts(&self) -> (usize, usize, usize) {
        self.jobs.iter().fold((0, 0, 0), |(c, s, w), r| match r.status {
            TrueStatus::Completed => (c + 1, s, w),
            TrueStatus::InService => (c, s + 1, w),
            TrueStatus::Waiting => (c, s, w + 1),
        })
    }
}
