#![allow(dead_code)]

use std::collections::BTreeMap;

use execlayer::domain::{
    Channel, Event, EventKind, Job, JobId, JobStatus, JobView, ReadinessState, ResourceId, SimTime,
    Snapshot,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Times on a coarse grid so equal timestamps (and seq tie-breaks) are common.
fn grid_time(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    let steps = ((hi - lo) / 0.25).floor() as u32;
    lo + f64::from(rng.gen_range(0..=steps)) * 0.25
}

/// A random event trace, returned in delivery order.
pub fn random_trace(seed: u64) -> Vec<Event> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut events = Vec::new();
    let mut seq = 0u64;
    let mut next_seq = || {
        seq += 1;
        seq
    };
    let jobs = rng.gen_range(1..=10u32);
    for id in 0..jobs {
        let arrival = grid_time(&mut rng, 0.0, 20.0);
        let arrival_seen = arrival + grid_time(&mut rng, 0.0, 3.0);
        let processing = 1.0 + grid_time(&mut rng, 0.0, 5.0);
        let job = Job::new(JobId(id), arrival, processing, arrival + 2.0 * processing, 1.0).unwrap();
        events.push(Event {
            seq: next_seq(),
            channel: Channel::Transactional,
            kind: EventKind::Arrival,
            job: JobId(id),
            true_time: arrival,
            visible_time: arrival_seen,
            release: Some(job),
        });
        for _ in 0..rng.gen_range(0..=6) {
            let kind = [
                EventKind::BlockStart,
                EventKind::BlockEnd,
                EventKind::FaultStart,
                EventKind::FaultEnd,
            ][rng.gen_range(0..4)];
            let t = grid_time(&mut rng, arrival, arrival + 10.0);
            events.push(Event {
                seq: next_seq(),
                channel: kind.channel(),
                kind,
                job: JobId(id),
                true_time: t,
                visible_time: t + grid_time(&mut rng, 0.0, 3.0),
                release: None,
            });
        }
        if rng.gen_bool(0.3) {
            let t = grid_time(&mut rng, arrival_seen, arrival_seen + 15.0);
            events.push(Event {
                seq: next_seq(),
                channel: Channel::Physical,
                kind: EventKind::Completion,
                job: JobId(id),
                true_time: t,
                visible_time: t + grid_time(&mut rng, 0.0, 3.0),
                release: None,
            });
        }
    }
    events.sort_by(|a, b| a.visible_time.total_cmp(&b.visible_time).then(a.seq.cmp(&b.seq)));
    events
}

/// Brute-force view of the world at `t`: per job and channel, the visible
/// change with the latest true time wins (later delivery breaks ties).
pub fn oracle_snapshot(events: &[Event], epoch: u64, t: SimTime) -> Snapshot {
    let seen: Vec<&Event> = events.iter().filter(|e| e.visible_time <= t).collect();
    let mut views = BTreeMap::new();
    for arrival in seen.iter().filter(|e| e.kind == EventKind::Arrival) {
        let mut job = arrival.release.unwrap();
        let mut readiness = ReadinessState::ready(arrival.true_time);
        for (channel, start, end) in [
            (Channel::Transactional, EventKind::BlockStart, EventKind::BlockEnd),
            (Channel::Physical, EventKind::FaultStart, EventKind::FaultEnd),
        ] {
            let latest = seen
                .iter()
                .filter(|e| e.job == arrival.job && (e.kind == start || e.kind == end))
                .max_by(|a, b| {
                    a.true_time
                        .total_cmp(&b.true_time)
                        .then(a.visible_time.total_cmp(&b.visible_time))
                        .then(a.seq.cmp(&b.seq))
                });
            if let Some(e) = latest {
                readiness.apply(channel, e.kind == end, e.true_time);
            }
        }
        let completion = seen
            .iter()
            .find(|e| e.job == arrival.job && e.kind == EventKind::Completion);
        let status = match completion {
            Some(c) => {
                job.completion_time = Some(c.true_time);
                JobStatus::Completed
            }
            None => JobStatus::Waiting,
        };
        views.insert(
            arrival.job,
            JobView {
                job,
                readiness,
                status,
            },
        );
    }
    Snapshot::new(epoch, t, ResourceId(0), views)
}
