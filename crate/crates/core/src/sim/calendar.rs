//! Priority event calendar keyed by `(time, seq)`.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use thiserror::Error;

use crate::domain::SimTime;

#[derive(Debug, Error, PartialEq)]
pub enum CalendarError {
    #[error("cannot schedule at t={time} before now={now}")]
    InPast { time: SimTime, now: SimTime },
    #[error("cannot rewind the clock from {now} to {time}")]
    Rewind { time: SimTime, now: SimTime },
    #[error("non-finite time {0}")]
    NonFinite(SimTime),
}

#[derive(Debug)]
struct Entry<T> {
    time: SimTime,
    seq: u64,
    item: T,
}

impl<T> PartialEq for Entry<T> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl<T> Eq for Entry<T> {}

impl<T> PartialOrd for Entry<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<T> Ord for Entry<T> {
    // Reversed: BinaryHeap is a max-heap, the calendar pops the earliest.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .time
            .total_cmp(&self.time)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

/// Min-queue of pending items. Also hands out the sequence numbers that
/// order items scheduled at the same time.
#[derive(Debug)]
pub struct EventCalendar<T> {
    pending: BinaryHeap<Entry<T>>,
    now: SimTime,
    next_seq: u64,
}

impl<T> Default for EventCalendar<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T> EventCalendar<T> {
    pub fn new() -> Self {
        Self {
            pending: BinaryHeap::new(),
            now: 0.0,
            next_seq: 0,
        }
    }

    #[inline]
    pub fn now(&self) -> SimTime {
        self.now
    }

    pub fn allocate_seq(&mut self) -> u64 {
        let seq = self.next_seq;
        self.next_seq += 1;
        seq
    }

    pub fn schedule(&mut self, time: SimTime, seq: u64, item: T) -> Result<(), CalendarError> {
        if !time.is_finite() {
            return Err(CalendarError::NonFinite(time));
        }
        if time < self.now {
            return Err(CalendarError::InPast { time, now: self.now });
        }
        self.pending.push(Entry { time, seq, item });
        Ok(())
    }

    pub fn peek_time(&self) -> Option<SimTime> {
        self.pending.peek().map(|e| e.time)
    }

    /// Pops the earliest item and advances the clock to its time.
    pub fn pop(&mut self) -> Option<(SimTime, T)> {
        let entry = self.pending.pop()?;
        self.now = entry.time;
        Some((entry.time, entry.item))
    }

    /// Pops the earliest item only if it is due at or before `limit`.
    pub fn pop_through(&mut self, limit: SimTime) -> Option<(SimTime, T)> {
        match self.peek_time() {
            Some(t) if t <= limit => self.pop(),
            _ => None,
        }
    }

    /// Moves the clock forward without popping.
    pub fn advance_to(&mut self, time: SimTime) -> Result<(), CalendarError> {
        if time < self.now {
            return Err(CalendarError::Rewind { time, now: self.now });
        }
        if let Some(next) = self.peek_time() {
            debug_assert!(next >= time, "advancing past a pending item");
        }
        self.now = time;
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.pending.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pending.is_empty()
    }
}
