use super::event::{EventId, EventKind, EventRecord, Payload, Subject};
use super::KernelError;
use crate::time::SimTime;
use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

struct Pending(EventRecord);

// Event ids are handed out in insertion order, so (time, id) is the
// (time, insertion sequence) key.
impl Pending {
    fn key(&self) -> (SimTime, EventId) {
        (self.0.time, self.0.id)
    }
}

impl PartialEq for Pending {
    fn eq(&self, other: &Self) -> bool {
        self.key() == other.key()
    }
}

impl Eq for Pending {}

impl PartialOrd for Pending {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Pending {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key().cmp(&other.key())
    }
}

/// Time-ordered set of pending events.
///
/// Events pop in ascending time; events at equal times pop in the order they
/// were scheduled.
#[derive(Default)]
pub struct EventCalendar {
    pending: BinaryHeap<Reverse<Pending>>,
    now: SimTime,
    next_id: EventId,
}

impl EventCalendar {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn starting_at(now: SimTime) -> Self {
        EventCalendar {
            now,
            ..Self::default()
        }
    }

    pub fn now(&self) -> SimTime {
        self.now
    }

    pub fn len(&self) -> usize {
        self.pending.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pending.is_empty()
    }

    pub fn peek_time(&self) -> Option<SimTime> {
        self.pending.peek().map(|Reverse(p)| p.0.time)
    }

    /// Schedule an event and return its id.
    pub fn schedule(
        &mut self,
        time: SimTime,
        kind: EventKind,
        subject: Subject,
        payload: Payload,
    ) -> Result<EventId, KernelError> {
        if time < self.now {
            return Err(KernelError::TimeInPast {
                requested: time,
                now: self.now,
            });
        }
        let id = self.next_id;
        self.next_id += 1;
        self.pending.push(Reverse(Pending(EventRecord {
            id,
            time,
            kind,
            subject,
            payload,
        })));
        Ok(id)
    }

    /// Remove the next event and advance the clock to its time.
    pub fn pop(&mut self) -> Option<EventRecord> {
        let Reverse(Pending(record)) = self.pending.pop()?;
        self.now = record.time;
        Some(record)
    }

    /// Pop the next event only if it is due at or before `t_end`.
    pub fn pop_until(&mut self, t_end: SimTime) -> Option<EventRecord> {
        match self.peek_time() {
            Some(t) if t <= t_end => self.pop(),
            _ => None,
        }
    }

    pub(crate) fn advance_to(&mut self, t: SimTime) {
        if t > self.now {
            self.now = t;
        }
    }
}
