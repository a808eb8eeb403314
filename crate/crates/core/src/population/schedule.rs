use crate::kernel::{FifoResource, KernelError};
use crate::time::{SimTime, MINUTES_PER_DAY};
use serde::{Deserialize, Serialize};

/// A weekly shift: the same daily window on each working weekday.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorkSchedule {
    pub start_minute: u64,
    pub end_minute: u64,
    /// Monday first.
    pub working_days: [bool; 7],
}

pub const WEEKDAYS: [bool; 7] = [true, true, true, true, true, false, false];

impl WorkSchedule {
    pub fn weekdays(start_minute: u64, end_minute: u64) -> Self {
        WorkSchedule {
            start_minute,
            end_minute,
            working_days: WEEKDAYS,
        }
    }

    pub fn is_valid(&self) -> bool {
        self.end_minute > self.start_minute
            && self.end_minute <= MINUTES_PER_DAY
            && self.working_days.iter().any(|d| *d)
    }

    pub fn shift_minutes(&self) -> u64 {
        self.end_minute - self.start_minute
    }

    fn days_per_week(&self) -> u64 {
        self.working_days.iter().filter(|d| **d).count() as u64
    }

    /// Whether `t` falls inside a shift.
    pub fn is_open(&self, t: SimTime) -> bool {
        self.working_days[t.weekday() as usize]
            && (self.start_minute..self.end_minute).contains(&t.minute_of_day())
    }

    /// Working minutes elapsed before the first working instant at or after `t`.
    pub fn to_working(&self, t: SimTime) -> u64 {
        let len = self.shift_minutes();
        let day = t.day();
        let dow = (day % 7) as usize;
        let worked_days = (day / 7) * self.days_per_week()
            + self.working_days[..dow].iter().filter(|d| **d).count() as u64;
        let base = worked_days * len;
        if !self.working_days[dow] {
            return base;
        }
        let m = t.minute_of_day();
        if m < self.start_minute {
            base
        } else if m < self.end_minute {
            base + (m - self.start_minute)
        } else {
            base + len
        }
    }

    /// Wall-clock time of working minute `w`.
    pub fn to_wall(&self, w: u64) -> SimTime {
        let len = self.shift_minutes();
        let (index, offset) = (w / len, w % len);
        let per_week = self.days_per_week();
        let (week, nth) = (index / per_week, (index % per_week) as usize);
        let dow = self
            .working_days
            .iter()
            .enumerate()
            .filter(|(_, d)| **d)
            .nth(nth)
            .map(|(i, _)| i as u64)
            .expect("nth < working days per week");
        SimTime::at(week * 7 + dow, self.start_minute + offset)
    }
}

/// One clinician's appointment book: a single-server FIFO queue over the
/// clinician's working minutes, handing out fixed-length slots.
#[derive(Clone, Debug)]
pub struct AppointmentBook {
    schedule: WorkSchedule,
    slot_minutes: u64,
    queue: FifoResource,
}

impl AppointmentBook {
    /// # Panics
    ///
    /// Panics unless the shift is valid and a whole number of slots long.
    pub fn new(schedule: WorkSchedule, slot_minutes: u64) -> Self {
        assert!(schedule.is_valid(), "invalid work schedule {schedule:?}");
        assert!(
            slot_minutes > 0 && schedule.shift_minutes().is_multiple_of(slot_minutes),
            "shift must hold a whole number of {slot_minutes}-minute slots"
        );
        AppointmentBook {
            schedule,
            slot_minutes,
            queue: FifoResource::new(1),
        }
    }

    pub fn schedule(&self) -> &WorkSchedule {
        &self.schedule
    }

    pub fn slot_minutes(&self) -> u64 {
        self.slot_minutes
    }

    pub fn booked(&self) -> u64 {
        self.queue.served()
    }

    fn aligned(&self, at: SimTime) -> SimTime {
        let w = self.schedule.to_working(at);
        SimTime::from_minutes(w.div_ceil(self.slot_minutes) * self.slot_minutes)
    }

    /// Start of the slot a request made at `at` would get.
    pub fn earliest_slot(&self, at: SimTime) -> Result<SimTime, KernelError> {
        let grant = self.queue.peek(self.aligned(at))?;
        Ok(self.schedule.to_wall(grant.start.minutes()))
    }

    /// Book the earliest slot for a request made at `at`.
    pub fn book(&mut self, at: SimTime) -> Result<SimTime, KernelError> {
        let grant = self.queue.request(self.aligned(at), self.slot_minutes)?;
        Ok(self.schedule.to_wall(grant.start.minutes()))
    }
}
