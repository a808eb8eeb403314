//! Simulation clock values.

use serde::{Deserialize, Serialize};
use std::fmt;

pub const MINUTES_PER_DAY: u64 = 1440;
pub const DAYS_PER_YEAR: u64 = 365;

/// A point on the simulation clock, in whole minutes since the start of the run.
///
/// Integer minutes keep event ordering identical on every platform. Day `d`
/// covers `[d * 1440, (d + 1) * 1440)`, and day 0 is a Monday.
#[derive(
    Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct SimTime(u64);

impl SimTime {
    pub const ZERO: SimTime = SimTime(0);

    pub const fn from_minutes(minutes: u64) -> Self {
        SimTime(minutes)
    }

    pub const fn from_days(days: u64) -> Self {
        SimTime(days * MINUTES_PER_DAY)
    }

    pub const fn at(day: u64, minute_of_day: u64) -> Self {
        SimTime(day * MINUTES_PER_DAY + minute_of_day)
    }

    pub const fn minutes(self) -> u64 {
        self.0
    }

    pub const fn day(self) -> u64 {
        self.0 / MINUTES_PER_DAY
    }

    pub const fn minute_of_day(self) -> u64 {
        self.0 % MINUTES_PER_DAY
    }

    /// Day of week, 0 = Monday.
    pub const fn weekday(self) -> u64 {
        self.day() % 7
    }

    pub const fn plus_minutes(self, minutes: u64) -> Self {
        SimTime(self.0 + minutes)
    }

    pub const fn plus_days(self, days: u64) -> Self {
        SimTime(self.0 + days * MINUTES_PER_DAY)
    }

    /// Minutes elapsed since `earlier`, or `None` if `earlier` is later than `self`.
    pub fn since(self, earlier: SimTime) -> Option<u64> {
        self.0.checked_sub(earlier.0)
    }

    /// Re-express this time relative to `origin`; `None` before the origin.
    pub fn rebase(self, origin: SimTime) -> Option<SimTime> {
        self.since(origin).map(SimTime)
    }
}

impl fmt::Display for SimTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}
