use super::KernelError;
use crate::time::SimTime;

/// Outcome of a FIFO request: when service starts and on which server.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Grant {
    pub start: SimTime,
    pub server: usize,
}

/// A `capacity`-server resource served strictly first-in, first-out.
///
/// Requests must arrive in nondecreasing time. A request starts service once a
/// server is free and every earlier request has started, so grant times are
/// nondecreasing in arrival order and at most `capacity` holders overlap.
#[derive(Clone, Debug)]
pub struct FifoResource {
    busy_until: Vec<SimTime>,
    last_arrival: SimTime,
    last_grant: SimTime,
    served: u64,
}

impl FifoResource {
    /// # Panics
    ///
    /// Panics if `capacity` is zero.
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "resource capacity must be positive");
        FifoResource {
            busy_until: vec![SimTime::ZERO; capacity],
            last_arrival: SimTime::ZERO,
            last_grant: SimTime::ZERO,
            served: 0,
        }
    }

    pub fn capacity(&self) -> usize {
        self.busy_until.len()
    }

    pub fn served(&self) -> u64 {
        self.served
    }

    /// Time at which every server is free.
    pub fn drained_at(&self) -> SimTime {
        self.busy_until.iter().copied().max().unwrap_or(SimTime::ZERO)
    }

    fn earliest_server(&self) -> (usize, SimTime) {
        self.busy_until
            .iter()
            .copied()
            .enumerate()
            .min_by_key(|&(i, t)| (t, i))
            .expect("capacity is positive")
    }

    /// The grant a request arriving at `at` would receive, without committing it.
    pub fn peek(&self, at: SimTime) -> Result<Grant, KernelError> {
        if at < self.last_arrival {
            return Err(KernelError::TimeInPast {
                requested: at,
                now: self.last_arrival,
            });
        }
        let (server, free_at) = self.earliest_server();
        let start = at.max(free_at).max(self.last_grant);
        Ok(Grant { start, server })
    }

    /// Queue a request arriving at `at` needing `service` minutes.
    pub fn request(&mut self, at: SimTime, service: u64) -> Result<Grant, KernelError> {
        let grant = self.peek(at)?;
        self.last_arrival = at;
        self.last_grant = grant.start;
        self.busy_until[grant.server] = grant.start.plus_minutes(service);
        self.served += 1;
        Ok(grant)
    }
}
