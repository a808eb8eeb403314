use super::calendar::EventCalendar;
use super::event::{EventKind, EventRecord};
use super::KernelError;
use crate::time::SimTime;

/// An event handler. It may mutate the model state, annotate the record
/// before it enters the trace, and schedule follow-up events.
pub type Handler<S, E> =
    Box<dyn Fn(&mut S, &mut EventRecord, &mut EventCalendar) -> Result<(), E> + Send + Sync>;

/// Handler registry keyed by event kind.
pub struct Handlers<S, E> {
    slots: Vec<Option<Handler<S, E>>>,
}

impl<S, E> Default for Handlers<S, E> {
    fn default() -> Self {
        Handlers { slots: Vec::new() }
    }
}

impl<S, E> Handlers<S, E> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn on<F>(&mut self, kind: EventKind, handler: F) -> &mut Self
    where
        F: Fn(&mut S, &mut EventRecord, &mut EventCalendar) -> Result<(), E> + Send + Sync + 'static,
    {
        let slot = kind.slot();
        if self.slots.len() <= slot {
            self.slots.resize_with(slot + 1, || None);
        }
        self.slots[slot] = Some(Box::new(handler));
        self
    }

    pub fn handles(&self, kind: EventKind) -> bool {
        self.get(kind).is_some()
    }

    fn get(&self, kind: EventKind) -> Option<&Handler<S, E>> {
        self.slots.get(kind.slot()).and_then(Option::as_ref)
    }
}

/// Process every pending event due at or before `t_end`, in calendar order.
///
/// Returns the realized events in processing order. Events after `t_end` stay
/// pending, and on success the clock is left at `t_end`.
pub fn run_until<S, E>(
    calendar: &mut EventCalendar,
    handlers: &Handlers<S, E>,
    state: &mut S,
    t_end: SimTime,
) -> Result<Vec<EventRecord>, E>
where
    E: From<KernelError>,
{
    let mut trace = Vec::new();
    while let Some(mut record) = calendar.pop_until(t_end) {
        let handler = handlers
            .get(record.kind)
            .ok_or(KernelError::UnknownEventKind(record.kind))?;
        handler(state, &mut record, calendar)?;
        trace.push(record);
    }
    calendar.advance_to(t_end);
    Ok(trace)
}
