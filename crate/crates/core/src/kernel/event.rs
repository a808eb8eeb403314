use crate::measure::Measure;
use crate::time::SimTime;
use std::borrow::Cow;
use std::fmt;
use std::str::FromStr;

pub type EventId = u64;

/// Event-type tag.
///
/// Twenty named kinds cover the care pathway; `Placeholder(i)` kinds are
/// configured at run time and draw their outcome from a placeholder PDF.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EventKind {
    DayStart,
    WellnessPrompt,
    SickPrompt,
    SymptomPrompt,
    AppointmentRequest,
    QueueGrant,
    Balk,
    Attendance,
    Visit,
    Order(Measure),
    Completion(Measure),
    WellnessReset,
    Recall,
    WarmupBookkeeping,
    Placeholder(u16),
}

impl EventKind {
    pub const NAMED_COUNT: usize = 20;

    pub const NAMED: [EventKind; Self::NAMED_COUNT] = [
        EventKind::DayStart,
        EventKind::WellnessPrompt,
        EventKind::SickPrompt,
        EventKind::SymptomPrompt,
        EventKind::AppointmentRequest,
        EventKind::QueueGrant,
        EventKind::Balk,
        EventKind::Attendance,
        EventKind::Visit,
        EventKind::Order(Measure::HbA1c),
        EventKind::Order(Measure::Ldl),
        EventKind::Order(Measure::EyeExam),
        EventKind::Order(Measure::Nephropathy),
        EventKind::Completion(Measure::HbA1c),
        EventKind::Completion(Measure::Ldl),
        EventKind::Completion(Measure::EyeExam),
        EventKind::Completion(Measure::Nephropathy),
        EventKind::WellnessReset,
        EventKind::Recall,
        EventKind::WarmupBookkeeping,
    ];

    /// Dense index used for handler dispatch.
    pub fn slot(self) -> usize {
        match self {
            EventKind::DayStart => 0,
            EventKind::WellnessPrompt => 1,
            EventKind::SickPrompt => 2,
            EventKind::SymptomPrompt => 3,
            EventKind::AppointmentRequest => 4,
            EventKind::QueueGrant => 5,
            EventKind::Balk => 6,
            EventKind::Attendance => 7,
            EventKind::Visit => 8,
            EventKind::Order(m) => 9 + m.index(),
            EventKind::Completion(m) => 13 + m.index(),
            EventKind::WellnessReset => 17,
            EventKind::Recall => 18,
            EventKind::WarmupBookkeeping => 19,
            EventKind::Placeholder(i) => Self::NAMED_COUNT + i as usize,
        }
    }

    fn static_name(self) -> Option<&'static str> {
        Some(match self {
            EventKind::DayStart => "day_start",
            EventKind::WellnessPrompt => "prompt.wellness",
            EventKind::SickPrompt => "prompt.sick",
            EventKind::SymptomPrompt => "prompt.diabetes_symptom",
            EventKind::AppointmentRequest => "appointment.request",
            EventKind::QueueGrant => "appointment.grant",
            EventKind::Balk => "appointment.balk",
            EventKind::Attendance => "appointment.attendance",
            EventKind::Visit => "visit",
            EventKind::Order(Measure::HbA1c) => "order.hba1c",
            EventKind::Order(Measure::Ldl) => "order.ldl",
            EventKind::Order(Measure::EyeExam) => "order.eye_exam",
            EventKind::Order(Measure::Nephropathy) => "order.nephropathy",
            EventKind::Completion(Measure::HbA1c) => "completion.hba1c",
            EventKind::Completion(Measure::Ldl) => "completion.ldl",
            EventKind::Completion(Measure::EyeExam) => "completion.eye_exam",
            EventKind::Completion(Measure::Nephropathy) => "completion.nephropathy",
            EventKind::WellnessReset => "wellness.reset",
            EventKind::Recall => "registry.recall",
            EventKind::WarmupBookkeeping => "warmup.bookkeeping",
            EventKind::Placeholder(_) => return None,
        })
    }
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self, self.static_name()) {
            (_, Some(name)) => f.write_str(name),
            (EventKind::Placeholder(i), None) => write!(f, "placeholder.{i}"),
            _ => unreachable!(),
        }
    }
}

impl FromStr for EventKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if let Some(i) = s.strip_prefix("placeholder.") {
            return i
                .parse()
                .map(EventKind::Placeholder)
                .map_err(|_| format!("bad placeholder index in `{s}`"));
        }
        EventKind::NAMED
            .into_iter()
            .find(|k| k.static_name() == Some(s))
            .ok_or_else(|| format!("unknown event kind `{s}`"))
    }
}

/// Entity an event is about.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Subject {
    Facility,
    Patient(u32),
    Clinician(u32),
}

impl fmt::Display for Subject {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Subject::Facility => f.write_str("facility"),
            Subject::Patient(i) => write!(f, "patient:{i}"),
            Subject::Clinician(i) => write!(f, "clinician:{i}"),
        }
    }
}

impl FromStr for Subject {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "facility" {
            return Ok(Subject::Facility);
        }
        let (tag, id) = s.split_once(':').ok_or_else(|| format!("bad subject `{s}`"))?;
        let id: u32 = id.parse().map_err(|_| format!("bad subject id in `{s}`"))?;
        match tag {
            "patient" => Ok(Subject::Patient(id)),
            "clinician" => Ok(Subject::Clinician(id)),
            _ => Err(format!("bad subject `{s}`")),
        }
    }
}

/// Kind-specific integer attributes attached to an event, in insertion order.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Payload(Vec<(Cow<'static, str>, i64)>);

impl Payload {
    pub fn new() -> Self {
        Payload(Vec::new())
    }

    pub fn with(mut self, key: &'static str, value: i64) -> Self {
        self.push(key, value);
        self
    }

    pub fn push(&mut self, key: impl Into<Cow<'static, str>>, value: i64) {
        self.0.push((key.into(), value));
    }

    pub fn get(&self, key: &str) -> Option<i64> {
        self.0.iter().find(|(k, _)| k == key).map(|(_, v)| *v)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, i64)> {
        self.0.iter().map(|(k, v)| (k.as_ref(), *v))
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EventRecord {
    pub id: EventId,
    pub time: SimTime,
    pub kind: EventKind,
    pub subject: Subject,
    pub payload: Payload,
}
