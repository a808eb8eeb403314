//! The care-pathway event model wired onto the kernel.

use super::pathway::{
    complete_test, doctor_visit, prompts_with_hazards, request_appointment, CareConfig, CareOrder,
    PromptHazards, RequestOutcome, VisitReason,
};
use super::pdf::{placeholder_event_outcome, Outcome, PdfTable, KEY_ATTENDANCE};
use super::CareError;
use crate::kernel::{run_until, EventCalendar, EventKind, EventRecord, Handlers, Payload, Subject};
use crate::measure::Measure;
use crate::population::{FacilityProfile, PatientProfile};
use crate::rng::{derive_stream, RngStream};
use crate::time::{SimTime, DAYS_PER_YEAR};

/// Mutable state of one simulated facility.
pub struct CareState {
    pub patients: Vec<PatientProfile>,
    pub facility: FacilityProfile,
    pub config: CareConfig,
    pub pdf: PdfTable,
    hazards: Vec<PromptHazards>,
    attendance_p: Vec<f64>,
    prompt_streams: Vec<RngStream>,
    visit_streams: Vec<RngStream>,
    attendance_streams: Vec<RngStream>,
    visit_counts: Vec<u32>,
    run_seed: u64,
    horizon_days: u64,
    year_start: SimTime,
    year_end: SimTime,
}

impl CareState {
    pub fn year_start(&self) -> SimTime {
        self.year_start
    }

    pub fn year_end(&self) -> SimTime {
        self.year_end
    }

    pub fn visits(&self, patient: u32) -> u32 {
        self.visit_counts[patient as usize]
    }
}

pub struct Simulation {
    state: CareState,
    calendar: EventCalendar,
    handlers: Handlers<CareState, CareError>,
    warmed_up: bool,
}

impl Simulation {
    /// Assemble a simulation. Per-patient random streams are keyed by
    /// `run_seed` and the patient id.
    pub fn new(
        patients: Vec<PatientProfile>,
        facility: FacilityProfile,
        config: CareConfig,
        pdf: PdfTable,
        run_seed: u64,
        horizon_days: u64,
    ) -> Result<Self, CareError> {
        config.validate().map_err(CareError::Config)?;
        pdf.validate()?;
        for key in &config.placeholder_events {
            pdf.get(key)?;
        }
        let hazards = patients
            .iter()
            .map(|p| PromptHazards::for_patient(p, &pdf))
            .collect::<Result<Vec<_>, _>>()?;
        let attendance = pdf.get(KEY_ATTENDANCE)?;
        let attendance_p = patients
            .iter()
            .map(|p| attendance.probability(p))
            .collect::<Result<Vec<_>, _>>()?;
        for p in &patients {
            match p.assigned_clinician {
                Some(c) if (c as usize) < facility.clinicians.len() => {}
                _ => return Err(CareError::Unassigned(p.id)),
            }
        }
        let streams = |what: &str| -> Vec<RngStream> {
            (0..patients.len())
                .map(|i| derive_stream(run_seed, &format!("patient{i}/{what}")))
                .collect()
        };
        let state = CareState {
            hazards,
            attendance_p,
            prompt_streams: streams("prompts"),
            visit_streams: streams("visit"),
            attendance_streams: streams("attendance"),
            visit_counts: vec![0; patients.len()],
            patients,
            facility,
            config,
            pdf,
            run_seed,
            horizon_days,
            year_start: SimTime::ZERO,
            year_end: SimTime::from_days(horizon_days),
        };
        Ok(Simulation {
            handlers: handlers(&state.config),
            state,
            calendar: EventCalendar::new(),
            warmed_up: false,
        })
    }

    pub fn state(&self) -> &CareState {
        &self.state
    }

    pub fn calendar(&self) -> &EventCalendar {
        &self.calendar
    }

    /// Seed recurring appointments and run the pre-measurement window.
    ///
    /// Every diabetic patient gets a recurring follow-up chain starting at a
    /// random offset within the first follow-up interval. The simulation then
    /// runs for `warmup_days` with its trace discarded, so the measured year
    /// opens with a populated appointment book and staggered recalls. The
    /// measured year starts when warm-up ends.
    pub fn warmup(&mut self, warmup_days: u64, stream: &mut RngStream) -> Result<(), CareError> {
        if self.warmed_up {
            return Err(CareError::Config("warm-up already ran".into()));
        }
        self.warmed_up = true;
        let s = &mut self.state;
        s.year_start = SimTime::from_days(warmup_days);
        s.year_end = s.year_start.plus_days(s.horizon_days);

        self.calendar
            .schedule(SimTime::ZERO, EventKind::DayStart, Subject::Facility, Payload::new().with("day", 0))?;
        let interval = s.config.followup_interval_days as i64;
        for p in &s.patients {
            let offset = stream.int_in_range(0, interval - 1) as u64;
            if p.has_diabetes {
                self.calendar.schedule(
                    SimTime::at(offset, s.config.prompt_minute),
                    EventKind::AppointmentRequest,
                    Subject::Patient(p.id),
                    reason_payload(VisitReason::RecurringFollowup),
                )?;
            }
        }
        if warmup_days > 0 {
            let end = s.year_start.minutes() - 1;
            self.calendar.schedule(
                SimTime::from_minutes(end),
                EventKind::WarmupBookkeeping,
                Subject::Facility,
                Payload::new(),
            )?;
            run_until(&mut self.calendar, &self.handlers, &mut self.state, SimTime::from_minutes(end))?;
        }
        Ok(())
    }

    /// Run the measurement year and return its trace with times relative to the
    /// start of the year.
    pub fn run_year(&mut self) -> Result<Vec<EventRecord>, CareError> {
        if !self.warmed_up {
            return Err(CareError::Config("run warm-up (possibly zero days) before the measured year".into()));
        }
        let end = SimTime::from_minutes(self.state.year_end.minutes() - 1);
        let mut trace = run_until(&mut self.calendar, &self.handlers, &mut self.state, end)?;
        let origin = self.state.year_start;
        for r in &mut trace {
            r.time = r.time.rebase(origin).expect("measured events follow warm-up");
        }
        Ok(trace)
    }

    pub fn into_state(self) -> CareState {
        self.state
    }
}

/// Warm up `sim` for `warmup_days`; see [`Simulation::warmup`].
pub fn warmup(mut sim: Simulation, warmup_days: u64, stream: &mut RngStream) -> Result<Simulation, CareError> {
    sim.warmup(warmup_days, stream)?;
    Ok(sim)
}

fn reason_payload(reason: VisitReason) -> Payload {
    Payload::new().with("reason", reason.code())
}

fn patient_index(rec: &EventRecord) -> Result<usize, CareError> {
    match rec.subject {
        Subject::Patient(i) => Ok(i as usize),
        other => Err(CareError::BadEvent(format!("{} expects a patient subject, got {other}", rec.kind))),
    }
}

fn reason_of(rec: &EventRecord) -> Result<VisitReason, CareError> {
    rec.payload
        .get("reason")
        .and_then(VisitReason::from_code)
        .ok_or_else(|| CareError::BadEvent(format!("{} event without a visit reason", rec.kind)))
}

fn handlers(config: &CareConfig) -> Handlers<CareState, CareError> {
    let mut h = Handlers::new();
    h.on(EventKind::DayStart, on_day_start)
        .on(EventKind::WellnessPrompt, on_prompt)
        .on(EventKind::SickPrompt, on_prompt)
        .on(EventKind::SymptomPrompt, on_prompt)
        .on(EventKind::AppointmentRequest, on_request)
        .on(EventKind::QueueGrant, on_grant)
        .on(EventKind::Balk, on_balk)
        .on(EventKind::Attendance, on_attendance)
        .on(EventKind::Visit, on_visit)
        .on(EventKind::WellnessReset, on_wellness_reset)
        .on(EventKind::Recall, on_recall)
        .on(EventKind::WarmupBookkeeping, |_, _, _| Ok(()));
    for m in Measure::ALL {
        h.on(EventKind::Order(m), on_order);
        h.on(EventKind::Completion(m), on_completion);
    }
    for i in 0..config.placeholder_events.len() {
        h.on(EventKind::Placeholder(i as u16), on_placeholder);
    }
    h
}

fn on_day_start(s: &mut CareState, rec: &mut EventRecord, cal: &mut EventCalendar) -> Result<(), CareError> {
    let day = rec.time.day();
    let at = SimTime::at(day, s.config.prompt_minute);
    for i in 0..s.patients.len() {
        let prompts = prompts_with_hazards(&s.patients[i], day, s.hazards[i], &mut s.prompt_streams[i]);
        for kind in prompts {
            if kind == EventKind::WellnessPrompt {
                s.patients[i].wellness_booked = true;
            }
            cal.schedule(at, kind, Subject::Patient(i as u32), Payload::new())?;
        }
    }
    let next = SimTime::from_days(day + 1);
    if next < s.year_end {
        cal.schedule(next, EventKind::DayStart, Subject::Facility, Payload::new().with("day", day as i64 + 1))?;
    }
    Ok(())
}

fn on_prompt(_: &mut CareState, rec: &mut EventRecord, cal: &mut EventCalendar) -> Result<(), CareError> {
    let reason = VisitReason::for_prompt(rec.kind).expect("registered for prompt kinds only");
    cal.schedule(rec.time, EventKind::AppointmentRequest, rec.subject, reason_payload(reason))?;
    Ok(())
}

fn on_request(s: &mut CareState, rec: &mut EventRecord, cal: &mut EventCalendar) -> Result<(), CareError> {
    let i = patient_index(rec)?;
    let reason = reason_of(rec)?;
    match request_appointment(&s.patients[i], reason, rec.time, &mut s.facility, &s.config)? {
        RequestOutcome::Booked(appt) => {
            cal.schedule(
                rec.time,
                EventKind::QueueGrant,
                rec.subject,
                reason_payload(reason)
                    .with("clinician", appt.clinician as i64)
                    .with("slot", appt.slot_start.minutes() as i64),
            )?;
        }
        RequestOutcome::Balk { earliest } => {
            cal.schedule(
                rec.time,
                EventKind::Balk,
                rec.subject,
                reason_payload(reason).with("earliest", earliest.minutes() as i64),
            )?;
        }
    }
    Ok(())
}

fn on_grant(_: &mut CareState, rec: &mut EventRecord, cal: &mut EventCalendar) -> Result<(), CareError> {
    let slot = rec
        .payload
        .get("slot")
        .ok_or_else(|| CareError::BadEvent("grant without a slot".into()))?;
    let payload = reason_payload(reason_of(rec)?).with("clinician", rec.payload.get("clinician").unwrap_or(0));
    cal.schedule(SimTime::from_minutes(slot as u64), EventKind::Attendance, rec.subject, payload)?;
    Ok(())
}

/// What happens after a wellness or follow-up request falls through.
fn retry(s: &CareState, rec: &EventRecord, reason: VisitReason, cal: &mut EventCalendar) -> Result<(), CareError> {
    let later = rec.time.plus_days(s.config.recall_retry_days);
    match reason {
        VisitReason::WellnessCheck => {
            cal.schedule(later, EventKind::Recall, rec.subject, Payload::new())?;
        }
        VisitReason::RecurringFollowup => {
            cal.schedule(later, EventKind::AppointmentRequest, rec.subject, reason_payload(reason))?;
        }
        VisitReason::SickVisit | VisitReason::DiabetesSymptoms => {}
    }
    Ok(())
}

fn on_balk(s: &mut CareState, rec: &mut EventRecord, cal: &mut EventCalendar) -> Result<(), CareError> {
    let reason = reason_of(rec)?;
    retry(s, rec, reason, cal)
}

fn on_attendance(s: &mut CareState, rec: &mut EventRecord, cal: &mut EventCalendar) -> Result<(), CareError> {
    let i = patient_index(rec)?;
    let reason = reason_of(rec)?;
    let attended = s.attendance_streams[i].bernoulli(s.attendance_p[i]);
    rec.payload.push("attended", attended as i64);
    if attended {
        cal.schedule(rec.time, EventKind::Visit, rec.subject, reason_payload(reason))?;
    } else {
        retry(s, rec, reason, cal)?;
    }
    Ok(())
}

fn on_visit(s: &mut CareState, rec: &mut EventRecord, cal: &mut EventCalendar) -> Result<(), CareError> {
    let i = patient_index(rec)?;
    let reason = reason_of(rec)?;
    let visit = s.visit_counts[i];
    s.visit_counts[i] += 1;
    let patient = &s.patients[i];
    let clinician_id = patient.assigned_clinician.ok_or(CareError::Unassigned(patient.id))?;
    let clinician = &s.facility.clinicians[clinician_id as usize];
    rec.payload.push("visit", visit as i64);
    rec.payload.push("clinician", clinician_id as i64);

    let outcome = doctor_visit(
        patient,
        clinician,
        rec.time,
        reason,
        s.year_start,
        &s.pdf,
        &s.config,
        &mut s.visit_streams[i],
    )?;
    for order in &outcome.orders {
        cal.schedule(rec.time, EventKind::Order(order.measure), rec.subject, Payload::new().with("visit", visit as i64))?;
    }
    if let Some(due) = outcome.wellness_due {
        cal.schedule(
            rec.time,
            EventKind::WellnessReset,
            rec.subject,
            Payload::new().with("due", due.minutes() as i64),
        )?;
    }
    if reason == VisitReason::RecurringFollowup {
        cal.schedule(
            rec.time.plus_days(s.config.followup_interval_days),
            EventKind::AppointmentRequest,
            rec.subject,
            reason_payload(reason),
        )?;
    }
    for j in 0..s.config.placeholder_events.len() {
        cal.schedule(
            rec.time,
            EventKind::Placeholder(j as u16),
            rec.subject,
            Payload::new().with("visit", visit as i64),
        )?;
    }
    Ok(())
}

fn on_order(s: &mut CareState, rec: &mut EventRecord, cal: &mut EventCalendar) -> Result<(), CareError> {
    let EventKind::Order(measure) = rec.kind else {
        unreachable!("registered for order kinds only")
    };
    let i = patient_index(rec)?;
    let visit = rec.payload.get("visit").unwrap_or(0);
    let mut stream = derive_stream(s.run_seed, &format!("patient{i}/visit{visit}/{measure}"));
    let order = CareOrder {
        patient: i as u32,
        measure,
        ordered_at: rec.time,
        completed: false,
        completed_at: None,
    };
    let result = complete_test(&order, &s.patients[i], &s.pdf, &mut stream)?;
    rec.payload.push("completes", result.completed as i64);
    if let Some(at) = result.completed_at {
        cal.schedule(at, EventKind::Completion(measure), rec.subject, Payload::new().with("visit", visit))?;
    }
    Ok(())
}

fn on_completion(s: &mut CareState, rec: &mut EventRecord, _: &mut EventCalendar) -> Result<(), CareError> {
    let EventKind::Completion(measure) = rec.kind else {
        unreachable!("registered for completion kinds only")
    };
    let i = patient_index(rec)?;
    *s.patients[i].screening_history.get_mut(measure) = Some(rec.time);
    Ok(())
}

fn on_wellness_reset(s: &mut CareState, rec: &mut EventRecord, _: &mut EventCalendar) -> Result<(), CareError> {
    let i = patient_index(rec)?;
    let p = &mut s.patients[i];
    p.wellness_due = rec.time.plus_days(DAYS_PER_YEAR);
    p.wellness_booked = false;
    Ok(())
}

fn on_recall(s: &mut CareState, rec: &mut EventRecord, _: &mut EventCalendar) -> Result<(), CareError> {
    let i = patient_index(rec)?;
    let p = &mut s.patients[i];
    p.wellness_due = rec.time;
    p.wellness_booked = false;
    Ok(())
}

fn on_placeholder(s: &mut CareState, rec: &mut EventRecord, _: &mut EventCalendar) -> Result<(), CareError> {
    let EventKind::Placeholder(j) = rec.kind else {
        unreachable!("registered for placeholder kinds only")
    };
    let i = patient_index(rec)?;
    let key = &s.config.placeholder_events[j as usize];
    let visit = rec.payload.get("visit").unwrap_or(0);
    let mut stream = derive_stream(s.run_seed, &format!("patient{i}/visit{visit}/{key}"));
    let spec = s.pdf.get(key)?;
    match placeholder_event_outcome(spec, &s.patients[i], &mut stream)? {
        Outcome::Flag(b) => rec.payload.push("outcome", b as i64),
        Outcome::Category(c) => rec.payload.push("outcome", c as i64),
        Outcome::Value(v) => rec.payload.push("outcome_micros", (v * 1e6).round() as i64),
    }
    Ok(())
}
