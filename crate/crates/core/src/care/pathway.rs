//! Care-pathway operations: entry prompts, scheduling, visits and test completion.

use super::pdf::{completion_key, delay_key, order_key, PdfSpec, PdfTable, KEY_PROMPT_SICK, KEY_PROMPT_SYMPTOM};
use super::CareError;
use crate::kernel::EventKind;
use crate::measure::Measure;
use crate::population::{ClinicianProfile, FacilityProfile, PatientProfile};
use crate::rng::RngStream;
use crate::time::{SimTime, DAYS_PER_YEAR, MINUTES_PER_DAY};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VisitReason {
    WellnessCheck,
    SickVisit,
    DiabetesSymptoms,
    RecurringFollowup,
}

impl VisitReason {
    pub const fn code(self) -> i64 {
        match self {
            VisitReason::WellnessCheck => 0,
            VisitReason::SickVisit => 1,
            VisitReason::DiabetesSymptoms => 2,
            VisitReason::RecurringFollowup => 3,
        }
    }

    pub fn from_code(code: i64) -> Option<Self> {
        Some(match code {
            0 => VisitReason::WellnessCheck,
            1 => VisitReason::SickVisit,
            2 => VisitReason::DiabetesSymptoms,
            3 => VisitReason::RecurringFollowup,
            _ => return None,
        })
    }

    pub fn for_prompt(kind: EventKind) -> Option<Self> {
        match kind {
            EventKind::WellnessPrompt => Some(VisitReason::WellnessCheck),
            EventKind::SickPrompt => Some(VisitReason::SickVisit),
            EventKind::SymptomPrompt => Some(VisitReason::DiabetesSymptoms),
            _ => None,
        }
    }
}

/// Care-pathway settings that are not probability distributions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CareConfig {
    /// Patients accept the earliest slot only if it is at most this many days away.
    pub acceptance_window_days: u64,
    /// Delay before the registry recalls a patient whose wellness visit fell through.
    pub recall_retry_days: u64,
    /// Spacing of recurring diabetes follow-up visits.
    pub followup_interval_days: u64,
    /// Minute of the day at which entry prompts are raised.
    pub prompt_minute: u64,
    /// Whether sick visits of diabetic patients can trigger screening orders.
    pub sick_visits_order_cqm: bool,
    /// Placeholder PDF keys drawn once per visit.
    pub placeholder_events: Vec<String>,
}

impl Default for CareConfig {
    fn default() -> Self {
        CareConfig {
            acceptance_window_days: 30,
            recall_retry_days: 14,
            followup_interval_days: 90,
            prompt_minute: 6 * 60,
            sick_visits_order_cqm: true,
            placeholder_events: Vec::new(),
        }
    }
}

impl CareConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.prompt_minute >= MINUTES_PER_DAY {
            return Err("prompt_minute must fall within the day".into());
        }
        if self.followup_interval_days == 0 || self.recall_retry_days == 0 {
            return Err("followup_interval_days and recall_retry_days must be positive".into());
        }
        if self.placeholder_events.len() > u16::MAX as usize {
            return Err("too many placeholder events".into());
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Appointment {
    pub patient: u32,
    pub clinician: u32,
    pub slot_start: SimTime,
    pub duration: u64,
    pub reason: VisitReason,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RequestOutcome {
    Booked(Appointment),
    /// The earliest slot was beyond the acceptance window; nothing was booked.
    Balk { earliest: SimTime },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CareOrder {
    pub patient: u32,
    pub measure: Measure,
    pub ordered_at: SimTime,
    pub completed: bool,
    pub completed_at: Option<SimTime>,
}

/// Daily prompt hazards for one patient, after attribute adjustment and the
/// patient's own propensity, each clamped to `[0, 1]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PromptHazards {
    pub sick: f64,
    pub diabetes_symptom: f64,
}

impl PromptHazards {
    pub fn for_patient(patient: &PatientProfile, pdf: &PdfTable) -> Result<Self, CareError> {
        let sick = pdf.get(KEY_PROMPT_SICK)?.probability(patient)?;
        let symptom = pdf.get(KEY_PROMPT_SYMPTOM)?.probability(patient)?;
        Ok(PromptHazards {
            sick: (sick * patient.symptom_propensity.sick).clamp(0.0, 1.0),
            diabetes_symptom: (symptom * patient.symptom_propensity.diabetes_symptom).clamp(0.0, 1.0),
        })
    }
}

/// Prompts raised for `patient` on `day` given precomputed hazards.
///
/// Exactly two uniforms are drawn per call whatever the outcome, so paired
/// runs stay aligned.
pub fn prompts_with_hazards(
    patient: &PatientProfile,
    day: u64,
    hazards: PromptHazards,
    stream: &mut RngStream,
) -> Vec<EventKind> {
    let mut out = Vec::new();
    if !patient.wellness_booked && day >= patient.wellness_due.day() {
        out.push(EventKind::WellnessPrompt);
    }
    let sick = stream.bernoulli(hazards.sick);
    let symptom = stream.bernoulli(hazards.diabetes_symptom);
    if sick {
        out.push(EventKind::SickPrompt);
    }
    if symptom && patient.has_diabetes {
        out.push(EventKind::SymptomPrompt);
    }
    out
}

/// Entry prompts for one patient-day: a registry recall once the wellness check
/// is due, plus Bernoulli sickness and (for diabetic patients) symptom prompts.
pub fn daily_entry_prompts(
    patient: &PatientProfile,
    day: u64,
    pdf: &PdfTable,
    stream: &mut RngStream,
) -> Result<Vec<EventKind>, CareError> {
    let hazards = PromptHazards::for_patient(patient, pdf)?;
    Ok(prompts_with_hazards(patient, day, hazards, stream))
}

/// Ask the patient's own clinician for the earliest FIFO slot.
pub fn request_appointment(
    patient: &PatientProfile,
    reason: VisitReason,
    at: SimTime,
    facility: &mut FacilityProfile,
    config: &CareConfig,
) -> Result<RequestOutcome, CareError> {
    let clinician = patient
        .assigned_clinician
        .ok_or(CareError::Unassigned(patient.id))?;
    let book = facility
        .appointment_book
        .get_mut(clinician as usize)
        .ok_or(CareError::Unassigned(patient.id))?;
    let earliest = book.earliest_slot(at)?;
    let wait = earliest.since(at).unwrap_or(0);
    if wait > config.acceptance_window_days * MINUTES_PER_DAY {
        return Ok(RequestOutcome::Balk { earliest });
    }
    let slot_start = book.book(at)?;
    debug_assert_eq!(slot_start, earliest);
    Ok(RequestOutcome::Booked(Appointment {
        patient: patient.id,
        clinician,
        slot_start,
        duration: book.slot_minutes(),
        reason,
    }))
}

#[derive(Clone, Debug, PartialEq)]
pub struct VisitOutcome {
    pub orders: Vec<CareOrder>,
    /// New wellness due date, set by wellness visits.
    pub wellness_due: Option<SimTime>,
}

/// Screening orders written during one visit.
///
/// Orders are only written for diabetic patients, for measures without a
/// completed test since `year_start`. A measure is ordered with probability
/// `clamp(baseline * clinician multiplier, 0, 1)`. One uniform is drawn per
/// measure on every call regardless of eligibility.
#[allow(clippy::too_many_arguments)]
pub fn doctor_visit(
    patient: &PatientProfile,
    clinician: &ClinicianProfile,
    at: SimTime,
    reason: VisitReason,
    year_start: SimTime,
    pdf: &PdfTable,
    config: &CareConfig,
    stream: &mut RngStream,
) -> Result<VisitOutcome, CareError> {
    let eligible_visit = patient.has_diabetes
        && (reason != VisitReason::SickVisit || config.sick_visits_order_cqm);
    let mut orders = Vec::new();
    for m in Measure::ALL {
        let p = order_probability(pdf.get(&order_key(m))?, patient, clinician.order_multiplier.get(m))?;
        let u = stream.uniform();
        let satisfied = patient.screening_history.get(m).is_some_and(|t| t >= year_start);
        if eligible_visit && !satisfied && u < p {
            orders.push(CareOrder {
                patient: patient.id,
                measure: m,
                ordered_at: at,
                completed: false,
                completed_at: None,
            });
        }
    }
    let wellness_due =
        (reason == VisitReason::WellnessCheck).then(|| at.plus_days(DAYS_PER_YEAR));
    Ok(VisitOutcome {
        orders,
        wellness_due,
    })
}

/// Baseline order probability scaled by the clinician multiplier, clamped to `[0, 1]`.
pub fn order_probability(
    baseline: &PdfSpec,
    patient: &PatientProfile,
    multiplier: &f64,
) -> Result<f64, CareError> {
    let p = baseline.probability(patient)? * multiplier;
    Ok(if p.is_nan() { 0.0 } else { p.clamp(0.0, 1.0) })
}

/// Draw whether an order is carried out and when its result lands.
///
/// Always consumes two uniforms: completion, then delay.
pub fn complete_test(
    order: &CareOrder,
    patient: &PatientProfile,
    pdf: &PdfTable,
    stream: &mut RngStream,
) -> Result<CareOrder, CareError> {
    let p = pdf.get(&completion_key(order.measure))?.probability(patient)?;
    let (lo, hi) = pdf.get(&delay_key(order.measure))?.bounds(patient)?;
    let done = stream.bernoulli(p);
    let delay_days = stream.uniform_between(lo.max(0.0), hi.max(0.0));
    let delay_minutes = (delay_days * MINUTES_PER_DAY as f64).round() as u64;
    let mut out = order.clone();
    if done {
        out.completed = true;
        out.completed_at = Some(order.ordered_at.plus_minutes(delay_minutes));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::care::pdf::AttributeModifier;
    use crate::measure::PerMeasure;
    use crate::population::{build_facility, builtin_cluster_specs, FacilityConfig};
    use crate::rng::derive_stream;

    fn table_with(key: &str, spec: PdfSpec) -> PdfTable {
        let mut t = PdfTable::defaults();
        t.insert(key, spec);
        t
    }

    fn clinician(multiplier: f64) -> ClinicianProfile {
        let config = FacilityConfig::default();
        ClinicianProfile {
            id: 0,
            shift: config.shift_for(0),
            slot_length: 15,
            training_count: 0,
            order_multiplier: PerMeasure::splat(multiplier),
        }
    }

    #[test]
    fn non_diabetic_never_gets_symptom_prompt() {
        let t = table_with(KEY_PROMPT_SYMPTOM, PdfSpec::bernoulli(1.0));
        let p = PatientProfile::neutral(0, false);
        let mut s = derive_stream(1, "prompts");
        for day in 0..365 {
            let prompts = daily_entry_prompts(&p, day, &t, &mut s).unwrap();
            assert!(!prompts.contains(&EventKind::SymptomPrompt));
        }
        let d = PatientProfile::neutral(1, true);
        assert!(daily_entry_prompts(&d, 0, &t, &mut s)
            .unwrap()
            .contains(&EventKind::SymptomPrompt));
    }

    #[test]
    fn zero_hazard_never_prompts() {
        let t = table_with(KEY_PROMPT_SICK, PdfSpec::bernoulli(0.0));
        let p = PatientProfile::neutral(0, true);
        let mut s = derive_stream(2, "prompts");
        for day in 0..2000 {
            assert!(!daily_entry_prompts(&p, day, &t, &mut s)
                .unwrap()
                .contains(&EventKind::SickPrompt));
        }
    }

    #[test]
    fn wellness_prompt_follows_due_date() {
        let t = PdfTable::defaults();
        let mut p = PatientProfile::neutral(0, false);
        p.wellness_due = SimTime::at(10, 300);
        let mut s = derive_stream(3, "prompts");
        assert!(!daily_entry_prompts(&p, 9, &t, &mut s).unwrap().contains(&EventKind::WellnessPrompt));
        assert!(daily_entry_prompts(&p, 10, &t, &mut s).unwrap().contains(&EventKind::WellnessPrompt));
        p.wellness_booked = true;
        assert!(!daily_entry_prompts(&p, 11, &t, &mut s).unwrap().contains(&EventKind::WellnessPrompt));
    }

    #[test]
    fn missing_prompt_pdf() {
        let mut t = PdfTable::defaults();
        t.remove(KEY_PROMPT_SICK);
        let p = PatientProfile::neutral(0, false);
        let err = daily_entry_prompts(&p, 0, &t, &mut derive_stream(1, "x")).unwrap_err();
        assert_eq!(err, CareError::MissingPdf(KEY_PROMPT_SICK.into()));
    }

    fn facility(patients: &mut [PatientProfile]) -> FacilityProfile {
        let spec = &builtin_cluster_specs()[0];
        let config = FacilityConfig {
            clinicians: 1,
            ..FacilityConfig::default()
        };
        build_facility(spec, &config, patients, &mut derive_stream(1, "f")).unwrap()
    }

    #[test]
    fn empty_book_same_day_slot() {
        let mut pop = vec![PatientProfile::neutral(0, false)];
        let mut f = facility(&mut pop);
        let at = SimTime::at(0, 9 * 60 + 5);
        match request_appointment(&pop[0], VisitReason::SickVisit, at, &mut f, &CareConfig::default()).unwrap() {
            RequestOutcome::Booked(a) => {
                assert_eq!(a.slot_start, SimTime::at(0, 9 * 60 + 15));
                assert_eq!(a.duration, 15);
                assert_eq!(a.reason, VisitReason::SickVisit);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn saturated_book_balks() {
        let mut pop = vec![PatientProfile::neutral(0, false)];
        let mut f = facility(&mut pop);
        let config = CareConfig {
            acceptance_window_days: 3,
            ..CareConfig::default()
        };
        let at = SimTime::at(0, 6 * 60);
        // 32 slots a day; fill four working days.
        let open = CareConfig::default();
        for _ in 0..(32 * 4) {
            assert!(matches!(
                request_appointment(&pop[0], VisitReason::WellnessCheck, at, &mut f, &open).unwrap(),
                RequestOutcome::Booked(_)
            ));
        }
        let before = f.appointment_book[0].booked();
        let outcome = request_appointment(&pop[0], VisitReason::WellnessCheck, at, &mut f, &config).unwrap();
        assert_eq!(outcome, RequestOutcome::Balk { earliest: SimTime::at(4, 8 * 60) });
        assert_eq!(f.appointment_book[0].booked(), before);
    }

    #[test]
    fn unassigned_patient_errors() {
        let mut pop = vec![PatientProfile::neutral(0, false)];
        let mut f = facility(&mut pop);
        let stray = PatientProfile::neutral(9, false);
        let err = request_appointment(&stray, VisitReason::SickVisit, SimTime::ZERO, &mut f, &CareConfig::default());
        assert_eq!(err, Err(CareError::Unassigned(9)));
    }

    fn order_rate(baseline: f64, multiplier: f64, n: usize) -> f64 {
        let t = table_with(&order_key(Measure::HbA1c), PdfSpec::bernoulli(baseline));
        let p = PatientProfile::neutral(0, true);
        let c = clinician(multiplier);
        let mut s = derive_stream(7, "visit");
        let config = CareConfig::default();
        let hits = (0..n)
            .filter(|_| {
                doctor_visit(&p, &c, SimTime::ZERO, VisitReason::WellnessCheck, SimTime::ZERO, &t, &config, &mut s)
                    .unwrap()
                    .orders
                    .iter()
                    .any(|o| o.measure == Measure::HbA1c)
            })
            .count();
        hits as f64 / n as f64
    }

    #[test]
    fn order_probability_edges() {
        assert_eq!(order_rate(0.0, 1.0, 10_000), 0.0);
        assert_eq!(order_rate(1.0, 1.0, 1000), 1.0);
        assert_eq!(order_rate(1.0, 3.0, 1000), 1.0);
    }

    #[test]
    fn multiplier_scales_order_rate() {
        let rate = order_rate(0.5, 1.28, 100_000);
        assert!((rate - 0.64).abs() < 0.005, "{rate}");
    }

    #[test]
    fn visit_gating_and_reset() {
        let t = PdfTable::defaults()
            .merged(&{
                let mut o = PdfTable(Default::default());
                for m in Measure::ALL {
                    o.insert(order_key(m), PdfSpec::bernoulli(1.0));
                }
                o
            });
        let config = CareConfig::default();
        let c = clinician(1.0);
        let at = SimTime::at(40, 600);
        let mut s = derive_stream(1, "v");
        let healthy = PatientProfile::neutral(0, false);
        let out = doctor_visit(&healthy, &c, at, VisitReason::WellnessCheck, SimTime::ZERO, &t, &config, &mut s).unwrap();
        assert!(out.orders.is_empty());
        assert_eq!(out.wellness_due, Some(at.plus_days(365)));

        let mut diabetic = PatientProfile::neutral(1, true);
        *diabetic.screening_history.get_mut(Measure::Ldl) = Some(SimTime::at(20, 0));
        let out = doctor_visit(&diabetic, &c, at, VisitReason::RecurringFollowup, SimTime::ZERO, &t, &config, &mut s).unwrap();
        let ordered: Vec<Measure> = out.orders.iter().map(|o| o.measure).collect();
        assert_eq!(ordered, vec![Measure::HbA1c, Measure::EyeExam, Measure::Nephropathy]);
        assert_eq!(out.wellness_due, None);
        // A test from before the measurement year does not satisfy the measure.
        let out = doctor_visit(&diabetic, &c, at, VisitReason::SickVisit, SimTime::from_days(30), &t, &config, &mut s).unwrap();
        assert_eq!(out.orders.len(), 4);
        let no_sick = CareConfig { sick_visits_order_cqm: false, ..CareConfig::default() };
        let out = doctor_visit(&diabetic, &c, at, VisitReason::SickVisit, SimTime::ZERO, &t, &no_sick, &mut s).unwrap();
        assert!(out.orders.is_empty());
    }

    fn order(at: SimTime) -> CareOrder {
        CareOrder {
            patient: 0,
            measure: Measure::EyeExam,
            ordered_at: at,
            completed: false,
            completed_at: None,
        }
    }

    #[test]
    fn completion_certain_and_immediate() {
        let mut t = table_with(&completion_key(Measure::EyeExam), PdfSpec::bernoulli(1.0));
        t.insert(delay_key(Measure::EyeExam), PdfSpec::uniform(0.0, 0.0));
        let at = SimTime::at(3, 500);
        let done = complete_test(&order(at), &PatientProfile::neutral(0, true), &t, &mut derive_stream(1, "t")).unwrap();
        assert!(done.completed);
        assert_eq!(done.completed_at, Some(at));
    }

    #[test]
    fn completion_impossible() {
        let t = table_with(&completion_key(Measure::EyeExam), PdfSpec::bernoulli(0.0));
        let mut s = derive_stream(2, "t");
        for _ in 0..1000 {
            let o = complete_test(&order(SimTime::ZERO), &PatientProfile::neutral(0, true), &t, &mut s).unwrap();
            assert!(!o.completed && o.completed_at.is_none());
        }
    }

    #[test]
    fn completion_delay_within_support() {
        let mut t = table_with(&completion_key(Measure::EyeExam), PdfSpec::bernoulli(1.0));
        t.insert(delay_key(Measure::EyeExam), PdfSpec::uniform(1.0, 14.0));
        let mut s = derive_stream(3, "t");
        let at = SimTime::at(100, 0);
        for _ in 0..10_000 {
            let o = complete_test(&order(at), &PatientProfile::neutral(0, true), &t, &mut s).unwrap();
            let d = o.completed_at.unwrap().since(at).unwrap();
            assert!((1440..=14 * 1440).contains(&d), "{d}");
        }
    }

    #[test]
    fn hazards_clamp_with_extreme_propensity() {
        let t = table_with(
            KEY_PROMPT_SICK,
            PdfSpec::bernoulli(0.9).with(AttributeModifier::mul(crate::care::Predicate::Always, 50.0)),
        );
        let mut p = PatientProfile::neutral(0, true);
        p.symptom_propensity.sick = 1e6;
        let h = PromptHazards::for_patient(&p, &t).unwrap();
        assert_eq!(h.sick, 1.0);
        assert!((0.0..=1.0).contains(&h.diabetes_symptom));
    }
}
