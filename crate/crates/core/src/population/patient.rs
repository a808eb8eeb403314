use super::cluster::ClusterSpec;
use super::PopulationError;
use crate::measure::PerMeasure;
use crate::rng::RngStream;
use crate::time::{SimTime, DAYS_PER_YEAR};
use rand::Rng;
use rand_distr::{Beta, Normal};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sex {
    Female,
    Male,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RaceEthnicity {
    White,
    Black,
    Hispanic,
    Other,
}

impl RaceEthnicity {
    pub const ALL: [RaceEthnicity; 4] = [
        RaceEthnicity::White,
        RaceEthnicity::Black,
        RaceEthnicity::Hispanic,
        RaceEthnicity::Other,
    ];

    pub fn is_minority(self) -> bool {
        self != RaceEthnicity::White
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Insurance {
    Continuous,
    Intermittent,
    Uninsured,
    Medicaid,
}

impl Insurance {
    pub const ALL: [Insurance; 4] = [
        Insurance::Continuous,
        Insurance::Intermittent,
        Insurance::Uninsured,
        Insurance::Medicaid,
    ];
}

/// Individual multipliers on the daily prompt hazards.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PromptPropensity {
    pub sick: f64,
    pub diabetes_symptom: f64,
}

impl Default for PromptPropensity {
    fn default() -> Self {
        PromptPropensity {
            sick: 1.0,
            diabetes_symptom: 1.0,
        }
    }
}

/// Placeholder spread for individual prompt propensities: uniform on this range.
pub const PROPENSITY_RANGE: (f64, f64) = (0.5, 1.5);

/// Adult ages are truncated to this range.
pub const AGE_RANGE: (f64, f64) = (18.0, 95.0);

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PatientProfile {
    pub id: u32,
    pub age: f64,
    pub sex: Sex,
    pub race_ethnicity: RaceEthnicity,
    pub ses_index: f64,
    pub insurance: Insurance,
    pub has_diabetes: bool,
    pub symptom_propensity: PromptPropensity,
    pub assigned_clinician: Option<u32>,
    /// When the registry next recalls this patient for a wellness check.
    pub wellness_due: SimTime,
    /// A wellness request is in flight (booked, or waiting on a recall retry).
    pub wellness_booked: bool,
    /// Last completed test per measure.
    pub screening_history: PerMeasure<Option<SimTime>>,
}

impl PatientProfile {
    /// A plain patient with neutral attributes, mostly useful in tests.
    pub fn neutral(id: u32, has_diabetes: bool) -> Self {
        PatientProfile {
            id,
            age: 45.0,
            sex: Sex::Female,
            race_ethnicity: RaceEthnicity::White,
            ses_index: 0.5,
            insurance: Insurance::Continuous,
            has_diabetes,
            symptom_propensity: PromptPropensity::default(),
            assigned_clinician: None,
            wellness_due: SimTime::from_days(DAYS_PER_YEAR),
            wellness_booked: false,
            screening_history: PerMeasure::default(),
        }
    }
}

/// Draw `n` patients from `spec`'s attribute distributions.
///
/// First wellness due dates are spread uniformly over the first year so that
/// recurring visits are staggered.
pub fn generate_population(
    spec: &ClusterSpec,
    n: usize,
    stream: &mut RngStream,
) -> Result<Vec<PatientProfile>, PopulationError> {
    spec.validate()?;
    let p = &spec.attribute_params;
    let invalid = |message: String| PopulationError::InvalidSpec {
        cluster_id: spec.cluster_id,
        message,
    };
    let age = Normal::new(p.age_mean, p.age_sd).map_err(|e| invalid(format!("age: {e}")))?;
    let ses = Beta::new(
        p.ses_mean * p.ses_concentration,
        (1.0 - p.ses_mean) * p.ses_concentration,
    )
    .map_err(|e| invalid(format!("ses: {e}")))?;

    let patients = (0..n)
        .map(|i| {
            let age = stream.sample(age).clamp(AGE_RANGE.0, AGE_RANGE.1);
            let sex = if stream.bernoulli(p.female_share) {
                Sex::Female
            } else {
                Sex::Male
            };
            let race_ethnicity = RaceEthnicity::ALL[stream.categorical(&p.race_weights)];
            let ses_index = stream.sample(ses);
            let insurance = Insurance::ALL[stream.categorical(&p.insurance_weights)];
            let has_diabetes = stream.bernoulli(p.diabetes_prevalence);
            let symptom_propensity = PromptPropensity {
                sick: stream.uniform_between(PROPENSITY_RANGE.0, PROPENSITY_RANGE.1),
                diabetes_symptom: stream.uniform_between(PROPENSITY_RANGE.0, PROPENSITY_RANGE.1),
            };
            let due_day = stream.int_in_range(0, DAYS_PER_YEAR as i64 - 1) as u64;
            PatientProfile {
                id: i as u32,
                age,
                sex,
                race_ethnicity,
                ses_index,
                insurance,
                has_diabetes,
                symptom_propensity,
                assigned_clinician: None,
                wellness_due: SimTime::from_days(due_day),
                wellness_booked: false,
                screening_history: PerMeasure::default(),
            }
        })
        .collect();
    Ok(patients)
}
