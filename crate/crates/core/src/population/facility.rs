use super::cluster::ClusterSpec;
use super::patient::PatientProfile;
use super::schedule::{AppointmentBook, WorkSchedule};
use super::PopulationError;
use crate::measure::PerMeasure;
use crate::rng::RngStream;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HoursVariant {
    #[default]
    Standard,
    /// Shifts two hours longer, with start times staggered an hour apart.
    ExtendedStaggered,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PanelPolicy {
    #[default]
    RoundRobin,
    /// Round-robin over a shuffled patient order.
    Shuffled,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FacilityConfig {
    pub clinicians: usize,
    pub slot_minutes: u64,
    pub shift_start_minute: u64,
    pub shift_hours: u64,
    pub hours_variant: HoursVariant,
    pub panel_policy: PanelPolicy,
}

impl Default for FacilityConfig {
    fn default() -> Self {
        FacilityConfig {
            clinicians: 5,
            slot_minutes: 15,
            shift_start_minute: 8 * 60,
            shift_hours: 8,
            hours_variant: HoursVariant::Standard,
            panel_policy: PanelPolicy::RoundRobin,
        }
    }
}

pub const EXTENSION_HOURS: u64 = 2;
pub const STAGGER_MINUTES: u64 = 60;

impl FacilityConfig {
    /// Shift for clinician `index` under the configured hours variant.
    pub fn shift_for(&self, index: usize) -> WorkSchedule {
        match self.hours_variant {
            HoursVariant::Standard => WorkSchedule::weekdays(
                self.shift_start_minute,
                self.shift_start_minute + self.shift_hours * 60,
            ),
            HoursVariant::ExtendedStaggered => {
                let start = (self.shift_start_minute + (index % 3) as u64 * STAGGER_MINUTES)
                    .saturating_sub(STAGGER_MINUTES);
                WorkSchedule::weekdays(start, start + (self.shift_hours + EXTENSION_HOURS) * 60)
            }
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.slot_minutes == 0 {
            return Err("slot_minutes must be positive".into());
        }
        for i in 0..self.clinicians.max(1) {
            let shift = self.shift_for(i);
            if !shift.is_valid() {
                return Err(format!("clinician {i} shift {shift:?} does not fit in a day"));
            }
            if !shift.shift_minutes().is_multiple_of(self.slot_minutes) {
                return Err("shift length must be a whole number of slots".into());
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClinicianProfile {
    pub id: u32,
    pub shift: WorkSchedule,
    pub slot_length: u64,
    pub training_count: u8,
    /// Multiplier on each measure's baseline order probability.
    pub order_multiplier: PerMeasure<f64>,
}

#[derive(Clone, Debug)]
pub struct FacilityProfile {
    pub cluster_id: u8,
    pub clinicians: Vec<ClinicianProfile>,
    /// Earliest opening and latest closing minute across all shifts.
    pub hours: (u64, u64),
    pub registry_enabled: bool,
    pub appointment_book: Vec<AppointmentBook>,
    pub panels: Vec<Vec<u32>>,
}

/// Staff a facility and give every patient exactly one clinician.
pub fn build_facility(
    spec: &ClusterSpec,
    config: &FacilityConfig,
    patients: &mut [PatientProfile],
    stream: &mut RngStream,
) -> Result<FacilityProfile, PopulationError> {
    if config.clinicians == 0 {
        return Err(PopulationError::NoClinicians);
    }
    config.validate().map_err(PopulationError::InvalidFacility)?;

    let clinicians: Vec<ClinicianProfile> = (0..config.clinicians)
        .map(|i| ClinicianProfile {
            id: i as u32,
            shift: config.shift_for(i),
            slot_length: config.slot_minutes,
            training_count: 0,
            order_multiplier: PerMeasure::splat(1.0),
        })
        .collect();
    let appointment_book = clinicians
        .iter()
        .map(|c| AppointmentBook::new(c.shift.clone(), c.slot_length))
        .collect();
    let hours = clinicians.iter().fold((u64::MAX, 0), |(open, close), c| {
        (open.min(c.shift.start_minute), close.max(c.shift.end_minute))
    });

    let mut order: Vec<usize> = (0..patients.len()).collect();
    if config.panel_policy == PanelPolicy::Shuffled {
        for i in (1..order.len()).rev() {
            let j = stream.int_in_range(0, i as i64) as usize;
            order.swap(i, j);
        }
    }
    let mut panels = vec![Vec::new(); clinicians.len()];
    for (slot, &p) in order.iter().enumerate() {
        let c = slot % clinicians.len();
        patients[p].assigned_clinician = Some(c as u32);
        panels[c].push(patients[p].id);
    }

    Ok(FacilityProfile {
        cluster_id: spec.cluster_id,
        clinicians,
        hours,
        registry_enabled: true,
        appointment_book,
        panels,
    })
}
