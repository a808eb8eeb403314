use super::AnalysisError;
use crate::intervention::Arm;
use crate::kernel::{EventKind, EventRecord, Subject};
use crate::measure::{Measure, PerMeasure};
use crate::population::PatientProfile;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CqmResult {
    pub measure: Measure,
    pub numerator: u32,
    pub denominator: u32,
    pub rate: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub cluster_id: u8,
    pub arm: Arm,
    pub trainings_k: u8,
    pub run_index: u32,
    pub seed: u64,
    pub cqm: PerMeasure<CqmResult>,
}

impl RunResult {
    pub fn rate(&self, m: Measure) -> f64 {
        self.cqm.get(m).rate
    }
}

/// Share of diabetic patients with at least one completed test per measure
/// over the events in `trace`.
pub fn compute_cqm(
    trace: &[EventRecord],
    population: &[PatientProfile],
) -> Result<PerMeasure<CqmResult>, AnalysisError> {
    let diabetic: Vec<bool> = population.iter().map(|p| p.has_diabetes).collect();
    let denominator = diabetic.iter().filter(|d| **d).count() as u32;
    if denominator == 0 {
        return Err(AnalysisError::EmptyDenominator);
    }
    let mut seen = vec![[false; 4]; population.len()];
    let mut numerators = [0u32; 4];
    for r in trace {
        let (EventKind::Completion(m), Subject::Patient(i)) = (r.kind, r.subject) else {
            continue;
        };
        let i = i as usize;
        if diabetic.get(i).copied().unwrap_or(false) && !seen[i][m.index()] {
            seen[i][m.index()] = true;
            numerators[m.index()] += 1;
        }
    }
    Ok(PerMeasure(Measure::ALL.map(|m| CqmResult {
        measure: m,
        numerator: numerators[m.index()],
        denominator,
        rate: numerators[m.index()] as f64 / denominator as f64,
    })))
}
