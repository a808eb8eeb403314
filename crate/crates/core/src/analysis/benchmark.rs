use super::anova::AnovaTable;
use super::effect::{EffectEstimate, Z95};
use super::AnalysisError;
use crate::measure::{Measure, PerMeasure};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

pub const PILOT_YEARS: [u8; 3] = [1, 2, 3];

/// A pilot difference-in-differences result in percentage points.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PilotValue {
    pub mean_pp: f64,
    pub se_pp: f64,
}

impl PilotValue {
    pub fn ci(&self) -> (f64, f64) {
        (self.mean_pp - Z95 * self.se_pp, self.mean_pp + Z95 * self.se_pp)
    }
}

/// Published pilot results per measure for years 1 to 3.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PilotBenchmark(pub PerMeasure<[PilotValue; 3]>);

const fn pv(mean_pp: f64, se_pp: f64) -> PilotValue {
    PilotValue { mean_pp, se_pp }
}

impl Default for PilotBenchmark {
    fn default() -> Self {
        PilotBenchmark(PerMeasure([
            [pv(1.67, 0.43), pv(0.68, 0.102), pv(0.70, 0.38)],
            [pv(0.48, 0.330), pv(0.16, 0.728), pv(1.00, 0.46)],
            [pv(1.84, 0.50), pv(1.17, 0.47), pv(1.23, 0.46)],
            [pv(2.62, 0.55), pv(3.36, 0.51), pv(2.62, 0.49)],
        ]))
    }
}

impl PilotBenchmark {
    /// Value for `year` in 1..=3.
    pub fn value(&self, measure: Measure, year: u8) -> Option<PilotValue> {
        let y = usize::from(year).checked_sub(1)?;
        self.0.get(measure).get(y).copied()
    }
}

/// Pilot 95% interval for `measure` in `year`.
pub fn pilot_ci(benchmark: &PilotBenchmark, measure: Measure, year: u8) -> Option<(f64, f64)> {
    benchmark.value(measure, year).map(|v| v.ci())
}

/// Whether two closed intervals intersect.
pub fn ci_overlap(a: (f64, f64), b: (f64, f64)) -> Result<bool, AnalysisError> {
    for (lo, hi) in [a, b] {
        if lo.is_nan() || hi.is_nan() || lo > hi {
            return Err(AnalysisError::MalformedInterval { lo, hi });
        }
    }
    Ok(a.0.max(b.0) <= a.1.min(b.1))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidationRow {
    pub measure: Measure,
    pub year: u8,
    pub trainings_k: u8,
    pub sim_mean_pp: f64,
    pub sim_se_pp: f64,
    pub sim_lo: f64,
    pub sim_hi: f64,
    pub pilot_mean_pp: f64,
    pub pilot_se_pp: f64,
    pub pilot_lo: f64,
    pub pilot_hi: f64,
    pub overlap: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub rows: Vec<ValidationRow>,
    /// Simulated estimates the rows were built from, one per (measure, k).
    pub estimates: Vec<EffectEstimateAt>,
    pub anova: Vec<AnovaTable>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EffectEstimateAt {
    pub trainings_k: u8,
    #[serde(flatten)]
    pub estimate: EffectEstimate,
}

/// Compare each simulated estimate against every pilot year.
///
/// Rows are ordered by measure, then year, then training count.
pub fn validate_against_pilot(
    estimates: &BTreeMap<(Measure, u8), EffectEstimate>,
    benchmark: &PilotBenchmark,
    ks: &[u8],
) -> Result<ValidationReport, AnalysisError> {
    let mut rows = Vec::with_capacity(4 * 3 * ks.len());
    for m in Measure::ALL {
        for year in PILOT_YEARS {
            let pilot = benchmark.value(m, year).expect("three pilot years");
            let (pilot_lo, pilot_hi) = pilot.ci();
            for &k in ks {
                let e = estimates.get(&(m, k)).ok_or(AnalysisError::MissingEstimate { measure: m, k })?;
                rows.push(ValidationRow {
                    measure: m,
                    year,
                    trainings_k: k,
                    sim_mean_pp: e.mean_pp,
                    sim_se_pp: e.se_pp,
                    sim_lo: e.ci_lo,
                    sim_hi: e.ci_hi,
                    pilot_mean_pp: pilot.mean_pp,
                    pilot_se_pp: pilot.se_pp,
                    pilot_lo,
                    pilot_hi,
                    overlap: ci_overlap(e.ci(), (pilot_lo, pilot_hi))?,
                });
            }
        }
    }
    let estimates = estimates
        .iter()
        .filter(|((_, k), _)| ks.contains(k))
        .map(|(&(_, k), e)| EffectEstimateAt { trainings_k: k, estimate: *e })
        .collect();
    Ok(ValidationReport { rows, estimates, anova: Vec::new() })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityViolation {
    pub measure: Measure,
    pub k: u8,
    pub drop_pp: f64,
    pub slack_pp: f64,
}

/// Adjacent training levels whose estimate falls by more than half the pooled
/// standard error `sqrt((se_k^2 + se_{k+1}^2) / 2)`.
pub fn check_monotone(estimates: &BTreeMap<(Measure, u8), EffectEstimate>) -> Vec<MonotonicityViolation> {
    let mut out = Vec::new();
    for m in Measure::ALL {
        let series: Vec<(u8, &EffectEstimate)> =
            estimates.iter().filter(|((mm, _), _)| *mm == m).map(|((_, k), e)| (*k, e)).collect();
        for pair in series.windows(2) {
            let ((k, a), (_, b)) = (pair[0], pair[1]);
            let slack = 0.5 * ((a.se_pp.powi(2) + b.se_pp.powi(2)) / 2.0).sqrt();
            let drop = a.mean_pp - b.mean_pp;
            if drop > slack {
                out.push(MonotonicityViolation { measure: m, k, drop_pp: drop, slack_pp: slack });
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overlap_examples() {
        assert!(ci_overlap((0.0, 1.0), (0.5, 2.0)).unwrap());
        assert!(!ci_overlap((0.0, 1.0), (1.1, 2.0)).unwrap());
        assert!(ci_overlap((0.0, 1.0), (1.0, 2.0)).unwrap());
        assert!(matches!(ci_overlap((2.0, 1.0), (0.0, 1.0)), Err(AnalysisError::MalformedInterval { .. })));
        let (lo, hi) = pilot_ci(&PilotBenchmark::default(), Measure::HbA1c, 1).unwrap();
        assert!((lo - 0.8272).abs() < 1e-12 && (hi - 2.5128).abs() < 1e-12);
        assert!(ci_overlap((2.0, 3.0), (lo, hi)).unwrap());
    }

    #[test]
    fn grid_shape_and_identity() {
        let b = PilotBenchmark::default();
        let est: BTreeMap<_, _> = Measure::ALL
            .iter()
            .flat_map(|&m| {
                let v = b.value(m, 1).unwrap();
                (1..=5).map(move |k| ((m, k), EffectEstimate::new(m, v.mean_pp, v.se_pp)))
            })
            .collect();
        let report = validate_against_pilot(&est, &b, &[1, 2, 3, 4, 5]).unwrap();
        assert_eq!(report.rows.len(), 60);
        assert!(report.rows.iter().filter(|r| r.year == 1).all(|r| r.overlap));
        let mut partial = est.clone();
        partial.remove(&(Measure::Ldl, 3));
        assert_eq!(
            validate_against_pilot(&partial, &b, &[1, 2, 3, 4, 5]).unwrap_err(),
            AnalysisError::MissingEstimate { measure: Measure::Ldl, k: 3 }
        );
    }

    #[test]
    fn ldl_year_two_far_estimate() {
        let b = PilotBenchmark::default();
        let (lo, hi) = pilot_ci(&b, Measure::Ldl, 2).unwrap();
        assert!((lo - (0.16 - 1.96 * 0.728)).abs() < 1e-12 && (hi - (0.16 + 1.96 * 0.728)).abs() < 1e-12);
        assert!(!ci_overlap((10.0, 12.0), (lo, hi)).unwrap());
    }

    #[test]
    fn monotone_slack() {
        let e = |m, s| EffectEstimate::new(Measure::EyeExam, m, s);
        let est: BTreeMap<_, _> = [((Measure::EyeExam, 1), e(2.0, 0.4)), ((Measure::EyeExam, 2), e(1.9, 0.4))].into();
        assert!(check_monotone(&est).is_empty());
        let est: BTreeMap<_, _> = [((Measure::EyeExam, 1), e(2.0, 0.4)), ((Measure::EyeExam, 2), e(1.7, 0.4))].into();
        assert_eq!(check_monotone(&est).len(), 1);
    }
}
