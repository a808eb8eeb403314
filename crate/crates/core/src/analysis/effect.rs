use super::cqm::RunResult;
use super::AnalysisError;
use crate::measure::Measure;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

pub const Z95: f64 = 1.96;

/// An effect in percentage points with its 95% interval.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EffectEstimate {
    pub measure: Measure,
    pub mean_pp: f64,
    pub se_pp: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
}

impl EffectEstimate {
    pub fn new(measure: Measure, mean_pp: f64, se_pp: f64) -> Self {
        EffectEstimate {
            measure,
            mean_pp,
            se_pp,
            ci_lo: mean_pp - Z95 * se_pp,
            ci_hi: mean_pp + Z95 * se_pp,
        }
    }

    pub fn ci(&self) -> (f64, f64) {
        (self.ci_lo, self.ci_hi)
    }
}

fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

/// Pilot minus baseline rate for `measure`, in percentage points.
///
/// With `paired`, runs are matched by run index and the standard error comes
/// from the paired differences. Otherwise the arms are treated as independent
/// samples (Welch standard error).
pub fn arm_effect(
    baseline: &[RunResult],
    pilot: &[RunResult],
    measure: Measure,
    paired: bool,
) -> Result<EffectEstimate, AnalysisError> {
    if baseline.len() < 2 {
        return Err(AnalysisError::InsufficientRuns { arm: "baseline", found: baseline.len() });
    }
    if pilot.len() < 2 {
        return Err(AnalysisError::InsufficientRuns { arm: "pilot", found: pilot.len() });
    }
    if paired {
        let base: BTreeMap<u32, f64> = baseline.iter().map(|r| (r.run_index, r.rate(measure))).collect();
        if base.len() != baseline.len() || base.len() != pilot.len() {
            return Err(AnalysisError::UnmatchedRuns(format!(
                "{} baseline and {} pilot runs",
                baseline.len(),
                pilot.len()
            )));
        }
        let diffs = pilot
            .iter()
            .map(|r| {
                base.get(&r.run_index)
                    .map(|b| r.rate(measure) - b)
                    .ok_or_else(|| AnalysisError::UnmatchedRuns(format!("pilot run {} has no baseline", r.run_index)))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let (mean, var) = mean_var(&diffs);
        let se = (var / diffs.len() as f64).sqrt();
        Ok(EffectEstimate::new(measure, 100.0 * mean, 100.0 * se))
    } else {
        let b: Vec<f64> = baseline.iter().map(|r| r.rate(measure)).collect();
        let p: Vec<f64> = pilot.iter().map(|r| r.rate(measure)).collect();
        let (mb, vb) = mean_var(&b);
        let (mp, vp) = mean_var(&p);
        let se = (vb / b.len() as f64 + vp / p.len() as f64).sqrt();
        Ok(EffectEstimate::new(measure, 100.0 * (mp - mb), 100.0 * se))
    }
}

/// Weighted mean of per-cluster effects with independent-error standard error.
pub fn weighted_national_estimate(
    effects: &BTreeMap<u8, EffectEstimate>,
    weights: &BTreeMap<u8, f64>,
) -> Result<EffectEstimate, AnalysisError> {
    if weights.is_empty() {
        return Err(AnalysisError::MissingRuns);
    }
    if let Some(id) = effects.keys().find(|id| !weights.contains_key(id)) {
        return Err(AnalysisError::MissingCluster(*id));
    }
    let mut measure = None;
    let (mut sw, mut swm, mut sw2v) = (0.0, 0.0, 0.0);
    for (id, w) in weights {
        let e = effects.get(id).ok_or(AnalysisError::MissingCluster(*id))?;
        measure.get_or_insert(e.measure);
        sw += w;
        swm += w * e.mean_pp;
        sw2v += w * w * e.se_pp * e.se_pp;
    }
    Ok(EffectEstimate::new(measure.expect("non-empty"), swm / sw, sw2v.sqrt() / sw))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::CqmResult;
    use crate::intervention::Arm;
    use crate::measure::PerMeasure;

    fn run(index: u32, rate: f64) -> RunResult {
        RunResult {
            cluster_id: 1,
            arm: Arm::Baseline,
            trainings_k: 0,
            run_index: index,
            seed: 0,
            cqm: PerMeasure(Measure::ALL.map(|m| CqmResult { measure: m, numerator: 0, denominator: 1, rate })),
        }
    }

    #[test]
    fn identical_arms_have_null_effect() {
        let runs: Vec<_> = (0..5).map(|i| run(i, 0.3 + 0.01 * i as f64)).collect();
        let e = arm_effect(&runs, &runs, Measure::HbA1c, true).unwrap();
        assert_eq!((e.mean_pp, e.se_pp), (0.0, 0.0));
    }

    #[test]
    fn shifted_arm() {
        let base: Vec<_> = (0..5).map(|i| run(i, 0.3 + 0.01 * i as f64)).collect();
        let pilot: Vec<_> = base.iter().map(|r| run(r.run_index, r.rate(Measure::Ldl) + 0.02)).collect();
        let e = arm_effect(&base, &pilot, Measure::Ldl, true).unwrap();
        assert!((e.mean_pp - 2.0).abs() < 1e-9 && e.se_pp < 1e-9);
        let e = arm_effect(&base, &pilot, Measure::Ldl, false).unwrap();
        assert!((e.mean_pp - 2.0).abs() < 1e-9);
    }

    #[test]
    fn too_few_runs() {
        let one = vec![run(0, 0.1)];
        let two = vec![run(0, 0.1), run(1, 0.2)];
        assert_eq!(
            arm_effect(&one, &two, Measure::HbA1c, true),
            Err(AnalysisError::InsufficientRuns { arm: "baseline", found: 1 })
        );
    }

    #[test]
    fn unmatched_pairs() {
        let a = vec![run(0, 0.1), run(1, 0.2)];
        let b = vec![run(0, 0.1), run(2, 0.2)];
        assert!(matches!(arm_effect(&a, &b, Measure::HbA1c, true), Err(AnalysisError::UnmatchedRuns(_))));
    }

    fn weights() -> BTreeMap<u8, f64> {
        [(1, 399.0), (2, 274.0), (3, 69.0), (4, 456.0)].into_iter().collect()
    }

    #[test]
    fn national_weighting() {
        let e = |m| EffectEstimate::new(Measure::EyeExam, m, 0.5);
        let same: BTreeMap<_, _> = (1..=4).map(|c| (c, e(1.3))).collect();
        let n = weighted_national_estimate(&same, &weights()).unwrap();
        assert!((n.mean_pp - 1.3).abs() < 1e-12);
        let mixed: BTreeMap<_, _> = [(1, e(1.0)), (2, e(1.0)), (3, e(1.0)), (4, e(0.0))].into_iter().collect();
        let n = weighted_national_estimate(&mixed, &weights()).unwrap();
        assert!((n.mean_pp - 742.0 / 1198.0).abs() < 1e-12);
        let mut missing = mixed.clone();
        missing.remove(&3);
        assert_eq!(weighted_national_estimate(&missing, &weights()), Err(AnalysisError::MissingCluster(3)));
    }
}
