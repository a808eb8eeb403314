use super::config::ExperimentConfig;
use super::ExperimentError;
use crate::analysis::{
    arm_effect, check_monotone, validate_against_pilot, weighted_anova, weighted_national_estimate,
    EffectEstimate, MonotonicityViolation, PilotBenchmark, RunResult, ValidationReport, PILOT_YEARS,
};
use crate::intervention::Arm;
use crate::measure::Measure;
use crate::population::ClusterSpec;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt::Write as _;

pub const NATIONAL: &str = "national";

/// One row of `effects.csv`: a cluster's or the national effect at one training level.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EffectRow {
    /// Cluster id, or `national`.
    pub scope: String,
    pub measure: Measure,
    pub trainings_k: u8,
    pub mean_pp: f64,
    pub se_pp: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
}

/// One row of `plotdata/<measure>.csv`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlotRow {
    pub measure: Measure,
    pub k: u8,
    pub mean_pp: f64,
    pub lo: f64,
    pub hi: f64,
    pub pilot_year: u8,
    pub pilot_lo: f64,
    pub pilot_hi: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Reports {
    pub effects: Vec<EffectRow>,
    pub national: BTreeMap<(Measure, u8), EffectEstimate>,
    pub validation: ValidationReport,
    pub plot: Vec<PlotRow>,
    pub monotonicity: Vec<MonotonicityViolation>,
}

fn row(scope: String, k: u8, e: &EffectEstimate) -> EffectRow {
    EffectRow {
        scope,
        measure: e.measure,
        trainings_k: k,
        mean_pp: e.mean_pp,
        se_pp: e.se_pp,
        ci_lo: e.ci_lo,
        ci_hi: e.ci_hi,
    }
}

/// Effects per cluster and nationally, the pilot validation grid, ANOVA tables
/// and plot data, all derived from run results alone.
pub fn emit_reports(
    runs: &[RunResult],
    clusters: &[ClusterSpec],
    config: &ExperimentConfig,
) -> Result<Reports, ExperimentError> {
    if runs.is_empty() {
        return Err(crate::analysis::AnalysisError::MissingRuns.into());
    }
    let ks = config.training_levels();
    let weights: BTreeMap<u8, f64> = clusters.iter().map(|c| (c.cluster_id, c.fqhc_count as f64)).collect();
    let mut cells: BTreeMap<(u8, Arm, u8), Vec<RunResult>> = BTreeMap::new();
    for r in runs {
        cells.entry((r.cluster_id, r.arm, r.trainings_k)).or_default().push(r.clone());
    }
    let empty = Vec::new();
    let mut effects = Vec::new();
    let mut national = BTreeMap::new();
    for m in Measure::ALL {
        for &k in &ks {
            let mut per_cluster = BTreeMap::new();
            for c in clusters {
                let base = cells.get(&(c.cluster_id, Arm::Baseline, 0)).unwrap_or(&empty);
                let pilot = cells.get(&(c.cluster_id, Arm::Pilot, k)).unwrap_or(&empty);
                let e = arm_effect(base, pilot, m, config.paired)?;
                effects.push(row(c.cluster_id.to_string(), k, &e));
                per_cluster.insert(c.cluster_id, e);
            }
            let n = weighted_national_estimate(&per_cluster, &weights)?;
            effects.push(row(NATIONAL.to_string(), k, &n));
            national.insert((m, k), n);
        }
    }
    let benchmark = PilotBenchmark::default();
    let mut validation = validate_against_pilot(&national, &benchmark, &ks)?;
    if !ks.is_empty() {
        validation.anova = Measure::ALL
            .iter()
            .map(|&m| weighted_anova(runs, m, &weights))
            .collect::<Result<_, _>>()?;
    }
    let mut plot = Vec::new();
    for m in Measure::ALL {
        for &k in &ks {
            let e = &national[&(m, k)];
            for year in PILOT_YEARS {
                let (pilot_lo, pilot_hi) = benchmark.value(m, year).expect("three years").ci();
                plot.push(PlotRow {
                    measure: m,
                    k,
                    mean_pp: e.mean_pp,
                    lo: e.ci_lo,
                    hi: e.ci_hi,
                    pilot_year: year,
                    pilot_lo,
                    pilot_hi,
                });
            }
        }
    }
    let monotonicity = check_monotone(&national);
    Ok(Reports { effects, national, validation, plot, monotonicity })
}

/// Plain-text summary of national effects and pilot overlap.
pub fn summary(reports: &Reports) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{:<12} {:>2} {:>9} {:>8} {:>20}  overlap Y1/Y2/Y3", "measure", "k", "mean_pp", "se_pp", "95% CI");
    for ((m, k), e) in &reports.national {
        let flags: Vec<&str> = reports
            .validation
            .rows
            .iter()
            .filter(|r| r.measure == *m && r.trainings_k == *k)
            .map(|r| if r.overlap { "yes" } else { "no" })
            .collect();
        let _ = writeln!(
            s,
            "{:<12} {:>2} {:>9.3} {:>8.3} {:>20}  {}",
            m.to_string(),
            k,
            e.mean_pp,
            e.se_pp,
            format!("[{:.3}, {:.3}]", e.ci_lo, e.ci_hi),
            flags.join("/")
        );
    }
    for v in &reports.monotonicity {
        let _ = writeln!(
            s,
            "warning: {} drops {:.3} pp after k={} (slack {:.3})",
            v.measure,
            v.drop_pp,
            v.k,
            v.slack_pp
        );
    }
    s
}
