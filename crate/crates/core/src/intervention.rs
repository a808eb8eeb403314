//! Baseline and pilot scenario construction: clinician trainings and hours changes.

use crate::care::{CareConfig, CareError, PdfTable, Simulation};
use crate::measure::PerMeasure;
use crate::population::{
    build_facility, generate_population, ClinicianProfile, ClusterSpec, FacilityConfig, HoursVariant,
    PopulationError,
};
use crate::rng::{derive_seed, derive_stream, RngStream};
use rand_distr::{Distribution, Triangular};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum InterventionError {
    #[error("training count must be non-negative, got {0}")]
    NegativeTrainings(i64),
    #[error("invalid training effect parameters: {0}")]
    InvalidParams(String),
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error(transparent)]
    Population(#[from] PopulationError),
    #[error(transparent)]
    Care(#[from] CareError),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DrawRule {
    #[default]
    UniformOverCi,
    /// Triangular over the CI range, peaked at the mean.
    Triangular,
}

/// Per-training performance gain, in percentage points.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainingEffectParams {
    pub mean_pp: f64,
    pub ci_low_pp: f64,
    pub ci_high_pp: f64,
    pub draw_rule: DrawRule,
}

impl Default for TrainingEffectParams {
    fn default() -> Self {
        TrainingEffectParams {
            mean_pp: 14.0,
            ci_low_pp: 0.68,
            ci_high_pp: 26.44,
            draw_rule: DrawRule::UniformOverCi,
        }
    }
}

impl TrainingEffectParams {
    pub fn validate(&self) -> Result<(), InterventionError> {
        let ok = [self.mean_pp, self.ci_low_pp, self.ci_high_pp].iter().all(|v| v.is_finite())
            && self.ci_low_pp <= self.mean_pp
            && self.mean_pp <= self.ci_high_pp;
        if ok {
            Ok(())
        } else {
            Err(InterventionError::InvalidParams(format!(
                "need ci_low <= mean <= ci_high, got {} <= {} <= {}",
                self.ci_low_pp, self.mean_pp, self.ci_high_pp
            )))
        }
    }

    /// Expected effect of one training, as a fraction.
    pub fn expected_fraction(&self) -> f64 {
        match self.draw_rule {
            DrawRule::UniformOverCi => (self.ci_low_pp + self.ci_high_pp) / 200.0,
            DrawRule::Triangular => (self.ci_low_pp + self.ci_high_pp + self.mean_pp) / 300.0,
        }
    }
}

/// One training's effect as a fraction (14 pp is 0.14). Consumes one uniform.
pub fn draw_training_effect(params: &TrainingEffectParams, stream: &mut RngStream) -> f64 {
    let (lo, hi) = (params.ci_low_pp / 100.0, params.ci_high_pp / 100.0);
    match params.draw_rule {
        DrawRule::UniformOverCi => stream.uniform_between(lo, hi),
        DrawRule::Triangular => Triangular::new(lo, hi, params.mean_pp / 100.0)
            .expect("validated parameters")
            .sample(stream),
    }
}

/// Give `clinician` `k` trainings: every measure's order multiplier becomes
/// `1 + e_1 + ... + e_k` with independent draws.
pub fn apply_trainings(
    clinician: &ClinicianProfile,
    k: i64,
    params: &TrainingEffectParams,
    stream: &mut RngStream,
) -> Result<ClinicianProfile, InterventionError> {
    if k < 0 {
        return Err(InterventionError::NegativeTrainings(k));
    }
    params.validate()?;
    let gain: f64 = (0..k).map(|_| draw_training_effect(params, stream)).sum();
    let mut out = clinician.clone();
    out.training_count = u8::try_from(k).unwrap_or(u8::MAX);
    out.order_multiplier = PerMeasure::splat(1.0 + gain);
    Ok(out)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Arm {
    #[default]
    Baseline,
    Pilot,
}

impl Arm {
    pub fn as_str(self) -> &'static str {
        match self {
            Arm::Baseline => "baseline",
            Arm::Pilot => "pilot",
        }
    }
}

impl fmt::Display for Arm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Arm {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "baseline" => Ok(Arm::Baseline),
            "pilot" => Ok(Arm::Pilot),
            _ => Err(format!("unknown arm `{s}`")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub arm: Arm,
    pub trainings_k: u8,
    pub hours_variant: HoursVariant,
    pub population_size: usize,
    pub warmup_days: u64,
    pub horizon_days: u64,
    pub master_seed: u64,
    /// Share random numbers between arms for the same cluster and run index.
    pub paired: bool,
    pub facility: FacilityConfig,
    pub care: CareConfig,
    pub training: TrainingEffectParams,
    /// Entries replacing or extending the default distribution table.
    pub pdf_overrides: PdfTable,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            arm: Arm::Baseline,
            trainings_k: 0,
            hours_variant: HoursVariant::Standard,
            population_size: 2000,
            warmup_days: 120,
            horizon_days: 365,
            master_seed: 0,
            paired: true,
            facility: FacilityConfig::default(),
            care: CareConfig::default(),
            training: TrainingEffectParams::default(),
            pdf_overrides: PdfTable(Default::default()),
        }
    }
}

pub const MAX_TRAININGS: u8 = 5;

impl ScenarioConfig {
    pub fn baseline() -> Self {
        ScenarioConfig::default()
    }

    pub fn pilot(k: u8) -> Self {
        ScenarioConfig {
            arm: Arm::Pilot,
            trainings_k: k,
            ..ScenarioConfig::default()
        }
    }

    pub fn validate(&self) -> Result<(), InterventionError> {
        let bad = |m: String| Err(InterventionError::InvalidScenario(m));
        match (self.arm, self.trainings_k) {
            (Arm::Baseline, 0) => {}
            (Arm::Baseline, k) => return bad(format!("baseline arm with {k} trainings")),
            (Arm::Pilot, k) if !(1..=MAX_TRAININGS).contains(&k) => {
                return bad(format!("pilot arm needs 1..={MAX_TRAININGS} trainings, got {k}"))
            }
            _ => {}
        }
        if self.population_size == 0 {
            return bad("population_size must be positive".into());
        }
        if self.horizon_days == 0 {
            return bad("horizon_days must be positive".into());
        }
        self.training.validate()?;
        self.facility_config().validate().map_err(InterventionError::InvalidScenario)?;
        self.care.validate().map_err(InterventionError::InvalidScenario)?;
        self.pdf_table().validate()?;
        Ok(())
    }

    pub fn facility_config(&self) -> FacilityConfig {
        FacilityConfig {
            hours_variant: self.hours_variant,
            ..self.facility.clone()
        }
    }

    pub fn pdf_table(&self) -> PdfTable {
        PdfTable::defaults().merged(&self.pdf_overrides)
    }

    /// Seed for one run. Paired scenarios share it across arms.
    pub fn run_seed(&self, cluster_id: u8, run_index: u32) -> u64 {
        let label = if self.paired {
            format!("cluster{cluster_id}/run{run_index}")
        } else {
            format!("cluster{cluster_id}/{}{}/run{run_index}", self.arm, self.trainings_k)
        };
        derive_seed(self.master_seed, &label)
    }
}

/// Build and warm up the simulation for one run of one scenario.
///
/// The population, panels, appointment prompts and warm-up draw from streams
/// keyed by the run seed alone. Clinician `i`'s training draws come from its
/// own stream, so a pilot run with `k + 1` trainings repeats the first `k`
/// draws of the `k` run.
pub fn realize_scenario(
    config: &ScenarioConfig,
    cluster: &ClusterSpec,
    run_index: u32,
) -> Result<Simulation, InterventionError> {
    config.validate()?;
    let seed = config.run_seed(cluster.cluster_id, run_index);
    let mut patients = generate_population(cluster, config.population_size, &mut derive_stream(seed, "population"))?;
    let mut facility = build_facility(
        cluster,
        &config.facility_config(),
        &mut patients,
        &mut derive_stream(seed, "facility"),
    )?;
    if config.arm == Arm::Pilot {
        for c in facility.clinicians.iter_mut() {
            let mut stream = derive_stream(seed, &format!("clinician{}/training", c.id));
            *c = apply_trainings(c, config.trainings_k as i64, &config.training, &mut stream)?;
        }
    }
    let mut sim = Simulation::new(
        patients,
        facility,
        config.care.clone(),
        config.pdf_table(),
        seed,
        config.horizon_days,
    )?;
    sim.warmup(config.warmup_days, &mut derive_stream(seed, "warmup"))?;
    Ok(sim)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::population::{builtin_cluster_specs, WorkSchedule};

    fn clinician() -> ClinicianProfile {
        ClinicianProfile {
            id: 0,
            shift: WorkSchedule::weekdays(480, 960),
            slot_length: 15,
            training_count: 0,
            order_multiplier: PerMeasure::splat(1.0),
        }
    }

    #[test]
    fn degenerate_params_fix_the_effect() {
        let p = TrainingEffectParams { mean_pp: 14.0, ci_low_pp: 14.0, ci_high_pp: 14.0, ..Default::default() };
        let mut s = derive_stream(1, "t");
        for _ in 0..100 {
            assert_eq!(draw_training_effect(&p, &mut s), 0.14);
        }
        let tri = TrainingEffectParams { draw_rule: DrawRule::Triangular, ..p };
        assert!((draw_training_effect(&tri, &mut s) - 0.14).abs() < 1e-12);
    }

    #[test]
    fn default_draws_stay_in_ci_with_expected_mean() {
        let p = TrainingEffectParams::default();
        let mut s = derive_stream(2, "t");
        let n = 100_000;
        let mut sum = 0.0;
        for _ in 0..n {
            let e = draw_training_effect(&p, &mut s);
            assert!((0.0068..=0.2644).contains(&e));
            sum += e;
        }
        assert!((sum / n as f64 - 0.1356).abs() < 0.002);
        assert!((p.expected_fraction() - 0.1356).abs() < 1e-12);
    }

    #[test]
    fn triangular_mean() {
        let p = TrainingEffectParams { draw_rule: DrawRule::Triangular, ..Default::default() };
        let mut s = derive_stream(3, "t");
        let n = 100_000;
        let mean = (0..n).map(|_| draw_training_effect(&p, &mut s)).sum::<f64>() / n as f64;
        assert!((mean - p.expected_fraction()).abs() < 0.002, "{mean}");
    }

    #[test]
    fn trainings_add_up() {
        let p = TrainingEffectParams::default();
        let mut s = derive_stream(4, "t");
        let c = apply_trainings(&clinician(), 0, &p, &mut s).unwrap();
        assert_eq!(c.order_multiplier, PerMeasure::splat(1.0));
        assert_eq!(
            apply_trainings(&clinician(), -1, &p, &mut s).unwrap_err(),
            InterventionError::NegativeTrainings(-1)
        );
        let mut a = derive_stream(5, "t");
        let mut b = derive_stream(5, "t");
        let c = apply_trainings(&clinician(), 2, &p, &mut a).unwrap();
        let expected = 1.0 + draw_training_effect(&p, &mut b) + draw_training_effect(&p, &mut b);
        assert!(c.order_multiplier.iter().all(|(_, m)| (m - expected).abs() < 1e-15));
        assert_eq!(c.training_count, 2);
    }

    #[test]
    fn invalid_params_rejected() {
        let p = TrainingEffectParams { mean_pp: 30.0, ..Default::default() };
        assert!(matches!(
            apply_trainings(&clinician(), 1, &p, &mut derive_stream(1, "t")),
            Err(InterventionError::InvalidParams(_))
        ));
    }

    #[test]
    fn arm_and_k_must_agree() {
        let mut c = ScenarioConfig::baseline();
        c.trainings_k = 1;
        assert!(c.validate().is_err());
        assert!(ScenarioConfig::pilot(0).validate().is_err());
        assert!(ScenarioConfig::pilot(6).validate().is_err());
        assert!(ScenarioConfig::pilot(5).validate().is_ok());
    }

    fn small(mut c: ScenarioConfig) -> ScenarioConfig {
        c.population_size = 200;
        c.warmup_days = 30;
        c.master_seed = 77;
        c
    }

    #[test]
    fn baseline_multipliers_are_one_and_pilot_exceed_one() {
        let cluster = &builtin_cluster_specs()[1];
        let base = realize_scenario(&small(ScenarioConfig::baseline()), cluster, 0).unwrap();
        assert!(base.state().facility.clinicians.iter().all(|c| c.order_multiplier == PerMeasure::splat(1.0)));
        let pilot = realize_scenario(&small(ScenarioConfig::pilot(3)), cluster, 0).unwrap();
        assert!(pilot.state().facility.clinicians.iter().all(|c| c.order_multiplier.iter().all(|(_, m)| *m > 1.0)));
    }

    #[test]
    fn paired_arms_share_population() {
        let cluster = &builtin_cluster_specs()[2];
        let population = |c: ScenarioConfig| {
            let mut c = small(c);
            c.warmup_days = 0;
            let sim = realize_scenario(&c, cluster, 4).unwrap();
            format!("{:?}", sim.state().patients)
        };
        assert_eq!(population(ScenarioConfig::baseline()), population(ScenarioConfig::pilot(2)));
        let unpaired = |c: ScenarioConfig| ScenarioConfig { paired: false, ..c };
        assert_ne!(
            population(unpaired(ScenarioConfig::baseline())),
            population(unpaired(ScenarioConfig::pilot(2)))
        );
    }

    #[test]
    fn more_trainings_extend_the_same_draws() {
        let cluster = &builtin_cluster_specs()[0];
        let m = |k| {
            let sim = realize_scenario(&small(ScenarioConfig::pilot(k)), cluster, 1).unwrap();
            sim.state().facility.clinicians.iter().map(|c| *c.order_multiplier.get(crate::measure::Measure::EyeExam)).collect::<Vec<_>>()
        };
        let (one, two) = (m(1), m(2));
        assert!(one.iter().zip(&two).all(|(a, b)| b > a));
    }
}
