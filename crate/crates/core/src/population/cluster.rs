use super::PopulationError;
use serde::{Deserialize, Serialize};

/// Per-attribute distribution parameters for one cluster archetype.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttributeParams {
    /// Mean and standard deviation of adult patient age, years.
    pub age_mean: f64,
    pub age_sd: f64,
    pub female_share: f64,
    /// Weights over [`RaceEthnicity`](super::RaceEthnicity) in declaration order.
    pub race_weights: [f64; 4],
    /// Mean and concentration of the Beta-distributed socioeconomic index.
    pub ses_mean: f64,
    pub ses_concentration: f64,
    /// Weights over [`Insurance`](super::Insurance) in declaration order.
    pub insurance_weights: [f64; 4],
    pub diabetes_prevalence: f64,
    /// Typical number of patients served by an FQHC of this type.
    pub population_served: u32,
}

/// One FQHC archetype and the number of real facilities it stands for.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClusterSpec {
    pub cluster_id: u8,
    pub label: String,
    pub fqhc_count: u32,
    pub attribute_params: AttributeParams,
}

const WEIGHT_TOLERANCE: f64 = 1e-9;

impl ClusterSpec {
    pub fn minority_share(&self) -> f64 {
        1.0 - self.attribute_params.race_weights[0]
    }

    pub fn validate(&self) -> Result<(), PopulationError> {
        let p = &self.attribute_params;
        let bad = |msg: String| {
            Err(PopulationError::InvalidSpec {
                cluster_id: self.cluster_id,
                message: msg,
            })
        };
        for (name, w) in [("race_weights", &p.race_weights), ("insurance_weights", &p.insurance_weights)] {
            if w.iter().any(|x| !x.is_finite() || *x < 0.0) {
                return bad(format!("{name} must be finite and non-negative"));
            }
            let sum: f64 = w.iter().sum();
            if (sum - 1.0).abs() > WEIGHT_TOLERANCE {
                return bad(format!("{name} sum to {sum}, expected 1"));
            }
        }
        for (name, v) in [
            ("female_share", p.female_share),
            ("diabetes_prevalence", p.diabetes_prevalence),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return bad(format!("{name} = {v} is not a probability"));
            }
        }
        if !(p.ses_mean > 0.0 && p.ses_mean < 1.0) {
            return bad(format!("ses_mean = {} must lie strictly inside (0, 1)", p.ses_mean));
        }
        if p.ses_concentration.is_nan() || p.ses_concentration <= 0.0 {
            return bad("ses_concentration must be positive".into());
        }
        if !(p.age_mean.is_finite() && p.age_sd >= 0.0) {
            return bad("age_mean must be finite and age_sd non-negative".into());
        }
        if self.fqhc_count == 0 {
            return bad("fqhc_count must be positive".into());
        }
        Ok(())
    }
}

/// The four built-in FQHC archetypes.
///
/// Facility counts are the national cluster sizes (399, 274, 69 and 456 of
/// 1,198 FQHCs). The attribute parameters are calibration defaults chosen to
/// respect each archetype's ordinal description, not measured values:
///
/// 1. older, low diversity, better insured, higher income
/// 2. high diversity, poor, many uninsured, small facilities
/// 3. poor, higher diabetes, about half minority, large facilities
/// 4. young, relatively poor, high diversity, high Medicaid, large facilities
pub fn builtin_cluster_specs() -> Vec<ClusterSpec> {
    vec![
        ClusterSpec {
            cluster_id: 1,
            label: "older, low diversity, better insured, higher income".into(),
            fqhc_count: 399,
            attribute_params: AttributeParams {
                age_mean: 50.0,
                age_sd: 16.0,
                female_share: 0.56,
                race_weights: [0.78, 0.08, 0.09, 0.05],
                ses_mean: 0.56,
                ses_concentration: 8.0,
                insurance_weights: [0.55, 0.17, 0.14, 0.14],
                diabetes_prevalence: 0.14,
                population_served: 11_000,
            },
        },
        ClusterSpec {
            cluster_id: 2,
            label: "high diversity, poor, many uninsured, small population".into(),
            fqhc_count: 274,
            attribute_params: AttributeParams {
                age_mean: 38.0,
                age_sd: 15.0,
                female_share: 0.58,
                race_weights: [0.28, 0.30, 0.32, 0.10],
                ses_mean: 0.30,
                ses_concentration: 8.0,
                insurance_weights: [0.20, 0.14, 0.44, 0.22],
                diabetes_prevalence: 0.13,
                population_served: 6_000,
            },
        },
        ClusterSpec {
            cluster_id: 3,
            label: "poor, higher diabetes, about half minority, large population".into(),
            fqhc_count: 69,
            attribute_params: AttributeParams {
                age_mean: 43.0,
                age_sd: 16.0,
                female_share: 0.57,
                race_weights: [0.50, 0.22, 0.20, 0.08],
                ses_mean: 0.32,
                ses_concentration: 8.0,
                insurance_weights: [0.26, 0.18, 0.30, 0.26],
                diabetes_prevalence: 0.20,
                population_served: 32_000,
            },
        },
        ClusterSpec {
            cluster_id: 4,
            label: "young, relatively poor, high diversity, high Medicaid, large population".into(),
            fqhc_count: 456,
            attribute_params: AttributeParams {
                age_mean: 32.0,
                age_sd: 13.0,
                female_share: 0.60,
                race_weights: [0.30, 0.25, 0.37, 0.08],
                ses_mean: 0.38,
                ses_concentration: 8.0,
                insurance_weights: [0.20, 0.14, 0.20, 0.46],
                diabetes_prevalence: 0.11,
                population_served: 28_000,
            },
        },
    ]
}
