//! Probability distributions for care-pathway events and their attribute adjustments.

use super::CareError;
use crate::measure::Measure;
use crate::population::{Insurance, PatientProfile, Sex};
use crate::rng::RngStream;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "dist", rename_all = "snake_case")]
pub enum Distribution {
    Bernoulli { p: f64 },
    Uniform { lo: f64, hi: f64 },
    Categorical { weights: Vec<f64> },
}

/// Patient attribute test selecting which patients a modifier applies to.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Predicate {
    Always,
    Diabetic,
    Female,
    Male,
    Minority,
    AgeAtLeast(f64),
    AgeBelow(f64),
    SesBelow(f64),
    SesAtLeast(f64),
    Insurance(Insurance),
}

impl Predicate {
    pub fn matches(&self, p: &PatientProfile) -> bool {
        match self {
            Predicate::Always => true,
            Predicate::Diabetic => p.has_diabetes,
            Predicate::Female => p.sex == Sex::Female,
            Predicate::Male => p.sex == Sex::Male,
            Predicate::Minority => p.race_ethnicity.is_minority(),
            Predicate::AgeAtLeast(a) => p.age >= *a,
            Predicate::AgeBelow(a) => p.age < *a,
            Predicate::SesBelow(s) => p.ses_index < *s,
            Predicate::SesAtLeast(s) => p.ses_index >= *s,
            Predicate::Insurance(i) => p.insurance == *i,
        }
    }
}

/// Adjustment applied when `when` matches: multiply by `mul` or add `add`.
///
/// For categorical distributions `category` selects the weight to adjust.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttributeModifier {
    pub when: Predicate,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mul: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub add: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub category: Option<usize>,
}

impl AttributeModifier {
    pub fn mul(when: Predicate, factor: f64) -> Self {
        AttributeModifier {
            when,
            mul: Some(factor),
            add: None,
            category: None,
        }
    }

    pub fn add(when: Predicate, delta: f64) -> Self {
        AttributeModifier {
            when,
            mul: None,
            add: Some(delta),
            category: None,
        }
    }

    fn apply(&self, x: f64) -> f64 {
        match (self.mul, self.add) {
            (Some(m), _) => x * m,
            (None, Some(a)) => x + a,
            (None, None) => x,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PdfSpec {
    #[serde(flatten)]
    pub dist: Distribution,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub modifiers: Vec<AttributeModifier>,
}

/// A drawn outcome of a placeholder event.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Outcome {
    Flag(bool),
    Value(f64),
    Category(usize),
}

impl PdfSpec {
    pub fn bernoulli(p: f64) -> Self {
        PdfSpec {
            dist: Distribution::Bernoulli { p },
            modifiers: Vec::new(),
        }
    }

    pub fn uniform(lo: f64, hi: f64) -> Self {
        PdfSpec {
            dist: Distribution::Uniform { lo, hi },
            modifiers: Vec::new(),
        }
    }

    pub fn categorical(weights: Vec<f64>) -> Self {
        PdfSpec {
            dist: Distribution::Categorical { weights },
            modifiers: Vec::new(),
        }
    }

    pub fn with(mut self, modifier: AttributeModifier) -> Self {
        self.modifiers.push(modifier);
        self
    }

    pub fn validate(&self, key: &str) -> Result<(), CareError> {
        let invalid = |message: String| {
            Err(CareError::InvalidSpec {
                key: key.to_owned(),
                message,
            })
        };
        match &self.dist {
            Distribution::Bernoulli { p } if !(0.0..=1.0).contains(p) => {
                return invalid(format!("bernoulli p = {p} is not a probability"))
            }
            Distribution::Uniform { lo, hi } if !(lo.is_finite() && hi.is_finite() && lo <= hi) => {
                return invalid(format!("uniform bounds [{lo}, {hi}] are malformed"))
            }
            Distribution::Categorical { weights }
                if weights.is_empty()
                    || weights.iter().any(|w| !w.is_finite() || *w < 0.0)
                    || weights.iter().sum::<f64>() <= 0.0 =>
            {
                return invalid("categorical weights must be non-negative with a positive sum".into())
            }
            _ => {}
        }
        for m in &self.modifiers {
            match (m.mul, m.add) {
                (Some(_), Some(_)) | (None, None) => {
                    return invalid("each modifier needs exactly one of `mul` or `add`".into())
                }
                (Some(f), None) if !(f.is_finite() && f >= 0.0) => {
                    return invalid(format!("multiplier {f} must be finite and non-negative"))
                }
                (None, Some(a)) if !a.is_finite() => return invalid(format!("addend {a} is not finite")),
                _ => {}
            }
            match (&self.dist, m.category) {
                (Distribution::Categorical { weights }, Some(c)) if c >= weights.len() => {
                    return invalid(format!("modifier category {c} is out of range"))
                }
                (Distribution::Categorical { .. }, None) => {
                    return invalid("categorical modifiers must name a `category`".into())
                }
                (Distribution::Bernoulli { .. } | Distribution::Uniform { .. }, Some(_)) => {
                    return invalid("only categorical modifiers take a `category`".into())
                }
                _ => {}
            }
        }
        Ok(())
    }

    fn adjusted(&self, base: f64, patient: &PatientProfile) -> f64 {
        self.modifiers
            .iter()
            .filter(|m| m.when.matches(patient))
            .fold(base, |x, m| m.apply(x).clamp(-f64::MAX, f64::MAX))
    }

    /// Bernoulli probability after attribute adjustment, clamped to `[0, 1]`.
    pub fn probability(&self, patient: &PatientProfile) -> Result<f64, CareError> {
        match self.dist {
            Distribution::Bernoulli { p } => Ok(self.adjusted(p, patient).clamp(0.0, 1.0)),
            _ => Err(CareError::InvalidSpec {
                key: String::new(),
                message: "expected a bernoulli distribution".into(),
            }),
        }
    }

    /// Uniform bounds after attribute adjustment.
    pub fn bounds(&self, patient: &PatientProfile) -> Result<(f64, f64), CareError> {
        match self.dist {
            Distribution::Uniform { lo, hi } => {
                let (a, b) = (self.adjusted(lo, patient), self.adjusted(hi, patient));
                Ok((a.min(b), a.max(b)))
            }
            _ => Err(CareError::InvalidSpec {
                key: String::new(),
                message: "expected a uniform distribution".into(),
            }),
        }
    }

    fn category_weights(&self, weights: &[f64], patient: &PatientProfile) -> Vec<f64> {
        let mut w = weights.to_vec();
        for m in self.modifiers.iter().filter(|m| m.when.matches(patient)) {
            if let Some(c) = m.category {
                w[c] = m.apply(w[c]).clamp(0.0, 1e300);
            }
        }
        w
    }

    /// Draw one outcome for `patient`. Every distribution consumes exactly one
    /// uniform from the stream.
    pub fn sample(&self, patient: &PatientProfile, stream: &mut RngStream) -> Result<Outcome, CareError> {
        self.validate("")?;
        Ok(match &self.dist {
            Distribution::Bernoulli { .. } => {
                let p = self.probability(patient)?;
                Outcome::Flag(stream.bernoulli(p))
            }
            Distribution::Uniform { .. } => {
                let (lo, hi) = self.bounds(patient)?;
                Outcome::Value(stream.uniform_between(lo, hi))
            }
            Distribution::Categorical { weights } => {
                let w = self.category_weights(weights, patient);
                if w.iter().sum::<f64>() <= 0.0 {
                    return Err(CareError::InvalidSpec {
                        key: String::new(),
                        message: "modifiers removed every category".into(),
                    });
                }
                Outcome::Category(stream.categorical(&w))
            }
        })
    }
}

pub const KEY_PROMPT_SICK: &str = "prompt.sick";
pub const KEY_PROMPT_SYMPTOM: &str = "prompt.diabetes_symptom";
pub const KEY_ATTENDANCE: &str = "attendance";

pub fn order_key(m: Measure) -> String {
    format!("order.{}", m.key())
}

pub fn completion_key(m: Measure) -> String {
    format!("complete.{}", m.key())
}

pub fn delay_key(m: Measure) -> String {
    format!("delay.{}", m.key())
}

/// Event-kind keyed table of distributions.
///
/// Keys: `prompt.sick` and `prompt.diabetes_symptom` (daily hazards),
/// `attendance`, and per measure `order.<m>` (per-visit order probability),
/// `complete.<m>` (completion probability) and `delay.<m>` (days from order to
/// result). Any other key may hold a placeholder distribution.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PdfTable(pub BTreeMap<String, PdfSpec>);

impl PdfTable {
    pub fn get(&self, key: &str) -> Result<&PdfSpec, CareError> {
        self.0.get(key).ok_or_else(|| CareError::MissingPdf(key.to_owned()))
    }

    pub fn insert(&mut self, key: impl Into<String>, spec: PdfSpec) {
        self.0.insert(key.into(), spec);
    }

    pub fn remove(&mut self, key: &str) -> Option<PdfSpec> {
        self.0.remove(key)
    }

    /// Replace entries with those in `overrides`, key by key.
    pub fn merged(&self, overrides: &PdfTable) -> PdfTable {
        let mut out = self.clone();
        for (k, v) in &overrides.0 {
            out.0.insert(k.clone(), v.clone());
        }
        out
    }

    pub fn validate(&self) -> Result<(), CareError> {
        self.0.iter().try_for_each(|(k, v)| v.validate(k))
    }

    /// The shipped calibration.
    ///
    /// Hazards and screening probabilities are calibration inputs tuned so the
    /// simulated eye-exam and nephropathy effects of one or two trainings land
    /// on the first-year demonstration results; see `configs/calibration.md`.
    pub fn defaults() -> PdfTable {
        use Predicate::*;
        let mut t = PdfTable(BTreeMap::new());
        t.insert(
            KEY_PROMPT_SICK,
            PdfSpec::bernoulli(0.004)
                .with(AttributeModifier::mul(AgeAtLeast(65.0), 1.5))
                .with(AttributeModifier::mul(SesBelow(0.25), 1.2))
                .with(AttributeModifier::mul(Insurance(crate::population::Insurance::Uninsured), 0.7)),
        );
        t.insert(KEY_PROMPT_SYMPTOM, PdfSpec::bernoulli(0.003));
        t.insert(
            KEY_ATTENDANCE,
            PdfSpec::bernoulli(0.9)
                .with(AttributeModifier::mul(Insurance(crate::population::Insurance::Uninsured), 0.93))
                .with(AttributeModifier::mul(SesBelow(0.25), 0.95)),
        );
        let uninsured = || Insurance(crate::population::Insurance::Uninsured);
        let screening = [
            (Measure::HbA1c, 0.30, 0.95, (0.0, 2.0)),
            (Measure::Ldl, 0.20, 0.90, (0.0, 7.0)),
            (Measure::EyeExam, 0.65, 0.65, (7.0, 60.0)),
            (Measure::Nephropathy, 0.45, 0.85, (0.0, 7.0)),
        ];
        for (m, order_p, complete_p, (lo, hi)) in screening {
            t.insert(
                order_key(m),
                PdfSpec::bernoulli(order_p).with(AttributeModifier::mul(uninsured(), 0.85)),
            );
            t.insert(
                completion_key(m),
                PdfSpec::bernoulli(complete_p).with(AttributeModifier::mul(SesBelow(0.25), 0.9)),
            );
            t.insert(delay_key(m), PdfSpec::uniform(lo, hi));
        }
        t
    }
}

impl Default for PdfTable {
    fn default() -> Self {
        PdfTable::defaults()
    }
}

/// Draw the outcome of an event whose distribution is a placeholder.
pub fn placeholder_event_outcome(
    spec: &PdfSpec,
    patient: &PatientProfile,
    stream: &mut RngStream,
) -> Result<Outcome, CareError> {
    spec.sample(patient, stream)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::derive_stream;

    fn patient() -> PatientProfile {
        PatientProfile::neutral(0, true)
    }

    #[test]
    fn degenerate_uniform() {
        let spec = PdfSpec::uniform(0.4, 0.4);
        let mut s = derive_stream(1, "u");
        for _ in 0..100 {
            assert_eq!(
                placeholder_event_outcome(&spec, &patient(), &mut s).unwrap(),
                Outcome::Value(0.4)
            );
        }
    }

    #[test]
    fn uniform_mean() {
        let spec = PdfSpec::uniform(0.0, 1.0);
        let mut s = derive_stream(2, "u");
        let n = 100_000;
        let total: f64 = (0..n)
            .map(|_| match placeholder_event_outcome(&spec, &patient(), &mut s).unwrap() {
                Outcome::Value(v) => v,
                other => panic!("{other:?}"),
            })
            .sum();
        assert!((total / n as f64 - 0.5).abs() < 0.005);
    }

    #[test]
    fn multiplier_clamps_probability() {
        let spec = PdfSpec::bernoulli(0.2).with(AttributeModifier::mul(Predicate::Always, 10.0));
        assert_eq!(spec.probability(&patient()).unwrap(), 1.0);
        let mut s = derive_stream(3, "b");
        for _ in 0..1000 {
            assert_eq!(
                placeholder_event_outcome(&spec, &patient(), &mut s).unwrap(),
                Outcome::Flag(true)
            );
        }
        let neg = PdfSpec::bernoulli(0.2).with(AttributeModifier::add(Predicate::Always, -1.0));
        assert_eq!(neg.probability(&patient()).unwrap(), 0.0);
    }

    #[test]
    fn modifiers_follow_predicates() {
        let spec = PdfSpec::bernoulli(0.1)
            .with(AttributeModifier::mul(Predicate::AgeAtLeast(65.0), 2.0))
            .with(AttributeModifier::add(Predicate::Diabetic, 0.05));
        let mut young = PatientProfile::neutral(0, false);
        young.age = 30.0;
        let mut old = PatientProfile::neutral(1, true);
        old.age = 70.0;
        assert!((spec.probability(&young).unwrap() - 0.1).abs() < 1e-15);
        assert!((spec.probability(&old).unwrap() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn categorical_modifier_targets_category() {
        let spec = PdfSpec::categorical(vec![1.0, 1.0]).with(AttributeModifier {
            when: Predicate::Always,
            mul: Some(0.0),
            add: None,
            category: Some(0),
        });
        let mut s = derive_stream(4, "c");
        for _ in 0..200 {
            assert_eq!(spec.sample(&patient(), &mut s).unwrap(), Outcome::Category(1));
        }
    }

    #[test]
    fn malformed_specs_rejected() {
        let bad = [
            PdfSpec::bernoulli(1.5),
            PdfSpec::uniform(2.0, 1.0),
            PdfSpec::categorical(vec![]),
            PdfSpec::categorical(vec![0.0, 0.0]),
            PdfSpec::bernoulli(0.5).with(AttributeModifier {
                when: Predicate::Always,
                mul: Some(2.0),
                add: Some(1.0),
                category: None,
            }),
            PdfSpec::categorical(vec![1.0]).with(AttributeModifier::mul(Predicate::Always, 2.0)),
        ];
        for spec in bad {
            let err = placeholder_event_outcome(&spec, &patient(), &mut derive_stream(1, "x"));
            assert!(matches!(err, Err(CareError::InvalidSpec { .. })), "{spec:?}");
        }
    }

    #[test]
    fn defaults_cover_every_handler_key() {
        let t = PdfTable::defaults();
        t.validate().unwrap();
        for key in [KEY_PROMPT_SICK, KEY_PROMPT_SYMPTOM, KEY_ATTENDANCE] {
            t.get(key).unwrap();
        }
        for m in Measure::ALL {
            t.get(&order_key(m)).unwrap();
            t.get(&completion_key(m)).unwrap();
            t.get(&delay_key(m)).unwrap();
        }
        assert!(matches!(t.get("nope"), Err(CareError::MissingPdf(k)) if k == "nope"));
    }

    #[test]
    fn toml_representation() {
        let text = r#"
            ["order.hba1c"]
            dist = "bernoulli"
            p = 0.5
            modifiers = [{ when = { age_at_least = 65.0 }, mul = 1.2 }, { when = "diabetic", add = 0.1 }]

            ["placeholder.transport"]
            dist = "categorical"
            weights = [0.7, 0.3]
        "#;
        let t: PdfTable = toml::from_str(text).unwrap();
        t.validate().unwrap();
        let spec = t.get("order.hba1c").unwrap();
        assert_eq!(spec.modifiers.len(), 2);
        assert_eq!(spec.modifiers[0].when, Predicate::AgeAtLeast(65.0));
        let back: PdfTable = toml::from_str(&toml::to_string(&t).unwrap()).unwrap();
        assert_eq!(back, t);
    }
}
