use crate::care::{CareConfig, PdfTable};
use crate::intervention::{Arm, ScenarioConfig, TrainingEffectParams, MAX_TRAININGS};
use crate::population::{builtin_cluster_specs, load_cluster_csv, ClusterSpec, FacilityConfig};
use serde::de::{self, Deserializer};
use serde::ser::Serializer;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("field `{field}`: {message}")]
    Field { field: String, message: String },
}

fn field(name: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Field { field: name.to_string(), message: message.into() }
}

/// Which clusters to simulate: every available cluster or a list of ids.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub enum ClusterSelection {
    #[default]
    All,
    Ids(Vec<u8>),
}

impl Serialize for ClusterSelection {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            ClusterSelection::All => s.serialize_str("all"),
            ClusterSelection::Ids(ids) => ids.serialize(s),
        }
    }
}

impl<'de> Deserialize<'de> for ClusterSelection {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Word(String),
            Ids(Vec<u8>),
        }
        match Raw::deserialize(d)? {
            Raw::Word(w) if w == "all" => Ok(ClusterSelection::All),
            Raw::Word(w) => Err(de::Error::custom(format!("expected \"all\" or a list of cluster ids, got \"{w}\""))),
            Raw::Ids(ids) => Ok(ClusterSelection::Ids(ids)),
        }
    }
}

/// A full experiment: clusters, scenarios, replicates and model settings.
///
/// Every experiment runs the baseline arm plus one pilot arm per entry of
/// `trainings`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub master_seed: u64,
    pub runs_per_cell: u32,
    pub clusters: ClusterSelection,
    pub trainings: Vec<u8>,
    pub paired: bool,
    /// Worker threads; 0 uses every available core.
    pub parallelism: usize,
    pub output_dir: PathBuf,
    /// Cluster archetypes from CSV instead of the built-in ones.
    pub clusters_csv: Option<PathBuf>,
    /// Inline cluster archetypes; take precedence over `clusters_csv`.
    pub cluster_specs: Vec<ClusterSpec>,
    pub population_size: usize,
    pub warmup_days: u64,
    pub horizon_days: u64,
    /// Write event traces for runs with index below this number.
    pub trace_samples: u32,
    pub facility: FacilityConfig,
    pub care: CareConfig,
    pub training: TrainingEffectParams,
    /// Distribution overrides merged onto the defaults.
    pub pdf: PdfTable,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let s = ScenarioConfig::default();
        ExperimentConfig {
            master_seed: 20170701,
            runs_per_cell: 200,
            clusters: ClusterSelection::All,
            trainings: (1..=MAX_TRAININGS).collect(),
            paired: true,
            parallelism: 0,
            output_dir: PathBuf::from("output"),
            clusters_csv: None,
            cluster_specs: Vec::new(),
            population_size: s.population_size,
            warmup_days: s.warmup_days,
            horizon_days: s.horizon_days,
            trace_samples: 0,
            facility: s.facility,
            care: s.care,
            training: s.training,
            pdf: PdfTable(Default::default()),
        }
    }
}

pub const QUICK_RUNS_PER_CELL: u32 = 25;
pub const QUICK_POPULATION: usize = 500;

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.len() - before.rfind('\n').map_or(0, |i| i + 1) + 1;
    (line, column)
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let config: ExperimentConfig = toml::from_str(text).map_err(|e| {
            let (line, column) = e.span().map_or((0, 0), |s| line_col(text, s.start));
            ConfigError::Parse { line, column, message: e.message().to_string() }
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml_string(&self) -> Result<String, ConfigError> {
        toml::to_string(self).map_err(|e| field("config", e.to_string()))
    }

    /// Read a TOML experiment file, or the `manifest.json` of an earlier bundle.
    /// Relative paths inside the file are resolved against its directory.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::Io { path: path.display().to_string(), message: e.to_string() })?;
        let mut config = if path.extension().is_some_and(|e| e == "json") {
            let manifest: super::Manifest = serde_json::from_str(&text).map_err(|e| ConfigError::Parse {
                line: e.line(),
                column: e.column(),
                message: e.to_string(),
            })?;
            manifest.config.validate()?;
            manifest.config
        } else {
            Self::from_toml_str(&text)?
        };
        let base = path.parent().unwrap_or(Path::new("."));
        if let Some(csv) = &config.clusters_csv {
            if csv.is_relative() {
                config.clusters_csv = Some(base.join(csv));
            }
        }
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.runs_per_cell == 0 {
            return Err(field("runs_per_cell", "must be at least 1"));
        }
        if self.runs_per_cell < 2 && !self.trainings.is_empty() {
            return Err(field("runs_per_cell", "effects need at least 2 runs per cell"));
        }
        let mut ks = self.trainings.clone();
        ks.sort();
        ks.dedup();
        if ks.len() != self.trainings.len() {
            return Err(field("trainings", "duplicate training counts"));
        }
        if let Some(k) = ks.iter().find(|k| !(1..=MAX_TRAININGS).contains(*k)) {
            return Err(field("trainings", format!("{k} is outside 1..={MAX_TRAININGS}")));
        }
        if let ClusterSelection::Ids(ids) = &self.clusters {
            if ids.is_empty() {
                return Err(field("clusters", "empty cluster list"));
            }
        }
        if self.population_size == 0 {
            return Err(field("population_size", "must be positive"));
        }
        if self.horizon_days == 0 {
            return Err(field("horizon_days", "must be positive"));
        }
        self.training.validate().map_err(|e| field("training", e.to_string()))?;
        self.facility.validate().map_err(|e| field("facility", e))?;
        self.care.validate().map_err(|e| field("care", e))?;
        let table = PdfTable::defaults().merged(&self.pdf);
        table.validate().map_err(|e| field("pdf", e.to_string()))?;
        for key in &self.care.placeholder_events {
            table.get(key).map_err(|e| field("care.placeholder_events", e.to_string()))?;
        }
        for spec in &self.cluster_specs {
            spec.validate().map_err(|e| field("cluster_specs", e.to_string()))?;
        }
        Ok(())
    }

    /// Desk-scale profile: fewer runs and smaller populations.
    pub fn quick(mut self) -> Self {
        self.runs_per_cell = QUICK_RUNS_PER_CELL;
        self.population_size = QUICK_POPULATION;
        self
    }

    /// Training counts in ascending order.
    pub fn training_levels(&self) -> Vec<u8> {
        let mut ks = self.trainings.clone();
        ks.sort();
        ks
    }

    /// Scenario arms in run order: baseline, then pilot arms by training count.
    pub fn arms(&self) -> Vec<(Arm, u8)> {
        std::iter::once((Arm::Baseline, 0))
            .chain(self.training_levels().into_iter().map(|k| (Arm::Pilot, k)))
            .collect()
    }

    pub fn scenario(&self, arm: Arm, trainings_k: u8) -> ScenarioConfig {
        ScenarioConfig {
            arm,
            trainings_k,
            hours_variant: self.facility.hours_variant,
            population_size: self.population_size,
            warmup_days: self.warmup_days,
            horizon_days: self.horizon_days,
            master_seed: self.master_seed,
            paired: self.paired,
            facility: self.facility.clone(),
            care: self.care.clone(),
            training: self.training.clone(),
            pdf_overrides: self.pdf.clone(),
        }
    }

    /// The cluster archetypes selected by this configuration, in id order.
    pub fn resolve_clusters(&self) -> Result<Vec<ClusterSpec>, ConfigError> {
        let mut all = if !self.cluster_specs.is_empty() {
            self.cluster_specs.clone()
        } else if let Some(path) = &self.clusters_csv {
            load_cluster_csv(path).map_err(|e| field("clusters_csv", format!("{}: {e}", path.display())))?
        } else {
            builtin_cluster_specs()
        };
        all.sort_by_key(|c| c.cluster_id);
        if all.windows(2).any(|w| w[0].cluster_id == w[1].cluster_id) {
            return Err(field("cluster_specs", "duplicate cluster ids"));
        }
        match &self.clusters {
            ClusterSelection::All => Ok(all),
            ClusterSelection::Ids(ids) => {
                if let Some(missing) = ids.iter().find(|id| !all.iter().any(|c| c.cluster_id == **id)) {
                    return Err(field("clusters", format!("unknown cluster {missing}")));
                }
                Ok(all.into_iter().filter(|c| ids.contains(&c.cluster_id)).collect())
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::care::PdfSpec;

    #[test]
    fn defaults_match_the_full_design() {
        let c = ExperimentConfig::default();
        c.validate().unwrap();
        assert_eq!(c.runs_per_cell, 200);
        assert_eq!(c.arms().len(), 6);
        assert_eq!(c.resolve_clusters().unwrap().len(), 4);
    }

    #[test]
    fn parses_sections_and_selection() {
        let text = r#"
master_seed = 9
runs_per_cell = 3
clusters = [1, 3]
trainings = [2, 1]

[care]
acceptance_window_days = 20

[pdf."order.ldl"]
dist = "bernoulli"
p = 0.4
"#;
        let c = ExperimentConfig::from_toml_str(text).unwrap();
        assert_eq!(c.clusters, ClusterSelection::Ids(vec![1, 3]));
        assert_eq!(c.training_levels(), vec![1, 2]);
        assert_eq!(c.care.acceptance_window_days, 20);
        assert_eq!(c.pdf.get("order.ldl").unwrap(), &PdfSpec::bernoulli(0.4));
        let ids: Vec<u8> = c.resolve_clusters().unwrap().iter().map(|c| c.cluster_id).collect();
        assert_eq!(ids, vec![1, 3]);
        let all = ExperimentConfig::from_toml_str("clusters = \"all\"").unwrap();
        assert_eq!(all.clusters, ClusterSelection::All);
    }

    #[test]
    fn parse_errors_carry_positions() {
        let err = ExperimentConfig::from_toml_str("master_seed = 1\nrun_per_cell = 4\n").unwrap_err();
        match err {
            ConfigError::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("{other}"),
        }
        let err = ExperimentConfig::from_toml_str("clusters = \"some\"").unwrap_err();
        assert!(matches!(err, ConfigError::Parse { line: 1, .. }));
    }

    #[test]
    fn field_errors_name_the_field() {
        let err = ExperimentConfig::from_toml_str("trainings = [0]").unwrap_err();
        assert!(matches!(err, ConfigError::Field { ref field, .. } if field == "trainings"));
        let err = ExperimentConfig::from_toml_str("runs_per_cell = 0").unwrap_err();
        assert!(matches!(err, ConfigError::Field { ref field, .. } if field == "runs_per_cell"));
        let err = ExperimentConfig::from_toml_str("clusters = [9]").unwrap().resolve_clusters().unwrap_err();
        assert!(matches!(err, ConfigError::Field { ref field, .. } if field == "clusters"));
    }

    #[test]
    fn toml_round_trip() {
        let c = ExperimentConfig::default().quick();
        let text = toml::to_string(&c).unwrap();
        assert_eq!(ExperimentConfig::from_toml_str(&text).unwrap(), c);
    }
}
