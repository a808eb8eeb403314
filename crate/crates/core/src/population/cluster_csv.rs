//! Cluster archetypes as CSV, one row per cluster.
//!
//! Columns (all required, any order):
//! `cluster_id, label, fqhc_count, age_mean, age_sd, female_share, race_white,
//! race_black, race_hispanic, race_other, ses_mean, ses_concentration,
//! ins_continuous, ins_intermittent, ins_uninsured, ins_medicaid,
//! diabetes_prevalence, population_served`.
//!
//! `fqhc_count` is the facility count the cluster stands for and becomes the
//! aggregation weight.

use super::cluster::{AttributeParams, ClusterSpec};
use super::PopulationError;
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};
use std::path::Path;

pub const CLUSTER_CSV_COLUMNS: [&str; 18] = [
    "cluster_id",
    "label",
    "fqhc_count",
    "age_mean",
    "age_sd",
    "female_share",
    "race_white",
    "race_black",
    "race_hispanic",
    "race_other",
    "ses_mean",
    "ses_concentration",
    "ins_continuous",
    "ins_intermittent",
    "ins_uninsured",
    "ins_medicaid",
    "diabetes_prevalence",
    "population_served",
];

#[derive(Debug, thiserror::Error)]
pub enum ClusterCsvError {
    #[error("cannot read cluster file: {0}")]
    Io(#[from] std::io::Error),
    #[error("cluster file is missing required column `{column}`")]
    Schema { column: String },
    #[error("cluster file line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error("cluster file has no rows")]
    Empty,
    #[error("duplicate cluster_id {0}")]
    DuplicateCluster(u8),
    #[error(transparent)]
    Invalid(#[from] PopulationError),
}

#[derive(Serialize, Deserialize)]
struct Row {
    cluster_id: u8,
    label: String,
    fqhc_count: u32,
    age_mean: f64,
    age_sd: f64,
    female_share: f64,
    race_white: f64,
    race_black: f64,
    race_hispanic: f64,
    race_other: f64,
    ses_mean: f64,
    ses_concentration: f64,
    ins_continuous: f64,
    ins_intermittent: f64,
    ins_uninsured: f64,
    ins_medicaid: f64,
    diabetes_prevalence: f64,
    population_served: u32,
}

impl From<Row> for ClusterSpec {
    fn from(r: Row) -> Self {
        ClusterSpec {
            cluster_id: r.cluster_id,
            label: r.label,
            fqhc_count: r.fqhc_count,
            attribute_params: AttributeParams {
                age_mean: r.age_mean,
                age_sd: r.age_sd,
                female_share: r.female_share,
                race_weights: [r.race_white, r.race_black, r.race_hispanic, r.race_other],
                ses_mean: r.ses_mean,
                ses_concentration: r.ses_concentration,
                insurance_weights: [
                    r.ins_continuous,
                    r.ins_intermittent,
                    r.ins_uninsured,
                    r.ins_medicaid,
                ],
                diabetes_prevalence: r.diabetes_prevalence,
                population_served: r.population_served,
            },
        }
    }
}

impl From<&ClusterSpec> for Row {
    fn from(s: &ClusterSpec) -> Self {
        let p = &s.attribute_params;
        Row {
            cluster_id: s.cluster_id,
            label: s.label.clone(),
            fqhc_count: s.fqhc_count,
            age_mean: p.age_mean,
            age_sd: p.age_sd,
            female_share: p.female_share,
            race_white: p.race_weights[0],
            race_black: p.race_weights[1],
            race_hispanic: p.race_weights[2],
            race_other: p.race_weights[3],
            ses_mean: p.ses_mean,
            ses_concentration: p.ses_concentration,
            ins_continuous: p.insurance_weights[0],
            ins_intermittent: p.insurance_weights[1],
            ins_uninsured: p.insurance_weights[2],
            ins_medicaid: p.insurance_weights[3],
            diabetes_prevalence: p.diabetes_prevalence,
            population_served: p.population_served,
        }
    }
}

pub fn read_cluster_csv<R: Read>(input: R) -> Result<Vec<ClusterSpec>, ClusterCsvError> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let headers = reader
        .headers()
        .map_err(|e| ClusterCsvError::Parse {
            line: 1,
            message: e.to_string(),
        })?
        .clone();
    if let Some(missing) = CLUSTER_CSV_COLUMNS
        .iter()
        .find(|c| !headers.iter().any(|h| h == **c))
    {
        return Err(ClusterCsvError::Schema {
            column: (*missing).to_owned(),
        });
    }
    let mut specs: Vec<ClusterSpec> = Vec::new();
    for row in reader.deserialize::<Row>() {
        let row = row.map_err(|e| ClusterCsvError::Parse {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let spec = ClusterSpec::from(row);
        spec.validate()?;
        if specs.iter().any(|s| s.cluster_id == spec.cluster_id) {
            return Err(ClusterCsvError::DuplicateCluster(spec.cluster_id));
        }
        specs.push(spec);
    }
    if specs.is_empty() {
        return Err(ClusterCsvError::Empty);
    }
    Ok(specs)
}

/// Load cluster archetypes from a CSV file; they replace the built-ins.
pub fn load_cluster_csv(path: &Path) -> Result<Vec<ClusterSpec>, ClusterCsvError> {
    read_cluster_csv(std::fs::File::open(path)?)
}

pub fn write_cluster_csv<W: Write>(out: W, specs: &[ClusterSpec]) -> Result<(), ClusterCsvError> {
    let mut writer = csv::Writer::from_writer(out);
    for spec in specs {
        writer.serialize(Row::from(spec)).map_err(|e| ClusterCsvError::Parse {
            line: 0,
            message: e.to_string(),
        })?;
    }
    writer.flush()?;
    Ok(())
}
