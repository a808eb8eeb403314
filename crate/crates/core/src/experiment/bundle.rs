use super::config::ExperimentConfig;
use super::report::{emit_reports, Reports};
use super::runner::run_all;
use super::ExperimentError;
use crate::analysis::{CqmResult, RunResult};
use crate::intervention::Arm;
use crate::kernel::trace::write_trace;
use crate::measure::{Measure, PerMeasure};
use crate::population::ClusterSpec;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

pub const MANIFEST: &str = "manifest.json";
pub const RUNS_CSV: &str = "runs.csv";
pub const EFFECTS_CSV: &str = "effects.csv";
pub const VALIDATION_JSON: &str = "validation.json";
pub const VALIDATION_CSV: &str = "validation.csv";
pub const PLOTDATA_DIR: &str = "plotdata";
pub const TRACES_DIR: &str = "traces";

/// Everything needed to reproduce a bundle.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub master_seed: u64,
    pub runs: usize,
    /// Resolved configuration. Cluster archetypes are inlined so the manifest
    /// does not depend on any other file.
    pub config: ExperimentConfig,
}

impl Manifest {
    pub fn new(config: &ExperimentConfig, clusters: &[ClusterSpec], runs: usize) -> Self {
        let mut config = config.clone();
        config.cluster_specs = clusters.to_vec();
        config.clusters_csv = None;
        Manifest {
            tool: "clinicsim".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            master_seed: config.master_seed,
            runs,
            config,
        }
    }
}

#[derive(Clone, Debug)]
pub struct OutputBundle {
    pub dir: PathBuf,
    pub manifest: Manifest,
    pub runs: Vec<RunResult>,
    pub reports: Reports,
}

#[derive(Serialize, Deserialize)]
struct RunRow {
    cluster_id: u8,
    arm: Arm,
    trainings_k: u8,
    run_index: u32,
    seed: u64,
    measure: Measure,
    numerator: u32,
    denominator: u32,
    rate: f64,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> ExperimentError + '_ {
    move |e| ExperimentError::Io { path: path.display().to_string(), message: e.to_string() }
}

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> ExperimentError + '_ {
    move |e| ExperimentError::Csv { path: path.display().to_string(), message: e.to_string() }
}

fn write_csv<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> Result<(), ExperimentError> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    for r in rows {
        w.serialize(r).map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

fn write_runs_csv(path: &Path, runs: &[RunResult]) -> Result<(), ExperimentError> {
    write_csv(
        path,
        runs.iter().flat_map(|r| {
            r.cqm.iter().map(move |(m, c)| RunRow {
                cluster_id: r.cluster_id,
                arm: r.arm,
                trainings_k: r.trainings_k,
                run_index: r.run_index,
                seed: r.seed,
                measure: m,
                numerator: c.numerator,
                denominator: c.denominator,
                rate: c.rate,
            })
        }),
    )
}

// (cluster, arm, k, run_index) -> (seed, one slot per measure)
type RunRows = BTreeMap<(u8, Arm, u8, u32), (u64, [Option<CqmResult>; 4])>;

/// Read `runs.csv` back into run results, four rows per run.
pub fn read_runs_csv(path: &Path) -> Result<Vec<RunResult>, ExperimentError> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err(path))?;
    let mut runs = RunRows::new();
    for row in r.deserialize::<RunRow>() {
        let row = row.map_err(csv_err(path))?;
        let entry = runs
            .entry((row.cluster_id, row.arm, row.trainings_k, row.run_index))
            .or_insert((row.seed, [None; 4]));
        entry.1[row.measure.index()] = Some(CqmResult {
            measure: row.measure,
            numerator: row.numerator,
            denominator: row.denominator,
            rate: row.rate,
        });
    }
    runs.into_iter()
        .map(|((cluster_id, arm, trainings_k, run_index), (seed, cqm))| {
            let cqm = cqm.iter().enumerate().map(|(i, c)| {
                c.ok_or_else(|| ExperimentError::Csv {
                    path: path.display().to_string(),
                    message: format!(
                        "run ({cluster_id}, {arm}, {trainings_k}, {run_index}) lacks {}",
                        Measure::ALL[i]
                    ),
                })
            });
            let cqm: Vec<CqmResult> = cqm.collect::<Result<_, _>>()?;
            Ok(RunResult {
                cluster_id,
                arm,
                trainings_k,
                run_index,
                seed,
                cqm: PerMeasure([cqm[0], cqm[1], cqm[2], cqm[3]]),
            })
        })
        .collect()
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), ExperimentError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| ExperimentError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    text.push('\n');
    fs::write(path, text).map_err(io_err(path))
}

/// Write the report files (everything except the manifest, runs and traces).
pub fn write_reports(dir: &Path, reports: &Reports) -> Result<(), ExperimentError> {
    write_csv(&dir.join(EFFECTS_CSV), &reports.effects)?;
    write_json(&dir.join(VALIDATION_JSON), &reports.validation)?;
    write_csv(&dir.join(VALIDATION_CSV), &reports.validation.rows)?;
    let plot_dir = dir.join(PLOTDATA_DIR);
    fs::create_dir_all(&plot_dir).map_err(io_err(&plot_dir))?;
    for m in Measure::ALL {
        let path = plot_dir.join(format!("{m}.csv"));
        let rows: Vec<_> = reports.plot.iter().filter(|r| r.measure == m).collect();
        let mut w = csv::Writer::from_path(&path).map_err(csv_err(&path))?;
        if rows.is_empty() {
            w.write_record(["measure", "k", "mean_pp", "lo", "hi", "pilot_year", "pilot_lo", "pilot_hi"])
                .map_err(csv_err(&path))?;
        }
        for r in rows {
            w.serialize(r).map_err(csv_err(&path))?;
        }
        w.flush().map_err(io_err(&path))?;
    }
    Ok(())
}

fn staging_dir(target: &Path) -> PathBuf {
    let name = target.file_name().map_or("bundle".into(), |n| n.to_string_lossy().into_owned());
    target.with_file_name(format!(".{name}.partial-{}", std::process::id()))
}

/// Move a finished staging directory into place. An existing bundle at the
/// target is replaced; any other non-empty directory is left alone.
fn commit(staging: &Path, target: &Path) -> Result<(), ExperimentError> {
    if target.exists() {
        let is_empty = fs::read_dir(target).map_err(io_err(target))?.next().is_none();
        if target.join(MANIFEST).is_file() || is_empty {
            fs::remove_dir_all(target).map_err(io_err(target))?;
        } else {
            return Err(ExperimentError::OutputExists(target.display().to_string()));
        }
    }
    fs::rename(staging, target).map_err(io_err(target))
}

/// Run the experiment and write its bundle to `config.output_dir`.
///
/// Files are written to a staging directory next to the target and moved into
/// place only once complete; the staging directory is removed on failure.
pub fn run_experiment(config: &ExperimentConfig) -> Result<OutputBundle, ExperimentError> {
    config.validate()?;
    let clusters = config.resolve_clusters()?;
    let target = config.output_dir.clone();
    if target.exists() && !target.join(MANIFEST).is_file() {
        let non_empty = fs::read_dir(&target).map_err(io_err(&target))?.next().is_some();
        if non_empty {
            return Err(ExperimentError::OutputExists(target.display().to_string()));
        }
    }
    if let Some(parent) = target.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(io_err(parent))?;
    }
    let staging = staging_dir(&target);
    let result = (|| {
        let outputs = run_all(config, &clusters)?;
        let runs: Vec<RunResult> = outputs.iter().map(|o| o.result.clone()).collect();
        let reports = emit_reports(&runs, &clusters, config)?;
        let manifest = Manifest::new(config, &clusters, runs.len());

        if staging.exists() {
            fs::remove_dir_all(&staging).map_err(io_err(&staging))?;
        }
        fs::create_dir_all(&staging).map_err(io_err(&staging))?;
        write_json(&staging.join(MANIFEST), &manifest)?;
        write_runs_csv(&staging.join(RUNS_CSV), &runs)?;
        write_reports(&staging, &reports)?;
        let samples: Vec<_> = outputs.iter().filter(|o| o.trace.is_some()).collect();
        if !samples.is_empty() {
            let dir = staging.join(TRACES_DIR);
            fs::create_dir_all(&dir).map_err(io_err(&dir))?;
            for o in samples {
                let r = &o.result;
                let path = dir.join(format!("cluster{}_{}{}_run{}.tsv", r.cluster_id, r.arm, r.trainings_k, r.run_index));
                let mut f = std::io::BufWriter::new(fs::File::create(&path).map_err(io_err(&path))?);
                write_trace(&mut f, o.trace.as_deref().unwrap_or_default()).map_err(io_err(&path))?;
                f.flush().map_err(io_err(&path))?;
            }
        }
        commit(&staging, &target)?;
        Ok(OutputBundle { dir: target.clone(), manifest, runs, reports })
    })();
    if result.is_err() && staging.exists() {
        let _ = fs::remove_dir_all(&staging);
    }
    result
}

pub fn read_manifest(dir: &Path) -> Result<Manifest, ExperimentError> {
    let path = dir.join(MANIFEST);
    let text = fs::read_to_string(&path).map_err(io_err(&path))?;
    serde_json::from_str(&text).map_err(|e| ExperimentError::Io { path: path.display().to_string(), message: e.to_string() })
}

/// Recompute and rewrite the report files of an existing bundle from its runs.
pub fn regenerate_reports(dir: &Path) -> Result<Reports, ExperimentError> {
    let manifest = read_manifest(dir)?;
    let runs = read_runs_csv(&dir.join(RUNS_CSV))?;
    let clusters = manifest.config.resolve_clusters()?;
    let reports = emit_reports(&runs, &clusters, &manifest.config)?;
    write_reports(dir, &reports)?;
    Ok(reports)
}

/// Outcome of re-running a bundle from its manifest.
#[derive(Clone, Debug, PartialEq)]
pub struct Verification {
    /// Files whose recomputed bytes differ from the bundle's.
    pub mismatched: Vec<String>,
    pub checked: Vec<String>,
}

impl Verification {
    pub fn ok(&self) -> bool {
        self.mismatched.is_empty()
    }
}

/// Re-run the experiment recorded in `dir` and compare every output file.
pub fn verify_bundle(dir: &Path, parallelism: Option<usize>) -> Result<Verification, ExperimentError> {
    let manifest = read_manifest(dir)?;
    let mut config = manifest.config.clone();
    if let Some(p) = parallelism {
        config.parallelism = p;
    }
    let scratch = staging_dir(dir).with_extension("verify");
    config.output_dir = scratch.clone();
    if scratch.exists() {
        fs::remove_dir_all(&scratch).map_err(io_err(&scratch))?;
    }
    let result = (|| {
        run_experiment(&config)?;
        let mut files = vec![RUNS_CSV.to_string(), EFFECTS_CSV.into(), VALIDATION_JSON.into(), VALIDATION_CSV.into()];
        files.extend(Measure::ALL.iter().map(|m| format!("{PLOTDATA_DIR}/{m}.csv")));
        let mut mismatched = Vec::new();
        for f in &files {
            let a = fs::read(dir.join(f)).map_err(io_err(&dir.join(f)))?;
            let b = fs::read(scratch.join(f)).map_err(io_err(&scratch.join(f)))?;
            if a != b {
                mismatched.push(f.clone());
            }
        }
        Ok(Verification { mismatched, checked: files })
    })();
    let _ = fs::remove_dir_all(&scratch);
    result
}
