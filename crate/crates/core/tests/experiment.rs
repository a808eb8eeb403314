use clinicsim_core::analysis::RunResult;
use clinicsim_core::experiment::{
    read_runs_csv, regenerate_reports, run_experiment, verify_bundle, ClusterSelection, ExperimentConfig,
    ExperimentError, EFFECTS_CSV, MANIFEST, NATIONAL, RUNS_CSV, VALIDATION_CSV, VALIDATION_JSON,
};
use clinicsim_core::population::{builtin_cluster_specs, write_cluster_csv};
use std::fs;
use std::path::Path;

fn small(dir: &Path) -> ExperimentConfig {
    ExperimentConfig {
        master_seed: 11,
        runs_per_cell: 3,
        clusters: ClusterSelection::Ids(vec![1, 3]),
        trainings: vec![1, 2],
        parallelism: 2,
        population_size: 150,
        warmup_days: 20,
        trace_samples: 1,
        output_dir: dir.join("bundle"),
        ..ExperimentConfig::default()
    }
}

fn leftovers(dir: &Path) -> Vec<String> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .filter(|n| n.contains("partial"))
        .collect()
}

#[test]
fn single_baseline_run() {
    let tmp = tempfile::tempdir().unwrap();
    let config = ExperimentConfig {
        runs_per_cell: 1,
        clusters: ClusterSelection::Ids(vec![1]),
        trainings: vec![],
        population_size: 100,
        output_dir: tmp.path().join("one"),
        ..ExperimentConfig::default()
    };
    let bundle = run_experiment(&config).unwrap();
    assert_eq!(bundle.runs.len(), 1);
    let runs = fs::read_to_string(bundle.dir.join(RUNS_CSV)).unwrap();
    assert_eq!(runs.lines().count(), 1 + 4);
    assert!(bundle.reports.validation.rows.is_empty());
}

#[test]
fn bundle_contents_and_round_trips() {
    let tmp = tempfile::tempdir().unwrap();
    let bundle = run_experiment(&small(tmp.path())).unwrap();
    assert_eq!(bundle.runs.len(), 2 * 3 * 3);
    for f in [MANIFEST, RUNS_CSV, EFFECTS_CSV, VALIDATION_JSON, VALIDATION_CSV] {
        assert!(bundle.dir.join(f).is_file(), "{f}");
    }
    for m in ["hba1c", "ldl", "eye_exam", "nephropathy"] {
        let text = fs::read_to_string(bundle.dir.join("plotdata").join(format!("{m}.csv"))).unwrap();
        assert!(text.starts_with("measure,k,mean_pp,lo,hi,pilot_year,pilot_lo,pilot_hi\n"));
        assert_eq!(text.lines().count(), 1 + 2 * 3);
    }
    let traces = fs::read_dir(bundle.dir.join("traces")).unwrap().count();
    assert_eq!(traces, 2 * 3);
    assert_eq!(bundle.reports.validation.rows.len(), 4 * 3 * 2);
    assert!(bundle.reports.effects.iter().any(|r| r.scope == NATIONAL));

    let runs: Vec<RunResult> = read_runs_csv(&bundle.dir.join(RUNS_CSV)).unwrap();
    assert_eq!(runs, bundle.runs);
    for r in &runs {
        for (_, c) in r.cqm.iter() {
            assert!(c.numerator <= c.denominator);
        }
    }

    let before: Vec<Vec<u8>> =
        [EFFECTS_CSV, VALIDATION_JSON, VALIDATION_CSV].iter().map(|f| fs::read(bundle.dir.join(f)).unwrap()).collect();
    regenerate_reports(&bundle.dir).unwrap();
    let after: Vec<Vec<u8>> =
        [EFFECTS_CSV, VALIDATION_JSON, VALIDATION_CSV].iter().map(|f| fs::read(bundle.dir.join(f)).unwrap()).collect();
    assert_eq!(before, after);

    let v = verify_bundle(&bundle.dir, Some(1)).unwrap();
    assert!(v.ok(), "{:?}", v.mismatched);
    assert!(leftovers(tmp.path()).is_empty());
}

#[test]
fn manifest_reproduces_the_bundle() {
    let tmp = tempfile::tempdir().unwrap();
    let first = run_experiment(&small(tmp.path())).unwrap();
    let mut again = ExperimentConfig::load(&first.dir.join(MANIFEST)).unwrap();
    again.output_dir = tmp.path().join("again");
    again.parallelism = 1;
    let second = run_experiment(&again).unwrap();
    for f in [RUNS_CSV, VALIDATION_JSON] {
        assert_eq!(fs::read(first.dir.join(f)).unwrap(), fs::read(second.dir.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn failed_run_leaves_nothing_behind() {
    let tmp = tempfile::tempdir().unwrap();
    let mut config = small(tmp.path());
    config.clusters_csv = Some(tmp.path().join("missing.csv"));
    assert!(matches!(run_experiment(&config), Err(ExperimentError::Config(_))));
    assert!(!config.output_dir.exists());

    // An invalid distribution is only detected once runs start.
    let mut config = small(tmp.path());
    config.care.placeholder_events = vec!["event.x".into()];
    assert!(run_experiment(&config).is_err());
    assert!(!config.output_dir.exists());
    assert!(leftovers(tmp.path()).is_empty());
}

#[test]
fn refuses_to_overwrite_foreign_directories() {
    let tmp = tempfile::tempdir().unwrap();
    let config = small(tmp.path());
    fs::create_dir_all(&config.output_dir).unwrap();
    fs::write(config.output_dir.join("notes.txt"), "keep me").unwrap();
    assert!(matches!(run_experiment(&config), Err(ExperimentError::OutputExists(_))));
    assert_eq!(fs::read_to_string(config.output_dir.join("notes.txt")).unwrap(), "keep me");
}

#[test]
fn replaces_an_existing_bundle() {
    let tmp = tempfile::tempdir().unwrap();
    let mut config = small(tmp.path());
    run_experiment(&config).unwrap();
    config.runs_per_cell = 2;
    let bundle = run_experiment(&config).unwrap();
    assert_eq!(read_runs_csv(&bundle.dir.join(RUNS_CSV)).unwrap().len(), 2 * 3 * 2);
}

#[test]
fn five_cluster_csv_generalizes_weights() {
    let tmp = tempfile::tempdir().unwrap();
    let mut specs = builtin_cluster_specs();
    let mut extra = specs[2].clone();
    extra.cluster_id = 5;
    extra.label = "extra".into();
    extra.fqhc_count = 40;
    specs.push(extra);
    let path = tmp.path().join("five.csv");
    write_cluster_csv(fs::File::create(&path).unwrap(), &specs).unwrap();
    let config = ExperimentConfig {
        runs_per_cell: 2,
        trainings: vec![1],
        population_size: 80,
        warmup_days: 10,
        clusters_csv: Some(path),
        output_dir: tmp.path().join("five"),
        ..ExperimentConfig::default()
    };
    let bundle = run_experiment(&config).unwrap();
    assert_eq!(bundle.manifest.config.cluster_specs.len(), 5);
    let scopes: std::collections::BTreeSet<&str> = bundle.reports.effects.iter().map(|r| r.scope.as_str()).collect();
    assert_eq!(scopes.len(), 6);
    let table = &bundle.reports.validation.anova[0];
    assert_eq!(table.coefficients.iter().filter(|c| c.term.starts_with("cluster[")).count(), 4);
}
