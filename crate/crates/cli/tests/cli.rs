use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn clinicsim(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_clinicsim")).args(args).current_dir(cwd).output().unwrap()
}

fn text(o: &Output) -> String {
    format!("{}{}", String::from_utf8_lossy(&o.stdout), String::from_utf8_lossy(&o.stderr))
}

const SMALL: &str = r#"
master_seed = 3
runs_per_cell = 2
clusters = [2]
trainings = [1]
population_size = 120
warmup_days = 15
output_dir = "out"
"#;

#[test]
fn run_report_validate() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("exp.toml"), SMALL).unwrap();
    let o = clinicsim(&["run", "exp.toml", "--parallelism", "2"], tmp.path());
    assert!(o.status.success(), "{}", text(&o));
    assert!(text(&o).contains("4 runs written"));
    let bundle = tmp.path().join("out");
    assert!(bundle.join("manifest.json").is_file());

    let o = clinicsim(&["report", "out"], tmp.path());
    assert!(o.status.success(), "{}", text(&o));
    assert!(text(&o).contains("eye_exam"));

    let o = clinicsim(&["validate", "out"], tmp.path());
    assert!(o.status.success(), "{}", text(&o));
    assert!(text(&o).contains("reproduced"));

    // Tampering is detected.
    let runs = bundle.join("runs.csv");
    let original = fs::read_to_string(&runs).unwrap();
    let mut lines: Vec<&str> = original.lines().collect();
    lines.pop();
    fs::write(&runs, lines.join("\n") + "\n").unwrap();
    let o = clinicsim(&["validate", "out"], tmp.path());
    assert!(!o.status.success());
    assert!(text(&o).contains("runs.csv"));
}

#[test]
fn flags_override_the_file() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("exp.toml"), SMALL).unwrap();
    let o = clinicsim(&["run", "exp.toml", "--seed", "99", "--output", "seeded"], tmp.path());
    assert!(o.status.success(), "{}", text(&o));
    let manifest = fs::read_to_string(tmp.path().join("seeded/manifest.json")).unwrap();
    assert!(manifest.contains("\"master_seed\": 99"));

    let clusters = clinicsim(&["default-clusters"], tmp.path());
    fs::write(tmp.path().join("clusters.csv"), &clusters.stdout).unwrap();
    let o = clinicsim(&["run", "exp.toml", "--clusters-csv", "clusters.csv", "--output", "csv"], tmp.path());
    assert!(o.status.success(), "{}", text(&o));
}

#[test]
fn config_errors_point_at_the_problem() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("bad.toml"), "master_seed = 1\nruns_per_cel = 2\n").unwrap();
    let o = clinicsim(&["run", "bad.toml"], tmp.path());
    assert!(!o.status.success());
    assert!(text(&o).contains("line 2"), "{}", text(&o));

    fs::write(tmp.path().join("bad.toml"), "trainings = [7]\n").unwrap();
    let o = clinicsim(&["run", "bad.toml"], tmp.path());
    assert!(!o.status.success());
    assert!(text(&o).contains("trainings"), "{}", text(&o));

    let o = clinicsim(&["run", "missing.toml"], tmp.path());
    assert!(!o.status.success());
    assert!(!tmp.path().join("output").exists());
}

#[test]
fn default_config_is_loadable() {
    let tmp = tempfile::tempdir().unwrap();
    let o = clinicsim(&["default-config"], tmp.path());
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("runs_per_cell = 200"));
    fs::write(tmp.path().join("d.toml"), text.replace("runs_per_cell = 200", "runs_per_cell = 0")).unwrap();
    let o = clinicsim(&["run", "d.toml"], tmp.path());
    assert!(!o.status.success());
}
