use std::path::Path;
use std::process::{Command, Output};

fn fidac(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fidac")).args(args).env("FIDAC_WORKERS", "2").output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn lists_every_experiment() {
    let o = fidac(&["list-experiments"]);
    assert!(o.status.success());
    let s = stdout(&o);
    for name in ["sweep-gain", "sweep-phase", "sweep-bw", "montecarlo", "convergence", "equivalence-check"] {
        assert!(s.lines().any(|l| l.starts_with(name)), "{name} missing from\n{s}");
    }
}

#[test]
fn validate_config_prints_resolved_json() {
    let o = fidac(&["validate-config", "sweep-gain", "--set", "adapt.ie_step=0.25", "--set", "seed=9"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["adapt"]["ie_step"], 0.25);
    assert_eq!(v["seed"], 9);
    assert_eq!(v["experiment"], "sweep-gain");
}

#[test]
fn unknown_key_is_a_usage_error() {
    let o = fidac(&["validate-config", "sweep-gain", "--set", "adapt.no_such_key=1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!o.stderr.is_empty());
}

#[test]
fn config_file_and_rerun_from_resolved_json() {
    let tmp = tempfile::tempdir().unwrap();
    let toml = tmp.path().join("eq.toml");
    std::fs::write(&toml, "experiment = \"equivalence-check\"\n[equivalence]\nspecs = 3\nsamples = 4096\n").unwrap();
    let out = tmp.path().join("res");
    let o = fidac(&["run", "--config", toml.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("PASS equivalence_nmse"));
    let dir = out.join("equivalence-check");
    let first = std::fs::read(dir.join("equivalence.csv")).unwrap();
    let again = tmp.path().join("again");
    let resolved = dir.join("resolved_config.json");
    let o = fidac(&["run", "--config", resolved.to_str().unwrap(), "--out", again.to_str().unwrap()]);
    assert!(o.status.success());
    assert_eq!(first, std::fs::read(again.join("equivalence-check/equivalence.csv")).unwrap());
}

#[test]
fn plotdata_needs_results() {
    let tmp = tempfile::tempdir().unwrap();
    let o = fidac(&["emit-plotdata", "--results", tmp.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

fn write_sweep(root: &Path) {
    let dir = root.join("sweep-gain");
    std::fs::create_dir_all(&dir).unwrap();
    std::fs::write(
        dir.join("sweep-gain.csv"),
        "# experiment=sweep-gain\n\
         value,required_uncompensated_db,required_compensated_db,penalty_uncompensated_db,penalty_compensated_db,floor_uncompensated_db,floor_compensated_db,converged\n\
         0.2,20.1,16.6,3.6,0.1,-40,-41,true\n\
         0.0,16.5,16.5,0.0,0.0,-40,-41,true\n\
         0.1,17.0,16.5,0.5,0.0,-40,-41,true\n",
    )
    .unwrap();
}

#[test]
fn plotdata_is_sorted_and_repeatable() {
    let tmp = tempfile::tempdir().unwrap();
    write_sweep(tmp.path());
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    let root = tmp.path().to_str().unwrap();
    assert!(fidac(&["emit-plotdata", "--results", root, "--out", a.to_str().unwrap()]).status.success());
    assert!(fidac(&["emit-plotdata", "--results", root, "--out", b.to_str().unwrap()]).status.success());
    let fa = std::fs::read_to_string(a.join("penalty_vs_gain.csv")).unwrap();
    assert_eq!(fa, std::fs::read_to_string(b.join("penalty_vs_gain.csv")).unwrap());
    let values: Vec<f64> = fa
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').next().unwrap().parse().unwrap())
        .collect();
    assert_eq!(values, vec![0.0, 0.1, 0.2]);
}
