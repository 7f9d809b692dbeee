//! End-to-end tests of the `rbcom-sim` binary.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rbcom_sim::config::{Experiment, ExperimentConfig};
use rbcom_sim::experiments::run_experiment;

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_rbcom-sim"));
    cmd.env_remove("RBCOM_SEED").env_remove("RBCOM_OUT");
    cmd
}

fn config(dir: &Path, text: &str) -> PathBuf {
    let p = dir.join("c.conf");
    fs::write(&p, text).unwrap();
    p
}

fn run_in(dir: &Path, text: &str, extra: &[&str]) -> Output {
    let cfg = config(dir, text);
    bin()
        .args(["run", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.join("out"))
        .args(extra)
        .output()
        .unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn manifest_value(dir: &Path, key: &str) -> String {
    let m = fs::read_to_string(dir.join("manifest.txt")).unwrap();
    m.lines()
        .find_map(|l| l.strip_prefix(&format!("{key}=")))
        .unwrap_or_else(|| panic!("no {key} in manifest"))
        .to_string()
}

#[test]
fn safety_run_writes_csv_svg_and_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run_in(tmp.path(), "experiment = safety\n", &[]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let dir = tmp.path().join("out");
    assert_eq!(
        fs::read_to_string(dir.join("safety.csv")).unwrap(),
        "power_w,distance_m,break_time_s,energy_j\n1.0,10.0,6.671e-8,6.671e-8\n"
    );
    assert!(fs::read_to_string(dir.join("safety.svg")).unwrap().starts_with("<svg"));
    assert_eq!(manifest_value(&dir, "tool"), "rbcom-sim");
    assert_eq!(manifest_value(&dir, "experiment"), "safety");
    assert_eq!(manifest_value(&dir, "seed"), "1");
    assert_eq!(manifest_value(&dir, "files"), "safety.csv,safety.svg");
    assert_eq!(manifest_value(&dir, "config_sha256").len(), 64);
}

#[test]
fn validate_reports_parse_and_validation_errors() {
    let tmp = tempfile::tempdir().unwrap();
    let check = |text: &str| {
        let cfg = config(tmp.path(), text);
        bin().args(["validate", "--config"]).arg(&cfg).output().unwrap()
    };
    let ok = check("experiment = rates\n");
    assert_eq!(ok.status.code(), Some(0));

    let unknown = check("seed = 1\nfoo = 2\n");
    assert_eq!(unknown.status.code(), Some(3));
    assert!(stderr(&unknown).contains("line 2"), "{}", stderr(&unknown));
    assert!(stderr(&unknown).contains("foo"));

    let bad = check("cavity.alpha = 1.5\n");
    assert_eq!(bad.status.code(), Some(4));
    assert!(stderr(&bad).contains("cavity.alpha"), "{}", stderr(&bad));
}

#[test]
fn simulation_errors_have_distinct_codes_and_leave_nothing_behind() {
    let tmp = tempfile::tempdir().unwrap();
    let below = run_in(tmp.path(), "experiment = steady-state\ncavity.distance_m = 5000\n", &[]);
    assert_eq!(below.status.code(), Some(5), "{}", stderr(&below));
    assert!(stderr(&below).contains("steady-state"));
    assert!(!tmp.path().join("out").exists());

    let short = run_in(tmp.path(), "experiment = multiaccess-plan\nmultiaccess.distances_m = 200, 0.5\n", &[]);
    assert_eq!(short.status.code(), Some(6), "{}", stderr(&short));
    assert!(!tmp.path().join("out").exists());
}

#[test]
fn usage_and_io_errors() {
    let tmp = tempfile::tempdir().unwrap();
    let no_experiment = run_in(tmp.path(), "seed = 3\n", &[]);
    assert_eq!(no_experiment.status.code(), Some(2));
    let no_args = bin().arg("run").output().unwrap();
    assert_eq!(no_args.status.code(), Some(2));

    let missing = bin()
        .args(["run", "--config"])
        .arg(tmp.path().join("missing.conf"))
        .args(["--experiment", "safety", "--out"])
        .arg(tmp.path().join("o"))
        .output()
        .unwrap();
    assert_eq!(missing.status.code(), Some(8));

    // The output path is an existing file, so the directory cannot be made.
    let blocker = tmp.path().join("blocker");
    fs::write(&blocker, "x").unwrap();
    let cfg = config(tmp.path(), "experiment = safety\n");
    let blocked = bin()
        .args(["run", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(blocker.join("sub"))
        .output()
        .unwrap();
    assert_eq!(blocked.status.code(), Some(8));
}

#[test]
fn overrides_follow_flag_env_config_precedence() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = config(tmp.path(), "experiment = safety\nseed = 5\n");
    let dir = tmp.path().join("env-out");
    let seed_of = |extra: &[&str], env_seed: Option<&str>| {
        let mut cmd = bin();
        cmd.args(["run", "--config"]).arg(&cfg).env("RBCOM_OUT", &dir).args(extra);
        if let Some(s) = env_seed {
            cmd.env("RBCOM_SEED", s);
        }
        let o = cmd.output().unwrap();
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        manifest_value(&dir, "seed")
    };
    assert_eq!(seed_of(&[], None), "5");
    assert_eq!(seed_of(&[], Some("6")), "6");
    assert_eq!(seed_of(&["--seed", "7"], Some("6")), "7");

    let o = bin()
        .args(["run", "--config"])
        .arg(&cfg)
        .args(["--experiment", "rates"])
        .env("RBCOM_OUT", &dir)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert!(dir.join("rates.csv").exists());
}

#[test]
fn reruns_are_byte_identical_and_seeds_matter() {
    let tmp = tempfile::tempdir().unwrap();
    let text = "experiment = ber-direct\nber.frames = 40\nber.snr_db = 30, 40\n";
    let mut csvs = Vec::new();
    for (i, seed) in ["9", "9", "10"].into_iter().enumerate() {
        let d = tmp.path().join(format!("r{i}"));
        fs::create_dir(&d).unwrap();
        let o = run_in(&d, text, &["--seed", seed]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        csvs.push(fs::read(d.join("out/ber-direct.csv")).unwrap());
    }
    assert_eq!(csvs[0], csvs[1]);
    assert_ne!(csvs[0], csvs[2]);
}

#[test]
fn readme_documents_every_emitted_header() {
    let readme = fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/../../README.md")).unwrap();
    let config = ExperimentConfig::parse(
        "ber.frames = 2\nber.snr_db = 40\nmobility.speeds_mps = 20\nmobility.angle_step_deg = 90\n\
         rates.distance_stop_m = 3\n",
    )
    .unwrap();
    for e in Experiment::ALL {
        let out = run_experiment(&config, e).unwrap();
        let header = out.csv.lines().next().unwrap();
        assert!(
            readme.lines().any(|l| l == header),
            "README lacks the {e} header `{header}`"
        );
    }
}
