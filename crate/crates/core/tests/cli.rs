use std::path::Path;
use std::process::Command;

use hull_lab::cli::{run_experiment, ExperimentConfig};

fn hull_lab(args: &[&str], out: &Path) -> (i32, String, String) {
    let o = Command::new(env!("CARGO_BIN_EXE_hull-lab"))
        .arg("--out-dir")
        .arg(out)
        .args(args)
        .env("HULL_LAB_THREADS", "1")
        .output()
        .expect("binary runs");
    (
        o.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&o.stdout).into_owned(),
        String::from_utf8_lossy(&o.stderr).into_owned(),
    )
}

fn experiment(name: &str) -> String {
    format!("{}/experiments/{name}", env!("CARGO_MANIFEST_DIR"))
}

#[test]
fn bundled_experiments_meet_expectations() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("experiments");
    let mut paths: Vec<_> = std::fs::read_dir(&dir).unwrap().map(|e| e.unwrap().path()).collect();
    paths.sort();
    assert!(paths.len() >= 8);
    let tmp = tempfile::tempdir().unwrap();
    for p in paths {
        let out = tmp.path().join(p.file_stem().unwrap());
        let (code, stdout, stderr) = hull_lab(&["run", p.to_str().unwrap()], &out);
        assert_eq!(code, 0, "{}:\n{stdout}\n{stderr}", p.display());
        let report: serde_json::Value = serde_json::from_slice(&std::fs::read(out.join("report.json")).unwrap()).unwrap();
        assert!(report["verdicts"].as_array().is_some_and(|v| !v.is_empty()));
        assert!(report["timing"]["wall_seconds"].is_number());
    }
}

#[test]
fn artifacts_are_written() {
    let tmp = tempfile::tempdir().unwrap();
    let (code, ..) = hull_lab(&["run", &experiment("lambda_sweep.toml"), "--sequential"], tmp.path());
    assert_eq!(code, 0);
    for f in ["report.json", "sweep.csv", "det_sign.svg"] {
        assert!(tmp.path().join(f).exists(), "{f}");
    }
    let csv = std::fs::read_to_string(tmp.path().join("sweep.csv")).unwrap();
    assert!(csv.lines().next().unwrap().contains("lambda"));
    assert!(std::fs::read_to_string(tmp.path().join("det_sign.svg")).unwrap().starts_with("<svg"));
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let write = |name: &str, body: &str| {
        let p = tmp.path().join(name);
        std::fs::write(&p, body).unwrap();
        p.to_str().unwrap().to_owned()
    };

    let ok = write("ok.toml", "kind = \"remark1\"\n");
    assert_eq!(hull_lab(&["run", &ok], &tmp.path().join("a")).0, 0);

    // the bump violates the hull property but is labelled as if it held
    let wrong = std::fs::read_to_string(experiment("hull_bump_fails.toml")).unwrap().replace("expect = false", "expect = true");
    let wrong = write("wrong.toml", &wrong);
    assert_eq!(hull_lab(&["run", &wrong], &tmp.path().join("b")).0, 1);

    let bad = write("bad.toml", "kind = \"hull-check\"\n[domain]\nbbox = [0.0, 1.0, 0.0, 1.0]\nnx = 11\nny = 11\n[fields]\nf = \"(x, y *)\"\n");
    let (code, _, stderr) = hull_lab(&["run", &bad], &tmp.path().join("c"));
    assert_eq!(code, 2);
    assert!(stderr.contains(":7:"), "{stderr}");

    let missing = tmp.path().join("nope.toml");
    assert_eq!(hull_lab(&["run", missing.to_str().unwrap()], &tmp.path().join("d")).0, 3);

    // an interior node with h < 0 is an internal precondition failure, not a verdict
    let neg = write(
        "neg.toml",
        "kind = \"ma-solve\"\n[domain]\nbbox = [0.0, 1.0, 0.0, 1.0]\nnx = 11\nny = 11\n[fields]\nh = \"-1\"\nboundary = \"x\"\n",
    );
    assert_eq!(hull_lab(&["run", &neg], &tmp.path().join("e")).0, 3);
}

#[test]
fn suite_subset_and_forced_failure() {
    let tmp = tempfile::tempdir().unwrap();
    let (code, stdout, _) = hull_lab(&["suite", "--only", "1,2,10"], tmp.path());
    assert_eq!(code, 0, "{stdout}");
    assert_eq!(stdout.matches("PASS").count(), 3);
    let (code, stdout, _) = hull_lab(&["suite", "--only", "2", "--tolerance-scale", "0"], tmp.path());
    assert_eq!(code, 1, "{stdout}");
    assert_eq!(hull_lab(&["suite", "--only", "11"], tmp.path()).0, 2);
}

#[test]
fn remark1_command() {
    let tmp = tempfile::tempdir().unwrap();
    let (code, stdout, _) = hull_lab(&["remark1"], tmp.path());
    assert_eq!(code, 0);
    assert_eq!(stdout.matches("PASS").count(), 3);
}

#[test]
fn grid_scale_refines_reports() {
    let tmp = tempfile::tempdir().unwrap();
    let path = experiment("hull_like_square.toml");
    hull_lab(&["run", &path, "--grid-scale", "2"], tmp.path());
    let report: serde_json::Value = serde_json::from_slice(&std::fs::read(tmp.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["grid_scale"], 2);
}

#[test]
fn reports_are_reproducible() {
    for name in ["certificate_bump.toml", "transport_hyperbolic.toml", "hull_disk.toml"] {
        let cfg = ExperimentConfig::parse(&std::fs::read_to_string(experiment(name)).unwrap()).unwrap();
        let a = run_experiment(&cfg, 1).unwrap().report.reproducible_json();
        let b = run_experiment(&cfg, 1).unwrap().report.reproducible_json();
        assert_eq!(a, b, "{name}");
        let again = ExperimentConfig::parse(&cfg.to_toml()).unwrap();
        assert_eq!(again, cfg, "{name}");
    }
}
