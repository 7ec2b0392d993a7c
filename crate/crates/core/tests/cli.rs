use std::path::Path;
use std::process::{Command, Output};

use microlocal::cli::SubactionOutput;
use microlocal::microsupport::MapSummary;
use microlocal::pipeline::{ExperimentReport, ExperimentSpec, Manifest};

fn mlc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mlc")).args(args).env_remove("MLC_THREADS").output().expect("spawn mlc")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn read(p: &Path) -> String {
    std::fs::read_to_string(p).unwrap_or_else(|e| panic!("{}: {e}", p.display()))
}

#[test]
fn evolve_writes_samples() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("e");
    let o = mlc(&["evolve", "--samples", "64", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = read(&out.join("state.csv"));
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("z,re,im,modulus"));
    assert_eq!(lines.count(), 64);
    let v: serde_json::Value = serde_json::from_str(&read(&out.join("evolve.json"))).unwrap();
    assert!(v["norm"].as_f64().unwrap() > 0.0);
}

#[test]
fn scan_writes_map_summary_and_heatmap() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s");
    let o = mlc(&["scan", "--grid", "32x33", "--ladder", "0.01,0.5,5", "--threads", "2", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let summary: MapSummary = serde_json::from_str(&read(&out.join("summary.json"))).unwrap();
    assert!(!summary.peaks.is_empty());
    assert_eq!(summary.grid.n_y, 32);
    let csv = read(&out.join("map.csv"));
    assert!(csv.starts_with("hbar,y,eta,magnitude\n"));
    assert_eq!(csv.lines().count(), 1 + 6 * 32 * 33);
    let pgm = std::fs::read(out.join("heatmap.pgm")).unwrap();
    assert!(pgm.starts_with(b"P5\n32 33\n255\n"));
}

#[test]
fn subaction_with_zero_potential_is_zero() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("a0.json");
    std::fs::write(&cfg, r#"{"skew":{"map":{"kind":"doubling"},"lambda":0.5,"A":{"trig":[]}},"m":128}"#).unwrap();
    let out = dir.path().join("sa");
    let o = mlc(&["subaction", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = read(&out.join("b.csv"));
    assert_eq!(csv.lines().count(), 129);
    for line in csv.lines().skip(1) {
        let b: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
        assert_eq!(b, 0.0);
    }
    let text = read(&out.join("subaction.json"));
    let v: SubactionOutput = serde_json::from_str(&text).unwrap();
    assert_eq!(v.solution.bellman_residual, 0.0);
    assert_eq!(serde_json::to_string_pretty(&v).unwrap(), text);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x");
    let out = out.to_str().unwrap();

    // non-convergence names the tolerance
    let o = mlc(&["subaction", "--max-iter", "2", "--out", out]);
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8_lossy(&o.stderr).contains("tol"));

    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"alpah":0.3}"#).unwrap();
    assert_eq!(code(&mlc(&["cohomology", "--config", bad.to_str().unwrap(), "--out", out])), 2);
    assert_eq!(code(&mlc(&["cohomology", "--config", "/nonexistent/cfg.json", "--out", out])), 2);
    let resonant = dir.path().join("res.json");
    std::fs::write(&resonant, r#"{"tau":[[4,0.0,1.0]],"alpha":0.25}"#).unwrap();
    assert_eq!(code(&mlc(&["cohomology", "--config", resonant.to_str().unwrap(), "--out", out])), 3);
    assert_eq!(code(&mlc(&["scan", "--threads", "0", "--out", out])), 2);
    assert_eq!(code(&mlc(&["scan", "--grid", "1x4", "--out", out])), 2);
    assert_eq!(code(&mlc(&["scan", "--ladder", "0.01,0.5,2", "--out", out])), 2);
    assert_eq!(code(&mlc(&["experiment", "--out", out])), 2);
    assert_eq!(code(&mlc(&["frobnicate"])), 2);

    let o = Command::new(env!("CARGO_BIN_EXE_mlc"))
        .args(["cohomology", "--out", out])
        .env("MLC_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(code(&o), 2);

    // outputs that cannot be created
    let file = dir.path().join("plain");
    std::fs::write(&file, "x").unwrap();
    assert_eq!(code(&mlc(&["cohomology", "--out", file.join("sub").to_str().unwrap()])), 2);
}

#[test]
fn experiment_run_directory() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("t1.json");
    std::fs::write(
        &cfg,
        r#"{"scenario":"theorem1","name":"t1 small","grid":{"n_y":32,"n_eta":65,"eta_min":-4,"eta_max":4},
            "ladder":{"hbar0":0.01,"ratio":0.5,"j_max":5}}"#,
    )
    .unwrap();
    let o = mlc(&["experiment", "--config", cfg.to_str().unwrap(), "--seed", "11", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let run = std::fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().path())
        .find(|p| p.is_dir())
        .expect("run directory");
    let name = run.file_name().unwrap().to_str().unwrap();
    assert!(name.starts_with("t1_small-"), "{name}");

    let manifest: Manifest = serde_json::from_str(&read(&run.join("manifest.json"))).unwrap();
    let spec: ExperimentSpec = serde_json::from_str(&read(&run.join("spec.json"))).unwrap();
    assert_eq!(spec.seed, 11);
    assert_eq!(manifest.spec_hash, spec.hash());
    for f in &manifest.files {
        assert!(run.join(f).exists(), "{f}");
    }
    let text = read(&run.join("report.json"));
    let report: ExperimentReport = serde_json::from_str(&text).unwrap();
    assert_eq!(report.spec_hash, manifest.spec_hash);
    assert_eq!(serde_json::to_string_pretty(&report).unwrap(), text);
}

#[test]
fn oracle_subcommand_filters() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let o = mlc(&["oracle", "--filter", "cohomology.", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = read(&out.join("oracle.csv"));
    assert_eq!(csv.lines().count(), 1 + 4);
    assert!(csv.lines().skip(1).all(|l| l.starts_with("cohomology.") && l.ends_with(",true")));
}
