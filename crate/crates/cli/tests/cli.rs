use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn tomograd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tomograd"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn write_json(dir: &Path, name: &str, value: serde_json::Value) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, serde_json::to_string_pretty(&value).unwrap()).unwrap();
    p
}

fn parallel_geometry(dir: &Path) -> PathBuf {
    write_json(
        dir,
        "par.json",
        serde_json::json!({
            "type": "parallel2d",
            "volume_shape": [64, 64],
            "volume_spacing": 1.0,
            "detector_shape": [92],
            "detector_spacing": 1.0,
            "n_projections": 90,
            "angular_range_deg": 180
        }),
    )
}

fn cone_geometry(dir: &Path, range_deg: f64) -> PathBuf {
    write_json(
        dir,
        "cone.json",
        serde_json::json!({
            "type": "cone3d",
            "volume_shape": [16, 16, 16],
            "volume_spacing": 2.0,
            "detector_shape": [24, 24],
            "detector_spacing": 2.5,
            "n_projections": 40,
            "angular_range_deg": range_deg,
            "sid": 300.0,
            "sdd": 500.0
        }),
    )
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn phantom_project_reconstruct_reports_rmse() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let geo = parallel_geometry(d);
    let (v, sino, rec) = (d.join("v"), d.join("s"), d.join("r"));
    let o = tomograd(&["phantom", "--type", "shepp-logan-2d", "--size", "64", "--out", s(&v)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let o = tomograd(&["project", "--geometry", s(&geo), "--input", s(&v), "--out", s(&sino)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let o = tomograd(&[
        "reconstruct", "fbp", "--geometry", s(&geo), "--input", s(&sino), "--out", s(&rec), "--reference", s(&v),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    let line = out.lines().find(|l| l.starts_with("rmse:")).expect("rmse reported");
    let value: f64 = line["rmse:".len()..].trim().parse().unwrap();
    assert!(value < 0.1, "{value}");

    // every written image can be read back by the CLI
    for input in [&v, &rec] {
        let o = tomograd(&["profile", "--input", s(input), "--out", s(&d.join("p.csv"))]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        let o = tomograd(&["export-pgm", "--input", s(input), "--window", "0", "0.4", "--out", s(&d.join("x.pgm"))]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    }
    let profile = fs::read_to_string(d.join("p.csv")).unwrap();
    assert!(profile.starts_with("position_mm,value\n"));
    assert_eq!(profile.lines().count(), 65);
    let pgm = fs::read(d.join("x.pgm")).unwrap();
    assert!(pgm.starts_with(b"P5\n64 64\n255\n"));
}

#[test]
fn missing_geometry_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = tomograd(&["project", "--input", "v", "--out", s(&dir.path().join("s"))]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("--geometry"));
    assert!(stderr(&o).to_lowercase().contains("usage"));
}

#[test]
fn unknown_subcommand_is_a_usage_error() {
    let o = tomograd(&["frobnicate"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("Usage"));
}

#[test]
fn half_scan_fdk_with_parker_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let geo = cone_geometry(d, 180.0);
    let v = d.join("v");
    let sino = d.join("s");
    assert!(tomograd(&["phantom", "--type", "shepp-logan-3d", "--geometry", s(&geo), "--out", s(&v)]).status.success());
    assert!(tomograd(&["project", "--geometry", s(&geo), "--input", s(&v), "--out", s(&sino)]).status.success());
    let o = tomograd(&["reconstruct", "fdk", "--geometry", s(&geo), "--input", s(&sino), "--out", s(&d.join("r"))]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("short-scan"), "{}", stderr(&o));
    let o = tomograd(&[
        "reconstruct", "fdk", "--no-parker", "--geometry", s(&geo), "--input", s(&sino), "--out", s(&d.join("r")),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
}

#[test]
fn corrupt_input_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let v = d.join("v");
    assert!(tomograd(&["phantom", "--type", "disk-2d", "--size", "8", "--out", s(&v)]).status.success());
    let raw = d.join("v.raw");
    let bytes = fs::read(&raw).unwrap();
    fs::write(&raw, &bytes[..bytes.len() - 4]).unwrap();
    let o = tomograd(&["export-pgm", "--input", s(&v), "--out", s(&d.join("v.pgm"))]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("length"));
}

fn files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(p) = stack.pop() {
        for e in fs::read_dir(&p).unwrap() {
            let path = e.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(dir).unwrap().to_string_lossy().into_owned();
                out.push((rel, fs::read(&path).unwrap()));
            }
        }
    }
    out.sort();
    out
}

/// Runs a seeded batch of commands into `dir`.
fn batch(dir: &Path, threads: &str) {
    let geo = parallel_geometry(dir);
    let cone = cone_geometry(dir, 220.0);
    let exp = write_json(
        dir,
        "exp.json",
        serde_json::json!({
            "geometry": "par.json",
            "phantom": "shepp-logan-2d",
            "noise": 0.02,
            "learning_rate": 2e-4,
            "iterations": 4,
            "lambda": 0.3,
            "output_dir": "out_exp",
            "seed": 5
        }),
    );
    let fdk = write_json(
        dir,
        "fdk.json",
        serde_json::json!({
            "geometry": "cone.json",
            "phantom": "shepp-logan-3d",
            "output_dir": "out_fdk"
        }),
    );
    let run = |args: &[&str]| {
        let mut all = vec!["--threads", threads];
        all.extend_from_slice(args);
        let o = tomograd(&all);
        assert!(o.status.success(), "{args:?}: {}", stderr(&o));
    };
    let p = |n: &str| dir.join(n).to_str().unwrap().to_owned();
    run(&["phantom", "--type", "shepp-logan-2d", "--geometry", s(&geo), "--out", &p("v")]);
    run(&["project", "--geometry", s(&geo), "--input", &p("v"), "--out", &p("s"), "--noise", "0.02", "--seed", "9"]);
    run(&["reconstruct", "fbp", "--geometry", s(&geo), "--input", &p("s"), "--out", &p("fbp")]);
    run(&["reconstruct", "iterative", "--geometry", s(&geo), "--input", &p("s"), "--out", &p("it"), "--config", s(&exp)]);
    run(&["reconstruct", "iterative", "--config", s(&exp)]);
    run(&["learn-filter", "--config", s(&exp), "--out", &p("out_learn")]);
    run(&["reconstruct", "fdk", "--config", s(&fdk)]);
    run(&["trajectory", "--geometry", s(&cone), "--out", &p("traj.csv")]);
}

#[test]
fn seeded_runs_are_byte_reproducible() {
    let runs: Vec<_> = ["1", "3"]
        .iter()
        .map(|t| {
            let dir = tempfile::tempdir().unwrap();
            batch(dir.path(), t);
            files(dir.path())
        })
        .collect();
    assert!(runs[0].len() > 30, "{}", runs[0].len());
    for (a, b) in runs[0].iter().zip(&runs[1]) {
        assert_eq!(a.0, b.0);
        assert!(a.1 == b.1, "{} differs", a.0);
    }
    assert_eq!(runs[0].len(), runs[1].len());
}

#[test]
fn different_seeds_give_different_noise() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let geo = parallel_geometry(d);
    let v = d.join("v");
    assert!(tomograd(&["phantom", "--type", "disk-2d", "--size", "64", "--out", s(&v)]).status.success());
    let mut payloads = Vec::new();
    for seed in ["1", "2"] {
        let out = d.join(format!("s{seed}"));
        let o = tomograd(&["project", "--geometry", s(&geo), "--input", s(&v), "--out", s(&out), "--noise", "0.02", "--seed", seed]);
        assert!(o.status.success());
        payloads.push(fs::read(d.join(format!("s{seed}.raw"))).unwrap());
    }
    assert_ne!(payloads[0], payloads[1]);
}
