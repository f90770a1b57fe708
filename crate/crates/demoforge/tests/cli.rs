use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn demoforge(args: &[&str], config: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_demoforge"));
    cmd.args(args).env_remove("DEMOFORGE_CONFIG");
    if let Some(c) = config {
        cmd.env("DEMOFORGE_CONFIG", c);
    }
    cmd.output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = demoforge(args, None);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn json_line(text: &str) -> Value {
    serde_json::from_str(text.trim()).unwrap()
}

#[test]
fn usage_and_runtime_errors_have_distinct_codes() {
    assert_eq!(demoforge(&["teleport"], None).status.code(), Some(2));
    assert_eq!(demoforge(&["export-csv"], None).status.code(), Some(2));
    assert_eq!(
        demoforge(&["eval", "--policy", "expert", "--seeds", "9..1"], None)
            .status
            .code(),
        Some(2)
    );
    let missing = demoforge(&["export-csv", "/no/such/file.mdil"], None);
    assert_eq!(missing.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&missing.stderr).starts_with("error:"));
    assert_eq!(demoforge(&["--help"], None).status.code(), Some(0));
}

#[test]
fn training_is_reproducible_and_checkpoints_evaluate() {
    let dir = tempfile::tempdir().unwrap();
    let d = |p: &str| dir.path().join(p).to_str().unwrap().to_string();
    let summary = json_line(&ok(&["expert-demos", "--count", "6", "--out", &d("demos")]));
    assert_eq!(summary["successes"], 6);
    assert!(dir.path().join("demos/episode_000005.mdil").exists());

    for out in ["a.ck", "b.ck"] {
        ok(&[
            "train",
            "bc",
            "--demos",
            &d("demos/demos.mdts"),
            "--epochs",
            "3",
            "--seed",
            "4",
            "--out",
            &d(out),
        ]);
    }
    assert_eq!(
        std::fs::read(d("a.ck")).unwrap(),
        std::fs::read(d("b.ck")).unwrap()
    );
    let manifest = |p: &str| {
        let mut v: Value = serde_json::from_str(&std::fs::read_to_string(d(p)).unwrap()).unwrap();
        v.as_object_mut().unwrap().remove("checkpoint");
        v
    };
    assert_eq!(
        manifest("a.ck.manifest.json"),
        manifest("b.ck.manifest.json")
    );

    // the recordings directory gives the same dataset as the tensor file
    ok(&[
        "train",
        "bc",
        "--demos",
        &d("demos"),
        "--epochs",
        "3",
        "--seed",
        "4",
        "--out",
        &d("c.ck"),
    ]);
    assert_eq!(
        std::fs::read(d("a.ck")).unwrap(),
        std::fs::read(d("c.ck")).unwrap()
    );

    let report = json_line(&ok(&["eval", "--policy", &d("a.ck"), "--seeds", "0..3"]));
    assert_eq!(report["episodes"], 4);
    let rate = report["success_rate"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&rate));

    let irl = json_line(&ok(&[
        "train",
        "irl",
        "--demos",
        &d("demos"),
        "--iterations",
        "20",
        "--out",
        &d("r.json"),
    ]));
    assert!(irl["final_gap"].as_f64().unwrap().is_finite());
    let reward: Value =
        serde_json::from_str(&std::fs::read_to_string(d("r.json")).unwrap()).unwrap();
    assert!(!reward["theta"].as_array().unwrap().is_empty());
}

#[test]
fn record_export_plot_and_replay() {
    let dir = tempfile::tempdir().unwrap();
    let rec = dir.path().join("e.mdil");
    let rec = rec.to_str().unwrap();
    let summary = json_line(&ok(&[
        "record", "--policy", "expert", "--seed", "2", "--out", rec,
    ]));
    assert_eq!(summary["success"], true);

    let csv = ok(&["export-csv", rec, "--style", "table1"]);
    assert_eq!(
        csv.lines().next().unwrap(),
        "atom name,time,coordinates,user forces"
    );
    let long = ok(&["export-csv", rec, "--style", "long"]);
    assert_eq!(
        long.lines().next().unwrap(),
        "atom_name,step,x,y,z,fx,fy,fz"
    );
    assert_eq!(csv.lines().count(), long.lines().count());

    let svg = dir.path().join("t.svg");
    ok(&[
        "plot-trajectory",
        rec,
        rec,
        "--atom",
        "C61",
        "--out",
        svg.to_str().unwrap(),
    ]);
    let svg = std::fs::read_to_string(svg).unwrap();
    assert_eq!(svg.matches("<polyline").count(), 2);

    let lines = ok(&["replay", rec]);
    let frames = summary["frames"].as_u64().unwrap() as usize;
    let events = summary["events"].as_u64().unwrap() as usize;
    assert_eq!(lines.lines().count(), frames + events);
    let mut last = 0;
    for l in lines.lines() {
        let t = json_line(l)["wall_time_ms"].as_u64().unwrap();
        assert!(t >= last);
        last = t;
    }
}

#[test]
fn config_file_from_environment_overrides_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("df.toml");
    std::fs::write(&cfg, "[task]\ndt = 0.0005\n").unwrap();
    let out = demoforge(&["simulate", "--steps", "5"], Some(&cfg));
    assert!(out.status.success());
    assert_eq!(
        json_line(&String::from_utf8_lossy(&out.stdout))["dt"],
        0.0005
    );

    // flags beat the file
    let out = demoforge(&["simulate", "--steps", "5", "--dt", "0.002"], Some(&cfg));
    assert_eq!(
        json_line(&String::from_utf8_lossy(&out.stdout))["dt"],
        0.002
    );

    std::fs::write(&cfg, "[task]\nbogus = 1\n").unwrap();
    assert_eq!(
        demoforge(&["simulate", "--steps", "5"], Some(&cfg))
            .status
            .code(),
        Some(1)
    );
}
