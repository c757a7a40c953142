use std::path::Path;
use std::process::{Command, Output};

fn ah(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ah-energy"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

#[test]
fn model_prints_one_result_row() {
    let tmp = tempfile::tempdir().unwrap();
    let out = ah(tmp.path(), &["model", "--scenario", "industrial", "--ntim", "4", "--t", "3.2"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("# command: model"));
    assert!(text.contains("# overrides: ntim=4 t=3.2"), "{text}");
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows.len(), 2);
    assert!(rows[1].starts_with("industrial,model,4,3.2,"));
}

#[test]
fn simulate_is_byte_identical_across_runs() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = ["simulate", "--scenario", "animal_monitoring", "--duration", "48", "--seed", "9", "--out", "run"];
    for d in [&a, &b] {
        assert_eq!(ah(d.path(), &args).status.code(), Some(0));
    }
    for f in ["simulate.csv", "stations.csv", "packets.csv"] {
        let x = std::fs::read(a.path().join("run").join(f)).unwrap();
        let y = std::fs::read(b.path().join("run").join(f)).unwrap();
        assert_eq!(x, y, "{f}");
    }
}

#[test]
fn trace_file_lands_in_out_dir() {
    let tmp = tempfile::tempdir().unwrap();
    let out = ah(
        tmp.path(),
        &["simulate", "--scenario", "smart_metering", "--duration", "16", "--trace", "--out", "o"],
    );
    assert_eq!(out.status.code(), Some(0));
    let trace = std::fs::read_to_string(tmp.path().join("o/trace.csv")).unwrap();
    assert!(trace.starts_with("time,kind,station,outcome\n"));
    assert!(trace.contains("dtim_beacon"));
}

#[test]
fn config_file_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    let preset = concat!(env!("CARGO_MANIFEST_DIR"), "/scenarios/smart_metering.toml");
    let a = ah(tmp.path(), &["model", "--config", preset]);
    let b = ah(tmp.path(), &["model", "--scenario", "smart_metering"]);
    assert_eq!(a.status.code(), Some(0));
    let rows = |o: &Output| {
        String::from_utf8_lossy(&o.stdout)
            .lines()
            .filter(|l| !l.starts_with('#'))
            .map(str::to_owned)
            .collect::<Vec<_>>()
    };
    assert_eq!(rows(&a), rows(&b));
}

#[test]
fn errors_map_to_exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let p = tmp.path();
    assert_eq!(ah(p, &["model", "--scenario", "nowhere"]).status.code(), Some(2));
    assert_eq!(ah(p, &["model", "--config", "missing.toml"]).status.code(), Some(2));
    assert_eq!(ah(p, &["model", "--scenario", "industrial", "--ntim", "0"]).status.code(), Some(2));
    assert_eq!(
        ah(p, &["optimize", "--scenario", "industrial", "--axis", "t", "--grid", "5:1:1"]).status.code(),
        Some(2)
    );
    assert_eq!(
        ah(p, &["simulate", "--scenario", "industrial", "--duration", "0.5"]).status.code(),
        Some(2)
    );
    // Beacons alone overrun a 0.1 s period at N_TIM = 64.
    assert_eq!(
        ah(p, &["model", "--scenario", "agricultural", "--ntim", "64", "--t", "0.1"]).status.code(),
        Some(3)
    );
    assert_eq!(ah(p, &["bogus"]).status.code(), Some(2));
    std::fs::write(p.join("bad.toml"), "name = \"x\"\n").unwrap();
    let out = ah(p, &["model", "--config", "bad.toml"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!out.stderr.is_empty());
}

#[test]
fn optimize_writes_sweep_and_curves() {
    let tmp = tempfile::tempdir().unwrap();
    let out = ah(
        tmp.path(),
        &["optimize", "--scenario", "animal_monitoring", "--axis", "t", "--grid", "1:20:1", "--out", "o"],
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let names: Vec<String> = std::fs::read_dir(tmp.path().join("o"))
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    assert!(names.contains(&"sweep_dtim_period.csv".to_string()), "{names:?}");
    assert!(names.iter().any(|n| n.ends_with(".dat")));
}

#[test]
fn scenarios_lists_builtins() {
    let tmp = tempfile::tempdir().unwrap();
    let out = ah(tmp.path(), &["scenarios"]);
    let text = String::from_utf8(out.stdout).unwrap();
    for name in ["agricultural", "smart_metering", "industrial", "animal_monitoring", "outdoor_load_25"] {
        assert!(text.contains(name));
    }
}
