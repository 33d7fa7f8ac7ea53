use std::path::Path;
use std::process::{Command, Output};

fn resokit(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_resokit"))
        .args(args)
        .current_dir(cwd)
        .env_remove("RESOKIT_OUT_DIR")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn synth_then_power_sweep() {
    let tmp = tempfile::tempdir().unwrap();
    let o = resokit(&["synth", "--out", "data", "--seed", "3"], tmp.path());
    assert_eq!(o.status.code(), Some(0), "{o:?}");
    let cfg = tmp.path().join("data/config.toml");
    assert!(cfg.exists());
    let o = resokit(
        &["power-sweep", "--config", "data/config.toml", "--out", "run"],
        tmp.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{o:?}");
    assert!(stdout(&o).contains("status: ok"));
    let report = std::fs::read_to_string(tmp.path().join("run/report.toml")).unwrap();
    assert!(report.contains("config_sha256"));
    assert!(tmp.path().join("run/power_points.csv").exists());

    let o = resokit(
        &["temp-study", "--config", "data/config.toml", "--out", "t"],
        tmp.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{o:?}");
    assert!(tmp.path().join("t/temperature_curves.csv").exists());
}

#[test]
fn missing_config_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let o = resokit(&["power-sweep", "--config", "nope.toml", "--out", "x"], tmp.path());
    assert_eq!(o.status.code(), Some(2));
    let o = resokit(&["power-sweep"], tmp.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn invalid_bin_count_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let text = "[binning]\nbins = 0\n";
    std::fs::write(tmp.path().join("bad.toml"), text).unwrap();
    let o = resokit(&["power-sweep", "--config", "bad.toml", "--out", "x"], tmp.path());
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn geometry_reports_inductance() {
    let tmp = tempfile::tempdir().unwrap();
    let o = resokit(&["geometry", "--sheet-inductance", "100e-12"], tmp.path());
    assert_eq!(o.status.code(), Some(0));
    let out: toml::Value = toml::from_str(&stdout(&o)).unwrap();
    let line = out.get("line").unwrap();
    let l_geom = line.get("geometric_inductance").and_then(|v| v.as_float()).unwrap();
    assert!((l_geom - 25.13e-9).abs() / 25.13e-9 < 0.005);
    let alpha = line.get("kinetic_fraction").and_then(|v| v.as_float()).unwrap();
    assert!(alpha >= 0.998);
}

#[test]
fn calibrate_y_factor() {
    let tmp = tempfile::tempdir().unwrap();
    let o = resokit(
        &[
            "calibrate",
            "--p-hot",
            "2e-12",
            "--p-cold",
            "1e-12",
            "--bandwidth",
            "1e6",
        ],
        tmp.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{o:?}");
    assert!(stdout(&o).contains("[y_factor]"));
    let o = resokit(&["calibrate", "--p-hot", "2e-12"], tmp.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn corrupt_sweep_fails_the_fit_command() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::write(tmp.path().join("bad.csv"), "freq_hz,re,im\n1e9,abc,0\n").unwrap();
    let o = resokit(&["fit", "bad.csv"], tmp.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("[[failure]]"));
}
