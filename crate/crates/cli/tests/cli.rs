use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

const SWEEP: &str = r#"
mode = "qtur"

[params]
g1 = 0.45
nu = 0.05
g2 = 1e-4

[[sweep]]
name = "g1"
min = 0.05
max = 0.9
points = 7

[[sweep]]
name = "nu"
min = 0.01
max = 1.0
points = 3
scale = "log"

[output]
path = "out.csv"
"#;

fn colltur(dir: &Path, args: &[&str], threads: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_colltur"));
    cmd.current_dir(dir).args(args).env_remove("COLLTUR_THREADS");
    if let Some(t) = threads {
        cmd.env("COLLTUR_THREADS", t);
    }
    cmd.output().expect("binary runs")
}

fn write(dir: &TempDir, name: &str, text: &str) -> String {
    std::fs::write(dir.path().join(name), text).unwrap();
    name.to_owned()
}

fn read(dir: &TempDir, name: &str) -> String {
    std::fs::read_to_string(dir.path().join(name)).unwrap()
}

#[test]
fn sweep_output_is_reproducible_across_runs_and_threads() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "sweep.toml", SWEEP);
    let mut outputs = Vec::new();
    for (threads, out) in [(None, "a.csv"), (None, "b.csv"), (Some("1"), "c.csv"), (Some("4"), "d.csv")] {
        let o = colltur(dir.path(), &["run", &cfg, "-o", out], threads);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        outputs.push(read(&dir, out));
    }
    assert!(outputs.iter().all(|o| o == &outputs[0]));

    let csv = &outputs[0];
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("g1,nu,t,mean,variance,sigma,q,q_q,n,status"));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 21);
    // First axis varies slowest.
    assert_eq!(rows[0][0], rows[2][0]);
    assert_ne!(rows[0][1], rows[1][1]);
    assert_eq!(rows[0][1], "1.00000000000e-2");
    for r in &rows {
        assert_eq!(r[9], "ok");
        assert!(r[2].is_empty() && r[8].is_empty());
        let mantissa = r[6].split('e').next().unwrap();
        assert_eq!(mantissa.trim_start_matches('-').len(), 13, "{}", r[6]);
    }
}

#[test]
fn sidecar_records_version_hash_and_timing() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "sweep.toml", SWEEP);
    let o = colltur(dir.path(), &["run", &cfg], Some("2"));
    assert!(o.status.success());
    let meta: serde_json::Value = serde_json::from_str(&read(&dir, "out.csv.meta.json")).unwrap();
    assert_eq!(meta["code_version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(meta["config_sha256"], colltur::output::config_hash(SWEEP));
    assert_eq!(meta["mode"], "qtur");
    assert_eq!(meta["rows"], 21);
    assert_eq!(meta["failed_rows"], 0);
    assert_eq!(meta["threads"], colltur::thread_count(0, Some("2")));
    assert!(meta["wall_time_s"].as_f64().unwrap() >= 0.0);
}

#[test]
fn single_point_without_sweep() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        &dir,
        "one.toml",
        "mode = \"nm1\"\ntimes = [0.9, 4.5]\nsigma = \"instantaneous\"\n[params]\nbase = \"fig2\"\ng1 = 1.5\ntau = 0.9\n[output]\npath = \"one.json\"\nformat = \"json\"\n",
    );
    let o = colltur(dir.path(), &["run", &cfg], None);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows: serde_json::Value = serde_json::from_str(&read(&dir, "one.json")).unwrap();
    let rows = rows.as_array().unwrap();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0]["t"], 0.9);
    assert_eq!(rows[0]["status"], "ok");
    assert!(rows[0].get("q").is_none());
    assert!(rows[0]["sigma"].as_f64().unwrap() < 0.0);
}

#[test]
fn config_errors_exit_one() {
    let dir = TempDir::new().unwrap();
    let bad = write(&dir, "bad.toml", "mode = \"qtur\"\n[params]\ng1 = -1.0\n[output]\npath = \"x.csv\"\n");
    let o = colltur(dir.path(), &["run", &bad], None);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("g1"));
    assert!(!dir.path().join("x.csv").exists());

    let typo = write(&dir, "typo.toml", "mode = \"qtur\"\nmystery = 1\n[output]\npath = \"x.csv\"\n");
    assert_eq!(colltur(dir.path(), &["validate", &typo], None).status.code(), Some(1));
    assert_eq!(colltur(dir.path(), &["run", "no_such_preset"], None).status.code(), Some(1));
}

#[test]
fn physics_failures_exit_two_and_keep_going() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        &dir,
        "zero.toml",
        "mode = \"markov_ness\"\n[params]\nnu = 0.0\n[[sweep]]\nname = \"g1\"\nmin = 0.0\nmax = 0.5\npoints = 2\n[output]\npath = \"z.csv\"\n",
    );
    let o = colltur(dir.path(), &["run", &cfg], None);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = read(&dir, "z.csv");
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(rows.len(), 2);
    assert!(!rows[0].ends_with(",ok"));
    let meta: serde_json::Value = serde_json::from_str(&read(&dir, "z.csv.meta.json")).unwrap();
    assert!(meta["failed_rows"].as_u64().unwrap() >= 1);
}

#[test]
fn validate_and_list_presets() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "sweep.toml", SWEEP);
    let o = colltur(dir.path(), &["validate", &cfg], None);
    assert!(o.status.success());
    assert_eq!(String::from_utf8_lossy(&o.stdout).trim(), "ok: mode qtur, 21 grid points");

    let o = colltur(dir.path(), &["validate", "fig2_mid"], None);
    assert!(o.status.success());

    let o = colltur(dir.path(), &["list-presets"], None);
    assert!(o.status.success());
    let listed = String::from_utf8_lossy(&o.stdout);
    for name in ["fig1a", "fig1b", "fig1c", "fig2_mid", "fig2_right", "fig3_left", "fig3_mid", "fig3_right", "fig4"] {
        assert!(listed.lines().any(|l| l.split_whitespace().next() == Some(name)), "{name}");
    }
}
