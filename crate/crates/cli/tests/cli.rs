use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_nlburgers"))
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn run(cmd: &mut Command) -> Output {
    cmd.env("RUST_LOG", "error").output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn small_config(dir: &Path, extra: Value) -> PathBuf {
    let mut cfg = json!({
        "kernels": {
            "k": {"family": "exponential", "sigma": 1.0},
            "g": {"family": "exponential_derivative", "sigma": 1.0}
        },
        "grid": {"n": 512},
        "initial": {"shape": "gaussian", "mass": 0.4, "peak": 0.3},
        "t_final": 40.0
    });
    if let (Value::Object(c), Value::Object(e)) = (&mut cfg, extra) {
        c.extend(e);
    }
    let path = dir.join("config.json");
    fs::write(&path, cfg.to_string()).unwrap();
    path
}

#[test]
fn validate_exit_codes() {
    let ok = run(bin().args(["validate", "--config"]).arg(configs().join("reference.json")));
    assert_eq!(code(&ok), 0, "{}", String::from_utf8_lossy(&ok.stderr));
    let text = String::from_utf8_lossy(&ok.stdout);
    assert!(text.contains("A     = 1\n") && text.contains("B     = -1\n") && text.contains("C_GK  = 1\n"), "{text}");

    let bad = run(bin().args(["validate", "--config"]).arg(configs().join("non_odd_g.json")));
    assert_eq!(code(&bad), 1);
    assert!(String::from_utf8_lossy(&bad.stdout).contains(&format!("{:<16} FAILED", "G odd")));

    let missing = run(bin().args(["validate", "--config", "/nonexistent/config.json"]));
    assert_eq!(code(&missing), 2);

    let dir = tempfile::tempdir().unwrap();
    let garbled = dir.path().join("bad.json");
    fs::write(&garbled, "{ not json").unwrap();
    assert_eq!(code(&run(bin().args(["validate", "--config"]).arg(&garbled))), 2);
}

#[test]
fn simulate_then_verify() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), json!({}));
    let out = dir.path().join("run");
    let sim = run(bin().args(["simulate", "--config"]).arg(&cfg).arg("--out").arg(&out));
    assert_eq!(code(&sim), 0, "{}", String::from_utf8_lossy(&sim.stderr));
    for f in ["manifest.json", "config.json", "series.csv"] {
        assert!(out.join(f).exists(), "{f}");
    }
    let manifest: Value = serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    for s in manifest["snapshots"].as_array().unwrap() {
        assert!(out.join(s.as_str().unwrap()).exists());
    }

    let ver = run(bin().arg("verify").arg("--run").arg(&out));
    let stdout = String::from_utf8_lossy(&ver.stdout);
    assert!(stdout.contains("mass") && stdout.contains("energy-dissipation"), "{stdout}");
    let report: Value = serde_json::from_str(&fs::read_to_string(out.join("verify.json")).unwrap()).unwrap();
    let pass = report["pass"].as_bool().unwrap();
    assert_eq!(code(&ver), if pass { 0 } else { 1 });
    for name in ["mass", "sign", "l1-stability", "linf-stability", "energy-dissipation", "i2-i1-lemma"] {
        let row = report["checks"].as_array().unwrap().iter().find(|c| c["check"] == name).unwrap();
        assert_eq!(row["status"], "pass", "{name}");
    }
}

#[test]
fn zero_data_and_enforced_smallness() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), json!({"initial": {"shape": "constant", "value": 0.0}}));
    let ok = run(bin().args(["simulate", "--config"]).arg(&cfg).arg("--out").arg(dir.path().join("zero")));
    assert_eq!(code(&ok), 0);

    let cfg = small_config(dir.path(), json!({"initial": {"shape": "gaussian", "mass": 1.0, "peak": 0.8}}));
    let refused = run(bin().args(["simulate", "--config"]).arg(&cfg).arg("--out").arg(dir.path().join("big")));
    assert_eq!(code(&refused), 1);
    let warned = run(bin()
        .args(["simulate", "--policy", "warn", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.path().join("big")));
    assert_eq!(code(&warned), 0);

    let cfg = small_config(dir.path(), json!({"initial": {"shape": "gaussian", "mass": 1.5, "peak": 1.2}}));
    let refused = run(bin()
        .args(["simulate", "--policy", "warn", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.path().join("huge")));
    assert_eq!(code(&refused), 1);
}

#[test]
fn simulate_is_bit_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(
        dir.path(),
        json!({"initial": {"shape": "random_bumps", "count": 4, "mass": 0.3, "spread": 6.0, "width": 1.0}}),
    );
    let mut series = Vec::new();
    for name in ["a", "b"] {
        let out = dir.path().join(name);
        let r = run(bin().args(["simulate", "--seed", "7", "--config"]).arg(&cfg).arg("--out").arg(&out));
        assert_eq!(code(&r), 0);
        series.push(fs::read(out.join("series.csv")).unwrap());
    }
    assert_eq!(series[0], series[1]);
}

#[test]
fn profile_tables() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("p");
    let r = run(bin()
        .args(["profile", "--mass", "1", "--a", "1", "--b", "-1", "--out"])
        .arg(&out));
    assert_eq!(code(&r), 0, "{}", String::from_utf8_lossy(&r.stderr));
    let meta: Value = serde_json::from_str(&fs::read_to_string(out.join("profile.json")).unwrap()).unwrap();
    assert!(meta["shooting_max_diff"].as_f64().unwrap() <= 1e-8);
    assert!((meta["mass"].as_f64().unwrap() - 1.0).abs() <= 1e-10);
    let table = fs::read_to_string(out.join("profile.csv")).unwrap();
    assert_eq!(table.lines().next(), Some("xi,f"));
    assert_eq!(table.lines().count(), 2002);

    let heat = dir.path().join("heat");
    let r = run(bin().args(["profile", "--mass", "1", "--a", "1", "--b", "0", "--out"]).arg(&heat));
    assert_eq!(code(&r), 0);
    for line in fs::read_to_string(heat.join("profile.csv")).unwrap().lines().skip(1) {
        let (x, f) = line.split_once(',').unwrap();
        let (x, f): (f64, f64) = (x.parse().unwrap(), f.parse().unwrap());
        let g = (-x * x / 4.0).exp() / (4.0 * std::f64::consts::PI).sqrt();
        assert!((f - g).abs() < 1e-14);
    }

    let zero = dir.path().join("zero");
    assert_eq!(code(&run(bin().args(["profile", "--mass", "0", "--a", "1", "--b", "-1", "--out"]).arg(&zero))), 0);
    assert_eq!(code(&run(bin().args(["profile", "--mass", "1", "--a", "-1", "--b", "0", "--out"]).arg(&zero))), 1);
}

#[test]
fn sweeps() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.json");
    fs::write(&empty, r#"{"base": {}}"#).unwrap();
    let out = dir.path().join("empty_out");
    let r = run(bin().args(["sweep", "--config"]).arg(&empty).arg("--out").arg(&out));
    assert_eq!(code(&r), 0);
    let outcomes: Value = serde_json::from_str(&fs::read_to_string(out.join("sweep.json")).unwrap()).unwrap();
    assert_eq!(outcomes.as_array().unwrap().len(), 0);

    let sweep = dir.path().join("sweep.json");
    fs::write(
        &sweep,
        json!({
            "base": {
                "kernels": {
                    "k": {"family": "exponential", "sigma": 1.0},
                    "g": {"family": "exponential_derivative", "sigma": 1.0}
                },
                "grid": {"n": 256},
                "initial": {"shape": "gaussian", "mass": 0.2, "sigma": 1.0},
                "t_final": 20.0
            },
            "runs": [{"name": "huge", "patch": {"initial": {"mass": 5.0}}}],
            "product": {"initial.mass": [0.1, 0.2]}
        })
        .to_string(),
    )
    .unwrap();
    let out = dir.path().join("sweep_out");
    let r = run(bin().args(["sweep", "--threads", "2", "--config"]).arg(&sweep).arg("--out").arg(&out));
    assert_eq!(code(&r), 1, "the oversized run fails, the others complete");
    let outcomes: Value = serde_json::from_str(&fs::read_to_string(out.join("sweep.json")).unwrap()).unwrap();
    let ok: Vec<bool> = outcomes.as_array().unwrap().iter().map(|o| o["ok"].as_bool().unwrap()).collect();
    assert_eq!(ok, [false, true, true]);
    assert!(out.join("run_001/manifest.json").exists());
    let fits = fs::read_to_string(out.join("decay_fits.csv")).unwrap();
    assert!(fits.starts_with("name,channel,"));
}
