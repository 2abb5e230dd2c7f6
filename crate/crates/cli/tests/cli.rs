//! End-to-end CLI behavior: record lifecycle, determinism across worker
//! counts, resume semantics.

use std::path::Path;
use std::process::Command;

fn gmclab() -> Command {
    Command::new(env!("CARGO_BIN_EXE_gmclab"))
}

fn write_config(dir: &Path, name: &str, body: &str) -> std::path::PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path
}

fn payload_of(record_path: &Path) -> serde_json::Value {
    let text = std::fs::read_to_string(record_path).unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    v["payload"].clone()
}

#[test]
fn list_kinds_shows_all_families() {
    let out = gmclab().arg("list-kinds").output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for kind in [
        "kpoint",
        "onepoint",
        "field-scan",
        "clt",
        "thick-points",
        "free-energy",
        "dbm-local-factor",
        "gmc-sample",
        "mde-report",
    ] {
        assert!(text.contains(kind), "missing {kind} in list-kinds");
    }
}

#[test]
fn validate_config_rejects_mismatched_kind() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "bad.toml",
        r#"
schema_version = 1
kind = "kpoint"
master_seed = 1
output = "out/x"

[ensemble]
class = "complex"
law = { kind = "gaussian" }
n = 16

[mde-report]
z = [0.1, 0.0]
resolution = 32
"#,
    );
    let out = gmclab()
        .args(["validate-config", "--config"])
        .arg(&cfg)
        .output()
        .unwrap();
    assert!(!out.status.success());
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("kind"), "unexpected error: {err}");
}

#[test]
fn mde_report_runs_and_plots() {
    let dir = tempfile::tempdir().unwrap();
    let out_stem = dir.path().join("rep");
    let cfg = write_config(
        dir.path(),
        "rep.toml",
        &format!(
            r#"
schema_version = 1
kind = "mde-report"
master_seed = 5
output = "{}"

[ensemble]
class = "complex"
law = {{ kind = "gaussian" }}
n = 32

[mde-report]
z = [0.6, 0.0]
resolution = 64
etas = [0.0]
"#,
            out_stem.display()
        ),
    );
    let out = gmclab().args(["run", "--config"]).arg(&cfg).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let record = out_stem.with_extension("json");
    assert!(record.exists());
    // rho(0) at z = 0.6 is 0.8/pi
    let payload = payload_of(&record);
    let rho0 = payload["rho0"].as_f64().unwrap();
    assert!((rho0 - 0.8 / std::f64::consts::PI).abs() < 1e-10, "{rho0}");
    // density CSV sidecar exists and is nonempty
    let csv = out_stem.with_extension("density.csv");
    assert!(csv.exists() && std::fs::metadata(&csv).unwrap().len() > 0);
    // plot emits a nonempty SVG
    let out = gmclab().arg("plot").arg(&record).output().unwrap();
    assert!(out.status.success());
    let svg = out_stem.with_extension("density.svg");
    assert!(svg.exists() && std::fs::metadata(&svg).unwrap().len() > 0);
}

#[test]
fn payload_identical_across_worker_counts() {
    let dir = tempfile::tempdir().unwrap();
    let mut payloads = Vec::new();
    for workers in [1usize, 4, 16] {
        let stem = dir.path().join(format!("w{workers}"));
        let cfg = write_config(
            dir.path(),
            &format!("w{workers}.toml"),
            &format!(
                r#"
schema_version = 1
kind = "onepoint"
master_seed = 99
workers = {workers}
output = "{}"

[ensemble]
class = "complex"
law = {{ kind = "gaussian" }}
n = 24

[onepoint]
z = [0.2, 0.0]
gamma = 1.0
samples = 400
batch_size = 32
"#,
                stem.display()
            ),
        );
        let out = gmclab().args(["run", "--config"]).arg(&cfg).output().unwrap();
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        payloads.push(payload_of(&stem.with_extension("json")));
    }
    assert_eq!(payloads[0], payloads[1]);
    assert_eq!(payloads[0], payloads[2]);
}

#[test]
fn resume_reproduces_payload_and_rejects_mismatch() {
    let dir = tempfile::tempdir().unwrap();
    let stem = dir.path().join("res");
    let body = |seed: u64| {
        format!(
            r#"
schema_version = 1
kind = "onepoint"
master_seed = {seed}
output = "{}"

[ensemble]
class = "complex"
law = {{ kind = "gaussian" }}
n = 16

[onepoint]
z = [0.1, 0.0]
gamma = 1.0
samples = 300
batch_size = 50
"#,
            stem.display()
        )
    };
    let cfg = write_config(dir.path(), "res.toml", &body(7));
    let out = gmclab().args(["run", "--config"]).arg(&cfg).output().unwrap();
    assert!(out.status.success());
    let fresh = payload_of(&stem.with_extension("json"));
    // progress file holds all six batches; a resumed run reduces them
    let out = gmclab()
        .args(["run", "--resume", "--config"])
        .arg(&cfg)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let resumed = payload_of(&stem.with_extension("json"));
    assert_eq!(fresh, resumed);
    // a different seed must be refused against the same partial output
    let cfg2 = write_config(dir.path(), "res2.toml", &body(8));
    let out = gmclab()
        .args(["run", "--resume", "--config"])
        .arg(&cfg2)
        .output()
        .unwrap();
    assert!(!out.status.success());
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("resume mismatch"), "unexpected error: {err}");
}

#[test]
fn remaining_kinds_run_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        (
            "clt",
            r#"
[clt]
points = [[0.3, 0.0]]
draws = 32
"#,
        ),
        (
            "thick-points",
            r#"
[thick-points]
nu = 0.3
n_values = [16, 32]
region = { shape = "rect", x0 = -0.2, x1 = 0.2, y0 = -0.2, y1 = 0.2 }
resolution = 4
draws = 2
"#,
        ),
        (
            "free-energy",
            r#"
[free-energy]
gammas = [1.0, 4.0]
region = { shape = "disc", r = 0.3 }
resolution = 5
draws = 2
"#,
        ),
        (
            "gmc-sample",
            r#"
[gmc-sample]
region = { shape = "disc", r = 0.3 }
epsilon = 0.2
gamma = 1.0
draws = 50
epsilon_alt = 0.1
"#,
        ),
        (
            "field-scan",
            r#"
[field-scan]
region = { shape = "half-disc", r = 0.9 }
resolution = 5
draws = 2
"#,
        ),
        (
            "dbm-local-factor",
            r#"
[dbm-local-factor]
omega1 = 0.2
lambda = 0.5
paths = 100
steps = 64
"#,
        ),
    ];
    for (kind, section) in cases {
        let stem = dir.path().join(kind);
        let cfg = write_config(
            dir.path(),
            &format!("{kind}.toml"),
            &format!(
                r#"
schema_version = 1
kind = "{kind}"
master_seed = 12
output = "{}"

[ensemble]
class = "complex"
law = {{ kind = "gaussian" }}
n = 32
{section}"#,
                stem.display()
            ),
        );
        let out = gmclab().args(["run", "--config"]).arg(&cfg).output().unwrap();
        assert!(
            out.status.success(),
            "{kind}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
        let record = stem.with_extension("json");
        assert!(record.exists(), "{kind}: no record");
        // plottable kinds emit a file
        if ["thick-points", "gmc-sample", "field-scan", "free-energy"].contains(&kind) {
            let out = gmclab().arg("plot").arg(&record).output().unwrap();
            assert!(
                out.status.success(),
                "{kind} plot: {}",
                String::from_utf8_lossy(&out.stderr)
            );
        }
    }
}

#[test]
fn record_reloads_byte_identically() {
    let dir = tempfile::tempdir().unwrap();
    let stem = dir.path().join("rt");
    let cfg = write_config(
        dir.path(),
        "rt.toml",
        &format!(
            r#"
schema_version = 1
kind = "onepoint"
master_seed = 3
output = "{}"

[ensemble]
class = "real"
law = {{ kind = "symmetric-bernoulli" }}
n = 16

[onepoint]
z = [0.2, 0.4]
gamma = 1.0
samples = 200
"#,
            stem.display()
        ),
    );
    let out = gmclab().args(["run", "--config"]).arg(&cfg).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let path = stem.with_extension("json");
    let text = std::fs::read_to_string(&path).unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    let re = serde_json::to_string(&v).unwrap();
    let v2: serde_json::Value = serde_json::from_str(&re).unwrap();
    assert_eq!(v, v2);
    // compare renders a table for it
    let out = gmclab().arg("compare").arg(&path).output().unwrap();
    assert!(out.status.success());
    assert!(String::from_utf8(out.stdout).unwrap().contains("ln MC"));
}
