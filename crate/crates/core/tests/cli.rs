use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use sha2::{Digest, Sha256};

const BASE: &str = r#"
[problem]
L = 1.0
m = 1
lambda = 1.0
controller = { kind = "ramp" }

[numerics]
N = 16
dt = 0.005
T_f = 1.5

[simulation]
sample_every = 5
snapshots = 3
grid_points = 32

[outputs]
kernel_grid = 8
"#;

fn run(sub: &str, config: &str, dir: &Path, extra: &[&str]) -> (i32, PathBuf) {
    fs::create_dir_all(dir).unwrap();
    let cfg = dir.join("config.toml");
    fs::write(&cfg, config).unwrap();
    let out = dir.join("out");
    let status = Command::new(env!("CARGO_BIN_EXE_backstep"))
        .arg(sub)
        .arg("--config")
        .arg(&cfg)
        .arg("--out-dir")
        .arg(&out)
        .args(extra)
        .output()
        .unwrap();
    (status.status.code().unwrap(), out)
}

fn digests(dir: &Path) -> Vec<(String, String)> {
    let mut v: Vec<(String, String)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            let d = Sha256::digest(fs::read(&p).unwrap());
            let hex: String = d.iter().map(|b| format!("{b:02x}")).collect();
            (p.file_name().unwrap().to_string_lossy().into_owned(), hex)
        })
        .collect();
    v.sort();
    v
}

#[test]
fn synthesize_writes_mean_feedback_coefficient() {
    let tmp = tempfile::tempdir().unwrap();
    let (code, out) = run("synthesize", BASE, tmp.path(), &[]);
    assert_eq!(code, 0);
    let csv = fs::read_to_string(out.join("feedback.csv")).unwrap();
    let row = csv.lines().find(|l| l.starts_with("0,")).unwrap();
    let f0: f64 = row.split(',').nth(1).unwrap().parse().unwrap();
    let k = 2.0 * 0.5f64.tanh();
    assert!((f0 + 2.0 * k).abs() < 1e-14, "{row}");
    for f in ["synthesis.json", "synthesis.txt", "split.csv", "kernel_re.txt", "kernel_im.txt"] {
        assert!(out.join(f).exists(), "{f}");
    }
}

#[test]
fn same_seed_gives_identical_bytes() {
    let tmp = tempfile::tempdir().unwrap();
    for sub in ["synthesize", "simulate"] {
        let (c1, a) = run(sub, BASE, &tmp.path().join(format!("{sub}_a")), &["--seed", "9"]);
        let (c2, b) = run(sub, BASE, &tmp.path().join(format!("{sub}_b")), &["--seed", "9", "--jobs", "3"]);
        assert_eq!((c1, c2), (0, 0));
        assert_eq!(digests(&a), digests(&b));
    }
    let (_, a) = run("simulate", BASE, &tmp.path().join("s9"), &["--seed", "9"]);
    let (_, b) = run("simulate", BASE, &tmp.path().join("s10"), &["--seed", "10"]);
    let ta = fs::read_to_string(a.join("trajectory_conjugation.csv")).unwrap();
    let tb = fs::read_to_string(b.join("trajectory_conjugation.csv")).unwrap();
    assert_ne!(ta, tb);
}

#[test]
fn every_file_embeds_version_and_hash() {
    let tmp = tempfile::tempdir().unwrap();
    let (_, out) = run("simulate", BASE, tmp.path(), &[]);
    let (_, _) = run("synthesize", BASE, tmp.path(), &[]);
    let mut hash = None;
    for (name, _) in digests(&out) {
        let text = fs::read_to_string(out.join(&name)).unwrap();
        assert!(text.contains(backstep::ARTIFACT_VERSION), "{name}");
        let after = text.split("config_hash").nth(1).unwrap();
        let start = after.find(|c: char| c.is_ascii_hexdigit()).unwrap();
        let h: String = after[start..].chars().take_while(|c| c.is_ascii_hexdigit()).collect();
        assert_eq!(h.len(), 64, "{name}: {h}");
        assert_eq!(hash.get_or_insert(h.clone()), &h, "{name}");
    }
}

#[test]
fn zero_coefficient_controller_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = BASE.replace(
        "{ kind = \"ramp\" }",
        "{ kind = \"raw\", re = [1.0, 0.5, 1.0, 0.0, 1.0], im = [0.0, 0.0, 0.0, 0.0, 0.0] }",
    );
    let (code, _) = run("synthesize", &cfg, tmp.path(), &[]);
    assert_eq!(code, 2);
}

#[test]
fn schema_violations_exit_1() {
    let tmp = tempfile::tempdir().unwrap();
    let (code, _) = run("synthesize", &format!("{BASE}\n[extra]\nx = 1\n"), &tmp.path().join("a"), &[]);
    assert_eq!(code, 1);
    let (code, _) = run("synthesize", &BASE.replace("m = 1", "m = \"one\""), &tmp.path().join("b"), &[]);
    assert_eq!(code, 1);
    let out = Command::new(env!("CARGO_BIN_EXE_backstep"))
        .args(["simulate", "--config", "/nonexistent.toml"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let out = Command::new(env!("CARGO_BIN_EXE_backstep")).args(["bogus"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn schema_error_names_the_key() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("c.toml");
    fs::write(&cfg, BASE.replace("dt = 0.005", "dt = \"small\"")).unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_backstep"))
        .args(["simulate", "--config"])
        .arg(&cfg)
        .output()
        .unwrap();
    assert!(String::from_utf8_lossy(&out.stderr).contains("numerics.dt"));
}

#[test]
fn verify_default_passes_and_corruption_exits_4() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = BASE.replace("N = 16", "N = 64");
    let (code, out) = run("verify", &cfg, &tmp.path().join("ok"), &[]);
    let report = fs::read_to_string(out.join("report.txt")).unwrap();
    assert_eq!(code, 0, "{report}");
    assert!(report.contains("gramian_identity"));

    let bad = format!("{cfg}\n[verify]\ncorrupt_f0 = 0.5\n");
    let (code, out) = run("verify", &bad, &tmp.path().join("bad"), &[]);
    assert_eq!(code, 4);
    let report = fs::read_to_string(out.join("report.txt")).unwrap();
    assert!(report.contains("[FAIL] weak_tb"));
    assert!(report.contains("[FAIL] op_equality:"));
    assert!(out.join("report.json").exists());
}

#[test]
fn empty_sweep_writes_header_only() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = format!("{BASE}\n[sweep]\nlambda = []\n");
    let (code, out) = run("sweep", &cfg, tmp.path(), &[]);
    assert_eq!(code, 0);
    let csv = fs::read_to_string(out.join("sweep.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[1].starts_with("controller,kind,lambda,N,dt,status"));
}

#[test]
fn sweep_is_sorted_and_jobs_independent() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = format!("{BASE}\n[sweep]\nlambda = [2.0, 0.5]\nN = [16, 8]\n");
    let (c1, a) = run("sweep", &cfg, &tmp.path().join("a"), &["--jobs", "1"]);
    let (c2, b) = run("sweep", &cfg, &tmp.path().join("b"), &["--jobs", "4"]);
    assert_eq!((c1, c2), (0, 0));
    let ta = fs::read_to_string(a.join("sweep.csv")).unwrap();
    assert_eq!(ta, fs::read_to_string(b.join("sweep.csv")).unwrap());
    let keys: Vec<(String, String)> = ta
        .lines()
        .skip(2)
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (f[2].to_string(), f[3].to_string())
        })
        .collect();
    assert_eq!(
        keys,
        vec![
            ("5e-1".into(), "8".into()),
            ("5e-1".into(), "16".into()),
            ("2e0".into(), "8".into()),
            ("2e0".into(), "16".into())
        ]
    );
}
