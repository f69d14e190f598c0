use std::path::PathBuf;
use std::process::{Command, Output};

fn padlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_padlab")).args(args).output().expect("spawn padlab")
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("padlab-cli-{name}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    dir
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn run_verify_export() {
    let dir = scratch("run");
    let d = dir.to_str().unwrap();
    let o = padlab(&["run", "--p", "2", "--steps", "1", "--out", d]);
    assert!(o.status.success(), "{}{}", stdout(&o), String::from_utf8_lossy(&o.stderr));
    for f in ["config.json", "tower.json", "ledger.json", "summary.txt", "stage0.dot", "stage1.dot"] {
        assert!(dir.join(f).exists(), "{f}");
    }
    assert!(stdout(&o).contains("ledger: PASS"));

    let v = padlab(&["verify", d]);
    assert!(v.status.success(), "{}", stdout(&v));

    let j = padlab(&["export", "--json", d]);
    assert!(j.status.success());
    let doc: serde_json::Value = serde_json::from_str(&stdout(&j)).unwrap();
    assert_eq!(doc["stages"].as_array().unwrap().len(), 2);
    assert_eq!(stdout(&j).trim_end(), std::fs::read_to_string(dir.join("tower.json")).unwrap().trim_end());

    let g = padlab(&["export", "--dot", "--stage", "1", d]);
    assert!(g.status.success() && stdout(&g).starts_with("digraph"));
    assert!(!padlab(&["export", "--dot", "--stage", "9", d]).status.success());
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn tampered_ledger_fails_verification() {
    let dir = scratch("tamper");
    let d = dir.to_str().unwrap();
    assert!(padlab(&["run", "--steps", "1", "--out", d]).status.success());
    let path = dir.join("ledger.json");
    let ledger = std::fs::read_to_string(&path).unwrap();
    std::fs::write(&path, ledger.replacen("\"k\": 2", "\"k\": 3", 1)).unwrap();
    assert!(!padlab(&["verify", d]).status.success());
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn truncated_run_exits_nonzero() {
    let dir = scratch("budget");
    let o = padlab(&["run", "--steps", "2", "--budget", "100", "--out", dir.to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(stdout(&o).contains("truncated"));
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn scratch_directory_from_the_environment() {
    let dir = scratch("env");
    let o = Command::new(env!("CARGO_BIN_EXE_padlab")).args(["run", "--steps", "0"]).env("PADLAB_SCRATCH", &dir).output().unwrap();
    assert!(o.status.success());
    assert!(dir.join("run").join("tower.json").exists());
    let o = Command::new(env!("CARGO_BIN_EXE_padlab")).args(["run", "--steps", "0"]).env_remove("PADLAB_SCRATCH").output().unwrap();
    assert!(!o.status.success());
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn surface_tower_commands() {
    let dir = scratch("kp");
    let o = padlab(&["build-kp", "--p", "3", "--stages", "1", "--out", dir.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(dir.join("tower.json").exists());
    assert!(padlab(&["resolve-kp", "--p", "2", "--stages", "2"]).status.success());
    assert!(padlab(&["verify-kp", "--p", "2", "--stages", "2"]).status.success());
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn extension_and_bundle_commands() {
    let ok = |args: &[&str]| {
        let o = padlab(args);
        assert!(o.status.success(), "{args:?}: {}{}", stdout(&o), String::from_utf8_lossy(&o.stderr));
        stdout(&o)
    };
    ok(&["extend", "--complex", "builtin:simplex2", "--target", "circle", "--cochain", "2,0,0"]);
    ok(&["extend", "--complex", "builtin:rp2", "--target", "moore", "--p", "3", "--cochain", "1"]);
    ok(&["flex-test", "--complex", "builtin:moore3", "--p", "2", "--k", "3"]);
    ok(&["kill-bundle", "--complex", "builtin:sd-moore3", "--p", "2"]);
    ok(&["kill-bundle", "--complex", "builtin:sd-moore3", "--p", "2", "--telescope", "1"]);
    // hypothesis violated: the boundary loop has degree 3, not a multiple of 2
    assert!(!padlab(&["extend", "--complex", "builtin:simplex2", "--target", "circle", "--cochain", "3,0,0"]).status.success());
    assert!(!padlab(&["run", "--p", "4", "--out", "/nonexistent/x"]).status.success());
}
