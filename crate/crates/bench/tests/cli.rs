use std::process::Command;

fn bench() -> Command {
    Command::new(env!("CARGO_BIN_EXE_lago-bench"))
}

#[test]
fn lists_problems() {
    let out = bench().arg("list-problems").output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for name in ["branin", "styblinski-tang", "rosenbrock", "levy", "sphere", "pde-source-2d"] {
        assert!(text.contains(name), "{name} missing from {text}");
    }
}

#[test]
fn run_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out = bench()
        .args(["run", "--problem", "sphere", "--dim", "2", "--mode", "lago", "--seeds", "2", "--budget", "60"])
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["config.toml", "trace_seed1.csv", "trace_seed2.csv", "summary.csv", "final.csv"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
    // The saved config reproduces the run.
    let again = tempfile::tempdir().unwrap();
    let out = bench()
        .args(["run", "--config"])
        .arg(dir.path().join("config.toml"))
        .arg("--out")
        .arg(again.path())
        .output()
        .unwrap();
    assert!(out.status.success());
    assert_eq!(
        std::fs::read(dir.path().join("trace_seed2.csv")).unwrap(),
        std::fs::read(again.path().join("trace_seed2.csv")).unwrap()
    );
}

#[test]
fn gradcheck_passes_on_benchmarks() {
    let out = bench().args(["gradcheck", "--problem", "levy", "--points", "20"]).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn rejects_bad_arguments() {
    assert!(!bench().args(["run", "--problem", "ackley"]).output().unwrap().status.success());
    assert!(!bench().args(["run", "--mode", "newton"]).output().unwrap().status.success());
    assert!(!bench().args(["run", "--problem", "branin", "--dim", "3"]).output().unwrap().status.success());
}
