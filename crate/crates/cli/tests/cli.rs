use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_pqsolve");

fn config(command: &str, extra: &str) -> String {
    format!(
        "command = \"{command}\"\nseed = 5\n\n[problem]\nn = 3\np = 2.0\nq = 1.5\nbeta = 1.0\nlambda_fraction = 0.3\ndelta = 0.5\nr = 4.0\n\n[mesh]\nresolution = 64\n{extra}"
    )
}

fn pqsolve(dir: &Path, command: &str, text: &str, out: &str, threads: usize) -> Output {
    let cfg = dir.join(format!("{out}.toml"));
    fs::write(&cfg, text).unwrap();
    Command::new(BIN)
        .arg(command)
        .arg("--config")
        .arg(&cfg)
        .arg("--threads")
        .arg(threads.to_string())
        .arg("--out")
        .arg(dir.join(out))
        .output()
        .unwrap()
}

#[test]
fn passing_run_exits_zero_with_summary() {
    let dir = tempfile::tempdir().unwrap();
    let o = pqsolve(dir.path(), "solve", &config("solve", ""), "a", 1);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let stdout = String::from_utf8(o.stdout).unwrap();
    assert!(stdout.contains("status: Pass"));
    assert!(stdout.contains("PASS plus.branch_sign"));
    for f in ["report.json", "fields.csv", "trace.csv"] {
        assert!(dir.path().join("a").join(f).exists(), "{f}");
    }
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let text = config("verify", "");
    assert_eq!(pqsolve(dir.path(), "verify", &text, "one", 1).status.code(), Some(0));
    assert_eq!(pqsolve(dir.path(), "verify", &text, "two", 1).status.code(), Some(0));
    let a = fs::read(dir.path().join("one/report.json")).unwrap();
    let b = fs::read(dir.path().join("two/report.json")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn sweep_is_identical_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let text = config("sweep", "\n[sweep]\nmin_fraction = 0.01\nmax_fraction = 100.0\npoints = 6\n");
    assert_eq!(pqsolve(dir.path(), "sweep", &text, "t1", 1).status.code(), Some(0));
    assert_eq!(pqsolve(dir.path(), "sweep", &text, "t4", 4).status.code(), Some(0));
    let a = fs::read_to_string(dir.path().join("t1/sweep.csv")).unwrap();
    let b = fs::read_to_string(dir.path().join("t4/sweep.csv")).unwrap();
    assert_eq!(a, b);
    assert!(a.starts_with("lambda,converged,energy,barrier_eps\n"));
    assert!(!a.contains('\r'));
}

#[test]
fn failed_assertion_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let text = config("sweep", "\n[sweep]\nmin_fraction = 100.0\nmax_fraction = 1000.0\npoints = 2\n");
    let o = pqsolve(dir.path(), "sweep", &text, "s", 1);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8(o.stdout).unwrap().contains("FAIL smallest_lambda_solved"));
}

#[test]
fn config_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = config("solve", "").replace("q = 1.5", "q = 2.5").replace("r = 4.0", "r = 7.0");
    let o = pqsolve(dir.path(), "solve", &bad, "bad", 1);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8(o.stderr).unwrap();
    assert!(err.contains("1 < q < p") && err.contains("r ≤ p*"), "{err}");

    let broken = config("solve", "").replace("beta = 1.0", "beta = ");
    let o = pqsolve(dir.path(), "solve", &broken, "broken", 1);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8(o.stderr).unwrap().contains("line 8"));

    let o = Command::new(BIN).args(["solve", "--config", "/definitely/missing.toml"]).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn non_convergence_exits_three_and_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let o = pqsolve(dir.path(), "solve", &config("solve", "\n[solver]\nmax_iter = 2\n"), "nc", 1);
    assert_eq!(o.status.code(), Some(3));
    let report = fs::read_to_string(dir.path().join("nc/report.json")).unwrap();
    assert!(report.contains("\"status\": \"non_convergence\""));
}
