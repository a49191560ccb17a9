use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

fn odesa(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_odesa")).args(args).output().expect("run odesa")
}

fn ok(args: &[&str]) -> String {
    let out = odesa(args);
    assert!(out.status.success(), "odesa {args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn scratch(name: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join(name);
    fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn gen_config_round_trips_through_sweep() {
    let dir = scratch("gen_config");
    let cfg = dir.join("e1.toml");
    ok(&["gen", "config", "experiment1", "-o", cfg.to_str().unwrap()]);
    let text = fs::read_to_string(&cfg).unwrap();
    assert!(text.contains("topology = \"ODESA 8__2_4__4\""));
    let out = ok(&["sweep", "-c", cfg.to_str().unwrap(), "--runs", "2", "--epochs", "20"]);
    assert!(out.starts_with("run,seed,hardware,robustness,oracle\n"));
    assert!(out.contains("hardware  mean"));
}

#[test]
fn train_then_eval_reports_the_same_accuracy() {
    let dir = scratch("train_eval");
    let snap = dir.join("iris.snap");
    let metrics = dir.join("epochs.csv");
    let trained = ok(&[
        "train", "-p", "iris", "--run", "2", "--epochs", "20", "--eval-every", "10",
        "-s", snap.to_str().unwrap(), "-m", metrics.to_str().unwrap(),
    ]);
    let evaluated = ok(&["eval", "-p", "iris", "--run", "2", "-s", snap.to_str().unwrap()]);
    let acc = evaluated.split_whitespace().nth(1).unwrap();
    assert!(trained.contains(&format!("test accuracy {acc}")), "train said {trained:?}, eval said {evaluated:?}");
    assert_eq!(fs::read_to_string(&metrics).unwrap().lines().count(), 21);
}

#[test]
fn generated_streams_feed_eval_and_trace() {
    let dir = scratch("streams");
    let (train, test) = (dir.join("train.txt"), dir.join("test.txt"));
    ok(&[
        "gen", "iris", "--split-seed", "4", "-o", train.to_str().unwrap(),
        "--test-out", test.to_str().unwrap(),
    ]);
    let snap = dir.join("s.snap");
    ok(&["train", "-p", "iris", "--epochs", "5", "-s", snap.to_str().unwrap()]);
    let out = ok(&["eval", "-p", "iris", "-s", snap.to_str().unwrap(), "--stream", test.to_str().unwrap()]);
    assert!(out.contains("over 105 labeled samples"), "{out}");

    let patterns = dir.join("p.txt");
    ok(&["gen", "patterns", "--repeats", "2", "--jitter", "0.1", "-o", patterns.to_str().unwrap()]);
    let csv = dir.join("trace.csv");
    ok(&["trace", "-p", "experiment1", "--stream", patterns.to_str().unwrap(), "-o", csv.to_str().unwrap()]);
    let trace = fs::read_to_string(&csv).unwrap();
    let mut lines = trace.lines();
    assert!(lines.next().unwrap().contains("signal"));
    assert!(lines.any(|l| l.contains("spike.n")));
}

#[test]
fn usage_errors_exit_nonzero() {
    assert!(!odesa(&["sweep"]).status.success());
    assert!(!odesa(&["sweep", "-c", "/nonexistent/config.toml"]).status.success());
    assert!(!odesa(&["eval", "-p", "iris", "-s", "/nonexistent/snap"]).status.success());
    let dir = scratch("bad_config");
    let cfg = dir.join("bad.toml");
    fs::write(&cfg, "topology = \"ODESA 4__6_3__3\"\nepochs = 1\nbogus = 2\n").unwrap();
    let out = odesa(&["train", "-c", cfg.to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("bogus"));
}
