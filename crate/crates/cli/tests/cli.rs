use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn rsgf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rsgf"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn preset_text(name: &str) -> String {
    let o = rsgf(&["--dump-preset", name]);
    assert!(o.status.success());
    stdout(&o)
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.display().to_string()
}

#[test]
fn certify_worked_example_prints_26() {
    let o = rsgf(&["certify"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let line = stdout(&o)
        .lines()
        .find(|l| l.starts_with("required on-policy episodes"))
        .unwrap()
        .to_string();
    assert!(line.trim_end().ends_with(" 26"), "{line}");
}

#[test]
fn certify_rejects_zero_delta() {
    let dir = tempfile::tempdir().unwrap();
    let text = preset_text("certify-example").replace("delta = 0.1", "delta = 0.0");
    let cfg = write(dir.path(), "c.toml", &text);
    let o = rsgf(&["certify", "--config", &cfg]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("delta"));
}

#[test]
fn certify_horizon_confidence() {
    let dir = tempfile::tempdir().unwrap();
    let text =
        "mode = \"certify\"\nseed = 0\n\n[certify]\nmargin = 1.0\ndelta = 0.01\nphi = 1.0\nq = 1\nhorizon = 10\n";
    let cfg = write(dir.path(), "c.toml", text);
    let o = rsgf(&["certify", "--config", &cfg]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(
        stdout(&o).contains("horizon confidence (H = 10)   0.8\n"),
        "{}",
        stdout(&o)
    );
}

#[test]
fn unknown_key_reports_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "bad.toml",
        "mode = \"certify\"\nseed = 1\nbogus = 2\n",
    );
    let o = rsgf(&["certify", "--config", &cfg]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));
}

#[test]
fn invalid_fixture_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let text = preset_text("flow-disk").replace("fixture = \"disk\"", "fixture = \"teapot\"");
    let cfg = write(dir.path(), "f.toml", &text);
    let o = rsgf(&["flow", "--config", &cfg]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("teapot"));
}

#[test]
fn flow_disk_preset_converges_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for d in [&a, &b] {
        let o = rsgf(&[
            "flow",
            "--preset",
            "flow-disk",
            "--out",
            d.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    let ta = fs::read_to_string(a.join("trace.csv")).unwrap();
    assert_eq!(ta, fs::read_to_string(b.join("trace.csv")).unwrap());
    assert!(ta.starts_with("# rsgf flow trace, schema v1\n"));
    let last = ta.lines().last().unwrap();
    let kkt: f64 = last.rsplit(',').next().unwrap().parse().unwrap();
    assert!(kkt <= 1e-4);
    for f in ["manifest.json", "config.toml"] {
        assert!(a.join(f).exists(), "{f}");
    }
}

#[test]
fn mode_mismatch_is_an_error() {
    let o = rsgf(&["train", "--preset", "flow-disk"]);
    assert!(!o.status.success());
}

#[test]
fn train_creates_out_dir_and_reruns_identically() {
    let dir = tempfile::tempdir().unwrap();
    let text = preset_text("nav2d-desk")
        .replace("iterations = 150", "iterations = 3")
        .replace("episodes_per_iter = 30", "episodes_per_iter = 4");
    assert!(text.contains("alpha = 9.0") && text.contains("h = 0.1"));
    let cfg = write(dir.path(), "t.toml", &text);
    let mut metrics = Vec::new();
    for name in ["x/run1", "x/run2"] {
        let out = dir.path().join(name);
        let o = rsgf(&[
            "train",
            "--config",
            &cfg,
            "--seed",
            "9",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
        for f in [
            "manifest.json",
            "config.toml",
            "metrics.csv",
            "timings.csv",
            "events.log",
        ] {
            assert!(out.join(f).exists(), "{f}");
        }
        assert!(out.join("checkpoints/iter_000003.json").exists());
        metrics.push(fs::read(out.join("metrics.csv")).unwrap());
    }
    assert_eq!(metrics[0], metrics[1]);
    let m = String::from_utf8(metrics.remove(0)).unwrap();
    assert!(m.starts_with("# rsgf metrics, schema v1\n"));
    assert_eq!(m.lines().count(), 2 + 3);
}

#[test]
fn dump_preset_round_trips_through_the_binary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", &preset_text("certify-example"));
    let o = rsgf(&["certify", "--config", &cfg]);
    assert!(o.status.success());
}

#[test]
fn validate_clipped_reports_skipped() {
    let dir = tempfile::tempdir().unwrap();
    let text = "mode = \"validate\"\nseed = 3\n\n[validate]\nbatches = 500\nbatch_size = 10\nsafety_steps = 5\ndelta = 0.1\n\n[validate.clip]\nlo = 0.8\nhi = 1.2\n";
    let cfg = write(dir.path(), "v.toml", text);
    let o = rsgf(&["validate", "--config", &cfg]);
    let out = stdout(&o);
    assert!(
        out.lines()
            .any(|l| l.starts_with("SKIPPED") && l.contains("unbiased on-policy")),
        "{out}"
    );
    assert!(!out.lines().any(|l| l.starts_with("FAIL")), "{out}");
    assert!(o.status.success());
}
