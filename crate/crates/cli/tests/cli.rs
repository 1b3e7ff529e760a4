use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_epicredit"))
}

const TINY: &[&str] = &[
    "--profile", "desk", "--capacity", "10", "--steps", "20", "--eval-every", "10",
    "--eval-size", "20", "--runs", "2", "--embed-dim", "8",
];

#[test]
fn footprint_atari() {
    let out = bin().args(["--footprint", "atari"]).output().unwrap();
    assert!(out.status.success());
    let s = String::from_utf8(out.stdout).unwrap();
    assert!(s.contains("302.40 GB"), "{s}");
    assert!(s.contains("raw_observation,302400000000"));
}

#[test]
fn writes_csv_and_svg_for_several_mechanisms() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("m.csv");
    let svg = dir.path().join("m.svg");
    let out = bin()
        .args(TINY)
        .args(["--mechanism", "baseline,synthetic", "--out"])
        .arg(&csv)
        .arg("--svg")
        .arg(&svg)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next(),
        Some("run,step,mechanism,train_loss,val_accuracy,recon_loss,synth_mse,diverged")
    );
    assert_eq!(lines.count(), 8);
    assert!(text.ends_with('\n'));
    assert!(std::fs::read_to_string(&svg).unwrap().starts_with("<svg"));
}

#[test]
fn repeated_invocation_is_bit_identical() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let p = dir.path().join(name);
        let st = bin()
            .args(TINY)
            .args(["--mechanism", "reinstate_approx", "--out"])
            .arg(&p)
            .output()
            .unwrap();
        assert!(st.status.success());
        std::fs::read(p).unwrap()
    };
    assert_eq!(run("a.csv"), run("b.csv"));
}

#[test]
fn config_file_then_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.txt");
    std::fs::write(&cfg, "mechanism = oracle\ncapacity = 77\ntau = 0.5\n").unwrap();
    let out = bin()
        .args(["--profile", "desk", "--config"])
        .arg(&cfg)
        .args(["--tau", "0.25", "--dry-run"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let s = String::from_utf8(out.stdout).unwrap();
    assert!(s.contains("mechanism = oracle"));
    assert!(s.contains("capacity = 77"));
    assert!(s.contains("tau = 0.25"));
}

#[test]
fn exit_codes_by_category() {
    let code = |args: &[&str]| bin().args(args).output().unwrap().status.code();
    assert_eq!(code(&["--tau", "0"]), Some(2));
    assert_eq!(code(&["--mechanism", "telepathy"]), Some(2));
    assert_eq!(code(&["--footprint", "snes"]), Some(2));
    assert_eq!(code(&["--data-dir", "/nonexistent/mnist", "--steps", "1"]), Some(3));
    let mut args: Vec<&str> = TINY.to_vec();
    args.extend(["--out", "/nonexistent-dir/x.csv"]);
    assert_eq!(code(&args), Some(4));
}

#[test]
fn divergence_is_not_a_failure() {
    let out = bin()
        .args(TINY)
        .args(["--mechanism", "reinstate_approx", "--lr", "1e300"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let s = String::from_utf8(out.stdout).unwrap();
    assert!(s.contains("2/2"), "{s}");
}
