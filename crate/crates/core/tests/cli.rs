//! Exit codes and outputs of the `carracing` binary.

use std::path::Path;
use std::process::Command;

fn carracing(args: &[&str], cwd: &Path) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_carracing"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs");
    let text = String::from_utf8_lossy(&out.stdout).to_string() + &String::from_utf8_lossy(&out.stderr);
    (out.status.code().unwrap_or(-1), text)
}

#[test]
fn train_evaluate_and_inspect() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("c.txt"),
        "method = evolution\ntrack.max_frames = 200\nevolution.population_size = 6\n\
         evolution.parent_count = 2\nevolution.generations = 2\neval.trials = 2\n",
    )
    .unwrap();
    let (code, out) = carracing(&["train", "--config", "c.txt", "--out", "run", "--seed", "3"], dir.path());
    assert_eq!(code, 0, "{out}");
    assert!(dir.path().join("run/history.csv").exists());

    let (code, out) = carracing(&["inspect-checkpoint", "run/best.bin"], dir.path());
    assert_eq!(code, 0, "{out}");
    assert!(out.contains("role      policy"));

    let (code, out) = carracing(&["evaluate", "run/best.bin", "--config", "c.txt", "--out", "ev"], dir.path());
    assert_eq!(code, 0, "{out}");
    assert!(out.contains("solved false"));
    assert_eq!(std::fs::read_to_string(dir.path().join("ev/evaluation.csv")).unwrap().lines().count(), 3);
}

#[test]
fn gen_track_writes_text_format() {
    let dir = tempfile::tempdir().unwrap();
    let (code, out) = carracing(&["gen-track", "--seed", "11", "--out", "tracks"], dir.path());
    assert_eq!(code, 0, "{out}");
    let text = std::fs::read_to_string(dir.path().join("tracks/track_11.txt")).unwrap();
    assert!(text.starts_with("carracing-track 1\nseed=11 "));
    let (code, out) = carracing(&["gen-track"], dir.path());
    assert_eq!(code, 0);
    assert!(out.starts_with("carracing-track 1"));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.txt"), "method = evolution\nevolution.mutation_rte = 0.5\n").unwrap();
    let (code, out) = carracing(&["train", "--config", "bad.txt"], dir.path());
    assert_eq!(code, 1);
    assert!(out.contains("evolution.mutation_rte"));

    assert_eq!(carracing(&["train", "--config", "missing.txt"], dir.path()).0, 2);
    assert_eq!(carracing(&["no-such-command"], dir.path()).0, 1);

    std::fs::write(dir.path().join("junk.bin"), b"CRNN\x01").unwrap();
    let (code, out) = carracing(&["inspect-checkpoint", "junk.bin"], dir.path());
    assert_eq!(code, 2);
    assert!(out.contains("offset"));

    // Output directory below a regular file.
    std::fs::write(dir.path().join("blocker"), b"x").unwrap();
    std::fs::write(
        dir.path().join("c.txt"),
        "method = evolution\nout_dir = blocker/run\nevolution.generations = 1\n",
    )
    .unwrap();
    assert_eq!(carracing(&["train", "--config", "c.txt"], dir.path()).0, 2);

    // A Q-network checkpoint whose head does not match the action set.
    let shape = carracing::evolution::policy_shape(5);
    let genome = carracing::neuralnet::Genome::new(shape.clone(), vec![0.0; shape.param_count()]).unwrap();
    let ck = carracing::neuralnet::Checkpoint::new(carracing::neuralnet::Role::Online, genome);
    ck.save(dir.path().join("q.bin")).unwrap();
    let (code, out) = carracing(&["evaluate", "q.bin", "--trials", "1"], dir.path());
    assert_eq!(code, 3, "{out}");
}
