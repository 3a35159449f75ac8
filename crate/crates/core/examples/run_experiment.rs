//! Runs a harness experiment from a config file (or a small built-in one)
//! and evaluates the resulting best checkpoint on held-out tracks.
//!
//! cargo run --release --example run_experiment -- [config] [out_dir]

use std::path::PathBuf;

use carracing::harness::{evaluate_policy, load_checkpoint, parse, run_experiment, RunOptions};

const BUILTIN: &str = "\
method = evolution
checkpoint_period = 5
track.max_frames = 1000
evolution.population_size = 32
evolution.parent_count = 4
evolution.generations = 15
eval.trials = 10
";

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let text = match args.next() {
        Some(path) => std::fs::read_to_string(path)?,
        None => BUILTIN.to_string(),
    };
    let mut cfg = parse(&text)?;
    cfg.out_dir = args.next().map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("carracing-run"));

    let summary = run_experiment(
        &cfg,
        &RunOptions {
            resume: None,
            progress: true,
        },
    )?;
    println!("history: {}", summary.history.display());

    let ck = load_checkpoint(&summary.best_checkpoint)?;
    let seeds = cfg.eval.resolve_seeds(cfg.track.seed);
    let report = evaluate_policy(&ck, &cfg.track, &cfg.env, &seeds, cfg.eval.trials)?;
    println!(
        "held-out evaluation: {} trials, mean {:.1}, std {:.1}, solved {}",
        report.trials, report.mean, report.std_dev, report.solved
    );
    Ok(())
}
