//! Evaluates a saved checkpoint greedily and prints per-trial rewards.
//!
//! cargo run --release --example evaluate_checkpoint -- <checkpoint> [trials]

use carracing::environment::{EnvConfig, TrackConfig};
use carracing::harness::{evaluate_policy, load_checkpoint, EvalConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let path = args.next().ok_or("usage: evaluate_checkpoint <checkpoint> [trials]")?;
    let trials: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(20);

    let ck = load_checkpoint(&path)?;
    let track = TrackConfig::default();
    let eval = EvalConfig {
        trials,
        ..EvalConfig::default()
    };
    let seeds = eval.resolve_seeds(track.seed);
    let report = evaluate_policy(&ck, &track, &EnvConfig::default(), &seeds, trials)?;
    for (i, r) in report.rewards.iter().enumerate() {
        println!("trial {i:3}  track {:5}  reward {r:8.1}", seeds[i % seeds.len()]);
    }
    println!("mean {:.2}  std {:.2}  solved {}", report.mean, report.std_dev, report.solved);
    Ok(())
}
