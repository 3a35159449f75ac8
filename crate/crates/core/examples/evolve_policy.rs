//! Evolves a feature-driven driving policy on one generated track and prints
//! the learning curve next to a random-genome baseline.
//!
//! cargo run --release --example evolve_policy -- [generations]

use carracing::environment::{generate_track, EnvConfig, TrackConfig};
use carracing::evolution::{evaluate_fitness, policy_shape, EvoConfig, EvolutionRun};
use carracing::neuralnet::Genome;
use carracing::seeding;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let generations: usize = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(50);
    let track_cfg = TrackConfig::default();
    let env_cfg = EnvConfig::default();
    let cfg = EvoConfig {
        generations,
        ..EvoConfig::default()
    };

    let track = generate_track(&track_cfg)?;
    let mut rng = seeding::stream(12345, &[]);
    let baseline: f64 = (0..50)
        .map(|_| {
            let g = Genome::random_uniform(policy_shape(5), cfg.gene_bound, &mut rng);
            evaluate_fitness(&g, std::slice::from_ref(&track), 1, &env_cfg).map(|e| e.fitness)
        })
        .sum::<Result<f64, _>>()?
        / 50.0;
    println!("random genome baseline: {baseline:.1}");

    let mut run = EvolutionRun::new(cfg, &track_cfg, &env_cfg)?;
    for _ in 0..generations {
        let r = run.step()?;
        println!(
            "gen {:4}  best {:8.1}  mean {:8.1}  frames {:5}  tiles {:4}",
            r.generation, r.best_fitness, r.mean_fitness, r.frames_of_best, r.tiles_of_best
        );
    }
    Ok(())
}
