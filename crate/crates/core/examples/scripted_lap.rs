//! Drives a generated track with a hand-written pure-pursuit controller and
//! checks the episode return against the count formula.
//!
//! cargo run --release --example scripted_lap -- [seed]

use carracing::environment::{
    episode_return, generate_track, wrap_angle, ContinuousAction, Env, EnvConfig, TrackConfig,
};

const LOOKAHEAD: f64 = 8.0;
const TARGET_SPEED: f64 = 14.0;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let seed: u64 = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(7);
    let track = generate_track(&TrackConfig::default().with_seed(seed))?;
    let mut env = Env::new(track.clone(), EnvConfig::default())?;
    env.reset();

    loop {
        let car = *env.car();
        let proj = track.project(car.position);
        let (aim, _) = track.point_at(proj.arc + LOOKAHEAD);
        let error = wrap_angle((aim - car.position).angle() - car.heading);
        // Negative steering turns counter-clockwise.
        let steering = (-2.0 * error).clamp(-1.0, 1.0);
        let (gas, brake) = if car.speed < TARGET_SPEED { (0.6, 0.0) } else { (0.0, 0.2) };
        let step = env.step(&ContinuousAction::new(steering, gas, brake))?;
        if step.frame % 250 == 0 {
            println!("frame {:5}  tiles {:4}  speed {:5.1}", step.frame, step.tiles_visited, car.speed);
        }
        if step.done {
            println!("ended by {:?}", step.termination.expect("done episodes record a reason"));
            break;
        }
    }
    let r = env.result();
    let formula = episode_return(r.tiles_visited, track.tile_count(), r.frames);
    println!("frames {}  tiles {}/{}", r.frames, r.tiles_visited, track.tile_count());
    println!("return {:.4}  (sum of step rewards {:.10})", formula, env.reward_sum());
    Ok(())
}
