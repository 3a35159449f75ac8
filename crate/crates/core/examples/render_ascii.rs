//! Renders the car-centred pixel observation as ASCII art after a few frames
//! of driving.
//!
//! cargo run --example render_ascii -- [frames]

use carracing::environment::{
    generate_track, ContinuousAction, Env, EnvConfig, Observation, ObservationMode, PixelConfig, TrackConfig,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let frames: usize = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(60);
    let track = generate_track(&TrackConfig::default())?;
    let cfg = EnvConfig {
        observation: ObservationMode::Pixels(PixelConfig::default()),
        ..EnvConfig::default()
    };
    let mut env = Env::new(track, cfg)?;
    let mut obs = env.reset();
    for _ in 0..frames {
        obs = env.step(&ContinuousAction::new(0.0, 0.5, 0.0))?.observation;
    }
    let Observation::Pixels(p) = obs else {
        unreachable!("pixel mode was requested");
    };
    for row in 0..p.height {
        let line: String = (0..p.width)
            .map(|col| match p.get(row, col, 0) {
                v if v > 0.9 => '#',
                v if v > 0.7 => '%',
                v if v > 0.4 => '.',
                _ => ' ',
            })
            .collect();
        println!("|{line}|");
    }
    println!("'.' road, ' ' grass, '#' car on road, '%' car on grass");
    Ok(())
}
