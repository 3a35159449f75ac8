//! Double DQN on the racing track with feature observations (pass `pixels`
//! for the convolutional network on 32x32 frames).
//!
//! cargo run --release --example ddqn_racing -- [episodes] [pixels]

use carracing::ddqn::{train_ddqn, DdqnConfig, DiscreteActionSet};
use carracing::environment::{EnvConfig, ObservationMode, PixelConfig, TrackConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let episodes: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(30);
    let pixels = args.next().as_deref() == Some("pixels");

    let cfg = DdqnConfig {
        episodes,
        epsilon_decay_episodes: episodes * 4 / 5,
        ..DdqnConfig::default()
    };
    let env = EnvConfig {
        max_frames: 600,
        observation: if pixels {
            ObservationMode::Pixels(PixelConfig::default())
        } else {
            ObservationMode::default()
        },
        ..EnvConfig::default()
    };
    let outcome = train_ddqn(&cfg, &TrackConfig::default(), &env, DiscreteActionSet::default())?;
    for r in &outcome.records {
        println!(
            "episode {:4}  reward {:8.1}  tiles {:4}  epsilon {:.3}  td {:.4}",
            r.episode, r.reward, r.tiles, r.epsilon, r.mean_td_error
        );
    }
    Ok(())
}
