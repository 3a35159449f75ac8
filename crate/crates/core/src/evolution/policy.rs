//! Feature-driven perceptron policy: four outputs (accelerate, steer left,
//! steer right, brake) mapped onto the continuous control triple.

use crate::environment::{
    ContinuousAction, Env, EnvConfig, EpisodeResult, FeatureObservation, ObservationMode, Track,
};
use crate::neuralnet::{decode, Activation, Genome, Network, NetworkShape};

use super::EvoError;

pub const POLICY_OUTPUTS: usize = 4;
pub const HIDDEN_UNITS: usize = 16;

/// `[6 + samples] -> 16 tanh -> 16 tanh -> 4 linear`.
pub fn policy_shape(feature_samples: usize) -> NetworkShape {
    NetworkShape::mlp(
        &[6 + feature_samples, HIDDEN_UNITS, HIDDEN_UNITS, POLICY_OUTPUTS],
        Activation::Tanh,
        Activation::Linear,
    )
    .expect("policy shape is valid")
}

/// Network input for a feature observation; see [`FeatureObservation::normalized`].
pub fn policy_inputs(obs: &FeatureObservation, road_width: f64) -> Vec<f64> {
    obs.normalized(road_width)
}

/// Steering is `tanh(right - left)` so it always lands in `[-1, 1]`; gas and
/// brake are clamped into `[0, 1]`.
pub fn outputs_to_action(out: &[f64]) -> ContinuousAction {
    let [accelerate, left, right, brake] = [out[0], out[1], out[2], out[3]];
    ContinuousAction {
        steering: (right - left).tanh(),
        gas: accelerate.clamp(0.0, 1.0),
        brake: brake.clamp(0.0, 1.0),
    }
}

/// Runs one greedy episode of a decoded policy network to termination.
pub fn run_policy_episode(net: &Network, track: &Track, env_cfg: &EnvConfig) -> Result<EpisodeResult, EvoError> {
    let ObservationMode::Features(_) = env_cfg.observation else {
        return Err(EvoError::Config("the evolved policy needs feature observations".into()));
    };
    let mut env = Env::new(track.clone(), env_cfg.clone())?;
    let mut obs = env.reset();
    loop {
        let features = obs.features().expect("feature mode");
        let out = net.forward(&policy_inputs(features, track.width()))?;
        let step = env.step(&outputs_to_action(&out))?;
        if step.done {
            return Ok(env.result());
        }
        obs = step.observation;
    }
}

/// Outcome of evaluating one genome: mean episode reward plus the frame and
/// tile counts of its first episode.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Evaluation {
    pub fitness: f64,
    pub frames: usize,
    pub tiles: usize,
}

/// Runs `episodes` episodes, cycling over `tracks`, and averages the returns.
pub fn evaluate_fitness(
    genome: &Genome,
    tracks: &[Track],
    episodes: usize,
    env_cfg: &EnvConfig,
) -> Result<Evaluation, EvoError> {
    if tracks.is_empty() || episodes == 0 {
        return Err(EvoError::Config("fitness needs at least one track and episode".into()));
    }
    let net = decode(genome)?;
    let mut total = 0.0;
    let mut first = None;
    for e in 0..episodes {
        let result = run_policy_episode(&net, &tracks[e % tracks.len()], env_cfg)?;
        total += result.reward;
        first.get_or_insert(result);
    }
    let first = first.expect("at least one episode");
    Ok(Evaluation {
        fitness: total / episodes as f64,
        frames: first.frames,
        tiles: first.tiles_visited,
    })
}
