//! Experiment orchestration: config files, training runs with CSV histories
//! and checkpoints, and greedy evaluation of saved policies.

mod config;
mod run;

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use thiserror::Error;

use crate::ddqn::{argmax, DdqnError, DiscreteActionSet};
use crate::environment::{
    generate_track, Env, EnvConfig, EnvError, FeatureConfig, Observation, ObservationMode, PixelConfig, Track,
    TrackConfig,
};
use crate::evolution::{outputs_to_action, policy_inputs, EvoError};
use crate::neuralnet::{decode, encode, Checkpoint, CheckpointError, Dims, NetError, Network, Role};

pub use config::{parse, render, ConfigError, EvalConfig, ExperimentConfig, Trainer};
pub use run::{load_state, run_experiment, RunOptions, RunSummary, DDQN_HEADER, EVOLUTION_HEADER};

/// Mean reward required over at least [`SOLVED_TRIALS`] trials.
pub const SOLVED_MEAN: f64 = 900.0;
pub const SOLVED_TRIALS: usize = 100;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Checkpoint {
        path: PathBuf,
        #[source]
        source: CheckpointError,
    },
    #[error("training failed: {0}")]
    Training(String),
    #[error("evaluation failed: {0}")]
    Evaluation(String),
}

impl HarnessError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        HarnessError::Io {
            path: path.into(),
            source,
        }
    }

    /// 1 for config problems, 2 for files that cannot be read, written or
    /// decoded, 3 for failures during training or evaluation.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) => 1,
            HarnessError::Io { .. } | HarnessError::Checkpoint { .. } => 2,
            HarnessError::Training(_) | HarnessError::Evaluation(_) => 3,
        }
    }
}

impl From<EvoError> for HarnessError {
    fn from(e: EvoError) -> Self {
        HarnessError::Training(e.to_string())
    }
}

impl From<DdqnError> for HarnessError {
    fn from(e: DdqnError) -> Self {
        HarnessError::Training(e.to_string())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvaluationReport {
    pub trials: usize,
    pub rewards: Vec<f64>,
    pub mean: f64,
    /// Population standard deviation of the rewards.
    pub std_dev: f64,
    pub solved: bool,
}

impl EvaluationReport {
    pub fn from_rewards(rewards: Vec<f64>) -> Self {
        let trials = rewards.len();
        let mean = if trials == 0 {
            0.0
        } else {
            rewards.iter().sum::<f64>() / trials as f64
        };
        let var = if trials == 0 {
            0.0
        } else {
            rewards.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / trials as f64
        };
        Self {
            trials,
            mean,
            std_dev: var.sqrt(),
            solved: trials >= SOLVED_TRIALS && mean >= SOLVED_MEAN,
            rewards,
        }
    }
}

pub fn save_checkpoint(checkpoint: &Checkpoint, path: impl AsRef<Path>) -> Result<(), HarnessError> {
    let path = path.as_ref();
    std::fs::write(path, checkpoint.to_bytes()).map_err(|e| HarnessError::io(path, e))
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<Checkpoint, HarnessError> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| HarnessError::io(path, e))?;
    Checkpoint::from_bytes(&bytes).map_err(|source| HarnessError::Checkpoint {
        path: path.into(),
        source,
    })
}

pub fn save_network(net: &Network, role: Role, path: impl AsRef<Path>) -> Result<(), HarnessError> {
    save_checkpoint(&Checkpoint::new(role, encode(net)), path)
}

/// A checkpoint turned back into something that can drive the car.
#[derive(Clone, Debug)]
pub enum LoadedPolicy {
    /// Four-output evolved controller.
    Evolved(Network),
    /// Q-network over the default discrete action set.
    Greedy(Network, DiscreteActionSet),
}

impl LoadedPolicy {
    pub fn from_checkpoint(ck: &Checkpoint) -> Result<Self, HarnessError> {
        let net = decode(&ck.genome).map_err(|e| HarnessError::Evaluation(e.to_string()))?;
        match ck.role {
            Role::Policy => {
                if net.shape().output_len() != crate::evolution::POLICY_OUTPUTS {
                    return Err(HarnessError::Evaluation("policy checkpoint must have 4 outputs".into()));
                }
                Ok(LoadedPolicy::Evolved(net))
            }
            Role::Online | Role::Target => {
                let actions = DiscreteActionSet::default();
                if net.shape().output_len() != actions.len() {
                    return Err(HarnessError::Evaluation(format!(
                        "Q-network has {} outputs but the action set has {}",
                        net.shape().output_len(),
                        actions.len()
                    )));
                }
                Ok(LoadedPolicy::Greedy(net, actions))
            }
        }
    }

    pub fn network(&self) -> &Network {
        match self {
            LoadedPolicy::Evolved(n) | LoadedPolicy::Greedy(n, _) => n,
        }
    }

    /// Observation mode implied by the network input. `base` supplies the
    /// settings the input size does not determine (sample spacing, view span).
    pub fn observation_mode(&self, base: &ObservationMode) -> Result<ObservationMode, HarnessError> {
        let spacing = match base {
            ObservationMode::Features(f) => f.spacing,
            ObservationMode::Pixels(_) => FeatureConfig::default().spacing,
        };
        let view_span = match base {
            ObservationMode::Pixels(p) => p.view_span,
            ObservationMode::Features(_) => PixelConfig::default().view_span,
        };
        match self.network().shape().input() {
            Dims::Vector(n) if n >= 6 => Ok(ObservationMode::Features(FeatureConfig {
                samples: n - 6,
                spacing,
            })),
            Dims::Grid {
                height,
                width,
                channels,
            } => Ok(ObservationMode::Pixels(PixelConfig {
                height,
                width,
                channels,
                view_span,
            })),
            Dims::Vector(n) => Err(HarnessError::Evaluation(format!(
                "network input of length {n} matches no observation layout"
            ))),
        }
    }

    /// One greedy episode; returns the episode return computed from counts.
    pub fn run_episode(&self, track: &Track, env_cfg: &EnvConfig) -> Result<f64, NetOrEnvError> {
        let mut env = Env::new(track.clone(), env_cfg.clone())?;
        let mut obs = env.reset();
        loop {
            let action = match self {
                LoadedPolicy::Evolved(net) => {
                    let features = obs.features().ok_or(NetOrEnvError::Layout)?;
                    outputs_to_action(&net.forward(&policy_inputs(features, track.width()))?)
                }
                LoadedPolicy::Greedy(net, actions) => {
                    let input = match &obs {
                        Observation::Features(f) => f.normalized(track.width()),
                        Observation::Pixels(p) => p.data.clone(),
                    };
                    actions.actions()[argmax(&net.forward(&input)?)]
                }
            };
            let step = env.step(&action)?;
            if step.done {
                return Ok(env.episode_return());
            }
            obs = step.observation;
        }
    }
}

#[derive(Debug, Error)]
pub enum NetOrEnvError {
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Net(#[from] NetError),
    #[error("evolved policies need feature observations")]
    Layout,
}

/// Runs `trials` greedy episodes, trial `i` on the track with seed
/// `seeds[i % seeds.len()]`. Trials run in parallel; rewards keep trial order.
pub fn evaluate_policy(
    checkpoint: &Checkpoint,
    track_cfg: &TrackConfig,
    env_cfg: &EnvConfig,
    seeds: &[u64],
    trials: usize,
) -> Result<EvaluationReport, HarnessError> {
    if trials == 0 || seeds.is_empty() {
        return Err(HarnessError::Evaluation("need at least one trial and one track seed".into()));
    }
    let policy = LoadedPolicy::from_checkpoint(checkpoint)?;
    let env_cfg = EnvConfig {
        observation: policy.observation_mode(&env_cfg.observation)?,
        ..env_cfg.clone()
    };
    let distinct = seeds.len().min(trials);
    let tracks = seeds[..distinct]
        .par_iter()
        .map(|&s| generate_track(&track_cfg.with_seed(s)))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| HarnessError::Evaluation(e.to_string()))?;
    let rewards = (0..trials)
        .into_par_iter()
        .map(|i| policy.run_episode(&tracks[i % distinct], &env_cfg))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| HarnessError::Evaluation(e.to_string()))?;
    Ok(EvaluationReport::from_rewards(rewards))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ddqn::q_network_shape;
    use crate::evolution::policy_shape;
    use crate::neuralnet::Genome;

    #[test]
    fn solved_flag_gates() {
        let r = EvaluationReport::from_rewards(vec![926.8; 100]);
        assert!((r.mean - 926.8).abs() < 1e-9);
        assert!(r.std_dev < 1e-9);
        assert!(r.solved);
        assert!(!EvaluationReport::from_rewards(vec![950.0; 99]).solved);
        assert!(!EvaluationReport::from_rewards(vec![899.99; 100]).solved);
        assert!(EvaluationReport::from_rewards(vec![900.0; 100]).solved);
    }

    #[test]
    fn std_dev_is_population() {
        let r = EvaluationReport::from_rewards(vec![1.0, 3.0]);
        assert_eq!(r.mean, 2.0);
        assert_eq!(r.std_dev, 1.0);
    }

    #[test]
    fn evaluation_is_deterministic_and_ordered() {
        let mut rng = crate::seeding::stream(4, &[]);
        let genome = Genome::random_uniform(policy_shape(5), 1.0, &mut rng);
        let ck = Checkpoint::new(Role::Policy, genome);
        let env = EnvConfig {
            max_frames: 200,
            ..EnvConfig::default()
        };
        let track = TrackConfig::default();
        let a = evaluate_policy(&ck, &track, &env, &[1, 2, 3], 5).unwrap();
        let b = evaluate_policy(&ck, &track, &env, &[1, 2, 3], 5).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.trials, 5);
        assert_eq!(a.rewards[0], a.rewards[3]);
        assert_eq!(a.rewards[1], a.rewards[4]);
    }

    #[test]
    fn q_network_checkpoints_pick_their_observation_mode() {
        let mut rng = crate::seeding::stream(4, &[]);
        let shape = q_network_shape(Dims::Vector(9), 5).unwrap();
        let net = Network::he_init(shape, &mut rng);
        let ck = Checkpoint::new(Role::Online, encode(&net));
        let policy = LoadedPolicy::from_checkpoint(&ck).unwrap();
        let mode = policy.observation_mode(&ObservationMode::default()).unwrap();
        assert_eq!(mode, ObservationMode::Features(FeatureConfig { samples: 3, spacing: 5.0 }));
        let env = EnvConfig {
            max_frames: 50,
            ..EnvConfig::default()
        };
        let r = evaluate_policy(&ck, &TrackConfig::default(), &env, &[7], 2).unwrap();
        assert_eq!(r.rewards.len(), 2);

        let wrong = Checkpoint::new(Role::Policy, encode(&net));
        assert!(LoadedPolicy::from_checkpoint(&wrong).is_err());
    }

    #[test]
    fn checkpoint_files_roundtrip_and_reject_truncation() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.bin");
        let mut rng = crate::seeding::stream(8, &[]);
        let ck = Checkpoint::new(Role::Policy, Genome::random_uniform(policy_shape(5), 1.0, &mut rng));
        save_checkpoint(&ck, &path).unwrap();
        let back = load_checkpoint(&path).unwrap();
        assert_eq!(back, ck);
        let bytes = std::fs::read(&path).unwrap();
        std::fs::write(&path, &bytes[..bytes.len() - 1]).unwrap();
        let err = load_checkpoint(&path).unwrap_err();
        assert!(matches!(err, HarnessError::Checkpoint { source: CheckpointError::Truncated { .. }, .. }));
        assert_eq!(err.exit_code(), 2);
    }
}
