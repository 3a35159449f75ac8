//! Double deep Q-learning over a discrete action set.
//!
//! The online network picks the bootstrap action and the target network
//! values it. Replay is a sum tree keyed by `(|td| + floor)^alpha`; new
//! transitions enter at the current max priority. The target network is a
//! hard copy of the online one, refreshed every `target_sync_period` steps.

mod envs;
mod learn;
mod sumtree;
mod trainer;

use std::sync::Arc;

use rand::Rng;
use thiserror::Error;

use crate::environment::{ContinuousAction, EnvError};
use crate::neuralnet::{copy_params, Activation, Dims, Layer, NetError, Network, NetworkShape, OptimizerKind};

pub use envs::{ChainMdp, DiscreteEnv, DiscreteStep, RacingEnv};
pub use learn::{learn_step, LearnStats};
pub use sumtree::SumTree;
pub use trainer::{train_ddqn, DdqnOutcome, DdqnTrainer, EpisodeRecord};

#[derive(Debug, Error)]
pub enum DdqnError {
    #[error("invalid ddqn config: {0}")]
    Config(String),
    #[error("{0}")]
    Value(String),
    #[error("replay holds {len} transitions, batch needs {needed}")]
    NotReady { len: usize, needed: usize },
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Net(#[from] NetError),
}

/// One replay record. States are shared so consecutive transitions do not
/// duplicate observations.
#[derive(Clone, Debug, PartialEq)]
pub struct Transition {
    pub state: Arc<[f64]>,
    pub action: usize,
    pub reward: f64,
    pub next_state: Arc<[f64]>,
    /// True only for terminal states; truncated episodes still bootstrap.
    pub done: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteActionSet {
    actions: Vec<ContinuousAction>,
}

impl DiscreteActionSet {
    pub fn new(actions: Vec<ContinuousAction>) -> Result<Self, DdqnError> {
        if actions.len() < 2 {
            return Err(DdqnError::Config("an action set needs at least two actions".into()));
        }
        for (i, a) in actions.iter().enumerate() {
            a.validate()?;
            if actions[..i].contains(a) {
                return Err(DdqnError::Config(format!("action {i} duplicates an earlier entry")));
            }
        }
        Ok(Self { actions })
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn get(&self, index: usize) -> Option<&ContinuousAction> {
        self.actions.get(index)
    }

    pub fn actions(&self) -> &[ContinuousAction] {
        &self.actions
    }
}

/// Hard left, hard right, full gas, brake, coast.
impl Default for DiscreteActionSet {
    fn default() -> Self {
        Self::new(vec![
            ContinuousAction::new(-1.0, 0.0, 0.0),
            ContinuousAction::new(1.0, 0.0, 0.0),
            ContinuousAction::new(0.0, 1.0, 0.0),
            ContinuousAction::new(0.0, 0.0, 0.8),
            ContinuousAction::new(0.0, 0.0, 0.0),
        ])
        .expect("default actions are valid")
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DdqnConfig {
    pub gamma: f64,
    pub learning_rate: f64,
    pub optimizer: OptimizerKind,
    pub batch_size: usize,
    /// Power of two.
    pub replay_capacity: usize,
    pub priority_exponent: f64,
    pub priority_floor: f64,
    pub epsilon_start: f64,
    pub epsilon_end: f64,
    pub epsilon_decay_episodes: usize,
    pub target_sync_period: usize,
    /// Environment steps before the first learning step; never below `batch_size`.
    pub learn_start: usize,
    pub importance_sampling: bool,
    pub importance_beta: f64,
    pub episodes: usize,
    pub seed: u64,
}

impl Default for DdqnConfig {
    fn default() -> Self {
        Self {
            gamma: 0.99,
            learning_rate: 1e-3,
            optimizer: OptimizerKind::Adam,
            batch_size: 32,
            replay_capacity: 8192,
            priority_exponent: 0.6,
            priority_floor: 1e-3,
            epsilon_start: 1.0,
            epsilon_end: 0.05,
            epsilon_decay_episodes: 160,
            target_sync_period: 1000,
            learn_start: 32,
            importance_sampling: false,
            importance_beta: 0.4,
            episodes: 200,
            seed: 0,
        }
    }
}

impl DdqnConfig {
    pub fn validate(&self) -> Result<(), DdqnError> {
        let fail = |m: String| Err(DdqnError::Config(m));
        let unit = |x: f64| (0.0..=1.0).contains(&x);
        if !unit(self.gamma) {
            return fail(format!("gamma must be in [0, 1], got {}", self.gamma));
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return fail(format!("learning_rate must be finite and >= 0, got {}", self.learning_rate));
        }
        if self.batch_size == 0 || self.batch_size > self.replay_capacity {
            return fail(format!(
                "batch_size must be in 1..={}, got {}",
                self.replay_capacity, self.batch_size
            ));
        }
        if !self.replay_capacity.is_power_of_two() {
            return fail(format!("replay_capacity must be a power of two, got {}", self.replay_capacity));
        }
        if !(self.priority_exponent >= 0.0 && self.priority_exponent.is_finite()) {
            return fail(format!("priority_exponent must be >= 0, got {}", self.priority_exponent));
        }
        if !(self.priority_floor > 0.0 && self.priority_floor.is_finite()) {
            return fail(format!("priority_floor must be > 0, got {}", self.priority_floor));
        }
        if !unit(self.epsilon_start) || !unit(self.epsilon_end) {
            return fail("epsilon bounds must be in [0, 1]".into());
        }
        if self.target_sync_period == 0 {
            return fail("target_sync_period must be positive".into());
        }
        if !unit(self.importance_beta) {
            return fail(format!("importance_beta must be in [0, 1], got {}", self.importance_beta));
        }
        Ok(())
    }

    /// Linear decay from `epsilon_start` at episode 0 to `epsilon_end` at
    /// `epsilon_decay_episodes` (0-based), constant afterwards.
    pub fn epsilon(&self, episode: usize) -> f64 {
        if episode >= self.epsilon_decay_episodes {
            return self.epsilon_end;
        }
        let t = episode as f64 / self.epsilon_decay_episodes as f64;
        self.epsilon_start + (self.epsilon_end - self.epsilon_start) * t
    }
}

/// Q-network for a given observation layout.
///
/// Grids: conv 8@4x4/2 relu, conv 16@3x3/2 relu, flatten, dense 64 relu,
/// linear head. Vectors: two dense 64 relu layers and a linear head.
pub fn q_network_shape(input: Dims, actions: usize) -> Result<NetworkShape, DdqnError> {
    let relu = Activation::Relu;
    let head = Layer::Dense {
        units: actions,
        activation: Activation::Linear,
    };
    let layers = match input {
        Dims::Grid { .. } => vec![
            Layer::Conv {
                filters: 8,
                kernel: 4,
                stride: 2,
                activation: relu,
            },
            Layer::Conv {
                filters: 16,
                kernel: 3,
                stride: 2,
                activation: relu,
            },
            Layer::Flatten,
            Layer::Dense {
                units: 64,
                activation: relu,
            },
            head,
        ],
        Dims::Vector(_) => vec![
            Layer::Dense {
                units: 64,
                activation: relu,
            },
            Layer::Dense {
                units: 64,
                activation: relu,
            },
            head,
        ],
    };
    Ok(NetworkShape::new(input, layers)?)
}

/// First index of the maximum; NaN entries never win.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] || values[best].is_nan() {
            best = i;
        }
    }
    best
}

/// `y = r` for terminal transitions, otherwise
/// `y = r + gamma * T(s')[argmax_a Q(s')[a]]`.
pub fn double_q_targets(
    batch: &[&Transition],
    online: &Network,
    target: &Network,
    gamma: f64,
) -> Result<Vec<f64>, DdqnError> {
    if online.shape() != target.shape() {
        return Err(DdqnError::Value("online and target networks differ in shape".into()));
    }
    batch
        .iter()
        .map(|t| {
            if t.done {
                return Ok(t.reward);
            }
            let chosen = argmax(&online.forward(&t.next_state)?);
            let valued = target.forward(&t.next_state)?[chosen];
            Ok(t.reward + gamma * valued)
        })
        .collect()
}

/// Epsilon-greedy: uniform with probability `epsilon`, else the first argmax.
pub fn select_action<R: Rng + ?Sized>(q_values: &[f64], epsilon: f64, rng: &mut R) -> usize {
    if epsilon > 0.0 && rng.random::<f64>() < epsilon {
        rng.random_range(0..q_values.len())
    } else {
        argmax(q_values)
    }
}

/// Overwrites the target parameters with a copy of the online ones.
pub fn sync_target(online: &Network, target: &mut Network) -> Result<(), DdqnError> {
    Ok(copy_params(online, target)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neuralnet::{encode, sgd_step};

    /// Single dense linear layer from a weight matrix with zero bias.
    pub(crate) fn linear_net(weights: Vec<Vec<f64>>) -> Network {
        let inputs = weights[0].len();
        let outputs = weights.len();
        let shape = NetworkShape::mlp(&[inputs, outputs], Activation::Linear, Activation::Linear).unwrap();
        let flat: Vec<f64> = weights.into_iter().flatten().chain(std::iter::repeat_n(0.0, outputs)).collect();
        Network::from_flat(shape, &flat).unwrap()
    }

    fn transition(reward: f64, done: bool) -> Transition {
        Transition {
            state: Arc::from(vec![1.0]),
            action: 0,
            reward,
            next_state: Arc::from(vec![1.0]),
            done,
        }
    }

    #[test]
    fn target_uses_online_argmax_valued_by_target() {
        let online = linear_net(vec![vec![1.0], vec![2.0]]);
        let target = linear_net(vec![vec![5.0], vec![1.0]]);
        let t = transition(1.0, false);
        let y = double_q_targets(&[&t], &online, &target, 0.9).unwrap();
        assert!((y[0] - 1.9).abs() < 1e-12);
        // single-network max over the target would give 1 + 0.9 * 5
        assert!((y[0] - 5.5).abs() > 1.0);
    }

    #[test]
    fn zero_gamma_and_terminal_return_reward() {
        let online = linear_net(vec![vec![3.0], vec![-2.0]]);
        let target = linear_net(vec![vec![7.0], vec![4.0]]);
        let live = transition(0.25, false);
        let dead = transition(-1.5, true);
        assert_eq!(double_q_targets(&[&live, &dead], &online, &target, 0.0).unwrap(), vec![0.25, -1.5]);
        assert_eq!(double_q_targets(&[&dead], &online, &target, 0.99).unwrap(), vec![-1.5]);
    }

    #[test]
    fn greedy_selection_and_ties() {
        let mut rng = crate::seeding::stream(0, &[]);
        assert_eq!(select_action(&[0.1, 0.9, 0.3], 0.0, &mut rng), 1);
        assert_eq!(select_action(&[0.5, 0.5], 0.0, &mut rng), 0);
    }

    #[test]
    fn full_exploration_is_uniform() {
        let mut rng = crate::seeding::stream(3, &[]);
        let n = 10_000;
        let k = 5;
        let mut counts = vec![0usize; k];
        for _ in 0..n {
            counts[select_action(&[0.0, 1.0, 2.0, 3.0, 4.0], 1.0, &mut rng)] += 1;
        }
        let p = 1.0 / k as f64;
        let se = (p * (1.0 - p) / n as f64).sqrt();
        for c in counts {
            assert!(c > 0);
            assert!((c as f64 / n as f64 - p).abs() <= 3.0 * se, "count {c}");
        }
    }

    #[test]
    fn sync_copies_without_aliasing() {
        let mut rng = crate::seeding::stream(5, &[]);
        let shape = q_network_shape(Dims::Vector(4), 3).unwrap();
        let mut online = Network::he_init(shape.clone(), &mut rng);
        let mut target = Network::he_init(shape, &mut rng);
        sync_target(&online, &mut target).unwrap();
        assert_eq!(encode(&target).genes(), encode(&online).genes());
        sync_target(&online, &mut target).unwrap();
        assert_eq!(encode(&target).genes(), encode(&online).genes());

        let frozen = encode(&target);
        let grads = online.backward(&[1.0, 2.0, 3.0, 4.0], &[1.0, 0.0, 0.0]).unwrap();
        sgd_step(&mut online, &grads, 0.1);
        assert_ne!(encode(&online).genes(), frozen.genes());
        assert_eq!(encode(&target).genes(), frozen.genes());
    }

    #[test]
    fn sync_rejects_shape_mismatch() {
        let a = linear_net(vec![vec![1.0], vec![2.0]]);
        let mut b = linear_net(vec![vec![1.0, 0.0], vec![2.0, 0.0]]);
        assert!(sync_target(&a, &mut b).is_err());
    }

    #[test]
    fn action_set_invariants() {
        let set = DiscreteActionSet::default();
        assert_eq!(set.len(), 5);
        let a = ContinuousAction::new(0.0, 1.0, 0.0);
        assert!(DiscreteActionSet::new(vec![a]).is_err());
        assert!(DiscreteActionSet::new(vec![a, a]).is_err());
        assert!(DiscreteActionSet::new(vec![a, ContinuousAction::new(2.0, 0.0, 0.0)]).is_err());
    }

    #[test]
    fn epsilon_schedule_endpoints() {
        let cfg = DdqnConfig {
            epsilon_decay_episodes: 10,
            ..DdqnConfig::default()
        };
        assert_eq!(cfg.epsilon(0), 1.0);
        assert!((cfg.epsilon(5) - 0.525).abs() < 1e-12);
        assert_eq!(cfg.epsilon(10), 0.05);
        assert_eq!(cfg.epsilon(500), 0.05);
        let none = DdqnConfig {
            epsilon_decay_episodes: 0,
            ..cfg
        };
        assert_eq!(none.epsilon(0), 0.05);
    }

    #[test]
    fn config_validation() {
        assert!(DdqnConfig::default().validate().is_ok());
        let bad = [
            DdqnConfig { gamma: 1.5, ..Default::default() },
            DdqnConfig { batch_size: 0, ..Default::default() },
            DdqnConfig { batch_size: 64, replay_capacity: 32, ..Default::default() },
            DdqnConfig { replay_capacity: 100, ..Default::default() },
            DdqnConfig { epsilon_end: -0.1, ..Default::default() },
            DdqnConfig { priority_floor: 0.0, ..Default::default() },
            DdqnConfig { target_sync_period: 0, ..Default::default() },
        ];
        for cfg in bad {
            assert!(cfg.validate().is_err(), "{cfg:?}");
        }
    }

    #[test]
    fn pixel_q_network_shape() {
        let shape = q_network_shape(
            Dims::Grid {
                height: 32,
                width: 32,
                channels: 1,
            },
            5,
        )
        .unwrap();
        assert_eq!(shape.output_len(), 5);
    }
}
