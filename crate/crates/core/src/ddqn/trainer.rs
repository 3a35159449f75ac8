//! Episode loop: epsilon-greedy rollout, replay insertion, one learning step
//! per environment step once the buffer is warm, periodic hard target sync.

use std::sync::Arc;

use crate::environment::{generate_track, EnvConfig, TrackConfig};
use crate::neuralnet::{Network, NetworkShape, Optimizer};
use crate::seeding::{self, Rng};

use super::{
    learn_step, q_network_shape, select_action, sync_target, DdqnConfig, DdqnError, DiscreteActionSet, DiscreteEnv,
    RacingEnv, SumTree, Transition,
};

/// One row of the training history. Episodes are numbered from 0.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpisodeRecord {
    pub episode: usize,
    pub reward: f64,
    pub frames: usize,
    pub tiles: usize,
    pub epsilon: f64,
    /// Mean `|td|` over the episode's learning steps; 0 when none ran.
    pub mean_td_error: f64,
}

pub struct DdqnTrainer<E> {
    env: E,
    cfg: DdqnConfig,
    online: Network,
    target: Network,
    optimizer: Optimizer,
    replay: SumTree<Transition>,
    rng: Rng,
    episode: usize,
    steps: usize,
}

impl<E: DiscreteEnv> DdqnTrainer<E> {
    /// Uses the default Q-network for the environment's observation layout.
    pub fn new(env: E, cfg: DdqnConfig) -> Result<Self, DdqnError> {
        let shape = q_network_shape(env.observation_dims(), env.action_count())?;
        Self::with_shape(env, cfg, shape)
    }

    pub fn with_shape(env: E, cfg: DdqnConfig, shape: NetworkShape) -> Result<Self, DdqnError> {
        cfg.validate()?;
        if shape.input() != env.observation_dims() || shape.output_len() != env.action_count() {
            return Err(DdqnError::Config(
                "network shape does not match the environment's observations and actions".into(),
            ));
        }
        let online = Network::he_init(shape, &mut seeding::stream(cfg.seed, &[1]));
        Ok(Self {
            target: online.clone(),
            optimizer: Optimizer::new(cfg.optimizer, cfg.learning_rate),
            replay: SumTree::new(cfg.replay_capacity)?,
            rng: seeding::stream(cfg.seed, &[2]),
            env,
            online,
            cfg,
            episode: 0,
            steps: 0,
        })
    }

    pub fn online(&self) -> &Network {
        &self.online
    }

    pub fn target(&self) -> &Network {
        &self.target
    }

    pub fn replay(&self) -> &SumTree<Transition> {
        &self.replay
    }

    pub fn config(&self) -> &DdqnConfig {
        &self.cfg
    }

    pub fn env(&self) -> &E {
        &self.env
    }

    /// Episodes completed so far.
    pub fn episode(&self) -> usize {
        self.episode
    }

    /// Environment steps taken across all episodes.
    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn run_episode(&mut self) -> Result<EpisodeRecord, DdqnError> {
        let epsilon = self.cfg.epsilon(self.episode);
        let warm = self.cfg.learn_start.max(self.cfg.batch_size);
        let mut state: Arc<[f64]> = self.env.reset().into();
        let mut reward = 0.0;
        let mut frames = 0;
        let mut td_sum = 0.0;
        let mut learns = 0usize;
        loop {
            let q = self.online.forward(&state)?;
            let action = select_action(&q, epsilon, &mut self.rng);
            let step = self.env.step(action)?;
            reward += step.reward;
            frames += 1;
            self.steps += 1;

            let next_state: Arc<[f64]> = step.observation.into();
            let priority = match self.replay.max_priority() {
                p if p > 0.0 => p,
                _ => 1.0,
            };
            self.replay.push(
                Transition {
                    state,
                    action,
                    reward: step.reward,
                    next_state: Arc::clone(&next_state),
                    done: step.terminal,
                },
                priority,
            )?;

            if self.steps >= warm && self.replay.len() >= self.cfg.batch_size {
                let stats = learn_step(
                    &mut self.online,
                    &self.target,
                    &mut self.replay,
                    &self.cfg,
                    &mut self.optimizer,
                    &mut self.rng,
                )?;
                td_sum += stats.mean_abs_td();
                learns += 1;
            }
            if self.steps.is_multiple_of(self.cfg.target_sync_period) {
                sync_target(&self.online, &mut self.target)?;
            }
            if step.terminal || step.truncated {
                break;
            }
            state = next_state;
        }
        let record = EpisodeRecord {
            episode: self.episode,
            reward: self.env.episode_return().unwrap_or(reward),
            frames,
            tiles: self.env.progress(),
            epsilon,
            mean_td_error: if learns > 0 { td_sum / learns as f64 } else { 0.0 },
        };
        self.episode += 1;
        Ok(record)
    }

    /// Runs the remaining configured episodes.
    pub fn run(mut self) -> Result<DdqnOutcome, DdqnError> {
        let mut records = Vec::with_capacity(self.cfg.episodes.saturating_sub(self.episode));
        while self.episode < self.cfg.episodes {
            records.push(self.run_episode()?);
        }
        Ok(self.finish(records))
    }

    pub fn finish(self, records: Vec<EpisodeRecord>) -> DdqnOutcome {
        DdqnOutcome {
            online: self.online,
            target: self.target,
            records,
        }
    }
}

#[derive(Clone, Debug)]
pub struct DdqnOutcome {
    pub online: Network,
    pub target: Network,
    pub records: Vec<EpisodeRecord>,
}

/// Trains on the track described by `track_cfg`, one episode per configured
/// episode, all on that same track.
pub fn train_ddqn(
    cfg: &DdqnConfig,
    track_cfg: &TrackConfig,
    env_cfg: &EnvConfig,
    actions: DiscreteActionSet,
) -> Result<DdqnOutcome, DdqnError> {
    let track = generate_track(track_cfg)?;
    let env = RacingEnv::new(track, env_cfg.clone(), actions)?;
    DdqnTrainer::new(env, cfg.clone())?.run()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ddqn::ChainMdp;
    use crate::neuralnet::{encode, Activation, OptimizerKind};

    fn chain_cfg() -> DdqnConfig {
        DdqnConfig {
            gamma: 0.9,
            learning_rate: 0.05,
            optimizer: OptimizerKind::Sgd,
            batch_size: 16,
            replay_capacity: 512,
            epsilon_decay_episodes: 150,
            epsilon_end: 0.2,
            target_sync_period: 25,
            learn_start: 16,
            episodes: 400,
            seed: 11,
            ..DdqnConfig::default()
        }
    }

    fn chain_shape() -> NetworkShape {
        NetworkShape::mlp(&[ChainMdp::STATES, 2], Activation::Linear, Activation::Linear).unwrap()
    }

    /// Value iteration on the chain's transition table, independent of the
    /// trainer.
    fn chain_value_iteration(gamma: f64) -> [[f64; 2]; 3] {
        let mut q = [[0.0f64; 2]; 3];
        for _ in 0..1000 {
            let mut next = q;
            for (s, row) in next.iter_mut().enumerate() {
                for (a, value) in row.iter_mut().enumerate() {
                    let (s2, r, terminal) = ChainMdp::transition(s, a);
                    *value = r + if terminal { 0.0 } else { gamma * q[s2][0].max(q[s2][1]) };
                }
            }
            q = next;
        }
        q
    }

    #[test]
    fn value_iteration_reference() {
        let q = chain_value_iteration(0.9);
        let expected = [[0.729, 0.81], [0.729, 0.9], [0.81, 1.0]];
        for s in 0..3 {
            for a in 0..2 {
                assert!((q[s][a] - expected[s][a]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn chain_q_values_converge() {
        let cfg = chain_cfg();
        let out = DdqnTrainer::with_shape(ChainMdp::default(), cfg.clone(), chain_shape())
            .unwrap()
            .run()
            .unwrap();
        assert_eq!(out.records.len(), cfg.episodes);
        let reference = chain_value_iteration(cfg.gamma);
        for (s, row) in reference.iter().enumerate() {
            let q = out.online.forward(&ChainMdp::one_hot(s)).unwrap();
            for a in 0..2 {
                assert!((q[a] - row[a]).abs() <= 1e-2, "state {s} action {a}: {} vs {}", q[a], row[a]);
            }
        }
    }

    #[test]
    fn records_follow_schedule_and_are_reproducible() {
        let cfg = DdqnConfig {
            episodes: 30,
            epsilon_decay_episodes: 10,
            ..chain_cfg()
        };
        let run = || {
            DdqnTrainer::with_shape(ChainMdp::default(), cfg.clone(), chain_shape())
                .unwrap()
                .run()
                .unwrap()
        };
        let a = run();
        let b = run();
        assert_eq!(a.records, b.records);
        assert_eq!(encode(&a.online), encode(&b.online));
        assert_eq!(a.records.len(), 30);
        for r in &a.records[10..] {
            assert_eq!(r.epsilon, cfg.epsilon_end);
        }
        assert_eq!(a.records[0].epsilon, cfg.epsilon_start);
    }

    #[test]
    fn target_is_constant_between_syncs() {
        let cfg = DdqnConfig {
            target_sync_period: 1_000_000,
            episodes: 5,
            ..chain_cfg()
        };
        let mut trainer = DdqnTrainer::with_shape(ChainMdp::default(), cfg, chain_shape()).unwrap();
        let frozen = encode(trainer.target());
        let start = encode(trainer.online());
        for _ in 0..5 {
            trainer.run_episode().unwrap();
            assert_eq!(encode(trainer.target()), frozen);
        }
        assert_ne!(encode(trainer.online()), start);
    }

    #[test]
    fn racing_smoke_run() {
        let cfg = DdqnConfig {
            episodes: 2,
            batch_size: 8,
            learn_start: 8,
            replay_capacity: 256,
            target_sync_period: 50,
            ..DdqnConfig::default()
        };
        let env = EnvConfig {
            max_frames: 60,
            ..EnvConfig::default()
        };
        let out = train_ddqn(&cfg, &TrackConfig::default(), &env, DiscreteActionSet::default()).unwrap();
        assert_eq!(out.records.len(), 2);
        assert!(out.records.iter().all(|r| r.frames <= 60 && r.tiles >= 1));
        assert!(out.online.is_finite());
    }
}
