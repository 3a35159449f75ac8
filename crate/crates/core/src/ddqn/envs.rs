//! Discrete-action environments the trainer can drive.

use crate::environment::{Env, EnvConfig, Observation, ObservationMode, Termination, Track};
use crate::neuralnet::Dims;

use super::{DdqnError, DiscreteActionSet};

#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteStep {
    pub observation: Vec<f64>,
    pub reward: f64,
    /// The task ended in a terminal state; no bootstrapping past it.
    pub terminal: bool,
    /// The episode stopped for a reason outside the task (time limit).
    pub truncated: bool,
}

pub trait DiscreteEnv {
    fn observation_dims(&self) -> Dims;
    fn action_count(&self) -> usize;
    fn reset(&mut self) -> Vec<f64>;
    fn step(&mut self, action: usize) -> Result<DiscreteStep, DdqnError>;
    /// Progress measure reported per episode; tiles for the racing task.
    fn progress(&self) -> usize {
        0
    }

    /// Exact episode return when the environment can compute one from
    /// counts; otherwise the trainer sums step rewards.
    fn episode_return(&self) -> Option<f64> {
        None
    }
}

/// The racing environment behind a fixed discrete action set. Feature
/// observations are normalized the same way as for the evolved policy.
#[derive(Clone, Debug)]
pub struct RacingEnv {
    env: Env,
    actions: DiscreteActionSet,
}

impl RacingEnv {
    pub fn new(track: Track, config: EnvConfig, actions: DiscreteActionSet) -> Result<Self, DdqnError> {
        Ok(Self {
            env: Env::new(track, config)?,
            actions,
        })
    }

    pub fn env(&self) -> &Env {
        &self.env
    }

    pub fn actions(&self) -> &DiscreteActionSet {
        &self.actions
    }

    fn encode(&self, obs: Observation) -> Vec<f64> {
        match obs {
            Observation::Features(f) => f.normalized(self.env.track().width()),
            Observation::Pixels(p) => p.data,
        }
    }
}

impl DiscreteEnv for RacingEnv {
    fn observation_dims(&self) -> Dims {
        match &self.env.config().observation {
            ObservationMode::Features(f) => Dims::Vector(6 + f.samples),
            ObservationMode::Pixels(p) => Dims::Grid {
                height: p.height,
                width: p.width,
                channels: p.channels,
            },
        }
    }

    fn action_count(&self) -> usize {
        self.actions.len()
    }

    fn reset(&mut self) -> Vec<f64> {
        let obs = self.env.reset();
        self.encode(obs)
    }

    fn step(&mut self, action: usize) -> Result<DiscreteStep, DdqnError> {
        let Some(a) = self.actions.get(action) else {
            return Err(DdqnError::Value(format!("action {action} is out of range")));
        };
        let out = self.env.step(&a.clone())?;
        Ok(DiscreteStep {
            reward: out.reward,
            terminal: out.termination.is_some_and(Termination::is_terminal),
            truncated: out.termination == Some(Termination::TimeLimit),
            observation: self.encode(out.observation),
        })
    }

    fn progress(&self) -> usize {
        self.env.tiles_visited()
    }

    fn episode_return(&self) -> Option<f64> {
        Some(self.env.episode_return())
    }
}

/// Three-state deterministic chain with one-hot observations. Action 0 moves
/// left (staying put at the left end), action 1 moves right; moving right
/// from the last state pays 1 and ends the episode. Every episode starts in
/// state 0 and is cut off after `max_steps` steps.
#[derive(Clone, Debug)]
pub struct ChainMdp {
    state: usize,
    steps: usize,
    max_steps: usize,
}

impl ChainMdp {
    pub const STATES: usize = 3;

    pub fn new(max_steps: usize) -> Self {
        Self {
            state: 0,
            steps: 0,
            max_steps,
        }
    }

    pub fn one_hot(state: usize) -> Vec<f64> {
        let mut v = vec![0.0; Self::STATES];
        v[state] = 1.0;
        v
    }

    /// Deterministic transition: `(next_state, reward, terminal)`.
    pub fn transition(state: usize, action: usize) -> (usize, f64, bool) {
        match action {
            0 => (state.saturating_sub(1), 0.0, false),
            _ if state + 1 == Self::STATES => (state, 1.0, true),
            _ => (state + 1, 0.0, false),
        }
    }
}

impl Default for ChainMdp {
    fn default() -> Self {
        Self::new(20)
    }
}

impl DiscreteEnv for ChainMdp {
    fn observation_dims(&self) -> Dims {
        Dims::Vector(Self::STATES)
    }

    fn action_count(&self) -> usize {
        2
    }

    fn reset(&mut self) -> Vec<f64> {
        self.state = 0;
        self.steps = 0;
        Self::one_hot(0)
    }

    fn step(&mut self, action: usize) -> Result<DiscreteStep, DdqnError> {
        if action >= 2 {
            return Err(DdqnError::Value(format!("action {action} is out of range")));
        }
        let (next, reward, terminal) = Self::transition(self.state, action);
        self.state = next;
        self.steps += 1;
        Ok(DiscreteStep {
            observation: Self::one_hot(next),
            reward,
            terminal,
            truncated: !terminal && self.steps >= self.max_steps,
        })
    }

    fn progress(&self) -> usize {
        self.state
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::environment::{generate_track, PixelConfig, TrackConfig};

    #[test]
    fn chain_dynamics() {
        let mut env = ChainMdp::new(5);
        assert_eq!(env.reset(), vec![1.0, 0.0, 0.0]);
        let s = env.step(0).unwrap();
        assert_eq!(s.observation, vec![1.0, 0.0, 0.0]);
        env.step(1).unwrap();
        env.step(1).unwrap();
        let last = env.step(1).unwrap();
        assert!(last.terminal && !last.truncated);
        assert_eq!(last.reward, 1.0);
        env.reset();
        for _ in 0..4 {
            assert!(!env.step(0).unwrap().truncated);
        }
        assert!(env.step(0).unwrap().truncated);
        assert!(env.step(2).is_err());
    }

    #[test]
    fn racing_adapter_reports_dims_and_truncation() {
        let track = generate_track(&TrackConfig::default()).unwrap();
        let cfg = EnvConfig {
            max_frames: 3,
            ..EnvConfig::default()
        };
        let mut env = RacingEnv::new(track.clone(), cfg, DiscreteActionSet::default()).unwrap();
        assert_eq!(env.observation_dims(), Dims::Vector(11));
        assert_eq!(env.reset().len(), 11);
        let coast = 4;
        env.step(coast).unwrap();
        env.step(coast).unwrap();
        let last = env.step(coast).unwrap();
        assert!(last.truncated && !last.terminal);
        assert!(env.step(9).is_err());

        let pixels = EnvConfig {
            observation: ObservationMode::Pixels(PixelConfig::default()),
            ..EnvConfig::default()
        };
        let mut env = RacingEnv::new(track, pixels, DiscreteActionSet::default()).unwrap();
        assert_eq!(env.observation_dims().len(), env.reset().len());
    }
}
