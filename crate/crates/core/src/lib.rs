//! A car-racing workbench: a deterministic tile-track driving environment
//! and two trainers that learn to drive it.
//!
//! * [`environment`] simulates a kinematic bicycle car on a closed track made
//!   of `N` tiles. Every frame costs `0.1` points and every newly visited tile
//!   pays `1000 / N`.
//! * [`neuralnet`] holds dense and convolutional networks with exact
//!   reverse-mode gradients and a flat genome encoding.
//! * [`evolution`] evolves genome-encoded perceptron policies with elitist
//!   top-`n` selection, segment crossover and bounded gaussian mutation.
//! * [`ddqn`] trains a double deep Q-network from prioritized replay backed
//!   by a sum tree.
//! * [`harness`] parses experiment configs, runs training, writes CSV
//!   histories and checkpoints and evaluates saved policies.

pub mod ddqn;
pub mod environment;
pub mod evolution;
pub mod harness;
pub mod neuralnet;
pub mod seeding;

pub use environment::{ContinuousAction, Env, EnvConfig, Track, TrackConfig};
pub use neuralnet::{Genome, Network, NetworkShape};
