//! Double DQN on a three-state chain with a linear Q-network, compared with
//! the value-iteration table.
//!
//! cargo run --release --example ddqn_chain

use carracing::ddqn::{ChainMdp, DdqnConfig, DdqnTrainer};
use carracing::neuralnet::{Activation, NetworkShape, OptimizerKind};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = DdqnConfig {
        gamma: 0.9,
        learning_rate: 0.05,
        optimizer: OptimizerKind::Sgd,
        batch_size: 16,
        replay_capacity: 512,
        epsilon_end: 0.2,
        epsilon_decay_episodes: 150,
        target_sync_period: 25,
        episodes: 400,
        seed: 11,
        ..DdqnConfig::default()
    };
    let shape = NetworkShape::mlp(&[ChainMdp::STATES, 2], Activation::Linear, Activation::Linear)?;
    let outcome = DdqnTrainer::with_shape(ChainMdp::default(), cfg.clone(), shape)?.run()?;

    let mut v = [0.0f64; 3];
    let mut q = [[0.0f64; 2]; 3];
    for _ in 0..500 {
        for s in 0..3 {
            for a in 0..2 {
                let (next, r, terminal) = ChainMdp::transition(s, a);
                q[s][a] = r + if terminal { 0.0 } else { cfg.gamma * v[next] };
            }
        }
        for s in 0..3 {
            v[s] = q[s][0].max(q[s][1]);
        }
    }

    println!("state  learned (left, right)    value iteration");
    for (s, reference) in q.iter().enumerate() {
        let learned = outcome.online.forward(&ChainMdp::one_hot(s))?;
        println!(
            "s{s}     ({:.4}, {:.4})         ({:.4}, {:.4})",
            learned[0], learned[1], reference[0], reference[1]
        );
    }
    let last = outcome.records.last().expect("episodes ran");
    println!("last episode: {} steps, mean |td| {:.2e}", last.frames, last.mean_td_error);
    Ok(())
}
