//! One prioritized double-Q gradient step.

use rand::Rng;

use crate::neuralnet::{GradientSet, Network, Optimizer};

use super::{double_q_targets, DdqnConfig, DdqnError, SumTree, Transition};

#[derive(Clone, Debug, PartialEq)]
pub struct LearnStats {
    pub leaves: Vec<usize>,
    /// `Q(s, a) - y` per sampled slot, before the update.
    pub td_errors: Vec<f64>,
    pub new_priorities: Vec<f64>,
}

impl LearnStats {
    pub fn mean_abs_td(&self) -> f64 {
        self.td_errors.iter().map(|d| d.abs()).sum::<f64>() / self.td_errors.len() as f64
    }
}

/// Samples one batch (one prefix per equal slice of the total priority),
/// takes a gradient step on `mean_i w_i (Q(s_i, a_i) - y_i)^2`, and resets
/// each sampled leaf's priority to `(|td| + floor)^alpha`.
///
/// Weights `w_i` are 1 unless `cfg.importance_sampling` is set, in which case
/// they are `(len * P(i))^-beta` normalized by the batch maximum.
pub fn learn_step<R: Rng + ?Sized>(
    online: &mut Network,
    target: &Network,
    tree: &mut SumTree<Transition>,
    cfg: &DdqnConfig,
    optimizer: &mut Optimizer,
    rng: &mut R,
) -> Result<LearnStats, DdqnError> {
    let batch_size = cfg.batch_size;
    if tree.len() < batch_size || batch_size == 0 {
        return Err(DdqnError::NotReady {
            len: tree.len(),
            needed: batch_size,
        });
    }
    let total = tree.total();
    let slice = total / batch_size as f64;
    let mut leaves = Vec::with_capacity(batch_size);
    let mut batch = Vec::with_capacity(batch_size);
    let mut probs = Vec::with_capacity(batch_size);
    for i in 0..batch_size {
        let mut prefix = (i as f64 + rng.random::<f64>()) * slice;
        if prefix >= total {
            prefix = total.next_down();
        }
        let (leaf, t, p) = tree.sample(prefix)?;
        leaves.push(leaf);
        batch.push(t);
        probs.push(p / total);
    }

    let weights = if cfg.importance_sampling {
        let n = tree.len() as f64;
        let raw: Vec<f64> = probs.iter().map(|p| (n * p).powf(-cfg.importance_beta)).collect();
        let max = raw.iter().cloned().fold(f64::MIN_POSITIVE, f64::max);
        raw.into_iter().map(|w| w / max).collect()
    } else {
        vec![1.0; batch_size]
    };

    let targets = double_q_targets(&batch, online, target, cfg.gamma)?;
    let mut grads = GradientSet::zeros(online.shape());
    let mut td_errors = Vec::with_capacity(batch_size);
    let mut upstream = vec![0.0; online.shape().output_len()];
    for ((t, y), w) in batch.iter().zip(&targets).zip(&weights) {
        let q = online.forward(&t.state)?;
        let delta = q[t.action] - y;
        td_errors.push(delta);
        upstream.fill(0.0);
        upstream[t.action] = 2.0 * w * delta / batch_size as f64;
        online.accumulate_backward(&t.state, &upstream, &mut grads)?;
    }
    optimizer.step(online, &grads);

    let new_priorities: Vec<f64> = td_errors
        .iter()
        .map(|d| (d.abs() + cfg.priority_floor).powf(cfg.priority_exponent))
        .collect();
    for (&leaf, &p) in leaves.iter().zip(&new_priorities) {
        tree.update(leaf, p)?;
    }
    Ok(LearnStats {
        leaves,
        td_errors,
        new_priorities,
    })
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::neuralnet::{encode, Activation, NetworkShape, OptimizerKind};
    use crate::seeding;

    fn one_param_net(w: f64) -> Network {
        let shape = NetworkShape::new(
            crate::neuralnet::Dims::Vector(1),
            vec![crate::neuralnet::Layer::Dense {
                units: 1,
                activation: Activation::Linear,
            }],
        )
        .unwrap();
        Network::from_flat(shape, &[w, 0.0]).unwrap()
    }

    fn cfg(batch: usize, lr: f64) -> DdqnConfig {
        DdqnConfig {
            batch_size: batch,
            replay_capacity: 16,
            learning_rate: lr,
            optimizer: OptimizerKind::Sgd,
            ..DdqnConfig::default()
        }
    }

    #[test]
    fn not_ready_below_batch_size() {
        let mut tree = SumTree::new(16).unwrap();
        let mut online = one_param_net(1.0);
        let target = online.clone();
        let c = cfg(4, 0.1);
        let mut opt = Optimizer::new(c.optimizer, c.learning_rate);
        let mut rng = seeding::stream(0, &[]);
        let t = Transition {
            state: Arc::from(vec![1.0]),
            action: 0,
            reward: 0.0,
            next_state: Arc::from(vec![1.0]),
            done: true,
        };
        tree.push(t, 1.0).unwrap();
        assert!(matches!(
            learn_step(&mut online, &target, &mut tree, &c, &mut opt, &mut rng),
            Err(DdqnError::NotReady { len: 1, needed: 4 })
        ));
    }

    #[test]
    fn single_parameter_step_matches_closed_form() {
        // Q(s) = w * s with s = 2, w = 0.5, terminal reward 3:
        // td = 1 - 3 = -2, d(td^2)/dw = 2 * td * s = -8.
        let (w, s, r, lr) = (0.5, 2.0, 3.0, 0.01);
        let mut tree = SumTree::new(1).unwrap();
        tree.push(
            Transition {
                state: Arc::from(vec![s]),
                action: 0,
                reward: r,
                next_state: Arc::from(vec![0.0]),
                done: true,
            },
            1.0,
        )
        .unwrap();
        let mut online = one_param_net(w);
        let target = online.clone();
        let c = DdqnConfig {
            replay_capacity: 1,
            ..cfg(1, lr)
        };
        let mut opt = Optimizer::new(c.optimizer, c.learning_rate);
        let mut rng = seeding::stream(0, &[]);
        let stats = learn_step(&mut online, &target, &mut tree, &c, &mut opt, &mut rng).unwrap();
        let td = w * s - r;
        assert_eq!(stats.td_errors, vec![td]);
        let expected = w - lr * (2.0 * td * s);
        assert!((online.to_flat()[0] - expected).abs() < 1e-15);
        assert!((tree.priority(0) - (td.abs() + c.priority_floor).powf(c.priority_exponent)).abs() < 1e-15);
    }

    #[test]
    fn zero_learning_rate_only_moves_priorities() {
        let mut rng = seeding::stream(9, &[]);
        let mut tree = SumTree::new(16).unwrap();
        for i in 0..10 {
            let s = i as f64 / 10.0;
            tree.push(
                Transition {
                    state: Arc::from(vec![s]),
                    action: 0,
                    reward: s * 3.0 - 1.0,
                    next_state: Arc::from(vec![s + 0.1]),
                    done: i % 3 == 0,
                },
                1.0,
            )
            .unwrap();
        }
        let mut online = one_param_net(0.7);
        let target = one_param_net(-0.2);
        let before = encode(&online);
        let c = cfg(4, 0.0);
        let mut opt = Optimizer::new(OptimizerKind::Adam, 0.0);
        let stats = learn_step(&mut online, &target, &mut tree, &c, &mut opt, &mut rng).unwrap();
        assert_eq!(encode(&online), before);
        for (&leaf, &d) in stats.leaves.iter().zip(&stats.td_errors) {
            assert!(tree.priority(leaf) > 0.0);
            assert!(d != 0.0);
            let expected = (d.abs() + c.priority_floor).powf(c.priority_exponent);
            assert!((tree.priority(leaf) - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn stratified_batch_covers_every_slice() {
        let mut rng = seeding::stream(2, &[]);
        let mut tree = SumTree::new(4).unwrap();
        for i in 0..4 {
            tree.push(
                Transition {
                    state: Arc::from(vec![i as f64]),
                    action: 0,
                    reward: 0.0,
                    next_state: Arc::from(vec![0.0]),
                    done: true,
                },
                1.0,
            )
            .unwrap();
        }
        let mut online = one_param_net(0.0);
        let target = online.clone();
        let c = DdqnConfig {
            replay_capacity: 4,
            ..cfg(4, 0.0)
        };
        let mut opt = Optimizer::new(c.optimizer, 0.0);
        let stats = learn_step(&mut online, &target, &mut tree, &c, &mut opt, &mut rng).unwrap();
        assert_eq!(stats.leaves, vec![0, 1, 2, 3]);
    }
}
