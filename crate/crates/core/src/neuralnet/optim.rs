use super::network::{GradientSet, Network};

/// Plain gradient descent: `p <- p - lr * g` for every parameter.
pub fn sgd_step(net: &mut Network, grads: &GradientSet, lr: f64) {
    for (p, g) in net.params_mut().zip(grads.iter()) {
        *p -= lr * g;
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OptimizerKind {
    Sgd,
    Adam,
}

/// First-order optimizer with whatever state it needs between steps.
#[derive(Clone, Debug)]
pub enum Optimizer {
    Sgd {
        lr: f64,
    },
    Adam {
        lr: f64,
        beta1: f64,
        beta2: f64,
        eps: f64,
        t: u64,
        m: Vec<f64>,
        v: Vec<f64>,
    },
}

impl Optimizer {
    pub fn new(kind: OptimizerKind, lr: f64) -> Self {
        match kind {
            OptimizerKind::Sgd => Optimizer::Sgd { lr },
            OptimizerKind::Adam => Optimizer::Adam {
                lr,
                beta1: 0.9,
                beta2: 0.999,
                eps: 1e-8,
                t: 0,
                m: Vec::new(),
                v: Vec::new(),
            },
        }
    }

    pub fn step(&mut self, net: &mut Network, grads: &GradientSet) {
        match self {
            Optimizer::Sgd { lr } => sgd_step(net, grads, *lr),
            Optimizer::Adam {
                lr,
                beta1,
                beta2,
                eps,
                t,
                m,
                v,
            } => {
                if m.is_empty() {
                    let n = net.shape().param_count();
                    *m = vec![0.0; n];
                    *v = vec![0.0; n];
                }
                *t += 1;
                let c1 = 1.0 - beta1.powi(*t as i32);
                let c2 = 1.0 - beta2.powi(*t as i32);
                for (((p, g), mi), vi) in net.params_mut().zip(grads.iter()).zip(m.iter_mut()).zip(v.iter_mut()) {
                    *mi = *beta1 * *mi + (1.0 - *beta1) * g;
                    *vi = *beta2 * *vi + (1.0 - *beta2) * g * g;
                    *p -= *lr * (*mi / c1) / ((*vi / c2).sqrt() + *eps);
                }
            }
        }
    }
}
