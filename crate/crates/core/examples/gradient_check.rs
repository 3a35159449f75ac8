//! Compares reverse-mode gradients with central finite differences on a
//! small convolutional network.
//!
//! cargo run --example gradient_check

use carracing::neuralnet::{Activation, Dims, Layer, Network, NetworkShape};
use carracing::seeding;
use rand::Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let shape = NetworkShape::new(
        Dims::Grid {
            height: 9,
            width: 9,
            channels: 2,
        },
        vec![
            Layer::Conv {
                filters: 3,
                kernel: 3,
                stride: 2,
                activation: Activation::Tanh,
            },
            Layer::Flatten,
            Layer::Dense {
                units: 4,
                activation: Activation::Linear,
            },
        ],
    )?;
    let mut rng = seeding::stream(2024, &[]);
    let net = Network::he_init(shape.clone(), &mut rng);
    let input: Vec<f64> = (0..shape.input().len()).map(|_| rng.random_range(-1.0..1.0)).collect();
    let upstream: Vec<f64> = (0..shape.output_len()).map(|_| rng.random_range(-1.0..1.0)).collect();
    let objective = |n: &Network| -> f64 {
        n.forward(&input).unwrap().iter().zip(&upstream).map(|(y, u)| y * u).sum()
    };

    let analytic = net.backward(&input, &upstream)?.to_flat();
    let params = net.to_flat();
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for i in 0..params.len() {
        let mut p = params.clone();
        p[i] += h;
        let up = objective(&Network::from_flat(shape.clone(), &p)?);
        p[i] -= 2.0 * h;
        let down = objective(&Network::from_flat(shape.clone(), &p)?);
        let numeric = (up - down) / (2.0 * h);
        let rel = (numeric - analytic[i]).abs() / numeric.abs().max(analytic[i].abs()).max(1e-6);
        worst = worst.max(rel);
    }
    println!("{} parameters, max relative error {worst:.2e}", params.len());
    Ok(())
}
