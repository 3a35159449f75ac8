use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::shape::{Activation, Dims, Layer, NetworkShape};
use super::NetError;

/// Weights and biases of one layer. Dense weights are `[out][in]`, conv
/// kernels are `[filter][ky][kx][channel]`, both row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct LayerParams {
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Network {
    shape: NetworkShape,
    layers: Vec<LayerParams>,
}

/// One gradient tensor per parameter tensor of a [`Network`].
#[derive(Clone, Debug, PartialEq)]
pub struct GradientSet {
    pub layers: Vec<LayerParams>,
}

impl GradientSet {
    pub fn zeros(shape: &NetworkShape) -> Self {
        let layers = (0..shape.layers().len())
            .map(|i| {
                let (w, b) = shape.layer_param_counts(i);
                LayerParams {
                    weights: vec![0.0; w],
                    bias: vec![0.0; b],
                }
            })
            .collect();
        Self { layers }
    }

    pub fn iter(&self) -> impl Iterator<Item = &f64> {
        self.layers.iter().flat_map(|l| l.weights.iter().chain(l.bias.iter()))
    }

    fn iter_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.layers
            .iter_mut()
            .flat_map(|l| l.weights.iter_mut().chain(l.bias.iter_mut()))
    }

    /// Gradients flattened in genome order.
    pub fn to_flat(&self) -> Vec<f64> {
        self.iter().copied().collect()
    }

    pub fn scale(&mut self, factor: f64) {
        self.iter_mut().for_each(|g| *g *= factor);
    }

    pub fn add(&mut self, other: &GradientSet) {
        for (a, b) in self.iter_mut().zip(other.iter()) {
            *a += *b;
        }
    }

    pub fn is_zero(&self) -> bool {
        self.iter().all(|&g| g == 0.0)
    }
}

impl Network {
    /// All-zero parameters.
    pub fn zeros(shape: NetworkShape) -> Self {
        let layers = GradientSet::zeros(&shape).layers;
        Self { shape, layers }
    }

    /// He-style initialization: weights drawn from `N(0, 2 / fan_in)`, biases zero.
    pub fn he_init<R: Rng + ?Sized>(shape: NetworkShape, rng: &mut R) -> Self {
        let mut net = Self::zeros(shape);
        for i in 0..net.layers.len() {
            let fan_in = match (net.shape.layers()[i], net.shape.layer_input(i)) {
                (Layer::Dense { .. }, d) => d.len(),
                (Layer::Conv { kernel, .. }, Dims::Grid { channels, .. }) => kernel * kernel * channels,
                _ => continue,
            };
            let normal = Normal::new(0.0, (2.0 / fan_in as f64).sqrt()).expect("positive std-dev");
            for w in &mut net.layers[i].weights {
                *w = normal.sample(rng);
            }
        }
        net
    }

    /// Builds a network from parameters in genome order (per layer: weights
    /// then biases).
    pub fn from_flat(shape: NetworkShape, params: &[f64]) -> Result<Self, NetError> {
        let expected = shape.param_count();
        if params.len() != expected {
            return Err(NetError::ShapeMismatch {
                what: "genome length",
                expected,
                found: params.len(),
            });
        }
        let mut net = Self::zeros(shape);
        for (slot, &value) in net.params_mut().zip(params) {
            *slot = value;
        }
        Ok(net)
    }

    pub fn shape(&self) -> &NetworkShape {
        &self.shape
    }

    pub fn layers(&self) -> &[LayerParams] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [LayerParams] {
        &mut self.layers
    }

    pub fn params(&self) -> impl Iterator<Item = &f64> {
        self.layers.iter().flat_map(|l| l.weights.iter().chain(l.bias.iter()))
    }

    pub fn params_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.layers
            .iter_mut()
            .flat_map(|l| l.weights.iter_mut().chain(l.bias.iter_mut()))
    }

    pub fn to_flat(&self) -> Vec<f64> {
        self.params().copied().collect()
    }

    pub fn is_finite(&self) -> bool {
        self.params().all(|p| p.is_finite())
    }

    fn check_input(&self, input: &[f64]) -> Result<(), NetError> {
        let expected = self.shape.input().len();
        if input.len() != expected {
            return Err(NetError::ShapeMismatch {
                what: "input length",
                expected,
                found: input.len(),
            });
        }
        Ok(())
    }

    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>, NetError> {
        self.check_input(input)?;
        let mut current = input.to_vec();
        for i in 0..self.layers.len() {
            current = self.layer_forward(i, &current);
        }
        Ok(current)
    }

    /// Outputs of every layer, starting with the input itself.
    fn forward_trace(&self, input: &[f64]) -> Vec<Vec<f64>> {
        let mut trace = Vec::with_capacity(self.layers.len() + 1);
        trace.push(input.to_vec());
        for i in 0..self.layers.len() {
            let next = self.layer_forward(i, trace.last().unwrap());
            trace.push(next);
        }
        trace
    }

    fn layer_forward(&self, i: usize, x: &[f64]) -> Vec<f64> {
        let params = &self.layers[i];
        match (self.shape.layers()[i], self.shape.layer_input(i)) {
            (Layer::Dense { units, activation }, _) => {
                let n_in = x.len();
                (0..units)
                    .map(|o| {
                        let row = &params.weights[o * n_in..(o + 1) * n_in];
                        let z = params.bias[o] + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>();
                        activation.apply(z)
                    })
                    .collect()
            }
            (
                Layer::Conv {
                    filters,
                    kernel,
                    stride,
                    activation,
                },
                Dims::Grid {
                    width, channels, ..
                },
            ) => {
                let Dims::Grid {
                    height: oh,
                    width: ow,
                    ..
                } = self.shape.layer_input(i + 1)
                else {
                    unreachable!("conv output is a grid")
                };
                let mut out = vec![0.0; oh * ow * filters];
                let patch = kernel * channels;
                for oy in 0..oh {
                    for ox in 0..ow {
                        for f in 0..filters {
                            let mut z = params.bias[f];
                            let kbase = f * kernel * patch;
                            for ky in 0..kernel {
                                let row = ((oy * stride + ky) * width + ox * stride) * channels;
                                let xs = &x[row..row + patch];
                                let ws = &params.weights[kbase + ky * patch..kbase + (ky + 1) * patch];
                                z += ws.iter().zip(xs).map(|(w, v)| w * v).sum::<f64>();
                            }
                            out[(oy * ow + ox) * filters + f] = activation.apply(z);
                        }
                    }
                }
                out
            }
            (Layer::Flatten, _) => x.to_vec(),
            (Layer::Conv { .. }, Dims::Vector(_)) => unreachable!("validated by NetworkShape"),
        }
    }

    /// Exact reverse-mode gradient of `upstream . forward(input)` with respect
    /// to every parameter.
    pub fn backward(&self, input: &[f64], upstream: &[f64]) -> Result<GradientSet, NetError> {
        let mut grads = GradientSet::zeros(&self.shape);
        self.accumulate_backward(input, upstream, &mut grads)?;
        Ok(grads)
    }

    /// Like [`Network::backward`] but adds into an existing gradient set.
    pub fn accumulate_backward(
        &self,
        input: &[f64],
        upstream: &[f64],
        grads: &mut GradientSet,
    ) -> Result<(), NetError> {
        self.check_input(input)?;
        if upstream.len() != self.shape.output_len() {
            return Err(NetError::ShapeMismatch {
                what: "upstream gradient length",
                expected: self.shape.output_len(),
                found: upstream.len(),
            });
        }
        let trace = self.forward_trace(input);
        let mut delta = upstream.to_vec();
        for i in (0..self.layers.len()).rev() {
            delta = self.layer_backward(i, &trace[i], &trace[i + 1], &delta, &mut grads.layers[i]);
        }
        Ok(())
    }

    /// Accumulates parameter gradients of layer `i` and returns the gradient
    /// with respect to the layer's input.
    fn layer_backward(
        &self,
        i: usize,
        x: &[f64],
        y: &[f64],
        dy: &[f64],
        grad: &mut LayerParams,
    ) -> Vec<f64> {
        let params = &self.layers[i];
        let dz = |activation: Activation| -> Vec<f64> {
            dy.iter()
                .zip(y)
                .map(|(g, out)| g * activation.derivative_from_output(*out))
                .collect()
        };
        match (self.shape.layers()[i], self.shape.layer_input(i)) {
            (Layer::Dense { units, activation }, _) => {
                let dz = dz(activation);
                let n_in = x.len();
                let mut dx = vec![0.0; n_in];
                for o in 0..units {
                    let g = dz[o];
                    if g == 0.0 {
                        continue;
                    }
                    grad.bias[o] += g;
                    let row = o * n_in;
                    for k in 0..n_in {
                        grad.weights[row + k] += g * x[k];
                        dx[k] += g * params.weights[row + k];
                    }
                }
                dx
            }
            (
                Layer::Conv {
                    filters,
                    kernel,
                    stride,
                    activation,
                },
                Dims::Grid {
                    width, channels, ..
                },
            ) => {
                let dz = dz(activation);
                let Dims::Grid {
                    height: oh,
                    width: ow,
                    ..
                } = self.shape.layer_input(i + 1)
                else {
                    unreachable!("conv output is a grid")
                };
                let mut dx = vec![0.0; x.len()];
                let patch = kernel * channels;
                for oy in 0..oh {
                    for ox in 0..ow {
                        for f in 0..filters {
                            let g = dz[(oy * ow + ox) * filters + f];
                            if g == 0.0 {
                                continue;
                            }
                            grad.bias[f] += g;
                            let kbase = f * kernel * patch;
                            for ky in 0..kernel {
                                let row = ((oy * stride + ky) * width + ox * stride) * channels;
                                let wrow = kbase + ky * patch;
                                for k in 0..patch {
                                    grad.weights[wrow + k] += g * x[row + k];
                                    dx[row + k] += g * params.weights[wrow + k];
                                }
                            }
                        }
                    }
                }
                dx
            }
            (Layer::Flatten, _) => dy.to_vec(),
            (Layer::Conv { .. }, Dims::Vector(_)) => unreachable!("validated by NetworkShape"),
        }
    }
}
