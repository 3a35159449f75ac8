use super::NetError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Activation {
    Tanh,
    Relu,
    Linear,
}

impl Activation {
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Tanh => z.tanh(),
            Activation::Relu => z.max(0.0),
            Activation::Linear => z,
        }
    }

    /// Derivative expressed through the activation's output `y`.
    pub fn derivative_from_output(self, y: f64) -> f64 {
        match self {
            Activation::Tanh => 1.0 - y * y,
            Activation::Relu => {
                if y > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Linear => 1.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Activation::Tanh => "tanh",
            Activation::Relu => "relu",
            Activation::Linear => "linear",
        }
    }
}

/// Shape of the data flowing between layers.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Dims {
    Vector(usize),
    /// Row-major `height x width x channels`.
    Grid {
        height: usize,
        width: usize,
        channels: usize,
    },
}

impl Dims {
    pub fn len(self) -> usize {
        match self {
            Dims::Vector(n) => n,
            Dims::Grid {
                height,
                width,
                channels,
            } => height * width * channels,
        }
    }

    pub fn is_empty(self) -> bool {
        self.len() == 0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Layer {
    Dense {
        units: usize,
        activation: Activation,
    },
    /// Valid (unpadded) convolution with square kernels.
    Conv {
        filters: usize,
        kernel: usize,
        stride: usize,
        activation: Activation,
    },
    Flatten,
}

/// Input dimensions plus an ordered layer list. Construction checks that each
/// layer accepts what the previous one produces.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NetworkShape {
    input: Dims,
    layers: Vec<Layer>,
    dims: Vec<Dims>,
}

impl NetworkShape {
    pub fn new(input: Dims, layers: Vec<Layer>) -> Result<Self, NetError> {
        if layers.is_empty() {
            return Err(NetError::InvalidShape("a network needs at least one layer".into()));
        }
        if input.is_empty() {
            return Err(NetError::InvalidShape("input must be non-empty".into()));
        }
        let mut dims = vec![input];
        for (i, layer) in layers.iter().enumerate() {
            let prev = *dims.last().unwrap();
            let next = match (*layer, prev) {
                (Layer::Dense { units, .. }, Dims::Vector(_)) if units > 0 => Dims::Vector(units),
                (Layer::Dense { .. }, Dims::Grid { .. }) => {
                    return Err(NetError::InvalidShape(format!(
                        "layer {i}: dense layer after a grid needs a flatten layer first"
                    )))
                }
                (
                    Layer::Conv {
                        filters,
                        kernel,
                        stride,
                        ..
                    },
                    Dims::Grid { height, width, .. },
                ) if filters > 0 && kernel > 0 && stride > 0 && kernel <= height && kernel <= width => {
                    Dims::Grid {
                        height: (height - kernel) / stride + 1,
                        width: (width - kernel) / stride + 1,
                        channels: filters,
                    }
                }
                (Layer::Conv { .. }, Dims::Vector(_)) => {
                    return Err(NetError::InvalidShape(format!(
                        "layer {i}: convolution needs a grid input"
                    )))
                }
                (Layer::Flatten, d) => Dims::Vector(d.len()),
                _ => {
                    return Err(NetError::InvalidShape(format!(
                        "layer {i}: {layer:?} is incompatible with input {prev:?}"
                    )))
                }
            };
            dims.push(next);
        }
        Ok(Self { input, layers, dims })
    }

    /// Fully connected stack: `sizes[0]` inputs, then one dense layer per
    /// remaining size. Hidden layers use `hidden`, the last one `output`.
    pub fn mlp(sizes: &[usize], hidden: Activation, output: Activation) -> Result<Self, NetError> {
        if sizes.len() < 2 {
            return Err(NetError::InvalidShape("an mlp needs input and output sizes".into()));
        }
        let last = sizes.len() - 2;
        let layers = sizes[1..]
            .iter()
            .enumerate()
            .map(|(i, &units)| Layer::Dense {
                units,
                activation: if i == last { output } else { hidden },
            })
            .collect();
        Self::new(Dims::Vector(sizes[0]), layers)
    }

    pub fn input(&self) -> Dims {
        self.input
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    /// Input dims of layer `i`; `layer_input(layers().len())` is the output.
    pub fn layer_input(&self, i: usize) -> Dims {
        self.dims[i]
    }

    pub fn output_len(&self) -> usize {
        self.dims.last().unwrap().len()
    }

    /// (weights, biases) parameter counts for layer `i`.
    pub fn layer_param_counts(&self, i: usize) -> (usize, usize) {
        match (self.layers[i], self.dims[i]) {
            (Layer::Dense { units, .. }, d) => (units * d.len(), units),
            (
                Layer::Conv {
                    filters, kernel, ..
                },
                Dims::Grid { channels, .. },
            ) => (filters * kernel * kernel * channels, filters),
            _ => (0, 0),
        }
    }

    pub fn param_count(&self) -> usize {
        (0..self.layers.len())
            .map(|i| {
                let (w, b) = self.layer_param_counts(i);
                w + b
            })
            .sum()
    }
}
