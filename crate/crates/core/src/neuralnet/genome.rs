use rand::Rng;

use super::network::Network;
use super::shape::NetworkShape;
use super::NetError;

/// A network's parameters as one flat vector of genes, in layer order with
/// each layer's weights (row-major) followed by its biases.
#[derive(Clone, Debug, PartialEq)]
pub struct Genome {
    genes: Vec<f64>,
    shape: NetworkShape,
}

impl Genome {
    pub fn new(shape: NetworkShape, genes: Vec<f64>) -> Result<Self, NetError> {
        let expected = shape.param_count();
        if genes.len() != expected {
            return Err(NetError::ShapeMismatch {
                what: "genome length",
                expected,
                found: genes.len(),
            });
        }
        Ok(Self { genes, shape })
    }

    /// Genes drawn independently and uniformly from `[-bound, bound]`.
    pub fn random_uniform<R: Rng + ?Sized>(shape: NetworkShape, bound: f64, rng: &mut R) -> Self {
        let genes = (0..shape.param_count())
            .map(|_| rng.random_range(-bound..=bound))
            .collect();
        Self { genes, shape }
    }

    pub fn genes(&self) -> &[f64] {
        &self.genes
    }

    pub fn genes_mut(&mut self) -> &mut [f64] {
        &mut self.genes
    }

    pub fn shape(&self) -> &NetworkShape {
        &self.shape
    }

    pub fn len(&self) -> usize {
        self.genes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.genes.is_empty()
    }

    /// FNV-1a over the little-endian bytes of every gene.
    pub fn checksum(&self) -> u64 {
        let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
        for gene in &self.genes {
            for byte in gene.to_le_bytes() {
                hash ^= byte as u64;
                hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
            }
        }
        hash
    }
}

pub fn encode(net: &Network) -> Genome {
    Genome {
        genes: net.to_flat(),
        shape: net.shape().clone(),
    }
}

pub fn decode(genome: &Genome) -> Result<Network, NetError> {
    Network::from_flat(genome.shape.clone(), &genome.genes)
}
