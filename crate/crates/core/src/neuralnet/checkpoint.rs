//! Versioned binary checkpoints.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! magic      4 bytes  "CRNN"
//! version    u16      currently 1
//! role       u8       0 = evolved policy, 1 = online Q-network, 2 = target Q-network
//! input      u8 kind (0 vector, 1 grid) then u32 len | u32 height, u32 width, u32 channels
//! layers     u32 count, then per layer:
//!              u8 kind (0 dense, 1 conv, 2 flatten)
//!              dense: u32 units, u8 activation
//!              conv:  u32 filters, u32 kernel, u32 stride, u8 activation
//! genes      u64 count, then count x f64 in genome order
//! ```
//!
//! Activations are encoded as 0 tanh, 1 relu, 2 linear.

use std::fs;
use std::path::Path;

use thiserror::Error;

use super::genome::Genome;
use super::shape::{Activation, Dims, Layer, NetworkShape};

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"CRNN";
pub const CHECKPOINT_VERSION: u16 = 1;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("not a checkpoint (bad magic)")]
    BadMagic,
    #[error("unsupported checkpoint version {found} (expected {CHECKPOINT_VERSION})")]
    Version { found: u16 },
    #[error("checkpoint truncated at byte offset {offset}")]
    Truncated { offset: usize },
    #[error("malformed checkpoint at byte offset {offset}: {message}")]
    Malformed { offset: usize, message: String },
    #[error("checkpoint I/O: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Role {
    Policy,
    Online,
    Target,
}

impl Role {
    fn code(self) -> u8 {
        match self {
            Role::Policy => 0,
            Role::Online => 1,
            Role::Target => 2,
        }
    }

    fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(Role::Policy),
            1 => Some(Role::Online),
            2 => Some(Role::Target),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Role::Policy => "policy",
            Role::Online => "online",
            Role::Target => "target",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub role: Role,
    pub genome: Genome,
}

fn activation_code(a: Activation) -> u8 {
    match a {
        Activation::Tanh => 0,
        Activation::Relu => 1,
        Activation::Linear => 2,
    }
}

impl Checkpoint {
    pub fn new(role: Role, genome: Genome) -> Self {
        Self { role, genome }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let shape = self.genome.shape();
        let mut out = Vec::with_capacity(64 + 8 * self.genome.len());
        out.extend_from_slice(CHECKPOINT_MAGIC);
        out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
        out.push(self.role.code());
        let u32le = |out: &mut Vec<u8>, v: usize| out.extend_from_slice(&(v as u32).to_le_bytes());
        match shape.input() {
            Dims::Vector(n) => {
                out.push(0);
                u32le(&mut out, n);
            }
            Dims::Grid {
                height,
                width,
                channels,
            } => {
                out.push(1);
                u32le(&mut out, height);
                u32le(&mut out, width);
                u32le(&mut out, channels);
            }
        }
        u32le(&mut out, shape.layers().len());
        for layer in shape.layers() {
            match *layer {
                Layer::Dense { units, activation } => {
                    out.push(0);
                    u32le(&mut out, units);
                    out.push(activation_code(activation));
                }
                Layer::Conv {
                    filters,
                    kernel,
                    stride,
                    activation,
                } => {
                    out.push(1);
                    u32le(&mut out, filters);
                    u32le(&mut out, kernel);
                    u32le(&mut out, stride);
                    out.push(activation_code(activation));
                }
                Layer::Flatten => out.push(2),
            }
        }
        out.extend_from_slice(&(self.genome.len() as u64).to_le_bytes());
        for gene in self.genome.genes() {
            out.extend_from_slice(&gene.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, CheckpointError> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(4)? != CHECKPOINT_MAGIC {
            return Err(CheckpointError::BadMagic);
        }
        let version = u16::from_le_bytes(r.array()?);
        if version != CHECKPOINT_VERSION {
            return Err(CheckpointError::Version { found: version });
        }
        let role_at = r.pos;
        let role = Role::from_code(r.u8()?).ok_or_else(|| r.malformed(role_at, "unknown role"))?;
        let input_at = r.pos;
        let input = match r.u8()? {
            0 => Dims::Vector(r.u32()?),
            1 => Dims::Grid {
                height: r.u32()?,
                width: r.u32()?,
                channels: r.u32()?,
            },
            _ => return Err(r.malformed(input_at, "unknown input kind")),
        };
        let count = r.u32()?;
        let mut layers = Vec::with_capacity(count.min(1024));
        for _ in 0..count {
            let at = r.pos;
            let layer = match r.u8()? {
                0 => Layer::Dense {
                    units: r.u32()?,
                    activation: r.activation()?,
                },
                1 => Layer::Conv {
                    filters: r.u32()?,
                    kernel: r.u32()?,
                    stride: r.u32()?,
                    activation: r.activation()?,
                },
                2 => Layer::Flatten,
                _ => return Err(r.malformed(at, "unknown layer kind")),
            };
            layers.push(layer);
        }
        let shape_end = r.pos;
        let shape = NetworkShape::new(input, layers).map_err(|e| r.malformed(shape_end, &e.to_string()))?;
        let genes_at = r.pos;
        let n = u64::from_le_bytes(r.array()?) as usize;
        if n != shape.param_count() {
            return Err(r.malformed(
                genes_at,
                &format!("{n} genes but the shape has {} parameters", shape.param_count()),
            ));
        }
        let mut genes = Vec::with_capacity(n);
        for _ in 0..n {
            genes.push(f64::from_le_bytes(r.array()?));
        }
        if r.pos != bytes.len() {
            return Err(r.malformed(r.pos, "trailing bytes after genes"));
        }
        let genome = Genome::new(shape, genes).map_err(|e| r.malformed(genes_at, &e.to_string()))?;
        Ok(Self { role, genome })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), CheckpointError> {
        fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, CheckpointError> {
        Self::from_bytes(&fs::read(path)?)
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], CheckpointError> {
        let end = self.pos + n;
        if end > self.bytes.len() {
            return Err(CheckpointError::Truncated {
                offset: self.bytes.len(),
            });
        }
        let slice = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(slice)
    }

    fn array<const N: usize>(&mut self) -> Result<[u8; N], CheckpointError> {
        Ok(self.take(N)?.try_into().expect("length checked"))
    }

    fn u8(&mut self) -> Result<u8, CheckpointError> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<usize, CheckpointError> {
        Ok(u32::from_le_bytes(self.array()?) as usize)
    }

    fn activation(&mut self) -> Result<Activation, CheckpointError> {
        let at = self.pos;
        match self.u8()? {
            0 => Ok(Activation::Tanh),
            1 => Ok(Activation::Relu),
            2 => Ok(Activation::Linear),
            _ => Err(self.malformed(at, "unknown activation")),
        }
    }

    fn malformed(&self, offset: usize, message: &str) -> CheckpointError {
        CheckpointError::Malformed {
            offset,
            message: message.to_string(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neuralnet::{encode, Network};

    fn conv_genome() -> Genome {
        let shape = NetworkShape::new(
            Dims::Grid {
                height: 16,
                width: 16,
                channels: 3,
            },
            vec![
                Layer::Conv {
                    filters: 4,
                    kernel: 4,
                    stride: 2,
                    activation: Activation::Relu,
                },
                Layer::Flatten,
                Layer::Dense {
                    units: 5,
                    activation: Activation::Linear,
                },
            ],
        )
        .unwrap();
        let mut rng = crate::seeding::stream(9, &[]);
        encode(&Network::he_init(shape, &mut rng))
    }

    #[test]
    fn roundtrip_is_bit_exact() {
        let ck = Checkpoint::new(Role::Online, conv_genome());
        let back = Checkpoint::from_bytes(&ck.to_bytes()).unwrap();
        assert_eq!(back, ck);
        let bits = |g: &Genome| g.genes().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&back.genome), bits(&ck.genome));
    }

    #[test]
    fn truncation_is_detected() {
        let bytes = Checkpoint::new(Role::Policy, conv_genome()).to_bytes();
        for cut in [1, 7, bytes.len() / 2] {
            let short = &bytes[..bytes.len() - cut];
            assert!(matches!(
                Checkpoint::from_bytes(short),
                Err(CheckpointError::Truncated { .. })
            ));
        }
    }

    #[test]
    fn version_and_magic_are_checked() {
        let mut bytes = Checkpoint::new(Role::Policy, conv_genome()).to_bytes();
        bytes[4] = 9;
        assert!(matches!(
            Checkpoint::from_bytes(&bytes),
            Err(CheckpointError::Version { found: 9 })
        ));
        bytes[0] = b'X';
        assert!(matches!(Checkpoint::from_bytes(&bytes), Err(CheckpointError::BadMagic)));
    }

    #[test]
    fn trailing_bytes_are_rejected() {
        let mut bytes = Checkpoint::new(Role::Target, conv_genome()).to_bytes();
        bytes.push(0);
        assert!(matches!(
            Checkpoint::from_bytes(&bytes),
            Err(CheckpointError::Malformed { .. })
        ));
    }
}
