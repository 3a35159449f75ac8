//! Saved evolution state for resuming a run.
//!
//! ```text
//! magic "CREV" | u16 version | u64 generation | u32 count
//! count x { f64 fitness | u64 frames | u64 tiles | u64 len | len bytes of policy checkpoint }
//! ```

use std::fs;
use std::path::Path;

use crate::neuralnet::{Checkpoint, CheckpointError, Role};

use super::{EvoError, Individual};

const MAGIC: &[u8; 4] = b"CREV";
const VERSION: u16 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct EvolutionState {
    /// Number of generations evolved so far; 0 for the initial population.
    pub generation: usize,
    pub population: Vec<Individual>,
}

impl EvolutionState {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&(self.generation as u64).to_le_bytes());
        out.extend_from_slice(&(self.population.len() as u32).to_le_bytes());
        for ind in &self.population {
            out.extend_from_slice(&ind.fitness.to_le_bytes());
            out.extend_from_slice(&(ind.frames as u64).to_le_bytes());
            out.extend_from_slice(&(ind.tiles as u64).to_le_bytes());
            let ck = Checkpoint::new(Role::Policy, ind.genome.clone()).to_bytes();
            out.extend_from_slice(&(ck.len() as u64).to_le_bytes());
            out.extend_from_slice(&ck);
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, EvoError> {
        let mut pos = 0usize;
        let mut take = |n: usize| -> Result<&[u8], CheckpointError> {
            if pos + n > bytes.len() {
                return Err(CheckpointError::Truncated { offset: bytes.len() });
            }
            let s = &bytes[pos..pos + n];
            pos += n;
            Ok(s)
        };
        if take(4)? != MAGIC {
            return Err(CheckpointError::BadMagic.into());
        }
        let version = u16::from_le_bytes(take(2)?.try_into().unwrap());
        if version != VERSION {
            return Err(CheckpointError::Version { found: version }.into());
        }
        let u64le = |s: &[u8]| u64::from_le_bytes(s.try_into().unwrap());
        let generation = u64le(take(8)?) as usize;
        let count = u32::from_le_bytes(take(4)?.try_into().unwrap()) as usize;
        let mut population = Vec::with_capacity(count.min(1 << 16));
        for _ in 0..count {
            let fitness = f64::from_le_bytes(take(8)?.try_into().unwrap());
            let frames = u64le(take(8)?) as usize;
            let tiles = u64le(take(8)?) as usize;
            let len = u64le(take(8)?) as usize;
            let ck = Checkpoint::from_bytes(take(len)?)?;
            population.push(Individual {
                genome: ck.genome,
                fitness,
                frames,
                tiles,
            });
        }
        if pos != bytes.len() {
            return Err(CheckpointError::Malformed {
                offset: pos,
                message: "trailing bytes after population".into(),
            }
            .into());
        }
        if population.is_empty() {
            return Err(EvoError::Config("saved population is empty".into()));
        }
        Ok(Self { generation, population })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), EvoError> {
        fs::write(path, self.to_bytes()).map_err(CheckpointError::from)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, EvoError> {
        Self::from_bytes(&fs::read(path).map_err(CheckpointError::from)?)
    }
}
