//! Elitist evolutionary search over genome-encoded policy networks.
//!
//! Each generation keeps the top `parent_count` individuals unchanged (with
//! their cached fitness) and fills the rest of the population with children:
//! two random parents, segment crossover with probability
//! `crossover_probability`, then per-gene gaussian mutation clamped to
//! `[-gene_bound, gene_bound]`. Because elites survive and the environment is
//! deterministic, the best fitness can never decrease.
//!
//! Every child draws from its own rng stream keyed by `(seed, generation,
//! pair)`, and fitness evaluation runs in parallel with results merged in
//! index order, so serial and parallel runs produce identical histories.

mod ops;
mod policy;
mod state;

use rayon::prelude::*;
use rand::Rng;
use thiserror::Error;

use crate::environment::{generate_track, EnvConfig, EnvError, ObservationMode, Track, TrackConfig};
use crate::neuralnet::{CheckpointError, Genome, NetError, NetworkShape};
use crate::seeding;

pub use ops::{crossover, crossover_segment, mutate, mutate_tracked, select_indices, select_parents};
pub use policy::{
    evaluate_fitness, outputs_to_action, policy_inputs, policy_shape, run_policy_episode, Evaluation,
    HIDDEN_UNITS, POLICY_OUTPUTS,
};
pub use state::EvolutionState;

#[derive(Debug, Error)]
pub enum EvoError {
    #[error("invalid evolution config: {0}")]
    Config(String),
    #[error("genomes have different shapes")]
    ShapeMismatch,
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Net(#[from] NetError),
    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvoConfig {
    pub population_size: usize,
    pub parent_count: usize,
    /// Probability that any single gene is perturbed.
    pub mutation_rate: f64,
    pub mutation_sigma: f64,
    /// Genes are kept in `[-gene_bound, gene_bound]`.
    pub gene_bound: f64,
    pub crossover_probability: f64,
    pub generations: usize,
    pub seed: u64,
    pub episodes_per_eval: usize,
    /// Number of distinct tracks (seeds `track.seed`, `track.seed + 1`, ...)
    /// that evaluation episodes cycle over.
    pub training_tracks: usize,
}

impl Default for EvoConfig {
    fn default() -> Self {
        Self {
            population_size: 64,
            parent_count: 8,
            mutation_rate: 0.1,
            mutation_sigma: 0.1,
            gene_bound: 1.0,
            crossover_probability: 0.7,
            generations: 100,
            seed: 0,
            episodes_per_eval: 1,
            training_tracks: 1,
        }
    }
}

impl EvoConfig {
    pub fn validate(&self) -> Result<(), EvoError> {
        let fail = |m: String| Err(EvoError::Config(m));
        if self.parent_count < 1 || self.parent_count > self.population_size {
            return fail(format!(
                "parent_count must be in 1..=population_size ({}), got {}",
                self.population_size, self.parent_count
            ));
        }
        if !(0.0..=1.0).contains(&self.mutation_rate) {
            return fail(format!("mutation_rate must be in [0, 1], got {}", self.mutation_rate));
        }
        if !(0.0..=1.0).contains(&self.crossover_probability) {
            return fail(format!(
                "crossover_probability must be in [0, 1], got {}",
                self.crossover_probability
            ));
        }
        if !(self.mutation_sigma > 0.0 && self.mutation_sigma.is_finite()) {
            return fail(format!("mutation_sigma must be positive, got {}", self.mutation_sigma));
        }
        if !(self.gene_bound > 0.0 && self.gene_bound.is_finite()) {
            return fail(format!("gene_bound must be positive, got {}", self.gene_bound));
        }
        if self.episodes_per_eval == 0 || self.training_tracks == 0 {
            return fail("episodes_per_eval and training_tracks must be positive".into());
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Individual {
    pub genome: Genome,
    pub fitness: f64,
    pub frames: usize,
    pub tiles: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GenerationRecord {
    pub generation: usize,
    pub best_fitness: f64,
    pub mean_fitness: f64,
    pub best_checksum: u64,
    pub frames_of_best: usize,
    pub tiles_of_best: usize,
}

impl GenerationRecord {
    fn summarize(generation: usize, population: &[Individual]) -> Self {
        let best = &population[select_indices(population, 1).expect("non-empty population")[0]];
        let mean = population.iter().map(|i| i.fitness).sum::<f64>() / population.len() as f64;
        Self {
            generation,
            best_fitness: best.fitness,
            mean_fitness: mean,
            best_checksum: best.genome.checksum(),
            frames_of_best: best.frames,
            tiles_of_best: best.tiles,
        }
    }
}

/// Everything needed to score a genome: the training tracks, environment
/// settings and episode count.
#[derive(Clone, Debug)]
pub struct Evaluator {
    pub tracks: Vec<Track>,
    pub env: EnvConfig,
    pub episodes: usize,
}

impl Evaluator {
    pub fn new(cfg: &EvoConfig, track_cfg: &TrackConfig, env: &EnvConfig) -> Result<Self, EvoError> {
        let ObservationMode::Features(_) = env.observation else {
            return Err(EvoError::Config("the evolved policy needs feature observations".into()));
        };
        let tracks = (0..cfg.training_tracks as u64)
            .map(|k| generate_track(&track_cfg.with_seed(track_cfg.seed + k)))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self {
            tracks,
            env: env.clone(),
            episodes: cfg.episodes_per_eval,
        })
    }

    pub fn feature_samples(&self) -> usize {
        match &self.env.observation {
            ObservationMode::Features(f) => f.samples,
            ObservationMode::Pixels(_) => 0,
        }
    }

    pub fn policy_shape(&self) -> NetworkShape {
        policy_shape(self.feature_samples())
    }

    pub fn evaluate(&self, genome: Genome) -> Result<Individual, EvoError> {
        let eval = evaluate_fitness(&genome, &self.tracks, self.episodes, &self.env)?;
        Ok(Individual {
            genome,
            fitness: eval.fitness,
            frames: eval.frames,
            tiles: eval.tiles,
        })
    }

    /// Evaluates genomes in parallel; output order matches input order.
    pub fn evaluate_all(&self, genomes: Vec<Genome>) -> Result<Vec<Individual>, EvoError> {
        genomes.into_par_iter().map(|g| self.evaluate(g)).collect()
    }
}

/// Random initial population, genes uniform in `[-gene_bound, gene_bound]`.
pub fn initial_population(cfg: &EvoConfig, evaluator: &Evaluator) -> Result<Vec<Individual>, EvoError> {
    let shape = evaluator.policy_shape();
    let genomes = (0..cfg.population_size as u64)
        .map(|i| {
            let mut rng = seeding::stream(cfg.seed, &[0, i]);
            Genome::random_uniform(shape.clone(), cfg.gene_bound, &mut rng)
        })
        .collect();
    evaluator.evaluate_all(genomes)
}

/// Produces generation `generation` (1-based) from the selected parents: the
/// parents themselves followed by newly evaluated offspring, `population_size`
/// individuals in total.
pub fn evolve_generation(
    parents: &[Individual],
    cfg: &EvoConfig,
    evaluator: &Evaluator,
    generation: usize,
) -> Result<(Vec<Individual>, GenerationRecord), EvoError> {
    if parents.is_empty() {
        return Err(EvoError::Config("at least one parent is required".into()));
    }
    let needed = cfg.population_size.saturating_sub(parents.len());
    let pairs = needed.div_ceil(2);
    let children: Vec<Genome> = (0..pairs as u64)
        .into_par_iter()
        .map(|pair| -> Result<Vec<Genome>, EvoError> {
            let mut rng = seeding::stream(cfg.seed, &[generation as u64, pair]);
            let a = &parents[rng.random_range(0..parents.len())].genome;
            let b = &parents[rng.random_range(0..parents.len())].genome;
            let (ca, cb) = if rng.random_bool(cfg.crossover_probability) {
                crossover(a, b, &mut rng)?
            } else {
                (a.clone(), b.clone())
            };
            Ok(vec![mutate(&ca, cfg, &mut rng), mutate(&cb, cfg, &mut rng)])
        })
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .flatten()
        .take(needed)
        .collect();
    let mut population = parents.to_vec();
    population.extend(evaluator.evaluate_all(children)?);
    let record = GenerationRecord::summarize(generation, &population);
    Ok((population, record))
}

/// Step-wise evolution run, so callers can checkpoint between generations.
pub struct EvolutionRun {
    cfg: EvoConfig,
    evaluator: Evaluator,
    state: EvolutionState,
}

impl EvolutionRun {
    pub fn new(cfg: EvoConfig, track_cfg: &TrackConfig, env: &EnvConfig) -> Result<Self, EvoError> {
        cfg.validate()?;
        let evaluator = Evaluator::new(&cfg, track_cfg, env)?;
        let population = initial_population(&cfg, &evaluator)?;
        Ok(Self {
            cfg,
            evaluator,
            state: EvolutionState {
                generation: 0,
                population,
            },
        })
    }

    /// Continues from a saved state. The state must have been produced with
    /// the same configs for the continuation to match an uninterrupted run.
    pub fn resume(
        cfg: EvoConfig,
        track_cfg: &TrackConfig,
        env: &EnvConfig,
        state: EvolutionState,
    ) -> Result<Self, EvoError> {
        cfg.validate()?;
        let evaluator = Evaluator::new(&cfg, track_cfg, env)?;
        if state.population.iter().any(|i| i.genome.shape() != &evaluator.policy_shape()) {
            return Err(EvoError::ShapeMismatch);
        }
        if state.population.len() < cfg.parent_count {
            return Err(EvoError::Config("saved population is smaller than parent_count".into()));
        }
        Ok(Self { cfg, evaluator, state })
    }

    pub fn generation(&self) -> usize {
        self.state.generation
    }

    pub fn state(&self) -> &EvolutionState {
        &self.state
    }

    pub fn evaluator(&self) -> &Evaluator {
        &self.evaluator
    }

    pub fn best(&self) -> &Individual {
        let idx = select_indices(&self.state.population, 1).expect("non-empty population")[0];
        &self.state.population[idx]
    }

    pub fn step(&mut self) -> Result<GenerationRecord, EvoError> {
        let parents = select_parents(&self.state.population, self.cfg.parent_count)?;
        let generation = self.state.generation + 1;
        let (population, record) = evolve_generation(&parents, &self.cfg, &self.evaluator, generation)?;
        self.state = EvolutionState { generation, population };
        Ok(record)
    }
}

#[derive(Clone, Debug)]
pub struct EvolutionOutcome {
    pub best: Individual,
    pub history: Vec<GenerationRecord>,
}

pub fn train_evolution(cfg: &EvoConfig, track_cfg: &TrackConfig, env: &EnvConfig) -> Result<EvolutionOutcome, EvoError> {
    let mut run = EvolutionRun::new(cfg.clone(), track_cfg, env)?;
    let mut history = Vec::with_capacity(cfg.generations);
    for _ in 0..cfg.generations {
        history.push(run.step()?);
    }
    Ok(EvolutionOutcome {
        best: run.best().clone(),
        history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_cfg() -> EvoConfig {
        EvoConfig {
            population_size: 12,
            parent_count: 3,
            generations: 4,
            seed: 11,
            ..EvoConfig::default()
        }
    }

    fn short_track() -> TrackConfig {
        TrackConfig {
            max_frames: 300,
            ..TrackConfig::default()
        }
    }

    #[test]
    fn config_validation() {
        assert!(EvoConfig::default().validate().is_ok());
        let bad = EvoConfig {
            parent_count: 65,
            ..EvoConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = EvoConfig {
            mutation_sigma: 0.0,
            ..EvoConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = EvoConfig {
            crossover_probability: 1.5,
            ..EvoConfig::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn generations_keep_size_and_elites() {
        let cfg = small_cfg();
        let mut run = EvolutionRun::new(cfg.clone(), &short_track(), &EnvConfig::default()).unwrap();
        let mut last_best = f64::NEG_INFINITY;
        for _ in 0..cfg.generations {
            let parents = select_parents(&run.state().population, cfg.parent_count).unwrap();
            let record = run.step().unwrap();
            let pop = &run.state().population;
            assert_eq!(pop.len(), cfg.population_size);
            assert_eq!(&pop[..cfg.parent_count], &parents[..]);
            assert!(record.best_fitness >= last_best);
            last_best = record.best_fitness;
            for ind in pop {
                assert!(ind.genome.genes().iter().all(|g| g.abs() <= cfg.gene_bound));
            }
        }
    }

    #[test]
    fn zero_generations_returns_initial_best() {
        let cfg = EvoConfig {
            generations: 0,
            ..small_cfg()
        };
        let out = train_evolution(&cfg, &short_track(), &EnvConfig::default()).unwrap();
        assert!(out.history.is_empty());
        let evaluator = Evaluator::new(&cfg, &short_track(), &EnvConfig::default()).unwrap();
        let init = initial_population(&cfg, &evaluator).unwrap();
        let best = init.iter().map(|i| i.fitness).fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(out.best.fitness, best);
    }

    #[test]
    fn fixed_seed_reproduces_history() {
        let a = train_evolution(&small_cfg(), &short_track(), &EnvConfig::default()).unwrap();
        let b = train_evolution(&small_cfg(), &short_track(), &EnvConfig::default()).unwrap();
        assert_eq!(a.history.len(), 4);
        assert_eq!(a.history, b.history);
    }
}
