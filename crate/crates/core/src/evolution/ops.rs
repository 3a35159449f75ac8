use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::neuralnet::Genome;

use super::{EvoConfig, EvoError, Individual};

/// Perturbs each gene with probability `mutation_rate` by a draw from
/// `N(0, mutation_sigma)` and clamps it to `[-gene_bound, gene_bound]`.
/// Genes that are not picked are copied bit for bit.
pub fn mutate<R: Rng + ?Sized>(genome: &Genome, cfg: &EvoConfig, rng: &mut R) -> Genome {
    mutate_tracked(genome, cfg, rng).0
}

/// [`mutate`], also reporting which positions were picked for perturbation.
pub fn mutate_tracked<R: Rng + ?Sized>(genome: &Genome, cfg: &EvoConfig, rng: &mut R) -> (Genome, Vec<bool>) {
    let mut child = genome.clone();
    let mut picked = vec![false; genome.len()];
    if cfg.mutation_rate == 0.0 {
        return (child, picked);
    }
    let noise = Normal::new(0.0, cfg.mutation_sigma).expect("sigma validated positive");
    for (gene, pick) in child.genes_mut().iter_mut().zip(picked.iter_mut()) {
        if rng.random_bool(cfg.mutation_rate) {
            *pick = true;
            *gene = (*gene + noise.sample(rng)).clamp(-cfg.gene_bound, cfg.gene_bound);
        }
    }
    (child, picked)
}

/// Swaps the genes in `[start, end)` between two parents.
pub fn crossover_segment(
    a: &Genome,
    b: &Genome,
    start: usize,
    end: usize,
) -> Result<(Genome, Genome), EvoError> {
    if a.shape() != b.shape() {
        return Err(EvoError::ShapeMismatch);
    }
    if start > end || end > a.len() {
        return Err(EvoError::Config(format!(
            "segment [{start}, {end}) is outside a genome of length {}",
            a.len()
        )));
    }
    let mut child_a = a.clone();
    let mut child_b = b.clone();
    child_a.genes_mut()[start..end].copy_from_slice(&b.genes()[start..end]);
    child_b.genes_mut()[start..end].copy_from_slice(&a.genes()[start..end]);
    Ok((child_a, child_b))
}

/// Segment crossover with both segment bounds drawn uniformly from
/// `0..=len` and ordered.
pub fn crossover<R: Rng + ?Sized>(a: &Genome, b: &Genome, rng: &mut R) -> Result<(Genome, Genome), EvoError> {
    if a.shape() != b.shape() {
        return Err(EvoError::ShapeMismatch);
    }
    let x = rng.random_range(0..=a.len());
    let y = rng.random_range(0..=a.len());
    crossover_segment(a, b, x.min(y), x.max(y))
}

/// Indices of the `n` fittest individuals, best first; equal fitness goes
/// to the lower index.
pub fn select_indices(pop: &[Individual], n: usize) -> Result<Vec<usize>, EvoError> {
    if n > pop.len() {
        return Err(EvoError::Config(format!(
            "cannot select {n} parents from a population of {}",
            pop.len()
        )));
    }
    let mut order: Vec<usize> = (0..pop.len()).collect();
    order.sort_by(|&i, &j| pop[j].fitness.total_cmp(&pop[i].fitness).then(i.cmp(&j)));
    order.truncate(n);
    Ok(order)
}

pub fn select_parents(pop: &[Individual], n: usize) -> Result<Vec<Individual>, EvoError> {
    Ok(select_indices(pop, n)?
        .into_iter()
        .map(|i| pop[i].clone())
        .collect())
}
