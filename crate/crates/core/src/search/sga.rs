//! Standard genetic algorithm over flat scan vectors.
//!
//! One generation is selection, crossover, mutation and survival. Selection
//! is a roulette wheel over fitness ranks: log-probabilities are negative and
//! raw probabilities underflow, so ranks stand in for fitness. Failed scans
//! get no slice of the wheel; when every member failed the wheel is uniform.

use std::cell::Cell;
use std::ops::RangeInclusive;
use std::time::Instant;

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{base_len, timed_out, Found, Progress, SearchConfig, SearchError, SearchStatus};
use crate::scanner::{Driven, ScanMode, Scanner, MAX_SUCCESSOR_LENGTH};
use crate::Real;

#[derive(Clone, Debug, PartialEq)]
pub struct SgaParams {
    pub population: usize,
    /// Chance that a gene is swapped between two parents.
    pub crossover: f64,
    /// Chance that a gene is re-rolled.
    pub mutation: f64,
    pub seed: u64,
}

impl Default for SgaParams {
    fn default() -> Self {
        SgaParams {
            population: 50,
            crossover: 0.9,
            mutation: 0.01,
            seed: 0,
        }
    }
}

impl SgaParams {
    pub fn with_seed(seed: u64) -> Self {
        SgaParams {
            seed,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), SearchError> {
        if self.population < 2 || self.population % 2 != 0 {
            return Err(SearchError::Population(self.population));
        }
        for (name, value) in [("crossover", self.crossover), ("mutation", self.mutation)] {
            if !(0.0..=1.0).contains(&value) {
                return Err(SearchError::Weight { name, value });
            }
        }
        Ok(())
    }

    /// Independent random stream `stream` of this seed.
    fn stream(&self, stream: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(stream);
        rng
    }
}

/// Legal values of each gene position.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GeneSpace {
    pub mode: ScanMode,
    pub dimensions: usize,
    /// Largest greedy budget.
    pub cap: u32,
}

impl GeneSpace {
    pub fn base_len(&self) -> usize {
        base_len(self.mode, self.dimensions)
    }

    /// Positions past the base vector are extensions and hold lengths.
    pub fn range(&self, position: usize) -> RangeInclusive<u32> {
        if self.mode == ScanMode::PrefixLimited && position < self.base_len() && position % 2 == 0 {
            0..=self.cap
        } else {
            1..=MAX_SUCCESSOR_LENGTH
        }
    }

    pub fn random_gene<R: Rng + ?Sized>(&self, position: usize, rng: &mut R) -> u32 {
        rng.gen_range(self.range(position))
    }

    pub fn random_genome<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<u32> {
        (0..self.base_len()).map(|i| self.random_gene(i, rng)).collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Member<T> {
    pub genes: Vec<u32>,
    /// Joint log-probability, negative infinity for a failed scan.
    pub fitness: T,
}

/// `params.population` random genomes from the seed's initial stream.
pub fn sga_init(params: &SgaParams, space: &GeneSpace) -> Vec<Vec<u32>> {
    let mut rng = params.stream(0);
    (0..params.population).map(|_| space.random_genome(&mut rng)).collect()
}

fn roulette<T: Real>(population: &[Member<T>]) -> Option<WeightedIndex<u64>> {
    let mut order: Vec<usize> = (0..population.len())
        .filter(|&i| population[i].fitness.is_finite())
        .collect();
    if order.is_empty() {
        return None;
    }
    order.sort_by(|&a, &b| {
        population[a]
            .fitness
            .partial_cmp(&population[b].fitness)
            .expect("finite fitness")
    });
    let mut weights = vec![0u64; population.len()];
    for (rank, &i) in order.iter().enumerate() {
        weights[i] = rank as u64 + 1;
    }
    Some(WeightedIndex::new(weights).expect("positive total weight"))
}

/// One generation. `evaluate(index, genes)` scores offspring `index`; it may
/// append genes when the scan asks for an extension. The returned population
/// is the best `population.len()` of parents and offspring, best first,
/// parents ahead of offspring on equal fitness.
pub fn sga_iterate<T, R, F>(
    population: &[Member<T>],
    params: &SgaParams,
    space: &GeneSpace,
    rng: &mut R,
    mut evaluate: F,
) -> Vec<Member<T>>
where
    T: Real,
    R: Rng + ?Sized,
    F: FnMut(usize, &mut Vec<u32>) -> T,
{
    let size = population.len();
    let wheel = roulette(population);
    let pick = |rng: &mut R| match &wheel {
        Some(w) => w.sample(rng),
        None => rng.gen_range(0..size),
    };

    let mut offspring = Vec::with_capacity(size);
    for _ in 0..size / 2 {
        let a = pick(rng);
        let b = pick(rng);
        let mut x = population[a].genes.clone();
        let mut y = population[b].genes.clone();
        let shared = x.len().min(y.len());
        for i in 0..shared {
            if rng.gen_bool(params.crossover) {
                std::mem::swap(&mut x[i], &mut y[i]);
            }
        }
        offspring.push(x);
        offspring.push(y);
    }
    for child in &mut offspring {
        for i in 0..child.len() {
            if rng.gen_bool(params.mutation) {
                child[i] = space.random_gene(i, rng);
            }
        }
    }

    let mut merged: Vec<Member<T>> = population.to_vec();
    for (i, mut genes) in offspring.into_iter().enumerate() {
        let fitness = evaluate(i, &mut genes);
        merged.push(Member { genes, fitness });
    }
    sort_best_first(&mut merged);
    merged.truncate(size);
    merged
}

fn sort_best_first<T: Real>(members: &mut [Member<T>]) {
    members.sort_by(|a, b| b.fitness.partial_cmp(&a.fitness).expect("fitness is never NaN"));
}

/// Convergence rule: stop once as many generations have passed without a
/// new best as the generation that found it, and at least one.
pub fn sga_terminated(since_improvement: usize, best_generation: usize) -> bool {
    since_improvement >= best_generation.max(1)
}

pub(crate) fn run<T: Real>(
    scanner: &Scanner<'_>,
    config: &SearchConfig,
    params: &SgaParams,
    start: Instant,
    deadline: Option<Instant>,
    progress: &mut dyn FnMut(&Progress),
) -> Found {
    let layout = config.layout();
    let symbols = scanner.corpus().alphabet.len();
    let space = GeneSpace {
        mode: config.mode,
        dimensions: config.n,
        cap: scanner.greedy_cap(),
    };
    let evaluated = Cell::new(0u64);
    let size = params.population as u64;
    // Streams: 0 initial population, 1 operators, 2.. one per evaluated
    // genome for the genes appended on extension requests.
    let evaluate = |generation: usize, index: usize, genes: &mut Vec<u32>| -> T {
        let mut extra: Option<ChaCha8Rng> = None;
        loop {
            match scanner.drive(&layout, genes, false) {
                Driven::Done(s) => {
                    evaluated.set(evaluated.get() + 1);
                    return s.log_likelihood(symbols);
                }
                Driven::Failed(..) => {
                    evaluated.set(evaluated.get() + 1);
                    return T::neg_infinity();
                }
                Driven::NeedsExtension(_) => {
                    let rng = extra.get_or_insert_with(|| params.stream(2 + generation as u64 * size + index as u64));
                    let gene = space.random_gene(genes.len(), rng);
                    genes.push(gene);
                }
            }
        }
    };

    let mut population: Vec<Member<T>> = sga_init(params, &space)
        .into_iter()
        .enumerate()
        .map(|(i, mut genes)| {
            let fitness = evaluate(0, i, &mut genes);
            Member { genes, fitness }
        })
        .collect();
    sort_best_first(&mut population);

    let mut best: Option<(T, Vec<u32>)> = None;
    let mut best_generation = 0;
    let mut report = |best: &mut Option<(T, Vec<u32>)>, top: &Member<T>, evaluated: u64| -> bool {
        let better = top.fitness.is_finite() && best.as_ref().is_none_or(|(b, _)| top.fitness > *b);
        if better {
            *best = Some((top.fitness, top.genes.clone()));
            progress(&Progress {
                elapsed: start.elapsed(),
                evaluated,
                log_probability: top.fitness.to_f64().unwrap_or(f64::NAN),
            });
        }
        better
    };
    report(&mut best, &population[0], evaluated.get());

    let mut rng = params.stream(1);
    let mut generation = 0;
    let status = loop {
        if timed_out(deadline) {
            break SearchStatus::TimedOut;
        }
        generation += 1;
        population = sga_iterate(&population, params, &space, &mut rng, |i, genes| {
            evaluate(generation, i, genes)
        });
        if report(&mut best, &population[0], evaluated.get()) {
            best_generation = generation;
        }
        if sga_terminated(generation - best_generation, best_generation) {
            break SearchStatus::Converged;
        }
    };

    Found {
        best: best.map(|(_, genes)| genes),
        evaluated: evaluated.get(),
        status,
        generations: Some((generation, best_generation)),
    }
}
