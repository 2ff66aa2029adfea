//! Lion Algorithm minimizer over flat real genomes.
//!
//! The population holds `2n` lions split into a pride of `n` (the `nrm`
//! fittest are resident males, the rest females) and `n` nomads. Every
//! epoch runs:
//!
//! 1. **Mating.** Each female mates once with a random nonempty subset of
//!    the resident males, producing two cubs by the linear combination
//!    `α·female + (1−α)·m̄` and `(1−α)·female + α·m̄`, where `m̄` is the
//!    mean of the selected males.
//! 2. **Mutation.** Each cub gene is resampled uniformly within the bounds
//!    with probability `mutation_rate`.
//! 3. **Defense.** Cubs that beat the weakest resident male take its place
//!    (the male leaves as a nomad); the remaining cubs join the pride. Each
//!    nomad then challenges one randomly chosen resident male and swaps in
//!    if strictly fitter. The pride surplus is expelled, the nomad group is
//!    cut to its best `n − ⌈n/2⌉`, and `⌈n/2⌉` fresh random nomads are
//!    generated.
//! 4. **Territorial takeover.** The pride is ranked, the best-ever lion
//!    replaces the worst pride member when it has dropped out of the pride,
//!    and roles are reassigned.
//!
//! Fitness is minimized. Ties in every fight go to the incumbent.
//!
//! Random decisions are drawn on the calling thread from a seeded
//! [`ChaCha8Rng`]; fitness evaluations run in parallel and are gathered in
//! index order, so runs are reproducible bit for bit.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum LionError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("problem dimension must be at least 1")]
    ZeroDimension,
    #[error("fitness returned {value} for genome {genome:?}")]
    NonFiniteFitness { value: f64, genome: Vec<f64> },
    #[error("mating needs at least one selected male")]
    NoMaleSelected,
    #[error("genome lengths differ: {0}")]
    Shape(String),
}

/// Objective to minimize.
pub trait Fitness: Sync {
    fn fitness(&self, genome: &[f64]) -> f64;
}

impl<F> Fitness for F
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    fn fitness(&self, genome: &[f64]) -> f64 {
        self(genome)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    ResidentMale,
    Female,
    Nomad,
    Cub,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Lion {
    pub genome: Vec<f64>,
    pub fitness: f64,
    pub role: Role,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub low: f64,
    pub high: f64,
}

impl Bounds {
    pub fn new(low: f64, high: f64) -> Self {
        Self { low, high }
    }

    pub fn sample(&self, rng: &mut impl Rng) -> f64 {
        rng.random_range(self.low..self.high)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LaConfig {
    /// Pride size; the population holds `2n` lions.
    pub n: usize,
    /// Resident males per pride.
    pub nrm: usize,
    pub mutation_rate: f64,
    pub epochs: usize,
    pub bounds: Bounds,
    pub seed: u64,
}

impl Default for LaConfig {
    fn default() -> Self {
        Self {
            n: 10,
            nrm: 2,
            mutation_rate: 0.2,
            epochs: 100,
            bounds: Bounds::new(-1.0, 1.0),
            seed: 0,
        }
    }
}

impl LaConfig {
    pub fn validate(&self) -> Result<(), LionError> {
        let fail = |msg: String| Err(LionError::Config(msg));
        if self.nrm < 2 || self.nrm >= self.n {
            return fail(format!("need 2 <= nrm < n, got nrm = {}, n = {}", self.nrm, self.n));
        }
        if !(0.0..=1.0).contains(&self.mutation_rate) {
            return fail(format!("mutation_rate {} outside [0, 1]", self.mutation_rate));
        }
        if self.epochs == 0 {
            return fail("epochs must be at least 1".into());
        }
        if self.bounds.low >= self.bounds.high || !self.bounds.low.is_finite() || !self.bounds.high.is_finite() {
            return fail(format!(
                "bounds must satisfy low < high, got ({}, {})",
                self.bounds.low, self.bounds.high
            ));
        }
        Ok(())
    }

    /// Fresh nomads generated per epoch.
    pub fn nomad_refresh(&self) -> usize {
        self.n.div_ceil(2)
    }

    /// Cubs produced per epoch: two per female.
    pub fn cubs_per_epoch(&self) -> usize {
        2 * (self.n - self.nrm)
    }

    /// Exact number of fitness evaluations of a full run.
    pub fn evaluation_budget(&self) -> u64 {
        (2 * self.n + self.epochs * (self.cubs_per_epoch() + self.nomad_refresh())) as u64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Population {
    pub pride: Vec<Lion>,
    pub nomads: Vec<Lion>,
    pub best_ever: Lion,
    pub epoch: usize,
}

impl Population {
    pub fn resident_males(&self) -> impl Iterator<Item = &Lion> {
        self.pride.iter().filter(|l| l.role == Role::ResidentMale)
    }

    pub fn females(&self) -> impl Iterator<Item = &Lion> {
        self.pride.iter().filter(|l| l.role == Role::Female)
    }

    pub fn lions(&self) -> impl Iterator<Item = &Lion> {
        self.pride.iter().chain(&self.nomads)
    }
}

/// Coefficient and male-selection mask of one mating event.
#[derive(Debug, Clone, PartialEq)]
pub struct MatingSelection {
    pub alpha: f64,
    pub s: Vec<bool>,
}

impl MatingSelection {
    /// `α ~ U[0, 1)`; each male joins independently with probability 0.5,
    /// redrawn until at least one is chosen.
    pub fn random(nrm: usize, rng: &mut impl Rng) -> Self {
        let alpha = rng.random::<f64>();
        loop {
            let s: Vec<bool> = (0..nrm).map(|_| rng.random_bool(0.5)).collect();
            if s.iter().any(|&b| b) {
                return Self { alpha, s };
            }
        }
    }
}

/// Produces two cubs from a female and the selected resident males.
///
/// With `m̄` the mean of the selected males, returns
/// `(α·female + (1−α)·m̄, (1−α)·female + α·m̄)`.
pub fn mate<G: AsRef<[f64]>>(
    female: &[f64],
    males: &[G],
    sel: &MatingSelection,
) -> Result<(Vec<f64>, Vec<f64>), LionError> {
    if sel.s.len() != males.len() {
        return Err(LionError::Shape(format!(
            "{} selection flags for {} males",
            sel.s.len(),
            males.len()
        )));
    }
    let selected: Vec<&[f64]> = males
        .iter()
        .zip(&sel.s)
        .filter(|(_, &s)| s)
        .map(|(m, _)| m.as_ref())
        .collect();
    if selected.is_empty() {
        return Err(LionError::NoMaleSelected);
    }
    if selected.iter().any(|m| m.len() != female.len()) {
        return Err(LionError::Shape("male and female genomes differ in length".into()));
    }
    let count = selected.len() as f64;
    let alpha = sel.alpha;
    let (first, second) = (0..female.len())
        .map(|j| {
            let mean = selected.iter().map(|m| m[j]).sum::<f64>() / count;
            (
                alpha * female[j] + (1.0 - alpha) * mean,
                (1.0 - alpha) * female[j] + alpha * mean,
            )
        })
        .unzip();
    Ok((first, second))
}

/// Resamples each gene with probability `rate`; returns how many were drawn.
pub fn mutate_in_place(genome: &mut [f64], rate: f64, bounds: Bounds, rng: &mut impl Rng) -> usize {
    let mut count = 0;
    for gene in genome.iter_mut() {
        if rng.random::<f64>() < rate {
            *gene = bounds.sample(rng);
            count += 1;
        }
    }
    count
}

pub fn mutate(genome: &[f64], rate: f64, bounds: Bounds, rng: &mut impl Rng) -> Vec<f64> {
    let mut out = genome.to_vec();
    mutate_in_place(&mut out, rate, bounds, rng);
    out
}

/// Snapshot passed to the progress sink after every epoch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Progress {
    pub epoch: usize,
    pub best_fitness: f64,
    pub evaluations: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LaOutcome {
    pub best_genome: Vec<f64>,
    pub best_fitness: f64,
    /// Best-ever fitness after each epoch.
    pub trace: Vec<f64>,
    pub evaluations: u64,
}

fn by_fitness(a: &Lion, b: &Lion) -> std::cmp::Ordering {
    a.fitness.total_cmp(&b.fitness)
}

/// Ranks the pride, applies elitism, reassigns roles and refreshes
/// `best_ever` from both groups.
///
/// Elitism: when no pride member is as fit as `best_ever`, a clone of it
/// replaces the worst pride member (if strictly fitter than that member).
pub fn territorial_takeover(population: &mut Population, nrm: usize) {
    let pride = &mut population.pride;
    pride.sort_by(by_fitness);
    let best_in_pride = pride.first().map_or(f64::INFINITY, |l| l.fitness);
    if let Some(worst) = pride.last_mut() {
        if population.best_ever.fitness < best_in_pride && population.best_ever.fitness < worst.fitness {
            *worst = population.best_ever.clone();
            pride.sort_by(by_fitness);
        }
    }
    for (rank, lion) in pride.iter_mut().enumerate() {
        lion.role = if rank < nrm { Role::ResidentMale } else { Role::Female };
    }
    for lion in population.nomads.iter_mut() {
        lion.role = Role::Nomad;
    }
    update_best(population);
}

fn update_best(population: &mut Population) {
    let best = population
        .pride
        .iter()
        .chain(&population.nomads)
        .min_by(|a, b| by_fitness(a, b))
        .expect("population is nonempty");
    if best.fitness < population.best_ever.fitness {
        population.best_ever = best.clone();
    }
}

/// Optimizer state: configuration, objective, random stream and the
/// running evaluation count.
pub struct LionSearch<'f, F: Fitness + ?Sized> {
    config: LaConfig,
    dim: usize,
    fitness: &'f F,
    rng: ChaCha8Rng,
    evaluations: u64,
}

impl<'f, F: Fitness + ?Sized> LionSearch<'f, F> {
    pub fn new(config: LaConfig, dim: usize, fitness: &'f F) -> Result<Self, LionError> {
        config.validate()?;
        if dim == 0 {
            return Err(LionError::ZeroDimension);
        }
        Ok(Self {
            config,
            dim,
            fitness,
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            evaluations: 0,
        })
    }

    pub fn config(&self) -> &LaConfig {
        &self.config
    }

    pub fn evaluations(&self) -> u64 {
        self.evaluations
    }

    fn random_genome(&mut self) -> Vec<f64> {
        let bounds = self.config.bounds;
        (0..self.dim).map(|_| bounds.sample(&mut self.rng)).collect()
    }

    /// Evaluates in parallel, results in input order.
    fn evaluate_all(&mut self, genomes: Vec<Vec<f64>>, role: Role) -> Result<Vec<Lion>, LionError> {
        let fitness = self.fitness;
        let values: Vec<f64> = genomes.par_iter().map(|g| fitness.fitness(g)).collect();
        self.evaluations += genomes.len() as u64;
        genomes
            .into_iter()
            .zip(values)
            .map(|(genome, value)| {
                if value.is_finite() {
                    Ok(Lion {
                        genome,
                        fitness: value,
                        role,
                    })
                } else {
                    Err(LionError::NonFiniteFitness { value, genome })
                }
            })
            .collect()
    }

    /// Draws `2n` lions: the first `n` form the pride, the rest the nomads.
    pub fn init_population(&mut self) -> Result<Population, LionError> {
        let n = self.config.n;
        let genomes: Vec<Vec<f64>> = (0..2 * n).map(|_| self.random_genome()).collect();
        let mut lions = self.evaluate_all(genomes, Role::Female)?;
        let nomads = lions.split_off(n);
        let best_ever = lions
            .iter()
            .chain(&nomads)
            .min_by(|a, b| by_fitness(a, b))
            .expect("n >= 3")
            .clone();
        let mut population = Population {
            pride: lions,
            nomads,
            best_ever,
            epoch: 0,
        };
        territorial_takeover(&mut population, self.config.nrm);
        Ok(population)
    }

    /// Mating followed by mutation; returns the evaluated cubs.
    pub fn breed(&mut self, population: &Population) -> Result<Vec<Lion>, LionError> {
        let males: Vec<&[f64]> = population.resident_males().map(|l| l.genome.as_slice()).collect();
        let females: Vec<&[f64]> = population.females().map(|l| l.genome.as_slice()).collect();
        let mut cubs = Vec::with_capacity(2 * females.len());
        for female in females {
            let sel = MatingSelection::random(males.len(), &mut self.rng);
            let (mut a, mut b) = mate(female, &males, &sel)?;
            mutate_in_place(&mut a, self.config.mutation_rate, self.config.bounds, &mut self.rng);
            mutate_in_place(&mut b, self.config.mutation_rate, self.config.bounds, &mut self.rng);
            cubs.push(a);
            cubs.push(b);
        }
        self.evaluate_all(cubs, Role::Cub)
    }

    /// Cub fights, nomad challenges, then restoration of the `n`/`n` group
    /// sizes with fresh nomads.
    pub fn defense_step(&mut self, population: &mut Population, mut cubs: Vec<Lion>) -> Result<(), LionError> {
        let n = self.config.n;

        cubs.sort_by(by_fitness);
        for mut cub in cubs {
            let weakest = weakest_male(&population.pride);
            match weakest {
                Some(idx) if cub.fitness < population.pride[idx].fitness => {
                    cub.role = Role::ResidentMale;
                    let mut displaced = std::mem::replace(&mut population.pride[idx], cub);
                    displaced.role = Role::Nomad;
                    population.nomads.push(displaced);
                }
                _ => {
                    cub.role = Role::Female;
                    population.pride.push(cub);
                }
            }
        }

        let male_slots: Vec<usize> = population
            .pride
            .iter()
            .enumerate()
            .filter(|(_, l)| l.role == Role::ResidentMale)
            .map(|(i, _)| i)
            .collect();
        if !male_slots.is_empty() {
            for k in 0..population.nomads.len() {
                let slot = male_slots[self.rng.random_range(0..male_slots.len())];
                if population.nomads[k].fitness < population.pride[slot].fitness {
                    std::mem::swap(&mut population.nomads[k], &mut population.pride[slot]);
                    population.pride[slot].role = Role::ResidentMale;
                    population.nomads[k].role = Role::Nomad;
                }
            }
        }

        population.pride.sort_by(by_fitness);
        for mut lion in population.pride.drain(n..).collect::<Vec<_>>() {
            lion.role = Role::Nomad;
            population.nomads.push(lion);
        }
        let fresh_count = self.config.nomad_refresh();
        population.nomads.sort_by(by_fitness);
        population.nomads.truncate(n - fresh_count);
        let fresh: Vec<Vec<f64>> = (0..fresh_count).map(|_| self.random_genome()).collect();
        population.nomads.extend(self.evaluate_all(fresh, Role::Nomad)?);
        Ok(())
    }

    /// One full epoch: breed, defend, take over.
    pub fn epoch(&mut self, population: &mut Population) -> Result<(), LionError> {
        let cubs = self.breed(population)?;
        self.defense_step(population, cubs)?;
        territorial_takeover(population, self.config.nrm);
        population.epoch += 1;
        Ok(())
    }

    pub fn run(&mut self, mut sink: impl FnMut(Progress)) -> Result<LaOutcome, LionError> {
        let mut population = self.init_population()?;
        let mut trace = Vec::with_capacity(self.config.epochs);
        for _ in 0..self.config.epochs {
            self.epoch(&mut population)?;
            let best = population.best_ever.fitness;
            trace.push(best);
            sink(Progress {
                epoch: population.epoch,
                best_fitness: best,
                evaluations: self.evaluations,
            });
        }
        Ok(LaOutcome {
            best_genome: population.best_ever.genome,
            best_fitness: population.best_ever.fitness,
            trace,
            evaluations: self.evaluations,
        })
    }
}

/// Index of the resident male with the highest fitness; the later one
/// on ties.
fn weakest_male(pride: &[Lion]) -> Option<usize> {
    pride
        .iter()
        .enumerate()
        .filter(|(_, l)| l.role == Role::ResidentMale)
        .max_by(|(_, a), (_, b)| by_fitness(a, b))
        .map(|(i, _)| i)
}

/// Minimizes `fitness` over `dim`-dimensional genomes.
pub fn optimize<F: Fitness + ?Sized>(
    fitness: &F,
    dim: usize,
    config: &LaConfig,
    sink: impl FnMut(Progress),
) -> Result<LaOutcome, LionError> {
    LionSearch::new(*config, dim, fitness)?.run(sink)
}
