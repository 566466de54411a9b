//! Genetic-algorithm wrapper feature selection.
//!
//! A mask's fitness is the cross-validated accuracy of a least-squares proxy
//! trained on the masked columns. The GA is generational: tournament
//! selection (size 3), uniform crossover, per-gene bit-flip mutation and
//! elitism. Offspring that duplicate an already evaluated mask are nudged to an
//! unseen one while unseen masks remain, so on small feature counts the search
//! covers the whole mask space within its evaluation budget.

use std::cmp::Ordering;
use std::collections::{HashMap, HashSet};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{self, Dataset};
use crate::error::{Error, Result};
use crate::learners::{self, LearnerConfig, LearnerKind};
use crate::mask::FeatureMask;
use crate::metrics;
use crate::rng::{self, StreamRng};
use crate::scalar::Scalar;

/// Band onto which a generation's fitness values are rescaled.
pub const EXPECTATION_LOW: f64 = 76.0;
pub const EXPECTATION_HIGH: f64 = 89.0;

const TOURNAMENT_SIZE: usize = 3;
/// Exhaustive novelty scan is only attempted below this many features.
const NOVELTY_SCAN_MAX_FEATURES: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GAConfig {
    pub population_size: usize,
    pub generations: usize,
    pub crossover_rate: f64,
    /// Per-gene flip probability; `None` means `1 / num_features`.
    pub mutation_rate: Option<f64>,
    pub elitism: usize,
    pub seed: u64,
    pub fitness_folds: usize,
}

impl Default for GAConfig {
    fn default() -> Self {
        GAConfig {
            population_size: 30,
            generations: 50,
            crossover_rate: 0.8,
            mutation_rate: None,
            elitism: 2,
            seed: 0,
            fitness_folds: 5,
        }
    }
}

impl GAConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if self.population_size < 2 {
            return bad(format!("population_size must be >= 2, got {}", self.population_size));
        }
        if self.elitism >= self.population_size {
            return bad(format!(
                "elitism ({}) must be below population_size ({})",
                self.elitism, self.population_size
            ));
        }
        if self.generations < 1 {
            return bad("generations must be >= 1".into());
        }
        if !(0.0..=1.0).contains(&self.crossover_rate) {
            return bad(format!("crossover_rate {} outside [0, 1]", self.crossover_rate));
        }
        if let Some(r) = self.mutation_rate {
            if !(0.0..=1.0).contains(&r) {
                return bad(format!("mutation_rate {r} outside [0, 1]"));
            }
        }
        if self.fitness_folds < 2 {
            return bad("fitness_folds must be >= 2".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationStats {
    pub gen: usize,
    /// Best fitness seen so far.
    pub best: f64,
    /// Mean fitness of this generation's population.
    pub mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GAResult {
    pub best_mask: FeatureMask,
    pub best_fitness: f64,
    pub history: Vec<GenerationStats>,
    /// Final generation's fitness values rescaled onto [76, 89].
    pub expectation_scores: Vec<f64>,
    pub feature_names: Vec<String>,
    pub in_acceptable_band: bool,
    pub masks_evaluated: usize,
}

pub fn in_acceptable_band(fitness: f64) -> bool {
    (EXPECTATION_LOW..=EXPECTATION_HIGH).contains(&fitness)
}

/// Cross-validated accuracy of a linear proxy on the masked features.
///
/// Out-of-fold predictions are pooled across `folds` folds (partition drawn
/// from `seed`) and scored once.
pub fn fitness<F: Scalar>(mask: &FeatureMask, ds: &Dataset<F>, folds: usize, seed: u64) -> Result<F> {
    mask.validate(ds.n_features())?;
    if folds < 2 {
        return Err(Error::InvalidArgument(format!("folds must be >= 2, got {folds}")));
    }
    let partition = data::kfold_indices(ds.len(), folds, seed)?;
    let y = ds.targets()?;
    let cfg = LearnerConfig::new(LearnerKind::LiR);
    let mut oof = vec![F::zero(); ds.len()];
    for (k, fold) in partition.iter().enumerate() {
        let train = ds.subset(&data::complement(ds.len(), fold));
        let model = learners::train(&train, mask, &cfg).map_err(|e| e.in_fold("fitness proxy", k))?;
        let preds = learners::predict(&model, &ds.subset(fold))?;
        for (&i, p) in fold.iter().zip(preds) {
            oof[i] = p;
        }
    }
    metrics::accuracy(&oof, &y)
}

/// Min–max rescaling onto [76, 89]; a constant input maps to the midpoint.
pub fn scale_to_expectation(fitnesses: &[f64]) -> Vec<f64> {
    let lo = fitnesses.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = fitnesses.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = EXPECTATION_HIGH - EXPECTATION_LOW;
    fitnesses
        .iter()
        .map(|&f| {
            if hi > lo {
                EXPECTATION_LOW + span * (f - lo) / (hi - lo)
            } else {
                (EXPECTATION_LOW + EXPECTATION_HIGH) / 2.0
            }
        })
        .collect()
}

/// Total order used for ranking: higher fitness, then fewer features, then
/// the lexicographically smaller bit pattern. `Less` means "better".
pub fn rank_order(a: (&FeatureMask, f64), b: (&FeatureMask, f64)) -> Ordering {
    b.1.partial_cmp(&a.1)
        .unwrap_or(Ordering::Equal)
        .then(a.0.count().cmp(&b.0.count()))
        .then(a.0.bits().cmp(b.0.bits()))
}

struct Search<'a, F> {
    ds: &'a Dataset<F>,
    cfg: &'a GAConfig,
    n_features: usize,
    mutation_rate: f64,
    /// Number of non-empty masks, when it fits in a u64.
    space: Option<u64>,
    cache: HashMap<FeatureMask, f64>,
    seen: HashSet<FeatureMask>,
}

impl<F: Scalar> Search<'_, F> {
    fn evaluate(&mut self, population: &[FeatureMask]) -> Result<Vec<f64>> {
        let mut pending: Vec<&FeatureMask> = Vec::new();
        let mut queued = HashSet::new();
        for m in population {
            if !self.cache.contains_key(m) && queued.insert(m) {
                pending.push(m);
            }
        }
        let (ds, folds, seed) = (self.ds, self.cfg.fitness_folds, self.cfg.seed);
        let scores: Vec<Result<f64>> = pending
            .par_iter()
            .map(|m| fitness(m, ds, folds, seed).map(Scalar::as_f64))
            .collect();
        for (m, s) in pending.into_iter().zip(scores) {
            self.cache.insert(m.clone(), s?);
        }
        Ok(population.iter().map(|m| self.cache[m]).collect())
    }

    fn repair(&self, mask: &mut FeatureMask, rng: &mut StreamRng) {
        if mask.count() == 0 {
            mask.set(rng.random_range(0..self.n_features), true);
        }
    }

    fn exhausted(&self) -> bool {
        self.space.is_some_and(|s| self.seen.len() as u64 >= s)
    }

    /// Moves a duplicate child to a mask that has not been seen yet.
    fn make_novel(&self, mask: &mut FeatureMask, rng: &mut StreamRng) {
        if !self.seen.contains(mask) || self.exhausted() {
            return;
        }
        for _ in 0..4 * self.n_features {
            mask.flip(rng.random_range(0..self.n_features));
            self.repair(mask, rng);
            if !self.seen.contains(mask) {
                return;
            }
        }
        if self.n_features <= NOVELTY_SCAN_MAX_FEATURES {
            let space = self.space.expect("small feature count");
            let start = rng.random_range(0..space);
            for step in 0..space {
                let code = (start + step) % space + 1;
                let candidate = FeatureMask::from_code(self.n_features, code);
                if !self.seen.contains(&candidate) {
                    *mask = candidate;
                    return;
                }
            }
        }
    }

    fn random_mask(&self, rng: &mut StreamRng) -> FeatureMask {
        let mut m = FeatureMask::from_bits((0..self.n_features).map(|_| rng.random_bool(0.5)).collect());
        self.repair(&mut m, rng);
        m
    }

    fn tournament<'p>(&self, population: &'p [FeatureMask], fit: &[f64], rng: &mut StreamRng) -> &'p FeatureMask {
        let mut best = rng.random_range(0..population.len());
        for _ in 1..TOURNAMENT_SIZE {
            let c = rng.random_range(0..population.len());
            if rank_order((&population[c], fit[c]), (&population[best], fit[best])) == Ordering::Less {
                best = c;
            }
        }
        &population[best]
    }

    fn breed(&self, population: &[FeatureMask], fit: &[f64], rng: &mut StreamRng) -> FeatureMask {
        let a = self.tournament(population, fit, rng);
        let b = self.tournament(population, fit, rng);
        let mut child = if rng.random_bool(self.cfg.crossover_rate) {
            FeatureMask::from_bits(
                a.bits()
                    .iter()
                    .zip(b.bits())
                    .map(|(&x, &y)| if rng.random_bool(0.5) { x } else { y })
                    .collect(),
            )
        } else {
            a.clone()
        };
        for i in 0..self.n_features {
            if rng.random_bool(self.mutation_rate) {
                child.flip(i);
            }
        }
        self.repair(&mut child, rng);
        self.make_novel(&mut child, rng);
        child
    }
}

pub fn evolve<F: Scalar>(ds: &Dataset<F>, cfg: &GAConfig) -> Result<GAResult> {
    cfg.validate()?;
    let n_features = ds.n_features();
    if n_features == 0 {
        return Err(Error::InvalidArgument("dataset has no feature columns".into()));
    }
    if ds.len() < cfg.fitness_folds {
        return Err(Error::TooManyFolds {
            folds: cfg.fitness_folds,
            rows: ds.len(),
        });
    }
    let mut search = Search {
        ds,
        cfg,
        n_features,
        mutation_rate: cfg.mutation_rate.unwrap_or(1.0 / n_features as f64),
        space: (n_features < 64).then(|| (1u64 << n_features) - 1),
        cache: HashMap::new(),
        seen: HashSet::new(),
    };

    let mut population = Vec::with_capacity(cfg.population_size);
    for i in 0..cfg.population_size {
        let mut r = rng::stream(cfg.seed, "ga-init", &[i as u64]);
        let mut m = search.random_mask(&mut r);
        search.make_novel(&mut m, &mut r);
        search.seen.insert(m.clone());
        population.push(m);
    }

    let mut best: Option<(FeatureMask, f64)> = None;
    let mut history = Vec::with_capacity(cfg.generations);
    let mut fit = Vec::new();
    for gen in 0..cfg.generations {
        fit = search.evaluate(&population)?;
        for (m, &f) in population.iter().zip(&fit) {
            let better = best
                .as_ref()
                .is_none_or(|(bm, bf)| rank_order((m, f), (bm, *bf)) == Ordering::Less);
            if better {
                best = Some((m.clone(), f));
            }
        }
        let mean = fit.iter().sum::<f64>() / fit.len() as f64;
        history.push(GenerationStats {
            gen,
            best: best.as_ref().map(|b| b.1).expect("population non-empty"),
            mean,
        });
        if gen + 1 == cfg.generations {
            break;
        }

        let mut order: Vec<usize> = (0..population.len()).collect();
        order.sort_by(|&a, &b| rank_order((&population[a], fit[a]), (&population[b], fit[b])));
        let mut next: Vec<FeatureMask> = order[..cfg.elitism].iter().map(|&i| population[i].clone()).collect();
        for i in cfg.elitism..cfg.population_size {
            let mut r = rng::stream(cfg.seed, "ga", &[gen as u64, i as u64]);
            let child = search.breed(&population, &fit, &mut r);
            search.seen.insert(child.clone());
            next.push(child);
        }
        population = next;
    }

    let (best_mask, best_fitness) = best.expect("at least one generation");
    Ok(GAResult {
        in_acceptable_band: in_acceptable_band(best_fitness),
        best_mask,
        best_fitness,
        history,
        expectation_scores: scale_to_expectation(&fit),
        feature_names: ds.feature_names().to_vec(),
        masks_evaluated: search.cache.len(),
    })
}
