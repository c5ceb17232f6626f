//! Generational grammatical-evolution search.
//!
//! Fitness is the ROC AUC of `sigmoid(o)` over the (augmented) training set.
//! Selection is a tournament, variation is one-point crossover within the
//! effective genome plus per-codon mutation, and the best `elitism`
//! individuals survive unchanged. Invalid individuals stay in the population
//! with fitness −1.

use std::collections::HashMap;
use std::sync::Arc;

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::augment::{augment, AugmentConfig};
use crate::dataset::{Dataset, SplitPair};
use crate::grammar::{map_genotype, sensible_init, Genotype, Grammar, Mapping, Phenotype};
use crate::metrics::{auc_sorted, median, quantile};
use crate::rng::{self, Rng};
use crate::{Error, Result};

/// Fitness assigned to individuals that fail to map.
pub const INVALID_FITNESS: f64 = -1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Initialisation {
    #[default]
    #[serde(alias = "Sensible")]
    Sensible,
}

/// Search parameters. Keys accept both short names and the long
/// human-readable parameter names (`"Population size" = 200`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeConfig {
    #[serde(alias = "Number of runs", alias = "number_of_runs")]
    pub runs: usize,
    #[serde(alias = "Number of generations", alias = "number_of_generations")]
    pub generations: usize,
    #[serde(alias = "Population size", alias = "population_size")]
    pub population: usize,
    #[serde(alias = "Mutation probability", alias = "mutation_probability")]
    pub p_mut: f64,
    #[serde(alias = "Crossover probability", alias = "crossover_probability")]
    pub p_xo: f64,
    #[serde(alias = "Elitism size", alias = "elitism_size")]
    pub elitism: usize,
    #[serde(alias = "Codon size", alias = "codon_size")]
    pub codon_max: u8,
    #[serde(alias = "Initialisation")]
    pub initialisation: Initialisation,
    #[serde(alias = "Maximum initial depth", alias = "maximum_initial_depth")]
    pub max_init_depth: usize,
    #[serde(alias = "Maximum depth", alias = "maximum_depth")]
    pub max_depth: usize,
    #[serde(alias = "Wrapping")]
    pub wrapping: usize,
    pub tournament_size: usize,
    pub base_seed: u64,
}

impl Default for GeConfig {
    fn default() -> Self {
        GeConfig {
            runs: 30,
            generations: 100,
            population: 200,
            p_mut: 0.01,
            p_xo: 0.8,
            elitism: 1,
            codon_max: 255,
            initialisation: Initialisation::Sensible,
            max_init_depth: 10,
            max_depth: 35,
            wrapping: 0,
            tournament_size: 7,
            base_seed: 0,
        }
    }
}

impl GeConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidGeConfig(m));
        if self.population <= self.elitism {
            return bad(format!("population {} must exceed elitism {}", self.population, self.elitism));
        }
        for (name, p) in [("p_mut", self.p_mut), ("p_xo", self.p_xo)] {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("{name} = {p} is not a probability"));
            }
        }
        if self.wrapping != 0 {
            return bad(format!("wrapping must be 0, got {}", self.wrapping));
        }
        if self.tournament_size == 0 || self.runs == 0 {
            return bad("tournament_size and runs must be at least 1".into());
        }
        if self.max_init_depth > self.max_depth {
            return bad(format!("max_init_depth {} exceeds max_depth {}", self.max_init_depth, self.max_depth));
        }
        Ok(())
    }
}

/// Column-major copy of a dataset for fast batch scoring.
#[derive(Debug, Clone)]
pub struct FitnessData {
    columns: Vec<Vec<f64>>,
    labels: Vec<u8>,
}

impl FitnessData {
    pub fn new(ds: &Dataset) -> Result<Self> {
        let labels = ds.hard_labels()?;
        let pos = labels.iter().filter(|&&l| l == 1).count();
        if pos == 0 || pos == labels.len() {
            return Err(Error::SingleClassDataset);
        }
        Ok(FitnessData { columns: ds.columns(), labels })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn scores(&self, p: &Phenotype) -> Result<Vec<f64>> {
        p.score_columns(&self.columns, self.len())
    }

    pub fn auc(&self, p: &Phenotype) -> Result<f64> {
        let scores = self.scores(p)?;
        let mut order: Vec<usize> = (0..scores.len()).collect();
        order.sort_unstable_by(|&a, &b| scores[b].total_cmp(&scores[a]));
        auc_sorted(&order, &scores, &self.labels)
    }
}

/// AUC of the phenotype's sigmoid scores on `ds`.
pub fn fitness(p: &Phenotype, ds: &Dataset) -> Result<f64> {
    FitnessData::new(ds)?.auc(p)
}

/// Fitness of a mapping outcome: AUC when valid, −1 otherwise.
pub fn fitness_of(p: Option<&Phenotype>, ds: &Dataset) -> Result<f64> {
    match p {
        Some(p) => fitness(p, ds),
        None => Ok(INVALID_FITNESS),
    }
}

/// A scored population member.
#[derive(Debug, Clone)]
pub struct Individual {
    pub genotype: Genotype,
    pub phenotype: Option<Arc<Phenotype>>,
    pub fitness: f64,
    /// Codons consumed by mapping; the full length for invalid individuals.
    pub effective_length: usize,
}

impl Individual {
    pub fn n_features(&self) -> usize {
        self.phenotype.as_ref().map_or(usize::MAX, |p| p.used_features().len())
    }

    fn depth(&self) -> usize {
        self.phenotype.as_ref().map_or(usize::MAX, |p| p.depth())
    }
}

/// Best of `size` uniform draws (with replacement); ties favour fewer used
/// features, then the lower index. Returns the index of the winner.
pub fn tournament_select(pop: &[Individual], size: usize, rng: &mut Rng) -> usize {
    let mut best = rng.random_range(0..pop.len());
    for _ in 1..size {
        let c = rng.random_range(0..pop.len());
        let (a, b) = (&pop[c], &pop[best]);
        let better = a.fitness > b.fitness
            || a.fitness == b.fitness
                && (a.n_features() < b.n_features() || a.n_features() == b.n_features() && c < best);
        if better {
            best = c;
        }
    }
    best
}

/// With probability `p_xo`, swap tails at cut points drawn uniformly in
/// `0..=effective_length` of each parent; otherwise copy the parents.
pub fn crossover(
    a: &Genotype,
    a_eff: usize,
    b: &Genotype,
    b_eff: usize,
    p_xo: f64,
    rng: &mut Rng,
) -> (Genotype, Genotype) {
    if !rng.random_bool(p_xo) {
        return (a.clone(), b.clone());
    }
    let ca = rng.random_range(0..=a_eff.min(a.len()));
    let cb = rng.random_range(0..=b_eff.min(b.len()));
    splice(a, ca, b, cb)
}

/// `(a[..ca] ++ b[cb..], b[..cb] ++ a[ca..])`.
pub fn splice(a: &Genotype, ca: usize, b: &Genotype, cb: usize) -> (Genotype, Genotype) {
    let x = a.codons[..ca].iter().chain(&b.codons[cb..]).copied().collect();
    let y = b.codons[..cb].iter().chain(&a.codons[ca..]).copied().collect();
    (Genotype::new(x), Genotype::new(y))
}

/// Replace each codon with a uniform draw from `0..=codon_max` with probability `p_mut`.
pub fn mutate(g: &Genotype, p_mut: f64, codon_max: u8, rng: &mut Rng) -> Genotype {
    let codons =
        g.codons.iter().map(|&c| if rng.random_bool(p_mut) { rng.random_range(0..=codon_max) } else { c }).collect();
    Genotype::new(codons)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenerationStats {
    pub best: f64,
    /// Mean over valid individuals (−1 when none are valid).
    pub mean: f64,
    pub invalid: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub run_index: usize,
    pub seed: u64,
    pub best_phenotype: Phenotype,
    pub train_auc: f64,
    pub test_auc: f64,
    pub effective_codons: usize,
    pub generations_log: Vec<GenerationStats>,
}

/// Per-run evaluation with a phenotype-text cache.
struct Evaluator<'a> {
    grammar: &'a Grammar,
    data: &'a FitnessData,
    max_depth: usize,
    cache: HashMap<String, (Arc<Phenotype>, f64)>,
}

impl Evaluator<'_> {
    fn evaluate(&mut self, genotype: Genotype) -> Result<Individual> {
        match map_genotype(self.grammar, &genotype, self.max_depth) {
            Mapping::Invalid => {
                Ok(Individual { effective_length: genotype.len(), genotype, phenotype: None, fitness: INVALID_FITNESS })
            }
            Mapping::Valid(d) => {
                let (p, f) = match self.cache.get(&d.text) {
                    Some((p, f)) => (p.clone(), *f),
                    None => {
                        let p = Arc::new(Phenotype::new(&d.text, d.depth)?);
                        let f = self.data.auc(&p)?;
                        self.cache.insert(d.text, (p.clone(), f));
                        (p, f)
                    }
                };
                Ok(Individual { genotype, phenotype: Some(p), fitness: f, effective_length: d.codons_used })
            }
        }
    }
}

/// Ranking used for elitism and best-of-run: fitness, then fewer used
/// features, then shallower trees, then position.
fn ranked(pop: &[Individual]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..pop.len()).collect();
    idx.sort_by(|&a, &b| {
        pop[b]
            .fitness
            .total_cmp(&pop[a].fitness)
            .then(pop[a].n_features().cmp(&pop[b].n_features()))
            .then(pop[a].depth().cmp(&pop[b].depth()))
            .then(a.cmp(&b))
    });
    idx
}

fn stats(pop: &[Individual]) -> GenerationStats {
    let valid: Vec<f64> = pop.iter().filter(|i| i.phenotype.is_some()).map(|i| i.fitness).collect();
    let best = pop.iter().map(|i| i.fitness).fold(INVALID_FITNESS, f64::max);
    let mean = if valid.is_empty() { INVALID_FITNESS } else { valid.iter().sum::<f64>() / valid.len() as f64 };
    GenerationStats { best, mean, invalid: pop.len() - valid.len() }
}

/// One independent run seeded with `base_seed + run_index`.
pub fn run_ge(
    cfg: &GeConfig,
    grammar: &Grammar,
    train: &Dataset,
    test: &Dataset,
    run_index: usize,
) -> Result<RunResult> {
    cfg.validate()?;
    let train_data = FitnessData::new(train)?;
    let test_data = FitnessData::new(test)?;
    run_prepared(cfg, grammar, &train_data, &test_data, run_index)
}

fn run_prepared(
    cfg: &GeConfig,
    grammar: &Grammar,
    train: &FitnessData,
    test: &FitnessData,
    run_index: usize,
) -> Result<RunResult> {
    let seed = cfg.base_seed.wrapping_add(run_index as u64);
    let mut sel_rng = rng::stream(seed, rng::stream::SELECTION);
    let mut var_rng = rng::stream(seed, rng::stream::VARIATION);
    let mut eval = Evaluator { grammar, data: train, max_depth: cfg.max_depth, cache: HashMap::new() };

    let mut pop = sensible_init(grammar, cfg.population, cfg.max_init_depth, seed)?
        .into_iter()
        .map(|g| eval.evaluate(g))
        .collect::<Result<Vec<_>>>()?;
    let mut log = vec![stats(&pop)];

    for _ in 0..cfg.generations {
        let order = ranked(&pop);
        let mut next: Vec<Individual> = order[..cfg.elitism].iter().map(|&i| pop[i].clone()).collect();
        while next.len() < cfg.population {
            let a = &pop[tournament_select(&pop, cfg.tournament_size, &mut sel_rng)];
            let b = &pop[tournament_select(&pop, cfg.tournament_size, &mut sel_rng)];
            let (x, y) =
                crossover(&a.genotype, a.effective_length, &b.genotype, b.effective_length, cfg.p_xo, &mut var_rng);
            for child in [x, y] {
                if next.len() < cfg.population {
                    let child = mutate(&child, cfg.p_mut, cfg.codon_max, &mut var_rng);
                    next.push(eval.evaluate(child)?);
                }
            }
        }
        pop = next;
        log.push(stats(&pop));
    }

    let best = &pop[ranked(&pop)[0]];
    let Some(p) = best.phenotype.as_ref() else {
        return Err(Error::InvalidGeConfig("no valid individual in the final population".into()));
    };
    Ok(RunResult {
        run_index,
        seed,
        best_phenotype: (**p).clone(),
        train_auc: best.fitness,
        test_auc: test.auc(p)?,
        effective_codons: best.effective_length,
        generations_log: log,
    })
}

/// Per-run test AUCs with their median and interquartile range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub test_aucs: Vec<f64>,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    pub iqr: f64,
}

impl ExperimentSummary {
    pub fn from_runs(runs: &[RunResult]) -> Self {
        let test_aucs: Vec<f64> = runs.iter().map(|r| r.test_auc).collect();
        let (q1, q3) = (quantile(&test_aucs, 0.25), quantile(&test_aucs, 0.75));
        ExperimentSummary { median: median(&test_aucs), q1, q3, iqr: q3 - q1, test_aucs }
    }
}

/// `cfg.runs` independent runs on an already-augmented training set.
/// Runs execute on the current rayon pool; results are in run order.
pub fn run_many(cfg: &GeConfig, grammar: &Grammar, train: &Dataset, test: &Dataset) -> Result<Vec<RunResult>> {
    cfg.validate()?;
    let train_data = FitnessData::new(train)?;
    let test_data = FitnessData::new(test)?;
    (0..cfg.runs).into_par_iter().map(|i| run_prepared(cfg, grammar, &train_data, &test_data, i)).collect()
}

/// Augment the training half of `split`, then run [`run_many`].
pub fn run_experiment(
    cfg: &GeConfig,
    grammar: &Grammar,
    split: &SplitPair,
    aug: &AugmentConfig,
) -> Result<(Vec<RunResult>, ExperimentSummary)> {
    let train = augment(&split.train, aug)?;
    let runs = run_many(cfg, grammar, &train, &split.test)?;
    let summary = ExperimentSummary::from_runs(&runs);
    Ok((runs, summary))
}
