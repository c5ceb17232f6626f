use std::collections::HashSet;

use rand::Rng as _;

use super::{Genotype, Grammar, Symbol};
use crate::rng::{self, Rng};
use crate::{Error, Result};

const CODON_MAX: usize = 255;
/// Redraws allowed per individual when a tree duplicates an earlier one.
const UNIQUE_ATTEMPTS: usize = 50;

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Method {
    Full,
    Grow,
}

/// One sensibly-initialised individual with the tree it encodes.
#[derive(Debug, Clone)]
#[allow(dead_code)] // tree fields are checked by the round-trip tests
pub(crate) struct Seeded {
    pub genotype: Genotype,
    pub choices: Vec<(usize, usize)>,
    pub depth: usize,
}

/// Ramped half-and-half initialisation over derivation trees.
///
/// Target depths ramp from `min_depth + 1` to `max_init_depth` with bucket
/// sizes differing by at most one; within a bucket the first half uses
/// "full" expansion, the rest "grow". Each tree is encoded back into codons
/// `alt + n*u` with a random `u` keeping the codon in `0..=255`.
pub fn sensible_init(g: &Grammar, pop_size: usize, max_init_depth: usize, seed: u64) -> Result<Vec<Genotype>> {
    Ok(sensible_init_traced(g, pop_size, max_init_depth, seed)?.into_iter().map(|s| s.genotype).collect())
}

pub(crate) fn sensible_init_traced(
    g: &Grammar,
    pop_size: usize,
    max_init_depth: usize,
    seed: u64,
) -> Result<Vec<Seeded>> {
    let min = g.min_depth(g.start());
    if max_init_depth < min {
        return Err(Error::DepthInfeasible { requested: max_init_depth, minimum: min });
    }
    // A grammar whose minimum already equals the bound has a single depth.
    let lo = (min + 1).min(max_init_depth);
    let depths: Vec<usize> = (lo..=max_init_depth).collect();
    let mut r = rng::stream(seed, rng::stream::INIT);
    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(pop_size);
    let per = pop_size / depths.len();
    let extra = pop_size % depths.len();
    for (bi, &depth) in depths.iter().enumerate() {
        let size = per + usize::from(bi < extra);
        for i in 0..size {
            let method = if i < size.div_ceil(2) { Method::Full } else { Method::Grow };
            let mut tree = build(g, depth, method, &mut r);
            for _ in 1..UNIQUE_ATTEMPTS {
                if !seen.contains(&tree.0) {
                    break;
                }
                tree = build(g, depth, method, &mut r);
            }
            seen.insert(tree.0.clone());
            let (choices, tree_depth) = tree;
            let genotype = encode(g, &choices, &mut r);
            out.push(Seeded { genotype, choices, depth: tree_depth });
        }
    }
    Ok(out)
}

/// Left-most expansion order so the choice list matches the mapper's.
fn build(g: &Grammar, bound: usize, method: Method, r: &mut Rng) -> (Vec<(usize, usize)>, usize) {
    let mut choices = Vec::new();
    let mut stack = vec![(g.start(), 1usize)];
    let mut deepest = 0;
    while let Some((nt, d)) = stack.pop() {
        deepest = deepest.max(d);
        let n = g.alternatives(nt).len();
        let feasible: Vec<usize> = (0..n).filter(|&a| d - 1 + g.alt_min_depth(nt, a) <= bound).collect();
        debug_assert!(!feasible.is_empty());
        let pool: Vec<usize> = match method {
            Method::Full => {
                let rec: Vec<usize> = feasible.iter().copied().filter(|&a| g.is_recursive(nt, a)).collect();
                if rec.is_empty() {
                    feasible
                } else {
                    rec
                }
            }
            Method::Grow => feasible,
        };
        let alt = pool[r.random_range(0..pool.len())];
        choices.push((nt, alt));
        for s in g.alternatives(nt)[alt].iter().rev() {
            if let Symbol::NonTerminal(c) = s {
                stack.push((*c, d + 1));
            }
        }
    }
    (choices, deepest)
}

fn encode(g: &Grammar, choices: &[(usize, usize)], r: &mut Rng) -> Genotype {
    let mut codons = Vec::with_capacity(choices.len());
    for &(nt, alt) in choices {
        let n = g.alternatives(nt).len();
        if n == 1 {
            continue;
        }
        let u = r.random_range(0..=(CODON_MAX - alt) / n);
        codons.push((alt + n * u) as u8);
    }
    Genotype::new(codons)
}
