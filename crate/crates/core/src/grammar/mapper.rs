use serde::{Deserialize, Serialize};

use super::{Grammar, Symbol};

/// Integer genome; every codon is in `0..=255`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct Genotype {
    pub codons: Vec<u8>,
}

impl Genotype {
    pub fn new(codons: Vec<u8>) -> Self {
        Genotype { codons }
    }

    pub fn len(&self) -> usize {
        self.codons.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codons.is_empty()
    }
}

/// A completed left-most derivation.
#[derive(Debug, Clone, PartialEq)]
pub struct Derivation {
    /// Concatenated terminals.
    pub text: String,
    /// Derivation-tree depth counted over non-terminal nodes, root = 1.
    pub depth: usize,
    /// Codons consumed (the effective length).
    pub codons_used: usize,
    /// `(non_terminal, alternative)` in expansion order; identifies the tree.
    pub choices: Vec<(usize, usize)>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Mapping {
    Valid(Derivation),
    Invalid,
}

impl Mapping {
    pub fn derivation(&self) -> Option<&Derivation> {
        match self {
            Mapping::Valid(d) => Some(d),
            Mapping::Invalid => None,
        }
    }
}

/// Standard left-most GE mapping without wrapping.
///
/// At each non-terminal with `n > 1` alternatives the next codon `c` selects
/// alternative `c mod n`; single-alternative non-terminals consume nothing.
/// Running out of codons or expanding a non-terminal deeper than
/// `max_depth` yields [`Mapping::Invalid`].
pub fn map_genotype(g: &Grammar, geno: &Genotype, max_depth: usize) -> Mapping {
    let mut stack: Vec<(&Symbol, usize)> = Vec::with_capacity(64);
    let root = Symbol::NonTerminal(g.start());
    stack.push((&root, 1));
    let mut text = String::new();
    let mut used = 0usize;
    let mut depth = 0usize;
    let mut choices = Vec::new();
    while let Some((sym, d)) = stack.pop() {
        match sym {
            Symbol::Terminal(t) => text.push_str(t),
            Symbol::NonTerminal(nt) => {
                if d > max_depth {
                    return Mapping::Invalid;
                }
                depth = depth.max(d);
                let alts = g.alternatives(*nt);
                let choice = if alts.len() == 1 {
                    0
                } else {
                    let Some(&codon) = geno.codons.get(used) else {
                        return Mapping::Invalid;
                    };
                    used += 1;
                    codon as usize % alts.len()
                };
                choices.push((*nt, choice));
                for s in alts[choice].iter().rev() {
                    stack.push((s, d + 1));
                }
            }
        }
    }
    Mapping::Valid(Derivation { text, depth, codons_used: used, choices })
}
