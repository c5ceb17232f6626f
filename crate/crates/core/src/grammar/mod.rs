//! BNF grammars, genotype-to-phenotype mapping and arithmetic phenotypes.
//!
//! A [`Grammar`] is parsed from plain-text BNF. [`map_genotype`] performs the
//! left-most derivation driven by codons (`choice = codon mod alternatives`,
//! no wrapping), [`sensible_init`] builds ramped half-and-half derivation
//! trees and encodes them back into codons, and [`Phenotype`] evaluates the
//! resulting `add/sub/mul/pdiv` expression.

mod bnf;
mod expr;
mod init;
mod mapper;

pub use bnf::{parse_bnf, Grammar, Symbol};
pub use expr::{sigmoid, Expr, Phenotype, Program, PDIV_EPSILON, PDIV_FALLBACK};
pub use init::sensible_init;
pub use mapper::{map_genotype, Derivation, Genotype, Mapping};

/// Classifier grammar over `n_features` input variables.
///
/// Byte-identical to the shipped `grammars/*.bnf` files for 52 and 30 features.
pub fn classifier_grammar_text(n_features: usize) -> String {
    let vars: Vec<String> = (0..n_features).map(|i| format!("x[{i}]")).collect();
    format!(
        "<expression> ::= <operator>(<expression>, <expression>) | <operand>\n\
         <operator> ::= add | sub | mul | pdiv\n\
         <operand> ::= <x> | <digit><digit>.<digit><digit>\n\
         <x> ::= {}\n\
         <digit> ::= 0 | 1 | 2 | 3 | 4 | 5 | 6 | 7 | 8 | 9\n",
        vars.join(" | ")
    )
}

pub fn classifier_grammar(n_features: usize) -> crate::Result<Grammar> {
    parse_bnf(&classifier_grammar_text(n_features))
}
