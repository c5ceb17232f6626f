use std::collections::{BTreeSet, HashMap};

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Symbol {
    Terminal(String),
    NonTerminal(usize),
}

/// Context-free grammar `(N, T, P, S)` with precomputed depth tables.
#[derive(Debug, Clone)]
pub struct Grammar {
    names: Vec<String>,
    rules: Vec<Vec<Vec<Symbol>>>,
    terminals: BTreeSet<String>,
    start: usize,
    min_depth: Vec<usize>,
    alt_min_depth: Vec<Vec<usize>>,
    recursive: Vec<Vec<bool>>,
}

impl Grammar {
    pub fn start(&self) -> usize {
        self.start
    }

    pub fn non_terminal_count(&self) -> usize {
        self.names.len()
    }

    pub fn name(&self, nt: usize) -> &str {
        &self.names[nt]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn terminals(&self) -> &BTreeSet<String> {
        &self.terminals
    }

    /// Alternatives of `nt` in source order.
    pub fn alternatives(&self, nt: usize) -> &[Vec<Symbol>] {
        &self.rules[nt]
    }

    /// Smallest derivation-tree depth rooted at `nt` (a terminal-only rule has depth 1).
    pub fn min_depth(&self, nt: usize) -> usize {
        self.min_depth[nt]
    }

    /// Smallest subtree depth when `nt` expands through alternative `alt`.
    pub fn alt_min_depth(&self, nt: usize, alt: usize) -> usize {
        self.alt_min_depth[nt][alt]
    }

    /// Whether alternative `alt` of `nt` can derive `nt` again.
    pub fn is_recursive(&self, nt: usize, alt: usize) -> bool {
        self.recursive[nt][alt]
    }
}

fn syntax(line: usize, column: usize, message: impl Into<String>) -> Error {
    Error::GrammarSyntax { line, column, message: message.into() }
}

/// One alternative split into `<non-terminal>` references and literal runs.
fn tokenize_alt(text: &str, line: usize, col0: usize) -> Result<Vec<(bool, String)>> {
    let mut out = Vec::new();
    let mut literal = String::new();
    let mut chars = text.char_indices().peekable();
    while let Some((i, c)) = chars.next() {
        if c == '<' {
            let rest = &text[i + 1..];
            if let Some(end) = rest.find('>') {
                let name = &rest[..end];
                if !name.is_empty() && !name.contains(char::is_whitespace) && !name.contains('<') {
                    if !literal.is_empty() {
                        out.push((false, std::mem::take(&mut literal)));
                    }
                    out.push((true, name.to_string()));
                    for _ in 0..=end {
                        chars.next();
                    }
                    continue;
                }
            }
            return Err(syntax(line, col0 + i + 1, "unterminated non-terminal"));
        }
        literal.push(c);
    }
    if !literal.is_empty() {
        out.push((false, literal));
    }
    Ok(out)
}

/// Parse BNF text: one `<lhs> ::= alt | alt ...` rule per line.
///
/// Lines starting with `|` continue the previous rule; `#` starts a comment
/// line. Whitespace around each alternative is trimmed, whitespace inside is
/// kept as part of literal terminals.
pub fn parse_bnf(text: &str) -> Result<Grammar> {
    let mut order: Vec<String> = Vec::new();
    let mut raw: HashMap<String, Vec<Vec<(bool, String)>>> = HashMap::new();
    let mut current: Option<String> = None;

    for (ln, line) in text.lines().enumerate() {
        let line_no = ln + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let (lhs, body, body_col) = if let Some(rest) = trimmed.strip_prefix('|') {
            let lhs = current.clone().ok_or_else(|| syntax(line_no, 1, "continuation without a rule"))?;
            (lhs, rest, line.len() - rest.len())
        } else {
            let sep = line.find("::=").ok_or_else(|| syntax(line_no, 1, "expected `::=`"))?;
            let lhs = line[..sep].trim();
            let name = lhs
                .strip_prefix('<')
                .and_then(|s| s.strip_suffix('>'))
                .filter(|s| !s.is_empty())
                .ok_or_else(|| syntax(line_no, 1, "left-hand side must be `<name>`"))?;
            if raw.contains_key(name) {
                return Err(syntax(line_no, 1, format!("duplicate rule for <{name}>")));
            }
            order.push(name.to_string());
            raw.insert(name.to_string(), Vec::new());
            current = Some(name.to_string());
            (name.to_string(), &line[sep + 3..], sep + 3)
        };
        let mut col = body_col;
        for alt in body.split('|') {
            let t = alt.trim();
            if t.is_empty() {
                return Err(syntax(line_no, col + 1, "empty alternative"));
            }
            let lead = alt.len() - alt.trim_start().len();
            let tokens = tokenize_alt(t, line_no, col + lead)?;
            raw.get_mut(&lhs).unwrap().push(tokens);
            col += alt.len() + 1;
        }
    }
    if order.is_empty() {
        return Err(syntax(1, 1, "no rules"));
    }

    let index: HashMap<&str, usize> = order.iter().enumerate().map(|(i, n)| (n.as_str(), i)).collect();
    let mut terminals = BTreeSet::new();
    let mut rules = Vec::with_capacity(order.len());
    for name in &order {
        let mut alts = Vec::new();
        for tokens in &raw[name] {
            let mut syms = Vec::with_capacity(tokens.len());
            for (is_nt, tok) in tokens {
                if *is_nt {
                    let id = *index.get(tok.as_str()).ok_or_else(|| Error::UndefinedNonTerminal(tok.clone()))?;
                    syms.push(Symbol::NonTerminal(id));
                } else {
                    terminals.insert(tok.clone());
                    syms.push(Symbol::Terminal(tok.clone()));
                }
            }
            alts.push(syms);
        }
        rules.push(alts);
    }

    let n = rules.len();
    // Fixed point of min_depth(A) = min over alts of 1 + max child depth.
    let mut min_depth = vec![usize::MAX; n];
    loop {
        let mut changed = false;
        for nt in 0..n {
            for alt in &rules[nt] {
                let d = alt_depth(alt, &min_depth);
                if d < min_depth[nt] {
                    min_depth[nt] = d;
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    if min_depth[0] == usize::MAX {
        return Err(Error::UnreachableStart(order[0].clone()));
    }
    if let Some(nt) = (0..n).find(|&nt| min_depth[nt] == usize::MAX) {
        return Err(Error::NonTerminating(order[nt].clone()));
    }
    let alt_min_depth = rules.iter().map(|alts| alts.iter().map(|a| alt_depth(a, &min_depth)).collect()).collect();

    // reach[a][b]: b derivable (in >= 1 step) from a.
    let mut reach = vec![vec![false; n]; n];
    for (a, alts) in rules.iter().enumerate() {
        for s in alts.iter().flatten() {
            if let Symbol::NonTerminal(b) = s {
                reach[a][*b] = true;
            }
        }
    }
    for k in 0..n {
        for a in 0..n {
            if reach[a][k] {
                for b in 0..n {
                    if reach[k][b] {
                        reach[a][b] = true;
                    }
                }
            }
        }
    }
    let recursive = rules
        .iter()
        .enumerate()
        .map(|(nt, alts)| {
            alts.iter()
                .map(|alt| {
                    alt.iter().any(|s| match s {
                        Symbol::NonTerminal(c) => *c == nt || reach[*c][nt],
                        Symbol::Terminal(_) => false,
                    })
                })
                .collect()
        })
        .collect();

    Ok(Grammar { names: order, rules, terminals, start: 0, min_depth, alt_min_depth, recursive })
}

fn alt_depth(alt: &[Symbol], min_depth: &[usize]) -> usize {
    let mut deepest = 0usize;
    for s in alt {
        if let Symbol::NonTerminal(c) = s {
            if min_depth[*c] == usize::MAX {
                return usize::MAX;
            }
            deepest = deepest.max(min_depth[*c]);
        }
    }
    deepest + 1
}
