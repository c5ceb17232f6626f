use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::{Error, Result};

/// Divisors with magnitude at or below this are treated as zero.
pub const PDIV_EPSILON: f64 = 1e-9;
/// Result of a protected division by (near) zero.
pub const PDIV_FALLBACK: f64 = 1.0;
const CLAMP: f64 = 1e308;

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Pdiv(Box<Expr>, Box<Expr>),
    Var(usize),
    Const(f64),
}

#[inline]
fn pdiv(a: f64, b: f64) -> f64 {
    if b.abs() <= PDIV_EPSILON {
        PDIV_FALLBACK
    } else {
        a / b
    }
}

#[inline]
fn clamp(v: f64) -> f64 {
    // Keeps every intermediate finite, so no inf - inf or 0 * inf NaNs.
    v.clamp(-CLAMP, CLAMP)
}

/// Overflow-safe logistic function.
pub fn sigmoid(o: f64) -> f64 {
    if o >= 0.0 {
        1.0 / (1.0 + (-o).exp())
    } else {
        let e = o.exp();
        e / (1.0 + e)
    }
}

impl Expr {
    pub fn eval(&self, row: &[f64]) -> f64 {
        match self {
            Expr::Add(a, b) => clamp(a.eval(row) + b.eval(row)),
            Expr::Sub(a, b) => clamp(a.eval(row) - b.eval(row)),
            Expr::Mul(a, b) => clamp(a.eval(row) * b.eval(row)),
            Expr::Pdiv(a, b) => clamp(pdiv(a.eval(row), b.eval(row))),
            Expr::Var(i) => row[*i],
            Expr::Const(c) => *c,
        }
    }

    fn visit(&self, f: &mut impl FnMut(&Expr)) {
        f(self);
        match self {
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Pdiv(a, b) => {
                a.visit(f);
                b.visit(f);
            }
            Expr::Var(_) | Expr::Const(_) => {}
        }
    }

    /// Variable indices in left-to-right order, repeats included.
    pub fn var_occurrences(&self) -> Vec<usize> {
        let mut out = Vec::new();
        self.visit(&mut |e| {
            if let Expr::Var(i) = e {
                out.push(*i);
            }
        });
        out
    }

    pub fn node_count(&self) -> usize {
        let mut n = 0;
        self.visit(&mut |_| n += 1);
        n
    }

    /// Parse function-call notation, e.g. `add(x[3], pdiv(x[1], 02.50))`.
    pub fn parse(text: &str) -> Result<Expr> {
        let mut p = Parser { s: text.as_bytes(), pos: 0 };
        let e = p.expr().ok_or_else(|| Error::BadExpression(text.to_string()))?;
        p.skip_ws();
        if p.pos != p.s.len() {
            return Err(Error::BadExpression(text.to_string()));
        }
        Ok(e)
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let bin = |f: &mut fmt::Formatter<'_>, name: &str, a: &Expr, b: &Expr| write!(f, "{name}({a}, {b})");
        match self {
            Expr::Add(a, b) => bin(f, "add", a, b),
            Expr::Sub(a, b) => bin(f, "sub", a, b),
            Expr::Mul(a, b) => bin(f, "mul", a, b),
            Expr::Pdiv(a, b) => bin(f, "pdiv", a, b),
            Expr::Var(i) => write!(f, "x[{i}]"),
            Expr::Const(c) => write!(f, "{c:05.2}"),
        }
    }
}

struct Parser<'a> {
    s: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn skip_ws(&mut self) {
        while self.pos < self.s.len() && self.s[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn eat(&mut self, tok: &str) -> bool {
        self.skip_ws();
        if self.s[self.pos..].starts_with(tok.as_bytes()) {
            self.pos += tok.len();
            true
        } else {
            false
        }
    }

    fn number(&mut self) -> Option<&str> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.s.len() && (self.s[self.pos].is_ascii_digit() || self.s[self.pos] == b'.') {
            self.pos += 1;
        }
        (self.pos > start).then(|| std::str::from_utf8(&self.s[start..self.pos]).unwrap())
    }

    fn expr(&mut self) -> Option<Expr> {
        for (name, ctor) in [
            ("add(", Expr::Add as fn(Box<Expr>, Box<Expr>) -> Expr),
            ("sub(", Expr::Sub),
            ("mul(", Expr::Mul),
            ("pdiv(", Expr::Pdiv),
        ] {
            if self.eat(name) {
                let a = self.expr()?;
                if !self.eat(",") {
                    return None;
                }
                let b = self.expr()?;
                if !self.eat(")") {
                    return None;
                }
                return Some(ctor(Box::new(a), Box::new(b)));
            }
        }
        if self.eat("x[") {
            let idx = self.number()?.parse().ok()?;
            return self.eat("]").then_some(Expr::Var(idx));
        }
        let v: f64 = self.number()?.parse().ok()?;
        v.is_finite().then_some(Expr::Const(v))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Op {
    Add,
    Sub,
    Mul,
    Pdiv,
    Var(usize),
    Const(f64),
}

/// Postfix form of an [`Expr`] for column-at-a-time evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct Program {
    ops: Vec<Op>,
}

impl Program {
    pub fn compile(expr: &Expr) -> Program {
        fn emit(e: &Expr, ops: &mut Vec<Op>) {
            let bin = |a: &Expr, b: &Expr, op: Op, ops: &mut Vec<Op>| {
                emit(a, ops);
                emit(b, ops);
                ops.push(op);
            };
            match e {
                Expr::Add(a, b) => bin(a, b, Op::Add, ops),
                Expr::Sub(a, b) => bin(a, b, Op::Sub, ops),
                Expr::Mul(a, b) => bin(a, b, Op::Mul, ops),
                Expr::Pdiv(a, b) => bin(a, b, Op::Pdiv, ops),
                Expr::Var(i) => ops.push(Op::Var(*i)),
                Expr::Const(c) => ops.push(Op::Const(*c)),
            }
        }
        let mut ops = Vec::new();
        emit(expr, &mut ops);
        Program { ops }
    }

    /// Raw outputs for every row, given column-major features.
    pub fn eval_columns(&self, columns: &[Vec<f64>], n_rows: usize) -> Vec<f64> {
        let mut stack: Vec<Vec<f64>> = Vec::new();
        let mut pool: Vec<Vec<f64>> = Vec::new();
        let fresh = |pool: &mut Vec<Vec<f64>>| pool.pop().unwrap_or_else(|| Vec::with_capacity(n_rows));
        for op in &self.ops {
            match *op {
                Op::Var(i) => {
                    let mut buf = fresh(&mut pool);
                    buf.clear();
                    buf.extend_from_slice(&columns[i]);
                    stack.push(buf);
                }
                Op::Const(c) => {
                    let mut buf = fresh(&mut pool);
                    buf.clear();
                    buf.resize(n_rows, c);
                    stack.push(buf);
                }
                bin => {
                    let b = stack.pop().expect("well-formed program");
                    let a = stack.last_mut().expect("well-formed program");
                    match bin {
                        Op::Add => a.iter_mut().zip(&b).for_each(|(x, y)| *x = clamp(*x + y)),
                        Op::Sub => a.iter_mut().zip(&b).for_each(|(x, y)| *x = clamp(*x - y)),
                        Op::Mul => a.iter_mut().zip(&b).for_each(|(x, y)| *x = clamp(*x * y)),
                        Op::Pdiv => a.iter_mut().zip(&b).for_each(|(x, y)| *x = clamp(pdiv(*x, *y))),
                        Op::Var(_) | Op::Const(_) => unreachable!(),
                    }
                    pool.push(b);
                }
            }
        }
        stack.pop().unwrap_or_default()
    }
}

/// An evolved classifier: expression, its source text and usage metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct Phenotype {
    expr: Expr,
    program: Program,
    source_text: String,
    depth: usize,
    used_features: BTreeSet<usize>,
}

impl Phenotype {
    /// `depth` is the derivation-tree depth reported by the mapper.
    pub fn new(source_text: &str, depth: usize) -> Result<Self> {
        let expr = Expr::parse(source_text)?;
        let used_features = expr.var_occurrences().into_iter().collect();
        Ok(Phenotype {
            program: Program::compile(&expr),
            expr,
            source_text: source_text.to_string(),
            depth,
            used_features,
        })
    }

    pub fn expr(&self) -> &Expr {
        &self.expr
    }

    pub fn program(&self) -> &Program {
        &self.program
    }

    pub fn text(&self) -> &str {
        &self.source_text
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn used_features(&self) -> &BTreeSet<usize> {
        &self.used_features
    }

    fn check_row(&self, row: &[f64]) -> Result<()> {
        match self.used_features.last() {
            Some(&max) if max >= row.len() => Err(Error::FeatureIndexOutOfRange { index: max, len: row.len() }),
            _ => Ok(()),
        }
    }

    /// Raw output `o`.
    pub fn eval(&self, row: &[f64]) -> Result<f64> {
        self.check_row(row)?;
        Ok(self.expr.eval(row))
    }

    /// `sigmoid(o)`, the class-1 score.
    pub fn score(&self, row: &[f64]) -> Result<f64> {
        self.eval(row).map(sigmoid)
    }

    /// Sigmoid scores for column-major data.
    pub fn score_columns(&self, columns: &[Vec<f64>], n_rows: usize) -> Result<Vec<f64>> {
        if let Some(&max) = self.used_features.last() {
            if max >= columns.len() {
                return Err(Error::FeatureIndexOutOfRange { index: max, len: columns.len() });
            }
        }
        let mut out = self.program.eval_columns(columns, n_rows);
        out.iter_mut().for_each(|o| *o = sigmoid(*o));
        Ok(out)
    }
}

impl fmt::Display for Phenotype {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.source_text)
    }
}

#[derive(Serialize, Deserialize)]
struct PhenotypeRecord {
    text: String,
    depth: usize,
    used_features: Vec<usize>,
}

impl Serialize for Phenotype {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        PhenotypeRecord {
            text: self.source_text.clone(),
            depth: self.depth,
            used_features: self.used_features.iter().copied().collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Phenotype {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = PhenotypeRecord::deserialize(d)?;
        Phenotype::new(&r.text, r.depth).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn sigmoid_at_zero_and_extremes() {
        let p = Phenotype::new("x[0]", 3).unwrap();
        assert_eq!(p.eval(&[0.0, 1.0]).unwrap(), 0.0);
        assert_eq!(p.score(&[0.0]).unwrap(), 0.5);
        assert_eq!(sigmoid(1e308), 1.0);
        assert_eq!(sigmoid(-1e308), 0.0);
    }

    #[test]
    fn protected_division() {
        let p = Phenotype::new("pdiv(x[1], x[2])", 4).unwrap();
        assert_eq!(p.eval(&[0.0, 5.0, 0.0]).unwrap(), 1.0);
        assert_eq!(p.eval(&[0.0, 5.0, 1e-10]).unwrap(), 1.0);
        assert_eq!(p.eval(&[0.0, 5.0, 2.0]).unwrap(), 2.5);
    }

    #[test]
    fn scaled_variable_plus_constant() {
        let p = Phenotype::new("add(mul(x[0], 02.50), 01.00)", 5).unwrap();
        let o = p.eval(&[2.0]).unwrap();
        assert_eq!(o, 6.0);
        // 1 / (1 + e^-6)
        assert_abs_diff_eq!(p.score(&[2.0]).unwrap(), 0.997_527_376_843_365_2, epsilon = 1e-6);
    }

    #[test]
    fn out_of_range_feature() {
        let p = Phenotype::new("add(x[0], x[9])", 4).unwrap();
        assert!(matches!(p.eval(&[1.0, 2.0]), Err(Error::FeatureIndexOutOfRange { index: 9, len: 2 })));
    }

    #[test]
    fn overflow_never_yields_nan() {
        let p = Phenotype::new("sub(mul(x[0], x[0]), mul(x[0], x[0]))", 5).unwrap();
        let o = p.eval(&[1e200]).unwrap();
        assert!(o.is_finite());
        let q = Phenotype::new("mul(mul(x[0], x[0]), 00.00)", 5).unwrap();
        assert_eq!(q.eval(&[1e200]).unwrap(), 0.0);
    }

    #[test]
    fn parse_and_render() {
        let e = Expr::parse("add(x[17], pdiv(x[5], 03.14))").unwrap();
        assert_eq!(e.to_string(), "add(x[17], pdiv(x[5], 03.14))");
        assert_eq!(e.var_occurrences(), vec![17, 5]);
        assert!(Expr::parse("add(x[1])").is_err());
        assert!(Expr::parse("x[1] junk").is_err());
    }

    #[test]
    fn columnar_matches_rowwise() {
        let p = Phenotype::new("pdiv(sub(x[0], 01.50), add(mul(x[1], x[1]), x[2]))", 6).unwrap();
        let rows = [[1.0, 2.0, -4.0], [3.0, 0.5, 0.1], [-2.0, 0.0, 0.0]];
        let cols: Vec<Vec<f64>> = (0..3).map(|j| rows.iter().map(|r| r[j]).collect()).collect();
        let batch = p.score_columns(&cols, 3).unwrap();
        for (r, s) in rows.iter().zip(batch) {
            assert_eq!(p.score(r).unwrap(), s);
        }
    }

    #[test]
    fn serde_round_trip() {
        let p = Phenotype::new("mul(x[7], x[33])", 5).unwrap();
        let json = serde_json::to_string(&p).unwrap();
        assert_eq!(json, r#"{"text":"mul(x[7], x[33])","depth":5,"used_features":[7,33]}"#);
        let back: Phenotype = serde_json::from_str(&json).unwrap();
        assert_eq!(back, p);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn sigmoid_bounds_and_symmetry(o in -1e6f64..1e6) {
                let s = sigmoid(o);
                prop_assert!((0.0..=1.0).contains(&s));
                prop_assert!((sigmoid(-o) - (1.0 - s)).abs() <= 1e-12);
            }
        }
    }
}
