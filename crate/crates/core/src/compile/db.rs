//! Tuple-independent databases over the schema `R(x)`, `S1(x,y)` ... `Sk(x,y)`, `T(y)`.
//!
//! File format, one fact per line: `R a p`, `S<i> a b p`, `T b p`, where `p`
//! is a rational `num/den`, an integer, or a decimal. Blank lines and lines
//! starting with `#` are ignored.

use std::collections::HashMap;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DbError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("duplicate fact {0}")]
    Duplicate(String),
    #[error("probability {0} outside [0, 1]")]
    BadProbability(String),
    #[error("relation S{index} outside S1..S{k}")]
    RelationOutOfRange { index: u8, k: u8 },
}

/// A fact; constants are indices into the database's domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Fact {
    R(u32),
    /// `S_i(x, y)` with `1 <= i <= k`.
    S(u8, u32, u32),
    T(u32),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TidDatabase {
    k: u8,
    domain: Vec<String>,
    constants: HashMap<String, u32>,
    facts: Vec<Fact>,
    probs: Vec<BigRational>,
    index: HashMap<Fact, usize>,
}

impl TidDatabase {
    pub fn new(k: u8) -> Self {
        TidDatabase {
            k,
            domain: Vec::new(),
            constants: HashMap::new(),
            facts: Vec::new(),
            probs: Vec::new(),
            index: HashMap::new(),
        }
    }

    /// Every possible fact over `n` constants named `c0, c1, ...`, each with
    /// probability `p`, in the order R, S1, ..., Sk, T.
    pub fn complete(k: u8, n: usize, p: &BigRational) -> Self {
        let mut db = TidDatabase::new(k);
        let consts: Vec<u32> = (0..n).map(|i| db.constant(&format!("c{i}"))).collect();
        for &a in &consts {
            db.add(Fact::R(a), p.clone()).expect("fresh fact");
        }
        for i in 1..=k {
            for &a in &consts {
                for &b in &consts {
                    db.add(Fact::S(i, a, b), p.clone()).expect("fresh fact");
                }
            }
        }
        for &b in &consts {
            db.add(Fact::T(b), p.clone()).expect("fresh fact");
        }
        db
    }

    pub fn k(&self) -> u8 {
        self.k
    }

    pub fn len(&self) -> usize {
        self.facts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.facts.is_empty()
    }

    pub fn domain(&self) -> &[String] {
        &self.domain
    }

    pub fn facts(&self) -> &[Fact] {
        &self.facts
    }

    pub fn probs(&self) -> &[BigRational] {
        &self.probs
    }

    pub fn index_of(&self, fact: Fact) -> Option<usize> {
        self.index.get(&fact).copied()
    }

    /// Interns a constant name.
    pub fn constant(&mut self, name: &str) -> u32 {
        if let Some(&c) = self.constants.get(name) {
            return c;
        }
        let c = self.domain.len() as u32;
        self.domain.push(name.to_string());
        self.constants.insert(name.to_string(), c);
        c
    }

    pub fn add(&mut self, fact: Fact, p: BigRational) -> Result<usize, DbError> {
        if let Fact::S(i, _, _) = fact {
            if i == 0 || i > self.k {
                return Err(DbError::RelationOutOfRange {
                    index: i,
                    k: self.k,
                });
            }
        }
        if p < BigRational::zero() || p > BigRational::one() {
            return Err(DbError::BadProbability(p.to_string()));
        }
        if self.index.contains_key(&fact) {
            return Err(DbError::Duplicate(self.label(fact)));
        }
        self.index.insert(fact, self.facts.len());
        self.facts.push(fact);
        self.probs.push(p);
        Ok(self.facts.len() - 1)
    }

    /// Replaces every probability; `probs` follows fact order.
    pub fn with_probs(&self, probs: Vec<BigRational>) -> Result<Self, DbError> {
        assert_eq!(probs.len(), self.len(), "one probability per fact");
        if let Some(p) = probs
            .iter()
            .find(|p| **p < BigRational::zero() || **p > BigRational::one())
        {
            return Err(DbError::BadProbability(p.to_string()));
        }
        Ok(TidDatabase {
            probs,
            ..self.clone()
        })
    }

    /// Keeps only the facts selected by `keep` (by fact index).
    pub fn restrict(&self, keep: impl Fn(usize) -> bool) -> Self {
        let mut db = TidDatabase::new(self.k);
        for name in &self.domain {
            db.constant(name);
        }
        for (i, (&f, p)) in self.facts.iter().zip(&self.probs).enumerate() {
            if keep(i) {
                db.add(f, p.clone()).expect("subset of a valid database");
            }
        }
        db
    }

    pub fn label(&self, fact: Fact) -> String {
        let name = |c: u32| {
            self.domain
                .get(c as usize)
                .map(String::as_str)
                .unwrap_or("?")
        };
        match fact {
            Fact::R(a) => format!("R({})", name(a)),
            Fact::S(i, a, b) => format!("S{i}({},{})", name(a), name(b)),
            Fact::T(b) => format!("T({})", name(b)),
        }
    }

    pub fn labels(&self) -> Vec<String> {
        self.facts.iter().map(|&f| self.label(f)).collect()
    }

    pub fn parse(text: &str, k: u8) -> Result<Self, DbError> {
        let mut db = TidDatabase::new(k);
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |msg: String| DbError::Parse { line: n + 1, msg };
            let toks: Vec<&str> = line.split_whitespace().collect();
            let (rel, rest) = toks.split_first().expect("non-empty line");
            let arity = if *rel == "R" || *rel == "T" { 1 } else { 2 };
            if rest.len() != arity + 1 {
                return Err(err(format!(
                    "expected {} constants and a probability",
                    arity
                )));
            }
            let p = parse_rational(rest[arity]).map_err(err)?;
            let fact = match *rel {
                "R" => Fact::R(db.constant(rest[0])),
                "T" => Fact::T(db.constant(rest[0])),
                s => {
                    let i: u8 = s
                        .strip_prefix('S')
                        .and_then(|i| i.parse().ok())
                        .ok_or_else(|| err(format!("unknown relation {s:?}")))?;
                    let a = db.constant(rest[0]);
                    let b = db.constant(rest[1]);
                    Fact::S(i, a, b)
                }
            };
            db.add(fact, p).map_err(|e| match e {
                DbError::Parse { .. } => e,
                other => err(other.to_string()),
            })?;
        }
        Ok(db)
    }
}

impl fmt::Display for TidDatabase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = |c: u32| &self.domain[c as usize];
        for (fact, p) in self.facts.iter().zip(&self.probs) {
            match *fact {
                Fact::R(a) => writeln!(f, "R {} {p}", name(a))?,
                Fact::S(i, a, b) => writeln!(f, "S{i} {} {} {p}", name(a), name(b))?,
                Fact::T(b) => writeln!(f, "T {} {p}", name(b))?,
            }
        }
        Ok(())
    }
}

/// Parses `num/den`, an integer, or a decimal such as `0.125` exactly.
pub fn parse_rational(text: &str) -> Result<BigRational, String> {
    let bad = || format!("bad probability {text:?}");
    if let Some((n, d)) = text.split_once('/') {
        let n: BigInt = n.parse().map_err(|_| bad())?;
        let d: BigInt = d.parse().map_err(|_| bad())?;
        if d.is_zero() {
            return Err(bad());
        }
        return Ok(BigRational::new(n, d));
    }
    if let Some((int, frac)) = text.split_once('.') {
        if frac.is_empty() || !frac.chars().all(|c| c.is_ascii_digit()) {
            return Err(bad());
        }
        let digits: BigInt = format!("{}{frac}", if int.is_empty() { "0" } else { int })
            .parse()
            .map_err(|_| bad())?;
        let scale = num_traits::pow(BigInt::from(10), frac.len());
        return Ok(BigRational::new(digits, scale));
    }
    let n: BigInt = text.parse().map_err(|_| bad())?;
    Ok(BigRational::from_integer(n))
}
