//! Boolean functions on the variables `{0, ..., k}` stored as flat truth
//! tables.
//!
//! A valuation is identified with the set of variables it maps to 1, and that
//! set with its bitmask: bit `i` of a table index is variable `i`. The
//! textual form of a function is `k:<int> table:<hex>`, where hex digit `d`
//! encodes table bits `4d..4d+3` (least significant nibble first).

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::perm;

/// Largest supported variable bound (tables of at most 8192 bits).
pub const MAX_K: u8 = 12;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BoolFnError {
    #[error("variable bound k={0} outside 0..={MAX_K}")]
    KOutOfRange(u32),
    #[error("variable {var} outside 0..={k}")]
    VariableOutOfRange { var: u32, k: u8 },
    #[error("function is not monotone")]
    NotMonotone,
    #[error("function is constant")]
    Constant,
    #[error("parse error: {0}")]
    Parse(String),
}

/// A set of variables, i.e. a valuation.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct VarSet(u32);

impl VarSet {
    pub const EMPTY: VarSet = VarSet(0);

    pub fn from_bits(bits: u32) -> Self {
        VarSet(bits)
    }

    /// `{0, ..., k}`.
    pub fn full(k: u8) -> Self {
        VarSet((1u32 << (k + 1)) - 1)
    }

    pub fn bits(self) -> u32 {
        self.0
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn contains(self, var: u8) -> bool {
        (self.0 >> var) & 1 == 1
    }

    pub fn with(self, var: u8) -> Self {
        VarSet(self.0 | (1 << var))
    }

    pub fn without(self, var: u8) -> Self {
        VarSet(self.0 & !(1 << var))
    }

    pub fn toggled(self, var: u8) -> Self {
        VarSet(self.0 ^ (1 << var))
    }

    pub fn union(self, other: VarSet) -> Self {
        VarSet(self.0 | other.0)
    }

    pub fn intersects(self, other: VarSet) -> bool {
        self.0 & other.0 != 0
    }

    pub fn is_subset(self, other: VarSet) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn iter(self) -> impl Iterator<Item = u8> {
        (0..32u8).filter(move |&v| self.contains(v))
    }
}

impl FromIterator<u8> for VarSet {
    fn from_iter<I: IntoIterator<Item = u8>>(iter: I) -> Self {
        VarSet(iter.into_iter().fold(0, |acc, v| acc | (1 << v)))
    }
}

impl fmt::Debug for VarSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for VarSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, v) in self.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{v}")?;
        }
        write!(f, "}}")
    }
}

/// Toggles `l` in `nu`.
pub fn tgl(k: u8, nu: VarSet, l: u8) -> Result<VarSet, BoolFnError> {
    if l > k {
        return Err(BoolFnError::VariableOutOfRange { var: l as u32, k });
    }
    Ok(nu.toggled(l))
}

/// Truth table of a Boolean function on `{0, ..., k}`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BoolFn {
    k: u8,
    words: Vec<u64>,
}

fn word_count(k: u8) -> usize {
    ((1usize << (k + 1)) / 64).max(1)
}

impl BoolFn {
    fn check_k(k: u8) -> Result<(), BoolFnError> {
        if k > MAX_K {
            Err(BoolFnError::KOutOfRange(k as u32))
        } else {
            Ok(())
        }
    }

    pub fn constant(k: u8, value: bool) -> Result<Self, BoolFnError> {
        Self::from_fn(k, |_| value)
    }

    /// Tabulates `f` over every valuation of `{0, ..., k}`.
    pub fn from_fn(k: u8, f: impl Fn(VarSet) -> bool) -> Result<Self, BoolFnError> {
        Self::check_k(k)?;
        let mut out = BoolFn {
            k,
            words: vec![0; word_count(k)],
        };
        for m in 0..(1u32 << (k + 1)) {
            if f(VarSet(m)) {
                out.set(m as usize, true);
            }
        }
        Ok(out)
    }

    /// Builds a function from a packed table; bits above `2^(k+1)` must be 0.
    pub fn from_u128(k: u8, table: u128) -> Result<Self, BoolFnError> {
        if k as usize + 1 > perm::FAST_VARS {
            return Err(BoolFnError::KOutOfRange(k as u32));
        }
        let bits = 1u32 << (k + 1);
        if bits < 128 && table >> bits != 0 {
            return Err(BoolFnError::Parse("table has bits beyond 2^(k+1)".into()));
        }
        let words = if bits <= 64 {
            vec![table as u64]
        } else {
            vec![table as u64, (table >> 64) as u64]
        };
        Ok(BoolFn { k, words })
    }

    /// Packed table, available for `k <= 6`.
    pub fn to_u128(&self) -> Option<u128> {
        match self.words.as_slice() {
            [lo] => Some(*lo as u128),
            [lo, hi] => Some(*lo as u128 | (*hi as u128) << 64),
            _ => None,
        }
    }

    pub fn k(&self) -> u8 {
        self.k
    }

    pub fn num_vars(&self) -> usize {
        self.k as usize + 1
    }

    pub fn table_len(&self) -> usize {
        1 << (self.k + 1)
    }

    pub fn all_vars(&self) -> VarSet {
        VarSet::full(self.k)
    }

    #[inline]
    pub fn bit(&self, m: usize) -> bool {
        (self.words[m / 64] >> (m % 64)) & 1 == 1
    }

    fn set(&mut self, m: usize, value: bool) {
        if value {
            self.words[m / 64] |= 1 << (m % 64);
        } else {
            self.words[m / 64] &= !(1 << (m % 64));
        }
    }

    pub fn evaluate(&self, nu: VarSet) -> Result<bool, BoolFnError> {
        if !nu.is_subset(self.all_vars()) {
            let var = (nu.bits() & !self.all_vars().bits()).trailing_zeros();
            return Err(BoolFnError::VariableOutOfRange { var, k: self.k });
        }
        Ok(self.bit(nu.index()))
    }

    /// Valuation lookup without range checks; `nu` must be within `{0..k}`.
    #[inline]
    pub fn at(&self, nu: VarSet) -> bool {
        self.bit(nu.index())
    }

    pub fn depends_on(&self, l: u8) -> bool {
        (0..self.table_len())
            .filter(|m| (m >> l) & 1 == 0)
            .any(|m| self.bit(m) != self.bit(m | (1 << l)))
    }

    /// The set of variables the function depends on.
    pub fn dep(&self) -> VarSet {
        (0..=self.k).filter(|&l| self.depends_on(l)).collect()
    }

    pub fn is_nondegenerate(&self) -> bool {
        self.dep() == self.all_vars()
    }

    pub fn is_constant(&self) -> bool {
        let first = self.bit(0);
        (0..self.table_len()).all(|m| self.bit(m) == first)
    }

    pub fn is_monotone(&self) -> bool {
        (0..=self.k).all(|l| {
            (0..self.table_len())
                .filter(|m| (m >> l) & 1 == 0)
                .all(|m| !self.bit(m) || self.bit(m | (1 << l)))
        })
    }

    /// Bitwise complement.
    pub fn negate(&self) -> BoolFn {
        let mut words: Vec<u64> = self.words.iter().map(|w| !w).collect();
        let bits = self.table_len();
        if bits < 64 {
            words[0] &= (1u64 << bits) - 1;
        }
        BoolFn { k: self.k, words }
    }

    /// Satisfying valuations in ascending index order.
    pub fn sat_valuations(&self) -> Vec<VarSet> {
        (0..self.table_len() as u32)
            .map(VarSet)
            .filter(|&nu| self.at(nu))
            .collect()
    }

    pub fn count_sat(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// The unique antichain of positive clauses equivalent to a monotone,
    /// non-constant function. Each maximal false point `nu` contributes the
    /// clause `{0..k} \ nu`.
    pub fn minimized_cnf(&self) -> Result<MonotoneCnf, BoolFnError> {
        if !self.is_monotone() {
            return Err(BoolFnError::NotMonotone);
        }
        if self.is_constant() {
            return Err(BoolFnError::Constant);
        }
        let all = self.all_vars();
        let mut clauses: Vec<VarSet> = (0..self.table_len() as u32)
            .map(VarSet)
            .filter(|&nu| !self.at(nu))
            .filter(|&nu| (0..=self.k).all(|l| nu.contains(l) || self.at(nu.with(l))))
            .map(|nu| VarSet(all.bits() & !nu.bits()))
            .collect();
        clauses.sort();
        Ok(MonotoneCnf { k: self.k, clauses })
    }

    /// Renames variable `i` to `perm[i]`.
    pub fn permute(&self, perm: &[usize]) -> BoolFn {
        assert_eq!(perm.len(), self.num_vars(), "permutation size");
        let mut out = BoolFn {
            k: self.k,
            words: vec![0; self.words.len()],
        };
        for m in 0..self.table_len() {
            if self.bit(m) {
                let image = perm
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| (m >> i) & 1 == 1)
                    .fold(0usize, |acc, (_, &t)| acc | (1 << t));
                out.set(image, true);
            }
        }
        out
    }

    fn swap_vars(&mut self, i: usize, j: usize) {
        let (i, j) = if i < j { (i, j) } else { (j, i) };
        let delta = (1usize << j) - (1usize << i);
        for p in 0..self.table_len() {
            if (p >> i) & 1 == 1 && (p >> j) & 1 == 0 {
                let (a, b) = (self.bit(p), self.bit(p + delta));
                if a != b {
                    self.set(p, b);
                    self.set(p + delta, a);
                }
            }
        }
    }

    /// Orbit representative under variable renaming: the minimum table,
    /// compared as an integer, over all `(k+1)!` permutations.
    pub fn canonicalize(&self) -> BoolFn {
        if let Some(table) = self.to_u128() {
            let best = perm::canonical_u128(table, self.num_vars());
            return BoolFn::from_u128(self.k, best).expect("same bound");
        }
        let mut cur = self.clone();
        let mut best = self.clone();
        for (a, b) in perm::HeapSwaps::new(self.num_vars()) {
            cur.swap_vars(a, b);
            if cur.cmp_table(&best) == Ordering::Less {
                best = cur.clone();
            }
        }
        best
    }

    /// Compares two tables of the same bound as unsigned integers.
    pub fn cmp_table(&self, other: &BoolFn) -> Ordering {
        self.k
            .cmp(&other.k)
            .then_with(|| self.words.iter().rev().cmp(other.words.iter().rev()))
    }

    pub fn to_hex(&self) -> String {
        let digits = (self.table_len() / 4).max(1);
        (0..digits)
            .map(|d| {
                let nibble = (self.words[d / 16] >> ((d % 16) * 4)) & 0xf;
                char::from_digit(nibble as u32, 16).expect("nibble")
            })
            .collect()
    }

    pub fn from_hex(k: u8, hex: &str) -> Result<Self, BoolFnError> {
        Self::check_k(k)?;
        let bits = 1usize << (k + 1);
        let digits = (bits / 4).max(1);
        if hex.len() != digits {
            return Err(BoolFnError::Parse(format!(
                "expected {digits} hex digits for k={k}, got {}",
                hex.len()
            )));
        }
        let mut words = vec![0u64; word_count(k)];
        for (d, c) in hex.chars().enumerate() {
            let nibble = c
                .to_digit(16)
                .ok_or_else(|| BoolFnError::Parse(format!("bad hex digit {c:?}")))?
                as u64;
            words[d / 16] |= nibble << ((d % 16) * 4);
        }
        if bits < 64 && words[0] >> bits != 0 {
            return Err(BoolFnError::Parse("table has bits beyond 2^(k+1)".into()));
        }
        Ok(BoolFn { k, words })
    }
}

impl PartialOrd for BoolFn {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for BoolFn {
    fn cmp(&self, other: &Self) -> Ordering {
        self.cmp_table(other)
    }
}

impl fmt::Debug for BoolFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BoolFn({self})")
    }
}

impl fmt::Display for BoolFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "k:{} table:{}", self.k, self.to_hex())
    }
}

impl FromStr for BoolFn {
    type Err = BoolFnError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut k = None;
        let mut table = None;
        for tok in s.split_whitespace() {
            if let Some(v) = tok.strip_prefix("k:") {
                k = Some(
                    v.parse::<u8>()
                        .map_err(|e| BoolFnError::Parse(format!("bad k {v:?}: {e}")))?,
                );
            } else if let Some(v) = tok.strip_prefix("table:") {
                table = Some(v);
            }
        }
        match (k, table) {
            (Some(k), Some(t)) => BoolFn::from_hex(k, t),
            _ => Err(BoolFnError::Parse(format!(
                "expected `k:<int> table:<hex>`, got {s:?}"
            ))),
        }
    }
}

/// A clause of a monotone CNF: a disjunction of positive literals.
pub type Clause = VarSet;

/// Conjunction of positive clauses forming an antichain.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MonotoneCnf {
    pub k: u8,
    pub clauses: Vec<Clause>,
}

impl MonotoneCnf {
    pub fn evaluate(&self, nu: VarSet) -> bool {
        self.clauses.iter().all(|c| c.intersects(nu))
    }

    pub fn to_bool_fn(&self) -> BoolFn {
        BoolFn::from_fn(self.k, |nu| self.evaluate(nu)).expect("bound already validated")
    }

    pub fn is_antichain(&self) -> bool {
        self.clauses.iter().enumerate().all(|(i, a)| {
            self.clauses
                .iter()
                .enumerate()
                .all(|(j, b)| i == j || !a.is_subset(*b))
        })
    }
}

impl fmt::Display for MonotoneCnf {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.clauses.is_empty() {
            return write!(f, "true");
        }
        for (i, c) in self.clauses.iter().enumerate() {
            if i > 0 {
                write!(f, "&")?;
            }
            let vars: Vec<String> = c.iter().map(|v| v.to_string()).collect();
            write!(f, "({})", vars.join("|"))?;
        }
        Ok(())
    }
}

/// Parses a positive CNF such as `(2|3)&(0|3)`, `24&034&013` (single-digit
/// variables concatenated within a clause) or `0,10&3` (comma-separated
/// variables). The literals `true` and `false` denote constants. When `k` is
/// `None` it is the largest variable mentioned (at least 1).
pub fn parse_cnf(text: &str, k: Option<u8>) -> Result<BoolFn, BoolFnError> {
    let text: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    if text.is_empty() {
        return Err(BoolFnError::Parse("empty function".into()));
    }
    if text == "true" || text == "false" {
        let k = k.ok_or_else(|| BoolFnError::Parse("constant needs an explicit k".into()))?;
        return BoolFn::constant(k, text == "true");
    }
    let mut clauses = Vec::new();
    for raw in text.split('&') {
        let body = raw
            .strip_prefix('(')
            .and_then(|r| r.strip_suffix(')'))
            .unwrap_or(raw);
        if body.is_empty() {
            return Err(BoolFnError::Parse(format!("empty clause in {text:?}")));
        }
        let vars: Vec<u32> = if body.contains('|') || body.contains(',') {
            body.split(['|', ','])
                .map(|t| {
                    t.parse::<u32>()
                        .map_err(|_| BoolFnError::Parse(format!("bad variable {t:?}")))
                })
                .collect::<Result<_, _>>()?
        } else {
            body.chars()
                .map(|c| {
                    c.to_digit(10)
                        .ok_or_else(|| BoolFnError::Parse(format!("bad variable {c:?}")))
                })
                .collect::<Result<_, _>>()?
        };
        clauses.push(vars);
    }
    let max_var = clauses.iter().flatten().copied().max().unwrap_or(0);
    let k = match k {
        Some(k) => k,
        None => u8::try_from(max_var.max(1)).map_err(|_| BoolFnError::KOutOfRange(max_var))?,
    };
    BoolFn::check_k(k)?;
    if max_var > k as u32 {
        return Err(BoolFnError::VariableOutOfRange { var: max_var, k });
    }
    let clauses: Vec<VarSet> = clauses
        .iter()
        .map(|c| c.iter().map(|&v| v as u8).collect())
        .collect();
    BoolFn::from_fn(k, |nu| clauses.iter().all(|c| c.intersects(nu)))
}

/// Accepts either `k:<int> table:<hex>` or CNF text.
pub fn parse_function(text: &str, k: Option<u8>) -> Result<BoolFn, BoolFnError> {
    let trimmed = text.trim();
    if trimmed.starts_with("k:") {
        let f: BoolFn = trimmed.parse()?;
        if let Some(k) = k {
            if k != f.k() {
                return Err(BoolFnError::Parse(format!(
                    "--k {k} disagrees with table bound {}",
                    f.k()
                )));
            }
        }
        Ok(f)
    } else {
        parse_cnf(trimmed, k)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn phi9() -> BoolFn {
        parse_cnf("(2|3)&(0|3)&(1|3)&(0|1|2)", None).unwrap()
    }

    fn set(vars: &[u8]) -> VarSet {
        vars.iter().copied().collect()
    }

    #[test]
    fn evaluate_examples() {
        assert!(phi9().evaluate(set(&[0, 1, 2])).unwrap());
        assert!(!BoolFn::constant(3, false)
            .unwrap()
            .evaluate(VarSet::EMPTY)
            .unwrap());
        assert!(!phi9().evaluate(set(&[3])).unwrap());
        assert_eq!(
            phi9().evaluate(set(&[4])),
            Err(BoolFnError::VariableOutOfRange { var: 4, k: 3 })
        );
    }

    #[test]
    fn tgl_examples() {
        assert_eq!(tgl(3, set(&[0, 2]), 1).unwrap(), set(&[0, 1, 2]));
        assert_eq!(tgl(3, set(&[0, 1]), 1).unwrap(), set(&[0]));
        assert_eq!(tgl(3, VarSet::EMPTY, 3).unwrap(), set(&[3]));
        assert!(tgl(3, VarSet::EMPTY, 4).is_err());
    }

    #[test]
    fn dep_examples() {
        assert_eq!(phi9().dep(), set(&[0, 1, 2, 3]));
        assert_eq!(BoolFn::constant(2, true).unwrap().dep(), VarSet::EMPTY);
        let and01 = parse_cnf("0&1", Some(2)).unwrap();
        assert_eq!(and01.dep(), set(&[0, 1]));
    }

    #[test]
    fn monotonicity_examples() {
        assert!(phi9().is_monotone());
        let f = BoolFn::from_fn(1, |nu| !nu.contains(0) && nu.contains(1)).unwrap();
        assert!(!f.is_monotone());
        assert!(BoolFn::constant(2, false).unwrap().is_monotone());
    }

    #[test]
    fn minimized_cnf_examples() {
        let cnf = phi9().minimized_cnf().unwrap();
        let mut expected = vec![set(&[2, 3]), set(&[0, 3]), set(&[1, 3]), set(&[0, 1, 2])];
        expected.sort();
        assert_eq!(cnf.clauses, expected);
        assert_eq!(
            parse_cnf("0&1", None)
                .unwrap()
                .minimized_cnf()
                .unwrap()
                .clauses,
            vec![set(&[0]), set(&[1])]
        );
        assert_eq!(
            parse_cnf("01", None)
                .unwrap()
                .minimized_cnf()
                .unwrap()
                .clauses,
            vec![set(&[0, 1])]
        );
        assert_eq!(
            BoolFn::constant(2, true).unwrap().minimized_cnf(),
            Err(BoolFnError::Constant)
        );
        let nm = BoolFn::from_fn(1, |nu| !nu.contains(0)).unwrap();
        assert_eq!(nm.minimized_cnf(), Err(BoolFnError::NotMonotone));
    }

    #[test]
    fn canonicalize_examples() {
        let t = BoolFn::constant(3, true).unwrap();
        assert_eq!(t.canonicalize(), t);
        let x0 = parse_cnf("0", Some(1)).unwrap();
        let x1 = parse_cnf("1", Some(1)).unwrap();
        assert_eq!(x0.canonicalize(), x1.canonicalize());
    }

    #[test]
    fn canonical_orbits_on_two_variables() {
        // Brute force: the orbit of each table under the swap 0<->1.
        for table in 0u128..16 {
            let f = BoolFn::from_u128(1, table).unwrap();
            let swapped = f.permute(&[1, 0]);
            let expected = if swapped.cmp_table(&f) == Ordering::Less {
                swapped.clone()
            } else {
                f.clone()
            };
            assert_eq!(f.canonicalize(), expected);
            assert_eq!(swapped.canonicalize(), expected);
        }
    }

    #[test]
    fn generic_canonicalization_agrees_with_fast_path() {
        let f = phi9();
        let mut cur = f.clone();
        let mut best = f.clone();
        for (a, b) in perm::HeapSwaps::new(4) {
            cur.swap_vars(a, b);
            if cur.cmp_table(&best) == Ordering::Less {
                best = cur.clone();
            }
        }
        assert_eq!(best, f.canonicalize());
    }

    #[test]
    fn negate_examples() {
        let f = phi9();
        assert_eq!(f.negate().negate(), f);
        assert_eq!(
            BoolFn::constant(2, false).unwrap().negate(),
            BoolFn::constant(2, true).unwrap()
        );
        let sat = (0..16u32).filter(|&m| f.at(VarSet::from_bits(m))).count();
        assert_eq!(f.negate().sat_valuations().len(), 16 - sat);
    }

    #[test]
    fn sat_valuation_examples() {
        assert!(BoolFn::constant(2, false)
            .unwrap()
            .sat_valuations()
            .is_empty());
        assert_eq!(
            parse_cnf("0&1", None).unwrap().sat_valuations(),
            vec![set(&[0, 1])]
        );
        assert!(phi9().sat_valuations().contains(&set(&[0, 3])));
    }

    #[test]
    fn hex_round_trip_and_errors() {
        let f = phi9();
        let text = f.to_string();
        assert_eq!(text.parse::<BoolFn>().unwrap(), f);
        assert!("k:1 table:ff".parse::<BoolFn>().is_err());
        assert!("k:1".parse::<BoolFn>().is_err());
        // x0 on <1>: true at {0} (index 1) and {0,1} (index 3).
        assert_eq!(parse_cnf("0", Some(1)).unwrap().to_hex(), "a");
    }

    #[test]
    fn parser_accepts_the_shorthands() {
        let a = parse_cnf("24&034&013&12&15&05&35&23&02&25&014&45", None).unwrap();
        assert_eq!(a.k(), 5);
        let b = parse_cnf(
            "(2|4)&(0|3|4)&(0|1|3)&(1|2)&(1|5)&(0|5)&(3|5)&(2|3)&(0|2)&(2|5)&(0|1|4)&(4|5)",
            None,
        )
        .unwrap();
        assert_eq!(a, b);
        let c = parse_cnf("0,10&3", None).unwrap();
        assert_eq!(c.k(), 10);
        assert!(parse_cnf("0&&1", None).is_err());
        assert!(parse_cnf("x", None).is_err());
        assert!(parse_cnf("5", Some(3)).is_err());
    }

    #[test]
    fn dep_definition_exhaustive_small() {
        for k in 1..=2u8 {
            for table in 0u128..(1u128 << (1 << (k + 1))) {
                let f = BoolFn::from_u128(k, table).unwrap();
                for l in 0..=k {
                    let witnessed = (0..f.table_len() as u32).any(|m| {
                        let nu = VarSet::from_bits(m);
                        f.at(nu) != f.at(tgl(k, nu, l).unwrap())
                    });
                    assert_eq!(f.dep().contains(l), witnessed);
                }
            }
        }
    }

    #[test]
    fn dep_of_negation_exhaustive() {
        for k in 1..=2u8 {
            for table in 0u128..(1u128 << (1 << (k + 1))) {
                let f = BoolFn::from_u128(k, table).unwrap();
                assert_eq!(f.negate().dep(), f.dep());
            }
        }
        // k = 3: 2^16 tables.
        for table in (0u128..(1 << 16)).step_by(7) {
            let f = BoolFn::from_u128(3, table).unwrap();
            assert_eq!(f.negate().dep(), f.dep());
        }
    }

    fn monotone_closure(k: u8, seeds: u64) -> BoolFn {
        // Up-closure of a random set of points is monotone.
        let n = 1u32 << (k + 1);
        let points: Vec<u32> = (0..n).filter(|&m| (seeds >> (m % 64)) & 1 == 1).collect();
        BoolFn::from_fn(k, |nu| points.iter().any(|&p| p & !nu.bits() == 0)).unwrap()
    }

    proptest! {
        #[test]
        fn minimized_cnf_reproduces_table(seeds in any::<u64>(), k in 1u8..=5) {
            let f = monotone_closure(k, seeds);
            prop_assume!(!f.is_constant());
            let cnf = f.minimized_cnf().unwrap();
            prop_assert!(cnf.is_antichain());
            prop_assert_eq!(cnf.to_bool_fn(), f);
        }

        #[test]
        fn canonicalize_is_orbit_invariant(seeds in any::<u64>(), perm in Just((0..5usize).collect::<Vec<_>>()).prop_shuffle()) {
            let f = monotone_closure(4, seeds);
            let c = f.canonicalize();
            prop_assert_eq!(c.canonicalize(), c.clone());
            prop_assert_eq!(f.permute(&perm).canonicalize(), c);
        }
    }
}
