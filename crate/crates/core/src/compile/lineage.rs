//! H-queries, their evaluation on deterministic instances, and the
//! exponential lineage / probability oracles.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use super::db::{Fact, TidDatabase};
use super::CompileError;
use crate::boolfun::{BoolFn, VarSet};

/// Largest database handled by the table-based oracles.
pub const ORACLE_MAX_FACTS: usize = 24;

/// The query obtained from `phi` by substituting `h_{k,i}` for variable `i`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HQuery {
    phi: BoolFn,
}

impl HQuery {
    pub fn new(phi: BoolFn) -> Self {
        HQuery { phi }
    }

    pub fn k(&self) -> u8 {
        self.phi.k()
    }

    pub fn phi(&self) -> &BoolFn {
        &self.phi
    }

    pub fn negated(&self) -> HQuery {
        HQuery::new(self.phi.negate())
    }
}

/// Pairs of facts `(f, g)` of `db` whose joint presence witnesses `h_{k,i}`.
pub fn witnesses(db: &TidDatabase, i: u8) -> Vec<(usize, usize)> {
    let k = db.k();
    let mut out = Vec::new();
    for (fi, &fact) in db.facts().iter().enumerate() {
        let partner = match (i, fact) {
            (0, Fact::R(a)) => {
                // R(a) pairs with every S1(a, y).
                for (gi, &g) in db.facts().iter().enumerate() {
                    if let Fact::S(1, x, _) = g {
                        if x == a {
                            out.push((fi, gi));
                        }
                    }
                }
                None
            }
            (i, Fact::S(j, a, b)) if i >= 1 && i < k && j == i => Some(Fact::S(i + 1, a, b)),
            (i, Fact::S(j, _, b)) if i == k && j == k => Some(Fact::T(b)),
            _ => None,
        };
        if let Some(g) = partner.and_then(|g| db.index_of(g)) {
            out.push((fi, g));
        }
    }
    out
}

/// Truth of `h_{k,i}` on the facts of `db` selected by `present`.
pub fn eval_h(db: &TidDatabase, i: u8, present: &[bool]) -> bool {
    witnesses(db, i)
        .iter()
        .any(|&(a, b)| present[a] && present[b])
}

/// The set of `i` with `h_{k,i}` true on the selected facts.
pub fn profile(db: &TidDatabase, present: &[bool]) -> VarSet {
    (0..=db.k()).filter(|&i| eval_h(db, i, present)).collect()
}

pub fn eval_query(q: &HQuery, db: &TidDatabase, present: &[bool]) -> bool {
    q.phi().at(profile(db, present))
}

/// `lin(q, D)` as an explicit table over all `2^|D|` sub-instances; bit `m`
/// of the table is the query on the sub-instance whose facts are the set
/// bits of `m`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LineageTable {
    pub num_facts: usize,
    bits: Vec<u64>,
}

impl LineageTable {
    pub fn get(&self, subset: u32) -> bool {
        (self.bits[subset as usize / 64] >> (subset % 64)) & 1 == 1
    }
}

pub fn lineage_table(q: &HQuery, db: &TidDatabase) -> Result<LineageTable, CompileError> {
    let n = db.len();
    if n > ORACLE_MAX_FACTS {
        return Err(CompileError::TooLarge {
            facts: n,
            limit: ORACLE_MAX_FACTS,
        });
    }
    let wit: Vec<Vec<u32>> = (0..=q.k())
        .map(|i| {
            witnesses(db, i)
                .into_iter()
                .map(|(a, b)| (1u32 << a) | (1u32 << b))
                .collect()
        })
        .collect();
    let rows = 1usize << n;
    let mut bits = vec![0u64; rows.div_ceil(64)];
    for m in 0..rows as u32 {
        let prof = VarSet::from_bits(
            wit.iter()
                .enumerate()
                .filter(|(_, ws)| ws.iter().any(|&w| w & !m == 0))
                .fold(0, |acc, (i, _)| acc | (1 << i)),
        );
        if q.phi().at(prof) {
            bits[m as usize / 64] |= 1 << (m % 64);
        }
    }
    Ok(LineageTable { num_facts: n, bits })
}

/// `Pr(q, (D, π))` by summing `Pr(D')` over every satisfying sub-instance.
/// Probabilities are brought to a common denominator so the sum runs over
/// integers.
pub fn brute_force_pqe(q: &HQuery, db: &TidDatabase) -> Result<BigRational, CompileError> {
    let table = lineage_table(q, db)?;
    Ok(pqe_from_table(&table, db.probs()))
}

pub fn pqe_from_table(table: &LineageTable, probs: &[BigRational]) -> BigRational {
    let n = table.num_facts;
    let mut denom = BigInt::one();
    let mut present = Vec::with_capacity(n);
    let mut absent = Vec::with_capacity(n);
    for p in probs {
        let (num, den) = (p.numer().clone(), p.denom().clone());
        absent.push(&den - &num);
        present.push(num);
        denom *= den;
    }
    let mut total = BigInt::zero();
    sum_subsets(table, &present, &absent, 0, 0, BigInt::one(), &mut total);
    BigRational::new(total, denom)
}

fn sum_subsets(
    table: &LineageTable,
    present: &[BigInt],
    absent: &[BigInt],
    i: usize,
    mask: u32,
    weight: BigInt,
    total: &mut BigInt,
) {
    if i == present.len() {
        if table.get(mask) {
            *total += weight;
        }
        return;
    }
    if !absent[i].is_zero() {
        sum_subsets(
            table,
            present,
            absent,
            i + 1,
            mask,
            &weight * &absent[i],
            total,
        );
    }
    if !present[i].is_zero() {
        sum_subsets(
            table,
            present,
            absent,
            i + 1,
            mask | (1 << i),
            weight * &present[i],
            total,
        );
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boolfun::parse_cnf;

    fn phi9() -> BoolFn {
        parse_cnf("(2|3)&(0|3)&(1|3)&(0|1|2)", None).unwrap()
    }

    fn half() -> BigRational {
        BigRational::new(1.into(), 2.into())
    }

    fn db(text: &str, k: u8) -> TidDatabase {
        TidDatabase::parse(text, k).unwrap()
    }

    #[test]
    fn eval_h_examples() {
        let empty = TidDatabase::new(3);
        for i in 0..=3 {
            assert!(!eval_h(&empty, i, &[]));
        }
        let d = db("R a 1\nS1 a b 1", 1);
        assert!(eval_h(&d, 0, &[true, true]));
        assert!(!eval_h(&d, 0, &[true, false]));
        let d = db("S1 a b 1\nS2 a c 1", 2);
        assert!(!eval_h(&d, 1, &[true, true]));
    }

    #[test]
    fn eval_query_examples() {
        let q9 = HQuery::new(phi9());
        assert!(!eval_query(&q9, &TidDatabase::new(3), &[]));
        // h0, h1, h2 hold; h3 needs S3 and T on a shared y.
        let d = db("R a 1\nS1 a b 1\nS2 a b 1\nS3 a b 1", 3);
        assert_eq!(profile(&d, &[true; 4]), [0u8, 1, 2].into_iter().collect());
        assert!(eval_query(&q9, &d, &[true; 4]));
        let top = HQuery::new(BoolFn::constant(3, true).unwrap());
        assert!(eval_query(&top, &TidDatabase::new(3), &[]));
    }

    #[test]
    fn lineage_table_is_monotone_and_matches_evaluation() {
        let q9 = HQuery::new(phi9());
        let d = db("R a 1\nS1 a b 1\nS2 a b 1\nS3 a b 1\nT b 1", 3);
        let t = lineage_table(&q9, &d).unwrap();
        for m in 0..32u32 {
            let present: Vec<bool> = (0..5).map(|i| (m >> i) & 1 == 1).collect();
            assert_eq!(t.get(m), eval_query(&q9, &d, &present));
            for i in 0..5 {
                assert!(!t.get(m) || t.get(m | (1 << i)));
            }
        }
        let empty = lineage_table(&q9, &TidDatabase::new(3)).unwrap();
        assert!(!empty.get(0));
    }

    #[test]
    fn pqe_examples() {
        let q9 = HQuery::new(phi9());
        let d = db("R a 1\nS1 a b 1\nS2 a b 1\nS3 a b 1\nT b 1", 3);
        let sure = brute_force_pqe(&q9, &d).unwrap();
        assert_eq!(
            sure,
            BigRational::from_integer(eval_query(&q9, &d, &[true; 5]).into())
        );
        let never = d.with_probs(vec![BigRational::zero(); 5]).unwrap();
        assert_eq!(brute_force_pqe(&q9, &never).unwrap(), BigRational::zero());

        let x0 = HQuery::new(parse_cnf("0", Some(1)).unwrap());
        let single = db("R a 1/2", 1);
        assert_eq!(brute_force_pqe(&x0, &single).unwrap(), BigRational::zero());

        // h0 over {R(a), S1(a,b)} with 1/2 each: 1/4.
        let pair = db("R a 1/2\nS1 a b 1/2", 1);
        assert_eq!(
            brute_force_pqe(&x0, &pair).unwrap(),
            BigRational::new(1.into(), 4.into())
        );
    }

    #[test]
    fn q9_on_five_facts_by_hand_count() {
        // Count satisfying subsets of the 5-fact chain by direct evaluation.
        let q9 = HQuery::new(phi9());
        let d = db("R a 1\nS1 a b 1\nS2 a b 1\nS3 a b 1\nT b 1", 3)
            .with_probs(vec![half(); 5])
            .unwrap();
        let sat = (0..32u32)
            .filter(|m| {
                let present: Vec<bool> = (0..5).map(|i| (m >> i) & 1 == 1).collect();
                eval_query(&q9, &d, &present)
            })
            .count();
        assert_eq!(
            brute_force_pqe(&q9, &d).unwrap(),
            BigRational::new((sat as i64).into(), 32.into())
        );
    }

    #[test]
    fn oracle_size_limit() {
        let big = TidDatabase::complete(3, 3, &half());
        assert!(matches!(
            lineage_table(&HQuery::new(phi9()), &big),
            Err(CompileError::TooLarge { .. })
        ));
    }
}
