use hquery::boolfun::{parse_cnf, BoolFn};
use hquery::compile::{
    brute_force_pqe, compile_co_nice, compile_nice, compile_query, lineage_table, loglog_slope,
    scaling_study, DeterminismMode, Fact, HQuery, TidDatabase, DEFAULT_NODE_BUDGET,
};
use hquery::niceness::{classify, verify_decomposition, NiceDecomposition, Niceness};
use hquery::sat::BackendChoice;
use num_rational::BigRational;
use num_traits::One;
use proptest::prelude::*;

fn q(n: i64, d: i64) -> BigRational {
    BigRational::new(n.into(), d.into())
}

fn phi9() -> BoolFn {
    parse_cnf("(2|3)&(0|3)&(1|3)&(0|1|2)", None).unwrap()
}

fn co_n1() -> BoolFn {
    parse_cnf("24&034&013&12&15&05&35&23&02&25&014&45", None).unwrap()
}

fn nice_decomposition(f: &BoolFn) -> NiceDecomposition {
    match classify(f, &BackendChoice::default()).unwrap() {
        Niceness::Nice(d) => d,
        other => panic!("expected nice, got {}", other.tag()),
    }
}

#[test]
fn co_n1_on_one_constant() {
    let f = co_n1();
    let d = match classify(&f, &BackendChoice::default()).unwrap() {
        Niceness::CoNice(d) => d,
        other => panic!("expected co-nice, got {}", other.tag()),
    };
    assert!(verify_decomposition(&f.negate(), &d));
    let query = HQuery::new(f);
    let db = TidDatabase::complete(5, 1, &q(1, 3));
    let c = compile_co_nice(&query, &d, &db, DEFAULT_NODE_BUDGET).unwrap();
    assert_eq!(
        c.probability(db.probs()).unwrap(),
        brute_force_pqe(&query, &db).unwrap()
    );
    assert!(!c.is_nnf());
    assert_eq!(c.non_leaf_not_count(), 1);
    assert!(c.check_decomposable());
    assert!(c.check_deterministic(&DeterminismMode::Exhaustive).unwrap());
    assert!(c
        .check_deterministic(&DeterminismMode::Sat(BackendChoice::default()))
        .unwrap());
}

#[test]
fn complement_law() {
    // 0∧1 at k=2 is degenerate, so both it and its negation are nice.
    let f = parse_cnf("0&1", Some(2)).unwrap();
    let d_neg = nice_decomposition(&f.negate());
    let db = TidDatabase::complete(2, 2, &q(2, 5));
    let co = compile_co_nice(&HQuery::new(f.clone()), &d_neg, &db, DEFAULT_NODE_BUDGET).unwrap();
    let direct = compile_nice(
        &HQuery::new(f.clone()),
        &nice_decomposition(&f),
        &db,
        DEFAULT_NODE_BUDGET,
    )
    .unwrap();
    let neg = compile_nice(&HQuery::new(f.negate()), &d_neg, &db, DEFAULT_NODE_BUDGET).unwrap();
    let p = co.probability(db.probs()).unwrap();
    assert_eq!(p, direct.probability(db.probs()).unwrap());
    assert_eq!(p, BigRational::one() - neg.probability(db.probs()).unwrap());
}

#[test]
fn q9_on_the_five_fact_chain() {
    let db = TidDatabase::parse("R a 1/2\nS1 a b 1/2\nS2 a b 1/2\nS3 a b 1/2\nT b 1/2", 3).unwrap();
    let query = HQuery::new(phi9());
    let c = compile_nice(
        &query,
        &nice_decomposition(&phi9()),
        &db,
        DEFAULT_NODE_BUDGET,
    )
    .unwrap();
    let table = lineage_table(&query, &db).unwrap();
    let sat = (0..32).filter(|&m| table.get(m)).count() as i64;
    assert_eq!(c.probability(db.probs()).unwrap(), q(sat, 32));
}

#[test]
fn q9_scaling_is_polynomial() {
    let f = phi9();
    let niceness = Niceness::Nice(nice_decomposition(&f));
    let points = scaling_study(&HQuery::new(f), &niceness, 1..=5, DEFAULT_NODE_BUDGET).unwrap();
    assert_eq!(
        points.iter().map(|p| p.facts).collect::<Vec<_>>(),
        vec![5, 16, 33, 56, 85]
    );
    let xy: Vec<(f64, f64)> = points
        .iter()
        .map(|p| (p.facts as f64, p.gates as f64))
        .collect();
    let slope = loglog_slope(&xy).unwrap();
    assert!(slope < 4.0, "slope {slope}");
}

fn sub_database(mask: u32, probs: &[(i64, i64)]) -> TidDatabase {
    let full = TidDatabase::complete(3, 2, &q(1, 2));
    let db = full.restrict(|i| mask & (1 << i) != 0);
    let ps = (0..db.len()).map(|i| q(probs[i].0, probs[i].1)).collect();
    db.with_probs(ps).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn nice_compilation_matches_oracle_on_sub_databases(
        mask in 0u32..1 << 16,
        probs in prop::collection::vec((0i64..=7, 1i64..=7), 16),
        pick in 0usize..2,
    ) {
        let probs: Vec<(i64, i64)> = probs.into_iter().map(|(a, b)| (a.min(b), b)).collect();
        let db = sub_database(mask, &probs);
        let f = [phi9(), parse_cnf("(0|1)&2", Some(3)).unwrap()][pick].clone();
        let niceness = classify(&f, &BackendChoice::default()).unwrap();
        let query = HQuery::new(f);
        let c = compile_query(&query, &niceness, &db, DEFAULT_NODE_BUDGET).unwrap();
        prop_assert!(c.check_decomposable());
        prop_assert!(c.check_deterministic(&DeterminismMode::Exhaustive).unwrap());
        prop_assert_eq!(c.probability(db.probs()).unwrap(), brute_force_pqe(&query, &db).unwrap());
    }

    #[test]
    fn fact_order_does_not_matter(seed in any::<u64>()) {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let full = TidDatabase::complete(3, 2, &q(1, 3));
        let mut facts: Vec<Fact> = full.facts().to_vec();
        facts.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
        let mut db = TidDatabase::new(3);
        for name in full.domain() {
            db.constant(name);
        }
        for f in facts {
            db.add(f, q(1, 3)).unwrap();
        }
        let query = HQuery::new(phi9());
        let c = compile_nice(&query, &nice_decomposition(&phi9()), &db, DEFAULT_NODE_BUDGET).unwrap();
        prop_assert_eq!(c.probability(db.probs()).unwrap(), brute_force_pqe(&query, &db).unwrap());
    }
}
