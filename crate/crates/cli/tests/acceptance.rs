//! End-to-end acceptance checks. Runs without the libtest harness and prints
//! one `PASS`/`FAIL` line per criterion.

use std::collections::BTreeSet;
use std::panic::{self, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::Instant;

use num_bigint::BigInt;
use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use hquery::boolfun::{parse_cnf, BoolFn, VarSet};
use hquery::census::{
    classify_one, enumerate_shard, filter_snd, run_census, sample_partial_shard, CensusConfig,
    CensusRecord, NiceTag,
};
use hquery::compile::lineage::pqe_from_table;
use hquery::compile::{
    compile_query, lineage_table, loglog_slope, scaling_study, Circuit, HQuery, TidDatabase,
};
use hquery::lattice::{mobius_checksum_holds, CnfLattice};
use hquery::niceness::{
    brute_force_nice, classify, find_decomposition, verify_decomposition, NiceDecomposition,
    Niceness,
};
use hquery::sat::BackendChoice;

const TABLE1: [(u8, Counts); 5] = [
    (1, (5, 0, 0, 0, 0)),
    (2, (10, 0, 0, 0, 0)),
    (3, (30, 2, 2, 0, 0)),
    (4, (210, 25, 25, 0, 0)),
    (5, (16353, 2531, 2529, 2, 0)),
];
const Q9: &str = "(2|3)&(0|3)&(1|3)&(0|1|2)";
const CO_N1: &str = "24&034&013&12&15&05&35&23&02&25&014&45";
const K6_SAMPLE: usize = 100_000;
const K6_SEED: u64 = 0x6b36;
const PI_SEED: u64 = 0x5eed;
const RANDOM_PI_ROUNDS: usize = 3;
const MAX_PI_DENOMINATOR: i64 = 12;
const EXHAUSTIVE_LIMIT: usize = 18;
const RANDOM_ASSIGNMENTS: usize = 10_000;
const SCALING_DOMAINS: std::ops::RangeInclusive<usize> = 1..=8;
/// Upper bound on the log-log slope of gates against facts.
const MAX_SCALING_SLOPE: f64 = 3.0;
const BUDGET: usize = 10_000_000;

type Outcome = Result<String, String>;
type Counts = (u64, u64, u64, u64, u64);
type Named = (String, bool, Circuit);

/// Circuits compiled in criteria 3 to 5, kept for the structural checks.
#[derive(Default)]
struct Compiled {
    circuits: Vec<Named>,
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn backend() -> BackendChoice {
    BackendChoice::default()
}

fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

fn snd_records(k: u8) -> Vec<CensusRecord> {
    let mut records: Vec<CensusRecord> = enumerate_shard(k, 0, 1)
        .into_iter()
        .map(|t| CensusRecord::new(BoolFn::from_u128(k, t).unwrap()))
        .collect();
    filter_snd(&mut records).unwrap();
    records
}

fn criterion1() -> Outcome {
    let mut rows = Vec::new();
    for (k, expected) in TABLE1 {
        let got = run_census(&CensusConfig::new(k), None).map_err(|e| e.to_string())?;
        let t = got.counts.as_tuple();
        ensure(t == expected, || {
            format!("k={k}: got {t:?}, expected {expected:?}")
        })?;
        rows.push(format!("k{k}={t:?}"));
    }
    Ok(rows.join(" "))
}

fn criterion2() -> Outcome {
    let funcs = sample_partial_shard(6, K6_SAMPLE, K6_SEED).map_err(|e| e.to_string())?;
    let mut records: Vec<CensusRecord> = funcs.into_iter().map(CensusRecord::new).collect();
    let snd = filter_snd(&mut records).map_err(|e| e.to_string())?;
    let verdicts: Vec<(NiceTag, bool)> = records
        .par_iter()
        .filter(|r| r.is_snd())
        .map(|r| {
            let (tag, d) = classify_one(&r.func, &backend()).unwrap();
            let ok = match (tag, d) {
                (NiceTag::Nice, Some(d)) => verify_decomposition(&r.func, &d),
                (NiceTag::CoNice, Some(d)) => verify_decomposition(&r.func.negate(), &d),
                (NiceTag::Bad, None) => true,
                _ => false,
            };
            (tag, ok)
        })
        .collect();
    let count = |t: NiceTag| verdicts.iter().filter(|v| v.0 == t).count() as u64;
    let (n, co, bad) = (
        count(NiceTag::Nice),
        count(NiceTag::CoNice),
        count(NiceTag::Bad),
    );
    ensure(n + co + bad == snd, || {
        format!("N+coN+BAD={} but SND={snd}", n + co + bad)
    })?;
    let unverified = verdicts.iter().filter(|v| !v.1).count();
    ensure(unverified == 0, || {
        format!("{unverified} SAT verdicts fail verification")
    })?;
    Ok(format!(
        "sample={} SND={snd} N={n} coN={co} BAD={bad}",
        records.len()
    ))
}

fn q9() -> BoolFn {
    parse_cnf(Q9, None).unwrap()
}

/// Box l holds the part of sat(φ9) on which the piece ignoring l applies.
fn q9_example_decomposition(f: &BoolFn) -> NiceDecomposition {
    let term = |pos: &[u8], neg: &[u8]| {
        let (pos, neg) = (pos.to_vec(), neg.to_vec());
        BoolFn::from_fn(3, move |nu: VarSet| {
            pos.iter().all(|&v| nu.contains(v)) && neg.iter().all(|&v| !nu.contains(v))
        })
        .unwrap()
    };
    let boxes = [
        term(&[2, 3], &[1]),
        term(&[0, 3], &[2]),
        term(&[1, 3], &[0]),
        term(&[0, 1, 2], &[]),
    ];
    NiceDecomposition::from_box_fns(f, &boxes)
}

fn check_against_oracle(
    name: &str,
    q: &HQuery,
    niceness: &Niceness,
    db: &TidDatabase,
    prob_sets: &[Vec<BigRational>],
    compiled: &mut Vec<Named>,
) -> Result<usize, String> {
    let circuit = compile_query(q, niceness, db, BUDGET).map_err(|e| format!("{name}: {e}"))?;
    let table = lineage_table(q, db).map_err(|e| format!("{name}: {e}"))?;
    let mismatch = lineage_assignments(db.len(), name)
        .find(|&m| circuit.evaluate(&bits_of(m, db.len())) != table.get(m));
    if let Some(m) = mismatch {
        return Err(format!(
            "{name}: circuit and lineage differ at sub-instance {m:#x}"
        ));
    }
    for probs in prob_sets {
        let got = circuit
            .probability(probs)
            .map_err(|e| format!("{name}: {e}"))?;
        let want = pqe_from_table(&table, probs);
        ensure(got == want, || {
            format!("{name}: circuit gives {got}, oracle {want}")
        })?;
    }
    let nice = matches!(niceness, Niceness::Nice(_));
    compiled.push((name.to_string(), nice, circuit));
    Ok(prob_sets.len())
}

/// Every sub-instance up to `EXHAUSTIVE_LIMIT` facts, a seeded random sample beyond.
fn lineage_assignments(facts: usize, name: &str) -> Box<dyn Iterator<Item = u32>> {
    if facts <= EXHAUSTIVE_LIMIT {
        Box::new(0..1u32 << facts)
    } else {
        let seed = name
            .bytes()
            .fold(PI_SEED, |h, b| h.rotate_left(5) ^ u64::from(b));
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Box::new((0..RANDOM_ASSIGNMENTS).map(move |_| rng.gen_range(0..1u32 << facts)))
    }
}

fn bits_of(m: u32, n: usize) -> Vec<bool> {
    (0..n).map(|i| m >> i & 1 == 1).collect()
}

fn prob_sets(db: &TidDatabase, seed: u64) -> Vec<Vec<BigRational>> {
    let n = db.len();
    let mut sets = vec![vec![rat(0, 1); n], vec![rat(1, 2); n], vec![rat(1, 1); n]];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..RANDOM_PI_ROUNDS {
        sets.push(
            (0..n)
                .map(|_| {
                    let d = rng.gen_range(1..=MAX_PI_DENOMINATOR);
                    rat(rng.gen_range(0..=d), d)
                })
                .collect(),
        );
    }
    sets
}

fn criterion3(store: &mut Compiled) -> Outcome {
    let f = q9();
    let lat = CnfLattice::build(&f).map_err(|e| e.to_string())?;
    let mu = lat.mobius_row().at(lat.bottom());
    ensure(mu == 0, || format!("mu={mu}"))?;
    let d = find_decomposition(&f, backend().instantiate().as_mut())
        .map_err(|e| e.to_string())?
        .ok_or("nice(phi9) is UNSAT")?;
    ensure(verify_decomposition(&f, &d), || {
        "found decomposition fails".into()
    })?;
    ensure(d.boxes.len() == 4, || format!("{} boxes", d.boxes.len()))?;
    let example = q9_example_decomposition(&f);
    ensure(verify_decomposition(&f, &example), || {
        "example decomposition fails".into()
    })?;
    let q = HQuery::new(f);
    let niceness = Niceness::Nice(d.clone());
    for n in 1..=2 {
        let db = TidDatabase::complete(3, n, &rat(1, 2));
        check_against_oracle(
            &format!("q9/n{n}"),
            &q,
            &niceness,
            &db,
            &prob_sets(&db, PI_SEED),
            &mut store.circuits,
        )?;
    }
    Ok(format!(
        "mu=0 safe, nice SAT with {} non-empty of 4 boxes, both decompositions verify",
        d.nonempty_boxes().count()
    ))
}

fn criterion4(store: &mut Compiled) -> Outcome {
    let f = parse_cnf(CO_N1, None).map_err(|e| e.to_string())?;
    let lat = CnfLattice::build(&f).map_err(|e| e.to_string())?;
    let mu = lat.mobius_row().at(lat.bottom());
    ensure(mu == 0, || format!("mu={mu}"))?;
    let nice =
        find_decomposition(&f, backend().instantiate().as_mut()).map_err(|e| e.to_string())?;
    ensure(nice.is_none(), || "nice(phi) is SAT".into())?;
    let neg = f.negate();
    let d = find_decomposition(&neg, backend().instantiate().as_mut())
        .map_err(|e| e.to_string())?
        .ok_or("nice(not phi) is UNSAT")?;
    ensure(verify_decomposition(&neg, &d), || {
        "co-nice decomposition fails".into()
    })?;
    let q = HQuery::new(f);
    let db = TidDatabase::complete(5, 1, &rat(1, 2));
    check_against_oracle(
        "coN1/n1",
        &q,
        &Niceness::CoNice(d),
        &db,
        &prob_sets(&db, PI_SEED),
        &mut store.circuits,
    )?;
    Ok("mu=0 safe, nice UNSAT, co-nice SAT and verified".into())
}

fn criterion5(store: &mut Compiled) -> Outcome {
    let funcs: Vec<BoolFn> = [3u8, 4]
        .into_iter()
        .flat_map(snd_records)
        .filter(CensusRecord::is_snd)
        .map(|r| r.func)
        .collect();
    let results: Vec<Result<(usize, Vec<Named>), String>> = funcs
        .par_iter()
        .enumerate()
        .map(|(idx, f)| {
            let niceness = classify(f, &backend()).map_err(|e| e.to_string())?;
            if matches!(niceness, Niceness::Bad) {
                return Err(format!("{f} is BAD"));
            }
            let q = HQuery::new(f.clone());
            let mut local = Vec::new();
            let mut checks = 0;
            for n in 1..=2 {
                let db = TidDatabase::complete(f.k(), n, &rat(1, 2));
                let sets = prob_sets(&db, PI_SEED ^ ((idx as u64) << 8) ^ n as u64);
                checks += check_against_oracle(
                    &format!("k{}:{}/n{n}", f.k(), f.to_hex()),
                    &q,
                    &niceness,
                    &db,
                    &sets,
                    &mut local,
                )?;
            }
            Ok((checks, local))
        })
        .collect();
    let mut checks = 0;
    for r in results {
        let (c, local) = r?;
        checks += c;
        store.circuits.extend(local);
    }
    Ok(format!(
        "{} functions, {checks} probability comparisons, lineage equality on every circuit",
        funcs.len()
    ))
}

fn criterion6() -> Outcome {
    let mut funcs: Vec<BoolFn> = (0u128..256)
        .map(|t| BoolFn::from_u128(2, t).unwrap())
        .collect();
    let monotone: Vec<BoolFn> = (0u128..1 << 16)
        .map(|t| BoolFn::from_u128(3, t).unwrap())
        .filter(BoolFn::is_monotone)
        .collect();
    ensure(monotone.len() == 168, || {
        format!("{} monotone k=3 functions", monotone.len())
    })?;
    funcs.extend(monotone);
    let mismatches: Vec<String> = funcs
        .par_iter()
        .filter_map(|f| {
            let sat = find_decomposition(f, backend().instantiate().as_mut()).unwrap();
            if let Some(d) = &sat {
                if !verify_decomposition(f, d) {
                    return Some(format!("{f}: unverified"));
                }
            }
            let brute = brute_force_nice(f).unwrap();
            (brute != sat.is_some()).then(|| format!("{f}: brute={brute} sat={}", sat.is_some()))
        })
        .collect();
    ensure(mismatches.is_empty(), || mismatches.join("; "))?;
    Ok(format!("{} functions agree", funcs.len()))
}

fn criterion7(store: &Compiled) -> Outcome {
    ensure(!store.circuits.is_empty(), || "no circuits recorded".into())?;
    let failures: Vec<String> = store
        .circuits
        .par_iter()
        .filter_map(|(name, nice, c)| {
            if !c.check_decomposable() {
                return Some(format!("{name}: not decomposable"));
            }
            match c.check_deterministic_auto(EXHAUSTIVE_LIMIT, &backend()) {
                Ok(true) => {}
                Ok(false) => return Some(format!("{name}: not deterministic")),
                Err(e) => return Some(format!("{name}: {e}")),
            }
            if *nice && !c.is_nnf() {
                return Some(format!("{name}: not NNF"));
            }
            if !*nice && c.non_leaf_not_count() != 1 {
                return Some(format!(
                    "{name}: {} non-leaf NOT gates",
                    c.non_leaf_not_count()
                ));
            }
            None
        })
        .collect();
    ensure(failures.is_empty(), || failures.join("; "))?;
    let big = store
        .circuits
        .iter()
        .filter(|(_, _, c)| c.num_vars() > EXHAUSTIVE_LIMIT)
        .count();
    Ok(format!(
        "{} circuits ({} checked by SAT)",
        store.circuits.len(),
        big
    ))
}

/// μ(u, top) for every element by the recursion from the lower end:
/// μ(u, u) = 1 and μ(u, v) = -Σ_{u <= w < v} μ(u, w). Order is reverse inclusion.
fn mobius_row_from_below(elements: &[VarSet]) -> Vec<i64> {
    let le = |a: VarSet, b: VarSet| b.is_subset(a);
    let top = VarSet::EMPTY;
    elements
        .iter()
        .map(|&u| {
            let mut above: Vec<VarSet> = elements.iter().copied().filter(|&w| le(u, w)).collect();
            above.sort_by_key(|w| std::cmp::Reverse(w.len()));
            let mut mu: Vec<(VarSet, i64)> = Vec::new();
            for &v in &above {
                let val = if v == u {
                    1
                } else {
                    -mu.iter()
                        .filter(|(w, _)| le(*w, v) && *w != v)
                        .map(|(_, m)| m)
                        .sum::<i64>()
                };
                mu.push((v, val));
            }
            mu.iter().find(|(w, _)| *w == top).map(|(_, m)| *m).unwrap()
        })
        .collect()
}

fn criterion8() -> Outcome {
    let mut lattices = 0usize;
    for k in 1..=5u8 {
        let records = snd_records(k);
        let nondeg: Vec<&CensusRecord> = records.iter().filter(|r| r.nondegenerate).collect();
        let bad = nondeg
            .par_iter()
            .filter(|r| {
                let lat = CnfLattice::build(&r.func).unwrap();
                !mobius_checksum_holds(&lat, &lat.mobius_row())
            })
            .count();
        ensure(bad == 0, || format!("k={k}: {bad} checksum failures"))?;
        lattices += nondeg.len();
    }
    let clauses = [0b1100u32, 0b1001, 0b1010, 0b0111].map(VarSet::from_bits);
    let mut closure: BTreeSet<VarSet> = BTreeSet::from([VarSet::EMPTY]);
    for c in clauses {
        let grown: Vec<VarSet> = closure.iter().map(|e| e.union(c)).collect();
        closure.extend(grown);
    }
    let mut elements: Vec<VarSet> = closure.into_iter().collect();
    elements.sort_by_key(|e| (e.len(), e.bits()));
    let independent = mobius_row_from_below(&elements);
    ensure(independent == [1, -1, -1, -1, -1, 1, 1, 1, 0], || {
        format!("independent row {independent:?}")
    })?;
    let lat = CnfLattice::build(&q9()).unwrap();
    ensure(lat.elements() == elements.as_slice(), || {
        "lattice elements differ".into()
    })?;
    let row = lat.mobius_row();
    ensure(row.0 == independent, || format!("library row {:?}", row.0))?;
    Ok(format!(
        "{lattices} lattices pass the checksum, phi9 row {:?}",
        row.0
    ))
}

fn criterion9() -> Outcome {
    let f = q9();
    let niceness = classify(&f, &backend()).map_err(|e| e.to_string())?;
    let points = scaling_study(&HQuery::new(f), &niceness, SCALING_DOMAINS, BUDGET)
        .map_err(|e| e.to_string())?;
    let xy: Vec<(f64, f64)> = points
        .iter()
        .map(|p| (p.facts as f64, p.gates as f64))
        .collect();
    let slope = loglog_slope(&xy).ok_or("no slope")?;
    let series: Vec<String> = points
        .iter()
        .map(|p| format!("{}:{}", p.facts, p.gates))
        .collect();
    ensure(slope <= MAX_SCALING_SLOPE, || {
        format!("slope {slope:.3} > {MAX_SCALING_SLOPE}")
    })?;
    Ok(format!("facts:gates {} slope={slope:.3}", series.join(" ")))
}

fn run(id: u8, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let outcome = panic::catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
        Err(p
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_else(|| "panic".into()))
    });
    let secs = start.elapsed().as_secs_f64();
    match outcome {
        Ok(detail) => {
            println!("criterion {id}: PASS ({secs:.1}s) {detail}");
            true
        }
        Err(why) => {
            println!("criterion {id}: FAIL ({secs:.1}s) {why}");
            false
        }
    }
}

fn main() -> ExitCode {
    let mut store = Compiled::default();
    let results = [
        run(1, criterion1),
        run(2, criterion2),
        run(3, || criterion3(&mut store)),
        run(4, || criterion4(&mut store)),
        run(5, || criterion5(&mut store)),
        run(6, criterion6),
        run(7, || criterion7(&store)),
        run(8, criterion8),
        run(9, criterion9),
    ];
    let passed = results.iter().filter(|&&ok| ok).count();
    println!("acceptance: {passed}/{} criteria pass", results.len());
    if passed == results.len() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
