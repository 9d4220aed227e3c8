//! Census of monotone functions on `{0..k}` up to variable renaming.
//!
//! Functions on `n` variables are assembled from pairs `(f0, f1)` of monotone
//! functions on `n - 1` variables with `f0 <= f1`, as
//! `f = (¬x_{n-1} ∧ f0) ∨ (x_{n-1} ∧ f1)`. Renaming the first `n - 1`
//! variables lets `f1` range over orbit representatives only, while `f0`
//! ranges over the whole down-set of `f1`. Every pair is canonicalized and
//! deduplicated.
//!
//! Records are partitioned into shards by a hash of the canonical table so
//! that each shard can be produced, checkpointed and resumed on its own.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::fs;
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::boolfun::{BoolFn, BoolFnError};
use crate::lattice::{self, CnfLattice, LatticeError};
use crate::niceness::{self, NiceDecomposition, Niceness, NicenessError};
use crate::perm;
use crate::sat::BackendChoice;

/// Largest `k` supported by the census.
pub const MAX_CENSUS_K: u8 = 6;

#[derive(Debug, Error)]
pub enum CensusError {
    #[error("census k={0} outside 1..=6")]
    KOutOfRange(u8),
    #[error("k=6 census is a long run and must be enabled explicitly")]
    LongRunNotEnabled,
    #[error("i/o error on {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("malformed census data: {0}")]
    Parse(String),
    #[error("niceness undecided for {func}: {source}")]
    Niceness { func: BoolFn, source: NicenessError },
    #[error("lattice failure for {func}: {source}")]
    Lattice { func: BoolFn, source: LatticeError },
    #[error("Möbius checksum failed for {0}")]
    MobiusChecksum(BoolFn),
    #[error("canonical function {0} appears in more than one shard")]
    Duplicate(BoolFn),
    #[error("shards disagree: {0}")]
    ShardMismatch(String),
    #[error("record sink failed: {0}")]
    Sink(String),
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> CensusError + '_ {
    move |source| CensusError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NiceTag {
    Nice,
    CoNice,
    Bad,
    NotComputed,
}

impl NiceTag {
    pub fn as_str(self) -> &'static str {
        match self {
            NiceTag::Nice => "N",
            NiceTag::CoNice => "coN",
            NiceTag::Bad => "BAD",
            NiceTag::NotComputed => "-",
        }
    }
}

impl std::str::FromStr for NiceTag {
    type Err = CensusError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "N" => Ok(NiceTag::Nice),
            "coN" => Ok(NiceTag::CoNice),
            "BAD" => Ok(NiceTag::Bad),
            "-" => Ok(NiceTag::NotComputed),
            other => Err(CensusError::Parse(format!("bad niceness tag {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CensusRecord {
    pub func: BoolFn,
    pub nondegenerate: bool,
    /// Only set for nondegenerate functions.
    pub safe: Option<bool>,
    pub niceness: NiceTag,
}

impl CensusRecord {
    pub fn new(func: BoolFn) -> Self {
        CensusRecord {
            func,
            nondegenerate: false,
            safe: None,
            niceness: NiceTag::NotComputed,
        }
    }

    pub fn is_snd(&self) -> bool {
        self.nondegenerate && self.safe == Some(true)
    }

    pub fn parse_line(line: &str) -> Result<Self, CensusError> {
        let mut k = None;
        let mut table = None;
        let mut nondeg = None;
        let mut safe = None;
        let mut nice = None;
        for tok in line.split_whitespace() {
            let tok = tok.trim_end_matches(',');
            let (key, value) = tok
                .split_once(':')
                .ok_or_else(|| CensusError::Parse(format!("bad field {tok:?}")))?;
            match key {
                "k" => k = Some(value),
                "table" => table = Some(value),
                "nondeg" => nondeg = Some(value),
                "safe" => safe = Some(value),
                "nice" => nice = Some(value),
                _ => return Err(CensusError::Parse(format!("unknown field {key:?}"))),
            }
        }
        let missing = |f: &str| CensusError::Parse(format!("missing field {f} in {line:?}"));
        let k: u8 = k
            .ok_or_else(|| missing("k"))?
            .parse()
            .map_err(|_| CensusError::Parse(format!("bad k in {line:?}")))?;
        let func = BoolFn::from_hex(k, table.ok_or_else(|| missing("table"))?)
            .map_err(|e: BoolFnError| CensusError::Parse(e.to_string()))?;
        let nondegenerate = match nondeg.ok_or_else(|| missing("nondeg"))? {
            "0" => false,
            "1" => true,
            v => return Err(CensusError::Parse(format!("bad nondeg {v:?}"))),
        };
        let safe = match safe.ok_or_else(|| missing("safe"))? {
            "0" => Some(false),
            "1" => Some(true),
            "-" => None,
            v => return Err(CensusError::Parse(format!("bad safe {v:?}"))),
        };
        let niceness = nice.ok_or_else(|| missing("nice"))?.parse()?;
        Ok(CensusRecord {
            func,
            nondegenerate,
            safe,
            niceness,
        })
    }
}

impl fmt::Display for CensusRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let safe = match self.safe {
            Some(true) => "1",
            Some(false) => "0",
            None => "-",
        };
        write!(
            f,
            "{} nondeg:{} safe:{} nice:{}",
            self.func,
            self.nondegenerate as u8,
            safe,
            self.niceness.as_str()
        )
    }
}

/// Counts in the column order `|R|, |SND|, |N|, |co-N|, |BAD|`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CensusCounts {
    pub r: u64,
    pub snd: u64,
    pub nice: u64,
    pub co_nice: u64,
    pub bad: u64,
}

impl CensusCounts {
    pub fn tally<'a>(records: impl IntoIterator<Item = &'a CensusRecord>) -> Self {
        let mut c = CensusCounts::default();
        for r in records {
            c.r += 1;
            if r.is_snd() {
                c.snd += 1;
                match r.niceness {
                    NiceTag::Nice => c.nice += 1,
                    NiceTag::CoNice => c.co_nice += 1,
                    NiceTag::Bad => c.bad += 1,
                    NiceTag::NotComputed => {}
                }
            }
        }
        c
    }

    pub fn as_tuple(&self) -> (u64, u64, u64, u64, u64) {
        (self.r, self.snd, self.nice, self.co_nice, self.bad)
    }

    pub fn is_consistent(&self) -> bool {
        self.nice + self.co_nice + self.bad == self.snd && self.snd <= self.r
    }
}

fn check_k(k: u8, allow_long: bool) -> Result<(), CensusError> {
    if !(1..=MAX_CENSUS_K).contains(&k) {
        return Err(CensusError::KOutOfRange(k));
    }
    if k == 6 && !allow_long {
        return Err(CensusError::LongRunNotEnabled);
    }
    Ok(())
}

/// Calls `visit` on every monotone function `g <= bound` of `n` variables
/// until it returns `false`. Returns whether the walk ran to completion.
pub fn for_each_monotone_below(bound: u128, n: usize, visit: &mut dyn FnMut(u128) -> bool) -> bool {
    if n == 0 {
        return visit(0) && (bound & 1 == 0 || visit(1));
    }
    let half = 1u32 << (n - 1);
    let mask = if half == 128 {
        u128::MAX
    } else {
        (1u128 << half) - 1
    };
    let b_lo = bound & mask;
    let b_hi = (bound >> half) & mask;
    for_each_monotone_below(b_hi, n - 1, &mut |g_hi| {
        for_each_monotone_below(g_hi & b_lo, n - 1, &mut |g_lo| visit(g_lo | (g_hi << half)))
    })
}

/// Sorted orbit representatives of monotone functions on `n` variables.
pub fn canonical_representatives(n: usize) -> Vec<u128> {
    assert!((1..=perm::FAST_VARS).contains(&n), "n={n} out of range");
    if n == 1 {
        return vec![0b00, 0b10, 0b11];
    }
    let mut out: Vec<u128> = pair_orbits(n, &canonical_representatives(n - 1), |_| true)
        .into_iter()
        .collect();
    out.sort_unstable();
    out
}

/// Canonical tables on `n` variables reachable from the given upper
/// cofactors, filtered by `keep`.
fn pair_orbits(n: usize, uppers: &[u128], keep: impl Fn(u128) -> bool + Sync) -> HashSet<u128> {
    let half = 1u32 << (n - 1);
    uppers
        .par_iter()
        .map(|&f1| {
            let mut local = HashSet::new();
            for_each_monotone_below(f1, n - 1, &mut |f0| {
                let c = perm::canonical_u128(f0 | (f1 << half), n);
                if keep(c) {
                    local.insert(c);
                }
                true
            });
            local
        })
        .reduce(HashSet::new, |mut a, b| {
            if a.len() < b.len() {
                return reduce_into(b, a);
            }
            a.extend(b);
            a
        })
}

fn reduce_into(mut big: HashSet<u128>, small: HashSet<u128>) -> HashSet<u128> {
    big.extend(small);
    big
}

/// Deterministic shard of a canonical table.
pub fn shard_of(table: u128, shards: usize) -> usize {
    fn mix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }
    let h = mix(table as u64 ^ mix((table >> 64) as u64));
    (h % shards.max(1) as u64) as usize
}

/// Sorted canonical tables of R(k) falling into `shard`.
pub fn enumerate_shard(k: u8, shard: usize, shards: usize) -> Vec<u128> {
    let n = k as usize + 1;
    let uppers = canonical_representatives(n - 1);
    let mut out: Vec<u128> = pair_orbits(n, &uppers, |t| shard_of(t, shards) == shard)
        .into_iter()
        .collect();
    out.sort_unstable();
    out
}

/// Streams every function of R(k) (canonical, ascending) into `sink`.
pub fn enumerate_r<E: fmt::Display>(
    k: u8,
    allow_long: bool,
    mut sink: impl FnMut(BoolFn) -> Result<(), E>,
) -> Result<u64, CensusError> {
    check_k(k, allow_long)?;
    let tables = enumerate_shard(k, 0, 1);
    let mut count = 0;
    for t in tables {
        let f = BoolFn::from_u128(k, t).expect("k within fast range");
        sink(f).map_err(|e| CensusError::Sink(format!("after {count} records: {e}")))?;
        count += 1;
    }
    Ok(count)
}

/// Marks nondegeneracy and, for nondegenerate functions, safety. Every
/// lattice built is checked against the Möbius checksum. Returns |SND|.
pub fn filter_snd(records: &mut [CensusRecord]) -> Result<u64, CensusError> {
    records.par_iter_mut().try_for_each(|rec| {
        rec.nondegenerate = rec.func.is_nondegenerate();
        rec.safe = None;
        if rec.nondegenerate {
            let lat = CnfLattice::build(&rec.func).map_err(|source| CensusError::Lattice {
                func: rec.func.clone(),
                source,
            })?;
            let row = lat.mobius_row();
            if !lattice::mobius_checksum_holds(&lat, &row) {
                return Err(CensusError::MobiusChecksum(rec.func.clone()));
            }
            rec.safe = Some(row.at(lat.bottom()) == 0);
        }
        Ok(())
    })?;
    Ok(records.iter().filter(|r| r.is_snd()).count() as u64)
}

/// Tags every SND record (and, with `include_unsafe`, every nondegenerate
/// record) as nice / co-nice / bad. Undecided solver runs abort the whole
/// classification. Returns `(|N|, |co-N|, |BAD|)` over SND.
pub fn classify_niceness(
    records: &mut [CensusRecord],
    backend: &BackendChoice,
    include_unsafe: bool,
) -> Result<(u64, u64, u64), CensusError> {
    records.par_iter_mut().try_for_each(|rec| {
        if rec.is_snd() || (include_unsafe && rec.nondegenerate) {
            rec.niceness = classify_one(&rec.func, backend)?.0;
        }
        Ok::<_, CensusError>(())
    })?;
    let c = CensusCounts::tally(records.iter());
    Ok((c.nice, c.co_nice, c.bad))
}

/// Niceness of a single function with its verified witness.
pub fn classify_one(
    f: &BoolFn,
    backend: &BackendChoice,
) -> Result<(NiceTag, Option<NiceDecomposition>), CensusError> {
    let verdict = niceness::classify(f, backend).map_err(|source| CensusError::Niceness {
        func: f.clone(),
        source,
    })?;
    Ok(match verdict {
        Niceness::Nice(d) => (NiceTag::Nice, Some(d)),
        Niceness::CoNice(d) => (NiceTag::CoNice, Some(d)),
        Niceness::Bad => (NiceTag::Bad, None),
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CensusShard {
    pub k: u8,
    pub index: usize,
    pub records: Vec<CensusRecord>,
}

/// Unions shards of one census. The same shard given twice is accepted; a
/// function present in two different shards is an error.
pub fn merge_shards(shards: Vec<CensusShard>) -> Result<Vec<CensusRecord>, CensusError> {
    let mut by_index: BTreeMap<usize, CensusShard> = BTreeMap::new();
    let mut k = None;
    for s in shards {
        if *k.get_or_insert(s.k) != s.k {
            return Err(CensusError::ShardMismatch(format!(
                "k={} and k={}",
                k.unwrap(),
                s.k
            )));
        }
        match by_index.get(&s.index) {
            Some(prev) if *prev != s => {
                return Err(CensusError::ShardMismatch(format!(
                    "two different shards with index {}",
                    s.index
                )))
            }
            Some(_) => {}
            None => {
                by_index.insert(s.index, s);
            }
        }
    }
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for s in by_index.into_values() {
        for r in s.records {
            if !seen.insert(r.func.clone()) {
                return Err(CensusError::Duplicate(r.func));
            }
            out.push(r);
        }
    }
    out.sort_by(|a, b| a.func.cmp_table(&b.func));
    Ok(out)
}

pub fn write_records(path: &Path, records: &[CensusRecord]) -> Result<(), CensusError> {
    let mut sorted: Vec<&CensusRecord> = records.iter().collect();
    sorted.sort_by(|a, b| a.func.cmp_table(&b.func));
    let tmp = path.with_extension("tmp");
    {
        let mut w = io::BufWriter::new(fs::File::create(&tmp).map_err(io_err(&tmp))?);
        for r in sorted {
            writeln!(w, "{r}").map_err(io_err(&tmp))?;
        }
        w.flush().map_err(io_err(&tmp))?;
    }
    fs::rename(&tmp, path).map_err(io_err(path))
}

pub fn read_records(path: &Path) -> Result<Vec<CensusRecord>, CensusError> {
    let file = fs::File::open(path).map_err(io_err(path))?;
    BufReader::new(file)
        .lines()
        .map(|l| l.map_err(io_err(path)))
        .filter(|l| !matches!(l, Ok(s) if s.trim().is_empty()))
        .map(|l| CensusRecord::parse_line(&l?))
        .collect()
}

/// Checkpoint directory `<out>/census/k<k>/` with `shard<i>.txt` files and
/// a `MANIFEST` of `key=value` lines.
#[derive(Debug, Clone)]
pub struct Checkpoint {
    dir: PathBuf,
    k: u8,
    shards: usize,
    done: BTreeMap<usize, CensusCounts>,
    complete: bool,
}

impl Checkpoint {
    pub fn open(out: &Path, k: u8, shards: usize) -> Result<Self, CensusError> {
        let dir = out.join("census").join(format!("k{k}"));
        fs::create_dir_all(&dir).map_err(io_err(&dir))?;
        let mut cp = Checkpoint {
            dir,
            k,
            shards,
            done: BTreeMap::new(),
            complete: false,
        };
        let manifest = cp.manifest_path();
        if manifest.exists() {
            let text = fs::read_to_string(&manifest).map_err(io_err(&manifest))?;
            let kv: BTreeMap<&str, &str> = text.lines().filter_map(|l| l.split_once('=')).collect();
            let parse = |key: &str| -> Option<u64> { kv.get(key)?.parse().ok() };
            if parse("k") != Some(k as u64) || parse("shards") != Some(shards as u64) {
                return Err(CensusError::ShardMismatch(format!(
                    "{} was written for a different k or shard count",
                    manifest.display()
                )));
            }
            for i in 0..shards {
                if let Some(counts) = kv.get(format!("shard{i}").as_str()) {
                    let nums: Vec<u64> = counts.split(',').filter_map(|x| x.parse().ok()).collect();
                    if let [r, snd, nice, co_nice, bad] = nums[..] {
                        cp.done.insert(
                            i,
                            CensusCounts {
                                r,
                                snd,
                                nice,
                                co_nice,
                                bad,
                            },
                        );
                    }
                }
            }
            cp.complete = parse("complete") == Some(1);
        }
        Ok(cp)
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn manifest_path(&self) -> PathBuf {
        self.dir.join("MANIFEST")
    }

    pub fn shard_path(&self, i: usize) -> PathBuf {
        self.dir.join(format!("shard{i}.txt"))
    }

    pub fn is_done(&self, i: usize) -> bool {
        self.done.contains_key(&i) && self.shard_path(i).exists()
    }

    pub fn is_complete(&self) -> bool {
        self.complete
    }

    pub fn mark_done(&mut self, i: usize, counts: CensusCounts) -> Result<(), CensusError> {
        self.done.insert(i, counts);
        self.complete = (0..self.shards).all(|s| self.done.contains_key(&s));
        self.write_manifest()
    }

    fn write_manifest(&self) -> Result<(), CensusError> {
        let mut text = format!("k={}\nshards={}\n", self.k, self.shards);
        for (i, c) in &self.done {
            text.push_str(&format!(
                "shard{i}={},{},{},{},{}\n",
                c.r, c.snd, c.nice, c.co_nice, c.bad
            ));
        }
        text.push_str(&format!("complete={}\n", self.complete as u8));
        let path = self.manifest_path();
        let tmp = path.with_extension("tmp");
        fs::write(&tmp, text).map_err(io_err(&tmp))?;
        fs::rename(&tmp, &path).map_err(io_err(&path))
    }

    pub fn load_shard(&self, i: usize) -> Result<CensusShard, CensusError> {
        Ok(CensusShard {
            k: self.k,
            index: i,
            records: read_records(&self.shard_path(i))?,
        })
    }
}

#[derive(Debug, Clone)]
pub struct CensusConfig {
    pub k: u8,
    pub shards: usize,
    pub backend: BackendChoice,
    pub allow_long: bool,
    pub include_unsafe: bool,
}

impl CensusConfig {
    pub fn new(k: u8) -> Self {
        CensusConfig {
            k,
            shards: 1,
            backend: BackendChoice::default(),
            allow_long: false,
            include_unsafe: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CensusOutcome {
    pub counts: CensusCounts,
    /// BAD functions, if any (each would refute the all-safe-are-nice-or-co-nice pattern).
    pub bad: Vec<CensusRecord>,
    /// Co-nice SND functions.
    pub co_nice: Vec<CensusRecord>,
    /// `(N, co-N, BAD)` over unsafe nondegenerate functions, when classified.
    pub unsafe_tags: Option<(u64, u64, u64)>,
    /// Shards produced in this run (as opposed to loaded from a checkpoint).
    pub fresh_shards: usize,
}

/// Enumerates, filters and classifies one shard.
pub fn compute_shard(cfg: &CensusConfig, i: usize) -> Result<CensusShard, CensusError> {
    check_k(cfg.k, cfg.allow_long)?;
    let mut records: Vec<CensusRecord> = enumerate_shard(cfg.k, i, cfg.shards)
        .into_iter()
        .map(|t| CensusRecord::new(BoolFn::from_u128(cfg.k, t).expect("fast range")))
        .collect();
    filter_snd(&mut records)?;
    classify_niceness(&mut records, &cfg.backend, cfg.include_unsafe)?;
    Ok(CensusShard {
        k: cfg.k,
        index: i,
        records,
    })
}

/// Full census; with a checkpoint directory, finished shards are reused and
/// new ones are persisted as soon as they complete.
pub fn run_census(cfg: &CensusConfig, out: Option<&Path>) -> Result<CensusOutcome, CensusError> {
    check_k(cfg.k, cfg.allow_long)?;
    let shards = cfg.shards.max(1);
    let mut checkpoint = out
        .map(|o| Checkpoint::open(o, cfg.k, shards))
        .transpose()?;
    let mut all = Vec::with_capacity(shards);
    let mut fresh = 0;
    for i in 0..shards {
        let shard = match &checkpoint {
            Some(cp) if cp.is_done(i) => cp.load_shard(i)?,
            _ => {
                let s = compute_shard(cfg, i)?;
                fresh += 1;
                if let Some(cp) = checkpoint.as_mut() {
                    write_records(&cp.shard_path(i), &s.records)?;
                    cp.mark_done(i, CensusCounts::tally(s.records.iter()))?;
                }
                s
            }
        };
        all.push(shard);
    }
    let records = merge_shards(all)?;
    let counts = CensusCounts::tally(records.iter());
    if !counts.is_consistent() {
        return Err(CensusError::ShardMismatch(format!(
            "inconsistent counts {counts:?}"
        )));
    }
    let unsafe_tags = cfg.include_unsafe.then(|| {
        let tagged = |t: NiceTag| {
            records
                .iter()
                .filter(|r| r.nondegenerate && r.safe == Some(false) && r.niceness == t)
                .count() as u64
        };
        (
            tagged(NiceTag::Nice),
            tagged(NiceTag::CoNice),
            tagged(NiceTag::Bad),
        )
    });
    let (bad, co_nice) = records
        .into_iter()
        .filter(|r| r.is_snd() && matches!(r.niceness, NiceTag::Bad | NiceTag::CoNice))
        .partition(|r| r.niceness == NiceTag::Bad);
    Ok(CensusOutcome {
        counts,
        bad,
        co_nice,
        unsafe_tags,
        fresh_shards: fresh,
    })
}

/// Recomputes counts from finished shard files without solving anything.
pub fn counts_from_checkpoint(
    out: &Path,
    k: u8,
    shards: usize,
) -> Result<CensusCounts, CensusError> {
    let cp = Checkpoint::open(out, k, shards)?;
    let loaded = (0..shards)
        .map(|i| cp.load_shard(i))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(CensusCounts::tally(merge_shards(loaded)?.iter()))
}

/// A prefix of the real pair enumeration for `k`: upper cofactors are drawn
/// in seeded random order and each contributes its down-set, until `count`
/// distinct canonical functions have been produced.
pub fn sample_partial_shard(k: u8, count: usize, seed: u64) -> Result<Vec<BoolFn>, CensusError> {
    check_k(k, true)?;
    let n = k as usize + 1;
    let half = 1u32 << (n - 1);
    let mut uppers = canonical_representatives(n - 1);
    uppers.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    // Bound the share of any single upper cofactor so the sample is varied.
    let per_upper = (count / 16).max(1);
    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(count);
    for f1 in uppers {
        if out.len() >= count {
            break;
        }
        let mut taken = 0;
        for_each_monotone_below(f1, n - 1, &mut |f0| {
            let c = perm::canonical_u128(f0 | (f1 << half), n);
            if seen.insert(c) {
                out.push(BoolFn::from_u128(k, c).expect("fast range"));
                taken += 1;
            }
            out.len() < count && taken < per_upper
        });
    }
    Ok(out)
}
