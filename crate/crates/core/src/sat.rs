//! SAT backends: an embedded CDCL solver and an external solver driven
//! through DIMACS files.
//!
//! The embedded solver is a compact conflict-driven clause learner (two
//! watched literals, first-UIP learning, VSIDS-style activities with Luby
//! restarts). It is sized for instances of a few thousand variables.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::PathBuf;
use std::process::Command;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// A literal: variable index shifted left once, low bit set for negation.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Lit(u32);

impl Lit {
    pub fn new(var: usize, positive: bool) -> Lit {
        Lit(((var as u32) << 1) | (!positive) as u32)
    }

    pub fn pos(var: usize) -> Lit {
        Lit::new(var, true)
    }

    pub fn neg(var: usize) -> Lit {
        Lit::new(var, false)
    }

    pub fn var(self) -> usize {
        (self.0 >> 1) as usize
    }

    pub fn is_positive(self) -> bool {
        self.0 & 1 == 0
    }

    fn code(self) -> usize {
        self.0 as usize
    }

    /// 1-based signed DIMACS integer.
    pub fn to_dimacs(self) -> i64 {
        let v = self.var() as i64 + 1;
        if self.is_positive() {
            v
        } else {
            -v
        }
    }

    pub fn from_dimacs(x: i64) -> Option<Lit> {
        if x == 0 {
            return None;
        }
        Some(Lit::new(x.unsigned_abs() as usize - 1, x > 0))
    }
}

impl std::ops::Not for Lit {
    type Output = Lit;
    fn not(self) -> Lit {
        Lit(self.0 ^ 1)
    }
}

impl std::fmt::Debug for Lit {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.to_dimacs())
    }
}

/// A CNF formula over variables `0..num_vars`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Cnf {
    pub num_vars: usize,
    pub clauses: Vec<Vec<Lit>>,
}

impl Cnf {
    pub fn new(num_vars: usize) -> Self {
        Cnf {
            num_vars,
            clauses: Vec::new(),
        }
    }

    pub fn add(&mut self, clause: Vec<Lit>) {
        self.clauses.push(clause);
    }

    pub fn fresh_var(&mut self) -> usize {
        self.num_vars += 1;
        self.num_vars - 1
    }

    pub fn is_satisfied_by(&self, model: &[bool]) -> bool {
        self.clauses
            .iter()
            .all(|c| c.iter().any(|l| model[l.var()] == l.is_positive()))
    }

    /// Standard DIMACS text, optionally preceded by comment lines.
    pub fn to_dimacs(&self, comments: &[String]) -> String {
        let mut out = String::new();
        for c in comments {
            let _ = writeln!(out, "c {c}");
        }
        let _ = writeln!(out, "p cnf {} {}", self.num_vars, self.clauses.len());
        for clause in &self.clauses {
            for l in clause {
                let _ = write!(out, "{} ", l.to_dimacs());
            }
            out.push_str("0\n");
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SatOutcome {
    Sat(Vec<bool>),
    Unsat,
}

impl SatOutcome {
    pub fn is_sat(&self) -> bool {
        matches!(self, SatOutcome::Sat(_))
    }
}

/// Failures that leave satisfiability undecided. Never to be read as UNSAT.
#[derive(Debug, Error)]
pub enum SatError {
    #[error("solver gave up after {0} conflicts")]
    ConflictLimit(u64),
    #[error("external solver failed: {0}")]
    Backend(String),
    #[error("i/o error talking to external solver: {0}")]
    Io(#[from] std::io::Error),
}

pub trait SatBackend {
    fn solve(&mut self, cnf: &Cnf) -> Result<SatOutcome, SatError>;
}

/// Which backend to instantiate; backends themselves are single-use.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BackendChoice {
    Embedded {
        seed: u64,
        conflict_limit: Option<u64>,
    },
    External {
        program: PathBuf,
        args: Vec<String>,
    },
}

impl Default for BackendChoice {
    fn default() -> Self {
        BackendChoice::Embedded {
            seed: 0,
            conflict_limit: None,
        }
    }
}

impl BackendChoice {
    pub fn instantiate(&self) -> Box<dyn SatBackend> {
        match self {
            BackendChoice::Embedded {
                seed,
                conflict_limit,
            } => Box::new(EmbeddedSolver {
                seed: *seed,
                conflict_limit: *conflict_limit,
            }),
            BackendChoice::External { program, args } => Box::new(ExternalSolver {
                program: program.clone(),
                args: args.clone(),
            }),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct EmbeddedSolver {
    pub seed: u64,
    pub conflict_limit: Option<u64>,
}

impl SatBackend for EmbeddedSolver {
    fn solve(&mut self, cnf: &Cnf) -> Result<SatOutcome, SatError> {
        let mut solver = Cdcl::new(cnf.num_vars, self.seed);
        for clause in &cnf.clauses {
            if !solver.add_clause(clause) {
                return Ok(SatOutcome::Unsat);
            }
        }
        solver.run(self.conflict_limit)
    }
}

/// Runs an external program on a DIMACS file and reads SAT-competition
/// style output (`s SATISFIABLE` plus `v` lines).
#[derive(Debug, Clone)]
pub struct ExternalSolver {
    pub program: PathBuf,
    pub args: Vec<String>,
}

impl SatBackend for ExternalSolver {
    fn solve(&mut self, cnf: &Cnf) -> Result<SatOutcome, SatError> {
        let mut file = tempfile::Builder::new().suffix(".cnf").tempfile()?;
        file.write_all(cnf.to_dimacs(&[]).as_bytes())?;
        file.flush()?;
        let output = Command::new(&self.program)
            .args(&self.args)
            .arg(file.path())
            .output()?;
        let stdout = String::from_utf8_lossy(&output.stdout);
        parse_competition_output(&stdout, cnf.num_vars)
    }
}

pub fn parse_competition_output(text: &str, num_vars: usize) -> Result<SatOutcome, SatError> {
    let mut status = None;
    let mut model = vec![false; num_vars];
    for line in text.lines() {
        let line = line.trim();
        if let Some(rest) = line.strip_prefix("s ") {
            status = Some(rest.trim().to_string());
        } else if let Some(rest) = line.strip_prefix("v ") {
            for tok in rest.split_whitespace() {
                let x: i64 = tok
                    .parse()
                    .map_err(|_| SatError::Backend(format!("bad model token {tok:?}")))?;
                if let Some(l) = Lit::from_dimacs(x) {
                    if l.var() < num_vars {
                        model[l.var()] = l.is_positive();
                    }
                }
            }
        }
    }
    match status.as_deref() {
        Some("SATISFIABLE") => Ok(SatOutcome::Sat(model)),
        Some("UNSATISFIABLE") => Ok(SatOutcome::Unsat),
        Some(other) => Err(SatError::Backend(format!("solver reported {other:?}"))),
        None => Err(SatError::Backend("no status line in solver output".into())),
    }
}

const UNDEF: u8 = 2;

struct Cdcl {
    num_vars: usize,
    clauses: Vec<Vec<Lit>>,
    /// Indexed by literal code: clauses currently watching that literal.
    watches: Vec<Vec<usize>>,
    /// Per variable: 0 false, 1 true, UNDEF.
    value: Vec<u8>,
    level: Vec<u32>,
    reason: Vec<Option<usize>>,
    trail: Vec<Lit>,
    trail_lim: Vec<usize>,
    qhead: usize,
    activity: Vec<f64>,
    var_inc: f64,
    heap: VarHeap,
    phase: Vec<bool>,
    seen: Vec<bool>,
    ok: bool,
}

impl Cdcl {
    fn new(num_vars: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        // A tiny seeded jitter fixes the initial branching order.
        let activity: Vec<f64> = (0..num_vars).map(|_| rng.gen::<f64>() * 1e-6).collect();
        let mut heap = VarHeap::new(num_vars);
        for v in 0..num_vars {
            heap.insert(v, &activity);
        }
        Cdcl {
            num_vars,
            clauses: Vec::new(),
            watches: vec![Vec::new(); 2 * num_vars],
            value: vec![UNDEF; num_vars],
            level: vec![0; num_vars],
            reason: vec![None; num_vars],
            trail: Vec::new(),
            trail_lim: Vec::new(),
            qhead: 0,
            activity,
            var_inc: 1.0,
            heap,
            phase: vec![false; num_vars],
            seen: vec![false; num_vars],
            ok: true,
        }
    }

    fn lit_value(&self, l: Lit) -> u8 {
        match self.value[l.var()] {
            UNDEF => UNDEF,
            v => v ^ (!l.is_positive()) as u8,
        }
    }

    fn decision_level(&self) -> u32 {
        self.trail_lim.len() as u32
    }

    fn enqueue(&mut self, l: Lit, reason: Option<usize>) {
        let v = l.var();
        self.value[v] = l.is_positive() as u8;
        self.level[v] = self.decision_level();
        self.reason[v] = reason;
        self.trail.push(l);
    }

    /// Adds an original clause at level 0; returns false once the formula is
    /// known to be unsatisfiable.
    fn add_clause(&mut self, clause: &[Lit]) -> bool {
        if !self.ok {
            return false;
        }
        let mut lits: Vec<Lit> = clause.to_vec();
        lits.sort();
        lits.dedup();
        if lits.windows(2).any(|w| w[0] == !w[1]) {
            return true;
        }
        lits.retain(|&l| self.lit_value(l) != 0);
        if lits.iter().any(|&l| self.lit_value(l) == 1) {
            return true;
        }
        match lits.len() {
            0 => {
                self.ok = false;
            }
            1 => {
                self.enqueue(lits[0], None);
                if self.propagate().is_some() {
                    self.ok = false;
                }
            }
            _ => {
                self.attach(lits);
            }
        }
        self.ok
    }

    fn attach(&mut self, lits: Vec<Lit>) -> usize {
        let idx = self.clauses.len();
        self.watches[lits[0].code()].push(idx);
        self.watches[lits[1].code()].push(idx);
        self.clauses.push(lits);
        idx
    }

    /// Unit propagation; returns a conflicting clause if any.
    fn propagate(&mut self) -> Option<usize> {
        while self.qhead < self.trail.len() {
            let p = self.trail[self.qhead];
            self.qhead += 1;
            let false_lit = !p;
            let mut watchers = std::mem::take(&mut self.watches[false_lit.code()]);
            let mut i = 0;
            let mut conflict = None;
            while i < watchers.len() {
                let ci = watchers[i];
                {
                    let clause = &mut self.clauses[ci];
                    if clause[0] == false_lit {
                        clause.swap(0, 1);
                    }
                }
                let first = self.clauses[ci][0];
                if self.lit_value(first) == 1 {
                    i += 1;
                    continue;
                }
                let len = self.clauses[ci].len();
                let mut moved = false;
                for j in 2..len {
                    let cand = self.clauses[ci][j];
                    if self.lit_value(cand) != 0 {
                        self.clauses[ci].swap(1, j);
                        self.watches[cand.code()].push(ci);
                        watchers.swap_remove(i);
                        moved = true;
                        break;
                    }
                }
                if moved {
                    continue;
                }
                if self.lit_value(first) == 0 {
                    conflict = Some(ci);
                    self.qhead = self.trail.len();
                    break;
                }
                self.enqueue(first, Some(ci));
                i += 1;
            }
            let slot = &mut self.watches[false_lit.code()];
            watchers.append(slot);
            *slot = watchers;
            if conflict.is_some() {
                return conflict;
            }
        }
        None
    }

    fn bump(&mut self, v: usize) {
        self.activity[v] += self.var_inc;
        if self.activity[v] > 1e100 {
            for a in &mut self.activity {
                *a *= 1e-100;
            }
            self.var_inc *= 1e-100;
        }
        self.heap.increase(v, &self.activity);
    }

    /// First-UIP conflict analysis; returns the learnt clause (asserting
    /// literal first) and the backjump level.
    fn analyze(&mut self, mut conflict: usize) -> (Vec<Lit>, u32) {
        let mut learnt = vec![Lit(0)];
        let mut pending = 0usize;
        let mut p: Option<Lit> = None;
        let mut index = self.trail.len();
        loop {
            let clause = self.clauses[conflict].clone();
            let start = if p.is_some() { 1 } else { 0 };
            for &q in &clause[start..] {
                let v = q.var();
                if !self.seen[v] && self.level[v] > 0 {
                    self.seen[v] = true;
                    self.bump(v);
                    if self.level[v] >= self.decision_level() {
                        pending += 1;
                    } else {
                        learnt.push(q);
                    }
                }
            }
            loop {
                index -= 1;
                if self.seen[self.trail[index].var()] {
                    break;
                }
            }
            let lit = self.trail[index];
            self.seen[lit.var()] = false;
            pending -= 1;
            p = Some(lit);
            if pending == 0 {
                break;
            }
            conflict = self.reason[lit.var()].expect("implied literal has a reason");
            // Reasons keep their implied literal in position 0.
            debug_assert_eq!(self.clauses[conflict][0], lit);
        }
        learnt[0] = !p.expect("at least one literal");
        for l in &learnt[1..] {
            self.seen[l.var()] = false;
        }
        let back = if learnt.len() == 1 {
            0
        } else {
            let (mi, _) = learnt
                .iter()
                .enumerate()
                .skip(1)
                .max_by_key(|(_, l)| self.level[l.var()])
                .expect("non-empty tail");
            learnt.swap(1, mi);
            self.level[learnt[1].var()]
        };
        (learnt, back)
    }

    fn backtrack(&mut self, level: u32) {
        if self.decision_level() <= level {
            return;
        }
        let lim = self.trail_lim[level as usize];
        for i in (lim..self.trail.len()).rev() {
            let v = self.trail[i].var();
            self.phase[v] = self.value[v] == 1;
            self.value[v] = UNDEF;
            self.reason[v] = None;
            self.heap.insert(v, &self.activity);
        }
        self.trail.truncate(lim);
        self.trail_lim.truncate(level as usize);
        self.qhead = lim;
    }

    fn pick_branch(&mut self) -> Option<Lit> {
        while let Some(v) = self.heap.pop(&self.activity) {
            if self.value[v] == UNDEF {
                return Some(Lit::new(v, self.phase[v]));
            }
        }
        None
    }

    fn run(&mut self, conflict_limit: Option<u64>) -> Result<SatOutcome, SatError> {
        if !self.ok {
            return Ok(SatOutcome::Unsat);
        }
        let mut conflicts = 0u64;
        let mut restart_idx = 0u32;
        let mut budget = 100 * luby(restart_idx);
        loop {
            if let Some(conflict) = self.propagate() {
                conflicts += 1;
                if self.decision_level() == 0 {
                    return Ok(SatOutcome::Unsat);
                }
                if conflict_limit.is_some_and(|lim| conflicts > lim) {
                    return Err(SatError::ConflictLimit(conflicts));
                }
                let (learnt, back) = self.analyze(conflict);
                self.backtrack(back);
                if learnt.len() == 1 {
                    self.enqueue(learnt[0], None);
                } else {
                    let asserting = learnt[0];
                    let ci = self.attach(learnt);
                    self.enqueue(asserting, Some(ci));
                }
                self.var_inc /= 0.95;
                budget = budget.saturating_sub(1);
            } else {
                if budget == 0 {
                    restart_idx += 1;
                    budget = 100 * luby(restart_idx);
                    self.backtrack(0);
                }
                match self.pick_branch() {
                    None => {
                        let model = (0..self.num_vars).map(|v| self.value[v] == 1).collect();
                        return Ok(SatOutcome::Sat(model));
                    }
                    Some(l) => {
                        self.trail_lim.push(self.trail.len());
                        self.enqueue(l, None);
                    }
                }
            }
        }
    }
}

fn luby(mut i: u32) -> u64 {
    // Luby sequence 1,1,2,1,1,2,4,...
    let mut size = 1u64;
    let mut seq = 0u32;
    while size < i as u64 + 1 {
        seq += 1;
        size = 2 * size + 1;
    }
    while size - 1 != i as u64 {
        size = (size - 1) >> 1;
        seq -= 1;
        i %= size as u32;
    }
    1u64 << seq
}

/// Binary max-heap of variables keyed by activity.
struct VarHeap {
    heap: Vec<usize>,
    pos: Vec<Option<usize>>,
}

impl VarHeap {
    fn new(n: usize) -> Self {
        VarHeap {
            heap: Vec::with_capacity(n),
            pos: vec![None; n],
        }
    }

    fn insert(&mut self, v: usize, act: &[f64]) {
        if self.pos[v].is_some() {
            return;
        }
        self.heap.push(v);
        self.pos[v] = Some(self.heap.len() - 1);
        self.sift_up(self.heap.len() - 1, act);
    }

    fn increase(&mut self, v: usize, act: &[f64]) {
        if let Some(i) = self.pos[v] {
            self.sift_up(i, act);
        }
    }

    fn pop(&mut self, act: &[f64]) -> Option<usize> {
        if self.heap.is_empty() {
            return None;
        }
        let top = self.heap.swap_remove(0);
        self.pos[top] = None;
        if !self.heap.is_empty() {
            self.pos[self.heap[0]] = Some(0);
            self.sift_down(0, act);
        }
        Some(top)
    }

    fn sift_up(&mut self, mut i: usize, act: &[f64]) {
        while i > 0 {
            let parent = (i - 1) / 2;
            if act[self.heap[i]] <= act[self.heap[parent]] {
                break;
            }
            self.swap(i, parent);
            i = parent;
        }
    }

    fn sift_down(&mut self, mut i: usize, act: &[f64]) {
        loop {
            let (l, r) = (2 * i + 1, 2 * i + 2);
            let mut best = i;
            if l < self.heap.len() && act[self.heap[l]] > act[self.heap[best]] {
                best = l;
            }
            if r < self.heap.len() && act[self.heap[r]] > act[self.heap[best]] {
                best = r;
            }
            if best == i {
                break;
            }
            self.swap(i, best);
            i = best;
        }
    }

    fn swap(&mut self, a: usize, b: usize) {
        self.heap.swap(a, b);
        self.pos[self.heap[a]] = Some(a);
        self.pos[self.heap[b]] = Some(b);
    }
}
