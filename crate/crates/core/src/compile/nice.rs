//! d-DNNF assembly for nice queries and d-D assembly for co-nice ones.
//!
//! Box `l` of a nice decomposition is a function that ignores `l`. Its
//! lineage splits into the facts of `R, S_1..S_l` (deciding `h_0..h_{l-1}`)
//! and those of `S_{l+1}..S_k, T` (deciding `h_{l+1}..h_k`), so it is an OR
//! over satisfying profile pairs `(A, B)` of `ExactL(A) AND ExactR(B)`. Each
//! side is an OBDD over a variable order grouped by one constant, built from
//! an automaton that tracks which `h` have been witnessed so far.

use std::collections::HashMap;

use super::circuit::{Circuit, CircuitBuilder, GateId};
use super::db::{Fact, TidDatabase};
use super::lineage::HQuery;
use super::obdd::{Automaton, Obdd};
use super::CompileError;
use crate::boolfun::VarSet;
use crate::niceness::{verify_decomposition, NiceDecomposition};

#[derive(Debug, Clone, Copy, Default)]
struct Step {
    /// First position of a constant's group.
    reset_anchor: bool,
    /// The unary fact (`R(a)` or `T(b)`) of the group.
    sets_anchor: bool,
    /// Witnesses this `h` together with the group's unary fact.
    with_anchor: Option<u8>,
    /// Witnesses this `h` together with the immediately preceding position.
    with_prev: Option<u8>,
}

/// Accepts exactly the sub-instances whose profile, restricted to the
/// tracked `h`, equals `target`.
struct ExactProfile<'a> {
    steps: &'a [Step],
    target: u32,
}

const ANCHOR: u32 = 1 << 14;
const PREV: u32 = 1 << 15;
const DEAD: u32 = 1 << 16;

impl Automaton for ExactProfile<'_> {
    type State = u32;

    fn start(&self) -> u32 {
        0
    }

    fn step(&self, &state: &u32, pos: usize, value: bool) -> u32 {
        let s = self.steps[pos];
        let mut mask = state & (ANCHOR - 1);
        let mut anchor = state & ANCHOR != 0 && !s.reset_anchor;
        let prev = state & PREV != 0;
        let mut hits = Vec::with_capacity(2);
        if value {
            if let Some(h) = s.with_anchor.filter(|_| anchor) {
                hits.push(h);
            }
            if let Some(h) = s.with_prev.filter(|_| prev) {
                hits.push(h);
            }
        }
        for h in hits {
            if self.target & (1 << h) == 0 {
                return DEAD;
            }
            mask |= 1 << h;
        }
        if s.sets_anchor {
            anchor = value;
        }
        // Drop bits the next position cannot read, to merge states.
        let next = self.steps.get(pos + 1).copied().unwrap_or_default();
        let keep_prev = value && next.with_prev.is_some();
        let keep_anchor = anchor && !next.reset_anchor;
        mask | if keep_anchor { ANCHOR } else { 0 } | if keep_prev { PREV } else { 0 }
    }

    fn decided(&self, &state: &u32, pos: usize) -> Option<bool> {
        if state == DEAD {
            Some(false)
        } else if pos == self.steps.len() {
            Some(state & (ANCHOR - 1) == self.target)
        } else {
            None
        }
    }
}

/// A variable order with its automaton steps.
struct Side {
    order: Vec<u32>,
    steps: Vec<Step>,
    /// Bits of the `h` this side decides.
    tracked: u32,
}

impl Side {
    fn push(&mut self, var: usize, step: Step) {
        self.order.push(var as u32);
        self.steps.push(step);
    }

    /// Left side of box `l`: `R(a)`, then `S_1(a,b)..S_l(a,b)` for each `b`,
    /// grouped by `a`.
    fn left(db: &TidDatabase, l: u8) -> Side {
        let n = db.domain().len() as u32;
        let mut side = Side {
            order: Vec::new(),
            steps: Vec::new(),
            tracked: (1 << l) - 1,
        };
        if l == 0 {
            return side;
        }
        for a in 0..n {
            let mut fresh = true;
            if let Some(v) = db.index_of(Fact::R(a)) {
                side.push(
                    v,
                    Step {
                        reset_anchor: true,
                        sets_anchor: true,
                        ..Step::default()
                    },
                );
                fresh = false;
            }
            for b in 0..n {
                let mut prev_fact = None;
                for j in 1..=l {
                    let Some(v) = db.index_of(Fact::S(j, a, b)) else {
                        prev_fact = None;
                        continue;
                    };
                    side.push(
                        v,
                        Step {
                            reset_anchor: fresh,
                            sets_anchor: false,
                            with_anchor: (j == 1).then_some(0),
                            with_prev: (j >= 2 && prev_fact == Some(j - 1)).then_some(j - 1),
                        },
                    );
                    prev_fact = Some(j);
                    fresh = false;
                }
            }
        }
        side
    }

    /// Right side of box `l`: `T(b)`, then `S_{l+1}(a,b)..S_k(a,b)` for each
    /// `a`, grouped by `b`.
    fn right(db: &TidDatabase, l: u8) -> Side {
        let k = db.k();
        let n = db.domain().len() as u32;
        let mut side = Side {
            order: Vec::new(),
            steps: Vec::new(),
            tracked: ((1u32 << (k + 1)) - 1) & !((1u32 << (l + 1)) - 1),
        };
        if l == k {
            return side;
        }
        for b in 0..n {
            let mut fresh = true;
            if let Some(v) = db.index_of(Fact::T(b)) {
                side.push(
                    v,
                    Step {
                        reset_anchor: true,
                        sets_anchor: true,
                        ..Step::default()
                    },
                );
                fresh = false;
            }
            for a in 0..n {
                let mut prev_fact = None;
                for j in l + 1..=k {
                    let Some(v) = db.index_of(Fact::S(j, a, b)) else {
                        prev_fact = None;
                        continue;
                    };
                    side.push(
                        v,
                        Step {
                            reset_anchor: fresh,
                            sets_anchor: false,
                            with_anchor: (j == k).then_some(k),
                            with_prev: (j >= l + 2 && prev_fact == Some(j - 1)).then_some(j - 1),
                        },
                    );
                    prev_fact = Some(j);
                    fresh = false;
                }
            }
        }
        side
    }

    fn exact(
        &self,
        target: u32,
        b: &mut CircuitBuilder,
        budget: usize,
    ) -> Result<GateId, CompileError> {
        debug_assert_eq!(target & !self.tracked, 0);
        let automaton = ExactProfile {
            steps: &self.steps,
            target,
        };
        Obdd::from_automaton(self.order.clone(), &automaton, budget)?.embed(b)
    }
}

fn check_inputs(q: &HQuery, d: &NiceDecomposition, db: &TidDatabase) -> Result<(), CompileError> {
    if q.k() != db.k() {
        return Err(CompileError::Malformed(format!(
            "query has k={} but the database has k={}",
            q.k(),
            db.k()
        )));
    }
    if !verify_decomposition(q.phi(), d) {
        return Err(CompileError::InvalidDecomposition);
    }
    Ok(())
}

/// The circuit of box `l` alone.
fn assemble_box(
    d: &NiceDecomposition,
    l: u8,
    db: &TidDatabase,
    b: &mut CircuitBuilder,
    budget: usize,
) -> Result<GateId, CompileError> {
    let k = db.k();
    let box_fn = d.box_fn(l);
    let left = Side::left(db, l);
    let right = Side::right(db, l);
    let mut left_gate: HashMap<u32, GateId> = HashMap::new();
    let mut right_gate: HashMap<u32, GateId> = HashMap::new();
    let mut pairs = Vec::new();
    for a in 0..1u32 << l {
        for hi in 0..1u32 << (k - l) {
            let bset = hi << (l + 1);
            if !box_fn.at(VarSet::from_bits(a | bset)) {
                continue;
            }
            let lg = match left_gate.get(&a) {
                Some(&g) => g,
                None => {
                    let g = left.exact(a, b, budget)?;
                    left_gate.insert(a, g);
                    g
                }
            };
            let rg = match right_gate.get(&bset) {
                Some(&g) => g,
                None => {
                    let g = right.exact(bset, b, budget)?;
                    right_gate.insert(bset, g);
                    g
                }
            };
            pairs.push(b.and(vec![lg, rg])?);
        }
    }
    b.or(pairs)
}

fn assemble_nice(
    d: &NiceDecomposition,
    db: &TidDatabase,
    b: &mut CircuitBuilder,
    budget: usize,
) -> Result<GateId, CompileError> {
    let mut boxes = Vec::new();
    for l in d.nonempty_boxes() {
        boxes.push(assemble_box(d, l, db, b, budget)?);
    }
    b.or(boxes)
}

fn finish_checked(
    b: &CircuitBuilder,
    out: GateId,
    db: &TidDatabase,
) -> Result<Circuit, CompileError> {
    let circuit = b.finish(out, db.len(), db.labels());
    if !circuit.check_decomposable() {
        return Err(CompileError::Structure(
            "an AND gate shares variables".into(),
        ));
    }
    Ok(circuit)
}

/// An NNF circuit for `lin(q, D)`: OR over the non-empty boxes of `d`.
pub fn compile_nice(
    q: &HQuery,
    d: &NiceDecomposition,
    db: &TidDatabase,
    budget: usize,
) -> Result<Circuit, CompileError> {
    check_inputs(q, d, db)?;
    let mut b = CircuitBuilder::new(budget);
    let out = assemble_nice(d, db, &mut b, budget)?;
    finish_checked(&b, out, db)
}

/// The circuit of a single box of `d` over `db`.
pub fn compile_box(
    q: &HQuery,
    d: &NiceDecomposition,
    l: u8,
    db: &TidDatabase,
    budget: usize,
) -> Result<Circuit, CompileError> {
    check_inputs(q, d, db)?;
    let mut b = CircuitBuilder::new(budget);
    let out = assemble_box(d, l, db, &mut b, budget)?;
    finish_checked(&b, out, db)
}

/// `NOT` over the nice circuit of `¬φ`, where `d` decomposes `¬φ`.
pub fn compile_co_nice(
    q: &HQuery,
    d: &NiceDecomposition,
    db: &TidDatabase,
    budget: usize,
) -> Result<Circuit, CompileError> {
    check_inputs(&q.negated(), d, db)?;
    let mut b = CircuitBuilder::new(budget);
    let inner = assemble_nice(d, db, &mut b, budget)?;
    let out = b.not_unfolded(inner)?;
    finish_checked(&b, out, db)
}
