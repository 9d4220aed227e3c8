//! CNF lattices of nondegenerate monotone functions and their Möbius values.
//!
//! Elements are unions of clauses of the minimized CNF, ordered by reversed
//! inclusion: the top is the empty union, the bottom is the full variable
//! set. The H-query of a function is tractable exactly when the Möbius value
//! between bottom and top vanishes.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use thiserror::Error;

use crate::boolfun::{BoolFn, BoolFnError, VarSet};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LatticeError {
    #[error("function is degenerate (depends only on {0})")]
    Degenerate(VarSet),
    #[error(transparent)]
    Function(#[from] BoolFnError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CnfLattice {
    /// Distinct clause unions, sorted by size then bitmask; index 0 is the top.
    elements: Vec<VarSet>,
    /// `leq[u]` has bit `v` set iff `u <= v`, i.e. `elements[v] ⊆ elements[u]`.
    leq: Vec<Vec<u64>>,
    bottom: usize,
}

/// Möbius values `μ(u, top)` indexed like the lattice elements.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MobiusRow(pub Vec<i64>);

impl CnfLattice {
    pub fn build(f: &BoolFn) -> Result<Self, LatticeError> {
        let cnf = f.minimized_cnf()?;
        let dep = f.dep();
        if dep != f.all_vars() {
            return Err(LatticeError::Degenerate(dep));
        }
        let mut closure: BTreeSet<VarSet> = BTreeSet::new();
        closure.insert(VarSet::EMPTY);
        for &clause in &cnf.clauses {
            let grown: Vec<VarSet> = closure.iter().map(|e| e.union(clause)).collect();
            closure.extend(grown);
        }
        let mut elements: Vec<VarSet> = closure.into_iter().collect();
        elements.sort_by_key(|e| (e.len(), e.bits()));
        let n = elements.len();
        let words = n.div_ceil(64);
        let leq = elements
            .iter()
            .map(|&u| {
                let mut row = vec![0u64; words];
                for (v, &ev) in elements.iter().enumerate() {
                    if ev.is_subset(u) {
                        row[v / 64] |= 1 << (v % 64);
                    }
                }
                row
            })
            .collect();
        let bottom = elements
            .iter()
            .position(|&e| e == f.all_vars())
            .expect("nondegenerate: every variable occurs in a clause");
        Ok(CnfLattice {
            elements,
            leq,
            bottom,
        })
    }

    pub fn elements(&self) -> &[VarSet] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn top(&self) -> usize {
        0
    }

    pub fn bottom(&self) -> usize {
        self.bottom
    }

    pub fn index_of(&self, e: VarSet) -> Option<usize> {
        self.elements.iter().position(|&x| x == e)
    }

    pub fn leq(&self, u: usize, v: usize) -> bool {
        (self.leq[u][v / 64] >> (v % 64)) & 1 == 1
    }

    pub fn lt(&self, u: usize, v: usize) -> bool {
        u != v && self.leq(u, v)
    }

    /// `μ(u, top)` for every element, by the defining recursion
    /// `μ(top, top) = 1`, `μ(u, top) = -Σ_{u < w <= top} μ(w, top)`.
    pub fn mobius_row(&self) -> MobiusRow {
        // Elements are sorted by size, so every w > u (w ⊊ u) precedes u.
        let mut mu = vec![0i64; self.len()];
        for u in 0..self.len() {
            mu[u] = if u == self.top() {
                1
            } else {
                -(0..u)
                    .filter(|&w| self.lt(u, w))
                    .map(|w| mu[w])
                    .sum::<i64>()
            };
        }
        MobiusRow(mu)
    }

    /// Pairs `(u, v)` where `v` covers `u`.
    pub fn covering_pairs(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for u in 0..self.len() {
            for v in 0..self.len() {
                if self.lt(u, v) && !(0..self.len()).any(|w| self.lt(u, w) && self.lt(w, v)) {
                    out.push((u, v));
                }
            }
        }
        out
    }

    /// Graphviz rendering of the Hasse diagram, nodes labelled with their
    /// variable set and `μ(node, top)`.
    pub fn hasse_dot(&self, row: &MobiusRow) -> String {
        let mut out = String::from("digraph cnf_lattice {\n  rankdir=BT;\n  node [shape=box];\n");
        for (i, e) in self.elements.iter().enumerate() {
            let _ = writeln!(out, "  n{i} [label=\"{e}\\nmu={}\"];", row.0[i]);
        }
        for (u, v) in self.covering_pairs() {
            let _ = writeln!(out, "  n{u} -> n{v};");
        }
        out.push_str("}\n");
        out
    }
}

impl MobiusRow {
    pub fn at(&self, u: usize) -> i64 {
        self.0[u]
    }
}

/// `μ(bottom, top)` of the CNF lattice.
pub fn mobius_bottom_top(f: &BoolFn) -> Result<i64, LatticeError> {
    let lattice = CnfLattice::build(f)?;
    Ok(lattice.mobius_row().at(lattice.bottom()))
}

/// Safety of the H-query of `f`: `μ(bottom, top) = 0`.
pub fn is_safe(f: &BoolFn) -> Result<bool, LatticeError> {
    Ok(mobius_bottom_top(f)? == 0)
}

/// Verifies `Σ_{u <= w <= top} μ(w, top) = 0` for every `u` below the top.
pub fn mobius_checksum_holds(lattice: &CnfLattice, row: &MobiusRow) -> bool {
    (0..lattice.len()).filter(|&u| u != lattice.top()).all(|u| {
        (0..lattice.len())
            .filter(|&w| lattice.leq(u, w))
            .map(|w| row.at(w))
            .sum::<i64>()
            == 0
    })
}
