//! Reduced ordered binary decision diagrams built from a deterministic
//! automaton read along the variable order.

use std::collections::HashMap;
use std::hash::Hash;

use super::circuit::{Circuit, CircuitBuilder, GateId};
use super::CompileError;

/// Largest order accepted by [`Obdd::from_evaluator`].
pub const EVALUATOR_MAX_VARS: usize = 22;

/// Reads one variable per position. `decided` may return the final value
/// early and must do so once `pos` reaches the end of the order.
pub trait Automaton {
    type State: Clone + Eq + Hash;

    fn start(&self) -> Self::State;

    fn step(&self, state: &Self::State, pos: usize, value: bool) -> Self::State;

    fn decided(&self, state: &Self::State, pos: usize) -> Option<bool>;
}

const FALSE: u32 = 0;
const TRUE: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ObddNode {
    /// Position in the order.
    pub level: u32,
    pub lo: u32,
    pub hi: u32,
}

/// Nodes are referenced by index; 0 and 1 are the terminals, decision nodes
/// start at 2 and only point to smaller indices.
#[derive(Debug, Clone)]
pub struct Obdd {
    order: Vec<u32>,
    nodes: Vec<ObddNode>,
    root: u32,
}

struct Build<'a, A: Automaton> {
    automaton: &'a A,
    len: usize,
    memo: HashMap<(usize, A::State), u32>,
    unique: HashMap<ObddNode, u32>,
    nodes: Vec<ObddNode>,
    budget: usize,
}

impl<A: Automaton> Build<'_, A> {
    fn go(&mut self, pos: usize, state: A::State) -> Result<u32, CompileError> {
        if let Some(b) = self.automaton.decided(&state, pos) {
            return Ok(if b { TRUE } else { FALSE });
        }
        assert!(
            pos < self.len,
            "automaton undecided after the last variable"
        );
        if let Some(&r) = self.memo.get(&(pos, state.clone())) {
            return Ok(r);
        }
        let lo_state = self.automaton.step(&state, pos, false);
        let hi_state = self.automaton.step(&state, pos, true);
        let lo = self.go(pos + 1, lo_state)?;
        let hi = self.go(pos + 1, hi_state)?;
        let r = if lo == hi {
            lo
        } else {
            let node = ObddNode {
                level: pos as u32,
                lo,
                hi,
            };
            match self.unique.get(&node) {
                Some(&r) => r,
                None => {
                    let r = self.nodes.len() as u32;
                    self.nodes.push(node);
                    self.unique.insert(node, r);
                    r
                }
            }
        };
        if self.memo.len() + self.nodes.len() >= self.budget {
            return Err(CompileError::BudgetExceeded {
                budget: self.budget,
            });
        }
        self.memo.insert((pos, state), r);
        Ok(r)
    }
}

impl Obdd {
    /// `order[i]` is the circuit variable read at position `i`.
    pub fn from_automaton<A: Automaton>(
        order: Vec<u32>,
        automaton: &A,
        budget: usize,
    ) -> Result<Obdd, CompileError> {
        let terminal = ObddNode {
            level: u32::MAX,
            lo: 0,
            hi: 0,
        };
        let mut build = Build {
            automaton,
            len: order.len(),
            memo: HashMap::new(),
            unique: HashMap::new(),
            nodes: vec![terminal, terminal],
            budget,
        };
        let root = build.go(0, automaton.start())?;
        Ok(Obdd {
            order,
            nodes: build.nodes,
            root,
        })
    }

    /// Builds the OBDD of `f`, which receives values indexed by position in
    /// `order`. Residual subfunctions are kept as truth tables.
    pub fn from_evaluator(
        order: Vec<u32>,
        f: impl Fn(&[bool]) -> bool,
        budget: usize,
    ) -> Result<Obdd, CompileError> {
        let n = order.len();
        if n > EVALUATOR_MAX_VARS {
            return Err(CompileError::TooManyVariables {
                vars: n,
                limit: EVALUATOR_MAX_VARS,
            });
        }
        let rows = 1usize << n;
        let mut table = vec![0u64; rows.div_ceil(64)];
        let mut values = vec![false; n];
        for m in 0..rows {
            // The first variable of the order is the most significant bit.
            for (i, v) in values.iter_mut().enumerate() {
                *v = (m >> (n - 1 - i)) & 1 == 1;
            }
            if f(&values) {
                table[m / 64] |= 1 << (m % 64);
            }
        }
        Obdd::from_automaton(order, &ResidualTable { n, table }, budget)
    }

    pub fn order(&self) -> &[u32] {
        &self.order
    }

    pub fn decision_nodes(&self) -> usize {
        self.nodes.len() - 2
    }

    pub fn root_constant(&self) -> Option<bool> {
        match self.root {
            FALSE => Some(false),
            TRUE => Some(true),
            _ => None,
        }
    }

    /// `assignment` is indexed by circuit variable.
    pub fn evaluate(&self, assignment: &[bool]) -> bool {
        let mut r = self.root;
        while r > TRUE {
            let node = self.nodes[r as usize];
            let v = self.order[node.level as usize];
            r = if assignment[v as usize] {
                node.hi
            } else {
                node.lo
            };
        }
        r == TRUE
    }

    /// Emits each decision node as `OR(AND(VAR v, hi), AND(NOT v, lo))`.
    pub fn embed(&self, b: &mut CircuitBuilder) -> Result<GateId, CompileError> {
        let mut gate = Vec::with_capacity(self.nodes.len());
        gate.push(b.constant(false)?);
        gate.push(b.constant(true)?);
        for node in &self.nodes[2..] {
            let v = b.var(self.order[node.level as usize])?;
            let nv = b.not(v)?;
            let hi = b.and(vec![v, gate[node.hi as usize]])?;
            let lo = b.and(vec![nv, gate[node.lo as usize]])?;
            gate.push(b.or(vec![hi, lo])?);
        }
        Ok(gate[self.root as usize])
    }

    pub fn to_circuit(
        &self,
        num_vars: usize,
        labels: Vec<String>,
        budget: usize,
    ) -> Result<Circuit, CompileError> {
        let mut b = CircuitBuilder::new(budget);
        let out = self.embed(&mut b)?;
        let circuit = b.finish(out, num_vars, labels);
        assert!(
            circuit.check_decomposable(),
            "OBDD circuits are decomposable"
        );
        Ok(circuit)
    }
}

/// The residual subfunction after the first `pos` variables: a truth table
/// of `2^(n-pos)` bits whose top bit is the next variable.
#[derive(Clone, PartialEq, Eq, Hash)]
struct Residual {
    bits: Vec<u64>,
}

struct ResidualTable {
    n: usize,
    table: Vec<u64>,
}

impl Automaton for ResidualTable {
    type State = Residual;

    fn start(&self) -> Residual {
        Residual {
            bits: self.table.clone(),
        }
    }

    fn step(&self, state: &Residual, pos: usize, value: bool) -> Residual {
        let half = 1usize << (self.n - pos - 1);
        let bits = if half >= 64 {
            let words = half / 64;
            let s = if value { words } else { 0 };
            state.bits[s..s + words].to_vec()
        } else {
            let w = state.bits[0] >> if value { half } else { 0 };
            vec![w & ((1u64 << half) - 1)]
        };
        Residual { bits }
    }

    fn decided(&self, state: &Residual, pos: usize) -> Option<bool> {
        let rows = 1usize << (self.n - pos);
        let full = if rows >= 64 { !0 } else { (1u64 << rows) - 1 };
        if state.bits.iter().all(|&w| w == 0) {
            Some(false)
        } else if state.bits.iter().all(|&w| w == full) {
            Some(true)
        } else {
            None
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compile::circuit::DEFAULT_NODE_BUDGET;
    use crate::compile::db::TidDatabase;
    use crate::compile::lineage::eval_h;

    fn obdd(n: usize, f: impl Fn(&[bool]) -> bool) -> Obdd {
        Obdd::from_evaluator((0..n as u32).collect(), f, DEFAULT_NODE_BUDGET).unwrap()
    }

    #[test]
    fn constant_is_a_single_const_gate() {
        let o = obdd(3, |_| true);
        assert_eq!(o.decision_nodes(), 0);
        let c = o.to_circuit(3, Vec::new(), DEFAULT_NODE_BUDGET).unwrap();
        assert_eq!(c.size(), 1);
        assert!(c.evaluate(&[false; 3]));
    }

    #[test]
    fn single_variable() {
        let o = obdd(1, |v| v[0]);
        assert_eq!(o.decision_nodes(), 1);
        assert!(o.evaluate(&[true]) && !o.evaluate(&[false]));
    }

    #[test]
    fn h10_lineage_has_two_decision_nodes() {
        let db = TidDatabase::parse("R a 1/2\nS1 a b 1/2", 1).unwrap();
        let o = obdd(2, |v| eval_h(&db, 0, v));
        assert_eq!(o.decision_nodes(), 2);
        let c = o.to_circuit(2, db.labels(), DEFAULT_NODE_BUDGET).unwrap();
        for m in 0..4 {
            let a = [m & 1 == 1, m & 2 == 2];
            assert_eq!(c.evaluate(&a), a[0] && a[1]);
        }
    }

    #[test]
    fn reduction_shares_isomorphic_subgraphs() {
        // Parity of 6 variables: 2 nodes per level below the first.
        let o = obdd(6, |v| v.iter().filter(|&&b| b).count() % 2 == 1);
        assert_eq!(o.decision_nodes(), 11);
        // x0 & x1 | x2 & x3 | x4 & x5 in the interleaved order.
        let o = obdd(6, |v| (v[0] && v[1]) || (v[2] && v[3]) || (v[4] && v[5]));
        assert_eq!(o.decision_nodes(), 6);
    }

    #[test]
    fn circuit_matches_function_and_is_deterministic() {
        let f = |v: &[bool]| (v[0] || v[3]) && (v[1] != v[2]) || (v[4] && !v[0]);
        let o = obdd(5, f);
        let c = o.to_circuit(5, Vec::new(), DEFAULT_NODE_BUDGET).unwrap();
        for m in 0..32u32 {
            let a: Vec<bool> = (0..5).map(|i| (m >> i) & 1 == 1).collect();
            assert_eq!(c.evaluate(&a), f(&a));
            assert_eq!(o.evaluate(&a), f(&a));
        }
        assert!(c.check_decomposable());
        assert!(c
            .check_deterministic(&crate::compile::circuit::DeterminismMode::Exhaustive)
            .unwrap());
        assert!(c.is_nnf());
    }

    #[test]
    fn order_maps_positions_to_variables() {
        let o = Obdd::from_evaluator(vec![2, 0], |v| v[0] && !v[1], DEFAULT_NODE_BUDGET).unwrap();
        assert!(o.evaluate(&[false, false, true]));
        assert!(!o.evaluate(&[true, false, true]));
    }

    #[test]
    fn budget_and_size_limits() {
        let parity = |v: &[bool]| v.iter().filter(|&&b| b).count() % 2 == 1;
        assert!(matches!(
            Obdd::from_evaluator((0..8).collect(), parity, 4),
            Err(CompileError::BudgetExceeded { budget: 4 })
        ));
        assert!(matches!(
            Obdd::from_evaluator((0..23).collect(), parity, DEFAULT_NODE_BUDGET),
            Err(CompileError::TooManyVariables { .. })
        ));
    }
}
