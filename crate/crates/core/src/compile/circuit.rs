//! Boolean circuits with hash-consed construction, structural checks and
//! exact probability evaluation.

use std::collections::HashMap;
use std::fmt::Write as _;

use num_rational::BigRational;
use num_traits::{One, Zero};

use super::CompileError;
use crate::sat::{BackendChoice, Cnf, Lit, SatOutcome};

pub type GateId = u32;

pub const DEFAULT_NODE_BUDGET: usize = 10_000_000;

/// Exhaustive determinism checking enumerates `2^n` assignments.
pub const EXHAUSTIVE_MAX_VARS: usize = 22;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Gate {
    Const(bool),
    Var(u32),
    Not(GateId),
    And(Vec<GateId>),
    Or(Vec<GateId>),
}

impl Gate {
    pub fn children(&self) -> &[GateId] {
        match self {
            Gate::Const(_) | Gate::Var(_) => &[],
            Gate::Not(c) => std::slice::from_ref(c),
            Gate::And(cs) | Gate::Or(cs) => cs,
        }
    }
}

/// Builds a DAG bottom-up. Structurally equal gates are shared and trivial
/// gates are folded: constants are absorbed, children are sorted and
/// deduplicated, single-child AND/OR collapse, double negation cancels.
#[derive(Debug)]
pub struct CircuitBuilder {
    gates: Vec<Gate>,
    unique: HashMap<Gate, GateId>,
    budget: usize,
}

impl CircuitBuilder {
    pub fn new(budget: usize) -> Self {
        CircuitBuilder {
            gates: Vec::new(),
            unique: HashMap::new(),
            budget,
        }
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn gate(&self, id: GateId) -> &Gate {
        &self.gates[id as usize]
    }

    fn intern(&mut self, gate: Gate) -> Result<GateId, CompileError> {
        if let Some(&id) = self.unique.get(&gate) {
            return Ok(id);
        }
        if self.gates.len() >= self.budget {
            return Err(CompileError::BudgetExceeded {
                budget: self.budget,
            });
        }
        let id = self.gates.len() as GateId;
        self.gates.push(gate.clone());
        self.unique.insert(gate, id);
        Ok(id)
    }

    pub fn constant(&mut self, value: bool) -> Result<GateId, CompileError> {
        self.intern(Gate::Const(value))
    }

    pub fn var(&mut self, v: u32) -> Result<GateId, CompileError> {
        self.intern(Gate::Var(v))
    }

    pub fn not(&mut self, g: GateId) -> Result<GateId, CompileError> {
        match *self.gate(g) {
            Gate::Const(b) => self.constant(!b),
            Gate::Not(inner) => Ok(inner),
            _ => self.intern(Gate::Not(g)),
        }
    }

    /// A NOT gate kept even over a constant.
    pub fn not_unfolded(&mut self, g: GateId) -> Result<GateId, CompileError> {
        self.intern(Gate::Not(g))
    }

    pub fn and(&mut self, children: Vec<GateId>) -> Result<GateId, CompileError> {
        self.nary(children, true)
    }

    pub fn or(&mut self, children: Vec<GateId>) -> Result<GateId, CompileError> {
        self.nary(children, false)
    }

    fn nary(&mut self, children: Vec<GateId>, is_and: bool) -> Result<GateId, CompileError> {
        let mut kept = Vec::with_capacity(children.len());
        for c in children {
            match *self.gate(c) {
                Gate::Const(b) if b == is_and => {}
                Gate::Const(_) => return self.constant(!is_and),
                _ => kept.push(c),
            }
        }
        kept.sort_unstable();
        kept.dedup();
        match kept.len() {
            0 => self.constant(is_and),
            1 => Ok(kept[0]),
            _ if is_and => self.intern(Gate::And(kept)),
            _ => self.intern(Gate::Or(kept)),
        }
    }

    /// Freezes the gates reachable from `output`, renumbered in topological
    /// order.
    pub fn finish(&self, output: GateId, num_vars: usize, labels: Vec<String>) -> Circuit {
        let mut reach = vec![false; self.gates.len()];
        reach[output as usize] = true;
        for id in (0..=output as usize).rev() {
            if reach[id] {
                for &c in self.gates[id].children() {
                    reach[c as usize] = true;
                }
            }
        }
        let mut renum = vec![GateId::MAX; self.gates.len()];
        let mut gates = Vec::new();
        for (id, gate) in self.gates.iter().enumerate() {
            if !reach[id] {
                continue;
            }
            renum[id] = gates.len() as GateId;
            let map = |cs: &[GateId]| cs.iter().map(|&c| renum[c as usize]).collect();
            gates.push(match gate {
                Gate::Not(c) => Gate::Not(renum[*c as usize]),
                Gate::And(cs) => Gate::And(map(cs)),
                Gate::Or(cs) => Gate::Or(map(cs)),
                other => other.clone(),
            });
        }
        Circuit::new(gates, renum[output as usize], num_vars, labels)
            .expect("builder output is well formed")
    }
}

/// Per-gate variable sets as bitsets over the circuit's variables.
#[derive(Debug, Clone)]
struct VarSets {
    words: usize,
    bits: Vec<u64>,
}

impl VarSets {
    fn row(&self, g: GateId) -> &[u64] {
        let s = g as usize * self.words;
        &self.bits[s..s + self.words]
    }
}

/// How `check_deterministic` decides pairwise exclusivity of OR inputs.
#[derive(Debug, Clone)]
pub enum DeterminismMode {
    /// Bit-parallel enumeration of all assignments to the circuit's variables.
    Exhaustive,
    /// One SAT call per OR-input pair not separated syntactically.
    Sat(BackendChoice),
}

/// An immutable circuit; gate ids are topologically ordered (inputs first).
#[derive(Debug, Clone)]
pub struct Circuit {
    gates: Vec<Gate>,
    output: GateId,
    num_vars: usize,
    labels: Vec<String>,
    vars: VarSets,
}

impl Circuit {
    pub fn new(
        gates: Vec<Gate>,
        output: GateId,
        num_vars: usize,
        labels: Vec<String>,
    ) -> Result<Self, CompileError> {
        let malformed = |msg: String| Err(CompileError::Malformed(msg));
        if output as usize >= gates.len() {
            return malformed(format!("output {output} is not a gate"));
        }
        let words = num_vars.div_ceil(64).max(1);
        let mut bits = vec![0u64; gates.len() * words];
        for (id, gate) in gates.iter().enumerate() {
            if let Gate::Var(v) = *gate {
                if v as usize >= num_vars {
                    return malformed(format!("gate {id} reads variable {v} of {num_vars}"));
                }
                bits[id * words + v as usize / 64] |= 1 << (v % 64);
            }
            for &c in gate.children() {
                if c as usize >= id {
                    return malformed(format!("gate {id} reads later gate {c}"));
                }
                for w in 0..words {
                    bits[id * words + w] |= bits[c as usize * words + w];
                }
            }
        }
        Ok(Circuit {
            gates,
            output,
            num_vars,
            labels,
            vars: VarSets { words, bits },
        })
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn gate(&self, id: GateId) -> &Gate {
        &self.gates[id as usize]
    }

    pub fn output(&self) -> GateId {
        self.output
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn size(&self) -> usize {
        self.gates.len()
    }

    pub fn num_edges(&self) -> usize {
        self.gates.iter().map(|g| g.children().len()).sum()
    }

    /// `VARS(g)` in ascending order.
    pub fn vars_of(&self, g: GateId) -> Vec<u32> {
        let row = self.vars.row(g);
        (0..self.num_vars as u32)
            .filter(|&v| (row[v as usize / 64] >> (v % 64)) & 1 == 1)
            .collect()
    }

    /// True when every NOT gate reads a variable gate.
    pub fn is_nnf(&self) -> bool {
        self.non_leaf_not_count() == 0
    }

    pub fn non_leaf_not_count(&self) -> usize {
        self.gates
            .iter()
            .filter(|g| matches!(g, Gate::Not(c) if !matches!(self.gate(*c), Gate::Var(_))))
            .count()
    }

    pub fn evaluate(&self, assignment: &[bool]) -> bool {
        let mut val: Vec<bool> = Vec::with_capacity(self.gates.len());
        for gate in &self.gates {
            let v = match gate {
                Gate::Const(b) => *b,
                Gate::Var(x) => assignment[*x as usize],
                Gate::Not(c) => !val[*c as usize],
                Gate::And(cs) => cs.iter().all(|&c| val[c as usize]),
                Gate::Or(cs) => cs.iter().any(|&c| val[c as usize]),
            };
            val.push(v);
        }
        val[self.output as usize]
    }

    /// Evaluates 64 assignments at once; `var_words[v]` holds variable `v`
    /// across the 64 lanes. Returns the value word of every gate.
    pub fn evaluate_words(&self, var_words: &[u64]) -> Vec<u64> {
        let mut out = Vec::with_capacity(self.gates.len());
        self.eval_words_into(var_words, &mut out);
        out
    }

    fn eval_words_into(&self, var_words: &[u64], val: &mut Vec<u64>) {
        val.clear();
        for gate in &self.gates {
            let v = match gate {
                Gate::Const(b) => {
                    if *b {
                        !0
                    } else {
                        0
                    }
                }
                Gate::Var(x) => var_words[*x as usize],
                Gate::Not(c) => !val[*c as usize],
                Gate::And(cs) => cs.iter().fold(!0, |acc, &c| acc & val[c as usize]),
                Gate::Or(cs) => cs.iter().fold(0, |acc, &c| acc | val[c as usize]),
            };
            val.push(v);
        }
    }

    /// Every AND gate has inputs with pairwise disjoint `VARS`.
    pub fn check_decomposable(&self) -> bool {
        let words = self.vars.words;
        let mut seen = vec![0u64; words];
        for gate in &self.gates {
            if let Gate::And(cs) = gate {
                seen.iter_mut().for_each(|w| *w = 0);
                for &c in cs {
                    let row = self.vars.row(c);
                    if seen.iter().zip(row).any(|(a, b)| a & b != 0) {
                        return false;
                    }
                    seen.iter_mut().zip(row).for_each(|(a, b)| *a |= b);
                }
            }
        }
        true
    }

    /// Every OR gate has pairwise mutually exclusive inputs.
    pub fn check_deterministic(&self, mode: &DeterminismMode) -> Result<bool, CompileError> {
        match mode {
            DeterminismMode::Exhaustive => self.deterministic_exhaustive(),
            DeterminismMode::Sat(choice) => self.deterministic_sat(choice),
        }
    }

    /// Exhaustive below `exhaustive_limit` circuit variables, SAT above.
    pub fn check_deterministic_auto(
        &self,
        exhaustive_limit: usize,
        choice: &BackendChoice,
    ) -> Result<bool, CompileError> {
        if self.vars_of(self.output).len() <= exhaustive_limit.min(EXHAUSTIVE_MAX_VARS) {
            self.deterministic_exhaustive()
        } else {
            self.deterministic_sat(choice)
        }
    }

    /// Runs `visit` on every batch of 64 assignments over `VARS(output)`,
    /// passing the value word of every gate and the mask of valid lanes.
    /// Stops early when `visit` returns false.
    pub fn for_each_assignment_batch(
        &self,
        mut visit: impl FnMut(&[u64], &[u64], u64) -> bool,
    ) -> Result<(), CompileError> {
        let used = self.vars_of(self.output);
        let m = used.len();
        if m > EXHAUSTIVE_MAX_VARS {
            return Err(CompileError::TooManyVariables {
                vars: m,
                limit: EXHAUSTIVE_MAX_VARS,
            });
        }
        const LANES: [u64; 6] = [
            0xAAAA_AAAA_AAAA_AAAA,
            0xCCCC_CCCC_CCCC_CCCC,
            0xF0F0_F0F0_F0F0_F0F0,
            0xFF00_FF00_FF00_FF00,
            0xFFFF_0000_FFFF_0000,
            0xFFFF_FFFF_0000_0000,
        ];
        let valid = if m >= 6 { !0 } else { (1u64 << (1 << m)) - 1 };
        let batches = 1u64 << m.saturating_sub(6);
        let mut var_words = vec![0u64; self.num_vars];
        let mut val = Vec::with_capacity(self.gates.len());
        for batch in 0..batches {
            for (j, &v) in used.iter().enumerate() {
                var_words[v as usize] = if j < 6 {
                    LANES[j]
                } else if (batch >> (j - 6)) & 1 == 1 {
                    !0
                } else {
                    0
                };
            }
            self.eval_words_into(&var_words, &mut val);
            if !visit(&var_words, &val, valid) {
                break;
            }
        }
        Ok(())
    }

    fn deterministic_exhaustive(&self) -> Result<bool, CompileError> {
        let mut ok = true;
        self.for_each_assignment_batch(|_, val, valid| {
            for gate in &self.gates {
                if let Gate::Or(cs) = gate {
                    let mut acc = 0u64;
                    for &c in cs {
                        let w = val[c as usize] & valid;
                        if acc & w != 0 {
                            ok = false;
                            return false;
                        }
                        acc |= w;
                    }
                }
            }
            true
        })?;
        Ok(ok)
    }

    fn deterministic_sat(&self, choice: &BackendChoice) -> Result<bool, CompileError> {
        for gate in &self.gates {
            if let Gate::Or(cs) = gate {
                for (i, &a) in cs.iter().enumerate() {
                    for &b in &cs[i + 1..] {
                        if self.syntactically_exclusive(a, b) {
                            continue;
                        }
                        if self.jointly_satisfiable(&[a, b], choice)? {
                            return Ok(false);
                        }
                    }
                }
            }
        }
        Ok(true)
    }

    /// Literals directly guarding `g`: itself if a literal, or the literal
    /// inputs of an AND.
    fn guard_literals(&self, g: GateId) -> Vec<(u32, bool)> {
        let lit = |g: GateId| match *self.gate(g) {
            Gate::Var(v) => Some((v, true)),
            Gate::Not(c) => match *self.gate(c) {
                Gate::Var(v) => Some((v, false)),
                _ => None,
            },
            _ => None,
        };
        match self.gate(g) {
            Gate::And(cs) => cs.iter().filter_map(|&c| lit(c)).collect(),
            _ => lit(g).into_iter().collect(),
        }
    }

    fn syntactically_exclusive(&self, a: GateId, b: GateId) -> bool {
        let ga = self.guard_literals(a);
        let gb = self.guard_literals(b);
        ga.iter().any(|&(v, s)| gb.contains(&(v, !s)))
    }

    /// Whether some assignment sets every gate in `roots` to true, decided by
    /// a Tseitin encoding of their cones.
    pub fn jointly_satisfiable(
        &self,
        roots: &[GateId],
        choice: &BackendChoice,
    ) -> Result<bool, CompileError> {
        let mut in_cone = vec![false; self.gates.len()];
        for &r in roots {
            in_cone[r as usize] = true;
        }
        let top = roots.iter().copied().max().unwrap_or(0) as usize;
        for id in (0..=top).rev() {
            if in_cone[id] {
                for &c in self.gates[id].children() {
                    in_cone[c as usize] = true;
                }
            }
        }
        let mut cnf = Cnf::new(0);
        let mut lit_of: HashMap<GateId, Lit> = HashMap::new();
        let mut var_lit: HashMap<u32, Lit> = HashMap::new();
        for id in (0..=top).filter(|&id| in_cone[id]) {
            let l = match &self.gates[id] {
                Gate::Const(b) => {
                    let x = Lit::pos(cnf.fresh_var());
                    cnf.add(vec![if *b { x } else { !x }]);
                    x
                }
                Gate::Var(v) => *var_lit
                    .entry(*v)
                    .or_insert_with(|| Lit::pos(cnf.fresh_var())),
                Gate::Not(c) => !lit_of[c],
                Gate::And(cs) | Gate::Or(cs) => {
                    let is_and = matches!(self.gates[id], Gate::And(_));
                    let y = Lit::pos(cnf.fresh_var());
                    let ins: Vec<Lit> = cs.iter().map(|c| lit_of[c]).collect();
                    // AND: y -> c_i, (all c_i) -> y. OR is the dual.
                    let (y, ins): (Lit, Vec<Lit>) = if is_and {
                        (y, ins)
                    } else {
                        (!y, ins.into_iter().map(|l| !l).collect())
                    };
                    for &c in &ins {
                        cnf.add(vec![!y, c]);
                    }
                    let mut big: Vec<Lit> = ins.iter().map(|&c| !c).collect();
                    big.push(y);
                    cnf.add(big);
                    if is_and {
                        y
                    } else {
                        !y
                    }
                }
            };
            lit_of.insert(id as GateId, l);
        }
        for r in roots {
            cnf.add(vec![lit_of[r]]);
        }
        let outcome = choice.instantiate().solve(&cnf)?;
        Ok(matches!(outcome, SatOutcome::Sat(_)))
    }

    /// Bottom-up probability: AND multiplies, OR adds, NOT complements.
    /// Exact only on decomposable, deterministic circuits.
    pub fn probability(&self, probs: &[BigRational]) -> Result<BigRational, CompileError> {
        debug_assert!(self.check_decomposable());
        let mut val: Vec<BigRational> = Vec::with_capacity(self.gates.len());
        for gate in &self.gates {
            let v = match gate {
                Gate::Const(b) => {
                    if *b {
                        BigRational::one()
                    } else {
                        BigRational::zero()
                    }
                }
                Gate::Var(x) => probs
                    .get(*x as usize)
                    .cloned()
                    .ok_or(CompileError::MissingProbability(*x))?,
                Gate::Not(c) => BigRational::one() - &val[*c as usize],
                Gate::And(cs) => cs
                    .iter()
                    .fold(BigRational::one(), |acc, &c| acc * &val[c as usize]),
                Gate::Or(cs) => cs
                    .iter()
                    .fold(BigRational::zero(), |acc, &c| acc + &val[c as usize]),
            };
            val.push(v);
        }
        Ok(val.swap_remove(self.output as usize))
    }

    /// Floating-point variant of [`Circuit::probability`] for timing runs.
    pub fn probability_f64(&self, probs: &[f64]) -> Result<f64, CompileError> {
        let mut val: Vec<f64> = Vec::with_capacity(self.gates.len());
        for gate in &self.gates {
            let v = match gate {
                Gate::Const(b) => f64::from(u8::from(*b)),
                Gate::Var(x) => *probs
                    .get(*x as usize)
                    .ok_or(CompileError::MissingProbability(*x))?,
                Gate::Not(c) => 1.0 - val[*c as usize],
                Gate::And(cs) => cs.iter().map(|&c| val[c as usize]).product(),
                Gate::Or(cs) => cs.iter().map(|&c| val[c as usize]).sum(),
            };
            val.push(v);
        }
        Ok(val[self.output as usize])
    }

    /// Line-oriented dump: `vars <n>`, optional `label <v> <text>` lines,
    /// then `gate <id> <KIND> <args...>` and `output <id>`.
    pub fn dump(&self) -> String {
        let mut s = String::new();
        writeln!(s, "vars {}", self.num_vars).unwrap();
        for (v, l) in self.labels.iter().enumerate() {
            writeln!(s, "label {v} {l}").unwrap();
        }
        for (id, gate) in self.gates.iter().enumerate() {
            let join = |cs: &[GateId]| {
                cs.iter()
                    .map(|c| c.to_string())
                    .collect::<Vec<_>>()
                    .join(" ")
            };
            match gate {
                Gate::Const(b) => writeln!(s, "gate {id} CONST {}", u8::from(*b)),
                Gate::Var(v) => writeln!(s, "gate {id} VAR {v}"),
                Gate::Not(c) => writeln!(s, "gate {id} NOT {c}"),
                Gate::And(cs) => writeln!(s, "gate {id} AND {}", join(cs)),
                Gate::Or(cs) => writeln!(s, "gate {id} OR {}", join(cs)),
            }
            .unwrap();
        }
        writeln!(s, "output {}", self.output).unwrap();
        s
    }

    pub fn parse_dump(text: &str) -> Result<Circuit, CompileError> {
        let bad = |n: usize, msg: &str| CompileError::Malformed(format!("line {}: {msg}", n + 1));
        let mut num_vars = 0usize;
        let mut labels = Vec::new();
        let mut gates = Vec::new();
        let mut output = None;
        for (n, line) in text.lines().enumerate() {
            let toks: Vec<&str> = line.split_whitespace().collect();
            let num = |i: usize| -> Result<u32, CompileError> {
                toks.get(i)
                    .and_then(|t| t.parse().ok())
                    .ok_or_else(|| bad(n, "expected a number"))
            };
            match toks.first().copied() {
                None => {}
                Some("vars") => num_vars = num(1)? as usize,
                Some("label") => {
                    let v = num(1)? as usize;
                    if v != labels.len() {
                        return Err(bad(n, "labels out of order"));
                    }
                    labels.push(toks[2..].join(" "));
                }
                Some("gate") => {
                    if num(1)? as usize != gates.len() {
                        return Err(bad(n, "gate ids must be consecutive"));
                    }
                    let args = (3..toks.len()).map(num).collect::<Result<Vec<_>, _>>()?;
                    let gate = match (toks.get(2).copied(), args.as_slice()) {
                        (Some("CONST"), [b @ (0 | 1)]) => Gate::Const(*b == 1),
                        (Some("VAR"), [v]) => Gate::Var(*v),
                        (Some("NOT"), [c]) => Gate::Not(*c),
                        (Some("AND"), cs) => Gate::And(cs.to_vec()),
                        (Some("OR"), cs) => Gate::Or(cs.to_vec()),
                        _ => return Err(bad(n, "unknown gate")),
                    };
                    gates.push(gate);
                }
                Some("output") => output = Some(num(1)?),
                Some(_) => return Err(bad(n, "unknown directive")),
            }
        }
        let output = output.ok_or_else(|| CompileError::Malformed("no output line".into()))?;
        Circuit::new(gates, output, num_vars, labels)
    }
}
