//! Nice functions: partitions of the satisfying valuations into `k+1` boxes
//! where box `l` is closed under toggling variable `l`.
//!
//! The search is encoded as the CNF over variables `x[ν][l]` ("ν goes into
//! box l") and handed to a [`SatBackend`]. Every satisfying model is turned
//! into a [`NiceDecomposition`] and re-verified before it is returned.

use thiserror::Error;

use crate::boolfun::{BoolFn, VarSet};
use crate::sat::{BackendChoice, Cnf, Lit, SatBackend, SatError, SatOutcome};

#[derive(Debug, Error)]
pub enum NicenessError {
    #[error(transparent)]
    Solver(#[from] SatError),
    #[error("decomposition invariant violated: {0}")]
    InvalidDecomposition(String),
    #[error("brute-force niceness limited to k <= 3, got k={0}")]
    TooLarge(u8),
}

/// The CNF `nice(φ)` with its variable numbering.
#[derive(Debug, Clone)]
pub struct NiceInstance {
    k: u8,
    source: BoolFn,
    sat: Vec<VarSet>,
    /// Position of each valuation in `sat`, indexed by valuation bits.
    slot: Vec<Option<u32>>,
    cnf: Cnf,
}

impl NiceInstance {
    pub fn build(f: &BoolFn) -> Self {
        let k = f.k();
        let width = k as usize + 1;
        let sat = f.sat_valuations();
        let mut slot = vec![None; f.table_len()];
        for (i, nu) in sat.iter().enumerate() {
            slot[nu.index()] = Some(i as u32);
        }
        let var = |i: usize, l: usize| i * width + l;
        let mut cnf = Cnf::new(sat.len() * width);
        for i in 0..sat.len() {
            cnf.add((0..width).map(|l| Lit::pos(var(i, l))).collect());
        }
        for i in 0..sat.len() {
            for l in 0..width {
                for l2 in l + 1..width {
                    cnf.add(vec![Lit::neg(var(i, l)), Lit::neg(var(i, l2))]);
                }
            }
        }
        for (i, nu) in sat.iter().enumerate() {
            for l in 0..width {
                match slot[nu.toggled(l as u8).index()] {
                    None => cnf.add(vec![Lit::neg(var(i, l))]),
                    Some(j) => cnf.add(vec![Lit::neg(var(i, l)), Lit::pos(var(j as usize, l))]),
                }
            }
        }
        NiceInstance {
            k,
            source: f.clone(),
            sat,
            slot,
            cnf,
        }
    }

    pub fn k(&self) -> u8 {
        self.k
    }

    pub fn cnf(&self) -> &Cnf {
        &self.cnf
    }

    pub fn num_vars(&self) -> usize {
        self.cnf.num_vars
    }

    pub fn num_clauses(&self) -> usize {
        self.cnf.clauses.len()
    }

    pub fn sat(&self) -> &[VarSet] {
        &self.sat
    }

    /// SAT variable for "ν is placed in box l", if ν is satisfying.
    pub fn var_of(&self, nu: VarSet, l: u8) -> Option<usize> {
        self.slot
            .get(nu.index())
            .copied()
            .flatten()
            .map(|i| i as usize * (self.k as usize + 1) + l as usize)
    }

    pub fn solve(&self, backend: &mut dyn SatBackend) -> Result<SatOutcome, SatError> {
        backend.solve(&self.cnf)
    }

    /// DIMACS text with a comment per variable naming its `(ν, l)` pair.
    pub fn to_dimacs(&self) -> String {
        let width = self.k as usize + 1;
        let mut comments = vec![format!("nice instance for {}", self.source)];
        for (i, nu) in self.sat.iter().enumerate() {
            for l in 0..width {
                comments.push(format!("var {} = nu {} box {}", i * width + l + 1, nu, l));
            }
        }
        self.cnf.to_dimacs(&comments)
    }

    /// Reads the boxes off a model and checks them.
    pub fn extract(&self, model: &[bool]) -> Result<NiceDecomposition, NicenessError> {
        let width = self.k as usize + 1;
        if model.len() < self.num_vars() {
            return Err(NicenessError::InvalidDecomposition(format!(
                "model has {} values for {} variables",
                model.len(),
                self.num_vars()
            )));
        }
        let mut boxes = vec![Vec::new(); width];
        for (i, &nu) in self.sat.iter().enumerate() {
            for (l, b) in boxes.iter_mut().enumerate() {
                if model[i * width + l] {
                    b.push(nu);
                }
            }
        }
        let d = NiceDecomposition {
            source: self.source.clone(),
            boxes,
        };
        d.check(&self.source)?;
        Ok(d)
    }
}

/// Boxes partitioning `sat(φ)`; box `l` is closed under toggling `l`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NiceDecomposition {
    pub source: BoolFn,
    /// `boxes[l]` in ascending valuation order.
    pub boxes: Vec<Vec<VarSet>>,
}

impl NiceDecomposition {
    /// The single-box decomposition of a function that ignores `l`.
    pub fn trivial(f: &BoolFn, l: u8) -> Option<NiceDecomposition> {
        if f.depends_on(l) {
            return None;
        }
        let mut boxes = vec![Vec::new(); f.num_vars()];
        boxes[l as usize] = f.sat_valuations();
        Some(NiceDecomposition {
            source: f.clone(),
            boxes,
        })
    }

    /// Boxes given by their characteristic functions, in box order.
    pub fn from_box_fns(source: &BoolFn, boxes: &[BoolFn]) -> NiceDecomposition {
        NiceDecomposition {
            source: source.clone(),
            boxes: boxes.iter().map(BoolFn::sat_valuations).collect(),
        }
    }

    /// Characteristic function of box `l`.
    pub fn box_fn(&self, l: u8) -> BoolFn {
        let members = &self.boxes[l as usize];
        BoolFn::from_fn(self.source.k(), |nu| members.binary_search(&nu).is_ok())
            .expect("bound of the source function")
    }

    pub fn nonempty_boxes(&self) -> impl Iterator<Item = u8> + '_ {
        self.boxes
            .iter()
            .enumerate()
            .filter(|(_, b)| !b.is_empty())
            .map(|(l, _)| l as u8)
    }

    fn check(&self, f: &BoolFn) -> Result<(), NicenessError> {
        let bad = |msg: String| Err(NicenessError::InvalidDecomposition(msg));
        if self.source != *f {
            return bad("decomposition belongs to another function".into());
        }
        if self.boxes.len() != f.num_vars() {
            return bad(format!(
                "{} boxes for {} variables",
                self.boxes.len(),
                f.num_vars()
            ));
        }
        let mut owner: Vec<Option<usize>> = vec![None; f.table_len()];
        for (l, b) in self.boxes.iter().enumerate() {
            if b.windows(2).any(|w| w[0] >= w[1]) {
                return bad(format!("box {l} is not strictly sorted"));
            }
            for &nu in b {
                if !nu.is_subset(f.all_vars()) || !f.at(nu) {
                    return bad(format!("box {l} holds non-satisfying valuation {nu}"));
                }
                if let Some(prev) = owner[nu.index()] {
                    return bad(format!("valuation {nu} is in boxes {prev} and {l}"));
                }
                owner[nu.index()] = Some(l);
            }
        }
        for nu in f.sat_valuations() {
            if owner[nu.index()].is_none() {
                return bad(format!("valuation {nu} is in no box"));
            }
        }
        for (l, b) in self.boxes.iter().enumerate() {
            for &nu in b {
                if owner[nu.toggled(l as u8).index()] != Some(l) {
                    return bad(format!("box {l} is not symmetric around {l} at {nu}"));
                }
            }
        }
        Ok(())
    }
}

/// Independent check that `d` is a nice decomposition of `f`.
pub fn verify_decomposition(f: &BoolFn, d: &NiceDecomposition) -> bool {
    d.check(f).is_ok()
}

/// Decides niceness with the given backend; a SAT answer comes with a
/// verified decomposition.
pub fn find_decomposition(
    f: &BoolFn,
    backend: &mut dyn SatBackend,
) -> Result<Option<NiceDecomposition>, NicenessError> {
    let inst = NiceInstance::build(f);
    match inst.solve(backend)? {
        SatOutcome::Sat(model) => Ok(Some(inst.extract(&model)?)),
        SatOutcome::Unsat => Ok(None),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Niceness {
    /// The decomposition is of the function itself.
    Nice(NiceDecomposition),
    /// The decomposition is of the negated function.
    CoNice(NiceDecomposition),
    Bad,
}

impl Niceness {
    pub fn tag(&self) -> &'static str {
        match self {
            Niceness::Nice(_) => "N",
            Niceness::CoNice(_) => "coN",
            Niceness::Bad => "BAD",
        }
    }
}

/// Tries `nice(φ)`, then `nice(¬φ)`; each solve uses a fresh backend.
pub fn classify(f: &BoolFn, choice: &BackendChoice) -> Result<Niceness, NicenessError> {
    if let Some(d) = find_decomposition(f, choice.instantiate().as_mut())? {
        return Ok(Niceness::Nice(d));
    }
    if let Some(d) = find_decomposition(&f.negate(), choice.instantiate().as_mut())? {
        return Ok(Niceness::CoNice(d));
    }
    Ok(Niceness::Bad)
}

/// Exhaustive search for a nice decomposition, for `k <= 3`. Each step puts
/// the smallest unplaced valuation ν and its partner `tgl(ν, l)` into box l.
pub fn brute_force_nice(f: &BoolFn) -> Result<bool, NicenessError> {
    if f.k() > 3 {
        return Err(NicenessError::TooLarge(f.k()));
    }
    let sat: Vec<bool> = (0..f.table_len()).map(|m| f.bit(m)).collect();
    let mut placed = vec![false; f.table_len()];
    Ok(place(f.k(), &sat, &mut placed))
}

fn place(k: u8, sat: &[bool], placed: &mut [bool]) -> bool {
    let Some(nu) = (0..sat.len()).find(|&m| sat[m] && !placed[m]) else {
        return true;
    };
    for l in 0..=k {
        let partner = nu ^ (1 << l);
        if sat[partner] && !placed[partner] {
            placed[nu] = true;
            placed[partner] = true;
            if place(k, sat, placed) {
                return true;
            }
            placed[nu] = false;
            placed[partner] = false;
        }
    }
    false
}
