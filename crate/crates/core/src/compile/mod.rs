//! Tuple-independent databases, H-query lineage, circuits and their
//! compilation.

pub mod circuit;
pub mod db;
pub mod lineage;
pub mod nice;
pub mod obdd;

use thiserror::Error;

use crate::niceness::Niceness;
use crate::sat::SatError;

pub use circuit::{Circuit, CircuitBuilder, DeterminismMode, Gate, GateId, DEFAULT_NODE_BUDGET};
pub use db::{parse_rational, DbError, Fact, TidDatabase};
pub use lineage::{
    brute_force_pqe, eval_h, eval_query, lineage_table, profile, HQuery, LineageTable,
    ORACLE_MAX_FACTS,
};
pub use nice::{compile_box, compile_co_nice, compile_nice};
pub use obdd::{Automaton, Obdd};

#[derive(Debug, Error)]
pub enum CompileError {
    #[error("node budget of {budget} gates exhausted")]
    BudgetExceeded { budget: usize },
    #[error("database has {facts} facts; the oracle handles at most {limit}")]
    TooLarge { facts: usize, limit: usize },
    #[error("{vars} variables; exhaustive enumeration handles at most {limit}")]
    TooManyVariables { vars: usize, limit: usize },
    #[error("no probability for variable {0}")]
    MissingProbability(u32),
    #[error("malformed circuit: {0}")]
    Malformed(String),
    #[error("the decomposition does not verify")]
    InvalidDecomposition,
    #[error("structural check failed: {0}")]
    Structure(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error(transparent)]
    Solver(#[from] SatError),
    #[error(transparent)]
    Db(#[from] DbError),
}

/// Compiles `lin(q, D)` along the route given by the classification of `q`.
pub fn compile_query(
    q: &HQuery,
    niceness: &Niceness,
    db: &TidDatabase,
    budget: usize,
) -> Result<Circuit, CompileError> {
    match niceness {
        Niceness::Nice(d) => compile_nice(q, d, db, budget),
        Niceness::CoNice(d) => compile_co_nice(q, d, db, budget),
        Niceness::Bad => Err(CompileError::Unsupported(
            "BAD function (neither nice nor co-nice)".into(),
        )),
    }
}

/// One measurement of circuit size against database size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingPoint {
    pub domain: usize,
    pub facts: usize,
    pub gates: usize,
    pub edges: usize,
}

/// Compiles `q` over the complete database on each domain size.
pub fn scaling_study(
    q: &HQuery,
    niceness: &Niceness,
    domains: impl IntoIterator<Item = usize>,
    budget: usize,
) -> Result<Vec<ScalingPoint>, CompileError> {
    let half = num_rational::BigRational::new(1.into(), 2.into());
    domains
        .into_iter()
        .map(|n| {
            let db = TidDatabase::complete(q.k(), n, &half);
            let c = compile_query(q, niceness, &db, budget)?;
            Ok(ScalingPoint {
                domain: n,
                facts: db.len(),
                gates: c.size(),
                edges: c.num_edges(),
            })
        })
        .collect()
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(points: &[(f64, f64)]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|(x, y)| *x > 0.0 && *y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    let n = pts.len() as f64;
    if pts.len() < 2 {
        return None;
    }
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_power_laws() {
        let cubic: Vec<(f64, f64)> = (1..6)
            .map(|x| (x as f64, 2.0 * (x as f64).powi(3)))
            .collect();
        assert!((loglog_slope(&cubic).unwrap() - 3.0).abs() < 1e-9);
        assert_eq!(loglog_slope(&[(1.0, 1.0)]), None);
        assert_eq!(loglog_slope(&[(2.0, 1.0), (2.0, 5.0)]), None);
    }
}
