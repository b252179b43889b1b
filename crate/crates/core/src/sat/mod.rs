//! Propositional satisfiability kernel: CNF with named variables, a
//! deterministic solver with assumption literals and unsat-core extraction,
//! the Tseitin transformation, and a brute-force enumeration oracle.
//!
//! The disagreement analysis is purely propositional; there are no theories,
//! quantifiers, or optimization here.

mod solver;
mod tseitin;

pub use solver::Solver;
pub use tseitin::tseitin;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::expr::BoolExpr;

/// Default variable bound for [`brute_force_models`].
pub const BRUTE_FORCE_VAR_BOUND: usize = 20;

/// A variable with a polarity.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Literal {
    pub var: String,
    pub positive: bool,
}

impl Literal {
    pub fn new(var: impl Into<String>, positive: bool) -> Self {
        let var = var.into();
        assert!(!var.is_empty(), "literal variable must be nonempty");
        Literal { var, positive }
    }

    pub fn positive(var: impl Into<String>) -> Self {
        Literal::new(var, true)
    }

    pub fn negative(var: impl Into<String>) -> Self {
        Literal::new(var, false)
    }

    pub fn negated(&self) -> Literal {
        Literal { var: self.var.clone(), positive: !self.positive }
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.positive {
            write!(f, "{}", self.var)
        } else {
            write!(f, "!{}", self.var)
        }
    }
}

/// A CNF formula over a universe of original variables plus auxiliary
/// variables introduced by encoding. Immutable and shareable; solving happens
/// on a [`Solver`] built from it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CnfFormula {
    originals: BTreeSet<String>,
    aux: Vec<String>,
    clauses: Vec<Vec<Literal>>,
}

impl CnfFormula {
    /// Builds a formula over the given original variables. Every literal must
    /// reference a listed variable.
    pub fn new(
        originals: impl IntoIterator<Item = String>,
        clauses: Vec<Vec<Literal>>,
    ) -> Result<Self, SatError> {
        let originals: BTreeSet<String> = originals.into_iter().collect();
        for clause in &clauses {
            for lit in clause {
                if !originals.contains(&lit.var) {
                    return Err(SatError::UnknownVariable(lit.var.clone()));
                }
            }
        }
        Ok(CnfFormula { originals, aux: Vec::new(), clauses })
    }

    pub(crate) fn with_aux(
        originals: BTreeSet<String>,
        aux: Vec<String>,
        clauses: Vec<Vec<Literal>>,
    ) -> Self {
        CnfFormula { originals, aux, clauses }
    }

    pub fn originals(&self) -> &BTreeSet<String> {
        &self.originals
    }

    pub fn aux_vars(&self) -> &[String] {
        &self.aux
    }

    pub fn clauses(&self) -> &[Vec<Literal>] {
        &self.clauses
    }

    /// All variables: originals in sorted order, then auxiliaries in creation
    /// order. This is also the solver's branching order.
    pub fn universe(&self) -> impl Iterator<Item = &str> {
        self.originals
            .iter()
            .map(|s| s.as_str())
            .chain(self.aux.iter().map(|s| s.as_str()))
    }

    /// DIMACS rendering with 1-indexed variables in universe order. Comment
    /// lines carry the variable name mapping.
    pub fn to_dimacs(&self) -> String {
        let names: Vec<&str> = self.universe().collect();
        let index: BTreeMap<&str, usize> =
            names.iter().enumerate().map(|(i, n)| (*n, i + 1)).collect();
        let mut out = String::new();
        for (name, i) in &index {
            out.push_str(&format!("c var {i} = {name}\n"));
        }
        out.push_str(&format!("p cnf {} {}\n", names.len(), self.clauses.len()));
        for clause in &self.clauses {
            for lit in clause {
                let idx = index[lit.var.as_str()] as i64;
                let signed = if lit.positive { idx } else { -idx };
                out.push_str(&format!("{signed} "));
            }
            out.push_str("0\n");
        }
        out
    }
}

/// Result of a solver call: a satisfying model total over the original
/// variables, or an unsat core drawn from the supplied assumptions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SatOutcome {
    Sat(BTreeMap<String, bool>),
    Unsat(Vec<Literal>),
}

impl SatOutcome {
    pub fn is_sat(&self) -> bool {
        matches!(self, SatOutcome::Sat(_))
    }
}

#[derive(Debug, Error)]
pub enum SatError {
    #[error("unknown variable {0}")]
    UnknownVariable(String),
    /// The configured step budget was exceeded. Never a wrong answer; callers
    /// treat it as a pair-level analysis failure.
    #[error("solver resource limit exceeded")]
    ResourceLimit,
    #[error("pop without a matching push")]
    NoScope,
    #[error("expression has {0} variables, above the brute-force bound of {1}")]
    TooManyVariables(usize, usize),
}

/// Exhaustively enumerates the satisfying assignments of an expression, in
/// ascending variable-vector order. Bound defaults to
/// [`BRUTE_FORCE_VAR_BOUND`] variables.
pub fn brute_force_models(expr: &BoolExpr) -> Result<Vec<BTreeMap<String, bool>>, SatError> {
    brute_force_models_with_bound(expr, BRUTE_FORCE_VAR_BOUND)
}

pub fn brute_force_models_with_bound(
    expr: &BoolExpr,
    bound: usize,
) -> Result<Vec<BTreeMap<String, bool>>, SatError> {
    let vars: Vec<String> = expr.vars().into_iter().collect();
    if vars.len() > bound {
        return Err(SatError::TooManyVariables(vars.len(), bound));
    }
    let mut models = Vec::new();
    for mask in 0u64..(1u64 << vars.len()) {
        let assignment: BTreeMap<String, bool> = vars
            .iter()
            .enumerate()
            .map(|(i, v)| (v.clone(), mask >> i & 1 == 1))
            .collect();
        if expr.eval(&assignment).expect("assignment is total") {
            models.push(assignment);
        }
    }
    Ok(models)
}
