//! Equivalence checking of two compiled root functions and enumeration of an
//! irredundant prime-implicant cover of their disagreement function
//! `f_A XOR f_B`.
//!
//! The enumeration is SAT-iterative over two solver instances:
//!
//! 1. Find a disagreement no earlier implicant covers by solving the
//!    disagreement function under the accumulated blocking clauses.
//! 2. Shrink the returned minterm to an implicant: solve the negated
//!    disagreement function with the minterm literals as assumptions and take
//!    the unsat core.
//! 3. Make the implicant prime by greedy literal drops in ascending variable
//!    order, re-testing each drop against the negated function.
//! 4. Block the cube and repeat.
//!
//! Each round emits one prime implicant and removes at least one previously
//! uncovered minterm, so the loop runs at most once per disagreement minterm.
//! The cover is irredundant by construction but not of minimum cardinality —
//! the drop order is greedy, not exhaustive.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::BoolExpr;
use crate::sat::{tseitin, Literal, SatError, SatOutcome, Solver};

/// A minimal partial assignment under which every completion makes the two
/// root functions disagree. Empty only when the disagreement is a tautology.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PrimeImplicant {
    pub fixed: BTreeMap<String, bool>,
}

impl PrimeImplicant {
    pub fn len(&self) -> usize {
        self.fixed.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fixed.is_empty()
    }
}

/// True iff the total assignment extends the implicant's fixed part.
pub fn covers(pi: &PrimeImplicant, assignment: &BTreeMap<String, bool>) -> bool {
    pi.fixed.iter().all(|(var, val)| assignment.get(var) == Some(val))
}

/// An enumerated cover of the disagreement function, in emission order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeCaseCover {
    pub pis: Vec<PrimeImplicant>,
    /// Every disagreement minterm is covered.
    pub complete: bool,
    /// Enumeration stopped early at the cap; excluded from completeness
    /// statistics.
    pub cap_hit: bool,
}

impl EdgeCaseCover {
    pub fn len(&self) -> usize {
        self.pis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pis.is_empty()
    }
}

#[derive(Debug, Error)]
pub enum EdgeCaseError {
    #[error(transparent)]
    Sat(#[from] SatError),
    #[error("enumeration internal error: {0}")]
    Internal(String),
}

/// Step budget applied to each underlying solver call. `None` is unlimited.
#[derive(Debug, Clone, Copy, Default)]
pub struct SolverLimits {
    pub max_steps: Option<u64>,
}

/// Default cap on the number of prime implicants per pair.
pub const DEFAULT_PI_CAP: usize = 100_000;

/// True iff no assignment over the shared interface distinguishes the two
/// functions.
pub fn equivalent(
    fa: &BoolExpr,
    fb: &BoolExpr,
    limits: SolverLimits,
) -> Result<bool, EdgeCaseError> {
    let phi = BoolExpr::xor(fa.clone(), fb.clone());
    let mut solver = Solver::new(&tseitin(&phi, true));
    solver.set_step_limit(limits.max_steps);
    Ok(!solver.solve(&[])?.is_sat())
}

/// Enumerates a non-redundant prime-implicant cover of `fa XOR fb`.
/// Equivalent inputs yield an empty, complete cover.
pub fn enumerate_cover(
    fa: &BoolExpr,
    fb: &BoolExpr,
    cap: Option<usize>,
    limits: SolverLimits,
) -> Result<EdgeCaseCover, EdgeCaseError> {
    let phi = BoolExpr::xor(fa.clone(), fb.clone());
    let variables: Vec<String> = phi.vars().into_iter().collect();

    let mut phi_solver = Solver::new(&tseitin(&phi, true));
    let mut nphi_solver = Solver::new(&tseitin(&phi, false));
    phi_solver.set_step_limit(limits.max_steps);
    nphi_solver.set_step_limit(limits.max_steps);

    let mut pis: Vec<PrimeImplicant> = Vec::new();
    // The loop must terminate within one iteration per minterm; anything past
    // the full assignment count is a bug, not progress.
    let iteration_guard = 1u64
        .checked_shl(variables.len().min(63) as u32)
        .unwrap_or(u64::MAX)
        .saturating_add(1);
    let mut iterations = 0u64;

    loop {
        let model = match phi_solver.solve(&[])? {
            SatOutcome::Unsat(_) => {
                return Ok(EdgeCaseCover { pis, complete: true, cap_hit: false });
            }
            SatOutcome::Sat(model) => model,
        };
        iterations += 1;
        if iterations > iteration_guard {
            return Err(EdgeCaseError::Internal(
                "enumeration exceeded the minterm bound".to_string(),
            ));
        }

        // Step 2: the unsat core of the negated function under the minterm is
        // an implicant of the disagreement function.
        let minterm: Vec<Literal> = variables
            .iter()
            .map(|v| Literal::new(v.clone(), model[v]))
            .collect();
        let core = match nphi_solver.solve(&minterm)? {
            SatOutcome::Unsat(core) => core,
            SatOutcome::Sat(_) => {
                return Err(EdgeCaseError::Internal(
                    "minterm of the disagreement satisfied its negation".to_string(),
                ));
            }
        };

        // Step 3: greedy literal drop in ascending variable order.
        let mut cube: BTreeMap<String, bool> =
            core.into_iter().map(|l| (l.var, l.positive)).collect();
        for var in cube.keys().cloned().collect::<Vec<_>>() {
            let value = cube.remove(&var).expect("var is in the cube");
            let reduced: Vec<Literal> = cube
                .iter()
                .map(|(v, val)| Literal::new(v.clone(), *val))
                .collect();
            if !matches!(nphi_solver.solve(&reduced)?, SatOutcome::Unsat(_)) {
                cube.insert(var, value);
            }
        }

        // Step 4: block the cube and iterate.
        let blocking: Vec<Literal> = cube
            .iter()
            .map(|(v, val)| Literal::new(v.clone(), !val))
            .collect();
        phi_solver.add_clause(&blocking)?;
        pis.push(PrimeImplicant { fixed: cube });

        if let Some(cap) = cap {
            if pis.len() >= cap {
                return Ok(EdgeCaseCover { pis, complete: false, cap_hit: true });
            }
        }
    }
}

/// Cover export row.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoverExport {
    pub provision_id: String,
    pub pair_a: String,
    pub pair_b: String,
    pub complete: bool,
    pub cap_hit: bool,
    pub count: usize,
    pub pis: Vec<PrimeImplicant>,
}

impl CoverExport {
    pub fn new(provision_id: &str, pair_a: &str, pair_b: &str, cover: &EdgeCaseCover) -> Self {
        CoverExport {
            provision_id: provision_id.to_string(),
            pair_a: pair_a.to_string(),
            pair_b: pair_b.to_string(),
            complete: cover.complete,
            cap_hit: cover.cap_hit,
            count: cover.pis.len(),
            pis: cover.pis.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Operator;
    use crate::sat::brute_force_models;
    use proptest::prelude::*;
    use std::collections::BTreeSet;

    fn v(name: &str) -> BoolExpr {
        BoolExpr::var(name)
    }

    fn pi(fixed: &[(&str, bool)]) -> PrimeImplicant {
        PrimeImplicant {
            fixed: fixed.iter().map(|(k, b)| (k.to_string(), *b)).collect(),
        }
    }

    #[test]
    fn identical_functions_are_equivalent() {
        let a = BoolExpr::op(Operator::And, vec![v("x"), v("y")]);
        assert!(equivalent(&a, &a.clone(), SolverLimits::default()).unwrap());
    }

    #[test]
    fn and_vs_or_is_not_equivalent() {
        let a = BoolExpr::op(Operator::And, vec![v("x"), v("y")]);
        let b = BoolExpr::op(Operator::Or, vec![v("x"), v("y")]);
        assert!(!equivalent(&a, &b, SolverLimits::default()).unwrap());
    }

    #[test]
    fn de_morgan_forms_are_equivalent() {
        // NAND(a, b) == OR(NOT a, NOT b), with NOT spelled as unary NAND.
        let lhs = BoolExpr::op(Operator::Nand, vec![v("a"), v("b")]);
        let rhs = BoolExpr::op(
            Operator::Or,
            vec![
                BoolExpr::op(Operator::Nand, vec![v("a"), v("a")]),
                BoolExpr::op(Operator::Nand, vec![v("b"), v("b")]),
            ],
        );
        assert!(equivalent(&lhs, &rhs, SolverLimits::default()).unwrap());
    }

    #[test]
    fn and_vs_or_cover_is_the_two_single_variable_flips() {
        let a = BoolExpr::op(Operator::And, vec![v("x"), v("y")]);
        let b = BoolExpr::op(Operator::Or, vec![v("x"), v("y")]);
        let cover = enumerate_cover(&a, &b, None, SolverLimits::default()).unwrap();
        assert!(cover.complete && !cover.cap_hit);
        let got: BTreeSet<_> = cover.pis.iter().cloned().collect();
        let expected: BTreeSet<_> =
            [pi(&[("x", true), ("y", false)]), pi(&[("x", false), ("y", true)])]
                .into_iter()
                .collect();
        assert_eq!(got, expected);
    }

    #[test]
    fn nand_vs_nor_cover_is_the_exactly_one_pattern() {
        let a = BoolExpr::op(Operator::Nand, vec![v("a"), v("b")]);
        let b = BoolExpr::op(Operator::Nor, vec![v("a"), v("b")]);
        let cover = enumerate_cover(&a, &b, None, SolverLimits::default()).unwrap();
        let got: BTreeSet<_> = cover.pis.iter().cloned().collect();
        let expected: BTreeSet<_> =
            [pi(&[("a", true), ("b", false)]), pi(&[("a", false), ("b", true)])]
                .into_iter()
                .collect();
        assert_eq!(got, expected);
    }

    #[test]
    fn equal_inputs_give_empty_complete_cover() {
        let a = BoolExpr::op(Operator::Or, vec![v("x"), v("y")]);
        let cover = enumerate_cover(&a, &a.clone(), None, SolverLimits::default()).unwrap();
        assert!(cover.is_empty());
        assert!(cover.complete);
        assert!(!cover.cap_hit);
    }

    #[test]
    fn tautological_disagreement_yields_single_empty_implicant() {
        // x vs NOT x disagree everywhere.
        let a = v("x");
        let b = BoolExpr::op(Operator::Nand, vec![v("x")]);
        let cover = enumerate_cover(&a, &b, None, SolverLimits::default()).unwrap();
        assert_eq!(cover.pis, vec![pi(&[])]);
        assert!(cover.complete);
    }

    #[test]
    fn cap_stops_enumeration_early() {
        let a = BoolExpr::op(Operator::And, vec![v("x"), v("y")]);
        let b = BoolExpr::op(Operator::Or, vec![v("x"), v("y")]);
        let cover = enumerate_cover(&a, &b, Some(1), SolverLimits::default()).unwrap();
        assert_eq!(cover.len(), 1);
        assert!(cover.cap_hit);
        assert!(!cover.complete);
    }

    #[test]
    fn covers_checks_extension() {
        let p = pi(&[("x", true)]);
        let ext: BTreeMap<String, bool> =
            [("x".to_string(), true), ("y".to_string(), false)].into_iter().collect();
        let non: BTreeMap<String, bool> =
            [("x".to_string(), false), ("y".to_string(), true)].into_iter().collect();
        assert!(covers(&p, &ext));
        assert!(!covers(&p, &non));
    }

    #[test]
    fn resource_limit_propagates() {
        let a = BoolExpr::op(Operator::And, vec![v("x"), v("y")]);
        let b = BoolExpr::op(Operator::Or, vec![v("x"), v("y")]);
        let limits = SolverLimits { max_steps: Some(1) };
        assert!(matches!(
            enumerate_cover(&a, &b, None, limits),
            Err(EdgeCaseError::Sat(SatError::ResourceLimit))
        ));
    }

    #[test]
    fn enumeration_is_deterministic() {
        let a = BoolExpr::op(
            Operator::Or,
            vec![
                BoolExpr::op(Operator::And, vec![v("p"), v("q")]),
                BoolExpr::op(Operator::Nand, vec![v("r"), v("s")]),
            ],
        );
        let b = BoolExpr::op(
            Operator::And,
            vec![
                BoolExpr::op(Operator::Or, vec![v("p"), v("q")]),
                BoolExpr::op(Operator::Nor, vec![v("r"), v("s")]),
            ],
        );
        let c1 = enumerate_cover(&a, &b, None, SolverLimits::default()).unwrap();
        let c2 = enumerate_cover(&a, &b, None, SolverLimits::default()).unwrap();
        assert_eq!(c1, c2);
    }

    /// Brute-force XOR minterms as bit-indexed assignments over the union of
    /// variables, for the oracle checks below.
    fn xor_minterms(fa: &BoolExpr, fb: &BoolExpr) -> (Vec<String>, BTreeSet<u32>) {
        let phi = BoolExpr::xor(fa.clone(), fb.clone());
        let vars: Vec<String> = phi.vars().into_iter().collect();
        let models = brute_force_models(&phi).unwrap();
        let indices = models
            .iter()
            .map(|m| {
                vars.iter()
                    .enumerate()
                    .fold(0u32, |acc, (i, v)| acc | (u32::from(m[v]) << i))
            })
            .collect();
        (vars, indices)
    }

    fn cube_extensions(vars: &[String], fixed: &BTreeMap<String, bool>) -> Vec<u32> {
        let free: Vec<usize> = vars
            .iter()
            .enumerate()
            .filter(|(_, v)| !fixed.contains_key(*v))
            .map(|(i, _)| i)
            .collect();
        let base: u32 = vars
            .iter()
            .enumerate()
            .filter(|(_, v)| fixed.get(*v) == Some(&true))
            .fold(0, |acc, (i, _)| acc | (1 << i));
        (0u32..(1 << free.len()))
            .map(|mask| {
                free.iter()
                    .enumerate()
                    .fold(base, |acc, (k, i)| acc | ((mask >> k & 1) << i))
            })
            .collect()
    }

    fn check_cover_against_brute_force(fa: &BoolExpr, fb: &BoolExpr) {
        let cover = enumerate_cover(fa, fb, None, SolverLimits::default()).unwrap();
        assert!(cover.complete);
        let (vars, minterms) = xor_minterms(fa, fb);

        // Termination bound: one implicant per iteration, at most one
        // iteration per minterm.
        assert!(cover.len() as u64 <= minterms.len().max(1) as u64);

        let mut covered: BTreeSet<u32> = BTreeSet::new();
        for pi in &cover.pis {
            let extensions = cube_extensions(&vars, &pi.fixed);
            // Implicant: every completion is a disagreement minterm.
            for e in &extensions {
                assert!(minterms.contains(e), "non-implicant cube {:?}", pi.fixed);
            }
            // Prime: dropping any literal admits an agreeing completion.
            for var in pi.fixed.keys() {
                let mut reduced = pi.fixed.clone();
                reduced.remove(var);
                let wider = cube_extensions(&vars, &reduced);
                assert!(
                    wider.iter().any(|e| !minterms.contains(e)),
                    "cube {:?} stays an implicant without {var}",
                    pi.fixed
                );
            }
            covered.extend(extensions);
        }
        // The covered set is exactly the disagreement set.
        assert_eq!(covered, minterms);
    }

    #[test]
    fn cover_matches_brute_force_on_fixed_pairs() {
        let pairs = [
            (
                BoolExpr::op(Operator::And, vec![v("x"), v("y")]),
                BoolExpr::op(Operator::Or, vec![v("x"), v("y")]),
            ),
            (
                BoolExpr::op(Operator::Nand, vec![v("a"), v("b")]),
                BoolExpr::op(Operator::Nor, vec![v("a"), v("b")]),
            ),
            (
                BoolExpr::op(
                    Operator::And,
                    vec![v("c"), BoolExpr::op(Operator::Nand, vec![v("a"), v("b")])],
                ),
                BoolExpr::op(
                    Operator::And,
                    vec![v("c"), BoolExpr::op(Operator::Nor, vec![v("a"), v("b")])],
                ),
            ),
        ];
        for (fa, fb) in &pairs {
            check_cover_against_brute_force(fa, fb);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn cover_properties_hold_on_random_pairs(
            fa in crate::expr::tests::arb_expr(5, 3),
            fb in crate::expr::tests::arb_expr(5, 3),
        ) {
            check_cover_against_brute_force(&fa, &fb);
        }

        #[test]
        fn every_minterm_is_covered_by_some_pi(
            fa in crate::expr::tests::arb_expr(4, 3),
            fb in crate::expr::tests::arb_expr(4, 3),
        ) {
            let cover = enumerate_cover(&fa, &fb, None, SolverLimits::default()).unwrap();
            let phi = BoolExpr::xor(fa.clone(), fb.clone());
            for minterm in brute_force_models(&phi).unwrap() {
                prop_assert!(cover.pis.iter().any(|p| covers(p, &minterm)));
            }
        }
    }
}
