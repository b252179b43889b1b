//! A small DPLL solver with two-watched-literal propagation, assumption
//! literals with unsat-core extraction, incremental clause addition, and
//! scoped push/pop of temporary clauses.
//!
//! Branching is fully deterministic: variables are decided in universe order
//! (originals sorted lexicographically, then auxiliaries in creation order)
//! with the false polarity tried first. Cover enumeration built on top is
//! therefore reproducible run-to-run.
//!
//! Cores are extracted by final-conflict analysis over the implication trail
//! when the conflict arises while the assumptions are being enqueued; a
//! refutation found by exhausting the search space reports the full
//! assumption set. Cores are not minimized here — the cover enumerator's
//! greedy literal drop does that downstream.

use std::collections::BTreeMap;

use super::{CnfFormula, Literal, SatError, SatOutcome};

/// Internal literal: variable index shifted left, low bit set for negative.
type ILit = u32;

fn mk_lit(var: usize, positive: bool) -> ILit {
    ((var as u32) << 1) | u32::from(!positive)
}

fn var_of(lit: ILit) -> usize {
    (lit >> 1) as usize
}

fn is_positive(lit: ILit) -> bool {
    lit & 1 == 0
}

struct Scope {
    n_clauses: usize,
    n_units: usize,
    n_empty: usize,
}

/// A solver instance over one formula. Single-threaded and not shareable;
/// run one instance per concurrent analysis.
pub struct Solver {
    names: Vec<String>,
    index: BTreeMap<String, usize>,
    n_original: usize,

    clauses: Vec<Vec<ILit>>,
    watches: Vec<Vec<u32>>,
    units: Vec<u32>,
    n_empty: usize,
    scopes: Vec<Scope>,
    step_limit: Option<u64>,

    // Per-solve assignment state.
    value: Vec<i8>,
    reason: Vec<Option<u32>>,
    level: Vec<u32>,
    trail: Vec<ILit>,
    trail_lim: Vec<usize>,
    qhead: usize,
}

impl Solver {
    pub fn new(formula: &CnfFormula) -> Self {
        let names: Vec<String> = formula.universe().map(|s| s.to_string()).collect();
        let index: BTreeMap<String, usize> =
            names.iter().enumerate().map(|(i, n)| (n.clone(), i)).collect();
        let n = names.len();
        let mut solver = Solver {
            names,
            index,
            n_original: formula.originals().len(),
            clauses: Vec::new(),
            watches: vec![Vec::new(); 2 * n],
            units: Vec::new(),
            n_empty: 0,
            scopes: Vec::new(),
            step_limit: None,
            value: vec![0; n],
            reason: vec![None; n],
            level: vec![0; n],
            trail: Vec::new(),
            trail_lim: Vec::new(),
            qhead: 0,
        };
        for clause in formula.clauses() {
            solver.add_clause(clause).expect("formula literals are in its universe");
        }
        solver
    }

    /// Step budget across one `solve` call; `None` is unlimited.
    pub fn set_step_limit(&mut self, limit: Option<u64>) {
        self.step_limit = limit;
    }

    /// Adds a clause permanently (or into the current scope if one is open).
    /// The empty clause is accepted and makes the formula unsatisfiable.
    pub fn add_clause(&mut self, clause: &[Literal]) -> Result<(), SatError> {
        let mut lits = Vec::with_capacity(clause.len());
        for l in clause {
            let idx = self
                .index
                .get(&l.var)
                .copied()
                .ok_or_else(|| SatError::UnknownVariable(l.var.clone()))?;
            lits.push(mk_lit(idx, l.positive));
        }
        let ci = self.clauses.len() as u32;
        match lits.len() {
            0 => self.n_empty += 1,
            1 => self.units.push(ci),
            _ => {
                self.watches[lits[0] as usize].push(ci);
                self.watches[lits[1] as usize].push(ci);
            }
        }
        self.clauses.push(lits);
        Ok(())
    }

    /// Opens a scope; clauses added until the matching `pop` are temporary.
    pub fn push(&mut self) {
        self.scopes.push(Scope {
            n_clauses: self.clauses.len(),
            n_units: self.units.len(),
            n_empty: self.n_empty,
        });
    }

    /// Discards all clauses added since the matching `push`.
    pub fn pop(&mut self) -> Result<(), SatError> {
        let scope = self.scopes.pop().ok_or(SatError::NoScope)?;
        for ci in scope.n_clauses..self.clauses.len() {
            let clause = &self.clauses[ci];
            if clause.len() >= 2 {
                let ci = ci as u32;
                for &w in &[clause[0], clause[1]] {
                    self.watches[w as usize].retain(|&c| c != ci);
                }
            }
        }
        self.clauses.truncate(scope.n_clauses);
        self.units.truncate(scope.n_units);
        self.n_empty = scope.n_empty;
        Ok(())
    }

    fn lit_value(&self, lit: ILit) -> Option<bool> {
        match self.value[var_of(lit)] {
            0 => None,
            v => Some((v > 0) == is_positive(lit)),
        }
    }

    fn enqueue(&mut self, lit: ILit, reason: Option<u32>) {
        let v = var_of(lit);
        debug_assert_eq!(self.value[v], 0);
        self.value[v] = if is_positive(lit) { 1 } else { -1 };
        self.level[v] = self.trail_lim.len() as u32;
        self.reason[v] = reason;
        self.trail.push(lit);
    }

    fn new_level(&mut self) {
        self.trail_lim.push(self.trail.len());
    }

    fn undo_top_level(&mut self) {
        let mark = self.trail_lim.pop().expect("a level to undo");
        while self.trail.len() > mark {
            let lit = self.trail.pop().unwrap();
            let v = var_of(lit);
            self.value[v] = 0;
            self.reason[v] = None;
        }
        self.qhead = self.trail.len();
    }

    fn reset(&mut self) {
        self.trail.clear();
        self.trail_lim.clear();
        self.qhead = 0;
        for v in 0..self.value.len() {
            self.value[v] = 0;
            self.reason[v] = None;
            self.level[v] = 0;
        }
    }

    /// Unit propagation; returns the conflicting clause index if any.
    fn propagate(&mut self, steps: &mut u64) -> Result<Option<u32>, SatError> {
        while self.qhead < self.trail.len() {
            let lit = self.trail[self.qhead];
            self.qhead += 1;
            *steps += 1;
            if let Some(max) = self.step_limit {
                if *steps > max {
                    return Err(SatError::ResourceLimit);
                }
            }
            let false_lit = lit ^ 1;
            let mut ws = std::mem::take(&mut self.watches[false_lit as usize]);
            let mut i = 0;
            'clauses: while i < ws.len() {
                let ci = ws[i] as usize;
                if self.clauses[ci][0] == false_lit {
                    self.clauses[ci].swap(0, 1);
                }
                debug_assert_eq!(self.clauses[ci][1], false_lit);
                let other = self.clauses[ci][0];
                if self.lit_value(other) == Some(true) {
                    i += 1;
                    continue;
                }
                for k in 2..self.clauses[ci].len() {
                    let candidate = self.clauses[ci][k];
                    if self.lit_value(candidate) != Some(false) {
                        self.clauses[ci].swap(1, k);
                        self.watches[candidate as usize].push(ci as u32);
                        ws.swap_remove(i);
                        continue 'clauses;
                    }
                }
                match self.lit_value(other) {
                    None => {
                        self.enqueue(other, Some(ci as u32));
                        i += 1;
                    }
                    Some(false) => {
                        self.watches[false_lit as usize] = ws;
                        return Ok(Some(ci as u32));
                    }
                    Some(true) => unreachable!(),
                }
            }
            self.watches[false_lit as usize] = ws;
        }
        Ok(None)
    }

    /// Regression over the implication trail from the given seed literals
    /// down to assumption decisions; returns the involved assumption
    /// literals (as internal literals).
    fn analyze_final(&self, seeds: impl IntoIterator<Item = ILit>) -> Vec<ILit> {
        let mut seen = vec![false; self.names.len()];
        for lit in seeds {
            if self.level[var_of(lit)] > 0 {
                seen[var_of(lit)] = true;
            }
        }
        let mut core = Vec::new();
        for &lit in self.trail.iter().rev() {
            let v = var_of(lit);
            if !seen[v] || self.level[v] == 0 {
                continue;
            }
            match self.reason[v] {
                None => core.push(lit),
                Some(ci) => {
                    for &l in &self.clauses[ci as usize] {
                        if var_of(l) != v && self.level[var_of(l)] > 0 {
                            seen[var_of(l)] = true;
                        }
                    }
                }
            }
        }
        core
    }

    fn core_to_literals(&self, core_lits: Vec<ILit>, assumptions: &[Literal]) -> Vec<Literal> {
        let mut out = Vec::new();
        for a in assumptions {
            let ilit = mk_lit(self.index[&a.var], a.positive);
            if core_lits.contains(&ilit) && !out.contains(a) {
                out.push(a.clone());
            }
        }
        out
    }

    fn model(&self) -> BTreeMap<String, bool> {
        (0..self.n_original)
            .map(|v| {
                debug_assert_ne!(self.value[v], 0);
                (self.names[v].clone(), self.value[v] > 0)
            })
            .collect()
    }

    fn pick_branch_var(&self) -> Option<usize> {
        (0..self.value.len()).find(|&v| self.value[v] == 0)
    }

    /// Decides satisfiability under the given assumptions.
    ///
    /// SAT returns a model total over the original variables; UNSAT returns a
    /// core: a subset of the assumptions that already forces
    /// unsatisfiability (not necessarily minimal, possibly empty when the
    /// formula is unsatisfiable on its own).
    pub fn solve(&mut self, assumptions: &[Literal]) -> Result<SatOutcome, SatError> {
        let mut assumption_lits = Vec::with_capacity(assumptions.len());
        for a in assumptions {
            let idx = self
                .index
                .get(&a.var)
                .copied()
                .ok_or_else(|| SatError::UnknownVariable(a.var.clone()))?;
            assumption_lits.push(mk_lit(idx, a.positive));
        }

        self.reset();
        let mut steps = 0u64;

        if self.n_empty > 0 {
            return Ok(SatOutcome::Unsat(Vec::new()));
        }
        for i in 0..self.units.len() {
            let ci = self.units[i];
            let lit = self.clauses[ci as usize][0];
            match self.lit_value(lit) {
                Some(true) => {}
                Some(false) => return Ok(SatOutcome::Unsat(Vec::new())),
                None => self.enqueue(lit, Some(ci)),
            }
        }
        if self.propagate(&mut steps)?.is_some() {
            return Ok(SatOutcome::Unsat(Vec::new()));
        }

        for &a in &assumption_lits {
            match self.lit_value(a) {
                Some(true) => continue,
                Some(false) => {
                    // The opposite literal was derived from units and earlier
                    // assumptions; regress it and include this assumption.
                    let mut core = self.analyze_final([a ^ 1]);
                    core.push(a);
                    return Ok(SatOutcome::Unsat(self.core_to_literals(core, assumptions)));
                }
                None => {
                    self.new_level();
                    self.enqueue(a, None);
                    if let Some(confl) = self.propagate(&mut steps)? {
                        let seeds: Vec<ILit> = self.clauses[confl as usize].clone();
                        let core = self.analyze_final(seeds);
                        return Ok(SatOutcome::Unsat(self.core_to_literals(core, assumptions)));
                    }
                }
            }
        }

        // Chronological DPLL below the assumption levels. Each entry records
        // the decision literal and whether its flip was already explored.
        let mut decisions: Vec<(ILit, bool)> = Vec::new();
        loop {
            match self.pick_branch_var() {
                None => return Ok(SatOutcome::Sat(self.model())),
                Some(v) => {
                    let lit = mk_lit(v, false);
                    self.new_level();
                    decisions.push((lit, false));
                    self.enqueue(lit, None);
                }
            }
            'conflicts: while self.propagate(&mut steps)?.is_some() {
                loop {
                    match decisions.pop() {
                        None => return Ok(SatOutcome::Unsat(assumptions.to_vec())),
                        Some((lit, flipped)) => {
                            self.undo_top_level();
                            if !flipped {
                                let flip = lit ^ 1;
                                self.new_level();
                                decisions.push((flip, true));
                                self.enqueue(flip, None);
                                continue 'conflicts;
                            }
                        }
                    }
                }
            }
        }
    }
}
