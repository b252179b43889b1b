//! Tseitin transformation: an equisatisfiable CNF for a formula (or its
//! negation) via one fresh auxiliary variable per operator node.

use std::collections::BTreeSet;

use super::{CnfFormula, Literal};
use crate::expr::BoolExpr;
use crate::model::Operator;

struct Encoder {
    aux_prefix: String,
    aux: Vec<String>,
    clauses: Vec<Vec<Literal>>,
}

impl Encoder {
    fn fresh(&mut self) -> Literal {
        let name = format!("{}{}", self.aux_prefix, self.aux.len());
        self.aux.push(name.clone());
        Literal::positive(name)
    }

    fn encode(&mut self, e: &BoolExpr) -> Literal {
        match e {
            BoolExpr::Var(v) => Literal::positive(v.clone()),
            BoolExpr::Op(op, children) => {
                assert!(!children.is_empty(), "operator {op} applied to zero operands");
                let child_lits: Vec<Literal> =
                    children.iter().map(|c| self.encode(c)).collect();
                let z = self.fresh();
                let (nz, pz) = (z.negated(), z.clone());
                match op {
                    // z <-> AND(c..): (!z | ci) each; (z | !c1 | .. | !cn)
                    Operator::And => {
                        for c in &child_lits {
                            self.clauses.push(vec![nz.clone(), c.clone()]);
                        }
                        let mut long = vec![pz];
                        long.extend(child_lits.iter().map(Literal::negated));
                        self.clauses.push(long);
                    }
                    // z <-> OR(c..): (z | !ci) each; (!z | c1 | .. | cn)
                    Operator::Or => {
                        for c in &child_lits {
                            self.clauses.push(vec![pz.clone(), c.negated()]);
                        }
                        let mut long = vec![nz];
                        long.extend(child_lits.iter().cloned());
                        self.clauses.push(long);
                    }
                    // z <-> !AND(c..): (z | ci) each; (!z | !c1 | .. | !cn)
                    Operator::Nand => {
                        for c in &child_lits {
                            self.clauses.push(vec![pz.clone(), c.clone()]);
                        }
                        let mut long = vec![nz];
                        long.extend(child_lits.iter().map(Literal::negated));
                        self.clauses.push(long);
                    }
                    // z <-> !OR(c..): (!z | !ci) each; (z | c1 | .. | cn)
                    Operator::Nor => {
                        for c in &child_lits {
                            self.clauses.push(vec![nz.clone(), c.negated()]);
                        }
                        let mut long = vec![pz];
                        long.extend(child_lits.iter().cloned());
                        self.clauses.push(long);
                    }
                }
                z
            }
        }
    }
}

/// Encodes `expr` (when `asserted`) or its negation into CNF. Auxiliary
/// variables are fresh and disjoint from the expression's variables; any
/// model projected onto the original variables satisfies (or falsifies) the
/// expression.
pub fn tseitin(expr: &BoolExpr, asserted: bool) -> CnfFormula {
    let originals: BTreeSet<String> = expr.vars();
    // Pick an auxiliary prefix no original variable starts with.
    let mut aux_prefix = "__t".to_string();
    while originals.iter().any(|v| v.starts_with(&aux_prefix)) {
        aux_prefix.push('_');
    }
    let mut enc = Encoder { aux_prefix, aux: Vec::new(), clauses: Vec::new() };
    let root = enc.encode(expr);
    enc.clauses.push(vec![if asserted { root } else { root.negated() }]);
    CnfFormula::with_aux(originals, enc.aux, enc.clauses)
}
