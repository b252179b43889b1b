//! Boolean formulas over named variables, as produced by interface
//! compilation. Operators are the same four the trees carry; negation is a
//! unary NAND.

use std::collections::BTreeMap;
use std::collections::BTreeSet;

use thiserror::Error;

use crate::model::Operator;

/// A Boolean formula: a variable or an operator over one or more operands.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BoolExpr {
    Var(String),
    Op(Operator, Vec<BoolExpr>),
}

#[derive(Debug, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("unbound variable {0}")]
    UnboundVariable(String),
}

impl BoolExpr {
    pub fn var(id: impl Into<String>) -> BoolExpr {
        BoolExpr::Var(id.into())
    }

    /// Operator application. Panics on an empty operand list; operators take
    /// at least one operand.
    pub fn op(operator: Operator, operands: Vec<BoolExpr>) -> BoolExpr {
        assert!(!operands.is_empty(), "operator {operator} applied to zero operands");
        BoolExpr::Op(operator, operands)
    }

    /// Negation via unary NAND.
    pub fn negate(self) -> BoolExpr {
        BoolExpr::Op(Operator::Nand, vec![self])
    }

    /// Exclusive or, spelled with the four tree operators:
    /// `(a AND NOT b) OR (NOT a AND b)`.
    pub fn xor(a: BoolExpr, b: BoolExpr) -> BoolExpr {
        BoolExpr::Op(
            Operator::Or,
            vec![
                BoolExpr::Op(Operator::And, vec![a.clone(), b.clone().negate()]),
                BoolExpr::Op(Operator::And, vec![a.negate(), b]),
            ],
        )
    }

    /// Variables occurring in the formula, sorted.
    pub fn vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            BoolExpr::Var(v) => {
                out.insert(v.clone());
            }
            BoolExpr::Op(_, children) => {
                for c in children {
                    c.collect_vars(out);
                }
            }
        }
    }

    /// Evaluates under a total assignment.
    pub fn eval(&self, assignment: &BTreeMap<String, bool>) -> Result<bool, EvalError> {
        match self {
            BoolExpr::Var(v) => assignment
                .get(v)
                .copied()
                .ok_or_else(|| EvalError::UnboundVariable(v.clone())),
            BoolExpr::Op(op, children) => {
                let mut values = Vec::with_capacity(children.len());
                for c in children {
                    values.push(c.eval(assignment)?);
                }
                Ok(op.apply(values))
            }
        }
    }

    /// Number of nodes, variables included.
    pub fn size(&self) -> usize {
        match self {
            BoolExpr::Var(_) => 1,
            BoolExpr::Op(_, children) => 1 + children.iter().map(|c| c.size()).sum::<usize>(),
        }
    }
}
