//! Formalization trees: the rooted, labeled decision schema of one provision
//! as produced by one model, plus parsing and structural validation.
//!
//! On disk a formalization is a single JSON document:
//!
//! ```json
//! {
//!   "tree_id": "model-x",
//!   "provision_id": "art6",
//!   "root": "n0",
//!   "nodes": {
//!     "n0": {"label": "processing is lawful", "operator": "OR", "children": ["n1", "n2"]},
//!     "n1": {"label": "consent given", "operator": null, "children": []},
//!     "n2": {"label": "contract requires it", "operator": null, "children": []}
//!   }
//! }
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Logical operator of an internal node. Exactly these four; anything else is
/// rejected at parse time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Operator {
    And,
    Or,
    Nand,
    Nor,
}

impl Operator {
    /// Splits the operator into its monotone base and a negation flag
    /// (NAND = negated AND, NOR = negated OR).
    pub fn base_and_negation(self) -> (Operator, bool) {
        match self {
            Operator::And => (Operator::And, false),
            Operator::Or => (Operator::Or, false),
            Operator::Nand => (Operator::And, true),
            Operator::Nor => (Operator::Or, true),
        }
    }

    /// Applies the operator to a non-empty sequence of operand values.
    /// A single operand is passed through by AND/OR and negated by NAND/NOR.
    pub fn apply(self, values: impl IntoIterator<Item = bool>) -> bool {
        let mut any_true = false;
        let mut all_true = true;
        let mut seen = false;
        for v in values {
            seen = true;
            any_true |= v;
            all_true &= v;
        }
        assert!(seen, "operator applied to zero operands");
        match self {
            Operator::And => all_true,
            Operator::Or => any_true,
            Operator::Nand => !all_true,
            Operator::Nor => !any_true,
        }
    }
}

impl fmt::Display for Operator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Operator::And => "AND",
            Operator::Or => "OR",
            Operator::Nand => "NAND",
            Operator::Nor => "NOR",
        };
        f.write_str(s)
    }
}

/// One node of a formalization. The node id is the key in
/// [`Formalization::nodes`]; leaves have no operator and no children.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Node {
    pub label: String,
    #[serde(default)]
    pub operator: Option<Operator>,
    #[serde(default)]
    pub children: Vec<String>,
}

impl Node {
    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }
}

/// A rooted labeled tree encoding the decision schema of one provision as
/// read by one model. Immutable after construction; children are stored in
/// document order but all Boolean semantics are order-insensitive.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Formalization {
    pub tree_id: String,
    pub provision_id: String,
    pub root: String,
    pub nodes: BTreeMap<String, Node>,
}

/// A single broken structural invariant, naming the offending node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    /// `nodes` is empty.
    EmptyTree,
    /// `root` is not a key of `nodes`.
    MissingRoot { root: String },
    /// A node carries an empty label.
    EmptyLabel { node: String },
    /// A leaf (no children) carries an operator.
    OperatorOnLeaf { node: String },
    /// An internal node (has children) carries no operator.
    MissingOperator { node: String },
    /// A child id does not exist in the tree.
    UnknownChild { parent: String, child: String },
    /// A node is referenced as a child more than once.
    MultiParent { node: String },
    /// The designated root is listed as some node's child.
    RootHasParent { root: String },
    /// The node lies on a child-edge cycle.
    Cycle { node: String },
    /// The node is not reachable from the root.
    Unreachable { node: String },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::EmptyTree => write!(f, "tree has no nodes"),
            Violation::MissingRoot { root } => write!(f, "root {root:?} is not a node"),
            Violation::EmptyLabel { node } => write!(f, "node {node:?} has an empty label"),
            Violation::OperatorOnLeaf { node } => {
                write!(f, "leaf {node:?} carries an operator")
            }
            Violation::MissingOperator { node } => {
                write!(f, "internal node {node:?} has no operator")
            }
            Violation::UnknownChild { parent, child } => {
                write!(f, "node {parent:?} references unknown child {child:?}")
            }
            Violation::MultiParent { node } => {
                write!(f, "node {node:?} is referenced by more than one parent edge")
            }
            Violation::RootHasParent { root } => {
                write!(f, "root {root:?} is listed as a child")
            }
            Violation::Cycle { node } => write!(f, "node {node:?} lies on a cycle"),
            Violation::Unreachable { node } => {
                write!(f, "node {node:?} is unreachable from the root")
            }
        }
    }
}

#[derive(Debug, Error)]
pub enum ModelError {
    /// The document is not valid JSON for the formalization schema.
    #[error("schema error: {0}")]
    Schema(String),
    /// The document parsed but violates structural invariants.
    #[error("structure error: {}", format_violations(.0))]
    Structure(Vec<Violation>),
}

fn format_violations(vs: &[Violation]) -> String {
    vs.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; ")
}

/// Parses and validates a UTF-8 JSON document into a [`Formalization`].
pub fn parse_formalization(bytes: &[u8]) -> Result<Formalization, ModelError> {
    let f: Formalization =
        serde_json::from_slice(bytes).map_err(|e| ModelError::Schema(e.to_string()))?;
    let violations = validate(&f);
    if violations.is_empty() {
        Ok(f)
    } else {
        Err(ModelError::Structure(violations))
    }
}

/// Serializes a formalization back to its JSON document form.
pub fn serialize_formalization(f: &Formalization) -> String {
    let mut out = serde_json::to_string_pretty(f).expect("formalization serializes");
    out.push('\n');
    out
}

/// Checks every structural invariant and returns the violations found.
/// An empty result means the tree is well-formed.
pub fn validate(f: &Formalization) -> Vec<Violation> {
    let mut violations = Vec::new();

    if f.nodes.is_empty() {
        violations.push(Violation::EmptyTree);
        return violations;
    }
    if !f.nodes.contains_key(&f.root) {
        violations.push(Violation::MissingRoot { root: f.root.clone() });
    }

    let mut parent_count: BTreeMap<&str, usize> = BTreeMap::new();
    for (id, node) in &f.nodes {
        if node.label.is_empty() {
            violations.push(Violation::EmptyLabel { node: id.clone() });
        }
        match (node.is_leaf(), node.operator) {
            (true, Some(_)) => violations.push(Violation::OperatorOnLeaf { node: id.clone() }),
            (false, None) => violations.push(Violation::MissingOperator { node: id.clone() }),
            _ => {}
        }
        for child in &node.children {
            if !f.nodes.contains_key(child) {
                violations.push(Violation::UnknownChild {
                    parent: id.clone(),
                    child: child.clone(),
                });
            } else {
                *parent_count.entry(child.as_str()).or_insert(0) += 1;
            }
        }
    }

    for (child, count) in &parent_count {
        if *count > 1 {
            violations.push(Violation::MultiParent { node: (*child).to_string() });
        }
    }
    if parent_count.contains_key(f.root.as_str()) {
        violations.push(Violation::RootHasParent { root: f.root.clone() });
    }

    // Cycle detection on the child-edge graph: peel nodes with no remaining
    // children (Kahn on reversed edges); whatever survives lies on a cycle.
    let mut pending: BTreeMap<&str, usize> = f
        .nodes
        .iter()
        .map(|(id, n)| {
            let known = n.children.iter().filter(|c| f.nodes.contains_key(*c)).count();
            (id.as_str(), known)
        })
        .collect();
    let mut rev: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for (id, node) in &f.nodes {
        for child in &node.children {
            if f.nodes.contains_key(child) {
                rev.entry(child.as_str()).or_default().push(id.as_str());
            }
        }
    }
    let mut queue: Vec<&str> =
        pending.iter().filter(|(_, c)| **c == 0).map(|(id, _)| *id).collect();
    let mut peeled: BTreeSet<&str> = BTreeSet::new();
    while let Some(id) = queue.pop() {
        if !peeled.insert(id) {
            continue;
        }
        if let Some(parents) = rev.get(id) {
            for p in parents {
                let c = pending.get_mut(p).expect("parent is a node");
                *c -= 1;
                if *c == 0 {
                    queue.push(p);
                }
            }
        }
    }
    for id in f.nodes.keys() {
        if !peeled.contains(id.as_str()) {
            violations.push(Violation::Cycle { node: id.clone() });
        }
    }

    // Reachability from the root.
    if f.nodes.contains_key(&f.root) {
        let mut reachable: BTreeSet<&str> = BTreeSet::new();
        let mut stack = vec![f.root.as_str()];
        while let Some(id) = stack.pop() {
            if !reachable.insert(id) {
                continue;
            }
            if let Some(node) = f.nodes.get(id) {
                for child in &node.children {
                    if f.nodes.contains_key(child) {
                        stack.push(child.as_str());
                    }
                }
            }
        }
        for id in f.nodes.keys() {
            if !reachable.contains(id.as_str()) {
                violations.push(Violation::Unreachable { node: id.clone() });
            }
        }
    }

    violations.sort_by_key(|v| format!("{v:?}"));
    violations.dedup();
    violations
}

/// Node ids of all leaves.
pub fn leaves(f: &Formalization) -> BTreeSet<String> {
    f.nodes
        .iter()
        .filter(|(_, n)| n.is_leaf())
        .map(|(id, _)| id.clone())
        .collect()
}

impl Formalization {
    /// Child-to-parent map. Well-formed trees have one parent per non-root node.
    pub fn parent_map(&self) -> BTreeMap<&str, &str> {
        let mut parents = BTreeMap::new();
        for (id, node) in &self.nodes {
            for child in &node.children {
                parents.insert(child.as_str(), id.as_str());
            }
        }
        parents
    }

    /// Operator of the root node; `None` when the tree is a single leaf.
    pub fn root_operator(&self) -> Option<Operator> {
        self.nodes.get(&self.root).and_then(|n| n.operator)
    }
}
