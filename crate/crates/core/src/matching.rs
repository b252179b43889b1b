//! Matchings of nodes across formalizations into equivalence classes (ECs),
//! the lifted EC graph, and the run-to-run consistency metric.
//!
//! A matching partitions every node of every participating tree into exactly
//! one EC; unmatched nodes live in singleton classes. EC edges are always
//! derived from tree edges — edges supplied in the document are ignored.
//!
//! Document schema:
//!
//! ```json
//! {
//!   "provision_id": "art6",
//!   "classes": [
//!     {"ec_id": "consent", "label": "consent given",
//!      "members": [{"tree_id": "a", "node_id": "n1"}, {"tree_id": "b", "node_id": "k4"}]}
//!   ]
//! }
//! ```

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::Formalization;

/// A `(tree, node)` reference identifying one node of one formalization.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Atom {
    pub tree_id: String,
    pub node_id: String,
}

impl Atom {
    pub fn new(tree_id: impl Into<String>, node_id: impl Into<String>) -> Self {
        Atom { tree_id: tree_id.into(), node_id: node_id.into() }
    }
}

/// A set of nodes, at most one per tree, judged to express the same concept.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EquivalenceClass {
    pub ec_id: String,
    #[serde(default)]
    pub label: Option<String>,
    pub members: BTreeSet<Atom>,
}

impl EquivalenceClass {
    /// Member node of this class in the given tree, if any.
    pub fn node_in(&self, tree_id: &str) -> Option<&str> {
        self.members
            .iter()
            .find(|a| a.tree_id == tree_id)
            .map(|a| a.node_id.as_str())
    }
}

/// A validated matching: a partition of all nodes of the participating trees
/// into ECs, with the tree edges lifted onto classes. The lifted relation is
/// acyclic (self-loops count as cycles).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Matching {
    pub provision_id: String,
    pub classes: BTreeMap<String, EquivalenceClass>,
    /// Lifted edges: `(parent_ec, child_ec)` present iff some tree has a node
    /// in the parent class with a child in the child class.
    pub ec_edges: BTreeSet<(String, String)>,
    atom_to_ec: BTreeMap<Atom, String>,
    trees: BTreeSet<String>,
}

/// The set of unordered atom pairs co-grouped by one matching run.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PairSet {
    pairs: BTreeSet<(Atom, Atom)>,
}

impl PairSet {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn contains(&self, a: &Atom, b: &Atom) -> bool {
        let key = if a <= b { (a.clone(), b.clone()) } else { (b.clone(), a.clone()) };
        self.pairs.contains(&key)
    }

    pub fn iter(&self) -> impl Iterator<Item = &(Atom, Atom)> {
        self.pairs.iter()
    }

    pub fn insert(&mut self, a: Atom, b: Atom) {
        let key = if a <= b { (a, b) } else { (b, a) };
        self.pairs.insert(key);
    }

    fn intersection(&self, other: &PairSet) -> PairSet {
        PairSet { pairs: self.pairs.intersection(&other.pairs).cloned().collect() }
    }

    fn union(&self, other: &PairSet) -> PairSet {
        PairSet { pairs: self.pairs.union(&other.pairs).cloned().collect() }
    }
}

impl FromIterator<(Atom, Atom)> for PairSet {
    fn from_iter<I: IntoIterator<Item = (Atom, Atom)>>(iter: I) -> Self {
        let mut s = PairSet::default();
        for (a, b) in iter {
            s.insert(a, b);
        }
        s
    }
}

#[derive(Debug, Error)]
pub enum MatchingError {
    /// Malformed document or dangling reference.
    #[error("schema error: {0}")]
    Schema(String),
    /// A node is unassigned or assigned to more than one class.
    #[error("partition error: node {tree_id}/{node_id} is {kind}")]
    Partition { tree_id: String, node_id: String, kind: PartitionKind },
    /// Two nodes of the same tree share a class.
    #[error("class {ec_id} contains more than one node of tree {tree_id}")]
    DuplicateTreeInEc { ec_id: String, tree_id: String },
    /// The lifted EC relation contains a cycle (self-loops included).
    #[error("lifted EC relation is cyclic through {}", .ec_ids.join(", "))]
    Cycle { ec_ids: Vec<String> },
    /// A queried tree does not participate in the matching.
    #[error("tree {0} does not participate in this matching")]
    UnknownTree(String),
    /// An operation received no runs.
    #[error("empty input: at least one run is required")]
    EmptyInput,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PartitionKind {
    Unassigned,
    DoublyAssigned,
}

impl std::fmt::Display for PartitionKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PartitionKind::Unassigned => f.write_str("unassigned"),
            PartitionKind::DoublyAssigned => f.write_str("assigned to more than one class"),
        }
    }
}

#[derive(Deserialize)]
struct MatchingDoc {
    provision_id: String,
    classes: Vec<ClassDoc>,
    /// Edges are derived, never supplied; a present field is ignored.
    #[serde(default)]
    ec_edges: Option<serde_json::Value>,
}

#[derive(Deserialize)]
struct ClassDoc {
    ec_id: String,
    #[serde(default)]
    label: Option<String>,
    members: Vec<Atom>,
}

/// Parses and validates a matching document against the loaded formalizations.
///
/// Every node of every given formalization must appear in exactly one class,
/// no class may contain two nodes of the same tree, and the lifted EC
/// relation must be acyclic.
pub fn parse_matching(
    bytes: &[u8],
    formalizations: &[Formalization],
) -> Result<Matching, MatchingError> {
    let doc: MatchingDoc =
        serde_json::from_slice(bytes).map_err(|e| MatchingError::Schema(e.to_string()))?;
    if doc.ec_edges.is_some() {
        log::warn!("matching document supplies ec_edges; they are derived from tree edges and the supplied ones are ignored");
    }

    let mut by_tree: BTreeMap<&str, &Formalization> = BTreeMap::new();
    for f in formalizations {
        if by_tree.insert(f.tree_id.as_str(), f).is_some() {
            return Err(MatchingError::Schema(format!(
                "two formalizations share tree_id {:?}",
                f.tree_id
            )));
        }
    }

    let mut classes: BTreeMap<String, EquivalenceClass> = BTreeMap::new();
    let mut atom_to_ec: BTreeMap<Atom, String> = BTreeMap::new();
    for class in doc.classes {
        if class.members.is_empty() {
            return Err(MatchingError::Schema(format!(
                "class {:?} has no members",
                class.ec_id
            )));
        }
        let mut trees_seen: BTreeSet<&str> = BTreeSet::new();
        for atom in &class.members {
            let tree = by_tree.get(atom.tree_id.as_str()).ok_or_else(|| {
                MatchingError::Schema(format!(
                    "class {:?} references unknown tree {:?}",
                    class.ec_id, atom.tree_id
                ))
            })?;
            if !tree.nodes.contains_key(&atom.node_id) {
                return Err(MatchingError::Schema(format!(
                    "class {:?} references unknown node {:?} of tree {:?}",
                    class.ec_id, atom.node_id, atom.tree_id
                )));
            }
            if !trees_seen.insert(atom.tree_id.as_str()) {
                return Err(MatchingError::DuplicateTreeInEc {
                    ec_id: class.ec_id.clone(),
                    tree_id: atom.tree_id.clone(),
                });
            }
            if atom_to_ec.insert(atom.clone(), class.ec_id.clone()).is_some() {
                return Err(MatchingError::Partition {
                    tree_id: atom.tree_id.clone(),
                    node_id: atom.node_id.clone(),
                    kind: PartitionKind::DoublyAssigned,
                });
            }
        }
        let ec = EquivalenceClass {
            ec_id: class.ec_id.clone(),
            label: class.label,
            members: class.members.into_iter().collect(),
        };
        if classes.insert(class.ec_id.clone(), ec).is_some() {
            return Err(MatchingError::Schema(format!(
                "duplicate class id {:?}",
                class.ec_id
            )));
        }
    }

    // Totality: every node of every participating tree is assigned.
    for f in formalizations {
        for node_id in f.nodes.keys() {
            let atom = Atom::new(f.tree_id.clone(), node_id.clone());
            if !atom_to_ec.contains_key(&atom) {
                return Err(MatchingError::Partition {
                    tree_id: f.tree_id.clone(),
                    node_id: node_id.clone(),
                    kind: PartitionKind::Unassigned,
                });
            }
        }
    }

    // Lift tree edges onto classes. Parent and child in the same class is a
    // self-loop during the cycle check below.
    let mut ec_edges: BTreeSet<(String, String)> = BTreeSet::new();
    for f in formalizations {
        for (node_id, node) in &f.nodes {
            let parent_ec = &atom_to_ec[&Atom::new(f.tree_id.clone(), node_id.clone())];
            for child in &node.children {
                let child_ec = &atom_to_ec[&Atom::new(f.tree_id.clone(), child.clone())];
                ec_edges.insert((parent_ec.clone(), child_ec.clone()));
            }
        }
    }

    if let Some(cycle) = find_cycle(&classes, &ec_edges) {
        return Err(MatchingError::Cycle { ec_ids: cycle });
    }

    let trees = formalizations.iter().map(|f| f.tree_id.clone()).collect();
    Ok(Matching { provision_id: doc.provision_id, classes, ec_edges, atom_to_ec, trees })
}

fn find_cycle(
    classes: &BTreeMap<String, EquivalenceClass>,
    edges: &BTreeSet<(String, String)>,
) -> Option<Vec<String>> {
    let mut out: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    let mut indegree: BTreeMap<&str, usize> = classes.keys().map(|k| (k.as_str(), 0)).collect();
    for (parent, child) in edges {
        if parent == child {
            return Some(vec![parent.clone()]);
        }
        out.entry(parent.as_str()).or_default().push(child.as_str());
        *indegree.get_mut(child.as_str()).expect("edge endpoints are classes") += 1;
    }
    let mut queue: Vec<&str> =
        indegree.iter().filter(|(_, d)| **d == 0).map(|(id, _)| *id).collect();
    let mut removed = 0usize;
    while let Some(id) = queue.pop() {
        removed += 1;
        if let Some(children) = out.get(id) {
            for c in children {
                let d = indegree.get_mut(c).unwrap();
                *d -= 1;
                if *d == 0 {
                    queue.push(c);
                }
            }
        }
    }
    if removed == classes.len() {
        None
    } else {
        let stuck: Vec<String> = indegree
            .iter()
            .filter(|(_, d)| **d > 0)
            .map(|(id, _)| (*id).to_string())
            .collect();
        Some(stuck)
    }
}

impl Matching {
    /// Trees participating in this matching.
    pub fn trees(&self) -> &BTreeSet<String> {
        &self.trees
    }

    /// Class containing the given node.
    pub fn ec_of(&self, tree_id: &str, node_id: &str) -> Option<&str> {
        self.atom_to_ec
            .get(&Atom::new(tree_id, node_id))
            .map(|s| s.as_str())
    }

    pub fn class(&self, ec_id: &str) -> Option<&EquivalenceClass> {
        self.classes.get(ec_id)
    }
}

/// All unordered atom pairs sharing a class: the co-membership pair set of
/// one matching run.
pub fn co_membership(m: &Matching) -> PairSet {
    let mut pairs = PairSet::default();
    for class in m.classes.values() {
        let members: Vec<&Atom> = class.members.iter().collect();
        for i in 0..members.len() {
            for j in (i + 1)..members.len() {
                pairs.insert(members[i].clone(), members[j].clone());
            }
        }
    }
    pairs
}

/// N-set Jaccard over co-membership pair sets: the fraction of co-grouping
/// decisions on which all runs agree. `None` when the union is empty.
pub fn jaccard_n(runs: &[PairSet]) -> Result<Option<f64>, MatchingError> {
    let (first, rest) = runs.split_first().ok_or(MatchingError::EmptyInput)?;
    let mut intersection = first.clone();
    let mut union = first.clone();
    for run in rest {
        intersection = intersection.intersection(run);
        union = union.union(run);
    }
    if union.is_empty() {
        return Ok(None);
    }
    Ok(Some(intersection.len() as f64 / union.len() as f64))
}

/// Classes to which both trees contribute a node.
pub fn shared_ecs(
    m: &Matching,
    tree_a: &str,
    tree_b: &str,
) -> Result<BTreeSet<String>, MatchingError> {
    for t in [tree_a, tree_b] {
        if !m.trees.contains(t) {
            return Err(MatchingError::UnknownTree(t.to_string()));
        }
    }
    Ok(m.classes
        .values()
        .filter(|c| c.node_in(tree_a).is_some() && c.node_in(tree_b).is_some())
        .map(|c| c.ec_id.clone())
        .collect())
}
