//! Pairwise Boolean interface between two formalizations: the deepest
//! antichain of shared equivalence classes, coverage scores, and the
//! compilation of each tree into a formula over the interface variables.
//!
//! This is the cut-point construction from hardware equivalence checking:
//! matched classes on the cut become free Boolean inputs, and everything
//! above the cut is translated operator by operator. Subtrees containing no
//! shared class anywhere are abstracted into fresh private variables so both
//! root functions stay total.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::BoolExpr;
use crate::matching::{shared_ecs, Matching, MatchingError};
use crate::model::Formalization;

/// A synthetic input standing in for one maximal subtree with no shared
/// class, tagged with its owner. Private variables have no counterpart on
/// the other side of the pair and are flagged in reports.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrivateVar {
    pub tree_id: String,
    pub node_id: String,
}

/// The interface of one unordered pair of trees.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Interface {
    pub tree_a: String,
    pub tree_b: String,
    /// The cut: an antichain of shared classes under the ancestor relation of
    /// either tree.
    pub cut_ecs: BTreeSet<String>,
    /// Private variable id to owning subtree.
    pub private_vars: BTreeMap<String, PrivateVar>,
    pub cov_a: f64,
    pub cov_b: f64,
    /// Geometric mean of the per-tree coverages.
    pub cov_pair: f64,
}

#[derive(Debug, Error)]
pub enum InterfaceError {
    #[error(transparent)]
    Matching(#[from] MatchingError),
    #[error("tree {0} is not a side of this interface")]
    WrongTree(String),
    /// A node fell outside the three compilable regions (above the cut, at
    /// the cut, private subtree root); the frontier construction rules this
    /// out for nodes reached from the root.
    #[error("node {node} of tree {tree} cannot be compiled against the interface")]
    Internal { tree: String, node: String },
}

/// Per-tree ancestry index used by the frontier and coverage computations.
struct TreeIndex<'a> {
    parent: BTreeMap<&'a str, &'a str>,
}

impl<'a> TreeIndex<'a> {
    fn new(f: &'a Formalization) -> Self {
        TreeIndex { parent: f.parent_map() }
    }

    /// Walks from `node` to the root, excluding `node` itself.
    fn ancestors(&self, node: &str) -> Vec<&'a str> {
        let mut out = Vec::new();
        let mut cur = node;
        while let Some(&p) = self.parent.get(cur) {
            out.push(p);
            cur = p;
        }
        out
    }

    fn is_strict_ancestor(&self, anc: &str, node: &str) -> bool {
        let mut cur = node;
        while let Some(&p) = self.parent.get(cur) {
            if p == anc {
                return true;
            }
            cur = p;
        }
        false
    }
}

/// Computes the interface of the pair: shared classes reduced to the deepest
/// consistent frontier, private variables for unshared subtrees, and
/// coverage. A pair without any shared class yields an empty cut with
/// coverage zero; that is reported, not an error.
pub fn compute_interface(
    m: &Matching,
    a: &Formalization,
    b: &Formalization,
) -> Result<Interface, InterfaceError> {
    let shared = shared_ecs(m, &a.tree_id, &b.tree_id)?;
    let ia = TreeIndex::new(a);
    let ib = TreeIndex::new(b);

    let node_in = |ec: &str, tree: &Formalization| -> &str {
        m.class(ec)
            .and_then(|c| c.node_in(&tree.tree_id))
            .expect("shared class has a node in both trees")
    };

    // Per-tree frontier: shared classes whose node has no strict descendant
    // with a shared class in that tree.
    let frontier = |idx: &TreeIndex, tree: &Formalization| -> BTreeSet<String> {
        shared
            .iter()
            .filter(|ec| {
                let n = node_in(ec, tree);
                !shared.iter().any(|other| {
                    *other != **ec && idx.is_strict_ancestor(n, node_in(other, tree))
                })
            })
            .cloned()
            .collect()
    };

    let mut cut: BTreeSet<String> = frontier(&ia, a).union(&frontier(&ib, b)).cloned().collect();

    // Repair to an antichain: repeatedly drop the first (by id) class whose
    // node is a strict descendant of another member's node in either tree.
    loop {
        let victim = cut.iter().find(|d| {
            cut.iter().any(|e| {
                *e != **d
                    && (ia.is_strict_ancestor(node_in(e, a), node_in(d, a))
                        || ib.is_strict_ancestor(node_in(e, b), node_in(d, b)))
            })
        });
        match victim {
            Some(d) => {
                let d = d.clone();
                cut.remove(&d);
            }
            None => break,
        }
    }

    // Private variables: one per maximal subtree containing no cut node.
    let mut private_vars = BTreeMap::new();
    for tree in [a, b] {
        for root in private_roots(tree, m, &cut) {
            let mut var = format!("_p:{}:{}", tree.tree_id, root);
            while m.classes.contains_key(&var) {
                var.push('\'');
            }
            private_vars
                .insert(var, PrivateVar { tree_id: tree.tree_id.clone(), node_id: root });
        }
    }

    // Coverage: classes on or above the interface are the cut plus every
    // class holding an ancestor (in its own tree) of a cut node.
    let mut on_or_above: BTreeSet<&str> = cut.iter().map(|s| s.as_str()).collect();
    for ec in &cut {
        for (tree, idx) in [(a, &ia), (b, &ib)] {
            for anc in idx.ancestors(node_in(ec, tree)) {
                if let Some(anc_ec) = m.ec_of(&tree.tree_id, anc) {
                    on_or_above.insert(anc_ec);
                }
            }
        }
    }
    let coverage = |tree: &Formalization| -> f64 {
        let in_tree: BTreeSet<&str> = m
            .classes
            .values()
            .filter(|c| c.node_in(&tree.tree_id).is_some())
            .map(|c| c.ec_id.as_str())
            .collect();
        let above = in_tree.intersection(&on_or_above).count();
        above as f64 / in_tree.len() as f64
    };
    let cov_a = coverage(a);
    let cov_b = coverage(b);

    Ok(Interface {
        tree_a: a.tree_id.clone(),
        tree_b: b.tree_id.clone(),
        cut_ecs: cut,
        private_vars,
        cov_a,
        cov_b,
        cov_pair: (cov_a * cov_b).sqrt(),
    })
}

/// Classes on or above the interface: the cut plus every class holding a
/// node that is an ancestor (in its own tree) of a cut node.
pub fn classes_on_or_above(
    m: &Matching,
    a: &Formalization,
    b: &Formalization,
    iface: &Interface,
) -> BTreeSet<String> {
    let ia = TreeIndex::new(a);
    let ib = TreeIndex::new(b);
    let mut out: BTreeSet<String> = iface.cut_ecs.clone();
    for ec in &iface.cut_ecs {
        for (tree, idx) in [(a, &ia), (b, &ib)] {
            if let Some(node) = m.class(ec).and_then(|c| c.node_in(&tree.tree_id)) {
                for anc in idx.ancestors(node) {
                    if let Some(anc_ec) = m.ec_of(&tree.tree_id, anc) {
                        out.insert(anc_ec.to_string());
                    }
                }
            }
        }
    }
    out
}

/// Roots of the maximal subtrees containing no cut node, in traversal order
/// from the tree root.
fn private_roots(
    tree: &Formalization,
    m: &Matching,
    cut: &BTreeSet<String>,
) -> Vec<String> {
    let contains_cut = subtree_contains_cut(tree, m, cut);
    let mut out = Vec::new();
    let mut stack = vec![tree.root.as_str()];
    while let Some(node) = stack.pop() {
        let ec = m.ec_of(&tree.tree_id, node).expect("partition is total");
        if cut.contains(ec) {
            continue;
        }
        if !contains_cut[node] {
            out.push(node.to_string());
            continue;
        }
        for child in &tree.nodes[node].children {
            stack.push(child.as_str());
        }
    }
    out.sort();
    out
}

/// For each node, whether its subtree (itself included) holds a node whose
/// class is on the cut.
fn subtree_contains_cut<'a>(
    tree: &'a Formalization,
    m: &Matching,
    cut: &BTreeSet<String>,
) -> BTreeMap<&'a str, bool> {
    let mut marks: BTreeMap<&'a str, bool> = BTreeMap::new();
    // Post-order via two-phase stack.
    let mut stack: Vec<(&str, bool)> = vec![(tree.root.as_str(), false)];
    while let Some((node, expanded)) = stack.pop() {
        if expanded {
            let own = m
                .ec_of(&tree.tree_id, node)
                .map(|ec| cut.contains(ec))
                .unwrap_or(false);
            let from_children =
                tree.nodes[node].children.iter().any(|c| marks[c.as_str()]);
            marks.insert(node, own || from_children);
        } else {
            stack.push((node, true));
            for child in &tree.nodes[node].children {
                stack.push((child.as_str(), false));
            }
        }
    }
    marks
}

/// Compiles one side of an interface into Boolean formulas over the cut and
/// private variables.
pub struct TreeCompiler<'a> {
    tree: &'a Formalization,
    m: &'a Matching,
    cut: &'a BTreeSet<String>,
    contains_cut: BTreeMap<&'a str, bool>,
    /// Private subtree root node to its variable id.
    private_of_node: BTreeMap<&'a str, &'a str>,
    /// Nodes strictly below a cut node, which have no compiled counterpart.
    below_cut: BTreeSet<&'a str>,
}

impl<'a> TreeCompiler<'a> {
    pub fn new(
        f: &'a Formalization,
        iface: &'a Interface,
        m: &'a Matching,
    ) -> Result<Self, InterfaceError> {
        if f.tree_id != iface.tree_a && f.tree_id != iface.tree_b {
            return Err(InterfaceError::WrongTree(f.tree_id.clone()));
        }
        let contains_cut = subtree_contains_cut(f, m, &iface.cut_ecs);
        let private_of_node: BTreeMap<&str, &str> = iface
            .private_vars
            .iter()
            .filter(|(_, p)| p.tree_id == f.tree_id)
            .map(|(var, p)| (p.node_id.as_str(), var.as_str()))
            .collect();
        let mut below_cut = BTreeSet::new();
        for ec in &iface.cut_ecs {
            if let Some(cut_node) = m.class(ec).and_then(|c| c.node_in(&f.tree_id)) {
                let mut stack: Vec<&str> =
                    f.nodes[cut_node].children.iter().map(|c| c.as_str()).collect();
                while let Some(n) = stack.pop() {
                    below_cut.insert(n);
                    stack.extend(f.nodes[n].children.iter().map(|c| c.as_str()));
                }
            }
        }
        Ok(TreeCompiler { tree: f, m, cut: &iface.cut_ecs, contains_cut, private_of_node, below_cut })
    }

    /// The compiled root function of this side.
    pub fn compile_root(&self) -> Result<BoolExpr, InterfaceError> {
        self.compile_node(&self.tree.root)
    }

    /// The compiled sub-formula rooted at a node. `Ok(None)` when the node
    /// has no compiled counterpart: it sits strictly below the cut or
    /// strictly inside a private subtree.
    pub fn compile_at(&self, node: &str) -> Result<Option<BoolExpr>, InterfaceError> {
        let ec = self.m.ec_of(&self.tree.tree_id, node).expect("partition is total");
        if self.cut.contains(ec) {
            return Ok(Some(BoolExpr::var(ec)));
        }
        if let Some(var) = self.private_of_node.get(node) {
            return Ok(Some(BoolExpr::var(*var)));
        }
        if self.below_cut.contains(node) || !self.contains_cut[node] {
            return Ok(None);
        }
        Ok(Some(self.compile_node(node)?))
    }

    fn compile_node(&self, node: &str) -> Result<BoolExpr, InterfaceError> {
        let ec = self.m.ec_of(&self.tree.tree_id, node).expect("partition is total");
        if self.cut.contains(ec) {
            return Ok(BoolExpr::var(ec));
        }
        if let Some(var) = self.private_of_node.get(node) {
            return Ok(BoolExpr::var(*var));
        }
        let n = &self.tree.nodes[node];
        if n.is_leaf() || !self.contains_cut[node] {
            // Reachable only if the frontier construction broke down.
            return Err(InterfaceError::Internal {
                tree: self.tree.tree_id.clone(),
                node: node.to_string(),
            });
        }
        let operator = n.operator.expect("internal node has an operator");
        let children = n
            .children
            .iter()
            .map(|c| self.compile_node(c))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(BoolExpr::op(operator, children))
    }
}

/// Convenience wrapper: compile the root function of one side.
pub fn compile(
    f: &Formalization,
    iface: &Interface,
    m: &Matching,
) -> Result<BoolExpr, InterfaceError> {
    TreeCompiler::new(f, iface, m)?.compile_root()
}

/// One row of the interface summary export.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InterfaceSummary {
    pub pair_a: String,
    pub pair_b: String,
    pub cut_ecs: Vec<String>,
    pub private_vars: Vec<PrivateVarSummary>,
    pub cov_a: f64,
    pub cov_b: f64,
    pub cov_pair: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PrivateVarSummary {
    pub var: String,
    pub tree_id: String,
    pub node_id: String,
}

impl InterfaceSummary {
    pub fn of(iface: &Interface) -> Self {
        InterfaceSummary {
            pair_a: iface.tree_a.clone(),
            pair_b: iface.tree_b.clone(),
            cut_ecs: iface.cut_ecs.iter().cloned().collect(),
            private_vars: iface
                .private_vars
                .iter()
                .map(|(var, p)| PrivateVarSummary {
                    var: var.clone(),
                    tree_id: p.tree_id.clone(),
                    node_id: p.node_id.clone(),
                })
                .collect(),
            cov_a: iface.cov_a,
            cov_b: iface.cov_b,
            cov_pair: iface.cov_pair,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matching::parse_matching;
    use crate::model::{parse_formalization, Operator};
    use std::collections::BTreeMap;

    fn tree(tree_id: &str, json_nodes: &str, root: &str) -> Formalization {
        parse_formalization(
            format!(
                r#"{{"tree_id": "{tree_id}", "provision_id": "p", "root": "{root}", "nodes": {json_nodes}}}"#
            )
            .as_bytes(),
        )
        .unwrap()
    }

    fn identical_pair() -> (Formalization, Formalization, Matching) {
        let nodes = r#"{
            "r": {"label": "root", "operator": "AND", "children": ["x", "o"]},
            "o": {"label": "or", "operator": "OR", "children": ["y", "z"]},
            "x": {"label": "x", "operator": null, "children": []},
            "y": {"label": "y", "operator": null, "children": []},
            "z": {"label": "z", "operator": null, "children": []}
        }"#;
        let a = tree("a", nodes, "r");
        let b = tree("b", nodes, "r");
        let classes: Vec<String> = ["r", "o", "x", "y", "z"]
            .iter()
            .map(|n| {
                format!(
                    r#"{{"ec_id": "ec_{n}", "members": [
                        {{"tree_id": "a", "node_id": "{n}"}},
                        {{"tree_id": "b", "node_id": "{n}"}}]}}"#
                )
            })
            .collect();
        let doc = format!(
            r#"{{"provision_id": "p", "classes": [{}]}}"#,
            classes.join(",")
        );
        let m = parse_matching(doc.as_bytes(), &[a.clone(), b.clone()]).unwrap();
        (a, b, m)
    }

    #[test]
    fn identical_trees_cut_at_leaf_classes_with_full_coverage() {
        let (a, b, m) = identical_pair();
        let iface = compute_interface(&m, &a, &b).unwrap();
        assert_eq!(
            iface.cut_ecs,
            ["ec_x", "ec_y", "ec_z"].iter().map(|s| s.to_string()).collect()
        );
        assert!(iface.private_vars.is_empty());
        assert_eq!(iface.cov_a, 1.0);
        assert_eq!(iface.cov_b, 1.0);
        assert_eq!(iface.cov_pair, 1.0);
    }

    #[test]
    fn frontier_abstracts_unshared_subtrees_into_private_vars() {
        // a: AND(x, y); b: AND(x, OR(y1, y2)); only roots and x are matched.
        let a = tree(
            "a",
            r#"{
                "r": {"label": "root", "operator": "AND", "children": ["x", "y"]},
                "x": {"label": "x", "operator": null, "children": []},
                "y": {"label": "y", "operator": null, "children": []}
            }"#,
            "r",
        );
        let b = tree(
            "b",
            r#"{
                "r": {"label": "root", "operator": "AND", "children": ["x", "o"]},
                "x": {"label": "x", "operator": null, "children": []},
                "o": {"label": "o", "operator": "OR", "children": ["y1", "y2"]},
                "y1": {"label": "y1", "operator": null, "children": []},
                "y2": {"label": "y2", "operator": null, "children": []}
            }"#,
            "r",
        );
        let doc = r#"{
            "provision_id": "p",
            "classes": [
                {"ec_id": "ec_root", "members": [
                    {"tree_id": "a", "node_id": "r"}, {"tree_id": "b", "node_id": "r"}]},
                {"ec_id": "ec_x", "members": [
                    {"tree_id": "a", "node_id": "x"}, {"tree_id": "b", "node_id": "x"}]},
                {"ec_id": "s_y", "members": [{"tree_id": "a", "node_id": "y"}]},
                {"ec_id": "s_o", "members": [{"tree_id": "b", "node_id": "o"}]},
                {"ec_id": "s_y1", "members": [{"tree_id": "b", "node_id": "y1"}]},
                {"ec_id": "s_y2", "members": [{"tree_id": "b", "node_id": "y2"}]}
            ]
        }"#;
        let m = parse_matching(doc.as_bytes(), &[a.clone(), b.clone()]).unwrap();
        let iface = compute_interface(&m, &a, &b).unwrap();

        assert_eq!(iface.cut_ecs, ["ec_x".to_string()].into_iter().collect());
        let owners: Vec<(&str, &str)> = iface
            .private_vars
            .values()
            .map(|p| (p.tree_id.as_str(), p.node_id.as_str()))
            .collect();
        assert_eq!(owners, vec![("a", "y"), ("b", "o")]);

        // Coverage: on/above = {ec_x, ec_root}; tree a has 3 classes, b has 5.
        assert!((iface.cov_a - 2.0 / 3.0).abs() < 1e-12);
        assert!((iface.cov_b - 2.0 / 5.0).abs() < 1e-12);
        assert!((iface.cov_pair - (2.0 / 3.0 * 2.0 / 5.0f64).sqrt()).abs() < 1e-12);

        // Compilation: AND over the cut var and the private var on each side.
        let fa = compile(&a, &iface, &m).unwrap();
        let fb = compile(&b, &iface, &m).unwrap();
        match fa {
            BoolExpr::Op(Operator::And, children) => {
                assert_eq!(children[0], BoolExpr::var("ec_x"));
                assert!(matches!(&children[1], BoolExpr::Var(v) if v.starts_with("_p:a:")));
            }
            other => panic!("unexpected {other:?}"),
        }
        match fb {
            BoolExpr::Op(Operator::And, children) => {
                assert_eq!(children[0], BoolExpr::var("ec_x"));
                assert!(matches!(&children[1], BoolExpr::Var(v) if v.starts_with("_p:b:")));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn single_leaf_pair_compiles_to_the_cut_variable() {
        let a = tree("a", r#"{"n": {"label": "only", "operator": null, "children": []}}"#, "n");
        let b = tree("b", r#"{"n": {"label": "only", "operator": null, "children": []}}"#, "n");
        let doc = r#"{
            "provision_id": "p",
            "classes": [{"ec_id": "ec_n", "members": [
                {"tree_id": "a", "node_id": "n"}, {"tree_id": "b", "node_id": "n"}]}]
        }"#;
        let m = parse_matching(doc.as_bytes(), &[a.clone(), b.clone()]).unwrap();
        let iface = compute_interface(&m, &a, &b).unwrap();
        assert_eq!(compile(&a, &iface, &m).unwrap(), BoolExpr::var("ec_n"));
    }

    #[test]
    fn no_shared_class_yields_empty_cut_and_zero_coverage() {
        let a = tree("a", r#"{"n": {"label": "only", "operator": null, "children": []}}"#, "n");
        let b = tree("b", r#"{"n": {"label": "only", "operator": null, "children": []}}"#, "n");
        let doc = r#"{
            "provision_id": "p",
            "classes": [
                {"ec_id": "sa", "members": [{"tree_id": "a", "node_id": "n"}]},
                {"ec_id": "sb", "members": [{"tree_id": "b", "node_id": "n"}]}
            ]
        }"#;
        let m = parse_matching(doc.as_bytes(), &[a.clone(), b.clone()]).unwrap();
        let iface = compute_interface(&m, &a, &b).unwrap();
        assert!(iface.cut_ecs.is_empty());
        assert_eq!(iface.cov_pair, 0.0);
        // Each side abstracts to its own private variable.
        let fa = compile(&a, &iface, &m).unwrap();
        assert!(matches!(&fa, BoolExpr::Var(v) if v.starts_with("_p:a:")));
    }

    #[test]
    fn carve_out_fork_compiles_to_same_shape_different_operator() {
        // Identical trees except NAND vs NOR at the carve-out node.
        let mk = |tree_id: &str, op: &str| {
            tree(
                tree_id,
                &format!(
                    r#"{{
                        "r": {{"label": "prohibited", "operator": "AND", "children": ["c"]}},
                        "c": {{"label": "carve-out not applicable", "operator": "{op}", "children": ["la", "le"]}},
                        "la": {{"label": "lawfully acquired", "operator": null, "children": []}},
                        "le": {{"label": "law enforcement", "operator": null, "children": []}}
                    }}"#
                ),
                "r",
            )
        };
        let a = mk("a", "NAND");
        let b = mk("b", "NOR");
        let classes: Vec<String> = ["r", "c", "la", "le"]
            .iter()
            .map(|n| {
                format!(
                    r#"{{"ec_id": "ec_{n}", "members": [
                        {{"tree_id": "a", "node_id": "{n}"}},
                        {{"tree_id": "b", "node_id": "{n}"}}]}}"#
                )
            })
            .collect();
        let doc = format!(r#"{{"provision_id": "p", "classes": [{}]}}"#, classes.join(","));
        let m = parse_matching(doc.as_bytes(), &[a.clone(), b.clone()]).unwrap();
        let iface = compute_interface(&m, &a, &b).unwrap();
        let fa = compile(&a, &iface, &m).unwrap();
        let fb = compile(&b, &iface, &m).unwrap();
        let sub = |op| {
            BoolExpr::op(
                Operator::And,
                vec![BoolExpr::op(op, vec![BoolExpr::var("ec_la"), BoolExpr::var("ec_le")])],
            )
        };
        assert_eq!(fa, sub(Operator::Nand));
        assert_eq!(fb, sub(Operator::Nor));
    }

    #[test]
    fn leaf_cut_compilation_preserves_tree_semantics() {
        // Compile tree a against the identical-pair interface and compare
        // against direct tree evaluation for every assignment of the leaves.
        let (a, b, m) = identical_pair();
        let iface = compute_interface(&m, &a, &b).unwrap();
        let fa = compile(&a, &iface, &m).unwrap();

        fn eval_tree(
            f: &Formalization,
            node: &str,
            leaf_values: &BTreeMap<&str, bool>,
        ) -> bool {
            let n = &f.nodes[node];
            if n.is_leaf() {
                leaf_values[node]
            } else {
                n.operator.unwrap().apply(
                    n.children.iter().map(|c| eval_tree(f, c, leaf_values)),
                )
            }
        }

        for mask in 0..8u32 {
            let leaves: BTreeMap<&str, bool> = [
                ("x", mask & 1 != 0),
                ("y", mask & 2 != 0),
                ("z", mask & 4 != 0),
            ]
            .into_iter()
            .collect();
            let assignment: BTreeMap<String, bool> = leaves
                .iter()
                .map(|(n, v)| (format!("ec_{n}"), *v))
                .collect();
            assert_eq!(
                fa.eval(&assignment).unwrap(),
                eval_tree(&a, "r", &leaves),
                "mask {mask}"
            );
        }
    }

    /// Pair where tree a has 10 classes with 7 on/above the interface and
    /// tree b has 10 with 5. Used here and mirrored in the acceptance suite.
    pub(crate) fn ten_class_coverage_pair() -> (Formalization, Formalization, Matching) {
        let a = tree(
            "a",
            r#"{
                "r": {"label": "r", "operator": "AND", "children": ["m1", "x4", "q"]},
                "m1": {"label": "m1", "operator": "OR", "children": ["m2"]},
                "m2": {"label": "m2", "operator": "AND", "children": ["x1", "x2", "x3"]},
                "x1": {"label": "x1", "operator": null, "children": []},
                "x2": {"label": "x2", "operator": null, "children": []},
                "x3": {"label": "x3", "operator": null, "children": []},
                "x4": {"label": "x4", "operator": null, "children": []},
                "q": {"label": "q", "operator": "AND", "children": ["q1", "q2"]},
                "q1": {"label": "q1", "operator": null, "children": []},
                "q2": {"label": "q2", "operator": null, "children": []}
            }"#,
            "r",
        );
        let b = tree(
            "b",
            r#"{
                "r": {"label": "r", "operator": "AND", "children": ["x1", "x2", "x3", "x4", "pb"]},
                "x1": {"label": "x1", "operator": null, "children": []},
                "x2": {"label": "x2", "operator": null, "children": []},
                "x3": {"label": "x3", "operator": null, "children": []},
                "x4": {"label": "x4", "operator": null, "children": []},
                "pb": {"label": "pb", "operator": "OR", "children": ["pb1", "pb2", "pb3"]},
                "pb1": {"label": "pb1", "operator": null, "children": []},
                "pb2": {"label": "pb2", "operator": null, "children": []},
                "pb3": {"label": "pb3", "operator": "NAND", "children": ["pb4"]},
                "pb4": {"label": "pb4", "operator": null, "children": []}
            }"#,
            "r",
        );
        let mut classes: Vec<String> = ["r", "x1", "x2", "x3", "x4"]
            .iter()
            .map(|n| {
                format!(
                    r#"{{"ec_id": "ec_{n}", "members": [
                        {{"tree_id": "a", "node_id": "{n}"}},
                        {{"tree_id": "b", "node_id": "{n}"}}]}}"#
                )
            })
            .collect();
        for n in ["m1", "m2", "q", "q1", "q2"] {
            classes.push(format!(
                r#"{{"ec_id": "s_a_{n}", "members": [{{"tree_id": "a", "node_id": "{n}"}}]}}"#
            ));
        }
        for n in ["pb", "pb1", "pb2", "pb3", "pb4"] {
            classes.push(format!(
                r#"{{"ec_id": "s_b_{n}", "members": [{{"tree_id": "b", "node_id": "{n}"}}]}}"#
            ));
        }
        let doc = format!(r#"{{"provision_id": "p", "classes": [{}]}}"#, classes.join(","));
        let m = parse_matching(doc.as_bytes(), &[a.clone(), b.clone()]).unwrap();
        (a, b, m)
    }

    #[test]
    fn coverage_formula_on_ten_class_fixture() {
        let (a, b, m) = ten_class_coverage_pair();
        let iface = compute_interface(&m, &a, &b).unwrap();
        assert_eq!(
            iface.cut_ecs,
            ["ec_x1", "ec_x2", "ec_x3", "ec_x4"].iter().map(|s| s.to_string()).collect()
        );
        assert!((iface.cov_a - 0.7).abs() < 1e-12, "cov_a = {}", iface.cov_a);
        assert!((iface.cov_b - 0.5).abs() < 1e-12, "cov_b = {}", iface.cov_b);
        assert!((iface.cov_pair - 0.35f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn cut_is_an_antichain_in_both_trees() {
        // Chain tree matched against a shallower tree: a = g -> e -> c,
        // b = root(unshared) -> {e', g'(leaf)} with c matched under e'.
        let a = tree(
            "a",
            r#"{
                "g": {"label": "g", "operator": "AND", "children": ["e"]},
                "e": {"label": "e", "operator": "AND", "children": ["c"]},
                "c": {"label": "c", "operator": null, "children": []}
            }"#,
            "g",
        );
        let b = tree(
            "b",
            r#"{
                "r": {"label": "r", "operator": "AND", "children": ["e", "g"]},
                "e": {"label": "e", "operator": "AND", "children": ["c"]},
                "g": {"label": "g", "operator": null, "children": []},
                "c": {"label": "c", "operator": null, "children": []}
            }"#,
            "r",
        );
        let doc = r#"{
            "provision_id": "p",
            "classes": [
                {"ec_id": "ec_g", "members": [
                    {"tree_id": "a", "node_id": "g"}, {"tree_id": "b", "node_id": "g"}]},
                {"ec_id": "ec_e", "members": [
                    {"tree_id": "a", "node_id": "e"}, {"tree_id": "b", "node_id": "e"}]},
                {"ec_id": "ec_c", "members": [
                    {"tree_id": "a", "node_id": "c"}, {"tree_id": "b", "node_id": "c"}]},
                {"ec_id": "s_r", "members": [{"tree_id": "b", "node_id": "r"}]}
            ]
        }"#;
        let m = parse_matching(doc.as_bytes(), &[a.clone(), b.clone()]).unwrap();
        let iface = compute_interface(&m, &a, &b).unwrap();
        // Whatever the cut is, it must be an antichain in both trees.
        let ia = TreeIndex::new(&a);
        let ib = TreeIndex::new(&b);
        for d in &iface.cut_ecs {
            for e in &iface.cut_ecs {
                if d == e {
                    continue;
                }
                let na = |ec: &str| m.class(ec).unwrap().node_in("a").unwrap();
                let nb = |ec: &str| m.class(ec).unwrap().node_in("b").unwrap();
                assert!(!ia.is_strict_ancestor(na(e), na(d)));
                assert!(!ib.is_strict_ancestor(nb(e), nb(d)));
            }
        }
        // Both sides stay compilable.
        assert!(compile(&a, &iface, &m).is_ok());
        assert!(compile(&b, &iface, &m).is_ok());
    }
}
