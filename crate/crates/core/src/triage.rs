//! Localizes each edge case to its root causes, groups edge cases into
//! canonical signatures across pairs, and selects representative edge cases
//! per provision.
//!
//! A root cause of a prime implicant is a shared class on or above the
//! interface whose two compiled sub-formulas are forced to differ under every
//! completion of the implicant, and none of whose shared child classes has
//! that property. Only shared classes qualify — a private sub-formula has no
//! counterpart to differ from.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::edgecase::{EdgeCaseCover, PrimeImplicant, SolverLimits};
use crate::expr::BoolExpr;
use crate::interface::{classes_on_or_above, Interface, InterfaceError, TreeCompiler};
use crate::matching::Matching;
use crate::model::{Formalization, Operator};
use crate::sat::{tseitin, Literal, SatError, SatOutcome, Solver};

/// Which side a prime implicant forces to conclude true, if either.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum CausePolarity {
    TrueSide(String),
    Mixed,
}

/// A shared class at which the pair's sub-formulas are forced to differ,
/// minimal over shared children.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RootCause {
    pub ec_id: String,
    pub polarity: CausePolarity,
}

/// The local shape of one side at a root cause: the operator with NAND/NOR
/// normalized to a negated AND/OR, and the sorted child class ids. A leaf
/// has no operator and no children.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SideShape {
    pub operator: Option<Operator>,
    pub negated: bool,
    pub children: Vec<String>,
}

/// One root cause entry of a signature. When the signature is forced,
/// `true_side` is the side concluding true; for a mixed signature the two
/// sides are in canonical sorted order instead.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SignatureEntry {
    pub ec_id: String,
    pub true_side: SideShape,
    pub false_side: SideShape,
}

/// Canonical disagreement shape: the per-root-cause local shapes plus
/// whether the implicant forces one side true. Equal shapes hash equally
/// regardless of which pair witnessed them.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Signature {
    pub forced: bool,
    pub entries: Vec<SignatureEntry>,
}

impl Signature {
    /// Hex digest of the canonical serialization.
    pub fn digest(&self) -> String {
        let body = serde_json::to_string(self).expect("signature serializes");
        let mut hasher = Sha256::new();
        hasher.update(body.as_bytes());
        format!("{:x}", hasher.finalize())
    }
}

/// The chosen witness of one signature class.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Representative {
    pub signature: Signature,
    pub digest: String,
    pub pair_a: String,
    pub pair_b: String,
    pub pi: PrimeImplicant,
    pub root_causes: Vec<RootCause>,
    pub class_size: usize,
}

#[derive(Debug, Error)]
pub enum TriageError {
    #[error(transparent)]
    Interface(#[from] InterfaceError),
    #[error(transparent)]
    Sat(#[from] SatError),
}

/// Everything needed to triage one pair: matching, trees, interface, and the
/// compiled root functions.
pub struct PairContext<'a> {
    pub m: &'a Matching,
    pub fa: &'a Formalization,
    pub fb: &'a Formalization,
    pub iface: &'a Interface,
    compiler_a: TreeCompiler<'a>,
    compiler_b: TreeCompiler<'a>,
    root_a: BoolExpr,
    root_b: BoolExpr,
    limits: SolverLimits,
}

impl<'a> PairContext<'a> {
    pub fn new(
        m: &'a Matching,
        fa: &'a Formalization,
        fb: &'a Formalization,
        iface: &'a Interface,
        limits: SolverLimits,
    ) -> Result<Self, TriageError> {
        let compiler_a = TreeCompiler::new(fa, iface, m)?;
        let compiler_b = TreeCompiler::new(fb, iface, m)?;
        let root_a = compiler_a.compile_root()?;
        let root_b = compiler_b.compile_root()?;
        Ok(PairContext { m, fa, fb, iface, compiler_a, compiler_b, root_a, root_b, limits })
    }

    pub fn compiled(&self) -> (&BoolExpr, &BoolExpr) {
        (&self.root_a, &self.root_b)
    }
}

/// Solves `pi` (restricted to the formula's variables) conjoined with the
/// formula asserted to `polarity`; UNSAT means the implicant forces the
/// formula to the opposite value.
fn forced_against(
    expr: &BoolExpr,
    polarity: bool,
    pi: &PrimeImplicant,
    limits: SolverLimits,
) -> Result<bool, TriageError> {
    let cnf = tseitin(expr, polarity);
    let mut solver = Solver::new(&cnf);
    solver.set_step_limit(limits.max_steps);
    let assumptions: Vec<Literal> = pi
        .fixed
        .iter()
        .filter(|(var, _)| cnf.originals().contains(*var))
        .map(|(var, val)| Literal::new(var.clone(), *val))
        .collect();
    Ok(matches!(solver.solve(&assumptions)?, SatOutcome::Unsat(_)))
}

/// Shared classes on/above the interface whose sub-formulas the implicant
/// forces apart, filtered to the deepest ones.
pub fn root_causes(
    ctx: &PairContext,
    pi: &PrimeImplicant,
) -> Result<Vec<RootCause>, TriageError> {
    let shared_above: BTreeSet<String> =
        classes_on_or_above(ctx.m, ctx.fa, ctx.fb, ctx.iface)
            .into_iter()
            .filter(|ec| {
                let class = ctx.m.class(ec).expect("class exists");
                class.node_in(&ctx.fa.tree_id).is_some()
                    && class.node_in(&ctx.fb.tree_id).is_some()
            })
            .collect();

    // Condition (i) per candidate: pi AND NOT (g_a XOR g_b) is UNSAT.
    let mut forced: BTreeSet<&str> = BTreeSet::new();
    for ec in &shared_above {
        let node_a = ctx.m.class(ec).unwrap().node_in(&ctx.fa.tree_id).unwrap();
        let node_b = ctx.m.class(ec).unwrap().node_in(&ctx.fb.tree_id).unwrap();
        let (ga, gb) = match (
            ctx.compiler_a.compile_at(node_a)?,
            ctx.compiler_b.compile_at(node_b)?,
        ) {
            (Some(ga), Some(gb)) => (ga, gb),
            // No compiled counterpart on one side; not a candidate.
            _ => continue,
        };
        let disagreement = BoolExpr::xor(ga, gb);
        if forced_against(&disagreement, false, pi, ctx.limits)? {
            forced.insert(ec.as_str());
        }
    }

    // Polarity of the whole implicant: which root function it forces true.
    // Asserting f_A false and finding UNSAT under pi means pi entails f_A.
    let polarity = if forced_against(&ctx.root_a, false, pi, ctx.limits)? {
        CausePolarity::TrueSide(ctx.fa.tree_id.clone())
    } else if forced_against(&ctx.root_a, true, pi, ctx.limits)? {
        CausePolarity::TrueSide(ctx.fb.tree_id.clone())
    } else {
        CausePolarity::Mixed
    };

    // Deepest: drop candidates with a forced shared child class.
    let mut out = Vec::new();
    for ec in &forced {
        let mut child_forced = false;
        for tree in [ctx.fa, ctx.fb] {
            let node = ctx.m.class(ec).unwrap().node_in(&tree.tree_id).unwrap();
            for child in &tree.nodes[node].children {
                if let Some(child_ec) = ctx.m.ec_of(&tree.tree_id, child) {
                    if forced.contains(child_ec) {
                        child_forced = true;
                    }
                }
            }
        }
        if !child_forced {
            out.push(RootCause { ec_id: (*ec).to_string(), polarity: polarity.clone() });
        }
    }
    Ok(out)
}

fn side_shape(tree: &Formalization, m: &Matching, ec_id: &str) -> SideShape {
    let node_id = m.class(ec_id).and_then(|c| c.node_in(&tree.tree_id));
    let Some(node_id) = node_id else {
        return SideShape { operator: None, negated: false, children: Vec::new() };
    };
    let node = &tree.nodes[node_id];
    match node.operator {
        None => SideShape { operator: None, negated: false, children: Vec::new() },
        Some(op) => {
            let (base, negated) = op.base_and_negation();
            let mut children: Vec<String> = node
                .children
                .iter()
                .filter_map(|c| m.ec_of(&tree.tree_id, c).map(|e| e.to_string()))
                .collect();
            children.sort();
            SideShape { operator: Some(base), negated, children }
        }
    }
}

/// Canonical signature of one implicant: local shapes at each deepest root
/// cause, sides ordered by which one the implicant forces true (canonically
/// sorted when mixed).
pub fn signature_of(
    ctx: &PairContext,
    causes: &[RootCause],
) -> Signature {
    let forced_true_a = causes
        .first()
        .map(|c| c.polarity == CausePolarity::TrueSide(ctx.fa.tree_id.clone()));
    let mixed = causes
        .first()
        .map(|c| c.polarity == CausePolarity::Mixed)
        .unwrap_or(true);

    let mut entries: Vec<SignatureEntry> = causes
        .iter()
        .map(|cause| {
            let shape_a = side_shape(ctx.fa, ctx.m, &cause.ec_id);
            let shape_b = side_shape(ctx.fb, ctx.m, &cause.ec_id);
            let (true_side, false_side) = if mixed {
                // Canonical order, not a semantic claim.
                if shape_a <= shape_b {
                    (shape_a, shape_b)
                } else {
                    (shape_b, shape_a)
                }
            } else if forced_true_a == Some(true) {
                (shape_a, shape_b)
            } else {
                (shape_b, shape_a)
            };
            SignatureEntry { ec_id: cause.ec_id.clone(), true_side, false_side }
        })
        .collect();
    entries.sort();
    Signature { forced: !mixed, entries }
}

/// One pair's triage input: its context and enumerated cover.
pub struct PairCover<'a> {
    pub ctx: &'a PairContext<'a>,
    pub cover: &'a EdgeCaseCover,
}

/// Groups the surviving implicants of one provision into signature classes
/// and picks one representative per class.
///
/// Pairs below the coverage threshold and pairs whose root operators differ
/// are dropped. Within a class the implicant with the fewest fixed variables
/// wins, ties broken by pair id then by the fixed-variable list. When there
/// are more classes than the cap, the classes with the largest
/// representatives are dropped first, same tie-break.
pub fn select_representatives(
    inputs: &[PairCover<'_>],
    rep_cap: usize,
    cov_threshold: f64,
) -> Result<Vec<Representative>, TriageError> {
    struct Member {
        pair: (String, String),
        pi: PrimeImplicant,
        root_causes: Vec<RootCause>,
    }
    let mut classes: BTreeMap<String, (Signature, Vec<Member>)> = BTreeMap::new();

    for input in inputs {
        let ctx = input.ctx;
        if ctx.iface.cov_pair < cov_threshold {
            continue;
        }
        if ctx.fa.root_operator() != ctx.fb.root_operator() {
            continue;
        }
        for pi in &input.cover.pis {
            let causes = root_causes(ctx, pi)?;
            let signature = signature_of(ctx, &causes);
            let digest = signature.digest();
            classes
                .entry(digest)
                .or_insert_with(|| (signature, Vec::new()))
                .1
                .push(Member {
                    pair: (ctx.fa.tree_id.clone(), ctx.fb.tree_id.clone()),
                    pi: pi.clone(),
                    root_causes: causes,
                });
        }
    }

    fn member_key(m: &Member) -> (usize, (String, String), Vec<(String, bool)>) {
        (
            m.pi.len(),
            m.pair.clone(),
            m.pi.fixed.iter().map(|(k, v)| (k.clone(), *v)).collect(),
        )
    }

    let mut representatives: Vec<Representative> = classes
        .into_iter()
        .map(|(digest, (signature, members))| {
            let class_size = members.len();
            let best = members
                .into_iter()
                .min_by_key(member_key)
                .expect("class has at least one member");
            Representative {
                signature,
                digest,
                pair_a: best.pair.0,
                pair_b: best.pair.1,
                pi: best.pi,
                root_causes: best.root_causes,
                class_size,
            }
        })
        .collect();

    // Keep the smallest representatives, deterministically.
    representatives.sort_by(|a, b| {
        (a.pi.len(), &a.pair_a, &a.pair_b, a.pi.fixed.iter().collect::<Vec<_>>(), &a.digest)
            .cmp(&(b.pi.len(), &b.pair_a, &b.pair_b, b.pi.fixed.iter().collect::<Vec<_>>(), &b.digest))
    });
    representatives.truncate(rep_cap);
    Ok(representatives)
}
