//! Provision-level orchestration: run the interface, equivalence, and cover
//! analysis over every unordered pair of formalizations, and triage the
//! results into representatives.
//!
//! Pair analyses are independent of one another. With the `parallel` feature
//! (default) they run on rayon; `analyze_provision_seq` is always available
//! and is the fallback without the feature. Output order is the sorted pair
//! order regardless of schedule.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::edgecase::{enumerate_cover, EdgeCaseCover, EdgeCaseError, SolverLimits};
use crate::interface::{compute_interface, Interface, InterfaceError};
use crate::matching::Matching;
use crate::metrics::PairRecord;
use crate::model::Formalization;
use crate::triage::{
    select_representatives, PairContext, PairCover, Representative, TriageError,
};

#[derive(Debug, Clone, Copy)]
pub struct AnalyzeOptions {
    /// Hard cap on the prime implicants enumerated per pair.
    pub pi_cap: Option<usize>,
    pub limits: SolverLimits,
}

impl Default for AnalyzeOptions {
    fn default() -> Self {
        AnalyzeOptions {
            pi_cap: Some(crate::edgecase::DEFAULT_PI_CAP),
            limits: SolverLimits::default(),
        }
    }
}

/// Analysis output for one pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairAnalysis {
    pub provision_id: String,
    pub tree_a: String,
    pub tree_b: String,
    pub interface: Interface,
    pub cover: EdgeCaseCover,
    pub equivalent: bool,
}

impl PairAnalysis {
    pub fn record(&self) -> PairRecord {
        PairRecord {
            provision: self.provision_id.clone(),
            pair_a: self.tree_a.clone(),
            pair_b: self.tree_b.clone(),
            coverage: self.interface.cov_pair,
            equivalent: self.equivalent,
            pi_count: self.cover.len(),
            cap_hit: self.cover.cap_hit,
        }
    }
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("pair ({a}, {b}): {source}")]
    Pair { a: String, b: String, source: PairFailure },
    #[error(transparent)]
    Triage(#[from] TriageError),
}

#[derive(Debug, Error)]
pub enum PairFailure {
    #[error(transparent)]
    Interface(#[from] InterfaceError),
    #[error(transparent)]
    EdgeCase(#[from] EdgeCaseError),
}

/// All unordered pairs of the given trees, in sorted order.
pub fn pair_indices(n: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            out.push((i, j));
        }
    }
    out
}

fn analyze_pair(
    m: &Matching,
    a: &Formalization,
    b: &Formalization,
    opts: &AnalyzeOptions,
) -> Result<PairAnalysis, PipelineError> {
    let fail = |source: PairFailure| PipelineError::Pair {
        a: a.tree_id.clone(),
        b: b.tree_id.clone(),
        source,
    };
    let iface = compute_interface(m, a, b).map_err(|e| fail(e.into()))?;
    let fa = crate::interface::compile(a, &iface, m).map_err(|e| fail(e.into()))?;
    let fb = crate::interface::compile(b, &iface, m).map_err(|e| fail(e.into()))?;
    let cover =
        enumerate_cover(&fa, &fb, opts.pi_cap, opts.limits).map_err(|e| fail(e.into()))?;
    let equivalent = cover.complete && cover.is_empty();
    Ok(PairAnalysis {
        provision_id: m.provision_id.clone(),
        tree_a: a.tree_id.clone(),
        tree_b: b.tree_id.clone(),
        interface: iface,
        cover,
        equivalent,
    })
}

/// Sequentially analyzes every unordered pair. Trees are taken in sorted
/// `tree_id` order; per-pair failures are reported in place, the run
/// continues.
pub fn analyze_provision_seq(
    m: &Matching,
    trees: &[Formalization],
    opts: &AnalyzeOptions,
) -> Vec<Result<PairAnalysis, PipelineError>> {
    let sorted = sorted_trees(trees);
    pair_indices(sorted.len())
        .into_iter()
        .map(|(i, j)| analyze_pair(m, sorted[i], sorted[j], opts))
        .collect()
}

#[cfg(feature = "parallel")]
/// Rayon-parallel pair analysis; output order matches the sequential one.
pub fn analyze_provision_par(
    m: &Matching,
    trees: &[Formalization],
    opts: &AnalyzeOptions,
) -> Vec<Result<PairAnalysis, PipelineError>> {
    use rayon::prelude::*;
    let sorted = sorted_trees(trees);
    pair_indices(sorted.len())
        .into_par_iter()
        .map(|(i, j)| analyze_pair(m, sorted[i], sorted[j], opts))
        .collect()
}

/// Pair analysis over all unordered pairs: parallel when the `parallel`
/// feature is enabled, sequential otherwise.
pub fn analyze_provision(
    m: &Matching,
    trees: &[Formalization],
    opts: &AnalyzeOptions,
) -> Vec<Result<PairAnalysis, PipelineError>> {
    #[cfg(feature = "parallel")]
    {
        analyze_provision_par(m, trees, opts)
    }
    #[cfg(not(feature = "parallel"))]
    {
        analyze_provision_seq(m, trees, opts)
    }
}

fn sorted_trees(trees: &[Formalization]) -> Vec<&Formalization> {
    let mut sorted: Vec<&Formalization> = trees.iter().collect();
    sorted.sort_by(|a, b| a.tree_id.cmp(&b.tree_id));
    sorted
}

/// Triage of completed analyses: rebuilds each pair's context and selects
/// representatives per the coverage threshold and cap.
pub fn triage_provision(
    m: &Matching,
    trees: &[Formalization],
    analyses: &[PairAnalysis],
    rep_cap: usize,
    cov_threshold: f64,
    limits: SolverLimits,
) -> Result<Vec<Representative>, PipelineError> {
    let by_id = |id: &str| trees.iter().find(|t| t.tree_id == id);
    let mut contexts = Vec::new();
    for analysis in analyses {
        let (Some(fa), Some(fb)) = (by_id(&analysis.tree_a), by_id(&analysis.tree_b)) else {
            continue;
        };
        let ctx = PairContext::new(m, fa, fb, &analysis.interface, limits)
            .map_err(PipelineError::Triage)?;
        contexts.push((ctx, &analysis.cover));
    }
    let inputs: Vec<PairCover> = contexts
        .iter()
        .map(|(ctx, cover)| PairCover { ctx, cover })
        .collect();
    select_representatives(&inputs, rep_cap, cov_threshold).map_err(PipelineError::Triage)
}
