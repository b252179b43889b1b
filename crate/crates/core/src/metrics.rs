//! Aggregate statistics over analyzed pairs: equivalence rates per coverage
//! bucket, per-model non-equivalence fractions, and rank correlation, plus
//! CSV/JSON report emission.
//!
//! These are validated on synthetic fixtures only; the concrete percentages
//! any particular model population produces depend on the upstream generators
//! and are not reproducible targets.

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// One analyzed pair. A pair that hit the enumeration cap counts as
/// non-equivalent and its `pi_count` is a lower bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairRecord {
    pub provision: String,
    pub pair_a: String,
    pub pair_b: String,
    pub coverage: f64,
    pub equivalent: bool,
    pub pi_count: usize,
    pub cap_hit: bool,
}

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("bucket edges must start at 0, end at 1, and strictly increase")]
    BadEdges,
    #[error("series lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),
    /// Too short to rank, or a series without variation.
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

/// Share of equivalent pairs per coverage bucket. Buckets are half-open
/// `[lo, hi)` with the last closed; edges must span `[0, 1]` so every record
/// lands in exactly one bucket.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BucketStat {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
    /// `None` for an empty bucket.
    pub equivalent_share: Option<f64>,
}

pub fn bucket_equivalence(
    records: &[PairRecord],
    edges: &[f64],
) -> Result<Vec<BucketStat>, MetricsError> {
    if edges.len() < 2
        || edges.first() != Some(&0.0)
        || edges.last() != Some(&1.0)
        || edges.windows(2).any(|w| w[0] >= w[1])
    {
        return Err(MetricsError::BadEdges);
    }
    let mut stats: Vec<(usize, usize)> = vec![(0, 0); edges.len() - 1];
    for r in records {
        let last = stats.len() - 1;
        let bucket = edges[1..]
            .iter()
            .position(|hi| r.coverage < *hi)
            .unwrap_or(last);
        stats[bucket].0 += 1;
        if r.equivalent {
            stats[bucket].1 += 1;
        }
    }
    Ok(stats
        .into_iter()
        .enumerate()
        .map(|(i, (count, equivalent))| BucketStat {
            lo: edges[i],
            hi: edges[i + 1],
            count,
            equivalent_share: (count > 0).then(|| equivalent as f64 / count as f64),
        })
        .collect())
}

/// For each model, the fraction of its pairs (with coverage at least
/// `min_coverage`) that are non-equivalent. Models absent after the filter
/// are omitted.
pub fn model_nonequivalence(
    records: &[PairRecord],
    min_coverage: f64,
) -> BTreeMap<String, f64> {
    let mut tallies: BTreeMap<&str, (usize, usize)> = BTreeMap::new();
    for r in records.iter().filter(|r| r.coverage >= min_coverage) {
        for model in [r.pair_a.as_str(), r.pair_b.as_str()] {
            let t = tallies.entry(model).or_insert((0, 0));
            t.0 += 1;
            if !r.equivalent {
                t.1 += 1;
            }
        }
    }
    tallies
        .into_iter()
        .map(|(model, (total, non_eq))| (model.to_string(), non_eq as f64 / total as f64))
        .collect()
}

/// Spearman rank correlation with average ranks for ties.
pub fn spearman_rho(xs: &[f64], ys: &[f64]) -> Result<f64, MetricsError> {
    if xs.len() != ys.len() {
        return Err(MetricsError::LengthMismatch(xs.len(), ys.len()));
    }
    if xs.len() < 2 {
        return Err(MetricsError::DegenerateInput(format!(
            "need at least 2 observations, got {}",
            xs.len()
        )));
    }
    let rx = average_ranks(xs);
    let ry = average_ranks(ys);
    pearson(&rx, &ry)
}

fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).expect("no NaN in series"));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        // 1-based ranks, ties share the average of their positions.
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for k in i..=j {
            ranks[order[k]] = avg;
        }
        i = j + 1;
    }
    ranks
}

fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64, MetricsError> {
    let n = xs.len() as f64;
    let mean = |s: &[f64]| s.iter().sum::<f64>() / n;
    let (mx, my) = (mean(xs), mean(ys));
    let mut cov = 0.0;
    let mut vx = 0.0;
    let mut vy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        cov += (x - mx) * (y - my);
        vx += (x - mx) * (x - mx);
        vy += (y - my) * (y - my);
    }
    if vx == 0.0 || vy == 0.0 {
        return Err(MetricsError::DegenerateInput(
            "a series without variation has no rank correlation".to_string(),
        ));
    }
    Ok(cov / (vx * vy).sqrt())
}

/// Writes records as CSV with the fixed column set
/// `provision,pair_a,pair_b,coverage,equivalent,pi_count,cap_hit`.
pub fn write_records_csv<W: Write>(w: W, records: &[PairRecord]) -> Result<(), MetricsError> {
    let mut writer = csv::Writer::from_writer(w);
    for r in records {
        writer.serialize(r)?;
    }
    writer.flush()?;
    Ok(())
}

/// Writes records as a JSON array.
pub fn write_records_json<W: Write>(
    mut w: W,
    records: &[PairRecord],
) -> Result<(), MetricsError> {
    let body = serde_json::to_string_pretty(records).expect("records serialize");
    writeln!(w, "{body}")?;
    Ok(())
}
