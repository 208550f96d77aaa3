//! Ranking metrics and run aggregation.
//!
//! [`auc`] is the Mann–Whitney statistic: the fraction of (group 0, group 1)
//! pairs in which the group-1 sample scores higher, with ties counted as one
//! half. [`auc_fg`] applies it to positive samples only, with atypical
//! positives as group 0 and typical positives as group 1.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::labeler::Subcategory;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Group {
    Zero,
    One,
}

impl Group {
    pub fn flipped(self) -> Self {
        match self {
            Group::Zero => Group::One,
            Group::One => Group::Zero,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoredSample {
    pub score: f64,
    pub group: Group,
}

impl ScoredSample {
    pub fn new(score: f64, group: Group) -> Self {
        ScoredSample { score, group }
    }
}

/// Area under the ROC curve, in `O(n log n)`.
///
/// Ties are handled block by block: a block holding `c0` group-0 and `c1`
/// group-1 samples contributes `c1 * below0 + c0 * c1 / 2`, where `below0`
/// counts group-0 samples in lower blocks. The statistic is accumulated as
/// an integer count of half-pairs, so the result is the exact ratio rounded
/// once.
pub fn auc(samples: &[ScoredSample]) -> Result<f64> {
    if let Some(bad) = samples.iter().find(|s| !s.score.is_finite()) {
        return Err(Error::InvalidInput(format!("non-finite score {}", bad.score)));
    }
    let n1 = samples.iter().filter(|s| s.group == Group::One).count() as u64;
    let n0 = samples.len() as u64 - n1;
    if n0 == 0 || n1 == 0 {
        return Err(Error::UndefinedMetric(format!(
            "AUC needs both groups (group 0: {n0}, group 1: {n1})"
        )));
    }

    let mut sorted: Vec<&ScoredSample> = samples.iter().collect();
    sorted.sort_unstable_by(|a, b| a.score.partial_cmp(&b.score).unwrap_or(Ordering::Equal));

    let mut half_pairs: u64 = 0;
    let mut below0: u64 = 0;
    for block in sorted.chunk_by(|a, b| a.score == b.score) {
        let c1 = block.iter().filter(|s| s.group == Group::One).count() as u64;
        let c0 = block.len() as u64 - c1;
        half_pairs += 2 * c1 * below0 + c0 * c1;
        below0 += c0;
    }
    Ok(half_pairs as f64 / (2 * n0 * n1) as f64)
}

/// AUC between atypical (group 0) and typical (group 1) positives.
pub fn auc_fg(positives: &[(f64, Subcategory)]) -> Result<f64> {
    let scored: Vec<ScoredSample> = positives
        .iter()
        .map(|&(score, sub)| {
            let group = match sub {
                Subcategory::Atypical => Group::Zero,
                Subcategory::Typical => Group::One,
            };
            ScoredSample::new(score, group)
        })
        .collect();
    auc(&scored).map_err(|e| match e {
        Error::UndefinedMetric(_) => {
            let atypical = positives.iter().filter(|p| p.1 == Subcategory::Atypical).count();
            Error::UndefinedMetric(format!(
                "AUC-FG needs atypical and typical positives (atypical: {atypical}, typical: {})",
                positives.len() - atypical
            ))
        }
        other => other,
    })
}

/// Mean and spread of one metric over independent runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub name: String,
    pub mean: f64,
    /// Sample standard deviation (`n - 1` divisor); zero for a single run.
    pub std: f64,
    pub per_run: Vec<f64>,
}

pub fn aggregate_runs(name: impl Into<String>, values: &[f64]) -> Result<MetricReport> {
    if values.is_empty() {
        return Err(Error::InvalidInput("no runs to aggregate".into()));
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let std = if values.len() < 2 {
        0.0
    } else {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    };
    Ok(MetricReport {
        name: name.into(),
        mean,
        std,
        per_run: values.to_vec(),
    })
}
