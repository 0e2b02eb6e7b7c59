//! Trade-off metrics: utility loss, privacy leakage and true revealed records.

use alloc::vec::Vec;

use crate::attack::AttackOutcome;
use crate::{Error, Result};

/// `1 - acc_private / acc_nonprivate`. Negative when the private model wins.
pub fn utility_loss(acc_private: f64, acc_nonprivate: f64) -> Result<f64> {
    if !(acc_nonprivate > 0.0) {
        return Err(Error::UndefinedMetric("utility loss needs a non-zero baseline accuracy"));
    }
    Ok(1.0 - acc_private / acc_nonprivate)
}

/// True positive rate minus false positive rate.
pub fn privacy_leakage(outcome: &AttackOutcome) -> Result<f64> {
    let (tpr, fpr) = rates(outcome)?;
    Ok(tpr - fpr)
}

/// Training members the attack flagged.
pub fn true_revealed(outcome: &AttackOutcome) -> usize {
    outcome.tp
}

fn rates(outcome: &AttackOutcome) -> Result<(f64, f64)> {
    if outcome.members() == 0 {
        return Err(Error::UndefinedMetric("no member records"));
    }
    if outcome.non_members() == 0 {
        return Err(Error::UndefinedMetric("no non-member records"));
    }
    Ok((
        outcome.tp as f64 / outcome.members() as f64,
        outcome.fp as f64 / outcome.non_members() as f64,
    ))
}

/// All metrics of one (mechanism, epsilon, seed) run.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MetricRow {
    pub acc_nonprivate: f64,
    pub acc_private: f64,
    pub utility_loss: f64,
    pub tpr: f64,
    pub fpr: f64,
    pub privacy_leakage: f64,
    pub true_revealed: usize,
    pub n_members: usize,
}

impl MetricRow {
    pub fn compute(acc_nonprivate: f64, acc_private: f64, outcome: &AttackOutcome) -> Result<Self> {
        let (tpr, fpr) = rates(outcome)?;
        Ok(MetricRow {
            acc_nonprivate,
            acc_private,
            utility_loss: utility_loss(acc_private, acc_nonprivate)?,
            tpr,
            fpr,
            privacy_leakage: tpr - fpr,
            true_revealed: true_revealed(outcome),
            n_members: outcome.members(),
        })
    }
}

/// Mean and sample standard deviation (`n - 1` denominator, 0 for one value).
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
    pub count: usize,
}

pub fn mean_std(values: &[f64]) -> Option<MeanStd> {
    if values.is_empty() {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let std = if values.len() > 1 {
        libm::sqrt(values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0))
    } else {
        0.0
    };
    Some(MeanStd {
        mean,
        std,
        count: values.len(),
    })
}

/// Spearman rank correlation with average ranks for ties. `None` when either
/// side is constant or the lengths differ or are below 2.
pub fn spearman(a: &[f64], b: &[f64]) -> Option<f64> {
    if a.len() != b.len() || a.len() < 2 {
        return None;
    }
    let (ra, rb) = (ranks(a), ranks(b));
    let n = a.len() as f64;
    let (ma, mb) = (ra.iter().sum::<f64>() / n, rb.iter().sum::<f64>() / n);
    let mut cov = 0.0;
    let mut va = 0.0;
    let mut vb = 0.0;
    for (x, y) in ra.iter().zip(&rb) {
        cov += (x - ma) * (y - mb);
        va += (x - ma) * (x - ma);
        vb += (y - mb) * (y - mb);
    }
    if va == 0.0 || vb == 0.0 {
        return None;
    }
    Some(cov / libm::sqrt(va * vb))
}

fn ranks(v: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&i, &j| v[i].total_cmp(&v[j]));
    let mut out = alloc::vec![0.0; v.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && v[order[j + 1]] == v[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            out[k] = rank;
        }
        i = j + 1;
    }
    out
}
