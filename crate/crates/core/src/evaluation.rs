//! Model-quality and agreement metrics: hard-assignment BIC over the product
//! family, normalized mutual information between partitions, and the
//! empirical leakage audit of fitted models.

use serde::Serialize;

use crate::data::DataMatrix;
use crate::error::{Error, Result};
use crate::optimizer::ClusteringResult;

#[derive(Debug, Clone, Serialize)]
pub struct EvaluationReport {
    pub bic: f64,
    pub log_likelihood: f64,
    pub free_params: usize,
    pub nmi: Option<f64>,
    pub per_cluster_leakage: Vec<f64>,
    pub max_leakage: f64,
    pub final_k: usize,
}

/// Free parameters of a k-component product-family mixture over `dim`
/// coordinates: per cluster one constrained 1-D Gaussian (2), the rest-factor
/// mean (dim - 1) and symmetric covariance ((dim-1) dim / 2), plus k - 1 free
/// priors.
pub fn free_params(k: usize, dim: usize) -> usize {
    let per_cluster = 2 + (dim - 1) + (dim - 1) * dim / 2;
    k * per_cluster + (k - 1)
}

/// Hard-assignment log-likelihood: every row scored against the model it is
/// assigned to, prior included.
pub fn log_likelihood(result: &ClusteringResult, data: &DataMatrix) -> Result<f64> {
    if data.rows() != result.assignment.len() {
        return Err(Error::input(format!(
            "result covers {} rows, data has {}",
            result.assignment.len(),
            data.rows()
        )));
    }
    if result.models.is_empty() {
        return Err(Error::input("result has no clusters"));
    }
    let canonical = result.hyperplane.canonicalize().apply_matrix(data)?;
    let mut ll = 0.0;
    for (row, &c) in canonical.iter_rows().zip(&result.assignment) {
        ll += result.models[c].log_density(row);
    }
    Ok(ll)
}

/// BIC of a fitted result: `-2 LL + P ln(n)`, lower is better.
pub fn bic(result: &ClusteringResult, data: &DataMatrix) -> Result<f64> {
    let ll = log_likelihood(result, data)?;
    let p = free_params(result.models.len(), data.cols());
    Ok(-2.0 * ll + p as f64 * (data.rows() as f64).ln())
}

/// Normalized mutual information between two labelings, natural logs,
/// normalized by the geometric mean of the entropies. Identical partitions
/// score 1 (including the single-cluster case); when either side has zero
/// entropy and the partitions differ the score is 0.
pub fn nmi(labels_a: &[usize], labels_b: &[usize]) -> Result<f64> {
    if labels_a.len() != labels_b.len() {
        return Err(Error::input(format!(
            "labelings have different lengths: {} vs {}",
            labels_a.len(),
            labels_b.len()
        )));
    }
    if labels_a.is_empty() {
        return Err(Error::input("labelings must be nonempty"));
    }
    if partitions_identical(labels_a, labels_b) {
        return Ok(1.0);
    }
    let n = labels_a.len() as f64;
    let (ka, ia) = compact_labels(labels_a);
    let (kb, ib) = compact_labels(labels_b);
    let mut counts = vec![0usize; ka * kb];
    let mut row = vec![0usize; ka];
    let mut col = vec![0usize; kb];
    for (&a, &b) in ia.iter().zip(&ib) {
        counts[a * kb + b] += 1;
        row[a] += 1;
        col[b] += 1;
    }
    let entropy = |c: &[usize]| -> f64 {
        c.iter()
            .filter(|&&v| v > 0)
            .map(|&v| {
                let p = v as f64 / n;
                -p * p.ln()
            })
            .sum()
    };
    let ha = entropy(&row);
    let hb = entropy(&col);
    if ha == 0.0 || hb == 0.0 {
        return Ok(0.0);
    }
    let mut mi = 0.0;
    for a in 0..ka {
        for b in 0..kb {
            let c = counts[a * kb + b];
            if c == 0 {
                continue;
            }
            let pab = c as f64 / n;
            let pa = row[a] as f64 / n;
            let pb = col[b] as f64 / n;
            mi += pab * (pab / (pa * pb)).ln();
        }
    }
    Ok((mi / (ha * hb).sqrt()).clamp(0.0, 1.0))
}

fn partitions_identical(a: &[usize], b: &[usize]) -> bool {
    // identical as partitions, i.e. equal up to a relabeling
    let (_, ia) = compact_labels(a);
    let (_, ib) = compact_labels(b);
    ia == ib
}

/// Remaps labels to 0..k in first-appearance order.
fn compact_labels(labels: &[usize]) -> (usize, Vec<usize>) {
    let mut map: Vec<(usize, usize)> = Vec::new();
    let mut out = Vec::with_capacity(labels.len());
    for &l in labels {
        let id = match map.iter().find(|(orig, _)| *orig == l) {
            Some((_, id)) => *id,
            None => {
                let id = map.len();
                map.push((l, id));
                id
            }
        };
        out.push(id);
    }
    (map.len(), out)
}

/// Per-cluster mass on the wrong side of the boundary, straight off the
/// fitted 1-D factors.
pub fn empirical_leakage(result: &ClusteringResult) -> Vec<f64> {
    result.models.iter().map(|m| m.leakage()).collect()
}

/// The largest per-cluster leakage: the effective leakage level of the whole
/// model, used to place unconstrained baselines on the alpha axis.
pub fn max_leakage(result: &ClusteringResult) -> f64 {
    empirical_leakage(result).into_iter().fold(0.0, f64::max)
}

/// Full report for one fitted result; `labels` enables the NMI column.
pub fn report(
    result: &ClusteringResult,
    data: &DataMatrix,
    labels: Option<&[usize]>,
) -> Result<EvaluationReport> {
    let ll = log_likelihood(result, data)?;
    let p = free_params(result.models.len(), data.cols());
    let per_cluster_leakage = empirical_leakage(result);
    let max_leakage = per_cluster_leakage.iter().copied().fold(0.0, f64::max);
    let nmi_score = match labels {
        Some(l) => Some(nmi(l, &result.assignment)?),
        None => None,
    };
    Ok(EvaluationReport {
        bic: -2.0 * ll + p as f64 * (data.rows() as f64).ln(),
        log_likelihood: ll,
        free_params: p,
        nmi: nmi_score,
        per_cluster_leakage,
        max_leakage,
        final_k: result.models.len(),
    })
}
