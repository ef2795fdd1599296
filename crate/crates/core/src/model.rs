//! Cluster models over the product family: an independent 1-D Gaussian along
//! the boundary normal (fitted under the leakage constraint) times an
//! unconstrained Gaussian over the remaining coordinates. Includes the
//! sufficient statistics, per-cluster cross-entropy cost, and the total
//! clustering cost with the `-p ln p` cluster-maintenance term.

use serde::Serialize;

use crate::data::DataMatrix;
use crate::error::{Error, Result};
use crate::gauss1d::{self, ConstrainedGaussian1d, Moments1d, LN_2PI};
use crate::linalg;

/// Relative ridge added to the rest-coordinate covariance: delta = scale *
/// trace / dim keeps the fit unit-invariant while guarding rank deficiency.
pub const COVARIANCE_RIDGE_SCALE: f64 = 1e-9;

/// Minimum rows a cluster needs before a model can be fitted: full covariance
/// rank over the rest coordinates plus slack.
pub fn min_fit_count(dim: usize) -> usize {
    dim + 2
}

/// Running sufficient statistics of one cluster: count, coordinate sums and
/// raw second moments, updated by rank-one add/remove as rows move.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClusterStats {
    count: usize,
    sum: Vec<f64>,
    raw: Vec<f64>, // row-major dim x dim, sum of x x^T
    dim: usize,
}

impl ClusterStats {
    pub fn new(dim: usize) -> Self {
        ClusterStats {
            count: 0,
            sum: vec![0.0; dim],
            raw: vec![0.0; dim * dim],
            dim,
        }
    }

    pub fn from_rows<'a>(rows: impl Iterator<Item = &'a [f64]>, dim: usize) -> Self {
        let mut stats = ClusterStats::new(dim);
        for row in rows {
            stats.add(row);
        }
        stats
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn add(&mut self, x: &[f64]) {
        debug_assert_eq!(x.len(), self.dim);
        self.count += 1;
        for i in 0..self.dim {
            self.sum[i] += x[i];
            for j in 0..=i {
                let v = x[i] * x[j];
                self.raw[i * self.dim + j] += v;
                if i != j {
                    self.raw[j * self.dim + i] += v;
                }
            }
        }
    }

    pub fn remove(&mut self, x: &[f64]) {
        debug_assert_eq!(x.len(), self.dim);
        debug_assert!(self.count > 0);
        self.count -= 1;
        for i in 0..self.dim {
            self.sum[i] -= x[i];
            for j in 0..=i {
                let v = x[i] * x[j];
                self.raw[i * self.dim + j] -= v;
                if i != j {
                    self.raw[j * self.dim + i] -= v;
                }
            }
        }
    }

    pub fn mean(&self) -> Vec<f64> {
        let n = self.count.max(1) as f64;
        self.sum.iter().map(|s| s / n).collect()
    }

    /// Biased (1/n) covariance matrix.
    pub fn covariance(&self) -> Vec<f64> {
        let n = self.count.max(1) as f64;
        let mean = self.mean();
        let mut cov = vec![0.0; self.dim * self.dim];
        for i in 0..self.dim {
            for j in 0..self.dim {
                cov[i * self.dim + j] = self.raw[i * self.dim + j] / n - mean[i] * mean[j];
            }
        }
        cov
    }

    /// count x biased covariance.
    pub fn scatter(&self) -> Vec<f64> {
        let n = self.count as f64;
        self.covariance().iter().map(|v| v * n).collect()
    }

    /// Mean and biased standard deviation of the first coordinate.
    pub fn coord1_moments(&self) -> Moments1d {
        let n = self.count.max(1) as f64;
        let mean = self.sum[0] / n;
        let var = (self.raw[0] / n - mean * mean).max(0.0);
        Moments1d::new(mean, var.sqrt(), self.count)
    }

    pub fn rest_mean(&self) -> Vec<f64> {
        let n = self.count.max(1) as f64;
        self.sum[1..].iter().map(|s| s / n).collect()
    }

    /// Biased covariance over coordinates 2..dim.
    pub fn rest_covariance(&self) -> Vec<f64> {
        let d = self.dim - 1;
        let n = self.count.max(1) as f64;
        let mean = self.rest_mean();
        let mut cov = vec![0.0; d * d];
        for i in 0..d {
            for j in 0..d {
                cov[i * d + j] = self.raw[(i + 1) * self.dim + (j + 1)] / n - mean[i] * mean[j];
            }
        }
        cov
    }
}

/// Full-covariance Gaussian over the rest coordinates, with its Cholesky
/// factor cached for density and cost evaluation.
#[derive(Debug, Clone, Serialize)]
pub struct GaussianNd {
    mean: Vec<f64>,
    covariance: Vec<f64>,
    #[serde(skip)]
    chol: Vec<f64>,
    dim: usize,
}

impl GaussianNd {
    pub fn new(mean: Vec<f64>, covariance: Vec<f64>) -> Result<Self> {
        let dim = mean.len();
        if covariance.len() != dim * dim {
            return Err(Error::input("covariance shape does not match mean"));
        }
        let chol = linalg::cholesky(&covariance, dim)
            .ok_or_else(|| Error::Numeric("covariance is not positive definite".to_string()))?;
        Ok(GaussianNd {
            mean,
            covariance,
            chol,
            dim,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn covariance(&self) -> &[f64] {
        &self.covariance
    }

    pub fn log_density(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim);
        let diff: Vec<f64> = x.iter().zip(&self.mean).map(|(a, b)| a - b).collect();
        let q = linalg::inv_quadratic_form(&self.chol, self.dim, &diff);
        -0.5 * (self.dim as f64 * LN_2PI + linalg::chol_logdet(&self.chol, self.dim) + q)
    }

    /// Cross-entropy of a sample (given by its mean and biased covariance)
    /// against this Gaussian:
    ///
    /// ```text
    /// d/2 ln(2 pi) + 1/2 |m_s - m|^2_Cov + 1/2 tr(Cov^{-1} S) + 1/2 ln det Cov
    /// ```
    pub fn cross_entropy(&self, sample_mean: &[f64], sample_cov: &[f64]) -> Result<f64> {
        if sample_mean.len() != self.dim || sample_cov.len() != self.dim * self.dim {
            return Err(Error::input("sample moments do not match model dimension"));
        }
        let diff: Vec<f64> = sample_mean
            .iter()
            .zip(&self.mean)
            .map(|(a, b)| a - b)
            .collect();
        let maha = linalg::inv_quadratic_form(&self.chol, self.dim, &diff);
        let trace = linalg::inv_trace_product(&self.chol, self.dim, sample_cov);
        let logdet = linalg::chol_logdet(&self.chol, self.dim);
        Ok(0.5 * (self.dim as f64 * LN_2PI + maha + trace + logdet))
    }
}

/// One mixture component: prior, constrained 1-D factor along the boundary
/// normal, and the unconstrained factor over the remaining coordinates
/// (absent for 1-D data).
#[derive(Debug, Clone, Serialize)]
pub struct ClusterModel {
    pub prior: f64,
    pub g1: ConstrainedGaussian1d,
    pub rest: Option<GaussianNd>,
}

impl ClusterModel {
    /// Log of prior times product density at a point in the canonical frame.
    pub fn log_density(&self, x: &[f64]) -> f64 {
        let mut v = self.prior.ln() + self.g1.log_density(x[0]);
        if let Some(rest) = &self.rest {
            v += rest.log_density(&x[1..]);
        }
        v
    }

    pub fn leakage(&self) -> f64 {
        self.g1.leakage()
    }
}

/// Fits the product model to a cluster in the canonical frame: constrained
/// 1-D fit along the first coordinate, maximum-likelihood Gaussian with a
/// trace-scaled ridge over the rest. The prior is whatever the caller says
/// the cluster's share is.
pub fn fit_cluster(stats: &ClusterStats, alpha: f64, prior: f64) -> Result<ClusterModel> {
    let dim = stats.dim();
    if stats.count() < min_fit_count(dim) {
        return Err(Error::degenerate(format!(
            "cluster of {} rows is below the fitting minimum {} for dimension {dim}",
            stats.count(),
            min_fit_count(dim)
        )));
    }
    let g1 = gauss1d::constrained_mle(&stats.coord1_moments(), alpha)?;
    let rest = if dim > 1 {
        let d = dim - 1;
        let mut cov = stats.rest_covariance();
        let trace: f64 = (0..d).map(|i| cov[i * d + i]).sum();
        let ridge = COVARIANCE_RIDGE_SCALE * trace / d as f64;
        for i in 0..d {
            cov[i * d + i] += ridge;
        }
        Some(GaussianNd::new(stats.rest_mean(), cov)?)
    } else {
        None
    };
    Ok(ClusterModel { prior, g1, rest })
}

/// Per-point cross-entropy of a cluster against a model (not necessarily the
/// one fitted from it): the 1-D factor plus the rest factor.
pub fn cluster_cost(stats: &ClusterStats, model: &ClusterModel) -> Result<f64> {
    if stats.count() == 0 {
        return Err(Error::input("cluster_cost of an empty cluster"));
    }
    let mut cost = gauss1d::cross_entropy_1d(&stats.coord1_moments(), model.g1.mean, model.g1.std)?;
    match (&model.rest, stats.dim()) {
        (Some(rest), d) if d > 1 => {
            cost += rest.cross_entropy(&stats.rest_mean(), &stats.rest_covariance())?;
        }
        (None, 1) => {}
        _ => return Err(Error::input("model and stats dimensions disagree")),
    }
    Ok(cost)
}

/// Assignment of every row to one cluster, with per-cluster running stats.
#[derive(Debug, Clone)]
pub struct Partition {
    assignment: Vec<usize>,
    clusters: Vec<ClusterStats>,
}

/// Sentinel for rows detached while a cluster dissolution is in progress.
pub(crate) const UNASSIGNED: usize = usize::MAX;

impl Partition {
    pub fn from_assignment(data: &DataMatrix, assignment: Vec<usize>, k: usize) -> Result<Self> {
        if assignment.len() != data.rows() {
            return Err(Error::input(format!(
                "assignment covers {} rows, data has {}",
                assignment.len(),
                data.rows()
            )));
        }
        let mut clusters = vec![ClusterStats::new(data.cols()); k];
        for (row, &c) in assignment.iter().enumerate() {
            if c >= k {
                return Err(Error::input(format!(
                    "row {row} assigned to cluster {c}, only {k} exist"
                )));
            }
            clusters[c].add(data.row(row));
        }
        Ok(Partition {
            assignment,
            clusters,
        })
    }

    pub fn n(&self) -> usize {
        self.assignment.len()
    }

    pub fn k_active(&self) -> usize {
        self.clusters.len()
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn cluster_of(&self, row: usize) -> usize {
        self.assignment[row]
    }

    pub fn stats(&self, c: usize) -> &ClusterStats {
        &self.clusters[c]
    }

    pub fn move_row(&mut self, data: &DataMatrix, row: usize, to: usize) {
        let from = self.assignment[row];
        if from == to {
            return;
        }
        let x = data.row(row);
        if from != UNASSIGNED {
            self.clusters[from].remove(x);
        }
        self.clusters[to].add(x);
        self.assignment[row] = to;
    }

    /// Recomputes every cluster's stats from its member rows, discarding
    /// incremental drift.
    pub fn rebuild_stats(&mut self, data: &DataMatrix) {
        for stats in &mut self.clusters {
            *stats = ClusterStats::new(data.cols());
        }
        for (row, &c) in self.assignment.iter().enumerate() {
            if c != UNASSIGNED {
                self.clusters[c].add(data.row(row));
            }
        }
    }

    /// Drops cluster `c`, detaching its rows and shifting the indices of
    /// later clusters down by one. Returns the detached rows in index order.
    pub(crate) fn dissolve_cluster(&mut self, c: usize) -> Vec<usize> {
        let mut orphans = Vec::new();
        for (row, a) in self.assignment.iter_mut().enumerate() {
            if *a == c {
                *a = UNASSIGNED;
                orphans.push(row);
            } else if *a != UNASSIGNED && *a > c {
                *a -= 1;
            }
        }
        self.clusters.remove(c);
        orphans
    }
}

/// Total clustering cost: sum over clusters of `p (-ln p) + p * cluster_cost`
/// with `p` the cluster's share of the rows. Empty clusters contribute zero.
pub fn total_cost(partition: &Partition, models: &[ClusterModel]) -> Result<f64> {
    if models.len() != partition.k_active() {
        return Err(Error::input(format!(
            "{} models for {} clusters",
            models.len(),
            partition.k_active()
        )));
    }
    let n = partition.n() as f64;
    let mut total = 0.0;
    for (c, model) in models.iter().enumerate() {
        let stats = partition.stats(c);
        if stats.count() == 0 {
            continue;
        }
        let p = stats.count() as f64 / n;
        total += p * (-p.ln() + cluster_cost(stats, model)?);
    }
    Ok(total)
}
