//! Evaluation metrics: theta-p distances, Local Outlier Factor, validity,
//! and aggregate reports.
//!
//! LOF follows the classic definition. For a reference set D and k >= 1:
//!
//! * d_k(x'): distance from x' in D to its k-th nearest other reference point.
//! * N_k(x): every reference point within d_k(x) of x (ties included, so the
//!   neighborhood can exceed k points).
//! * reachability rd_k(x, x') = max{ dist(x, x'), d_k(x') }.
//! * lrd_k(x) = |N_k(x)| / sum_{x' in N_k(x)} rd_k(x, x').
//! * LOF_k(x) = mean_{x' in N_k(x)} lrd_k(x') / lrd_k(x).
//!
//! Queries need not belong to D (novelty extension): neighbors are drawn from
//! D and the query itself is never its own neighbor. Duplicate points can
//! zero a reachability sum; such lrds are treated as +infinity and the ratio
//! of two infinite lrds is defined as 1, so a point duplicated k+1 times in
//! the reference set scores exactly 1. Scores near 1 mark inliers; values
//! above 1.5 flag outliers.

use crate::error::{Result, ScfeError};
use crate::numerics::Matrix;

/// Changes smaller than this do not count toward theta0. Prox outputs land
/// exactly on the factual coordinate by construction, so the tolerance only
/// has to absorb representation noise, not algorithmic drift.
pub const EPS_SPARSE: f64 = 1e-8;

/// Distance order for [`theta_p`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PNorm {
    Zero,
    Half,
    One,
    Two,
    Inf,
}

/// theta_p(x, x'): ||x - x'||_p with the conventions that p = 0 counts
/// coordinates differing by more than [`EPS_SPARSE`] and p = 1/2 is
/// (sum_i sqrt(|x_i - x'_i|))^2.
pub fn theta_p(x: &[f64], x_prime: &[f64], p: PNorm) -> Result<f64> {
    if x.len() != x_prime.len() {
        return Err(ScfeError::dim(format!(
            "theta_p over vectors of lengths {} and {}",
            x.len(),
            x_prime.len()
        )));
    }
    let diffs = x.iter().zip(x_prime).map(|(a, b)| (a - b).abs());
    Ok(match p {
        PNorm::Zero => diffs.filter(|&d| d > EPS_SPARSE).count() as f64,
        PNorm::Half => diffs.map(f64::sqrt).sum::<f64>().powi(2),
        PNorm::One => diffs.sum(),
        PNorm::Two => diffs.map(|d| d * d).sum::<f64>().sqrt(),
        PNorm::Inf => diffs.fold(0.0, f64::max),
    })
}

/// theta0 shorthand used throughout the solver and harness.
pub fn theta0(x: &[f64], x_prime: &[f64]) -> f64 {
    theta_p(x, x_prime, PNorm::Zero).expect("equal lengths")
}

/// theta2 shorthand.
pub fn theta2(x: &[f64], x_prime: &[f64]) -> f64 {
    theta_p(x, x_prime, PNorm::Two).expect("equal lengths")
}

fn minkowski(x: &[f64], y: &[f64], p: PNorm) -> f64 {
    match p {
        PNorm::One => x.iter().zip(y).map(|(a, b)| (a - b).abs()).sum(),
        PNorm::Two => x
            .iter()
            .zip(y)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt(),
        PNorm::Inf => x.iter().zip(y).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max),
        _ => unreachable!("LOF supports p in {{1, 2, inf}}"),
    }
}

/// Local Outlier Factor index over a fixed reference set.
///
/// Neighbor search is brute force; reference sets stay in the low thousands
/// here. k-distances, neighborhoods, and reference lrds are precomputed so a
/// query costs one distance pass.
#[derive(Debug, Clone)]
pub struct LofIndex {
    points: Matrix,
    k: usize,
    p: PNorm,
    k_dist: Vec<f64>,
    lrd: Vec<f64>,
}

impl LofIndex {
    pub fn build(points: &Matrix, k: usize, p: PNorm) -> Result<Self> {
        let n = points.rows();
        if k == 0 || k >= n {
            return Err(ScfeError::invalid(format!(
                "lof needs 0 < k < n, got k = {} with n = {}",
                k, n
            )));
        }
        if !matches!(p, PNorm::One | PNorm::Two | PNorm::Inf) {
            return Err(ScfeError::invalid("lof distance order must be 1, 2, or inf"));
        }
        // Pairwise distances once; everything below reads from this table.
        let dist: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| minkowski(points.row(i), points.row(j), p))
                    .collect()
            })
            .collect();
        let mut k_dist = vec![0.0; n];
        let mut neighborhoods: Vec<Vec<usize>> = vec![Vec::new(); n];
        for i in 0..n {
            let mut order: Vec<usize> = (0..n).filter(|&j| j != i).collect();
            order.sort_by(|&a, &b| dist[i][a].partial_cmp(&dist[i][b]).unwrap().then(a.cmp(&b)));
            k_dist[i] = dist[i][order[k - 1]];
            neighborhoods[i] = order
                .into_iter()
                .filter(|&j| dist[i][j] <= k_dist[i])
                .collect();
        }
        let lrd: Vec<f64> = (0..n)
            .map(|i| {
                let total: f64 = neighborhoods[i]
                    .iter()
                    .map(|&o| dist[i][o].max(k_dist[o]))
                    .sum();
                if total == 0.0 {
                    f64::INFINITY
                } else {
                    neighborhoods[i].len() as f64 / total
                }
            })
            .collect();
        Ok(LofIndex {
            points: points.clone(),
            k,
            p,
            k_dist,
            lrd,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// LOF of an arbitrary query point against the reference set.
    pub fn query(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.points.cols() {
            return Err(ScfeError::dim(format!(
                "lof index over {} features, query has {}",
                self.points.cols(),
                x.len()
            )));
        }
        let n = self.points.rows();
        let dist: Vec<f64> = self
            .points
            .row_iter()
            .map(|row| minkowski(x, row, self.p))
            .collect();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| dist[a].partial_cmp(&dist[b]).unwrap().then(a.cmp(&b)));
        let k_dist_x = dist[order[self.k - 1]];
        let neighbors: Vec<usize> = order
            .into_iter()
            .filter(|&j| dist[j] <= k_dist_x)
            .collect();
        let reach: f64 = neighbors
            .iter()
            .map(|&o| dist[o].max(self.k_dist[o]))
            .sum();
        let lrd_x = if reach == 0.0 {
            f64::INFINITY
        } else {
            neighbors.len() as f64 / reach
        };
        let mut total = 0.0;
        for &o in &neighbors {
            total += lrd_ratio(self.lrd[o], lrd_x);
        }
        Ok(total / neighbors.len() as f64)
    }
}

/// lrd(o) / lrd(x) with the degeneracy convention inf / inf := 1.
fn lrd_ratio(lrd_o: f64, lrd_x: f64) -> f64 {
    if lrd_o.is_infinite() && lrd_x.is_infinite() {
        1.0
    } else {
        lrd_o / lrd_x
    }
}

/// True when the classifier assigns the target class.
pub fn validity(
    classifier: &crate::classifier::ClassifierModel,
    x_cf: &[f64],
    y_cf: usize,
) -> Result<bool> {
    Ok(classifier.predict(x_cf)? == y_cf)
}

/// Percentage of valid flags, in [0, 100].
pub fn validity_rate(flags: &[bool]) -> f64 {
    if flags.is_empty() {
        return 0.0;
    }
    100.0 * flags.iter().filter(|&&f| f).count() as f64 / flags.len() as f64
}

/// Per-instance numbers the aggregate report consumes.
#[derive(Debug, Clone, Copy)]
pub struct InstanceMetrics {
    pub valid: bool,
    pub theta0: f64,
    pub theta2: f64,
    pub lof: f64,
}

/// Aggregate row matching the report CSV schema.
#[derive(Debug, Clone)]
pub struct MetricsReport {
    pub method: String,
    pub dataset: String,
    pub validity: f64,
    pub theta2_mean: f64,
    pub theta2_std: f64,
    pub theta0_mean: f64,
    pub theta0_std: f64,
    pub lof_mean: f64,
    pub lof_std: f64,
    pub seconds_per_100: f64,
}

pub const REPORT_CSV_HEADER: &str =
    "method,dataset,validity,theta2_mean,theta2_std,theta0_mean,theta0_std,lof_mean,lof_std,seconds_per_100";

impl MetricsReport {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{:.1},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6}",
            self.method,
            self.dataset,
            self.validity,
            self.theta2_mean,
            self.theta2_std,
            self.theta0_mean,
            self.theta0_std,
            self.lof_mean,
            self.lof_std,
            self.seconds_per_100
        )
    }
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Aggregates per-instance metrics. theta/LOF statistics cover valid CFEs
/// only (zeros when none are valid); the validity rate covers every instance.
/// Standard deviations are population standard deviations.
pub fn aggregate_report(
    method: &str,
    dataset: &str,
    instances: &[InstanceMetrics],
    total_seconds: f64,
) -> Result<MetricsReport> {
    if instances.is_empty() {
        return Err(ScfeError::invalid("cannot aggregate an empty batch"));
    }
    let flags: Vec<bool> = instances.iter().map(|m| m.valid).collect();
    let valid: Vec<&InstanceMetrics> = instances.iter().filter(|m| m.valid).collect();
    let collect = |f: fn(&InstanceMetrics) -> f64| -> Vec<f64> {
        valid.iter().map(|m| f(m)).collect()
    };
    let (theta2_mean, theta2_std) = mean_std(&collect(|m| m.theta2));
    let (theta0_mean, theta0_std) = mean_std(&collect(|m| m.theta0));
    let (lof_mean, lof_std) = mean_std(&collect(|m| m.lof));
    Ok(MetricsReport {
        method: method.to_string(),
        dataset: dataset.to_string(),
        validity: validity_rate(&flags),
        theta2_mean,
        theta2_std,
        theta0_mean,
        theta0_std,
        lof_mean,
        lof_std,
        seconds_per_100: total_seconds * 100.0 / instances.len() as f64,
    })
}
