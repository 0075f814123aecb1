//! Gaussian mixture surrogate fitted with expectation-maximization.
//!
//! qhat(x) = sum_j pi_j N(x | mu_j, Sigma_j) with normalized Gaussian
//! densities, and grad qhat(x) = sum_j pi_j N_j(x) Sigma_j^-1 (mu_j - x).
//!
//! Fitting uses k-means++ seeding for the means, log-space responsibilities
//! (so far-away points cannot underflow the E-step), and a diagonal ridge of
//! 1e-6 on every covariance so the Cholesky factorization always exists. The
//! log-likelihood is non-decreasing across iterations up to a 1e-9 slack.

use crate::error::{Result, ScfeError};
use crate::numerics::{squared_distance, Matrix, Rng, Vector};

const RIDGE: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct GmmModel {
    priors: Vector,
    means: Vec<Vector>,
    covs: Vec<Matrix>,
    /// Lower Cholesky factors of the covariances.
    chols: Vec<Matrix>,
    /// -d/2 ln(2 pi) - 1/2 ln det Sigma_j per component.
    log_norms: Vector,
    /// Log-likelihood after each EM iteration.
    pub ll_trace: Vector,
}

fn cholesky(a: &Matrix) -> Result<Matrix> {
    let n = a.rows();
    let mut l = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let mut sum = a.get(i, j);
            for k in 0..j {
                sum -= l.get(i, k) * l.get(j, k);
            }
            if i == j {
                if sum <= 0.0 {
                    return Err(ScfeError::numeric(
                        "covariance matrix is not positive definite".to_string(),
                    ));
                }
                l.set(i, j, sum.sqrt());
            } else {
                l.set(i, j, sum / l.get(j, j));
            }
        }
    }
    Ok(l)
}

/// Solves L y = b by forward substitution.
fn forward_solve(l: &Matrix, b: &[f64]) -> Vector {
    let n = b.len();
    let mut y = vec![0.0; n];
    for i in 0..n {
        let mut acc = b[i];
        for j in 0..i {
            acc -= l.get(i, j) * y[j];
        }
        y[i] = acc / l.get(i, i);
    }
    y
}

/// Solves L^T x = y by back substitution.
fn backward_solve(l: &Matrix, y: &[f64]) -> Vector {
    let n = y.len();
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut acc = y[i];
        for j in (i + 1)..n {
            acc -= l.get(j, i) * x[j];
        }
        x[i] = acc / l.get(i, i);
    }
    x
}

/// Solves (L L^T) x = b.
fn chol_solve(l: &Matrix, b: &[f64]) -> Vector {
    backward_solve(l, &forward_solve(l, b))
}

fn log_norm_constant(l: &Matrix) -> f64 {
    let d = l.rows() as f64;
    let logdet: f64 = (0..l.rows()).map(|i| l.get(i, i).ln()).sum::<f64>() * 2.0;
    -0.5 * (d * (2.0 * std::f64::consts::PI).ln() + logdet)
}

fn logsumexp(v: &[f64]) -> f64 {
    let m = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + v.iter().map(|&x| (x - m).exp()).sum::<f64>().ln()
}

impl GmmModel {
    /// Builds a mixture from explicit parameters (ridge applied as given).
    pub fn from_parts(priors: Vector, means: Vec<Vector>, covs: Vec<Matrix>) -> Result<Self> {
        if priors.is_empty() || priors.len() != means.len() || priors.len() != covs.len() {
            return Err(ScfeError::dim("mismatched mixture component counts".to_string()));
        }
        let total: f64 = priors.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(ScfeError::invalid(format!(
                "priors must sum to 1, got {}",
                total
            )));
        }
        let chols: Result<Vec<Matrix>> = covs.iter().map(cholesky).collect();
        let chols = chols?;
        let log_norms = chols.iter().map(log_norm_constant).collect();
        Ok(GmmModel {
            priors,
            means,
            covs,
            chols,
            log_norms,
            ll_trace: Vec::new(),
        })
    }

    pub fn n_components(&self) -> usize {
        self.priors.len()
    }

    pub fn priors(&self) -> &[f64] {
        &self.priors
    }

    pub fn means(&self) -> &[Vector] {
        &self.means
    }

    pub fn covs(&self) -> &[Matrix] {
        &self.covs
    }

    fn log_component_density(&self, j: usize, x: &[f64]) -> f64 {
        let diff: Vector = x.iter().zip(&self.means[j]).map(|(a, b)| a - b).collect();
        let y = forward_solve(&self.chols[j], &diff);
        let mahalanobis: f64 = y.iter().map(|v| v * v).sum();
        self.log_norms[j] - 0.5 * mahalanobis
    }

    pub fn value_grad(&self, x: &[f64]) -> Result<(f64, Vector)> {
        let d = self.means[0].len();
        if x.len() != d {
            return Err(ScfeError::dim(format!(
                "gmm over {} features, query has {}",
                d,
                x.len()
            )));
        }
        let mut value = 0.0;
        let mut grad = vec![0.0; d];
        for j in 0..self.n_components() {
            let density = self.log_component_density(j, x).exp();
            let weighted = self.priors[j] * density;
            value += weighted;
            let diff: Vector = self.means[j].iter().zip(x).map(|(m, xi)| m - xi).collect();
            let pull = chol_solve(&self.chols[j], &diff);
            for (g, p) in grad.iter_mut().zip(&pull) {
                *g += weighted * p;
            }
        }
        Ok((value, grad))
    }
}

/// k-means++ seeding: the first center is uniform, later centers are drawn
/// with probability proportional to the squared distance to the nearest
/// chosen center.
fn kmeanspp_means(points: &Matrix, m: usize, rng: &mut Rng) -> Vec<Vector> {
    let n = points.rows();
    let mut means: Vec<Vector> = Vec::with_capacity(m);
    means.push(points.row(rng.below(n)).to_vec());
    let mut d2: Vec<f64> = (0..n)
        .map(|i| squared_distance(points.row(i), &means[0]))
        .collect();
    while means.len() < m {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let mut u = rng.uniform() * total;
            let mut chosen = n - 1;
            for (i, &w) in d2.iter().enumerate() {
                if u < w {
                    chosen = i;
                    break;
                }
                u -= w;
            }
            chosen
        } else {
            rng.below(n)
        };
        means.push(points.row(next).to_vec());
        for (i, slot) in d2.iter_mut().enumerate() {
            *slot = slot.min(squared_distance(points.row(i), means.last().unwrap()));
        }
    }
    means
}

/// Population covariance of `points` plus the ridge.
fn ridged_covariance(points: &Matrix, mean: &[f64]) -> Matrix {
    let (n, d) = (points.rows(), points.cols());
    let mut cov = Matrix::zeros(d, d);
    for row in points.row_iter() {
        for i in 0..d {
            let ci = row[i] - mean[i];
            for j in i..d {
                cov.set(i, j, cov.get(i, j) + ci * (row[j] - mean[j]));
            }
        }
    }
    for i in 0..d {
        for j in i..d {
            let v = cov.get(i, j) / n as f64;
            cov.set(i, j, v);
            cov.set(j, i, v);
        }
    }
    for i in 0..d {
        cov.set(i, i, cov.get(i, i) + RIDGE);
    }
    cov
}

/// Fits a mixture of `m` Gaussians by EM.
pub fn gmm_fit_em(
    points: &Matrix,
    m: usize,
    rng: &mut Rng,
    max_iter: usize,
    tol: f64,
) -> Result<GmmModel> {
    let n = points.rows();
    let d = points.cols();
    if m == 0 {
        return Err(ScfeError::invalid("mixture needs at least one component"));
    }
    if n < m {
        return Err(ScfeError::invalid(format!(
            "{} points cannot support {} components",
            n, m
        )));
    }

    let mut grand_mean = vec![0.0; d];
    for row in points.row_iter() {
        for (g, &v) in grand_mean.iter_mut().zip(row) {
            *g += v;
        }
    }
    for g in grand_mean.iter_mut() {
        *g /= n as f64;
    }
    let init_cov = ridged_covariance(points, &grand_mean);

    let mut model = GmmModel::from_parts(
        vec![1.0 / m as f64; m],
        kmeanspp_means(points, m, rng),
        vec![init_cov; m],
    )?;

    let mut prev_ll = f64::NEG_INFINITY;
    let mut ll_trace = Vec::new();
    for _iter in 0..max_iter {
        // E-step in log space.
        let mut resp = Matrix::zeros(n, m);
        let mut ll = 0.0;
        for (i, row) in points.row_iter().enumerate() {
            let logs: Vector = (0..m)
                .map(|j| model.priors[j].ln() + model.log_component_density(j, row))
                .collect();
            let norm = logsumexp(&logs);
            ll += norm;
            for (j, &lp) in logs.iter().enumerate() {
                resp.set(i, j, (lp - norm).exp());
            }
        }
        ll_trace.push(ll);

        // M-step.
        let mut priors = vec![0.0; m];
        let mut means = vec![vec![0.0; d]; m];
        let mut covs = Vec::with_capacity(m);
        for j in 0..m {
            let nj: f64 = (0..n).map(|i| resp.get(i, j)).sum();
            if nj < 1e-10 {
                // Empty component: freeze its parameters.
                priors[j] = nj / n as f64;
                means[j] = model.means[j].clone();
                covs.push(model.covs[j].clone());
                continue;
            }
            priors[j] = nj / n as f64;
            for (i, row) in points.row_iter().enumerate() {
                let r = resp.get(i, j);
                for (mj, &v) in means[j].iter_mut().zip(row) {
                    *mj += r * v;
                }
            }
            for mj in means[j].iter_mut() {
                *mj /= nj;
            }
            let mut cov = Matrix::zeros(d, d);
            for (i, row) in points.row_iter().enumerate() {
                let r = resp.get(i, j);
                for a in 0..d {
                    let ca = row[a] - means[j][a];
                    for b in a..d {
                        cov.set(a, b, cov.get(a, b) + r * ca * (row[b] - means[j][b]));
                    }
                }
            }
            for a in 0..d {
                for b in a..d {
                    let v = cov.get(a, b) / nj;
                    cov.set(a, b, v);
                    cov.set(b, a, v);
                }
            }
            for a in 0..d {
                cov.set(a, a, cov.get(a, a) + RIDGE);
            }
            covs.push(cov);
        }
        let total: f64 = priors.iter().sum();
        for p in priors.iter_mut() {
            *p /= total;
        }
        let trace = std::mem::take(&mut ll_trace);
        model = GmmModel::from_parts(priors, means, covs)?;
        ll_trace = trace;

        let converged = (ll - prev_ll).abs() < tol && prev_ll != f64::NEG_INFINITY;
        prev_ll = ll;
        if converged {
            break;
        }
    }
    model.ll_trace = ll_trace;
    Ok(model)
}
