//! Principal component analysis via a cyclic Jacobi eigensolver.
//!
//! The sample covariance of the training data is symmetric and small
//! (d <= 30 here), so cyclic Jacobi rotations converge quickly and
//! deterministically without any external linear algebra dependency.

use super::matrix::Matrix;
use crate::error::{Result, ScfeError};

/// Fitted PCA basis.
///
/// `components` is d x r with orthonormal columns, the leading eigenvectors
/// of the sample covariance; `variances` holds their eigenvalues in
/// non-increasing order. Sign convention: the largest-magnitude entry of each
/// component is positive, which makes the basis unique and runs reproducible.
#[derive(Debug, Clone)]
pub struct PcaModel {
    pub mean: Vec<f64>,
    pub components: Matrix,
    pub variances: Vec<f64>,
    pub total_variance: f64,
}

impl PcaModel {
    pub fn input_dim(&self) -> usize {
        self.components.rows()
    }

    pub fn output_dim(&self) -> usize {
        self.components.cols()
    }

    pub fn explained_variance_ratio(&self) -> Vec<f64> {
        if self.total_variance <= 0.0 {
            return vec![0.0; self.variances.len()];
        }
        self.variances
            .iter()
            .map(|v| v / self.total_variance)
            .collect()
    }

    pub fn transform_vec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.input_dim() {
            return Err(ScfeError::dim(format!(
                "pca expects {} features, got {}",
                self.input_dim(),
                x.len()
            )));
        }
        let centered: Vec<f64> = x.iter().zip(&self.mean).map(|(v, m)| v - m).collect();
        let r = self.output_dim();
        let mut out = vec![0.0; r];
        for (j, out_j) in out.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (i, &c) in centered.iter().enumerate() {
                acc += c * self.components.get(i, j);
            }
            *out_j = acc;
        }
        Ok(out)
    }

    /// Back-projection onto the original feature space.
    pub fn inverse_transform_vec(&self, y: &[f64]) -> Result<Vec<f64>> {
        if y.len() != self.output_dim() {
            return Err(ScfeError::dim(format!(
                "pca inverse expects {} components, got {}",
                self.output_dim(),
                y.len()
            )));
        }
        let d = self.input_dim();
        let mut out = self.mean.clone();
        for (j, &c) in y.iter().enumerate() {
            for i in 0..d {
                out[i] += c * self.components.get(i, j);
            }
        }
        Ok(out)
    }
}

/// Jacobi eigendecomposition of a symmetric matrix. Returns (eigenvalues,
/// eigenvectors as columns), unsorted.
fn jacobi_eigen(a: &Matrix) -> (Vec<f64>, Matrix) {
    let n = a.rows();
    let mut m = a.clone();
    let mut v = Matrix::zeros(n, n);
    for i in 0..n {
        v.set(i, i, 1.0);
    }
    let frob: f64 = a.data().iter().map(|x| x * x).sum::<f64>().sqrt();
    let tol = 1e-14 * frob.max(1e-300);
    for _sweep in 0..100 {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += m.get(p, q).powi(2);
            }
        }
        if off.sqrt() <= tol {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m.get(p, q);
                if apq.abs() <= 1e-300 {
                    continue;
                }
                let app = m.get(p, p);
                let aqq = m.get(q, q);
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m.get(k, p);
                    let mkq = m.get(k, q);
                    m.set(k, p, c * mkp - s * mkq);
                    m.set(k, q, s * mkp + c * mkq);
                }
                for k in 0..n {
                    let mpk = m.get(p, k);
                    let mqk = m.get(q, k);
                    m.set(p, k, c * mpk - s * mqk);
                    m.set(q, k, s * mpk + c * mqk);
                }
                for k in 0..n {
                    let vkp = v.get(k, p);
                    let vkq = v.get(k, q);
                    v.set(k, p, c * vkp - s * vkq);
                    v.set(k, q, s * vkp + c * vkq);
                }
            }
        }
    }
    let eig: Vec<f64> = (0..n).map(|i| m.get(i, i)).collect();
    (eig, v)
}

/// Fits PCA with `r` components on the rows of `data`.
pub fn pca_fit(data: &Matrix, r: usize) -> Result<PcaModel> {
    let n = data.rows();
    let d = data.cols();
    if r > d {
        return Err(ScfeError::invalid(format!(
            "requested {} components from {}-dimensional data",
            r, d
        )));
    }
    if r == 0 {
        return Err(ScfeError::invalid("pca needs at least one component"));
    }
    if n < r + 1 {
        return Err(ScfeError::invalid(format!(
            "pca with {} components needs at least {} samples, got {}",
            r,
            r + 1,
            n
        )));
    }
    let mut mean = vec![0.0; d];
    for row in data.row_iter() {
        for (j, &x) in row.iter().enumerate() {
            mean[j] += x;
        }
    }
    for m in mean.iter_mut() {
        *m /= n as f64;
    }
    let mut cov = Matrix::zeros(d, d);
    for row in data.row_iter() {
        for i in 0..d {
            let ci = row[i] - mean[i];
            for j in i..d {
                let cj = row[j] - mean[j];
                cov.set(i, j, cov.get(i, j) + ci * cj);
            }
        }
    }
    let denom = (n - 1) as f64;
    for i in 0..d {
        for j in i..d {
            let v = cov.get(i, j) / denom;
            cov.set(i, j, v);
            cov.set(j, i, v);
        }
    }

    let (eig, vecs) = jacobi_eigen(&cov);
    // Rank-deficient data is allowed; rounding can leave tiny negatives.
    let eig: Vec<f64> = eig.into_iter().map(|e| e.max(0.0)).collect();
    let total_variance: f64 = eig.iter().sum();
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&i, &j| eig[j].partial_cmp(&eig[i]).unwrap().then(i.cmp(&j)));

    let mut components = Matrix::zeros(d, r);
    let mut variances = Vec::with_capacity(r);
    for (out_col, &src_col) in order.iter().take(r).enumerate() {
        variances.push(eig[src_col]);
        let mut col: Vec<f64> = (0..d).map(|i| vecs.get(i, src_col)).collect();
        let mut max_abs = 0.0;
        let mut max_val = 0.0;
        for &x in &col {
            if x.abs() > max_abs {
                max_abs = x.abs();
                max_val = x;
            }
        }
        if max_val < 0.0 {
            for x in col.iter_mut() {
                *x = -*x;
            }
        }
        for (i, &x) in col.iter().enumerate() {
            components.set(i, out_col, x);
        }
    }

    Ok(PcaModel {
        mean,
        components,
        variances,
        total_variance,
    })
}

/// Projects every row of `data` onto the fitted basis.
pub fn pca_transform(model: &PcaModel, data: &Matrix) -> Result<Matrix> {
    let rows: Result<Vec<Vec<f64>>> = data.row_iter().map(|r| model.transform_vec(r)).collect();
    Matrix::from_rows(&rows?)
}
