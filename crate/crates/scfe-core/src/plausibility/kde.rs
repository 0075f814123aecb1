//! Gaussian kernel density surrogate.
//!
//! qhat(x) = sum_i w_i k(x, x_i) with k(x, x_i) = exp(-||x - x_i||^2 / (2 sigma^2)).
//! The kernels are deliberately unnormalized: only relative density and its
//! gradient matter to the solver, and dropping the normalizer keeps values
//! in (0, 1] regardless of dimension. The gradient is analytic:
//!
//! grad qhat(x) = sum_i w_i k(x, x_i) (x_i - x) / sigma^2.

use crate::error::{Result, ScfeError};
use crate::numerics::{squared_distance, Matrix, Vector};

#[derive(Debug, Clone, Copy)]
pub enum BandwidthRule {
    /// n^(-1/(d+4)) times the average per-feature population std.
    Scott,
    Fixed(f64),
}

#[derive(Debug, Clone)]
pub struct KdeModel {
    points: Matrix,
    weights: Vector,
    bandwidth: f64,
}

impl KdeModel {
    pub fn points(&self) -> &Matrix {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    pub fn value_grad(&self, x: &[f64]) -> Result<(f64, Vector)> {
        if x.len() != self.points.cols() {
            return Err(ScfeError::dim(format!(
                "kde over {} features, query has {}",
                self.points.cols(),
                x.len()
            )));
        }
        let s2 = self.bandwidth * self.bandwidth;
        let mut value = 0.0;
        let mut grad = vec![0.0; x.len()];
        for (row, &w) in self.points.row_iter().zip(&self.weights) {
            let kernel = (-squared_distance(x, row) / (2.0 * s2)).exp();
            value += w * kernel;
            let scale = w * kernel / s2;
            for (g, (&xi, &pi)) in grad.iter_mut().zip(x.iter().zip(row)) {
                *g += scale * (pi - xi);
            }
        }
        Ok((value, grad))
    }
}

/// Fits a KDE over the given reference points with uniform weights.
pub fn kde_fit(points: &Matrix, rule: BandwidthRule) -> Result<KdeModel> {
    let n = points.rows();
    if n < 2 {
        return Err(ScfeError::invalid(format!(
            "kde needs at least 2 reference points, got {}",
            n
        )));
    }
    let bandwidth = match rule {
        BandwidthRule::Fixed(b) => {
            if !(b > 0.0) {
                return Err(ScfeError::invalid(format!("bandwidth must be positive, got {}", b)));
            }
            b
        }
        BandwidthRule::Scott => {
            let d = points.cols();
            let mut mean = vec![0.0; d];
            for row in points.row_iter() {
                for (m, &v) in mean.iter_mut().zip(row) {
                    *m += v;
                }
            }
            for m in mean.iter_mut() {
                *m /= n as f64;
            }
            let mut avg_std = 0.0;
            for j in 0..d {
                let var: f64 = points
                    .row_iter()
                    .map(|r| (r[j] - mean[j]) * (r[j] - mean[j]))
                    .sum::<f64>()
                    / n as f64;
                avg_std += var.sqrt();
            }
            avg_std /= d as f64;
            if avg_std <= 0.0 {
                return Err(ScfeError::invalid(
                    "scott bandwidth undefined: reference points are all identical".to_string(),
                ));
            }
            (n as f64).powf(-1.0 / (d as f64 + 4.0)) * avg_std
        }
    };
    Ok(KdeModel {
        points: points.clone(),
        weights: vec![1.0 / n as f64; n],
        bandwidth,
    })
}
