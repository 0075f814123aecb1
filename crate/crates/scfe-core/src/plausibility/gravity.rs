//! Density gravity: a density-weighted convex combination of the factual's
//! k nearest target-class neighbors.
//!
//! Local density of a class point uses its k nearest neighbors within the
//! class set (the point itself excluded): rho(x) = k / sum of the theta2
//! distances. For a factual x_f the gravity point is
//!
//! G = sum_i rhohat_i x_i over the k nearest neighbors x_i of x_f,
//!
//! with rhohat the densities normalized to sum to 1. G is therefore a convex
//! combination of the neighborhood, and the solver's plausibility term is
//! qhat(x) = -||x - G||_2.

use crate::error::{Result, ScfeError};
use crate::numerics::{squared_distance, Matrix, Vector};

#[derive(Debug, Clone)]
pub struct GravityModel {
    points: Matrix,
    k: usize,
    /// Local density rho of each reference point, precomputed at fit time.
    densities: Vector,
}

/// Indices of the k smallest distances, ties broken by lowest index.
fn knn_indices(dists: &[f64], k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..dists.len()).collect();
    idx.sort_by(|&a, &b| dists[a].partial_cmp(&dists[b]).unwrap().then(a.cmp(&b)));
    idx.truncate(k);
    idx
}

impl GravityModel {
    pub fn fit(points: Matrix, k: usize) -> Result<Self> {
        let n = points.rows();
        if k == 0 {
            return Err(ScfeError::invalid("gravity needs k >= 1"));
        }
        if k >= n {
            return Err(ScfeError::invalid(format!(
                "k = {} too large for a class with {} points (need k < n)",
                k, n
            )));
        }
        let mut densities = vec![0.0; n];
        for i in 0..n {
            let dists: Vector = (0..n)
                .map(|j| {
                    if j == i {
                        f64::INFINITY
                    } else {
                        squared_distance(points.row(i), points.row(j)).sqrt()
                    }
                })
                .collect();
            let neighbors = knn_indices(&dists, k);
            let total: f64 = neighbors.iter().map(|&j| dists[j]).sum();
            // Duplicated points give a zero sum; keep the density finite.
            densities[i] = k as f64 / total.max(1e-300);
        }
        Ok(GravityModel {
            points,
            k,
            densities,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn points(&self) -> &Matrix {
        &self.points
    }

    /// Density-weighted convex combination of x_f's k nearest class points.
    pub fn gravity_point(&self, x_f: &[f64]) -> Result<Vector> {
        if x_f.len() != self.points.cols() {
            return Err(ScfeError::dim(format!(
                "gravity over {} features, query has {}",
                self.points.cols(),
                x_f.len()
            )));
        }
        let dists: Vector = self
            .points
            .row_iter()
            .map(|row| squared_distance(x_f, row).sqrt())
            .collect();
        let neighbors = knn_indices(&dists, self.k);
        let total_density: f64 = neighbors.iter().map(|&j| self.densities[j]).sum();
        let mut g = vec![0.0; x_f.len()];
        for &j in &neighbors {
            let w = self.densities[j] / total_density;
            for (gi, &pi) in g.iter_mut().zip(self.points.row(j)) {
                *gi += w * pi;
            }
        }
        Ok(g)
    }
}
