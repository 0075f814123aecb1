//! Differentiable data-manifold terms qhat(x, y_cf).
//!
//! Three surrogates measure how plausible a candidate counterfactual is for
//! the target class, each with an analytic gradient:
//!
//! * [`KdeModel`]: unnormalized Gaussian kernel density over the reference
//!   points, qhat(x) = sum_i w_i exp(-||x - x_i||^2 / (2 sigma^2)).
//! * [`GmmModel`]: EM-fitted Gaussian mixture, qhat(x) = sum_i pi_i N(x | mu_i, Sigma_i).
//! * [`GravityModel`]: qhat(x) = -||x - G||_2 where G is the density-weighted
//!   convex combination of the factual's k nearest target-class neighbors.
//!
//! Reference points are the correctly classified training samples of the
//! target class, which keeps label noise out of the manifold model. Fitted
//! models are immutable; the gravity point depends on the factual, so a solve
//! binds the model to `x_f` first (see [`PlausibilityModel::bind`]), keeping
//! the per-factual state thread-confined.

mod gmm;
mod gravity;
mod kde;

pub use gmm::{gmm_fit_em, GmmModel};
pub use gravity::GravityModel;
pub use kde::{kde_fit, BandwidthRule, KdeModel};

use crate::classifier::ClassifierModel;
use crate::error::{Result, ScfeError};
use crate::numerics::{l2_norm, Matrix, Rng, Vector};

/// Which plausibility term an experiment uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlausibilityKind {
    None,
    Kde,
    Gmm,
    /// Density gravity over k nearest neighbors.
    Knn,
}

impl PlausibilityKind {
    pub fn name(&self) -> &'static str {
        match self {
            PlausibilityKind::None => "none",
            PlausibilityKind::Kde => "kde",
            PlausibilityKind::Gmm => "gmm",
            PlausibilityKind::Knn => "knn",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "none" => Some(PlausibilityKind::None),
            "kde" => Some(PlausibilityKind::Kde),
            "gmm" => Some(PlausibilityKind::Gmm),
            "knn" => Some(PlausibilityKind::Knn),
            _ => None,
        }
    }
}

/// Training points of `class` that the classifier also predicts as `class`.
/// Without a classifier the filter keeps all points labeled `class`.
pub fn correctly_classified_class_points(
    x: &Matrix,
    y: &[usize],
    class: usize,
    classifier: Option<&ClassifierModel>,
) -> Result<Matrix> {
    if x.rows() != y.len() {
        return Err(ScfeError::dim(format!(
            "{} rows but {} labels",
            x.rows(),
            y.len()
        )));
    }
    let mut rows: Vec<Vector> = Vec::new();
    for (row, &label) in x.row_iter().zip(y) {
        if label != class {
            continue;
        }
        let keep = match classifier {
            Some(model) => model.predict(row)? == class,
            None => true,
        };
        if keep {
            rows.push(row.to_vec());
        }
    }
    if rows.is_empty() {
        return Err(ScfeError::invalid(format!(
            "no correctly classified points of class {}",
            class
        )));
    }
    Matrix::from_rows(&rows)
}

/// Fitting knobs for the three surrogates.
#[derive(Debug, Clone)]
pub struct PlausibilityParams {
    /// None selects Scott's rule.
    pub bandwidth: Option<f64>,
    pub n_components: usize,
    pub em_max_iter: usize,
    pub em_tol: f64,
    /// Neighbor count for density gravity.
    pub k: usize,
}

impl Default for PlausibilityParams {
    fn default() -> Self {
        PlausibilityParams {
            bandwidth: None,
            n_components: 5,
            em_max_iter: 100,
            em_tol: 1e-6,
            k: 5,
        }
    }
}

/// A fitted per-class surrogate.
#[derive(Debug, Clone)]
pub enum PlausibilityModel {
    Kde(KdeModel),
    Gmm(GmmModel),
    Gravity(GravityModel),
}

impl PlausibilityModel {
    /// Fits the surrogate `kind` for `class`. Returns None for
    /// [`PlausibilityKind::None`].
    pub fn fit(
        kind: PlausibilityKind,
        train_x: &Matrix,
        train_y: &[usize],
        class: usize,
        classifier: Option<&ClassifierModel>,
        params: &PlausibilityParams,
        rng: &mut Rng,
    ) -> Result<Option<Self>> {
        if kind == PlausibilityKind::None {
            return Ok(None);
        }
        let points = correctly_classified_class_points(train_x, train_y, class, classifier)?;
        let model = match kind {
            PlausibilityKind::None => unreachable!(),
            PlausibilityKind::Kde => {
                let rule = match params.bandwidth {
                    Some(b) => BandwidthRule::Fixed(b),
                    None => BandwidthRule::Scott,
                };
                PlausibilityModel::Kde(kde_fit(&points, rule)?)
            }
            PlausibilityKind::Gmm => PlausibilityModel::Gmm(gmm_fit_em(
                &points,
                params.n_components.min(points.rows()),
                rng,
                params.em_max_iter,
                params.em_tol,
            )?),
            PlausibilityKind::Knn => {
                PlausibilityModel::Gravity(GravityModel::fit(points, params.k)?)
            }
        };
        Ok(Some(model))
    }

    /// Binds the model to a factual point, precomputing the gravity point
    /// where needed. The returned term is what one solve evaluates.
    pub fn bind(&self, x_f: &[f64]) -> Result<BoundTerm<'_>> {
        Ok(match self {
            PlausibilityModel::Kde(m) => BoundTerm::Kde(m),
            PlausibilityModel::Gmm(m) => BoundTerm::Gmm(m),
            PlausibilityModel::Gravity(m) => BoundTerm::Gravity {
                gravity: m.gravity_point(x_f)?,
            },
        })
    }
}

/// Plausibility term bound to one factual point; `None` contributes nothing.
#[derive(Debug, Clone)]
pub enum BoundTerm<'a> {
    None,
    Kde(&'a KdeModel),
    Gmm(&'a GmmModel),
    Gravity { gravity: Vector },
}

impl BoundTerm<'_> {
    pub fn value(&self, x: &[f64]) -> Result<f64> {
        Ok(self.value_grad(x)?.0)
    }

    pub fn value_grad(&self, x: &[f64]) -> Result<(f64, Vector)> {
        match self {
            BoundTerm::None => Ok((0.0, vec![0.0; x.len()])),
            BoundTerm::Kde(m) => m.value_grad(x),
            BoundTerm::Gmm(m) => m.value_grad(x),
            BoundTerm::Gravity { gravity } => {
                if x.len() != gravity.len() {
                    return Err(ScfeError::dim(format!(
                        "gravity point has {} coords, x has {}",
                        gravity.len(),
                        x.len()
                    )));
                }
                let diff: Vector = x.iter().zip(gravity).map(|(a, b)| a - b).collect();
                let dist = l2_norm(&diff);
                // qhat = -||x - G||; the gradient at x = G is defined as 0.
                if dist == 0.0 {
                    Ok((0.0, vec![0.0; x.len()]))
                } else {
                    Ok((-dist, diff.iter().map(|d| -d / dist).collect()))
                }
            }
        }
    }
}
