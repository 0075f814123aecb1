//! Sparse, plausible, actionable counterfactual explanations (CFEs).
//!
//! Given a trained classifier f, a factual point `x_f`, and a target class
//! `y_cf`, this crate searches for a counterfactual `x_cf` that
//!
//! * is assigned `y_cf` by the classifier (validity),
//! * stays close to `x_f` in squared Euclidean distance (proximity),
//! * changes few coordinates (sparsity, via an l0, l-half, or l1 penalty or
//!   an exact l0-ball constraint),
//! * lies near the target-class data manifold (plausibility, via a KDE, GMM,
//!   or k-NN density-gravity surrogate), and
//! * respects per-feature box bounds (actionability).
//!
//! The smooth part h(x) = theta2(x, x_f)^2 + gamma * L_f(x, y_cf) - tau * qhat(x, y_cf)
//! is minimized by accelerated proximal gradient iterations whose prox step
//! handles the non-smooth sparsity term and the box exactly (see [`proximal`]
//! and [`solver`]). The [`harness`] module adds datasets, hyperparameter
//! search, and the benchmark / robustness / 2-D demo experiments; [`metrics`]
//! provides theta-p distances and the Local Outlier Factor used for
//! evaluation.
//!
//! All floating point work is `f64`. Every random choice flows from a single
//! seed through [`numerics::Rng`], so identical inputs produce bit-identical
//! results, independent of the number of worker threads (see [`exec`]).

pub mod classifier;
pub mod error;
pub mod exec;
pub mod harness;
pub mod metrics;
pub mod numerics;
pub mod plausibility;
pub mod proximal;
pub mod solver;

pub use error::ScfeError;
