//! Exact proximal operators and projections for the sparsity term, composed
//! exactly with the feature box.
//!
//! Every operator minimizes `0.5 * ||z - s||^2 + sigma * g_p(z)` over the box,
//! where `s = z_t - sigma * grad_h(z_t)` is the gradient-step point and `g_p`
//! is the sparsity penalty `beta * theta_p(., x_f)` (so the effective scale is
//! `lambda = beta * sigma`) or the indicator of `{theta0(., x_f) <= m}`.
//!
//! The objectives are separable across coordinates, so exactness over the box
//! reduces to a 1-D argument per coordinate:
//!
//! * l1: the shrinkage solution is the minimizer of a convex 1-D function, so
//!   clamping it into the box stays exact.
//! * l0 penalty: two candidates, `clamp(s_i)` (pay lambda) and `x_f_i` (free);
//!   ties keep `x_f_i`, the sparser choice.
//! * l1/2: half-thresholding gives the unconstrained stationary minimizer; the
//!   boxed minimum is then one of {formula output, lower bound, upper bound,
//!   x_f_i}, resolved against the exact 1-D objective (lowest candidate index
//!   wins ties). The objective restricted to either side of the cusp at x_f_i
//!   has at most one interior local minimum, so this candidate set is exact.
//! * l0-ball constraint: per coordinate the best feasible on-support value is
//!   `clamp(s_i)` with savings `v_i = (s_i - x_f_i)^2 - (s_i - clamp(s_i))^2`;
//!   picking the m largest savings (ties toward the lowest index) is the exact
//!   Euclidean projection onto `{theta0(., x_f) <= m}` intersected with the box.

use crate::error::{Result, ScfeError};

/// Per-feature bounds `lo_i <= z_i <= hi_i`. Immutable features can be frozen
/// by setting `lo_i = hi_i = x_f_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxBounds {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl BoxBounds {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() {
            return Err(ScfeError::dim(format!(
                "box bounds of lengths {} and {}",
                lo.len(),
                hi.len()
            )));
        }
        for (i, (&l, &h)) in lo.iter().zip(&hi).enumerate() {
            if !(l <= h) {
                return Err(ScfeError::invalid(format!(
                    "box bound {} has lo = {} > hi = {}",
                    i, l, h
                )));
            }
        }
        Ok(BoxBounds { lo, hi })
    }

    /// The unit box [0, 1]^d.
    pub fn unit(d: usize) -> Self {
        BoxBounds {
            lo: vec![0.0; d],
            hi: vec![1.0; d],
        }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.lo.len()
            && x.iter()
                .zip(self.lo.iter().zip(&self.hi))
                .all(|(&v, (&l, &h))| l <= v && v <= h)
    }

    pub fn clamp_coord(&self, i: usize, v: f64) -> f64 {
        v.clamp(self.lo[i], self.hi[i])
    }
}

/// Sparsity handling for the prox step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SparsityMode {
    /// beta * theta_p(., x_f) with p in {0, 1/2, 1}. beta = 0 degenerates to
    /// the pure box projection.
    Penalty { p: PenaltyNorm, beta: f64 },
    /// Exact constraint theta0(., x_f) <= m intersected with the box.
    Constraint { m: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PenaltyNorm {
    L0,
    LHalf,
    L1,
}

impl SparsityMode {
    pub fn validate(&self, d: usize) -> Result<()> {
        match *self {
            SparsityMode::Penalty { beta, .. } => {
                if !beta.is_finite() || beta < 0.0 {
                    return Err(ScfeError::invalid(format!(
                        "penalty weight beta must be finite and >= 0, got {}",
                        beta
                    )));
                }
            }
            SparsityMode::Constraint { m } => {
                if m > d {
                    return Err(ScfeError::invalid(format!(
                        "sparsity budget m = {} exceeds dimension d = {}",
                        m, d
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Coordinatewise clamp onto the box; idempotent.
pub fn project_box(s: &[f64], bounds: &BoxBounds) -> Vec<f64> {
    s.iter()
        .enumerate()
        .map(|(i, &v)| bounds.clamp_coord(i, v))
        .collect()
}

fn shrink(v: f64, lambda: f64) -> f64 {
    if v > lambda {
        v - lambda
    } else if v < -lambda {
        v + lambda
    } else {
        0.0
    }
}

/// Prox of `lambda * theta1(., x_f)` plus the box indicator.
pub fn prox_l1_box(s: &[f64], x_f: &[f64], lambda: f64, bounds: &BoxBounds) -> Vec<f64> {
    s.iter()
        .enumerate()
        .map(|(i, &si)| bounds.clamp_coord(i, x_f[i] + shrink(si - x_f[i], lambda)))
        .collect()
}

/// Prox of `lambda * theta0(., x_f)` plus the box indicator.
pub fn prox_l0_penalty_box(s: &[f64], x_f: &[f64], lambda: f64, bounds: &BoxBounds) -> Vec<f64> {
    s.iter()
        .enumerate()
        .map(|(i, &si)| {
            let keep = bounds.clamp_coord(i, si);
            let move_cost =
                0.5 * (keep - si) * (keep - si) + if keep != x_f[i] { lambda } else { 0.0 };
            let stay_cost = 0.5 * (x_f[i] - si) * (x_f[i] - si);
            if stay_cost <= move_cost {
                x_f[i]
            } else {
                keep
            }
        })
        .collect()
}

/// Unconstrained half-thresholding in the frame centered at the factual:
/// the exact minimizer of `0.5 * (w - sp)^2 + lambda * sqrt(|w|)`.
fn half_threshold(sp: f64, lambda: f64) -> f64 {
    // Threshold (54^(1/3)/4) * (2*lambda)^(2/3), equal to (3/2) * lambda^(2/3).
    let threshold = 54f64.cbrt() / 4.0 * (2.0 * lambda).powf(2.0 / 3.0);
    let a = sp.abs();
    if a <= threshold {
        return 0.0;
    }
    // arccos argument is at most 1/sqrt(2) on |sp| >= threshold.
    let phi = (lambda / 4.0 * (a / 3.0).powf(-1.5)).acos();
    (2.0 / 3.0) * sp * (1.0 + (2.0 * std::f64::consts::PI / 3.0 - 2.0 / 3.0 * phi).cos())
}

/// Prox of `lambda * theta_{1/2}` terms plus the box indicator: per
/// coordinate, `lambda * sqrt(|z_i - x_f_i|)` with the box resolved by exact
/// candidate enumeration.
pub fn prox_l_half_box(s: &[f64], x_f: &[f64], lambda: f64, bounds: &BoxBounds) -> Vec<f64> {
    let objective = |z: f64, si: f64, xfi: f64| {
        0.5 * (z - si) * (z - si) + lambda * (z - xfi).abs().sqrt()
    };
    s.iter()
        .enumerate()
        .map(|(i, &si)| {
            let xfi = x_f[i];
            let free = xfi + half_threshold(si - xfi, lambda);
            let mut candidates = [f64::NAN; 4];
            let mut n = 0;
            if bounds.lo[i] <= free && free <= bounds.hi[i] {
                candidates[n] = free;
                n += 1;
            }
            candidates[n] = bounds.lo[i];
            candidates[n + 1] = bounds.hi[i];
            candidates[n + 2] = xfi;
            n += 3;
            let mut best = candidates[0];
            let mut best_obj = objective(best, si, xfi);
            for &cand in &candidates[1..n] {
                let obj = objective(cand, si, xfi);
                if obj < best_obj {
                    best = cand;
                    best_obj = obj;
                }
            }
            best
        })
        .collect()
}

/// Exact Euclidean projection onto `{z : theta0(z, x_f) <= m}` intersected
/// with the box. Requires `x_f` inside the box so the feasible set is
/// non-empty.
pub fn project_l0ball_box(
    s: &[f64],
    x_f: &[f64],
    m: usize,
    bounds: &BoxBounds,
) -> Result<Vec<f64>> {
    let d = s.len();
    if x_f.len() != d || bounds.dim() != d {
        return Err(ScfeError::dim(format!(
            "projection inputs of lengths {}, {}, {}",
            d,
            x_f.len(),
            bounds.dim()
        )));
    }
    if m > d {
        return Err(ScfeError::invalid(format!(
            "sparsity budget m = {} exceeds dimension d = {}",
            m, d
        )));
    }
    if !bounds.contains(x_f) {
        return Err(ScfeError::invalid(
            "factual point lies outside the box".to_string(),
        ));
    }
    let mut out = x_f.to_vec();
    if m == 0 {
        return Ok(out);
    }
    // Savings from letting coordinate i move to its boxed optimum.
    let mut savings: Vec<(f64, usize)> = (0..d)
        .map(|i| {
            let z = bounds.clamp_coord(i, s[i]);
            let w = s[i] - x_f[i];
            let v = w * w - (s[i] - z) * (s[i] - z);
            (v, i)
        })
        .collect();
    savings.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
    for &(_, i) in savings.iter().take(m) {
        out[i] = bounds.clamp_coord(i, s[i]);
    }
    Ok(out)
}

/// Dispatches the prox step for one iteration with step size `sigma`.
pub fn prox_step(
    mode: &SparsityMode,
    s: &[f64],
    x_f: &[f64],
    sigma: f64,
    bounds: &BoxBounds,
) -> Result<Vec<f64>> {
    match *mode {
        SparsityMode::Penalty { p, beta } => {
            let lambda = beta * sigma;
            Ok(match p {
                PenaltyNorm::L1 => prox_l1_box(s, x_f, lambda, bounds),
                PenaltyNorm::L0 => prox_l0_penalty_box(s, x_f, lambda, bounds),
                PenaltyNorm::LHalf => prox_l_half_box(s, x_f, lambda, bounds),
            })
        }
        SparsityMode::Constraint { m } => project_l0ball_box(s, x_f, m, bounds),
    }
}
