//! Accelerated proximal gradient solver for counterfactual search.
//!
//! The objective splits as h(x) + g(x). The smooth part is
//!
//!   h(x) = theta2(x, x_f)^2 + gamma * L_f(x, y_cf) - tau * qhat(x, y_cf)
//!
//! where L_f is the hinge-style classifier loss and qhat the plausibility
//! score. The nonsmooth part g is the box indicator plus the configured
//! sparsity penalty (or the l0-ball indicator in constraint mode), handled
//! exactly by [`crate::proximal::prox_step`].
//!
//! Each iteration takes a gradient step from the extrapolated point z, then a
//! prox step:
//!
//!   x_{t+1} = prox_{sigma_t g}(z_t - sigma_t grad_h(z_t))
//!   z_{t+1} = x_{t+1} + alpha_t (x_{t+1} - x_t)
//!
//! The loop always runs the configured number of iterations; there is no
//! early-stopping rule, so runs are exactly reproducible. The momentum
//! sequence makes per-step descent non-monotone: h can tick up slightly after
//! a momentum overshoot even while the overall trend is firmly downhill. The
//! descent test below therefore checks the statistical shape of a run rather
//! than per-step monotonicity.

use crate::classifier::{cfe_loss, input_gradient, ClassifierModel, LossConfig, LossMode};
use crate::error::{Result, ScfeError};
use crate::metrics::{theta0, theta2};
use crate::numerics::Vector;
use crate::plausibility::BoundTerm;
use crate::proximal::{project_box, prox_step, BoxBounds, PenaltyNorm, SparsityMode};

/// Where the iterate starts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitMode {
    /// Start at the factual point (the default).
    Factual,
    /// Start at the box projection of the origin.
    Zero,
}

/// Full solver configuration for one counterfactual search.
#[derive(Debug, Clone)]
pub struct SolverConfig {
    /// Weight on the classifier loss.
    pub gamma: f64,
    /// Weight on the plausibility score.
    pub tau: f64,
    /// Sparsity treatment handed to the prox operator.
    pub sparsity: SparsityMode,
    /// Hinge cut-off c of the classifier loss.
    pub cutoff: f64,
    /// Iteration count T. Every run performs exactly T prox steps.
    pub iterations: usize,
    /// Initial step size sigma_0.
    pub sigma0: f64,
    pub init_mode: InitMode,
    /// When set, the result carries all T + 1 iterates including the start.
    pub record_trajectory: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            gamma: 1.0,
            tau: 0.0,
            sparsity: SparsityMode::Penalty {
                p: PenaltyNorm::L1,
                beta: 0.1,
            },
            cutoff: 0.0,
            iterations: 200,
            sigma0: 0.1,
            init_mode: InitMode::Factual,
            record_trajectory: false,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self, dim: usize) -> Result<()> {
        if !(self.gamma.is_finite() && self.gamma >= 0.0) {
            return Err(ScfeError::invalid(format!(
                "gamma must be finite and >= 0, got {}",
                self.gamma
            )));
        }
        if !(self.tau.is_finite() && self.tau >= 0.0) {
            return Err(ScfeError::invalid(format!(
                "tau must be finite and >= 0, got {}",
                self.tau
            )));
        }
        if !(self.sigma0.is_finite() && self.sigma0 > 0.0) {
            return Err(ScfeError::invalid(format!(
                "sigma0 must be finite and > 0, got {}",
                self.sigma0
            )));
        }
        if !(self.cutoff.is_finite() && self.cutoff >= 0.0) {
            return Err(ScfeError::invalid(format!(
                "cutoff must be finite and >= 0, got {}",
                self.cutoff
            )));
        }
        if self.iterations == 0 {
            return Err(ScfeError::invalid("iterations must be >= 1"));
        }
        self.sparsity.validate(dim)
    }
}

/// Result of one counterfactual search.
#[derive(Debug, Clone)]
pub struct CfeResult {
    pub x_cf: Vector,
    /// True when the classifier assigns the target class to `x_cf`.
    pub valid: bool,
    pub theta0: f64,
    pub theta2: f64,
    /// Final smooth objective h(x_cf), for diagnostics.
    pub objective: f64,
    /// All iterates x_0 .. x_T when recording was requested.
    pub trajectory: Option<Vec<Vector>>,
    /// The configuration that produced this result.
    pub config: SolverConfig,
}

/// Momentum coefficients alpha_1 .. alpha_T.
///
/// With beta_0 = 0 and beta_t = (1 + sqrt(1 + 4 beta_{t-1}^2)) / 2, the
/// coefficient applied after step t is alpha_t = (beta_t - 1) / beta_{t+1}.
/// The sequence starts at exactly 0 and climbs monotonically toward 1.
pub fn extrapolation_sequence(t_max: usize) -> Vec<f64> {
    let mut beta = 0.0f64;
    let mut beta_next = 0.5 * (1.0 + (1.0 + 4.0 * beta * beta).sqrt());
    let mut alphas = Vec::with_capacity(t_max);
    for _ in 0..t_max {
        beta = beta_next;
        beta_next = 0.5 * (1.0 + (1.0 + 4.0 * beta * beta).sqrt());
        alphas.push((beta - 1.0) / beta_next);
    }
    alphas
}

/// Decaying step sizes sigma_0 .. sigma_{T-1}.
///
/// The step shrinks multiplicatively: sigma_{t+1} = sigma_t sqrt(1 - t / T).
/// Entry 0 is sigma_0 itself, so the ratio of entries t and t - 1 equals
/// sqrt(1 - (t - 1) / T). The product telescopes toward zero, which freezes
/// the iterate near the end of a run instead of stopping the loop early.
pub fn step_schedule(sigma0: f64, t_max: usize) -> Result<Vec<f64>> {
    if !(sigma0.is_finite() && sigma0 > 0.0) {
        return Err(ScfeError::invalid(format!(
            "sigma0 must be finite and > 0, got {sigma0}"
        )));
    }
    if t_max == 0 {
        return Err(ScfeError::invalid("step schedule needs at least one iteration"));
    }
    let mut out = Vec::with_capacity(t_max);
    let mut sigma = sigma0;
    out.push(sigma);
    for t in 1..t_max {
        sigma *= (1.0 - (t - 1) as f64 / t_max as f64).sqrt();
        out.push(sigma);
    }
    Ok(out)
}

/// Loss configuration implied by the model head: width 1 is binary, anything
/// wider is multiclass.
pub fn loss_for(model: &ClassifierModel, y_cf: usize, cutoff: f64) -> LossConfig {
    let mode = if model.output_dim() == 1 {
        LossMode::Binary
    } else {
        LossMode::Multiclass
    };
    LossConfig::new(mode, cutoff, y_cf)
}

/// Gradient of the smooth objective h at x.
pub fn grad_h(
    x: &[f64],
    x_f: &[f64],
    classifier: &ClassifierModel,
    loss: &LossConfig,
    plausibility: &BoundTerm,
    gamma: f64,
    tau: f64,
) -> Result<Vector> {
    let mut grad: Vector = x.iter().zip(x_f).map(|(a, b)| 2.0 * (a - b)).collect();
    if gamma != 0.0 {
        let loss_grad = input_gradient(classifier, x, loss)?;
        for (g, l) in grad.iter_mut().zip(&loss_grad) {
            *g += gamma * l;
        }
    }
    if tau != 0.0 {
        let (_, q_grad) = plausibility.value_grad(x)?;
        for (g, q) in grad.iter_mut().zip(&q_grad) {
            *g -= tau * q;
        }
    }
    Ok(grad)
}

/// Smooth objective h at x, for diagnostics and tests.
pub fn value_h(
    x: &[f64],
    x_f: &[f64],
    classifier: &ClassifierModel,
    loss: &LossConfig,
    plausibility: &BoundTerm,
    gamma: f64,
    tau: f64,
) -> Result<f64> {
    let d2 = theta2(x, x_f);
    let mut h = d2 * d2;
    if gamma != 0.0 {
        h += gamma * cfe_loss(classifier, x, loss)?;
    }
    if tau != 0.0 {
        h -= tau * plausibility.value(x)?;
    }
    Ok(h)
}

/// Runs the accelerated proximal gradient loop for one factual point.
pub fn apg_solve(
    x_f: &[f64],
    y_cf: usize,
    classifier: &ClassifierModel,
    plausibility: &BoundTerm,
    bounds: &BoxBounds,
    config: &SolverConfig,
) -> Result<CfeResult> {
    let d = x_f.len();
    if d != bounds.dim() {
        return Err(ScfeError::dim(format!(
            "factual has {} features, box has {}",
            d,
            bounds.dim()
        )));
    }
    if d != classifier.input_dim() {
        return Err(ScfeError::dim(format!(
            "factual has {} features, classifier expects {}",
            d,
            classifier.input_dim()
        )));
    }
    if !bounds.contains(x_f) {
        return Err(ScfeError::invalid("factual point lies outside the box"));
    }
    if y_cf >= classifier.n_classes() {
        return Err(ScfeError::invalid(format!(
            "target class {} out of range for {} classes",
            y_cf,
            classifier.n_classes()
        )));
    }
    config.validate(d)?;
    let loss = loss_for(classifier, y_cf, config.cutoff);

    let x0: Vector = match config.init_mode {
        InitMode::Factual => x_f.to_vec(),
        InitMode::Zero => project_box(&vec![0.0; d], bounds),
    };
    let alphas = extrapolation_sequence(config.iterations);
    let sigmas = step_schedule(config.sigma0, config.iterations)?;

    let mut trajectory = config
        .record_trajectory
        .then(|| Vec::with_capacity(config.iterations + 1));
    if let Some(t) = trajectory.as_mut() {
        t.push(x0.clone());
    }

    let mut x_prev = x0.clone();
    let mut z = x0;
    for t in 0..config.iterations {
        let grad = grad_h(&z, x_f, classifier, &loss, plausibility, config.gamma, config.tau)?;
        if grad.iter().any(|g| !g.is_finite()) {
            return Err(ScfeError::numeric(format!(
                "non-finite gradient at iteration {t}"
            )));
        }
        let sigma = sigmas[t];
        let s: Vector = z
            .iter()
            .zip(&grad)
            .map(|(zi, gi)| zi - sigma * gi)
            .collect();
        let x_next = prox_step(&config.sparsity, &s, x_f, sigma, bounds)?;
        let alpha = alphas[t];
        z = x_next
            .iter()
            .zip(&x_prev)
            .map(|(xn, xp)| xn + alpha * (xn - xp))
            .collect();
        x_prev = x_next;
        if let Some(traj) = trajectory.as_mut() {
            traj.push(x_prev.clone());
        }
    }

    let valid = classifier.predict(&x_prev)? == y_cf;
    let objective = value_h(
        &x_prev,
        x_f,
        classifier,
        &loss,
        plausibility,
        config.gamma,
        config.tau,
    )?;
    Ok(CfeResult {
        theta0: theta0(&x_prev, x_f),
        theta2: theta2(&x_prev, x_f),
        valid,
        objective,
        trajectory,
        config: config.clone(),
        x_cf: x_prev,
    })
}
