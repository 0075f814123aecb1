//! Per-instance hyperparameter search.
//!
//! The outer grid walks beta (penalty mode only), tau, and the gravity
//! neighbor count k. Inside each cell a bracketing bisection over log10(gamma)
//! spends a fixed evaluation budget hunting the smallest gamma that yields a
//! valid counterfactual: a valid midpoint moves the upper bracket down, an
//! invalid one moves the lower bracket up. Every solve enters one shared
//! candidate pool; the winner is the valid candidate minimizing
//! (theta0, theta2) lexicographically, with earlier evaluations winning ties
//! so the outcome never depends on iteration internals. When nothing is valid
//! the candidate with the lowest final classifier loss is returned, still
//! flagged invalid.

use crate::classifier::{cfe_loss, ClassifierModel};
use crate::error::{Result, ScfeError};
use crate::numerics::{Matrix, Rng};
use crate::plausibility::{BoundTerm, PlausibilityKind, PlausibilityModel, PlausibilityParams};
use crate::proximal::{BoxBounds, SparsityMode};
use crate::solver::{apg_solve, loss_for, CfeResult, SolverConfig};

/// Hyperparameter ranges for [`search_hyperparameters`].
#[derive(Debug, Clone)]
pub struct SearchSpace {
    /// Penalty weights, ascending and positive.
    pub beta_grid: Vec<f64>,
    /// Plausibility weights, ascending and positive. Ignored (treated as {0})
    /// when the experiment runs without a plausibility term.
    pub tau_grid: Vec<f64>,
    /// log10 bracket for the gamma bisection.
    pub gamma_lo_exp: f64,
    pub gamma_hi_exp: f64,
    /// Number of gamma evaluations per grid cell.
    pub gamma_steps: usize,
    /// Neighbor counts tried in gravity mode.
    pub k_candidates: Vec<usize>,
}

/// log-spaced grid, one point per decade endpoint-inclusive.
pub fn log_grid(lo_exp: i32, hi_exp: i32, points: usize) -> Vec<f64> {
    if points == 1 {
        return vec![10f64.powi(lo_exp)];
    }
    let (lo, hi) = (lo_exp as f64, hi_exp as f64);
    (0..points)
        .map(|i| 10f64.powf(lo + (hi - lo) * i as f64 / (points - 1) as f64))
        .collect()
}

impl Default for SearchSpace {
    fn default() -> Self {
        SearchSpace {
            beta_grid: log_grid(-3, 3, 7),
            tau_grid: log_grid(-3, 3, 7),
            gamma_lo_exp: -3.0,
            gamma_hi_exp: 3.0,
            gamma_steps: 10,
            k_candidates: vec![3, 4, 5],
        }
    }
}

impl SearchSpace {
    pub fn validate(&self) -> Result<()> {
        for (name, grid) in [("beta", &self.beta_grid), ("tau", &self.tau_grid)] {
            if grid.is_empty() {
                return Err(ScfeError::invalid(format!("{name} grid is empty")));
            }
            for w in grid.windows(2) {
                if w[1] <= w[0] {
                    return Err(ScfeError::invalid(format!("{name} grid must ascend")));
                }
            }
            // Zero entries are meaningful: beta 0 is the pure box prox and
            // tau 0 drops the plausibility term.
            if grid.iter().any(|&v| !(v.is_finite() && v >= 0.0)) {
                return Err(ScfeError::invalid(format!(
                    "{name} grid must be non-negative"
                )));
            }
        }
        if !(self.gamma_lo_exp.is_finite()
            && self.gamma_hi_exp.is_finite()
            && self.gamma_lo_exp <= self.gamma_hi_exp)
        {
            return Err(ScfeError::invalid("gamma bracket must satisfy lo <= hi"));
        }
        if self.gamma_steps == 0 {
            return Err(ScfeError::invalid("gamma search needs at least one step"));
        }
        if self.k_candidates.is_empty() || self.k_candidates.iter().any(|&k| k == 0) {
            return Err(ScfeError::invalid("k candidates must be positive"));
        }
        Ok(())
    }
}

/// Per-class plausibility models, fitted once and shared across instances.
/// Gravity keeps one model per candidate k because the stored densities
/// depend on the neighbor count.
#[derive(Debug, Clone)]
pub struct PlausibilityBank {
    kind: PlausibilityKind,
    by_class: Vec<Vec<(usize, PlausibilityModel)>>,
}

impl PlausibilityBank {
    pub fn fit(
        kind: PlausibilityKind,
        train_x: &Matrix,
        train_y: &[usize],
        classifier: Option<&ClassifierModel>,
        n_classes: usize,
        params: &PlausibilityParams,
        k_candidates: &[usize],
        rng: &mut Rng,
    ) -> Result<Self> {
        let mut by_class = Vec::with_capacity(n_classes);
        for class in 0..n_classes {
            let mut models = Vec::new();
            match kind {
                PlausibilityKind::None => {}
                PlausibilityKind::Knn => {
                    for &k in k_candidates {
                        let p = PlausibilityParams { k, ..params.clone() };
                        let model = PlausibilityModel::fit(
                            kind, train_x, train_y, class, classifier, &p, rng,
                        )?
                        .expect("kind is not None");
                        models.push((k, model));
                    }
                }
                _ => {
                    let model =
                        PlausibilityModel::fit(kind, train_x, train_y, class, classifier, params, rng)?
                            .expect("kind is not None");
                    models.push((0, model));
                }
            }
            by_class.push(models);
        }
        Ok(PlausibilityBank { kind, by_class })
    }

    pub fn kind(&self) -> PlausibilityKind {
        self.kind
    }

    pub fn model(&self, class: usize, k: usize) -> Result<&PlausibilityModel> {
        self.by_class
            .get(class)
            .and_then(|models| models.iter().find(|(mk, _)| *mk == k))
            .map(|(_, m)| m)
            .ok_or_else(|| {
                ScfeError::invalid(format!("no plausibility model for class {class}, k {k}"))
            })
    }
}

/// The winning counterfactual plus the hyperparameters that produced it.
#[derive(Debug, Clone)]
pub struct SearchOutcome {
    pub result: CfeResult,
    /// Winning penalty weight; 0 in constraint mode and for the shortcut.
    pub beta: f64,
    pub tau: f64,
    pub gamma: f64,
    /// Winning gravity neighbor count; 0 outside gravity mode.
    pub k: usize,
    /// Total apg solves spent.
    pub evaluations: usize,
}

struct Pool<'a> {
    classifier: &'a ClassifierModel,
    y_cf: usize,
    cutoff: f64,
    best_valid: Option<(SearchOutcome, (f64, f64))>,
    best_any: Option<(SearchOutcome, f64)>,
    evaluations: usize,
}

impl Pool<'_> {
    fn offer(&mut self, result: CfeResult, beta: f64, tau: f64, gamma: f64, k: usize) -> Result<()> {
        self.evaluations += 1;
        let outcome = SearchOutcome {
            beta,
            tau,
            gamma,
            k,
            evaluations: 0,
            result,
        };
        if outcome.result.valid {
            let key = (outcome.result.theta0, outcome.result.theta2);
            let better = match &self.best_valid {
                None => true,
                Some((_, best)) => key < *best,
            };
            if better {
                self.best_valid = Some((outcome, key));
            }
        } else if self.best_valid.is_none() {
            let loss = cfe_loss(
                self.classifier,
                &outcome.result.x_cf,
                &loss_for(self.classifier, self.y_cf, self.cutoff),
            )?;
            let better = match &self.best_any {
                None => true,
                Some((_, best)) => loss < *best,
            };
            if better {
                self.best_any = Some((outcome, loss));
            }
        }
        Ok(())
    }
}

/// Searches the space for the best counterfactual for one factual point.
///
/// A factual already classified as the target is its own optimal
/// counterfactual; it returns immediately with theta0 = 0 and no solves.
pub fn search_hyperparameters(
    x_f: &[f64],
    y_cf: usize,
    classifier: &ClassifierModel,
    bank: &PlausibilityBank,
    bounds: &BoxBounds,
    space: &SearchSpace,
    template: &SolverConfig,
) -> Result<SearchOutcome> {
    space.validate()?;
    if classifier.predict(x_f)? == y_cf {
        return Ok(SearchOutcome {
            result: CfeResult {
                x_cf: x_f.to_vec(),
                valid: true,
                theta0: 0.0,
                theta2: 0.0,
                objective: 0.0,
                trajectory: None,
                config: template.clone(),
            },
            beta: 0.0,
            tau: 0.0,
            gamma: 0.0,
            k: 0,
            evaluations: 0,
        });
    }

    let taus: Vec<f64> = if bank.kind() == PlausibilityKind::None {
        vec![0.0]
    } else {
        space.tau_grid.clone()
    };
    let ks: Vec<usize> = if bank.kind() == PlausibilityKind::Knn {
        space.k_candidates.clone()
    } else {
        vec![0]
    };
    // (reported beta, sparsity mode) per outer cell.
    let sparsity_cells: Vec<(f64, SparsityMode)> = match template.sparsity {
        SparsityMode::Penalty { p, .. } => space
            .beta_grid
            .iter()
            .map(|&beta| (beta, SparsityMode::Penalty { p, beta }))
            .collect(),
        SparsityMode::Constraint { m } => vec![(0.0, SparsityMode::Constraint { m })],
    };

    let mut pool = Pool {
        classifier,
        y_cf,
        cutoff: template.cutoff,
        best_valid: None,
        best_any: None,
        evaluations: 0,
    };
    for (beta_label, sparsity) in &sparsity_cells {
        for &tau in &taus {
            for &k in &ks {
                let term = if tau == 0.0 {
                    BoundTerm::None
                } else {
                    bank.model(y_cf, k)?.bind(x_f)?
                };
                let (mut lo, mut hi) = (space.gamma_lo_exp, space.gamma_hi_exp);
                for _ in 0..space.gamma_steps {
                    let mid = 0.5 * (lo + hi);
                    let gamma = 10f64.powf(mid);
                    let config = SolverConfig {
                        gamma,
                        tau,
                        sparsity: *sparsity,
                        record_trajectory: false,
                        ..template.clone()
                    };
                    let result = apg_solve(x_f, y_cf, classifier, &term, bounds, &config)?;
                    let valid = result.valid;
                    pool.offer(result, *beta_label, tau, gamma, k)?;
                    if valid {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
            }
        }
    }

    let evaluations = pool.evaluations;
    let mut outcome = match (pool.best_valid, pool.best_any) {
        (Some((outcome, _)), _) => outcome,
        (None, Some((outcome, _))) => outcome,
        (None, None) => unreachable!("grids are non-empty, so at least one solve ran"),
    };
    outcome.evaluations = evaluations;
    Ok(outcome)
}
