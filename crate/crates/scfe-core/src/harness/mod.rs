//! Experiment harness: dataset plumbing, per-instance search, and the three
//! desk-scale experiments (metrics benchmark, robustness curves, 2D demo).
//!
//! Every experiment flows all randomness from one seed through fixed derive
//! streams, so a (seed, config) pair pins the output CSVs byte for byte, with
//! one deliberate exception: wall-clock `seconds` columns. Instances are
//! independent given the shared immutable models, and results are gathered in
//! input order, so worker count changes timing but never content.

pub mod data;
pub mod search;

pub use data::{
    generate_housing_style, generate_synth2d, generate_wine_style, load_csv_dataset,
    parse_csv_dataset, prepare, to_csv_string, DatasetTable, PreparedDataset,
};
pub use search::{log_grid, search_hyperparameters, PlausibilityBank, SearchOutcome, SearchSpace};

use std::time::Instant;

use crate::classifier::{train_adam, ClassifierModel, TrainReport};
use crate::error::{Result, ScfeError};
use crate::exec::ordered_map;
use crate::metrics::{theta2, InstanceMetrics, LofIndex, MetricsReport, PNorm, REPORT_CSV_HEADER};
use crate::numerics::{Matrix, Rng, Vector};
use crate::plausibility::{BoundTerm, PlausibilityKind, PlausibilityParams};
use crate::proximal::{project_box, SparsityMode};
use crate::solver::{apg_solve, CfeResult, SolverConfig};

/// Fixed Rng derive streams; every experiment stage draws from its own.
pub const STREAM_DATA: u64 = 0xD1;
pub const STREAM_SPLIT: u64 = 0xD2;
pub const STREAM_TRAIN: u64 = 0xD3;
pub const STREAM_PLAUS: u64 = 0xD4;
pub const STREAM_ROBUST: u64 = 0xD5;

/// How each factual point picks its target class.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TargetPolicy {
    /// Binary datasets: target the opposite of the prediction.
    Flip,
    /// One fixed target class; points already predicted there are skipped.
    Fixed(usize),
    /// Cyclic target (prediction + 1) mod n_classes; explains every point.
    Next,
}

impl TargetPolicy {
    /// Target class for a point with the given prediction, or None when the
    /// point is skipped.
    pub fn target(&self, predicted: usize, n_classes: usize) -> Result<Option<usize>> {
        match *self {
            TargetPolicy::Flip => {
                if n_classes != 2 {
                    return Err(ScfeError::invalid(format!(
                        "flip policy needs a binary dataset, got {} classes",
                        n_classes
                    )));
                }
                Ok(Some(1 - predicted))
            }
            TargetPolicy::Fixed(class) => {
                if class >= n_classes {
                    return Err(ScfeError::invalid(format!(
                        "fixed target {} out of range for {} classes",
                        class, n_classes
                    )));
                }
                Ok((predicted != class).then_some(class))
            }
            TargetPolicy::Next => Ok(Some((predicted + 1) % n_classes)),
        }
    }
}

/// One experiment's knobs; dataset and classifier arrive as arguments.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    /// Label for the report's method column.
    pub method: String,
    pub plausibility: PlausibilityKind,
    pub plausibility_params: PlausibilityParams,
    pub target: TargetPolicy,
    pub space: SearchSpace,
    /// Solver template; gamma, tau, and the penalty weight are filled in by
    /// the per-instance search.
    pub solver: SolverConfig,
    /// Neighbor count for the LOF metric.
    pub lof_k: usize,
    pub seed: u64,
    /// Worker count: 1 sequential, 0 all cores, n a pool of n.
    pub jobs: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            method: "scfe".to_string(),
            plausibility: PlausibilityKind::None,
            plausibility_params: PlausibilityParams::default(),
            target: TargetPolicy::Flip,
            space: SearchSpace::default(),
            solver: SolverConfig::default(),
            lof_k: 20,
            seed: 0,
            jobs: 1,
        }
    }
}

/// One explained instance, matching the per-instance CSV schema plus the
/// vectors later stages (robustness) reuse.
#[derive(Debug, Clone)]
pub struct InstanceRow {
    pub index: usize,
    pub target: usize,
    pub valid: bool,
    pub theta0: f64,
    pub theta2: f64,
    pub lof: f64,
    pub beta: f64,
    pub tau: f64,
    pub gamma: f64,
    pub k: usize,
    pub seconds: f64,
    pub x_f: Vector,
    pub x_cf: Vector,
}

pub const INSTANCE_CSV_HEADER: &str =
    "index,target,valid,theta0,theta2,lof,beta,tau,gamma,k,seconds";

impl InstanceRow {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{},{:.6}",
            self.index,
            self.target,
            u8::from(self.valid),
            self.theta0,
            self.theta2,
            self.lof,
            self.beta,
            self.tau,
            self.gamma,
            self.k,
            self.seconds
        )
    }
}

#[derive(Debug, Clone)]
pub struct BenchmarkOutput {
    pub rows: Vec<InstanceRow>,
    pub report: MetricsReport,
    /// Wall-clock seconds for the whole explain batch.
    pub total_seconds: f64,
}

impl BenchmarkOutput {
    pub fn instance_csv(&self) -> String {
        let mut out = String::from(INSTANCE_CSV_HEADER);
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.csv_row());
            out.push('\n');
        }
        out
    }

    pub fn report_csv(&self) -> String {
        format!("{}\n{}\n", REPORT_CSV_HEADER, self.report.csv_row())
    }
}

/// Glorot-initialized MLP (linear when `hidden` is empty) trained on the
/// prepared split. Binary datasets get a width-1 sigmoid head.
pub fn train_model(
    prep: &PreparedDataset,
    hidden: &[usize],
    epochs: usize,
    batch: usize,
    lr: f64,
    rng: &mut Rng,
) -> Result<(ClassifierModel, TrainReport)> {
    let out_dim = if prep.n_classes == 2 { 1 } else { prep.n_classes };
    let mut model = ClassifierModel::mlp(prep.train_x.cols(), hidden, out_dim, rng)?;
    let report = train_adam(
        &mut model,
        &prep.train_x,
        &prep.train_y,
        Some((&prep.test_x, &prep.test_y)),
        epochs,
        batch,
        lr,
        rng,
    )?;
    Ok((model, report))
}

fn class_points(x: &Matrix, y: &[usize], class: usize) -> Result<Matrix> {
    let rows: Vec<Vec<f64>> = x
        .row_iter()
        .zip(y)
        .filter(|&(_, &label)| label == class)
        .map(|(row, _)| row.to_vec())
        .collect();
    if rows.is_empty() {
        return Err(ScfeError::invalid(format!("no training points of class {class}")));
    }
    Matrix::from_rows(&rows)
}

/// LOF indices for each class that appears as a target, over that class's
/// training rows. k shrinks to n - 1 for small classes.
fn lof_indices(
    prep: &PreparedDataset,
    targets: &[usize],
    lof_k: usize,
) -> Result<Vec<Option<LofIndex>>> {
    let mut indices: Vec<Option<LofIndex>> = vec![None; prep.n_classes];
    for class in 0..prep.n_classes {
        if !targets.contains(&class) {
            continue;
        }
        let points = class_points(&prep.train_x, &prep.train_y, class)?;
        let k = lof_k.min(points.rows().saturating_sub(1));
        if k == 0 {
            return Err(ScfeError::invalid(format!(
                "class {class} has too few points for LOF"
            )));
        }
        indices[class] = Some(LofIndex::build(&points, k, PNorm::Two)?);
    }
    Ok(indices)
}

/// Explains every eligible test point and aggregates the metrics report.
pub fn run_benchmark(
    prep: &PreparedDataset,
    classifier: &ClassifierModel,
    cfg: &ExperimentConfig,
) -> Result<BenchmarkOutput> {
    if cfg.lof_k == 0 {
        return Err(ScfeError::invalid("lof_k must be positive"));
    }
    cfg.space.validate()?;
    let mut instances: Vec<(usize, Vector, usize)> = Vec::new();
    for (i, row) in prep.test_x.row_iter().enumerate() {
        let predicted = classifier.predict(row)?;
        if let Some(target) = cfg.target.target(predicted, prep.n_classes)? {
            instances.push((i, row.to_vec(), target));
        }
    }
    if instances.is_empty() {
        return Err(ScfeError::invalid("no test points left to explain"));
    }
    let targets: Vec<usize> = instances.iter().map(|(_, _, t)| *t).collect();
    let lofs = lof_indices(prep, &targets, cfg.lof_k)?;
    let mut plaus_rng = Rng::derive(cfg.seed, STREAM_PLAUS);
    let bank = PlausibilityBank::fit(
        cfg.plausibility,
        &prep.train_x,
        &prep.train_y,
        Some(classifier),
        prep.n_classes,
        &cfg.plausibility_params,
        &cfg.space.k_candidates,
        &mut plaus_rng,
    )?;

    let batch_start = Instant::now();
    let rows: Result<Vec<InstanceRow>> = ordered_map(cfg.jobs, &instances, |(i, x_f, target)| {
        let start = Instant::now();
        let outcome = search_hyperparameters(
            x_f,
            *target,
            classifier,
            &bank,
            &prep.bounds,
            &cfg.space,
            &cfg.solver,
        )?;
        let seconds = start.elapsed().as_secs_f64();
        let lof = lofs[*target]
            .as_ref()
            .expect("index built for every target class")
            .query(&outcome.result.x_cf)?;
        Ok(InstanceRow {
            index: *i,
            target: *target,
            valid: outcome.result.valid,
            theta0: outcome.result.theta0,
            theta2: outcome.result.theta2,
            lof,
            beta: outcome.beta,
            tau: outcome.tau,
            gamma: outcome.gamma,
            k: outcome.k,
            seconds,
            x_f: x_f.clone(),
            x_cf: outcome.result.x_cf,
        })
    })?
    .into_iter()
    .collect();
    let rows = rows?;
    let total_seconds = batch_start.elapsed().as_secs_f64();

    let metrics: Vec<InstanceMetrics> = rows
        .iter()
        .map(|r| InstanceMetrics {
            valid: r.valid,
            theta0: r.theta0,
            theta2: r.theta2,
            lof: r.lof,
        })
        .collect();
    let report = crate::metrics::aggregate_report(&cfg.method, &prep.name, &metrics, total_seconds)?;
    Ok(BenchmarkOutput {
        rows,
        report,
        total_seconds,
    })
}

/// One aggregate robustness row: medians over instances at one radius.
#[derive(Debug, Clone)]
pub struct RobustnessRow {
    pub radius: f64,
    pub plausibility: String,
    pub input_l2: f64,
    pub output_l2: f64,
}

pub const ROBUSTNESS_CSV_HEADER: &str = "radius,plausibility,input_l2,output_l2";

#[derive(Debug, Clone)]
pub struct RobustnessOutput {
    pub baseline: BenchmarkOutput,
    pub rows: Vec<RobustnessRow>,
}

impl RobustnessOutput {
    pub fn csv(&self) -> String {
        let mut out = String::from(ROBUSTNESS_CSV_HEADER);
        out.push('\n');
        for row in &self.rows {
            out.push_str(&format!(
                "{:.6},{},{:.6},{:.6}\n",
                row.radius, row.plausibility, row.input_l2, row.output_l2
            ));
        }
        out
    }
}

fn median(mut values: Vec<f64>) -> f64 {
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Perturbs each factual on a seeded sphere of radius r, regenerates the CFE
/// with the baseline instance's winning hyperparameters, and reports median
/// input/output theta2 distances per radius.
pub fn run_robustness(
    prep: &PreparedDataset,
    classifier: &ClassifierModel,
    cfg: &ExperimentConfig,
    radii: &[f64],
) -> Result<RobustnessOutput> {
    if radii.is_empty() {
        return Err(ScfeError::invalid("need at least one perturbation radius"));
    }
    if radii.iter().any(|&r| !(r.is_finite() && r >= 0.0)) {
        return Err(ScfeError::invalid("radii must be finite and non-negative"));
    }
    let mut radii = radii.to_vec();
    radii.sort_by(|a, b| a.partial_cmp(b).unwrap());

    let baseline = run_benchmark(prep, classifier, cfg)?;
    let mut plaus_rng = Rng::derive(cfg.seed, STREAM_PLAUS);
    let bank = PlausibilityBank::fit(
        cfg.plausibility,
        &prep.train_x,
        &prep.train_y,
        Some(classifier),
        prep.n_classes,
        &cfg.plausibility_params,
        &cfg.space.k_candidates,
        &mut plaus_rng,
    )?;

    let mut rows = Vec::with_capacity(radii.len());
    for (r_idx, &radius) in radii.iter().enumerate() {
        // Perturbations are seeded per (radius, instance), independent of
        // worker scheduling.
        let perturbed: Vec<(usize, Vector)> = baseline
            .rows
            .iter()
            .enumerate()
            .map(|(pos, row)| {
                let mut rng = Rng::derive(
                    cfg.seed,
                    STREAM_ROBUST ^ ((r_idx as u64) << 32) ^ pos as u64,
                );
                let direction = rng.unit_vector(row.x_f.len());
                let moved: Vector = row
                    .x_f
                    .iter()
                    .zip(&direction)
                    .map(|(x, u)| x + radius * u)
                    .collect();
                (pos, project_box(&moved, &prep.bounds))
            })
            .collect();

        let distances: Result<Vec<(f64, f64)>> =
            ordered_map(cfg.jobs, &perturbed, |(pos, x_pert)| {
                let base = &baseline.rows[*pos];
                let term = if base.tau == 0.0 {
                    BoundTerm::None
                } else {
                    bank.model(base.target, base.k)?.bind(x_pert)?
                };
                let sparsity = match cfg.solver.sparsity {
                    SparsityMode::Penalty { p, .. } => SparsityMode::Penalty { p, beta: base.beta },
                    constraint => constraint,
                };
                let config = SolverConfig {
                    gamma: base.gamma,
                    tau: base.tau,
                    sparsity,
                    record_trajectory: false,
                    ..cfg.solver.clone()
                };
                let result =
                    apg_solve(x_pert, base.target, classifier, &term, &prep.bounds, &config)?;
                Ok((theta2(&base.x_f, x_pert), theta2(&base.x_cf, &result.x_cf)))
            })?
            .into_iter()
            .collect();
        let distances = distances?;
        rows.push(RobustnessRow {
            radius,
            plausibility: cfg.plausibility.name().to_string(),
            input_l2: median(distances.iter().map(|d| d.0).collect()),
            output_l2: median(distances.iter().map(|d| d.1).collect()),
        });
    }
    Ok(RobustnessOutput { baseline, rows })
}

/// Demo configuration: a fixed 2-blob world, a handful of instances, and one
/// tau contrasting the plain and KDE-regularized runs.
#[derive(Debug, Clone)]
pub struct DemoConfig {
    pub seed: u64,
    pub n_per_class: usize,
    pub n_test: usize,
    pub n_demo: usize,
    pub tau: f64,
    pub centers: [[f64; 2]; 2],
    pub cov: [[f64; 2]; 2],
    pub solver: SolverConfig,
    pub gamma_lo_exp: f64,
    pub gamma_hi_exp: f64,
    pub gamma_steps: usize,
}

impl DemoConfig {
    pub fn new(seed: u64) -> Self {
        // Cutoff 1.0 for the binary head: the hinge keeps its gradient until
        // the target score saturates rather than clipping below the decision
        // threshold.
        DemoConfig {
            seed,
            n_per_class: 100,
            n_test: 40,
            n_demo: 5,
            tau: 0.5,
            centers: [[-5.0, 0.0], [5.0, 0.0]],
            cov: [[1.0, 0.0], [0.0, 1.0]],
            solver: SolverConfig {
                cutoff: 1.0,
                ..SolverConfig::default()
            },
            gamma_lo_exp: -3.0,
            gamma_hi_exp: 3.0,
            gamma_steps: 10,
        }
    }
}

#[derive(Debug, Clone)]
pub struct DemoInstance {
    pub index: usize,
    pub target: usize,
    pub plain: CfeResult,
    pub kde: CfeResult,
    /// KDE scores of the two final points, same surrogate for both arms.
    pub qhat_plain: f64,
    pub qhat_kde: f64,
}

#[derive(Debug, Clone)]
pub struct DemoOutput {
    pub instances: Vec<DemoInstance>,
    pub traj_plain_csv: String,
    pub traj_kde_csv: String,
    pub boundary_csv: String,
}

fn trajectory_csv(instances: &[DemoInstance], pick: impl Fn(&DemoInstance) -> &CfeResult) -> String {
    let dim = instances
        .first()
        .map(|i| i.plain.x_cf.len())
        .unwrap_or(0);
    let coords: Vec<String> = (0..dim).map(|j| format!("coord{j}")).collect();
    let mut out = format!("instance,iter,{}\n", coords.join(","));
    for inst in instances {
        let traj = pick(inst)
            .trajectory
            .as_ref()
            .expect("demo records trajectories");
        for (iter, point) in traj.iter().enumerate() {
            let vals: Vec<String> = point.iter().map(|v| format!("{:.6}", v)).collect();
            out.push_str(&format!("{},{},{}\n", inst.index, iter, vals.join(",")));
        }
    }
    out
}

/// Bisection over log10(gamma) for the smallest valid gamma; returns that
/// solve rerun with trajectory recording, or None when nothing was valid.
fn smallest_valid_gamma(
    x_f: &[f64],
    y_cf: usize,
    classifier: &ClassifierModel,
    term: &BoundTerm,
    bounds: &crate::proximal::BoxBounds,
    template: &SolverConfig,
    lo_exp: f64,
    hi_exp: f64,
    steps: usize,
) -> Result<Option<CfeResult>> {
    let (mut lo, mut hi) = (lo_exp, hi_exp);
    let mut best: Option<f64> = None;
    for _ in 0..steps {
        let mid = 0.5 * (lo + hi);
        let gamma = 10f64.powf(mid);
        let config = SolverConfig {
            gamma,
            record_trajectory: false,
            ..template.clone()
        };
        let result = apg_solve(x_f, y_cf, classifier, term, bounds, &config)?;
        if result.valid {
            best = Some(match best {
                Some(b) => b.min(gamma),
                None => gamma,
            });
            hi = mid;
        } else {
            lo = mid;
        }
    }
    match best {
        None => Ok(None),
        Some(gamma) => {
            let config = SolverConfig {
                gamma,
                record_trajectory: true,
                ..template.clone()
            };
            Ok(Some(apg_solve(x_f, y_cf, classifier, term, bounds, &config)?))
        }
    }
}

/// Runs the 2D demo: plain vs KDE-regularized trajectories on the blob world,
/// plus the separator coefficients for external plotting.
pub fn run_synth_demo(cfg: &DemoConfig) -> Result<DemoOutput> {
    let mut data_rng = Rng::derive(cfg.seed, STREAM_DATA);
    let (table, classifier) =
        generate_synth2d(cfg.n_per_class, &cfg.centers, &cfg.cov, &mut data_rng)?;
    let mut split_rng = Rng::derive(cfg.seed, STREAM_SPLIT);
    let prep = prepare(&table, cfg.n_test, None, &mut split_rng)?;
    let mut plaus_rng = Rng::derive(cfg.seed, STREAM_PLAUS);
    let bank = PlausibilityBank::fit(
        PlausibilityKind::Kde,
        &prep.train_x,
        &prep.train_y,
        Some(&classifier),
        prep.n_classes,
        &PlausibilityParams::default(),
        &[3],
        &mut plaus_rng,
    )?;

    let n_demo = cfg.n_demo.min(prep.test_x.rows());
    if n_demo == 0 {
        return Err(ScfeError::invalid("demo needs at least one test point"));
    }
    let mut instances = Vec::with_capacity(n_demo);
    for i in 0..n_demo {
        let x_f = prep.test_x.row(i).to_vec();
        let target = 1 - classifier.predict(&x_f)?;
        let plain_template = SolverConfig { tau: 0.0, ..cfg.solver.clone() };
        let plain = smallest_valid_gamma(
            &x_f,
            target,
            &classifier,
            &BoundTerm::None,
            &prep.bounds,
            &plain_template,
            cfg.gamma_lo_exp,
            cfg.gamma_hi_exp,
            cfg.gamma_steps,
        )?
        .ok_or_else(|| ScfeError::invalid(format!("demo instance {i}: no valid gamma (plain)")))?;

        let model = bank.model(target, 0)?;
        let term = model.bind(&x_f)?;
        let kde_template = SolverConfig { tau: cfg.tau, ..cfg.solver.clone() };
        let kde = smallest_valid_gamma(
            &x_f,
            target,
            &classifier,
            &term,
            &prep.bounds,
            &kde_template,
            cfg.gamma_lo_exp,
            cfg.gamma_hi_exp,
            cfg.gamma_steps,
        )?
        .ok_or_else(|| ScfeError::invalid(format!("demo instance {i}: no valid gamma (kde)")))?;

        let qhat_plain = term.value(&plain.x_cf)?;
        let qhat_kde = term.value(&kde.x_cf)?;
        instances.push(DemoInstance {
            index: i,
            target,
            plain,
            kde,
            qhat_plain,
            qhat_kde,
        });
    }

    let head = &classifier.layers()[0];
    let boundary_csv = format!(
        "coef0,coef1,bias\n{:.6},{:.6},{:.6}\n",
        head.weights.get(0, 0),
        head.weights.get(0, 1),
        head.bias[0]
    );
    Ok(DemoOutput {
        traj_plain_csv: trajectory_csv(&instances, |i| &i.plain),
        traj_kde_csv: trajectory_csv(&instances, |i| &i.kde),
        boundary_csv,
        instances,
    })
}
