//! Acceptance gate: ten end-to-end criteria, printed one line each.
//!
//! Criteria 1-5 check the numeric core against the independent oracles in
//! `common`; criteria 6-10 run the desk-scale experiments and check the
//! headline orderings. The test fails at the end if any criterion failed, so
//! a single run reports the status of all ten.

mod common;

use std::io::Write;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::OnceLock;
use std::time::Instant;

use common::{
    central_diff, exhaustive_l0ball_box, grad_rel_err, grid_prox_1d, l2_distance,
    prox_objective_1d, relu_margin, sample_accepted, NaiveLof, Pen,
};
use scfe_core::classifier::{
    accuracy, cfe_loss, input_gradient, sigmoid, ClassifierModel, LossConfig, LossMode,
};
use scfe_core::harness::{
    generate_synth2d, generate_wine_style, prepare, run_benchmark, run_robustness, train_model,
    BenchmarkOutput, ExperimentConfig, PlausibilityBank, PreparedDataset, SearchSpace,
    TargetPolicy, STREAM_DATA, STREAM_PLAUS, STREAM_SPLIT, STREAM_TRAIN,
};
use scfe_core::metrics::{theta0, LofIndex, PNorm};
use scfe_core::numerics::{Matrix, Rng};
use scfe_core::plausibility::{BoundTerm, PlausibilityKind, PlausibilityModel, PlausibilityParams};
use scfe_core::proximal::{project_l0ball_box, prox_step, BoxBounds, PenaltyNorm, SparsityMode};
use scfe_core::solver::{apg_solve, grad_h, loss_for, value_h, SolverConfig};

fn criterion_1_prox_oracle() -> String {
    let start = Instant::now();
    let mut rng = Rng::new(0xac5e_0001);
    let mut max_gap = f64::NEG_INFINITY;
    let mut max_arg = 0.0f64;
    let operators = [
        (Pen::L1, PenaltyNorm::L1),
        (Pen::L0, PenaltyNorm::L0),
        (Pen::LHalf, PenaltyNorm::LHalf),
    ];
    for (pen, p) in operators {
        for _ in 0..1000 {
            let d = 1 + (rng.uniform() * 4.0) as usize;
            let mut lo = Vec::with_capacity(d);
            let mut hi = Vec::with_capacity(d);
            let mut x_f = Vec::with_capacity(d);
            let mut s = Vec::with_capacity(d);
            for _ in 0..d {
                let l = rng.uniform_in(-1.0, 0.0);
                let h = l + rng.uniform_in(0.1, 2.0);
                lo.push(l);
                hi.push(h);
                x_f.push(rng.uniform_in(l, h));
                s.push(rng.uniform_in(-2.0, 3.0));
            }
            let bounds = BoxBounds::new(lo.clone(), hi.clone()).unwrap();
            let sigma = rng.uniform_in(0.01, 1.0);
            let beta = rng.uniform_in(0.0, 2.0);
            let lambda = beta * sigma;
            let mode = SparsityMode::Penalty { p, beta };
            let z = prox_step(&mode, &s, &x_f, sigma, &bounds).unwrap();
            for i in 0..d {
                let (oracle_z, oracle_f) = grid_prox_1d(s[i], x_f[i], lambda, lo[i], hi[i], pen);
                let impl_f = prox_objective_1d(pen, z[i], s[i], x_f[i], lambda);
                let gap = impl_f - oracle_f;
                assert!(
                    gap < 1e-8,
                    "{pen:?}: objective gap {gap:.3e} (z {} vs oracle {oracle_z})",
                    z[i]
                );
                let arg = (z[i] - oracle_z).abs();
                assert!(arg < 1e-4, "{pen:?}: argument error {arg:.3e}");
                max_gap = max_gap.max(gap);
                max_arg = max_arg.max(arg);
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    assert!(secs < 60.0, "runtime {secs:.1}s over budget");
    format!("3x1000 instances, max gap {max_gap:.1e}, max arg err {max_arg:.1e}, {secs:.1}s")
}

fn criterion_2_projection() -> String {
    let start = Instant::now();
    let mut rng = Rng::new(0xac5e_0002);
    let mut max_gap = 0.0f64;
    for _ in 0..500 {
        let d = 2 + (rng.uniform() * 7.0) as usize;
        let m = (1 + (rng.uniform() * 3.0) as usize).min(d);
        let mut lo = Vec::with_capacity(d);
        let mut hi = Vec::with_capacity(d);
        let mut x_f = Vec::with_capacity(d);
        let mut s = Vec::with_capacity(d);
        for _ in 0..d {
            let l = rng.uniform_in(-1.0, 0.0);
            let h = l + rng.uniform_in(0.1, 2.0);
            lo.push(l);
            hi.push(h);
            x_f.push(rng.uniform_in(l, h));
            s.push(rng.uniform_in(-2.0, 3.0));
        }
        let bounds = BoxBounds::new(lo.clone(), hi.clone()).unwrap();
        let z = project_l0ball_box(&s, &x_f, m, &bounds).unwrap();
        assert!(bounds.contains(&z));
        assert!(theta0(&z, &x_f) <= m as f64 + 0.5);
        let oracle = exhaustive_l0ball_box(&s, &x_f, m, &lo, &hi);
        let gap = (l2_distance(&z, &s) - l2_distance(&oracle, &s)).abs();
        assert!(gap < 1e-10, "distance gap {gap:.3e} at d={d} m={m}");
        max_gap = max_gap.max(gap);
    }
    let secs = start.elapsed().as_secs_f64();
    assert!(secs < 30.0, "runtime {secs:.1}s over budget");
    format!("500 instances (d<=8, m<=3), max distance gap {max_gap:.1e}, {secs:.1}s")
}

fn criterion_3_gradients() -> String {
    let start = Instant::now();
    let h = 1e-5;
    let mut worst = 0.0f64;
    let mut check = |name: &str, got: &[f64], fd: &[f64]| {
        let err = grad_rel_err(got, fd);
        assert!(err < 1e-4, "{name}: rel err {err:.3e}");
        if err > worst {
            worst = err;
        }
    };
    let mut rng = Rng::new(0xac5e_0003);

    // Binary hinge loss on a small ReLU network.
    let binary = ClassifierModel::mlp(4, &[6], 1, &mut rng).unwrap();
    for trial in 0..100 {
        let y_cf = trial % 2;
        let cfg = LossConfig::new(LossMode::Binary, 0.3, y_cf);
        let x = sample_accepted(&mut rng, 4, |x| {
            let f = sigmoid(binary.forward_logits(x).unwrap()[0]);
            let margin = (1.0 - 2.0 * y_cf as f64) * f + 0.3;
            relu_margin(&binary, x) > 1e-3 && margin.abs() > 1e-3
        });
        let grad = input_gradient(&binary, &x, &cfg).unwrap();
        let fd = central_diff(|p| cfe_loss(&binary, p, &cfg).unwrap(), &x, h);
        check("binary loss", &grad, &fd);
    }

    // Multiclass hinge loss.
    let multi = ClassifierModel::mlp(4, &[8], 3, &mut rng).unwrap();
    for trial in 0..100 {
        let y_cf = trial % 3;
        let cfg = LossConfig::new(LossMode::Multiclass, 0.3, y_cf);
        let x = sample_accepted(&mut rng, 4, |x| {
            let logits = multi.forward_logits(x).unwrap();
            let mut rivals: Vec<f64> = logits
                .iter()
                .enumerate()
                .filter(|&(i, _)| i != y_cf)
                .map(|(_, &v)| v)
                .collect();
            rivals.sort_by(|a, b| b.partial_cmp(a).unwrap());
            let hinge_arg = rivals[0] - logits[y_cf];
            relu_margin(&multi, x) > 1e-3
                && (hinge_arg + 0.3).abs() > 1e-3
                && (rivals[0] - rivals[1]).abs() > 1e-3
        });
        let grad = input_gradient(&multi, &x, &cfg).unwrap();
        let fd = central_diff(|p| cfe_loss(&multi, p, &cfg).unwrap(), &x, h);
        check("multiclass loss", &grad, &fd);
    }

    // Smooth plausibility surrogates over one random 3-D cloud.
    let cloud: Vec<Vec<f64>> = (0..40)
        .map(|_| (0..3).map(|_| 0.5 + 0.15 * rng.normal()).collect())
        .collect();
    let train_x = Matrix::from_rows(&cloud).unwrap();
    let train_y = vec![0usize; 40];
    let params = PlausibilityParams {
        n_components: 3,
        ..PlausibilityParams::default()
    };
    for kind in [
        PlausibilityKind::Kde,
        PlausibilityKind::Gmm,
        PlausibilityKind::Knn,
    ] {
        let model =
            PlausibilityModel::fit(kind, &train_x, &train_y, 0, None, &params, &mut rng)
                .unwrap()
                .unwrap();
        for _ in 0..100 {
            let x_f: Vec<f64> = (0..3).map(|_| rng.uniform()).collect();
            let term = model.bind(&x_f).unwrap();
            let kink_free = |x: &[f64]| match &term {
                // qhat = -||x - G|| has its only kink at the gravity point.
                BoundTerm::Gravity { gravity } => l2_distance(x, gravity) > 1e-3,
                _ => true,
            };
            let x = sample_accepted(&mut rng, 3, kink_free);
            let (_, grad) = term.value_grad(&x).unwrap();
            let fd = central_diff(|p| term.value(p).unwrap(), &x, h);
            check(kind.name(), &grad, &fd);
        }
    }

    // Assembled objective gradient: quadratic + binary hinge + KDE pull.
    let kde = PlausibilityModel::fit(
        PlausibilityKind::Kde,
        &train_x,
        &train_y,
        0,
        None,
        &params,
        &mut rng,
    )
    .unwrap()
    .unwrap();
    let clf = ClassifierModel::mlp(3, &[5], 1, &mut rng).unwrap();
    for trial in 0..100 {
        let y_cf = trial % 2;
        let loss = loss_for(&clf, y_cf, 0.3);
        let x_f: Vec<f64> = (0..3).map(|_| rng.uniform()).collect();
        let term = kde.bind(&x_f).unwrap();
        let (gamma, tau) = (1.7, 0.9);
        let x = sample_accepted(&mut rng, 3, |x| {
            let f = sigmoid(clf.forward_logits(x).unwrap()[0]);
            let margin = (1.0 - 2.0 * y_cf as f64) * f + 0.3;
            relu_margin(&clf, x) > 1e-3 && margin.abs() > 1e-3
        });
        let grad = grad_h(&x, &x_f, &clf, &loss, &term, gamma, tau).unwrap();
        let fd = central_diff(
            |p| value_h(p, &x_f, &clf, &loss, &term, gamma, tau).unwrap(),
            &x,
            h,
        );
        check("assembled grad_h", &grad, &fd);
    }

    let secs = start.elapsed().as_secs_f64();
    assert!(secs < 60.0, "runtime {secs:.1}s over budget");
    format!("6 terms x 100 points, worst rel err {worst:.1e}, {secs:.1}s")
}

fn criterion_4_lof_oracle() -> String {
    let mut rng = Rng::new(0xac5e_0004);
    let points: Vec<Vec<f64>> = (0..60)
        .map(|_| (0..2).map(|_| rng.uniform()).collect())
        .collect();
    let index = LofIndex::build(&Matrix::from_rows(&points).unwrap(), 5, PNorm::Two).unwrap();
    let naive = NaiveLof::new(points, 5);
    let mut max_diff = 0.0f64;
    for _ in 0..100 {
        let q: Vec<f64> = (0..2).map(|_| rng.uniform_in(-0.2, 1.2)).collect();
        let fast = index.query(&q).unwrap();
        let slow = naive.query(&q);
        let diff = (fast - slow).abs();
        assert!(diff < 1e-10, "LOF mismatch {fast} vs {slow}");
        max_diff = max_diff.max(diff);
    }

    // Regular grid: interior queries are inliers, a distant query is not.
    let grid: Vec<Vec<f64>> = (0..7)
        .flat_map(|i| (0..7).map(move |j| vec![i as f64, j as f64]))
        .collect();
    let grid_index = LofIndex::build(&Matrix::from_rows(&grid).unwrap(), 4, PNorm::Two).unwrap();
    let mut interior = Vec::new();
    for i in 2..5 {
        for j in 2..5 {
            let lof = grid_index.query(&[i as f64 + 0.5, j as f64 + 0.5]).unwrap();
            assert!((0.9..=1.1).contains(&lof), "interior LOF {lof}");
            interior.push(lof);
        }
    }
    let outlier = grid_index.query(&[30.0, 30.0]).unwrap();
    assert!(outlier > 1.5, "far outlier LOF {outlier}");
    format!(
        "100 queries match to {max_diff:.1e}, interior LOF in [{:.2}, {:.2}], outlier {outlier:.1}",
        interior.iter().cloned().fold(f64::INFINITY, f64::min),
        interior.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    )
}

fn criterion_5_fixed_points() -> String {
    let mut rng = Rng::new(0xac5e_0005);
    let clf = ClassifierModel::mlp(6, &[8], 2, &mut rng).unwrap();
    let bounds = BoxBounds::unit(6);
    let x_f: Vec<f64> = (0..6).map(|_| rng.uniform()).collect();

    let penalty_cfg = SolverConfig {
        gamma: 0.0,
        tau: 0.0,
        sparsity: SparsityMode::Penalty {
            p: PenaltyNorm::L1,
            beta: 0.0,
        },
        ..SolverConfig::default()
    };
    let r = apg_solve(&x_f, 1, &clf, &BoundTerm::None, &bounds, &penalty_cfg).unwrap();
    assert_eq!(r.x_cf, x_f, "factual init with no pull must return x_f exactly");

    let constraint_cfg = SolverConfig {
        gamma: 0.0,
        tau: 0.0,
        sparsity: SparsityMode::Constraint { m: 6 },
        ..SolverConfig::default()
    };
    let r2 = apg_solve(&x_f, 1, &clf, &BoundTerm::None, &bounds, &constraint_cfg).unwrap();
    let dist = l2_distance(&r2.x_cf, &x_f);
    assert!(dist < 1e-6, "constraint m=d drifted {dist:.3e} from x_f");
    format!("penalty beta=0 exact, constraint m=d final distance {dist:.1e} (T=200)")
}

const WINE_SEED: u64 = 0x57ee;
const BLOB_SEED: u64 = 0xb10b;

static WINE: OnceLock<(PreparedDataset, ClassifierModel, BenchmarkOutput)> = OnceLock::new();
static BLOB: OnceLock<(PreparedDataset, ClassifierModel)> = OnceLock::new();

fn wine_config() -> ExperimentConfig {
    ExperimentConfig {
        method: "scfe-constraint-m1".to_string(),
        plausibility: PlausibilityKind::None,
        plausibility_params: PlausibilityParams::default(),
        target: TargetPolicy::Next,
        space: SearchSpace {
            beta_grid: vec![1.0],
            tau_grid: vec![1.0],
            gamma_lo_exp: -3.0,
            gamma_hi_exp: 3.0,
            gamma_steps: 10,
            k_candidates: vec![5],
        },
        solver: SolverConfig {
            sparsity: SparsityMode::Constraint { m: 1 },
            cutoff: 0.05,
            ..SolverConfig::default()
        },
        lof_k: 20,
        seed: WINE_SEED,
        jobs: 1,
    }
}

fn wine_benchmark() -> &'static (PreparedDataset, ClassifierModel, BenchmarkOutput) {
    WINE.get_or_init(|| {
        let mut data_rng = Rng::derive(WINE_SEED, STREAM_DATA);
        let table = generate_wine_style(80, &mut data_rng).unwrap();
        let mut split_rng = Rng::derive(WINE_SEED, STREAM_SPLIT);
        let prep = prepare(&table, 100, Some(8), &mut split_rng).unwrap();
        let mut train_rng = Rng::derive(WINE_SEED, STREAM_TRAIN);
        // Gentle training: pushing the linear model to interpolation grows the
        // weights until some class boundaries leave the feature box along the
        // single coordinate the m=1 benchmark is allowed to move.
        let (model, _) = train_model(&prep, &[], 40, 32, 0.02, &mut train_rng).unwrap();
        let acc = accuracy(&model, &prep.test_x, &prep.test_y).unwrap();
        assert!(acc >= 0.95, "wine-style classifier accuracy {acc}");
        let out = run_benchmark(&prep, &model, &wine_config()).unwrap();
        (prep, model, out)
    })
}

fn criterion_6_sparsity_exact() -> String {
    let (_, _, out) = wine_benchmark();
    assert_eq!(out.rows.len(), 100, "next-policy benchmark explains all test points");
    let valid = out.rows.iter().filter(|r| r.valid).count();
    assert!(valid > 0, "no valid CFEs");
    for row in out.rows.iter().filter(|r| r.valid) {
        assert_eq!(row.theta0, 1.0, "instance {} theta0 {}", row.index, row.theta0);
    }
    assert_eq!(out.report.theta0_mean, 1.0);
    assert_eq!(out.report.theta0_std, 0.0);
    format!("theta0 mean 1.00 std 0.00 over {valid} valid CFEs (m=1 constraint)")
}

fn criterion_7_validity() -> String {
    let (_, _, out) = wine_benchmark();
    assert!(
        out.report.validity >= 98.0,
        "validity {:.1}% below 98%",
        out.report.validity
    );
    assert!(
        out.report.seconds_per_100 <= 60.0,
        "runtime {:.1}s per 100 CFEs over budget",
        out.report.seconds_per_100
    );
    format!(
        "validity {:.1}% over 100 test points, {:.1}s per 100 CFEs",
        out.report.validity, out.report.seconds_per_100
    )
}

/// Two overlapping blobs elongated along the axis that separates them. The
/// elongation keeps the decision boundary within roughly one class standard
/// deviation of either mean, so every density surrogate still has usable
/// gradient signal over the whole factual-to-target journey. With compact
/// well-separated blobs the raw-density pull is flat until the last stretch
/// and the minimal valid gamma sits exactly at the crossing threshold, which
/// turns the landing point chaotic under small input shifts.
fn blob_world() -> &'static (PreparedDataset, ClassifierModel) {
    BLOB.get_or_init(|| {
        let mut data_rng = Rng::derive(BLOB_SEED, STREAM_DATA);
        let (table, model) = generate_synth2d(
            100,
            &[[-2.0, 0.0], [2.0, 0.0]],
            &[[4.0, 0.0], [0.0, 1.0]],
            &mut data_rng,
        )
        .unwrap();
        let mut split_rng = Rng::derive(BLOB_SEED, STREAM_SPLIT);
        let prep = prepare(&table, 100, None, &mut split_rng).unwrap();
        (prep, model)
    })
}

/// Single-point tau grid per plausibility kind; the none arm collapses to
/// tau = 0 on its own. The mixture surrogate is fitted with one component:
/// the class-covariance Gaussian spans the whole cluster, while a
/// multi-component EM fit slices the elongated blob into pieces whose tight
/// covariances cannot reach the decision boundary.
fn blob_config(kind: PlausibilityKind, tau: f64) -> ExperimentConfig {
    let n_components = if kind == PlausibilityKind::Gmm { 1 } else { 5 };
    ExperimentConfig {
        method: format!("scfe-{}", kind.name()),
        plausibility: kind,
        plausibility_params: PlausibilityParams {
            n_components,
            ..PlausibilityParams::default()
        },
        target: TargetPolicy::Flip,
        space: SearchSpace {
            beta_grid: vec![0.01],
            tau_grid: vec![tau],
            gamma_lo_exp: -3.0,
            gamma_hi_exp: 3.0,
            gamma_steps: 10,
            k_candidates: vec![5],
        },
        solver: SolverConfig {
            sparsity: SparsityMode::Penalty {
                p: PenaltyNorm::L1,
                beta: 0.01,
            },
            cutoff: 1.0,
            ..SolverConfig::default()
        },
        lof_k: 10,
        seed: BLOB_SEED,
        jobs: 1,
    }
}

/// Frozen pull weights for the 2-blob experiments, one per surrogate. The
/// mixture density concentrates far more mass than the kernel estimate, so
/// its weight is scaled down to keep the pull impulses comparable.
fn blob_tau(kind: PlausibilityKind) -> f64 {
    match kind {
        PlausibilityKind::None => 0.0,
        PlausibilityKind::Kde => 2.0,
        PlausibilityKind::Gmm => 0.05,
        PlausibilityKind::Knn => 2.0,
    }
}

fn criterion_8_plausibility_ordering() -> String {
    let (prep, model) = blob_world();
    let none_out = run_benchmark(prep, model, &blob_config(PlausibilityKind::None, 0.0)).unwrap();
    let mut details = Vec::new();
    for kind in [
        PlausibilityKind::Kde,
        PlausibilityKind::Gmm,
        PlausibilityKind::Knn,
    ] {
        let cfg = blob_config(kind, blob_tau(kind));
        let out = run_benchmark(prep, model, &cfg).unwrap();
        assert_eq!(out.rows.len(), none_out.rows.len());

        // The same surrogate scores both arms' outputs, paired by instance.
        let mut plaus_rng = Rng::derive(cfg.seed, STREAM_PLAUS);
        let bank = PlausibilityBank::fit(
            kind,
            &prep.train_x,
            &prep.train_y,
            Some(model),
            prep.n_classes,
            &cfg.plausibility_params,
            &cfg.space.k_candidates,
            &mut plaus_rng,
        )
        .unwrap();
        let mut wins = 0usize;
        let mut qhat_kind = 0.0;
        let mut qhat_none = 0.0;
        for (a, b) in out.rows.iter().zip(&none_out.rows) {
            assert_eq!(a.index, b.index);
            let term = bank.model(a.target, a.k).unwrap().bind(&a.x_f).unwrap();
            let qa = term.value(&a.x_cf).unwrap();
            let qb = term.value(&b.x_cf).unwrap();
            if qa > qb {
                wins += 1;
            }
            qhat_kind += qa;
            qhat_none += qb;
        }
        let n = out.rows.len() as f64;
        let lof_kind = out.rows.iter().map(|r| r.lof).sum::<f64>() / n;
        let lof_none = none_out.rows.iter().map(|r| r.lof).sum::<f64>() / n;
        assert!(
            lof_kind < lof_none,
            "{}: mean LOF {lof_kind:.3} not below tau=0 mean {lof_none:.3}",
            kind.name()
        );
        assert!(
            qhat_kind > qhat_none,
            "{}: mean qhat {:.4} not above tau=0 mean {:.4}",
            kind.name(),
            qhat_kind / n,
            qhat_none / n
        );
        assert!(
            wins >= 95,
            "{}: qhat margin positive in only {wins}/100 pairs",
            kind.name()
        );
        details.push(format!(
            "{} LOF {lof_kind:.2} vs {lof_none:.2}, wins {wins}/100",
            kind.name()
        ));
    }
    details.join("; ")
}

fn criterion_9_inlier_regime() -> String {
    let (prep, model, _) = wine_benchmark();
    let mut cfg = wine_config();
    cfg.method = "scfe-knn-m1".to_string();
    cfg.plausibility = PlausibilityKind::Knn;
    cfg.space.tau_grid = vec![2.0];
    let out = run_benchmark(prep, model, &cfg).unwrap();
    assert!(
        out.report.validity >= 98.0,
        "validity {:.1}% below 98%",
        out.report.validity
    );
    assert!(
        out.report.lof_mean <= 1.3,
        "mean LOF {:.3} above 1.3",
        out.report.lof_mean
    );
    format!(
        "gravity-regularized wine benchmark: mean LOF {:.2} (std {:.2}), validity {:.1}%",
        out.report.lof_mean, out.report.lof_std, out.report.validity
    )
}

fn criterion_10_robustness_ordering() -> String {
    let (prep, model) = blob_world();
    let radii = [0.0, 0.02, 0.05, 0.1];
    let none_out =
        run_robustness(prep, model, &blob_config(PlausibilityKind::None, 0.0), &radii).unwrap();
    let none_shift = none_out.rows.last().unwrap().output_l2;
    let mut details = vec![format!("none {none_shift:.4}")];
    for kind in [
        PlausibilityKind::Kde,
        PlausibilityKind::Gmm,
        PlausibilityKind::Knn,
    ] {
        let out =
            run_robustness(prep, model, &blob_config(kind, blob_tau(kind)), &radii).unwrap();
        let row = out.rows.last().unwrap();
        assert_eq!(row.radius, 0.1);
        assert!(
            row.output_l2 <= none_shift,
            "{}: median output shift {:.4} above tau=0 shift {none_shift:.4}",
            kind.name(),
            row.output_l2
        );
        details.push(format!("{} {:.4}", kind.name(), row.output_l2));
    }
    format!("median output shift at radius 0.1: {}", details.join(", "))
}

/// The verdict lines are the point of this target, so they go to the raw
/// stdout handle; the test harness only captures the print macros.
fn report(line: String) {
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "{line}");
}

#[test]
fn acceptance() {
    let criteria: Vec<(usize, &str, fn() -> String)> = vec![
        (1, "prox oracle equivalence", criterion_1_prox_oracle),
        (2, "projection exactness", criterion_2_projection),
        (3, "gradient checks", criterion_3_gradients),
        (4, "LOF oracle", criterion_4_lof_oracle),
        (5, "solver fixed points", criterion_5_fixed_points),
        (6, "sparsity exactness", criterion_6_sparsity_exact),
        (7, "validity", criterion_7_validity),
        (8, "plausibility ordering", criterion_8_plausibility_ordering),
        (9, "inlier regime", criterion_9_inlier_regime),
        (10, "robustness ordering", criterion_10_robustness_ordering),
    ];
    // Terminate the harness's "test acceptance ... " prefix so every verdict
    // line starts in column zero.
    report(String::new());
    let mut failed = Vec::new();
    for (number, name, run) in criteria {
        match catch_unwind(AssertUnwindSafe(run)) {
            Ok(detail) => report(format!("PASS criterion {number}: {name} ({detail})")),
            Err(payload) => {
                let msg = payload
                    .downcast_ref::<String>()
                    .map(String::as_str)
                    .or_else(|| payload.downcast_ref::<&str>().copied())
                    .unwrap_or("panic without message");
                report(format!("FAIL criterion {number}: {name} ({msg})"));
                failed.push(number);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
