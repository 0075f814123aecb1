//! Subcommand bodies: thin orchestration over the harness.
//!
//! Every command resolves its inputs up front (dataset file, model file),
//! so nothing heavy runs before a missing path can be reported. Primary
//! results go to stdout (the explain and report CSVs are parseable as
//! printed); artifact paths are announced on stderr.

use std::fs;
use std::path::Path;

use scfe_core::classifier::{load_model, save_model, ClassifierModel};
use scfe_core::error::{Result, ScfeError};
use scfe_core::harness::{
    generate_housing_style, generate_synth2d, generate_wine_style, load_csv_dataset, prepare,
    run_benchmark, run_robustness, run_synth_demo, search_hyperparameters, train_model,
    DatasetTable, DemoConfig, ExperimentConfig, PlausibilityBank, PreparedDataset, RobustnessRow,
    ROBUSTNESS_CSV_HEADER, STREAM_DATA, STREAM_PLAUS, STREAM_SPLIT, STREAM_TRAIN,
};
use scfe_core::metrics::{LofIndex, PNorm};
use scfe_core::numerics::{Matrix, Rng, Vector};

use crate::config::{CliConfig, DataSource};

fn build_table(cfg: &CliConfig) -> Result<DatasetTable> {
    let mut rng = Rng::derive(cfg.experiment.seed, STREAM_DATA);
    match cfg.source {
        DataSource::Csv => {
            let path = cfg.data_path.as_ref().expect("load enforces data.path for csv");
            load_csv_dataset(path, &cfg.label_column)
        }
        DataSource::Synth2d => {
            generate_synth2d(cfg.n_per_class, &cfg.centers, &cfg.cov, &mut rng).map(|(t, _)| t)
        }
        DataSource::Wine => generate_wine_style(cfg.n_per_class, &mut rng),
        DataSource::Housing => generate_housing_style(cfg.housing_n, &mut rng),
    }
}

fn prepare_data(cfg: &CliConfig) -> Result<PreparedDataset> {
    let table = build_table(cfg)?;
    let mut rng = Rng::derive(cfg.experiment.seed, STREAM_SPLIT);
    prepare(&table, cfg.n_test, cfg.pca_dims, &mut rng)
}

fn check_dataset(cfg: &CliConfig) -> Result<()> {
    if cfg.source == DataSource::Csv {
        let path = cfg.data_path.as_ref().expect("load enforces data.path for csv");
        if !path.is_file() {
            return Err(ScfeError::invalid(format!(
                "dataset file '{}' not found",
                path.display()
            )));
        }
    }
    Ok(())
}

fn load_classifier(cfg: &CliConfig) -> Result<ClassifierModel> {
    if !cfg.model_path.is_file() {
        return Err(ScfeError::invalid(format!(
            "model file '{}' not found; run `scfe train` first",
            cfg.model_path.display()
        )));
    }
    load_model(&cfg.model_path)
}

fn write_artifact(dir: &Path, name: &str, text: &str) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| ScfeError::io(dir.display().to_string(), e))?;
    let path = dir.join(name);
    fs::write(&path, text).map_err(|e| ScfeError::io(path.display().to_string(), e))?;
    eprintln!("wrote {}", path.display());
    Ok(())
}

pub fn cmd_train(cfg: &CliConfig) -> Result<()> {
    check_dataset(cfg)?;
    let prep = prepare_data(cfg)?;
    let mut rng = Rng::derive(cfg.experiment.seed, STREAM_TRAIN);
    let (model, report) = train_model(&prep, &cfg.hidden, cfg.epochs, cfg.batch, cfg.lr, &mut rng)?;
    if let Some(parent) = cfg.model_path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(|e| ScfeError::io(parent.display().to_string(), e))?;
        }
    }
    save_model(&model, &cfg.model_path)?;
    eprintln!("wrote {}", cfg.model_path.display());
    println!("train_accuracy={:.4}", report.train_accuracy);
    println!("accuracy={:.4}", report.eval_accuracy.unwrap_or(report.train_accuracy));
    Ok(())
}

/// LOF of `x` against the training rows of one class.
fn lof_against_class(
    prep: &PreparedDataset,
    class: usize,
    lof_k: usize,
    x: &[f64],
) -> Result<f64> {
    let rows: Vec<Vec<f64>> = prep
        .train_x
        .row_iter()
        .zip(&prep.train_y)
        .filter(|&(_, &y)| y == class)
        .map(|(row, _)| row.to_vec())
        .collect();
    if rows.is_empty() {
        return Err(ScfeError::invalid(format!("no training points of class {class}")));
    }
    let points = Matrix::from_rows(&rows)?;
    let k = lof_k.min(points.rows().saturating_sub(1));
    if k == 0 {
        return Err(ScfeError::invalid(format!("class {class} has too few points for LOF")));
    }
    LofIndex::build(&points, k, PNorm::Two)?.query(x)
}

/// Raw feature values mapped into working space: scale, optional PCA, clamp.
fn working_point(prep: &PreparedDataset, raw: &str) -> Result<Vector> {
    let values: Result<Vec<f64>> = raw
        .split(',')
        .map(|tok| {
            tok.trim()
                .parse()
                .map_err(|_| ScfeError::invalid(format!("--input-row: bad number '{}'", tok.trim())))
        })
        .collect();
    let scaled = prep.scaler.transform_vec(&values?)?;
    let x = match &prep.pca {
        Some(model) => model.transform_vec(&scaled)?,
        None => scaled,
    };
    Ok(x.iter()
        .enumerate()
        .map(|(j, &v)| prep.bounds.clamp_coord(j, v))
        .collect())
}

struct ExplainRow {
    target: usize,
    valid: bool,
    theta0: f64,
    theta2: f64,
    lof: f64,
    gamma: f64,
    tau: f64,
    beta: f64,
    k: usize,
    x_cf: Vector,
}

impl ExplainRow {
    fn csv(&self) -> String {
        let coords: Vec<String> = (0..self.x_cf.len()).map(|j| format!("cf{j}")).collect();
        let header = format!("target,valid,theta0,theta2,lof,gamma,tau,beta,k,{}", coords.join(","));
        let values: Vec<String> = self.x_cf.iter().map(|v| format!("{:.6}", v)).collect();
        let row = format!(
            "{},{},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{},{}",
            self.target,
            u8::from(self.valid),
            self.theta0,
            self.theta2,
            self.lof,
            self.gamma,
            self.tau,
            self.beta,
            self.k,
            values.join(",")
        );
        format!("{header}\n{row}\n")
    }
}

pub fn cmd_explain(
    cfg: &CliConfig,
    index: Option<usize>,
    input_row: Option<&str>,
    out_flag: Option<&Path>,
) -> Result<()> {
    check_dataset(cfg)?;
    let prep = prepare_data(cfg)?;
    let classifier = load_classifier(cfg)?;
    let exp = &cfg.experiment;
    exp.space.validate()?;

    let x_f = match input_row {
        Some(raw) => working_point(&prep, raw)?,
        None => {
            let i = index.unwrap_or(0);
            if i >= prep.test_x.rows() {
                return Err(ScfeError::invalid(format!(
                    "index {} out of range: the test split has {} rows",
                    i,
                    prep.test_x.rows()
                )));
            }
            prep.test_x.row(i).to_vec()
        }
    };

    let predicted = classifier.predict(&x_f)?;
    let row = match exp.target.target(predicted, prep.n_classes)? {
        // Already in the target class: the factual explains itself.
        None => ExplainRow {
            target: predicted,
            valid: true,
            theta0: 0.0,
            theta2: 0.0,
            lof: lof_against_class(&prep, predicted, exp.lof_k, &x_f)?,
            gamma: 0.0,
            tau: 0.0,
            beta: 0.0,
            k: 0,
            x_cf: x_f,
        },
        Some(y_cf) => {
            let mut plaus_rng = Rng::derive(exp.seed, STREAM_PLAUS);
            let bank = PlausibilityBank::fit(
                exp.plausibility,
                &prep.train_x,
                &prep.train_y,
                Some(&classifier),
                prep.n_classes,
                &exp.plausibility_params,
                &exp.space.k_candidates,
                &mut plaus_rng,
            )?;
            let outcome = search_hyperparameters(
                &x_f,
                y_cf,
                &classifier,
                &bank,
                &prep.bounds,
                &exp.space,
                &exp.solver,
            )?;
            ExplainRow {
                target: y_cf,
                valid: outcome.result.valid,
                theta0: outcome.result.theta0,
                theta2: outcome.result.theta2,
                lof: lof_against_class(&prep, y_cf, exp.lof_k, &outcome.result.x_cf)?,
                gamma: outcome.gamma,
                tau: outcome.tau,
                beta: outcome.beta,
                k: outcome.k,
                x_cf: outcome.result.x_cf,
            }
        }
    };

    let csv = row.csv();
    print!("{csv}");
    let out = out_flag
        .map(Path::to_path_buf)
        .or_else(|| cfg.explain_out.clone());
    if let Some(path) = out {
        let path = if path.is_relative() { cfg.out_dir.join(path) } else { path };
        let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
        if let Some(dir) = dir {
            fs::create_dir_all(dir).map_err(|e| ScfeError::io(dir.display().to_string(), e))?;
        }
        fs::write(&path, &csv).map_err(|e| ScfeError::io(path.display().to_string(), e))?;
        eprintln!("wrote {}", path.display());
    }
    Ok(())
}

pub fn cmd_benchmark(cfg: &CliConfig) -> Result<()> {
    check_dataset(cfg)?;
    let prep = prepare_data(cfg)?;
    let classifier = load_classifier(cfg)?;
    let out = run_benchmark(&prep, &classifier, &cfg.experiment)?;
    write_artifact(&cfg.out_dir, "instances.csv", &out.instance_csv())?;
    write_artifact(&cfg.out_dir, "report.csv", &out.report_csv())?;
    print!("{}", out.report_csv());
    Ok(())
}

pub fn cmd_robustness(cfg: &CliConfig) -> Result<()> {
    check_dataset(cfg)?;
    let prep = prepare_data(cfg)?;
    let classifier = load_classifier(cfg)?;
    let mut rows: Vec<RobustnessRow> = Vec::new();
    for &kind in &cfg.robustness_kinds {
        let exp = ExperimentConfig {
            plausibility: kind,
            ..cfg.experiment.clone()
        };
        rows.extend(run_robustness(&prep, &classifier, &exp, &cfg.radii)?.rows);
    }
    // Stable sort groups the rows by radius while keeping the configured
    // kind order inside each group.
    rows.sort_by(|a, b| a.radius.partial_cmp(&b.radius).expect("radii are finite"));
    let mut csv = String::from(ROBUSTNESS_CSV_HEADER);
    csv.push('\n');
    for row in &rows {
        csv.push_str(&format!(
            "{:.6},{},{:.6},{:.6}\n",
            row.radius, row.plausibility, row.input_l2, row.output_l2
        ));
    }
    write_artifact(&cfg.out_dir, "robustness.csv", &csv)?;
    print!("{csv}");
    Ok(())
}

pub fn cmd_demo(cfg: &CliConfig) -> Result<()> {
    let exp = &cfg.experiment;
    let demo = DemoConfig {
        seed: exp.seed,
        n_per_class: cfg.n_per_class,
        n_test: cfg.n_test,
        n_demo: cfg.demo_n,
        tau: cfg.demo_tau,
        centers: cfg.centers,
        cov: cfg.cov,
        solver: exp.solver.clone(),
        gamma_lo_exp: exp.space.gamma_lo_exp,
        gamma_hi_exp: exp.space.gamma_hi_exp,
        gamma_steps: exp.space.gamma_steps,
    };
    let out = run_synth_demo(&demo)?;
    let mut summary = String::from(
        "instance,target,theta0_plain,theta2_plain,qhat_plain,theta0_kde,theta2_kde,qhat_kde\n",
    );
    for inst in &out.instances {
        summary.push_str(&format!(
            "{},{},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6}\n",
            inst.index,
            inst.target,
            inst.plain.theta0,
            inst.plain.theta2,
            inst.qhat_plain,
            inst.kde.theta0,
            inst.kde.theta2,
            inst.qhat_kde,
        ));
    }
    write_artifact(&cfg.out_dir, "demo_traj_plain.csv", &out.traj_plain_csv)?;
    write_artifact(&cfg.out_dir, "demo_traj_kde.csv", &out.traj_kde_csv)?;
    write_artifact(&cfg.out_dir, "demo_boundary.csv", &out.boundary_csv)?;
    write_artifact(&cfg.out_dir, "demo_summary.csv", &summary)?;
    print!("{summary}");
    Ok(())
}
