//! Dataset loading, synthetic generators, and the prepare pipeline.
//!
//! All tables are min-max scaled into [0, 1] per feature at load time; the
//! feasible box and every downstream model live in that scaled space.
//! `prepare` then splits off a test set, optionally fits PCA on the training
//! rows only, and derives the working box from the training rows, so nothing
//! about the test set leaks into preprocessing.

use std::path::Path;

use crate::classifier::{train_adam, ClassifierModel};
use crate::error::{Result, ScfeError};
use crate::numerics::{
    minmax_fit_transform, pca_fit, pca_transform, seeded_shuffle_split, Matrix, MinMaxScaler,
    PcaModel, Rng,
};
use crate::proximal::BoxBounds;

/// A scaled dataset plus the transforms that produced it.
#[derive(Debug, Clone)]
pub struct DatasetTable {
    pub name: String,
    /// Feature rows, scaled into [0, 1].
    pub features: Matrix,
    /// Class labels remapped to 0..n_classes.
    pub labels: Vec<usize>,
    pub feature_names: Vec<String>,
    pub scaler: MinMaxScaler,
    pub n_classes: usize,
    /// Feasible box in scaled space; [0, 1] per feature at load time.
    pub bounds: BoxBounds,
}

/// Loads a rectangular CSV with a header row, numeric feature columns, and
/// one integer label column. Raw labels may be any non-negative integers;
/// they are remapped to 0..n_classes in sorted order.
pub fn load_csv_dataset(path: &Path, label_column: &str) -> Result<DatasetTable> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ScfeError::io(path.display().to_string(), e))?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".to_string());
    parse_csv_dataset(&text, label_column, name)
}

/// CSV body parser behind [`load_csv_dataset`]; takes the text directly so
/// tests and golden fixtures need no filesystem.
pub fn parse_csv_dataset(text: &str, label_column: &str, name: String) -> Result<DatasetTable> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines
        .next()
        .ok_or_else(|| ScfeError::invalid("empty CSV: no header row"))?;
    let columns: Vec<&str> = header.split(',').map(str::trim).collect();
    let label_idx = columns
        .iter()
        .position(|&c| c == label_column)
        .ok_or_else(|| {
            ScfeError::invalid(format!(
                "label column '{}' not found in header [{}]",
                label_column,
                columns.join(", ")
            ))
        })?;
    let feature_names: Vec<String> = columns
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != label_idx)
        .map(|(_, c)| c.to_string())
        .collect();

    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut raw_labels: Vec<u64> = Vec::new();
    for (line_no, line) in lines {
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        if cells.len() != columns.len() {
            return Err(ScfeError::parse(
                line_no + 1,
                format!("ragged row: {} fields, expected {}", cells.len(), columns.len()),
            ));
        }
        let mut row = Vec::with_capacity(columns.len() - 1);
        for (i, cell) in cells.iter().enumerate() {
            if i == label_idx {
                let label: u64 = cell.parse().map_err(|_| {
                    ScfeError::parse(line_no + 1, format!("unknown label value '{}'", cell))
                })?;
                raw_labels.push(label);
            } else {
                let value: f64 = cell.parse().map_err(|_| {
                    ScfeError::parse(
                        line_no + 1,
                        format!("non-numeric cell '{}' in column '{}'", cell, columns[i]),
                    )
                })?;
                if !value.is_finite() {
                    return Err(ScfeError::parse(
                        line_no + 1,
                        format!("non-finite cell in column '{}'", columns[i]),
                    ));
                }
                row.push(value);
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(ScfeError::invalid("CSV has a header but no data rows"));
    }

    let mut classes: Vec<u64> = raw_labels.clone();
    classes.sort_unstable();
    classes.dedup();
    let labels: Vec<usize> = raw_labels
        .iter()
        .map(|l| classes.binary_search(l).unwrap())
        .collect();

    let raw = Matrix::from_rows(&rows)?;
    let (scaler, features) = minmax_fit_transform(&raw)?;
    let bounds = BoxBounds::unit(features.cols());
    Ok(DatasetTable {
        name,
        features,
        labels,
        feature_names,
        scaler,
        n_classes: classes.len(),
        bounds,
    })
}

/// Serializes a table back to CSV (label column last, named `label`).
/// Feature values use the shortest exact decimal form, so a scaled table
/// survives a save/load roundtrip unchanged.
pub fn to_csv_string(table: &DatasetTable) -> String {
    let mut out = String::new();
    out.push_str(&table.feature_names.join(","));
    out.push_str(",label\n");
    for (row, label) in table.features.row_iter().zip(&table.labels) {
        for v in row {
            out.push_str(&format!("{},", v));
        }
        out.push_str(&format!("{}\n", label));
    }
    out
}

fn chol2(cov: &[[f64; 2]; 2]) -> Result<[f64; 3]> {
    let l00 = cov[0][0];
    if l00 <= 0.0 {
        return Err(ScfeError::invalid("covariance must be positive definite"));
    }
    let l00 = l00.sqrt();
    let l10 = cov[1][0] / l00;
    let rem = cov[1][1] - l10 * l10;
    if rem <= 0.0 {
        return Err(ScfeError::invalid("covariance must be positive definite"));
    }
    Ok([l00, l10, rem.sqrt()])
}

/// Two Gaussian blobs in the plane plus a logistic separator trained on the
/// scaled table. The separator ships with the data because the demo and the
/// synthetic benchmarks all probe this one fixed model.
pub fn generate_synth2d(
    n_per_class: usize,
    centers: &[[f64; 2]; 2],
    cov: &[[f64; 2]; 2],
    rng: &mut Rng,
) -> Result<(DatasetTable, ClassifierModel)> {
    if n_per_class == 0 {
        return Err(ScfeError::invalid("n_per_class must be positive"));
    }
    let l = chol2(cov)?;
    let mut rows = Vec::with_capacity(2 * n_per_class);
    let mut labels = Vec::with_capacity(2 * n_per_class);
    for (class, center) in centers.iter().enumerate() {
        for _ in 0..n_per_class {
            let (z0, z1) = (rng.normal(), rng.normal());
            rows.push(vec![
                center[0] + l[0] * z0,
                center[1] + l[1] * z0 + l[2] * z1,
            ]);
            labels.push(class);
        }
    }
    let raw = Matrix::from_rows(&rows)?;
    let (scaler, features) = minmax_fit_transform(&raw)?;
    let table = DatasetTable {
        name: "synth2d".to_string(),
        bounds: BoxBounds::unit(2),
        feature_names: vec!["x0".to_string(), "x1".to_string()],
        scaler,
        n_classes: 2,
        labels,
        features,
    };
    let mut model = ClassifierModel::linear(2, 1, rng)?;
    train_adam(&mut model, &table.features, &table.labels, None, 150, 32, 0.05, rng)?;
    Ok((table, model))
}

/// Three Gaussian classes in 13 dimensions with collinear means, mimicking
/// the shape of a small chemometric dataset. Collinear class centers keep
/// every class reachable by a move along the leading principal axis, which
/// the single-feature sparsity benchmarks rely on.
pub fn generate_wine_style(n_per_class: usize, rng: &mut Rng) -> Result<DatasetTable> {
    if n_per_class < 2 {
        return Err(ScfeError::invalid("need at least 2 points per class"));
    }
    const D: usize = 13;
    let direction: Vec<f64> = (0..D).map(|j| 0.6 + 0.08 * j as f64).collect();
    let mut rows = Vec::with_capacity(3 * n_per_class);
    let mut labels = Vec::with_capacity(3 * n_per_class);
    for class in 0..3usize {
        let shift = class as f64 - 1.0;
        for _ in 0..n_per_class {
            rows.push(
                direction
                    .iter()
                    .map(|w| 2.0 * shift * w + rng.normal())
                    .collect(),
            );
            labels.push(class);
        }
    }
    let raw = Matrix::from_rows(&rows)?;
    let (scaler, features) = minmax_fit_transform(&raw)?;
    Ok(DatasetTable {
        name: "wine-synth".to_string(),
        bounds: BoxBounds::unit(D),
        feature_names: (0..D).map(|j| format!("f{}", j)).collect(),
        scaler,
        n_classes: 3,
        labels,
        features,
    })
}

/// Binary 12-feature regression-style data, binarized at the median of a
/// fixed linear score, echoing a house-price threshold task.
pub fn generate_housing_style(n: usize, rng: &mut Rng) -> Result<DatasetTable> {
    if n < 4 {
        return Err(ScfeError::invalid("need at least 4 rows"));
    }
    const D: usize = 12;
    const WEIGHTS: [f64; D] = [
        0.9, -0.6, 0.45, -0.3, 0.8, 0.25, -0.7, 0.5, -0.4, 0.65, -0.55, 0.35,
    ];
    let mut rows = Vec::with_capacity(n);
    let mut scores = Vec::with_capacity(n);
    for _ in 0..n {
        let row: Vec<f64> = (0..D).map(|_| rng.normal()).collect();
        let score: f64 = row.iter().zip(WEIGHTS).map(|(x, w)| x * w).sum::<f64>()
            + 0.3 * rng.normal();
        rows.push(row);
        scores.push(score);
    }
    let mut sorted = scores.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let median = sorted[n / 2];
    let labels: Vec<usize> = scores.iter().map(|&s| usize::from(s > median)).collect();
    let raw = Matrix::from_rows(&rows)?;
    let (scaler, features) = minmax_fit_transform(&raw)?;
    Ok(DatasetTable {
        name: "housing-synth".to_string(),
        bounds: BoxBounds::unit(D),
        feature_names: (0..D).map(|j| format!("f{}", j)).collect(),
        scaler,
        n_classes: 2,
        labels,
        features,
    })
}

/// Split + optional PCA + working box, all derived from training rows only.
#[derive(Debug, Clone)]
pub struct PreparedDataset {
    pub name: String,
    pub feature_names: Vec<String>,
    pub train_x: Matrix,
    pub train_y: Vec<usize>,
    pub test_x: Matrix,
    pub test_y: Vec<usize>,
    pub scaler: MinMaxScaler,
    pub pca: Option<PcaModel>,
    /// Per-feature [min, max] of the training rows in working space.
    pub bounds: BoxBounds,
    pub n_classes: usize,
}

pub fn prepare(
    table: &DatasetTable,
    n_test: usize,
    pca_dims: Option<usize>,
    rng: &mut Rng,
) -> Result<PreparedDataset> {
    let ((train_x, train_y), (test_x, test_y)) =
        seeded_shuffle_split(&table.features, &table.labels, n_test, rng)?;
    let (pca, train_w, mut test_w, names) = match pca_dims {
        Some(r) => {
            let model = pca_fit(&train_x, r)?;
            let train_w = pca_transform(&model, &train_x)?;
            let test_w = pca_transform(&model, &test_x)?;
            let names = (0..r).map(|i| format!("pc{}", i)).collect();
            (Some(model), train_w, test_w, names)
        }
        None => (None, train_x, test_x, table.feature_names.clone()),
    };

    let d = train_w.cols();
    let mut lo = vec![f64::INFINITY; d];
    let mut hi = vec![f64::NEG_INFINITY; d];
    for row in train_w.row_iter() {
        for (j, &v) in row.iter().enumerate() {
            lo[j] = lo[j].min(v);
            hi[j] = hi[j].max(v);
        }
    }
    let bounds = BoxBounds::new(lo, hi)?;
    // Test factuals must be feasible; rows outside the training box are
    // clamped onto it.
    for i in 0..test_w.rows() {
        let clamped: Vec<f64> = test_w
            .row(i)
            .iter()
            .enumerate()
            .map(|(j, &v)| bounds.clamp_coord(j, v))
            .collect();
        test_w.row_mut(i).copy_from_slice(&clamped);
    }

    Ok(PreparedDataset {
        name: table.name.clone(),
        feature_names: names,
        train_x: train_w,
        train_y,
        test_x: test_w,
        test_y,
        scaler: table.scaler.clone(),
        pca,
        bounds,
        n_classes: table.n_classes,
    })
}
