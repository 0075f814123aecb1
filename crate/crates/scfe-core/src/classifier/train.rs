//! Adam training on cross-entropy.
//!
//! Training only has to produce accurate, reproducible models for the
//! experiments; the CFE search uses the hinge losses in the parent module.
//! Width-1 heads train on sigmoid binary cross-entropy, wider heads on
//! softmax cross-entropy. All shuffling and initialization flows from the
//! caller's Rng, so identical seeds give identical final weights.

use super::{ClassifierModel, LossMode};
use crate::error::{Result, ScfeError};
use crate::numerics::{Matrix, Rng, Vector};

#[derive(Debug, Clone)]
pub struct TrainReport {
    /// Mean cross-entropy per epoch, in epoch order.
    pub epoch_mean_loss: Vec<f64>,
    pub train_accuracy: f64,
    pub eval_accuracy: Option<f64>,
}

/// Fraction of points whose prediction matches the label, in [0, 1].
pub fn accuracy(model: &ClassifierModel, x: &Matrix, y: &[usize]) -> Result<f64> {
    if x.rows() != y.len() {
        return Err(ScfeError::dim(format!(
            "{} rows but {} labels",
            x.rows(),
            y.len()
        )));
    }
    if y.is_empty() {
        return Err(ScfeError::invalid("accuracy over an empty set"));
    }
    let mut hits = 0usize;
    for (row, &label) in x.row_iter().zip(y) {
        if model.predict(row)? == label {
            hits += 1;
        }
    }
    Ok(hits as f64 / y.len() as f64)
}

struct AdamState {
    mw: Vec<Vector>,
    vw: Vec<Vector>,
    mb: Vec<Vector>,
    vb: Vec<Vector>,
    step: u64,
}

impl AdamState {
    fn new(model: &ClassifierModel) -> Self {
        let mw = model
            .layers()
            .iter()
            .map(|l| vec![0.0; l.weights.data().len()])
            .collect::<Vec<_>>();
        let mb = model
            .layers()
            .iter()
            .map(|l| vec![0.0; l.bias.len()])
            .collect::<Vec<_>>();
        AdamState {
            vw: mw.clone(),
            vb: mb.clone(),
            mw,
            mb,
            step: 0,
        }
    }
}

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const EPS: f64 = 1e-8;

fn adam_update(param: &mut f64, grad: f64, m: &mut f64, v: &mut f64, lr: f64, step: u64) {
    *m = BETA1 * *m + (1.0 - BETA1) * grad;
    *v = BETA2 * *v + (1.0 - BETA2) * grad * grad;
    let mhat = *m / (1.0 - BETA1.powi(step as i32));
    let vhat = *v / (1.0 - BETA2.powi(step as i32));
    *param -= lr * mhat / (vhat.sqrt() + EPS);
}

/// Per-sample cross-entropy and gradient with respect to the logits.
fn loss_and_delta(logits: &[f64], label: usize, mode: LossMode) -> (f64, Vector) {
    match mode {
        LossMode::Binary => {
            let z = logits[0];
            let y = label as f64;
            // Stable -[y ln p + (1-y) ln(1-p)] for p = sigmoid(z).
            let loss = z.max(0.0) - z * y + (-z.abs()).exp().ln_1p();
            let p = super::sigmoid(z);
            (loss, vec![p - y])
        }
        LossMode::Multiclass => {
            let zmax = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let exps: Vector = logits.iter().map(|&z| (z - zmax).exp()).collect();
            let total: f64 = exps.iter().sum();
            let loss = total.ln() + zmax - logits[label];
            let mut delta: Vector = exps.iter().map(|e| e / total).collect();
            delta[label] -= 1.0;
            (loss, delta)
        }
    }
}

/// Trains `model` in place and reports per-epoch losses plus final
/// accuracies. Zero epochs leave the model untouched.
#[allow(clippy::too_many_arguments)]
pub fn train_adam(
    model: &mut ClassifierModel,
    train_x: &Matrix,
    train_y: &[usize],
    eval: Option<(&Matrix, &[usize])>,
    epochs: usize,
    batch: usize,
    lr: f64,
    rng: &mut Rng,
) -> Result<TrainReport> {
    let n = train_x.rows();
    if n == 0 {
        return Err(ScfeError::invalid("cannot train on an empty dataset"));
    }
    if train_y.len() != n {
        return Err(ScfeError::dim(format!("{} rows but {} labels", n, train_y.len())));
    }
    if batch == 0 {
        return Err(ScfeError::invalid("batch size must be positive"));
    }
    let n_classes = model.n_classes();
    if let Some(&bad) = train_y.iter().find(|&&y| y >= n_classes) {
        return Err(ScfeError::invalid(format!(
            "label {} out of range for {} classes",
            bad, n_classes
        )));
    }
    let mode = if model.output_dim() == 1 {
        LossMode::Binary
    } else {
        LossMode::Multiclass
    };

    let mut adam = AdamState::new(model);
    let mut epoch_mean_loss = Vec::with_capacity(epochs);
    let mut order: Vec<usize> = (0..n).collect();

    for _epoch in 0..epochs {
        rng.shuffle(&mut order);
        let mut epoch_loss = 0.0;
        for chunk in order.chunks(batch) {
            let scale = 1.0 / chunk.len() as f64;
            let mut grad_w: Vec<Vector> = model
                .layers()
                .iter()
                .map(|l| vec![0.0; l.weights.data().len()])
                .collect();
            let mut grad_b: Vec<Vector> = model
                .layers()
                .iter()
                .map(|l| vec![0.0; l.bias.len()])
                .collect();
            for &i in chunk {
                let trace = model.forward_trace(train_x.row(i))?;
                let (loss, mut delta) = loss_and_delta(trace.logits(), train_y[i], mode);
                epoch_loss += loss;
                for l in (0..model.layers().len()).rev() {
                    let layer = &model.layers()[l];
                    for (dz, &z) in delta.iter_mut().zip(&trace.pre_activations[l]) {
                        *dz *= layer.activation.derivative(z);
                    }
                    let input = &trace.activations[l];
                    let cols = layer.weights.cols();
                    for (r, &dz) in delta.iter().enumerate() {
                        grad_b[l][r] += dz * scale;
                        let row_base = r * cols;
                        for (c, &a) in input.iter().enumerate() {
                            grad_w[l][row_base + c] += dz * a * scale;
                        }
                    }
                    delta = layer.weights.matvec_t(&delta)?;
                }
            }
            adam.step += 1;
            let step = adam.step;
            for (l, layer) in model.layers_mut().iter_mut().enumerate() {
                let rows = layer.weights.rows();
                let cols = layer.weights.cols();
                for r in 0..rows {
                    for c in 0..cols {
                        let idx = r * cols + c;
                        let mut w = layer.weights.get(r, c);
                        adam_update(
                            &mut w,
                            grad_w[l][idx],
                            &mut adam.mw[l][idx],
                            &mut adam.vw[l][idx],
                            lr,
                            step,
                        );
                        layer.weights.set(r, c, w);
                    }
                    adam_update(
                        &mut layer.bias[r],
                        grad_b[l][r],
                        &mut adam.mb[l][r],
                        &mut adam.vb[l][r],
                        lr,
                        step,
                    );
                }
            }
        }
        epoch_mean_loss.push(epoch_loss / n as f64);
    }

    let train_accuracy = accuracy(model, train_x, train_y)?;
    let eval_accuracy = match eval {
        Some((x, y)) => Some(accuracy(model, x, y)?),
        None => None,
    };
    Ok(TrainReport {
        epoch_mean_loss,
        train_accuracy,
        eval_accuracy,
    })
}
