//! Differentiable classifiers and the hinge-style losses used for CFE search.
//!
//! Models are stacks of dense layers with ReLU or identity activations. A
//! final width of 1 marks a binary-probability model: the sigmoid head maps
//! the logit to f(x) in [0, 1] and prediction thresholds at 0.5. Wider heads
//! are multiclass with argmax prediction over raw logits.
//!
//! The CFE losses are
//!
//! * binary:     max{ (1 - 2 y_cf) * f(x), -c }
//! * multiclass: max{ max_{i != y_cf} f_i(x) - f_{y_cf}(x), -c }
//!
//! with cut-off c >= 0, so the loss floors at -c exactly when the target class
//! wins by margin c. Input gradients come from backpropagation with fixed
//! subgradient conventions at kinks: ReLU'(0) = 0, the outer max prefers its
//! first (non-constant) branch on ties, and the inner multiclass max prefers
//! the lowest class index. Fixed conventions keep optimization traces
//! deterministic.

mod io;
mod train;

pub use io::{load_model, parse_model, save_model, serialize_model};
pub use train::{accuracy, train_adam, TrainReport};

use crate::error::{Result, ScfeError};
use crate::numerics::{Matrix, Rng, Vector};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Identity,
}

impl Activation {
    pub fn name(&self) -> &'static str {
        match self {
            Activation::Relu => "relu",
            Activation::Identity => "identity",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "relu" => Some(Activation::Relu),
            "identity" => Some(Activation::Identity),
            _ => None,
        }
    }

    fn apply(&self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Identity => z,
        }
    }

    /// Subgradient convention: ReLU'(0) = 0.
    fn derivative(&self, z: f64) -> f64 {
        match self {
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Identity => 1.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Layer {
    /// out_dim x in_dim weight matrix.
    pub weights: Matrix,
    pub bias: Vector,
    pub activation: Activation,
}

#[derive(Debug, Clone)]
pub struct ClassifierModel {
    layers: Vec<Layer>,
}

impl ClassifierModel {
    pub fn new(layers: Vec<Layer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(ScfeError::invalid("model needs at least one layer"));
        }
        for (i, layer) in layers.iter().enumerate() {
            if layer.bias.len() != layer.weights.rows() {
                return Err(ScfeError::dim(format!(
                    "layer {}: {} bias entries for {} output rows",
                    i,
                    layer.bias.len(),
                    layer.weights.rows()
                )));
            }
            if i > 0 && layer.weights.cols() != layers[i - 1].weights.rows() {
                return Err(ScfeError::dim(format!(
                    "layer {} expects {} inputs but layer {} outputs {}",
                    i,
                    layer.weights.cols(),
                    i - 1,
                    layers[i - 1].weights.rows()
                )));
            }
            if layer.weights.data().iter().any(|w| !w.is_finite())
                || layer.bias.iter().any(|b| !b.is_finite())
            {
                return Err(ScfeError::invalid(format!("layer {} has non-finite weights", i)));
            }
        }
        Ok(ClassifierModel { layers })
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub(crate) fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].weights.cols()
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().unwrap().weights.rows()
    }

    /// Number of classes the model distinguishes (2 for a sigmoid head).
    pub fn n_classes(&self) -> usize {
        if self.output_dim() == 1 {
            2
        } else {
            self.output_dim()
        }
    }

    /// Glorot-uniform MLP with ReLU hidden layers and an identity head.
    pub fn mlp(input_dim: usize, hidden: &[usize], output_dim: usize, rng: &mut Rng) -> Result<Self> {
        let mut dims = vec![input_dim];
        dims.extend_from_slice(hidden);
        dims.push(output_dim);
        let mut layers = Vec::new();
        for w in dims.windows(2) {
            let (fan_in, fan_out) = (w[0], w[1]);
            if fan_in == 0 || fan_out == 0 {
                return Err(ScfeError::invalid("layer widths must be positive"));
            }
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            let data: Vec<f64> = (0..fan_in * fan_out)
                .map(|_| rng.uniform_in(-limit, limit))
                .collect();
            layers.push(Layer {
                weights: Matrix::from_data(fan_out, fan_in, data)?,
                bias: vec![0.0; fan_out],
                activation: Activation::Relu,
            });
        }
        layers.last_mut().unwrap().activation = Activation::Identity;
        ClassifierModel::new(layers)
    }

    /// Single dense layer with identity activation (logistic / softmax
    /// regression once trained with the matching loss).
    pub fn linear(input_dim: usize, output_dim: usize, rng: &mut Rng) -> Result<Self> {
        ClassifierModel::mlp(input_dim, &[], output_dim, rng)
    }

    pub fn forward_logits(&self, x: &[f64]) -> Result<Vector> {
        if x.len() != self.input_dim() {
            return Err(ScfeError::dim(format!(
                "model expects {} features, got {}",
                self.input_dim(),
                x.len()
            )));
        }
        let mut a = x.to_vec();
        for layer in &self.layers {
            let mut z = layer.weights.matvec(&a)?;
            for (zi, bi) in z.iter_mut().zip(&layer.bias) {
                *zi = layer.activation.apply(*zi + bi);
            }
            a = z;
        }
        Ok(a)
    }

    /// Forward pass keeping pre-activations for backpropagation.
    pub(crate) fn forward_trace(&self, x: &[f64]) -> Result<ForwardTrace> {
        let mut activations = vec![x.to_vec()];
        let mut pre_activations = Vec::with_capacity(self.layers.len());
        for layer in &self.layers {
            let mut z = layer.weights.matvec(activations.last().unwrap())?;
            for (zi, bi) in z.iter_mut().zip(&layer.bias) {
                *zi += bi;
            }
            let a = z.iter().map(|&v| layer.activation.apply(v)).collect();
            pre_activations.push(z);
            activations.push(a);
        }
        Ok(ForwardTrace {
            activations,
            pre_activations,
        })
    }

    pub fn predict(&self, x: &[f64]) -> Result<usize> {
        let logits = self.forward_logits(x)?;
        if self.output_dim() == 1 {
            // Ties at probability 0.5 go to the lowest class index.
            return Ok(if sigmoid(logits[0]) > 0.5 { 1 } else { 0 });
        }
        Ok(argmax_lowest(&logits))
    }
}

pub(crate) struct ForwardTrace {
    /// activations[0] is the input; activations[l + 1] the output of layer l.
    pub activations: Vec<Vector>,
    pub pre_activations: Vec<Vector>,
}

impl ForwardTrace {
    pub fn logits(&self) -> &[f64] {
        self.activations.last().unwrap()
    }
}

/// Numerically stable logistic function.
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn argmax_lowest(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate().skip(1) {
        if x > v[best] {
            best = i;
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossMode {
    Binary,
    Multiclass,
}

/// Target and cut-off for the CFE hinge loss.
#[derive(Debug, Clone, Copy)]
pub struct LossConfig {
    pub mode: LossMode,
    /// Cut-off c >= 0; the loss floors at -c.
    pub c: f64,
    pub y_cf: usize,
}

impl LossConfig {
    pub fn new(mode: LossMode, c: f64, y_cf: usize) -> Self {
        LossConfig { mode, c, y_cf }
    }

    fn check(&self, model: &ClassifierModel) -> Result<()> {
        match self.mode {
            LossMode::Binary => {
                if model.output_dim() != 1 {
                    return Err(ScfeError::invalid(format!(
                        "binary loss needs a width-1 head, model has {}",
                        model.output_dim()
                    )));
                }
                if self.y_cf > 1 {
                    return Err(ScfeError::invalid(format!(
                        "binary target class must be 0 or 1, got {}",
                        self.y_cf
                    )));
                }
            }
            LossMode::Multiclass => {
                if model.output_dim() < 2 {
                    return Err(ScfeError::invalid(
                        "multiclass loss needs at least 2 logits".to_string(),
                    ));
                }
                if self.y_cf >= model.output_dim() {
                    return Err(ScfeError::invalid(format!(
                        "target class {} out of range for {} classes",
                        self.y_cf,
                        model.output_dim()
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Hinge-style classifier loss driving the counterfactual toward `y_cf`.
pub fn cfe_loss(model: &ClassifierModel, x: &[f64], cfg: &LossConfig) -> Result<f64> {
    cfg.check(model)?;
    let logits = model.forward_logits(x)?;
    Ok(match cfg.mode {
        LossMode::Binary => {
            let f = sigmoid(logits[0]);
            let sign = 1.0 - 2.0 * cfg.y_cf as f64;
            (sign * f).max(-cfg.c)
        }
        LossMode::Multiclass => {
            let rival = rival_argmax(&logits, cfg.y_cf);
            (logits[rival] - logits[cfg.y_cf]).max(-cfg.c)
        }
    })
}

/// Lowest-index argmax over classes other than `y_cf`.
fn rival_argmax(logits: &[f64], y_cf: usize) -> usize {
    let mut best = usize::MAX;
    for (i, &z) in logits.iter().enumerate() {
        if i == y_cf {
            continue;
        }
        if best == usize::MAX || z > logits[best] {
            best = i;
        }
    }
    best
}

/// Gradient of [`cfe_loss`] with respect to the input.
pub fn input_gradient(model: &ClassifierModel, x: &[f64], cfg: &LossConfig) -> Result<Vector> {
    cfg.check(model)?;
    let trace = model.forward_trace(x)?;
    let logits = trace.logits();
    let d_logits: Vector = match cfg.mode {
        LossMode::Binary => {
            let f = sigmoid(logits[0]);
            let sign = 1.0 - 2.0 * cfg.y_cf as f64;
            // Ties with the -c floor activate the non-constant branch.
            if sign * f >= -cfg.c {
                vec![sign * f * (1.0 - f)]
            } else {
                vec![0.0]
            }
        }
        LossMode::Multiclass => {
            let rival = rival_argmax(logits, cfg.y_cf);
            let mut g = vec![0.0; logits.len()];
            if logits[rival] - logits[cfg.y_cf] >= -cfg.c {
                g[rival] = 1.0;
                g[cfg.y_cf] = -1.0;
            }
            g
        }
    };
    backprop_input(model, &trace, d_logits)
}

/// Propagates a gradient at the final activation back to the input.
fn backprop_input(
    model: &ClassifierModel,
    trace: &ForwardTrace,
    mut delta: Vector,
) -> Result<Vector> {
    for (layer, pre) in model.layers.iter().zip(&trace.pre_activations).rev() {
        for (dz, &z) in delta.iter_mut().zip(pre) {
            *dz *= layer.activation.derivative(z);
        }
        delta = layer.weights.matvec_t(&delta)?;
    }
    Ok(delta)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn identity_model(d: usize) -> ClassifierModel {
        let mut w = Matrix::zeros(d, d);
        for i in 0..d {
            w.set(i, i, 1.0);
        }
        ClassifierModel::new(vec![Layer {
            weights: w,
            bias: vec![0.0; d],
            activation: Activation::Identity,
        }])
        .unwrap()
    }

    fn linear_binary(w: Vec<f64>, b: f64) -> ClassifierModel {
        let d = w.len();
        ClassifierModel::new(vec![Layer {
            weights: Matrix::from_data(1, d, w).unwrap(),
            bias: vec![b],
            activation: Activation::Identity,
        }])
        .unwrap()
    }

    #[test]
    fn zero_model_predicts_class_zero() {
        let model = ClassifierModel::new(vec![Layer {
            weights: Matrix::zeros(3, 2),
            bias: vec![0.0; 3],
            activation: Activation::Identity,
        }])
        .unwrap();
        let logits = model.forward_logits(&[0.4, -0.2]).unwrap();
        assert_eq!(logits, vec![0.0, 0.0, 0.0]);
        assert_eq!(model.predict(&[0.4, -0.2]).unwrap(), 0);
    }

    #[test]
    fn identity_model_predicts_argmax() {
        let model = identity_model(2);
        assert_eq!(model.forward_logits(&[1.0, 2.0]).unwrap(), vec![1.0, 2.0]);
        assert_eq!(model.predict(&[1.0, 2.0]).unwrap(), 1);
    }

    #[test]
    fn forward_matches_direct_chain_evaluation() {
        let mut rng = Rng::new(20);
        let model = ClassifierModel::mlp(3, &[4, 5], 2, &mut rng).unwrap();
        let x = vec![0.3, -0.8, 0.5];
        // Direct re-evaluation with explicit loops.
        let mut a = x.clone();
        for layer in model.layers() {
            let mut next = vec![0.0; layer.weights.rows()];
            for (r, out) in next.iter_mut().enumerate() {
                let mut acc = layer.bias[r];
                for (c, &xi) in a.iter().enumerate() {
                    acc += layer.weights.get(r, c) * xi;
                }
                *out = layer.activation.apply(acc);
            }
            a = next;
        }
        let fast = model.forward_logits(&x).unwrap();
        for (u, v) in fast.iter().zip(&a) {
            assert!((u - v).abs() < 1e-12);
        }
    }

    #[test]
    fn binary_loss_examples() {
        // f(x) = sigmoid(logit); pick the bias so f = 0.3.
        let logit = (0.3f64 / 0.7).ln();
        let model = linear_binary(vec![0.0], logit);
        let l1 = cfe_loss(&model, &[0.0], &LossConfig::new(LossMode::Binary, 0.0, 1)).unwrap();
        assert!((l1 - 0.0).abs() < 1e-12, "y_cf=1 gives max(-0.3, 0) = 0");
        let l0 = cfe_loss(&model, &[0.0], &LossConfig::new(LossMode::Binary, 0.0, 0)).unwrap();
        assert!((l0 - 0.3).abs() < 1e-12, "y_cf=0 gives 0.3, got {l0}");
    }

    #[test]
    fn multiclass_loss_example() {
        let model = identity_model(3);
        let cfg = LossConfig::new(LossMode::Multiclass, 0.0, 0);
        let l = cfe_loss(&model, &[2.0, 1.0, 3.0], &cfg).unwrap();
        assert_eq!(l, 1.0);
    }

    #[test]
    fn loss_floors_at_minus_c() {
        let model = identity_model(3);
        let cfg = LossConfig::new(LossMode::Multiclass, 0.25, 0);
        // Target wins by a wide margin; the floor binds.
        let l = cfe_loss(&model, &[5.0, 1.0, 0.0], &cfg).unwrap();
        assert_eq!(l, -0.25);
        let g = input_gradient(&model, &[5.0, 1.0, 0.0], &cfg).unwrap();
        assert_eq!(g, vec![0.0, 0.0, 0.0]);
    }

    #[test]
    fn linear_binary_gradient_is_scaled_w() {
        let w = vec![0.5, -1.5, 2.0];
        let model = linear_binary(w.clone(), 0.2);
        let x = vec![0.1, 0.2, -0.3];
        let cfg = LossConfig::new(LossMode::Binary, 0.0, 0);
        let z = 0.5 * 0.1 + -1.5 * 0.2 + 2.0 * -0.3 + 0.2;
        let f = sigmoid(z);
        let g = input_gradient(&model, &x, &cfg).unwrap();
        for (gi, wi) in g.iter().zip(&w) {
            assert!((gi - f * (1.0 - f) * wi).abs() < 1e-12);
        }
    }

    #[test]
    fn multiclass_gradient_uses_lowest_index_rival_on_ties() {
        let model = identity_model(3);
        let cfg = LossConfig::new(LossMode::Multiclass, 0.0, 1);
        // Classes 0 and 2 tie as rivals; index 0 must win.
        let g = input_gradient(&model, &[2.0, 0.0, 2.0], &cfg).unwrap();
        assert_eq!(g, vec![1.0, -1.0, 0.0]);
    }

    #[test]
    fn gradient_matches_finite_differences_away_from_kinks() {
        let mut rng = Rng::new(77);
        let model = ClassifierModel::mlp(4, &[8, 8], 3, &mut rng).unwrap();
        let cfg = LossConfig::new(LossMode::Multiclass, 0.0, 1);
        let h = 1e-5;
        let mut checked = 0;
        let mut tries = 0;
        while checked < 20 && tries < 500 {
            tries += 1;
            let x: Vec<f64> = (0..4).map(|_| rng.uniform_in(-1.0, 1.0)).collect();
            let logits = model.forward_logits(&x).unwrap();
            let rival = rival_argmax(&logits, 1);
            let margin = logits[rival] - logits[1];
            // Keep clear of both max kinks.
            let rival_gap = logits
                .iter()
                .enumerate()
                .filter(|&(i, _)| i != 1 && i != rival)
                .map(|(_, &z)| logits[rival] - z)
                .fold(f64::INFINITY, f64::min);
            if margin.abs() < 1e-3 || rival_gap < 1e-3 {
                continue;
            }
            let g = input_gradient(&model, &x, &cfg).unwrap();
            for i in 0..4 {
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[i] += h;
                xm[i] -= h;
                let fd = (cfe_loss(&model, &xp, &cfg).unwrap()
                    - cfe_loss(&model, &xm, &cfg).unwrap())
                    / (2.0 * h);
                let denom = g[i].abs().max(fd.abs()).max(1e-6);
                assert!(
                    ((g[i] - fd) / denom).abs() < 1e-4,
                    "coord {i}: analytic {} vs fd {}",
                    g[i],
                    fd
                );
            }
            checked += 1;
        }
        assert!(checked >= 20, "only {checked} clean points in {tries} tries");
    }

    #[test]
    fn loss_config_validation() {
        let model = identity_model(3);
        assert!(cfe_loss(&model, &[0.0; 3], &LossConfig::new(LossMode::Multiclass, 0.0, 3)).is_err());
        assert!(cfe_loss(&model, &[0.0; 3], &LossConfig::new(LossMode::Binary, 0.0, 1)).is_err());
    }
}
