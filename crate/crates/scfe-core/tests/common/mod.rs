//! Independent oracles for the acceptance suite.
//!
//! Everything here recomputes quantities from first principles: dense grid
//! scans for prox operators, exhaustive subset search for the sparse
//! projection, central finite differences for gradients, and a literal
//! definition-chasing LOF. None of it shares code paths with the library
//! internals it checks.

use scfe_core::classifier::{Activation, ClassifierModel};
use scfe_core::numerics::Rng;

/// Per-coordinate sparsity penalty used by the grid oracle.
#[derive(Debug, Clone, Copy)]
pub enum Pen {
    L0,
    LHalf,
    L1,
}

/// The 1-D prox objective the grid oracle minimizes.
pub fn prox_objective_1d(pen: Pen, z: f64, s: f64, x_f: f64, lambda: f64) -> f64 {
    0.5 * (z - s) * (z - s) + pen_value(pen, z - x_f, lambda)
}

fn pen_value(pen: Pen, diff: f64, lambda: f64) -> f64 {
    match pen {
        Pen::L0 => {
            if diff != 0.0 {
                lambda
            } else {
                0.0
            }
        }
        Pen::LHalf => lambda * diff.abs().sqrt(),
        Pen::L1 => lambda * diff.abs(),
    }
}

/// Grid minimizer of F(z) = (z - s)^2 / 2 + lambda * pen(z - x_f) over
/// [lo, hi]. A coarse scan plus exact candidate points (the kinks and the
/// unconstrained quadratic minimizer), then window refinement around the
/// incumbent down to a 1e-9 step. Returns (argmin, min value).
pub fn grid_prox_1d(s: f64, x_f: f64, lambda: f64, lo: f64, hi: f64, pen: Pen) -> (f64, f64) {
    let obj = |z: f64| 0.5 * (z - s) * (z - s) + pen_value(pen, z - x_f, lambda);
    let mut best_z = lo;
    let mut best_f = obj(lo);
    let offer = |z: f64, best_z: &mut f64, best_f: &mut f64| {
        if z >= lo && z <= hi {
            let f = obj(z);
            if f < *best_f {
                *best_f = f;
                *best_z = z;
            }
        }
    };
    for z in [hi, x_f, s.clamp(lo, hi)] {
        offer(z, &mut best_z, &mut best_f);
    }
    let n = 2000;
    let coarse = (hi - lo) / n as f64;
    for i in 0..=n {
        offer(lo + coarse * i as f64, &mut best_z, &mut best_f);
    }
    let mut step = coarse;
    while step > 1e-9 {
        let center = best_z;
        let next = step / 20.0;
        for i in -20..=20 {
            offer(center + next * i as f64, &mut best_z, &mut best_f);
        }
        step = next;
    }
    (best_z, best_f)
}

/// Exhaustive minimizer of ||z - s|| over {z in box : at most m coords differ
/// from x_f}: every support subset of size <= m, coordinates on the support
/// clamped, the rest pinned to the factual.
pub fn exhaustive_l0ball_box(
    s: &[f64],
    x_f: &[f64],
    m: usize,
    lo: &[f64],
    hi: &[f64],
) -> Vec<f64> {
    let d = s.len();
    assert!(d <= 20, "exhaustive oracle is exponential in d");
    let mut best: Option<(f64, Vec<f64>)> = None;
    for mask in 0u32..(1 << d) {
        if mask.count_ones() as usize > m {
            continue;
        }
        let z: Vec<f64> = (0..d)
            .map(|i| {
                if mask & (1 << i) != 0 {
                    s[i].clamp(lo[i], hi[i])
                } else {
                    x_f[i]
                }
            })
            .collect();
        let dist2: f64 = z.iter().zip(s).map(|(a, b)| (a - b) * (a - b)).sum();
        if best.as_ref().is_none_or(|(b, _)| dist2 < *b) {
            best = Some((dist2, z));
        }
    }
    best.unwrap().1
}

pub fn l2_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Central finite-difference gradient with step h per coordinate.
pub fn central_diff(f: impl Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    (0..x.len())
        .map(|i| {
            let mut plus = x.to_vec();
            let mut minus = x.to_vec();
            plus[i] += h;
            minus[i] -= h;
            (f(&plus) - f(&minus)) / (2.0 * h)
        })
        .collect()
}

/// Relative gradient error ||a - b|| / max(||a||, ||b||, eps).
pub fn grad_rel_err(a: &[f64], b: &[f64]) -> f64 {
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let denom = norm(a).max(norm(b)).max(1e-12);
    l2_distance(a, b) / denom
}

/// Smallest |pre-activation| over the model's ReLU units at x; finite
/// differences are unreliable when any unit sits near its kink.
pub fn relu_margin(model: &ClassifierModel, x: &[f64]) -> f64 {
    let mut margin = f64::INFINITY;
    let mut a = x.to_vec();
    for layer in model.layers() {
        let mut z = layer.bias.clone();
        for (r, zr) in z.iter_mut().enumerate() {
            for (c, &ac) in a.iter().enumerate() {
                *zr += layer.weights.get(r, c) * ac;
            }
        }
        if layer.activation == Activation::Relu {
            for &v in &z {
                margin = margin.min(v.abs());
            }
            a = z.iter().map(|&v| v.max(0.0)).collect();
        } else {
            a = z;
        }
    }
    margin
}

/// Draws a point in the unit box meeting `accept`, panicking after too many
/// rejections (the acceptance run should never get near that).
pub fn sample_accepted(
    rng: &mut Rng,
    dim: usize,
    accept: impl Fn(&[f64]) -> bool,
) -> Vec<f64> {
    for _ in 0..10_000 {
        let x: Vec<f64> = (0..dim).map(|_| rng.uniform()).collect();
        if accept(&x) {
            return x;
        }
    }
    panic!("rejection sampling failed to find an acceptable point");
}

/// Literal LOF transcription: k-distance with ties-inclusive neighborhoods,
/// reachability distances, local reachability density, and the mean lrd
/// ratio, all recomputed per call with no shared tables.
pub struct NaiveLof {
    points: Vec<Vec<f64>>,
    k: usize,
}

impl NaiveLof {
    pub fn new(points: Vec<Vec<f64>>, k: usize) -> Self {
        assert!(k >= 1 && k < points.len());
        NaiveLof { points, k }
    }

    /// k-distance of reference point o: the kth smallest distance to the
    /// other reference points.
    fn k_dist(&self, o: usize) -> f64 {
        let mut d: Vec<f64> = (0..self.points.len())
            .filter(|&j| j != o)
            .map(|j| l2_distance(&self.points[o], &self.points[j]))
            .collect();
        d.sort_by(|a, b| a.partial_cmp(b).unwrap());
        d[self.k - 1]
    }

    /// Neighborhood of o: every other point within k-distance (ties kept).
    fn neighborhood(&self, o: usize) -> Vec<usize> {
        let kd = self.k_dist(o);
        (0..self.points.len())
            .filter(|&j| j != o && l2_distance(&self.points[o], &self.points[j]) <= kd)
            .collect()
    }

    fn lrd(&self, o: usize) -> f64 {
        let neighbors = self.neighborhood(o);
        let total: f64 = neighbors
            .iter()
            .map(|&j| l2_distance(&self.points[o], &self.points[j]).max(self.k_dist(j)))
            .sum();
        if total == 0.0 {
            f64::INFINITY
        } else {
            neighbors.len() as f64 / total
        }
    }

    /// LOF of an external query point; its neighbors come from the reference
    /// set and the query itself never joins the set.
    pub fn query(&self, x: &[f64]) -> f64 {
        let d: Vec<f64> = self
            .points
            .iter()
            .map(|p| l2_distance(x, p))
            .collect();
        let mut sorted = d.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let kd = sorted[self.k - 1];
        let neighbors: Vec<usize> = (0..self.points.len()).filter(|&j| d[j] <= kd).collect();
        let total: f64 = neighbors
            .iter()
            .map(|&j| d[j].max(self.k_dist(j)))
            .sum();
        let lrd_x = if total == 0.0 {
            f64::INFINITY
        } else {
            neighbors.len() as f64 / total
        };
        let mean_ratio = neighbors
            .iter()
            .map(|&j| {
                let lrd_j = self.lrd(j);
                if lrd_j.is_infinite() && lrd_x.is_infinite() {
                    1.0
                } else {
                    lrd_j / lrd_x
                }
            })
            .sum::<f64>()
            / neighbors.len() as f64;
        mean_ratio
    }
}
