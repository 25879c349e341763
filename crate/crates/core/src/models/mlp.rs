//! One-hidden-layer perceptron: sigmoid hidden units, softmax output,
//! cross-entropy loss, per-sample SGD with momentum.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::logistic::dot;
use super::standardize::Standardizer;
use crate::ingest::{Activity, NUM_ACTIVITIES};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpParams {
    /// `None` means ceil((features + classes) / 2), the usual "a" rule.
    pub hidden_units: Option<usize>,
    pub learning_rate: f64,
    pub momentum: f64,
    pub epochs: usize,
}

impl Default for MlpParams {
    fn default() -> Self {
        MlpParams { hidden_units: None, learning_rate: 0.3, momentum: 0.2, epochs: 500 }
    }
}

impl MlpParams {
    pub fn hidden_for(&self, width: usize) -> usize {
        self.hidden_units.unwrap_or((width + NUM_ACTIVITIES).div_ceil(2))
    }
}

/// Offsets of each parameter block inside the flat parameter vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(super) struct Layout {
    inputs: usize,
    hidden: usize,
}

impl Layout {
    pub(super) fn new(inputs: usize, hidden: usize) -> Layout {
        Layout { inputs, hidden }
    }

    fn w1(&self) -> usize {
        0
    }

    fn b1(&self) -> usize {
        self.hidden * self.inputs
    }

    fn w2(&self) -> usize {
        self.b1() + self.hidden
    }

    fn b2(&self) -> usize {
        self.w2() + NUM_ACTIVITIES * self.hidden
    }

    pub(super) fn len(&self) -> usize {
        self.b2() + NUM_ACTIVITIES
    }

    fn hidden_activations(&self, p: &[f64], x: &[f64], h: &mut [f64]) {
        let w1 = &p[self.w1()..self.b1()];
        let b1 = &p[self.b1()..self.w2()];
        for (j, hj) in h.iter_mut().enumerate() {
            let z = dot(&w1[j * self.inputs..(j + 1) * self.inputs], x) + b1[j];
            *hj = 1.0 / (1.0 + (-z).exp());
        }
    }

    fn logits(&self, p: &[f64], h: &[f64]) -> [f64; NUM_ACTIVITIES] {
        let w2 = &p[self.w2()..self.b2()];
        let b2 = &p[self.b2()..];
        let mut out = [0.0; NUM_ACTIVITIES];
        for (c, o) in out.iter_mut().enumerate() {
            *o = dot(&w2[c * self.hidden..(c + 1) * self.hidden], h) + b2[c];
        }
        out
    }

    /// Adds `scale · ∂loss/∂p` for one sample into `grad`; returns the
    /// sample's cross-entropy.
    fn accumulate(&self, p: &[f64], x: &[f64], y: usize, scale: f64, grad: &mut [f64], h: &mut [f64]) -> f64 {
        self.hidden_activations(p, x, h);
        let mut out = self.logits(p, h);
        let max = out.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut total = 0.0;
        for o in &mut out {
            *o = (*o - max).exp();
            total += *o;
        }
        let loss = -(out[y] / total).ln();
        let mut delta_out = [0.0; NUM_ACTIVITIES];
        for (c, d) in delta_out.iter_mut().enumerate() {
            *d = out[c] / total - if c == y { 1.0 } else { 0.0 };
        }
        let (w2_off, b2_off, b1_off) = (self.w2(), self.b2(), self.b1());
        for c in 0..NUM_ACTIVITIES {
            let d = scale * delta_out[c];
            grad[b2_off + c] += d;
            let row = &mut grad[w2_off + c * self.hidden..w2_off + (c + 1) * self.hidden];
            for (g, hj) in row.iter_mut().zip(h.iter()) {
                *g += d * hj;
            }
        }
        for j in 0..self.hidden {
            let mut back = 0.0;
            for (c, d) in delta_out.iter().enumerate() {
                back += d * p[w2_off + c * self.hidden + j];
            }
            let dz = scale * back * h[j] * (1.0 - h[j]);
            grad[b1_off + j] += dz;
            let row = &mut grad[j * self.inputs..(j + 1) * self.inputs];
            for (g, xi) in row.iter_mut().zip(x) {
                *g += dz * xi;
            }
        }
        loss
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    pub standardizer: Standardizer,
    pub hidden_units: usize,
    /// Hidden weights (hidden × inputs, row-major), hidden biases, output
    /// weights (classes × hidden), output biases.
    pub parameters: Vec<f64>,
}

/// Mean cross-entropy over standardized data.
pub(super) struct Objective {
    x: Vec<Vec<f64>>,
    y: Vec<usize>,
    layout: Layout,
}

impl Objective {
    pub(super) fn new(params: &MlpParams, rows: &[&[f64]], labels: &[Activity]) -> Objective {
        let standardizer = Standardizer::fit(rows);
        let width = rows[0].len();
        Objective {
            x: standardizer.transform_all(rows),
            y: labels.iter().map(|l| l.index()).collect(),
            layout: Layout::new(width, params.hidden_for(width)),
        }
    }

    pub(super) fn loss_and_grad(&self, p: &[f64]) -> (f64, Vec<f64>) {
        let n = self.y.len() as f64;
        let mut grad = vec![0.0; p.len()];
        let mut h = vec![0.0; self.layout.hidden];
        let mut loss = 0.0;
        for (x, &y) in self.x.iter().zip(&self.y) {
            loss += self.layout.accumulate(p, x, y, 1.0 / n, &mut grad, &mut h);
        }
        (loss / n, grad)
    }
}

impl MlpModel {
    pub(super) fn fit(params: &MlpParams, seed: u64, rows: &[&[f64]], labels: &[Activity]) -> MlpModel {
        let standardizer = Standardizer::fit(rows);
        let x = standardizer.transform_all(rows);
        let y: Vec<usize> = labels.iter().map(|l| l.index()).collect();
        let width = rows[0].len();
        let hidden = params.hidden_for(width);
        let layout = Layout::new(width, hidden);

        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut p: Vec<f64> = (0..layout.len()).map(|_| rng.random_range(-0.5..0.5)).collect();
        let mut velocity = vec![0.0; p.len()];
        let mut grad = vec![0.0; p.len()];
        let mut h = vec![0.0; hidden];
        let mut order: Vec<usize> = (0..x.len()).collect();

        for _ in 0..params.epochs {
            order.shuffle(&mut rng);
            for &i in &order {
                grad.iter_mut().for_each(|g| *g = 0.0);
                layout.accumulate(&p, &x[i], y[i], 1.0, &mut grad, &mut h);
                for ((w, v), g) in p.iter_mut().zip(velocity.iter_mut()).zip(&grad) {
                    *v = params.momentum * *v - params.learning_rate * g;
                    *w += *v;
                }
            }
        }
        MlpModel { standardizer, hidden_units: hidden, parameters: p }
    }

    pub fn num_features(&self) -> usize {
        self.standardizer.means.len()
    }

    pub fn logits(&self, x: &[f64]) -> [f64; NUM_ACTIVITIES] {
        let layout = Layout::new(self.num_features(), self.hidden_units);
        let z = self.standardizer.transform(x);
        let mut h = vec![0.0; self.hidden_units];
        layout.hidden_activations(&self.parameters, &z, &mut h);
        layout.logits(&self.parameters, &h)
    }
}
