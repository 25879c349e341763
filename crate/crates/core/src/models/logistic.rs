//! Multinomial (softmax) logistic regression trained by full-batch gradient
//! descent on standardized features.

use serde::{Deserialize, Serialize};

use super::standardize::Standardizer;
use crate::ingest::{Activity, NUM_ACTIVITIES};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticParams {
    pub learning_rate: f64,
    pub iterations: usize,
    /// L2 penalty on non-bias weights: loss += l2/2 · Σ w².
    pub l2: f64,
}

impl Default for LogisticParams {
    fn default() -> Self {
        LogisticParams { learning_rate: 0.1, iterations: 500, l2: 1e-4 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    pub standardizer: Standardizer,
    /// One row per class: feature weights followed by the bias.
    pub weights: Vec<Vec<f64>>,
}

/// Mean cross-entropy plus L2 over standardized data, in a flat
/// class-major parameter layout of `NUM_ACTIVITIES × (width + 1)`.
pub(super) struct Objective {
    x: Vec<f64>,
    y: Vec<usize>,
    width: usize,
    l2: f64,
    standardizer: Standardizer,
}

impl Objective {
    pub(super) fn new(params: &LogisticParams, rows: &[&[f64]], labels: &[Activity]) -> Objective {
        let standardizer = Standardizer::fit(rows);
        let width = rows[0].len();
        let mut x = vec![0.0; rows.len() * width];
        for (chunk, r) in x.chunks_exact_mut(width).zip(rows) {
            standardizer.transform_into(r, chunk);
        }
        Objective {
            x,
            y: labels.iter().map(|l| l.index()).collect(),
            width,
            l2: params.l2,
            standardizer,
        }
    }

    pub(super) fn loss_and_grad(&self, w: &[f64]) -> (f64, Vec<f64>) {
        let stride = self.width + 1;
        let n = self.y.len() as f64;
        let mut grad = vec![0.0; w.len()];
        let mut loss = 0.0;
        let mut probs = [0.0; NUM_ACTIVITIES];
        for (row, &y) in self.x.chunks_exact(self.width).zip(&self.y) {
            for (c, p) in probs.iter_mut().enumerate() {
                let wc = &w[c * stride..(c + 1) * stride];
                *p = dot(&wc[..self.width], row) + wc[self.width];
            }
            let max = probs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let mut total = 0.0;
            for p in &mut probs {
                *p = (*p - max).exp();
                total += *p;
            }
            loss -= (probs[y] / total).ln();
            for (c, p) in probs.iter().enumerate() {
                let delta = (p / total - if c == y { 1.0 } else { 0.0 }) / n;
                let gc = &mut grad[c * stride..(c + 1) * stride];
                for (g, v) in gc[..self.width].iter_mut().zip(row) {
                    *g += delta * v;
                }
                gc[self.width] += delta;
            }
        }
        loss /= n;
        for c in 0..NUM_ACTIVITIES {
            for j in 0..self.width {
                let i = c * stride + j;
                loss += 0.5 * self.l2 * w[i] * w[i];
                grad[i] += self.l2 * w[i];
            }
        }
        (loss, grad)
    }
}

pub(super) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl LogisticModel {
    /// Returns the model and the loss before every step plus the final loss.
    pub(super) fn fit(params: &LogisticParams, rows: &[&[f64]], labels: &[Activity]) -> (LogisticModel, Vec<f64>) {
        let objective = Objective::new(params, rows, labels);
        let stride = objective.width + 1;
        let mut w = vec![0.0; NUM_ACTIVITIES * stride];
        let mut trace = Vec::with_capacity(params.iterations + 1);
        for _ in 0..params.iterations {
            let (loss, grad) = objective.loss_and_grad(&w);
            trace.push(loss);
            for (wi, g) in w.iter_mut().zip(&grad) {
                *wi -= params.learning_rate * g;
            }
        }
        trace.push(objective.loss_and_grad(&w).0);
        let weights = w.chunks_exact(stride).map(|c| c.to_vec()).collect();
        (LogisticModel { standardizer: objective.standardizer, weights }, trace)
    }

    pub fn num_features(&self) -> usize {
        self.standardizer.means.len()
    }

    pub fn logits(&self, x: &[f64]) -> [f64; NUM_ACTIVITIES] {
        let z = self.standardizer.transform(x);
        let width = z.len();
        let mut out = [0.0; NUM_ACTIVITIES];
        for (o, wc) in out.iter_mut().zip(&self.weights) {
            *o = dot(&wc[..width], &z) + wc[width];
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{fit, gradient_check, logistic_loss_trace, ModelKind, ModelSpec};
    use proptest::prelude::*;

    #[test]
    fn separable_two_class_fits_perfectly() {
        // two clusters on a diagonal line
        let data: Vec<[f64; 2]> = (0..40)
            .map(|i| {
                let t = i as f64 / 10.0;
                if i < 20 { [t, -t - 1.0] } else { [t + 2.0, t] }
            })
            .collect();
        let labels: Vec<Activity> = (0..40)
            .map(|i| if i < 20 { Activity::Sitting } else { Activity::Jogging })
            .collect();
        let rows: Vec<&[f64]> = data.iter().map(|r| r.as_slice()).collect();
        let m = fit(&ModelSpec::new(ModelKind::LogisticRegression, 0), &rows, &labels).unwrap();
        let correct = rows.iter().zip(&labels).filter(|(r, l)| m.predict(r).label == **l).count();
        assert_eq!(correct, 40);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let data: Vec<[f64; 3]> = (0..20)
            .map(|i| [(i as f64 * 0.7).sin() * 3.0, i as f64 * 0.1, ((i * i) % 7) as f64])
            .collect();
        let labels: Vec<Activity> = (0..20).map(|i| Activity::from_index(i % 6).unwrap()).collect();
        let rows: Vec<&[f64]> = data.iter().map(|r| r.as_slice()).collect();
        let err = gradient_check(&ModelSpec::new(ModelKind::LogisticRegression, 5), &rows, &labels, 1e-5).unwrap();
        assert!(err < 1e-4, "max relative error {err}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn loss_never_increases(
            raw in proptest::collection::vec((proptest::collection::vec(-10.0f64..10.0, 4), 0usize..6), 2..40)
        ) {
            let rows: Vec<&[f64]> = raw.iter().map(|(r, _)| r.as_slice()).collect();
            let labels: Vec<Activity> = raw.iter().map(|(_, l)| Activity::from_index(*l).unwrap()).collect();
            let params = LogisticParams { iterations: 100, ..LogisticParams::default() };
            let trace = logistic_loss_trace(&params, &rows, &labels).unwrap();
            for pair in trace.windows(2) {
                prop_assert!(pair[1] <= pair[0] + 1e-12, "{} -> {}", pair[0], pair[1]);
            }
        }
    }
}
