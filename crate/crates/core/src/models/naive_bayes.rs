//! Gaussian naive Bayes with variance smoothing.

use serde::{Deserialize, Serialize};

use crate::ingest::{Activity, NUM_ACTIVITIES};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NaiveBayesParams {
    /// Added to every variance, relative to the largest feature variance.
    pub var_smoothing: f64,
}

impl Default for NaiveBayesParams {
    fn default() -> Self {
        NaiveBayesParams { var_smoothing: 1e-9 }
    }
}

/// Per-class priors and per-class, per-feature Gaussian parameters.
/// Classes absent from training have prior 0 and are never predicted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NaiveBayesModel {
    pub priors: [f64; NUM_ACTIVITIES],
    pub means: Vec<Vec<f64>>,
    pub variances: Vec<Vec<f64>>,
    /// Floor added to every variance.
    pub epsilon: f64,
}

impl NaiveBayesModel {
    pub(super) fn fit(params: &NaiveBayesParams, rows: &[&[f64]], labels: &[Activity]) -> NaiveBayesModel {
        let width = rows[0].len();
        let n = rows.len() as f64;

        // largest per-feature variance over the whole training set
        let mut max_var = 0.0f64;
        for j in 0..width {
            let mean = rows.iter().map(|r| r[j]).sum::<f64>() / n;
            let var = rows.iter().map(|r| (r[j] - mean).powi(2)).sum::<f64>() / n;
            max_var = max_var.max(var);
        }
        // all-constant data still needs a positive floor
        let epsilon = if max_var > 0.0 {
            params.var_smoothing * max_var
        } else {
            params.var_smoothing
        };

        let mut counts = [0usize; NUM_ACTIVITIES];
        let mut means = vec![vec![0.0; width]; NUM_ACTIVITIES];
        for (r, l) in rows.iter().zip(labels) {
            let c = l.index();
            counts[c] += 1;
            for (m, v) in means[c].iter_mut().zip(r.iter()) {
                *m += v;
            }
        }
        for (c, m) in means.iter_mut().enumerate() {
            if counts[c] > 0 {
                m.iter_mut().for_each(|v| *v /= counts[c] as f64);
            }
        }
        let mut variances = vec![vec![0.0; width]; NUM_ACTIVITIES];
        for (r, l) in rows.iter().zip(labels) {
            let c = l.index();
            for ((s, v), m) in variances[c].iter_mut().zip(r.iter()).zip(&means[c]) {
                *s += (v - m).powi(2);
            }
        }
        for (c, vs) in variances.iter_mut().enumerate() {
            for v in vs.iter_mut() {
                *v = if counts[c] > 0 { *v / counts[c] as f64 } else { 0.0 } + epsilon;
            }
        }
        let mut priors = [0.0; NUM_ACTIVITIES];
        for (p, &c) in priors.iter_mut().zip(&counts) {
            *p = c as f64 / n;
        }
        NaiveBayesModel { priors, means, variances, epsilon }
    }

    pub fn num_features(&self) -> usize {
        self.means[0].len()
    }

    /// ln P(class) + Σ ln N(x_j; μ, σ²) for each class.
    pub fn log_joint(&self, x: &[f64]) -> [f64; NUM_ACTIVITIES] {
        let mut out = [f64::NEG_INFINITY; NUM_ACTIVITIES];
        for (c, o) in out.iter_mut().enumerate() {
            if self.priors[c] == 0.0 {
                continue;
            }
            let mut ll = self.priors[c].ln();
            for ((v, m), var) in x.iter().zip(&self.means[c]).zip(&self.variances[c]) {
                ll -= 0.5 * (std::f64::consts::TAU * var).ln() + (v - m).powi(2) / (2.0 * var);
            }
            *o = ll;
        }
        out
    }
}
