use serde::{Deserialize, Serialize};

/// Per-feature z-score statistics fitted on training rows only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub means: Vec<f64>,
    /// Population standard deviations; constant features store 1.
    pub scales: Vec<f64>,
}

impl Standardizer {
    pub fn fit(rows: &[&[f64]]) -> Standardizer {
        let width = rows[0].len();
        let n = rows.len() as f64;
        let mut means = vec![0.0; width];
        for r in rows {
            for (m, v) in means.iter_mut().zip(r.iter()) {
                *m += v;
            }
        }
        means.iter_mut().for_each(|m| *m /= n);
        let mut scales = vec![0.0; width];
        for r in rows {
            for ((s, v), m) in scales.iter_mut().zip(r.iter()).zip(&means) {
                *s += (v - m).powi(2);
            }
        }
        for s in &mut scales {
            *s = (*s / n).sqrt();
            if s.is_nan() || *s <= 1e-12 {
                *s = 1.0;
            }
        }
        Standardizer { means, scales }
    }

    pub fn transform_into(&self, x: &[f64], out: &mut [f64]) {
        for (((o, v), m), s) in out.iter_mut().zip(x).zip(&self.means).zip(&self.scales) {
            *o = (v - m) / s;
        }
    }

    pub fn transform(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; x.len()];
        self.transform_into(x, &mut out);
        out
    }

    pub fn transform_all(&self, rows: &[&[f64]]) -> Vec<Vec<f64>> {
        rows.iter().map(|r| self.transform(r)).collect()
    }
}
