//! Stratified k-fold cross-validation with confusion matrices and wall-clock
//! timing.

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::FeatureDataset;
use crate::ingest::{Activity, NUM_ACTIVITIES};
use crate::models::{self, ModelError, ModelKind, ModelSpec};

pub const DEFAULT_FOLDS: usize = 10;

pub type ConfusionMatrix = [[u64; NUM_ACTIVITIES]; NUM_ACTIVITIES];

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("{rows} rows cannot fill {k} folds")]
    TooFewRows { rows: usize, k: usize },
    #[error("k must be at least 2, got {0}")]
    InvalidFolds(usize),
    #[error("truth and prediction lengths differ ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error(transparent)]
    Training(#[from] ModelError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldAssignment {
    pub k: usize,
    pub fold_of_row: Vec<usize>,
}

impl FoldAssignment {
    pub fn test_rows(&self, fold: usize) -> Vec<usize> {
        (0..self.fold_of_row.len()).filter(|&i| self.fold_of_row[i] == fold).collect()
    }

    pub fn train_rows(&self, fold: usize) -> Vec<usize> {
        (0..self.fold_of_row.len()).filter(|&i| self.fold_of_row[i] != fold).collect()
    }
}

/// Shuffles each class's rows with a seeded generator and deals them
/// round-robin. The dealing position carries over from one class to the next
/// so fold sizes stay within one row of each other.
pub fn stratified_kfold(labels: &[Activity], k: usize, seed: u64) -> Result<FoldAssignment, EvalError> {
    if k < 2 {
        return Err(EvalError::InvalidFolds(k));
    }
    if labels.len() < k {
        return Err(EvalError::TooFewRows { rows: labels.len(), k });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut fold_of_row = vec![0; labels.len()];
    let mut next = 0;
    for class in Activity::ALL {
        let mut rows: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        rows.shuffle(&mut rng);
        for r in rows {
            fold_of_row[r] = next;
            next = (next + 1) % k;
        }
    }
    Ok(FoldAssignment { k, fold_of_row })
}

pub fn confusion_matrix(truths: &[Activity], predictions: &[Activity]) -> Result<ConfusionMatrix, EvalError> {
    if truths.len() != predictions.len() {
        return Err(EvalError::LengthMismatch(truths.len(), predictions.len()));
    }
    let mut m = [[0u64; NUM_ACTIVITIES]; NUM_ACTIVITIES];
    for (t, p) in truths.iter().zip(predictions) {
        m[t.index()][p.index()] += 1;
    }
    Ok(m)
}

pub fn trace(m: &ConfusionMatrix) -> u64 {
    (0..NUM_ACTIVITIES).map(|i| m[i][i]).sum()
}

pub fn total(m: &ConfusionMatrix) -> u64 {
    m.iter().flatten().sum()
}

/// Wall-clock timings. These are the only non-deterministic report fields.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub train_time_s: f64,
    pub predict_time_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub model_kind: ModelKind,
    pub folds: usize,
    pub seed: u64,
    /// Fold construction method, recorded for provenance.
    pub cv_method: String,
    pub fold_sizes: Vec<usize>,
    pub per_fold_accuracy: Vec<f64>,
    pub overall_accuracy: f64,
    pub confusion: ConfusionMatrix,
    pub timing: Timing,
}

impl EvalReport {
    pub const CSV_HEADER: &'static str = "model,folds,seed,cv_method,rows,accuracy,train_time_s,predict_time_s";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{}",
            self.model_kind,
            self.folds,
            self.seed,
            self.cv_method,
            total(&self.confusion),
            self.overall_accuracy,
            self.timing.train_time_s,
            self.timing.predict_time_s
        )
    }

    /// Same report with timings zeroed, for determinism comparisons.
    pub fn without_timing(&self) -> EvalReport {
        EvalReport { timing: Timing::default(), ..self.clone() }
    }

    pub fn ml_time_s(&self) -> f64 {
        self.timing.train_time_s + self.timing.predict_time_s
    }
}

struct FoldOutcome {
    confusion: ConfusionMatrix,
    size: usize,
    train_s: f64,
    predict_s: f64,
}

fn run_fold(
    rows: &[&[f64]],
    labels: &[Activity],
    folds: &FoldAssignment,
    fold: usize,
    spec: &ModelSpec,
) -> Result<FoldOutcome, EvalError> {
    let train_idx = folds.train_rows(fold);
    let test_idx = folds.test_rows(fold);
    let train_rows: Vec<&[f64]> = train_idx.iter().map(|&i| rows[i]).collect();
    let train_labels: Vec<Activity> = train_idx.iter().map(|&i| labels[i]).collect();

    let start = Instant::now();
    let model = models::fit(spec, &train_rows, &train_labels)?;
    let train_s = start.elapsed().as_secs_f64();

    let start = Instant::now();
    let predicted: Vec<Activity> = test_idx.iter().map(|&i| model.predict(rows[i]).label).collect();
    let predict_s = start.elapsed().as_secs_f64();

    let truths: Vec<Activity> = test_idx.iter().map(|&i| labels[i]).collect();
    Ok(FoldOutcome {
        confusion: confusion_matrix(&truths, &predicted)?,
        size: test_idx.len(),
        train_s,
        predict_s,
    })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CvOptions {
    /// Evaluate folds on the rayon pool. Results are merged in fold order.
    pub parallel: bool,
}

pub fn cross_validate(data: &FeatureDataset, spec: &ModelSpec, k: usize, seed: u64) -> Result<EvalReport, EvalError> {
    cross_validate_with(data, spec, k, seed, CvOptions::default())
}

pub fn cross_validate_with(
    data: &FeatureDataset,
    spec: &ModelSpec,
    k: usize,
    seed: u64,
    options: CvOptions,
) -> Result<EvalReport, EvalError> {
    let rows = data.feature_rows();
    let labels = data.labels();
    cross_validate_rows(&rows, &labels, spec, k, seed, options)
}

pub fn cross_validate_rows(
    rows: &[&[f64]],
    labels: &[Activity],
    spec: &ModelSpec,
    k: usize,
    seed: u64,
    options: CvOptions,
) -> Result<EvalReport, EvalError> {
    let folds = stratified_kfold(labels, k, seed)?;
    let outcomes: Vec<FoldOutcome> = if options.parallel {
        (0..k)
            .into_par_iter()
            .map(|f| run_fold(rows, labels, &folds, f, spec))
            .collect::<Result<_, _>>()?
    } else {
        (0..k)
            .map(|f| run_fold(rows, labels, &folds, f, spec))
            .collect::<Result<_, _>>()?
    };

    let mut confusion = [[0u64; NUM_ACTIVITIES]; NUM_ACTIVITIES];
    let mut timing = Timing::default();
    let mut per_fold_accuracy = Vec::with_capacity(k);
    let mut fold_sizes = Vec::with_capacity(k);
    for o in &outcomes {
        for (row, fold_row) in confusion.iter_mut().zip(&o.confusion) {
            for (c, f) in row.iter_mut().zip(fold_row) {
                *c += f;
            }
        }
        timing.train_time_s += o.train_s;
        timing.predict_time_s += o.predict_s;
        per_fold_accuracy.push(if o.size == 0 { 0.0 } else { trace(&o.confusion) as f64 / o.size as f64 });
        fold_sizes.push(o.size);
    }
    Ok(EvalReport {
        model_kind: spec.kind(),
        folds: k,
        seed,
        cv_method: "stratified".to_string(),
        fold_sizes,
        per_fold_accuracy,
        overall_accuracy: trace(&confusion) as f64 / total(&confusion) as f64,
        confusion,
        timing,
    })
}
