//! From-scratch classifiers over fixed-width feature rows.
//!
//! All four models predict one of the six [`Activity`] classes. Training is
//! deterministic given the [`ModelSpec`] (including its seed) and the data.

mod logistic;
mod mlp;
mod naive_bayes;
mod standardize;
mod tree;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::FeatureDataset;
use crate::ingest::{Activity, NUM_ACTIVITIES};

pub use logistic::{LogisticModel, LogisticParams};
pub use mlp::{MlpModel, MlpParams};
pub use naive_bayes::{NaiveBayesModel, NaiveBayesParams};
pub use standardize::Standardizer;
pub use tree::{DecisionTreeModel, TreeNode, TreeParams};

/// Version written into every saved model document.
pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("rows have inconsistent widths or labels do not match rows")]
    ShapeMismatch,
    #[error("invalid hyperparameter: {0}")]
    InvalidHyperparameter(String),
    #[error("{0} has no analytic gradient")]
    UnsupportedKind(ModelKind),
    #[error("expected {expected} features, got {got}")]
    WrongWidth { expected: usize, got: usize },
    #[error("unsupported model format version {0}")]
    UnsupportedVersion(u32),
    #[error("model json: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModelKind {
    GaussianNB,
    LogisticRegression,
    DecisionTree,
    Mlp,
}

impl ModelKind {
    pub const ALL: [ModelKind; 4] = [
        ModelKind::GaussianNB,
        ModelKind::LogisticRegression,
        ModelKind::DecisionTree,
        ModelKind::Mlp,
    ];

    /// Short name used on the command line and in reports.
    pub fn short_name(self) -> &'static str {
        match self {
            ModelKind::GaussianNB => "gnb",
            ModelKind::LogisticRegression => "logreg",
            ModelKind::DecisionTree => "tree",
            ModelKind::Mlp => "mlp",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short_name())
    }
}

impl FromStr for ModelKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "gnb" | "naivebayes" | "gaussiannb" => Ok(ModelKind::GaussianNB),
            "logreg" | "logistic" | "logisticregression" => Ok(ModelKind::LogisticRegression),
            "tree" | "j48" | "decisiontree" => Ok(ModelKind::DecisionTree),
            "mlp" | "multilayerperceptron" => Ok(ModelKind::Mlp),
            other => Err(format!("unknown model {other:?} (expected gnb, logreg, tree or mlp)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params")]
pub enum Hyperparameters {
    GaussianNB(NaiveBayesParams),
    LogisticRegression(LogisticParams),
    DecisionTree(TreeParams),
    Mlp(MlpParams),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub hyperparameters: Hyperparameters,
    pub seed: u64,
}

impl ModelSpec {
    pub fn new(kind: ModelKind, seed: u64) -> ModelSpec {
        let hyperparameters = match kind {
            ModelKind::GaussianNB => Hyperparameters::GaussianNB(NaiveBayesParams::default()),
            ModelKind::LogisticRegression => {
                Hyperparameters::LogisticRegression(LogisticParams::default())
            }
            ModelKind::DecisionTree => Hyperparameters::DecisionTree(TreeParams::default()),
            ModelKind::Mlp => Hyperparameters::Mlp(MlpParams::default()),
        };
        ModelSpec { hyperparameters, seed }
    }

    pub fn kind(&self) -> ModelKind {
        match self.hyperparameters {
            Hyperparameters::GaussianNB(_) => ModelKind::GaussianNB,
            Hyperparameters::LogisticRegression(_) => ModelKind::LogisticRegression,
            Hyperparameters::DecisionTree(_) => ModelKind::DecisionTree,
            Hyperparameters::Mlp(_) => ModelKind::Mlp,
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |msg: &str| Err(ModelError::InvalidHyperparameter(msg.to_string()));
        let positive = |v: f64| v.is_finite() && v > 0.0;
        match &self.hyperparameters {
            Hyperparameters::GaussianNB(p) => {
                if !positive(p.var_smoothing) {
                    return bad("var_smoothing must be positive");
                }
            }
            Hyperparameters::LogisticRegression(p) => {
                if !positive(p.learning_rate) || p.iterations == 0 || !(p.l2.is_finite() && p.l2 >= 0.0) {
                    return bad("logistic regression needs positive learning rate and iterations, non-negative l2");
                }
            }
            Hyperparameters::DecisionTree(p) => {
                if p.min_leaf == 0 || p.max_depth == Some(0) {
                    return bad("tree min_leaf and max_depth must be at least 1");
                }
            }
            Hyperparameters::Mlp(p) => {
                if p.hidden_units == Some(0)
                    || !positive(p.learning_rate)
                    || !(p.momentum.is_finite() && (0.0..1.0).contains(&p.momentum))
                    || p.epochs == 0
                {
                    return bad("mlp needs hidden_units >= 1, positive learning rate and epochs, momentum in [0, 1)");
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params")]
pub enum TrainedModel {
    GaussianNB(NaiveBayesModel),
    LogisticRegression(LogisticModel),
    DecisionTree(DecisionTreeModel),
    Mlp(MlpModel),
}

impl TrainedModel {
    pub fn kind(&self) -> ModelKind {
        match self {
            TrainedModel::GaussianNB(_) => ModelKind::GaussianNB,
            TrainedModel::LogisticRegression(_) => ModelKind::LogisticRegression,
            TrainedModel::DecisionTree(_) => ModelKind::DecisionTree,
            TrainedModel::Mlp(_) => ModelKind::Mlp,
        }
    }

    pub fn num_features(&self) -> usize {
        match self {
            TrainedModel::GaussianNB(m) => m.num_features(),
            TrainedModel::LogisticRegression(m) => m.num_features(),
            TrainedModel::DecisionTree(m) => m.num_features(),
            TrainedModel::Mlp(m) => m.num_features(),
        }
    }

    pub fn predict(&self, x: &[f64]) -> Prediction {
        assert_eq!(x.len(), self.num_features(), "feature width mismatch");
        match self {
            TrainedModel::GaussianNB(m) => Prediction::from_log_scores(m.log_joint(x)),
            TrainedModel::LogisticRegression(m) => Prediction::from_log_scores(m.logits(x)),
            TrainedModel::DecisionTree(m) => Prediction::from_scores(m.leaf_distribution(x)),
            TrainedModel::Mlp(m) => Prediction::from_log_scores(m.logits(x)),
        }
    }

    pub fn to_json(&self) -> Result<String, ModelError> {
        let doc = ModelDocument { format_version: MODEL_FORMAT_VERSION, model: self.clone() };
        Ok(serde_json::to_string_pretty(&doc)?)
    }

    pub fn from_json(text: &str) -> Result<TrainedModel, ModelError> {
        let doc: ModelDocument = serde_json::from_str(text)?;
        if doc.format_version != MODEL_FORMAT_VERSION {
            return Err(ModelError::UnsupportedVersion(doc.format_version));
        }
        Ok(doc.model)
    }
}

#[derive(Serialize, Deserialize)]
struct ModelDocument {
    format_version: u32,
    model: TrainedModel,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub label: Activity,
    pub class_scores: [f64; NUM_ACTIVITIES],
}

impl Prediction {
    /// Normalizes log-domain scores with log-sum-exp. Classes scored
    /// `-inf` end with probability 0.
    pub fn from_log_scores(log_scores: [f64; NUM_ACTIVITIES]) -> Prediction {
        let max = log_scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut scores = [0.0; NUM_ACTIVITIES];
        if max.is_finite() {
            let mut total = 0.0;
            for (s, l) in scores.iter_mut().zip(log_scores) {
                *s = (l - max).exp();
                total += *s;
            }
            for s in &mut scores {
                *s /= total;
            }
        } else {
            scores = [1.0 / NUM_ACTIVITIES as f64; NUM_ACTIVITIES];
        }
        Prediction::from_scores(scores)
    }

    pub fn from_scores(class_scores: [f64; NUM_ACTIVITIES]) -> Prediction {
        Prediction { label: Activity::from_index(argmax(&class_scores)).expect("class index"), class_scores }
    }
}

/// Index of the largest value; the lowest index wins ties.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

fn check_shape(rows: &[&[f64]], labels: &[Activity]) -> Result<usize, ModelError> {
    if rows.is_empty() {
        return Err(ModelError::EmptyTrainingSet);
    }
    if rows.len() != labels.len() {
        return Err(ModelError::ShapeMismatch);
    }
    let width = rows[0].len();
    if width == 0 || rows.iter().any(|r| r.len() != width) {
        return Err(ModelError::ShapeMismatch);
    }
    Ok(width)
}

/// Trains on raw rows. Rows may have any (uniform) width.
pub fn fit(spec: &ModelSpec, rows: &[&[f64]], labels: &[Activity]) -> Result<TrainedModel, ModelError> {
    spec.validate()?;
    check_shape(rows, labels)?;
    Ok(match &spec.hyperparameters {
        Hyperparameters::GaussianNB(p) => TrainedModel::GaussianNB(NaiveBayesModel::fit(p, rows, labels)),
        Hyperparameters::LogisticRegression(p) => {
            TrainedModel::LogisticRegression(LogisticModel::fit(p, rows, labels).0)
        }
        Hyperparameters::DecisionTree(p) => TrainedModel::DecisionTree(DecisionTreeModel::fit(p, rows, labels)),
        Hyperparameters::Mlp(p) => TrainedModel::Mlp(MlpModel::fit(p, spec.seed, rows, labels)),
    })
}

pub fn train(spec: &ModelSpec, data: &FeatureDataset) -> Result<TrainedModel, ModelError> {
    fit(spec, &data.feature_rows(), &data.labels())
}

pub fn predict(model: &TrainedModel, x: &[f64]) -> Result<Prediction, ModelError> {
    if x.len() != model.num_features() {
        return Err(ModelError::WrongWidth { expected: model.num_features(), got: x.len() });
    }
    Ok(model.predict(x))
}

/// Logistic-regression training loss after each full-batch step, starting
/// with the loss at the zero initialization.
pub fn logistic_loss_trace(
    params: &LogisticParams,
    rows: &[&[f64]],
    labels: &[Activity],
) -> Result<Vec<f64>, ModelError> {
    check_shape(rows, labels)?;
    Ok(LogisticModel::fit(params, rows, labels).1)
}

type LossFn<'a> = Box<dyn Fn(&[f64]) -> (f64, Vec<f64>) + 'a>;

/// Largest relative disagreement between the analytic loss gradient and a
/// central finite difference, at a seeded random parameter point.
pub fn gradient_check(
    spec: &ModelSpec,
    rows: &[&[f64]],
    labels: &[Activity],
    epsilon: f64,
) -> Result<f64, ModelError> {
    spec.validate()?;
    check_shape(rows, labels)?;
    let objective: LossFn = match &spec.hyperparameters {
        Hyperparameters::LogisticRegression(p) => {
            let problem = logistic::Objective::new(p, rows, labels);
            Box::new(move |w| problem.loss_and_grad(w))
        }
        Hyperparameters::Mlp(p) => {
            let problem = mlp::Objective::new(p, rows, labels);
            Box::new(move |w| problem.loss_and_grad(w))
        }
        _ => return Err(ModelError::UnsupportedKind(spec.kind())),
    };
    let dim = match &spec.hyperparameters {
        Hyperparameters::LogisticRegression(_) => NUM_ACTIVITIES * (rows[0].len() + 1),
        Hyperparameters::Mlp(p) => mlp::Layout::new(rows[0].len(), p.hidden_for(rows[0].len())).len(),
        _ => unreachable!(),
    };
    let point = random_point(dim, spec.seed);
    let (_, analytic) = objective(&point);
    let mut worst = 0.0f64;
    let mut probe = point.clone();
    for i in 0..dim {
        probe[i] = point[i] + epsilon;
        let up = objective(&probe).0;
        probe[i] = point[i] - epsilon;
        let down = objective(&probe).0;
        probe[i] = point[i];
        let numeric = (up - down) / (2.0 * epsilon);
        let denom = analytic[i].abs().max(numeric.abs()).max(1e-8);
        worst = worst.max((analytic[i] - numeric).abs() / denom);
    }
    Ok(worst)
}

fn random_point(dim: usize, seed: u64) -> Vec<f64> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    (0..dim).map(|_| rng.random_range(-0.5..0.5)).collect()
}
