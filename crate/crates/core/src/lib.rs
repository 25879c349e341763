//! Hybrid fog/cloud activity-recognition pipeline.
//!
//! Raw tri-axial accelerometer streams are segmented into fixed windows,
//! fused into 43-value feature vectors, classified by four from-scratch
//! models under stratified cross-validation, and the whole pipeline is
//! costed under fog-only, cloud-only and hybrid deployments.

pub mod cli;
pub mod deployment;
pub mod evaluation;
pub mod features;
pub mod ingest;
pub mod models;
pub mod windowing;

pub use deployment::{
    benchmark_pipeline, measure_payload, simulate, transmission_time, BenchmarkConfig, BenchmarkReport, CostReport,
    DeploymentPlan, DeviceProfile, LinkProfile, PlanKind,
};
pub use evaluation::{confusion_matrix, cross_validate, stratified_kfold, EvalReport, FoldAssignment};
pub use features::{featurize, featurize_all, FeatureConfig, FeatureDataset, FeatureVector, FEATURE_COUNT};
pub use ingest::{generate_synthetic, load_raw, parse_line, Activity, IngestReport, RawReading, SyntheticConfig};
pub use models::{gradient_check, predict, train, ModelKind, ModelSpec, Prediction, TrainedModel};
pub use windowing::{segment, trace_stats, TraceStats, Window};
