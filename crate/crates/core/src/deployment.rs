//! Cost model for fog-only, cloud-only and hybrid deployments.
//!
//! Host timings are measured once on the benchmark machine and scaled by a
//! per-device speed factor; transmission is a pure bandwidth model over the
//! byte length of each payload's canonical text form.

use std::io::{self, Write};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::evaluation::{cross_validate_with, CvOptions, EvalError, EvalReport};
use crate::features::{featurize_all, FeatureConfig, FeatureDataset};
use crate::ingest::RawReading;
use crate::models::{ModelKind, ModelSpec};
use crate::windowing::segment;

pub const DEFAULT_UPLINK_BPS: f64 = 1_000_000.0;
pub const DEFAULT_FOG_SPEED_FACTOR: f64 = 10.0;
pub const DEFAULT_CLOUD_SPEED_FACTOR: f64 = 1.0;

/// Data with a canonical on-the-wire text form.
pub trait CanonicalText {
    fn write_canonical<W: Write + ?Sized>(&self, w: &mut W) -> io::Result<()>;
}

struct ByteCounter(u64);

impl Write for ByteCounter {
    fn write(&mut self, buf: &[u8]) -> io::Result<usize> {
        self.0 += buf.len() as u64;
        Ok(buf.len())
    }

    fn flush(&mut self) -> io::Result<()> {
        Ok(())
    }
}

/// Exact byte length of the canonical serialization.
pub fn measure_payload<T: CanonicalText + ?Sized>(data: &T) -> u64 {
    let mut counter = ByteCounter(0);
    data.write_canonical(&mut counter).expect("counting writer cannot fail");
    counter.0
}

#[derive(Debug, Error, PartialEq)]
pub enum DeploymentError {
    #[error("speed factor must be finite and positive, got {0}")]
    InvalidSpeedFactor(f64),
    #[error("uplink must be finite and positive, got {0} bps")]
    InvalidUplink(f64),
    #[error("overhead multiplier must be finite and >= 1, got {0}")]
    InvalidOverhead(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviceProfile {
    pub name: String,
    /// Multiplier on host execution time; 1.0 is the benchmark host.
    pub speed_factor: f64,
}

impl DeviceProfile {
    pub fn new(name: impl Into<String>, speed_factor: f64) -> Result<Self, DeploymentError> {
        if !(speed_factor.is_finite() && speed_factor > 0.0) {
            return Err(DeploymentError::InvalidSpeedFactor(speed_factor));
        }
        Ok(DeviceProfile { name: name.into(), speed_factor })
    }

    pub fn fog() -> Self {
        DeviceProfile { name: "fog".into(), speed_factor: DEFAULT_FOG_SPEED_FACTOR }
    }

    pub fn cloud() -> Self {
        DeviceProfile { name: "cloud".into(), speed_factor: DEFAULT_CLOUD_SPEED_FACTOR }
    }

    fn scale(&self, host_s: f64) -> f64 {
        host_s * self.speed_factor
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkProfile {
    pub uplink_bps: f64,
    /// Protocol overhead multiplier on transmitted bits.
    pub overhead: f64,
}

impl Default for LinkProfile {
    fn default() -> Self {
        LinkProfile { uplink_bps: DEFAULT_UPLINK_BPS, overhead: 1.0 }
    }
}

impl LinkProfile {
    pub fn new(uplink_bps: f64, overhead: f64) -> Result<Self, DeploymentError> {
        if !(uplink_bps.is_finite() && uplink_bps > 0.0) {
            return Err(DeploymentError::InvalidUplink(uplink_bps));
        }
        if !(overhead.is_finite() && overhead >= 1.0) {
            return Err(DeploymentError::InvalidOverhead(overhead));
        }
        Ok(LinkProfile { uplink_bps, overhead })
    }
}

pub fn transmission_time(bytes: u64, link: &LinkProfile) -> f64 {
    bytes as f64 * 8.0 * link.overhead / link.uplink_bps
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PlanKind {
    FogOnly,
    CloudOnly,
    Hybrid,
}

impl PlanKind {
    pub const ALL: [PlanKind; 3] = [PlanKind::FogOnly, PlanKind::CloudOnly, PlanKind::Hybrid];

    pub fn as_str(self) -> &'static str {
        match self {
            PlanKind::FogOnly => "fog",
            PlanKind::CloudOnly => "cloud",
            PlanKind::Hybrid => "hybrid",
        }
    }
}

impl std::fmt::Display for PlanKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeploymentPlan {
    pub kind: PlanKind,
    pub fog: DeviceProfile,
    pub cloud: DeviceProfile,
    pub link: LinkProfile,
    /// Fog-only plans upload the feature table for storage.
    pub fog_archive: bool,
}

impl DeploymentPlan {
    /// Plan with the default profiles: fog 10x slower than the host, cloud
    /// at host speed, 1 Mbps uplink.
    pub fn standard(kind: PlanKind) -> Self {
        DeploymentPlan {
            kind,
            fog: DeviceProfile::fog(),
            cloud: DeviceProfile::cloud(),
            link: LinkProfile::default(),
            fog_archive: false,
        }
    }

    pub fn all_standard() -> Vec<DeploymentPlan> {
        PlanKind::ALL.iter().map(|&k| Self::standard(k)).collect()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct HostTimings {
    pub t_transform_host: f64,
    pub t_ml_host: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Payloads {
    pub raw_bytes: u64,
    pub feature_bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostReport {
    pub plan: PlanKind,
    pub bytes_tx: u64,
    pub t_transform_s: f64,
    pub t_tx_s: f64,
    pub t_ml_s: f64,
    pub t_total_s: f64,
}

pub fn simulate(plan: &DeploymentPlan, timings: &HostTimings, payloads: &Payloads) -> CostReport {
    let (transform_on, ml_on, bytes_tx) = match plan.kind {
        PlanKind::FogOnly => (
            &plan.fog,
            &plan.fog,
            if plan.fog_archive { payloads.feature_bytes } else { 0 },
        ),
        PlanKind::CloudOnly => (&plan.cloud, &plan.cloud, payloads.raw_bytes),
        PlanKind::Hybrid => (&plan.fog, &plan.cloud, payloads.feature_bytes),
    };
    let t_transform_s = transform_on.scale(timings.t_transform_host);
    let t_ml_s = ml_on.scale(timings.t_ml_host);
    let t_tx_s = transmission_time(bytes_tx, &plan.link);
    CostReport {
        plan: plan.kind,
        bytes_tx,
        t_transform_s,
        t_tx_s,
        t_ml_s,
        t_total_s: t_transform_s + t_tx_s + t_ml_s,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkConfig {
    pub window_size: usize,
    pub features: FeatureConfig,
    pub k_folds: usize,
    pub seed: u64,
    pub models: Vec<ModelSpec>,
    pub plans: Vec<DeploymentPlan>,
    pub parallel_cv: bool,
}

impl BenchmarkConfig {
    pub fn with_defaults(seed: u64) -> Self {
        BenchmarkConfig {
            window_size: crate::windowing::DEFAULT_WINDOW_SIZE,
            features: FeatureConfig::default(),
            k_folds: crate::evaluation::DEFAULT_FOLDS,
            seed,
            models: ModelKind::ALL.iter().map(|&k| ModelSpec::new(k, seed)).collect(),
            plans: DeploymentPlan::all_standard(),
            parallel_cv: false,
        }
    }
}

/// One (plan, model) cell of the cost table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostRow {
    pub plan: PlanKind,
    pub model: ModelKind,
    pub accuracy: f64,
    pub bytes_tx: u64,
    pub t_transform_s: f64,
    pub t_tx_s: f64,
    pub t_ml_s: f64,
    pub t_total_s: f64,
}

impl CostRow {
    pub const CSV_HEADER: &'static str = "plan,model,accuracy,bytes_tx,t_transform_s,t_tx_s,t_ml_s,t_total_s";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{}",
            self.plan, self.model, self.accuracy, self.bytes_tx, self.t_transform_s, self.t_tx_s, self.t_ml_s, self.t_total_s
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub readings: usize,
    pub windows: usize,
    pub payloads: Payloads,
    /// Wall-clock segmentation plus featurization on the host.
    pub t_transform_host_s: f64,
    pub evals: Vec<EvalReport>,
    pub costs: Vec<CostRow>,
    /// Per-plan totals with every model's analytics time summed.
    pub architectures: Vec<CostReport>,
    /// Only timing fields differ between runs with identical inputs.
    pub timings_deterministic: bool,
}

impl BenchmarkReport {
    pub fn write_csv<W: Write + ?Sized>(&self, w: &mut W) -> io::Result<()> {
        writeln!(w, "{}", CostRow::CSV_HEADER)?;
        for row in &self.costs {
            writeln!(w, "{}", row.csv_row())?;
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum BenchmarkError {
    #[error("no complete windows in input")]
    NoWindows,
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// Segments, featurizes and cross-validates on this host, then costs every
/// (plan, model) pair and every plan as a whole.
pub fn benchmark_pipeline(readings: &[RawReading], config: &BenchmarkConfig) -> Result<BenchmarkReport, BenchmarkError> {
    let start = Instant::now();
    let windows = segment(readings, config.window_size);
    let dataset: FeatureDataset = featurize_all(&windows, &config.features);
    let t_transform_host_s = start.elapsed().as_secs_f64();
    if dataset.is_empty() {
        return Err(BenchmarkError::NoWindows);
    }

    let payloads = Payloads {
        raw_bytes: measure_payload(readings),
        feature_bytes: measure_payload(&dataset),
    };

    let options = CvOptions { parallel: config.parallel_cv };
    let evals = config
        .models
        .iter()
        .map(|spec| cross_validate_with(&dataset, spec, config.k_folds, config.seed, options))
        .collect::<Result<Vec<_>, _>>()?;

    let mut costs = Vec::with_capacity(config.plans.len() * evals.len());
    for plan in &config.plans {
        for eval in &evals {
            let timings = HostTimings { t_transform_host: t_transform_host_s, t_ml_host: eval.ml_time_s() };
            let c = simulate(plan, &timings, &payloads);
            costs.push(CostRow {
                plan: plan.kind,
                model: eval.model_kind,
                accuracy: eval.overall_accuracy,
                bytes_tx: c.bytes_tx,
                t_transform_s: c.t_transform_s,
                t_tx_s: c.t_tx_s,
                t_ml_s: c.t_ml_s,
                t_total_s: c.t_total_s,
            });
        }
    }
    let all_ml = HostTimings {
        t_transform_host: t_transform_host_s,
        t_ml_host: evals.iter().map(EvalReport::ml_time_s).sum(),
    };
    let architectures = config.plans.iter().map(|p| simulate(p, &all_ml, &payloads)).collect();

    Ok(BenchmarkReport {
        readings: readings.len(),
        windows: windows.len(),
        payloads,
        t_transform_host_s,
        evals,
        costs,
        architectures,
        timings_deterministic: false,
    })
}
