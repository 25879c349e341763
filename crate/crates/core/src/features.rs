//! Window-level feature fusion: each window becomes a 43-value vector of
//! per-axis statistics, the mean resultant, per-axis peak spacing and a
//! 10-bin per-axis histogram.

use std::io::{self, BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::deployment::CanonicalText;
use crate::ingest::Activity;
use crate::windowing::Window;

pub const FEATURE_COUNT: usize = 43;
pub const NUM_BINS: usize = 10;
pub const DEFAULT_PEAK_THRESHOLD: f64 = 0.1;

const AXES: [&str; 3] = ["X", "Y", "Z"];

/// Canonical column names, in vector order.
pub fn feature_names() -> Vec<String> {
    let mut names = Vec::with_capacity(FEATURE_COUNT);
    for stat in ["AVG", "STD", "AAD"] {
        names.extend(AXES.iter().map(|a| format!("{a}{stat}")));
    }
    names.push("RESULTANT".to_string());
    names.extend(AXES.iter().map(|a| format!("{a}PEAK")));
    for a in AXES {
        names.extend((0..NUM_BINS).map(|k| format!("{a}BIN{k}")));
    }
    names
}

// slot offsets
pub const AVG: usize = 0;
pub const STD: usize = 3;
pub const AAD: usize = 6;
pub const RESULTANT: usize = 9;
pub const PEAK: usize = 10;
pub const BINS: usize = 13;

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("feature vector must have {FEATURE_COUNT} values, got {0}")]
    WrongLength(usize),
    #[error("feature value at slot {0} is not finite")]
    NonFinite(usize),
    #[error("malformed feature csv at line {line}: {msg}")]
    Csv { line: usize, msg: String },
    #[error("i/o failure: {0}")]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    values: Vec<f64>,
    pub label: Activity,
    pub user_id: u32,
}

impl FeatureVector {
    pub fn new(values: Vec<f64>, label: Activity, user_id: u32) -> Result<Self, FeatureError> {
        if values.len() != FEATURE_COUNT {
            return Err(FeatureError::WrongLength(values.len()));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(FeatureError::NonFinite(i));
        }
        Ok(FeatureVector { values, label, user_id })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn bins(&self, axis: usize) -> &[f64] {
        let start = BINS + axis * NUM_BINS;
        &self.values[start..start + NUM_BINS]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureDataset {
    pub rows: Vec<FeatureVector>,
    pub feature_names: Vec<String>,
}

impl Default for FeatureDataset {
    fn default() -> Self {
        Self::new(Vec::new())
    }
}

impl FeatureDataset {
    pub fn new(rows: Vec<FeatureVector>) -> Self {
        FeatureDataset { rows, feature_names: feature_names() }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn labels(&self) -> Vec<Activity> {
        self.rows.iter().map(|r| r.label).collect()
    }

    pub fn feature_rows(&self) -> Vec<&[f64]> {
        self.rows.iter().map(|r| r.values()).collect()
    }

    /// Writes the feature CSV: header, then one row per window with values
    /// printed to 6 significant digits.
    pub fn write_csv<W: Write + ?Sized>(&self, w: &mut W) -> io::Result<()> {
        let mut header = self.feature_names.join(",");
        header.push_str(",user_id,label\n");
        w.write_all(header.as_bytes())?;
        let mut line = String::new();
        for row in &self.rows {
            line.clear();
            for v in row.values() {
                line.push_str(&format_sig(*v, 6));
                line.push(',');
            }
            line.push_str(&row.user_id.to_string());
            line.push(',');
            line.push_str(row.label.as_str());
            line.push('\n');
            w.write_all(line.as_bytes())?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(reader: R) -> Result<FeatureDataset, FeatureError> {
        let mut lines = reader.lines();
        let header = match lines.next() {
            Some(h) => h?,
            None => return Err(FeatureError::Csv { line: 1, msg: "missing header".into() }),
        };
        let expected = {
            let mut names = feature_names();
            names.push("user_id".into());
            names.push("label".into());
            names
        };
        let got: Vec<&str> = header.trim().split(',').collect();
        if got != expected {
            return Err(FeatureError::Csv { line: 1, msg: "unexpected header".into() });
        }
        let mut rows = Vec::new();
        for (i, line) in lines.enumerate() {
            let line = line?;
            let lineno = i + 2;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: String| FeatureError::Csv { line: lineno, msg };
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != FEATURE_COUNT + 2 {
                return Err(err(format!("expected {} fields, got {}", FEATURE_COUNT + 2, fields.len())));
            }
            let values = fields[..FEATURE_COUNT]
                .iter()
                .map(|f| f.parse::<f64>().map_err(|_| err(format!("bad number {f:?}"))))
                .collect::<Result<Vec<_>, _>>()?;
            let user_id = fields[FEATURE_COUNT]
                .parse::<u32>()
                .map_err(|_| err(format!("bad user id {:?}", fields[FEATURE_COUNT])))?;
            let label = fields[FEATURE_COUNT + 1]
                .parse::<Activity>()
                .map_err(|e| err(e.to_string()))?;
            rows.push(FeatureVector::new(values, label, user_id).map_err(|e| err(e.to_string()))?);
        }
        Ok(FeatureDataset::new(rows))
    }
}

impl CanonicalText for FeatureDataset {
    fn write_canonical<W: Write + ?Sized>(&self, w: &mut W) -> io::Result<()> {
        self.write_csv(w)
    }
}

/// Formats like C's `%.{digits}g`: shortest of fixed or exponent notation,
/// trailing zeros trimmed.
pub fn format_sig(v: f64, digits: usize) -> String {
    assert!(digits >= 1);
    if v == 0.0 {
        return "0".to_string();
    }
    if !v.is_finite() {
        return v.to_string();
    }
    let sci = format!("{:.*e}", digits - 1, v);
    let (mantissa, exp) = sci.split_once('e').expect("exponent marker");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= digits as i32 {
        let m = trim_zeros(mantissa);
        format!("{m}e{exp}")
    } else {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{v:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub fn axis_mean(samples: &[f64]) -> f64 {
    assert!(!samples.is_empty(), "mean of empty window");
    samples.iter().sum::<f64>() / samples.len() as f64
}

/// Population (divisor N) standard deviation.
pub fn axis_std(samples: &[f64]) -> f64 {
    let mean = axis_mean(samples);
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / samples.len() as f64;
    var.sqrt()
}

pub fn axis_avg_abs_diff(samples: &[f64]) -> f64 {
    let mean = axis_mean(samples);
    samples.iter().map(|x| (x - mean).abs()).sum::<f64>() / samples.len() as f64
}

pub fn avg_resultant(window: &Window) -> f64 {
    let readings = window.readings();
    readings
        .iter()
        .map(|r| (r.ax * r.ax + r.ay * r.ay + r.az * r.az).sqrt())
        .sum::<f64>()
        / readings.len() as f64
}

/// Mean spacing, in milliseconds, between the window's highest peaks.
///
/// Peaks are strict interior local maxima lying within the top
/// `threshold` fraction of the window's range. Returns 0 with fewer than two
/// such peaks.
pub fn time_between_peaks(samples: &[f64], timestamps: &[i64], threshold: f64) -> f64 {
    assert_eq!(samples.len(), timestamps.len(), "samples and timestamps differ in length");
    if samples.len() < 3 {
        return 0.0;
    }
    let (min, max) = min_max(samples);
    let cutoff = max - threshold * (max - min);
    let mut first: Option<i64> = None;
    let mut last = 0i64;
    let mut count = 0usize;
    for i in 1..samples.len() - 1 {
        let s = samples[i];
        if s > samples[i - 1] && s > samples[i + 1] && s >= cutoff {
            first.get_or_insert(timestamps[i]);
            last = timestamps[i];
            count += 1;
        }
    }
    match first {
        // mean of successive gaps telescopes to (last - first) / (count - 1)
        Some(first) if count >= 2 => (last - first) as f64 / (count - 1) as f64 / 1e6,
        _ => 0.0,
    }
}

fn min_max(samples: &[f64]) -> (f64, f64) {
    samples
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)))
}

/// Fraction of samples in each of 10 equal-width bins spanning the window's
/// own [min, max]. Samples on an interior edge go to the upper bin; the
/// maximum goes to the last bin.
pub fn binned_distribution(samples: &[f64]) -> [f64; NUM_BINS] {
    assert!(!samples.is_empty(), "histogram of empty window");
    let mut out = [0.0; NUM_BINS];
    let (min, max) = min_max(samples);
    if min == max {
        out[0] = 1.0;
        return out;
    }
    let span = max - min;
    let edge = |k: usize| min + span * k as f64 / NUM_BINS as f64;
    let mut counts = [0usize; NUM_BINS];
    for &x in samples {
        let mut k = (((x - min) / span) * NUM_BINS as f64).floor().clamp(0.0, 9.0) as usize;
        // settle floating-point disagreements against the explicit edges
        while k < NUM_BINS - 1 && x >= edge(k + 1) {
            k += 1;
        }
        while k > 0 && x < edge(k) {
            k -= 1;
        }
        counts[k] += 1;
    }
    let n = samples.len() as f64;
    for (o, c) in out.iter_mut().zip(counts) {
        *o = c as f64 / n;
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureConfig {
    pub peak_threshold: f64,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig { peak_threshold: DEFAULT_PEAK_THRESHOLD }
    }
}

pub fn featurize(window: &Window, config: &FeatureConfig) -> FeatureVector {
    let axes: [Vec<f64>; 3] = [window.axis(0), window.axis(1), window.axis(2)];
    let timestamps = window.timestamps();
    let mut values = Vec::with_capacity(FEATURE_COUNT);
    values.extend(axes.iter().map(|a| axis_mean(a)));
    values.extend(axes.iter().map(|a| axis_std(a)));
    values.extend(axes.iter().map(|a| axis_avg_abs_diff(a)));
    values.push(avg_resultant(window));
    values.extend(
        axes.iter()
            .map(|a| time_between_peaks(a, &timestamps, config.peak_threshold)),
    );
    for a in &axes {
        values.extend(binned_distribution(a));
    }
    FeatureVector::new(values, window.activity(), window.user_id())
        .expect("finite window yields finite features")
}

pub fn featurize_all(windows: &[Window], config: &FeatureConfig) -> FeatureDataset {
    FeatureDataset::new(windows.iter().map(|w| featurize(w, config)).collect())
}
