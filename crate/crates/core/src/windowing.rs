//! Fixed-size, non-overlapping segmentation of per-(user, activity) streams.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::{Activity, RawReading};

/// 200 samples at 20 Hz, i.e. ten-second chunks.
pub const DEFAULT_WINDOW_SIZE: usize = 200;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum WindowError {
    #[error("window has {0} readings, expected at least 2")]
    TooShort(usize),
    #[error("readings in a window must share user and activity")]
    MixedGroup,
    #[error("window timestamps must be non-decreasing")]
    Unordered,
}

/// A run of consecutive readings from a single user performing one activity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Window {
    user_id: u32,
    activity: Activity,
    readings: Vec<RawReading>,
}

impl Window {
    pub fn new(readings: Vec<RawReading>) -> Result<Window, WindowError> {
        if readings.len() < 2 {
            return Err(WindowError::TooShort(readings.len()));
        }
        let first = readings[0];
        if readings
            .iter()
            .any(|r| r.user_id != first.user_id || r.activity != first.activity)
        {
            return Err(WindowError::MixedGroup);
        }
        if readings.windows(2).any(|p| p[1].timestamp < p[0].timestamp) {
            return Err(WindowError::Unordered);
        }
        Ok(Window {
            user_id: first.user_id,
            activity: first.activity,
            readings,
        })
    }

    pub fn user_id(&self) -> u32 {
        self.user_id
    }

    pub fn activity(&self) -> Activity {
        self.activity
    }

    pub fn readings(&self) -> &[RawReading] {
        &self.readings
    }

    pub fn len(&self) -> usize {
        self.readings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.readings.is_empty()
    }

    pub fn axis(&self, axis: usize) -> Vec<f64> {
        self.readings
            .iter()
            .map(|r| match axis {
                0 => r.ax,
                1 => r.ay,
                2 => r.az,
                _ => panic!("axis index {axis} out of range"),
            })
            .collect()
    }

    pub fn timestamps(&self) -> Vec<i64> {
        self.readings.iter().map(|r| r.timestamp).collect()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Segmentation {
    pub windows: Vec<Window>,
    /// Readings discarded as trailing partial chunks.
    pub dropped: usize,
}

/// Groups readings by (user, activity) in order of first appearance, stably
/// sorts each group by timestamp and cuts it into `window_size` chunks.
pub fn segment_with_summary(readings: &[RawReading], window_size: usize) -> Segmentation {
    assert!(window_size >= 2, "window_size must be at least 2");

    let mut order: Vec<(u32, Activity)> = Vec::new();
    let mut groups: HashMap<(u32, Activity), Vec<RawReading>> = HashMap::new();
    for r in readings {
        let key = (r.user_id, r.activity);
        groups
            .entry(key)
            .or_insert_with(|| {
                order.push(key);
                Vec::new()
            })
            .push(*r);
    }

    let mut out = Segmentation::default();
    for key in order {
        let mut group = groups.remove(&key).expect("group recorded on first sight");
        group.sort_by_key(|r| r.timestamp);
        let full = group.len() / window_size;
        out.dropped += group.len() - full * window_size;
        out.windows.extend(group.chunks_exact(window_size).map(|chunk| Window {
            user_id: key.0,
            activity: key.1,
            readings: chunk.to_vec(),
        }));
    }
    out
}

pub fn segment(readings: &[RawReading], window_size: usize) -> Vec<Window> {
    segment_with_summary(readings, window_size).windows
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceStats {
    pub count: usize,
    pub mean_per_user: f64,
    /// Population standard deviation of the per-user window counts.
    pub std_per_user: f64,
}

pub fn trace_stats(windows: &[Window]) -> TraceStats {
    let mut per_user: HashMap<u32, usize> = HashMap::new();
    for w in windows {
        *per_user.entry(w.user_id).or_default() += 1;
    }
    if per_user.is_empty() {
        return TraceStats { count: 0, mean_per_user: 0.0, std_per_user: 0.0 };
    }
    let n = per_user.len() as f64;
    let mean = windows.len() as f64 / n;
    let var = per_user
        .values()
        .map(|&c| (c as f64 - mean).powi(2))
        .sum::<f64>()
        / n;
    TraceStats {
        count: windows.len(),
        mean_per_user: mean,
        std_per_user: var.sqrt(),
    }
}
