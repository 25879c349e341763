//! Raw accelerometer ingestion.
//!
//! Reads the WISDM v1.1 record grammar (`user,activity,timestamp,x,y,z;`)
//! and produces validated [`RawReading`]s. Corrupt records are skipped and
//! counted in an [`IngestReport`] instead of aborting the load. A seeded
//! synthetic generator stands in for the real dataset in tests and quick runs.

use std::fmt;
use std::io::{self, BufRead, Write};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::deployment::CanonicalText;

pub const NUM_ACTIVITIES: usize = 6;

/// The six labelled activities, in canonical class-index order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Activity {
    Walking,
    Jogging,
    Upstairs,
    Downstairs,
    Sitting,
    Standing,
}

impl Activity {
    pub const ALL: [Activity; NUM_ACTIVITIES] = [
        Activity::Walking,
        Activity::Jogging,
        Activity::Upstairs,
        Activity::Downstairs,
        Activity::Sitting,
        Activity::Standing,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Option<Activity> {
        Self::ALL.get(index).copied()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Activity::Walking => "Walking",
            Activity::Jogging => "Jogging",
            Activity::Upstairs => "Upstairs",
            Activity::Downstairs => "Downstairs",
            Activity::Sitting => "Sitting",
            Activity::Standing => "Standing",
        }
    }
}

impl fmt::Display for Activity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Activity {
    type Err = IngestError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Activity::ALL
            .iter()
            .copied()
            .find(|a| a.as_str() == s)
            .ok_or_else(|| IngestError::MalformedRecord(format!("unknown activity label {s:?}")))
    }
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("malformed record: {0}")]
    MalformedRecord(String),
    #[error("i/o failure: {0}")]
    Io(#[from] io::Error),
}

/// One tri-axial accelerometer sample (m/s²) with its nanosecond timestamp.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RawReading {
    pub user_id: u32,
    pub activity: Activity,
    pub timestamp: i64,
    pub ax: f64,
    pub ay: f64,
    pub az: f64,
}

impl RawReading {
    pub fn is_valid(&self) -> bool {
        self.user_id > 0
            && self.timestamp >= 0
            && self.ax.is_finite()
            && self.ay.is_finite()
            && self.az.is_finite()
    }

    /// Writes the reading in record grammar, terminated by `;\n`.
    ///
    /// Floats use the shortest representation that parses back to the same
    /// value, so the serialization is lossless.
    pub fn write_record<W: Write + ?Sized>(&self, w: &mut W) -> io::Result<()> {
        writeln!(
            w,
            "{},{},{},{},{},{};",
            self.user_id, self.activity, self.timestamp, self.ax, self.ay, self.az
        )
    }
}

impl fmt::Display for RawReading {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{},{},{},{},{},{};",
            self.user_id, self.activity, self.timestamp, self.ax, self.ay, self.az
        )
    }
}

impl CanonicalText for [RawReading] {
    fn write_canonical<W: Write + ?Sized>(&self, w: &mut W) -> io::Result<()> {
        for r in self {
            r.write_record(w)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestReport {
    pub accepted: usize,
    pub rejected: usize,
    pub rejected_line_numbers: Vec<usize>,
}

fn malformed(msg: impl Into<String>) -> IngestError {
    IngestError::MalformedRecord(msg.into())
}

fn parse_finite(field: &str, name: &str) -> Result<f64, IngestError> {
    let v: f64 = field
        .trim()
        .parse()
        .map_err(|_| malformed(format!("unparseable {name} {field:?}")))?;
    if !v.is_finite() {
        return Err(malformed(format!("non-finite {name} {field:?}")));
    }
    Ok(v)
}

/// Parses a single record. Surrounding whitespace and trailing semicolons are
/// ignored; anything else that deviates from the grammar is an error.
pub fn parse_line(line: &str) -> Result<RawReading, IngestError> {
    let record = line.trim().trim_end_matches(';').trim();
    if record.is_empty() {
        return Err(malformed("empty record"));
    }
    let fields: Vec<&str> = record.split(',').collect();
    if fields.len() != 6 {
        return Err(malformed(format!("expected 6 fields, found {}", fields.len())));
    }
    let user_id: u32 = fields[0]
        .trim()
        .parse()
        .map_err(|_| malformed(format!("unparseable user id {:?}", fields[0])))?;
    if user_id == 0 {
        return Err(malformed("user id must be positive"));
    }
    let activity: Activity = fields[1].trim().parse()?;
    let timestamp: i64 = fields[2]
        .trim()
        .parse()
        .map_err(|_| malformed(format!("unparseable timestamp {:?}", fields[2])))?;
    if timestamp < 0 {
        return Err(malformed(format!("negative timestamp {timestamp}")));
    }
    Ok(RawReading {
        user_id,
        activity,
        timestamp,
        ax: parse_finite(fields[3], "x")?,
        ay: parse_finite(fields[4], "y")?,
        az: parse_finite(fields[5], "z")?,
    })
}

/// Streams records from `source`.
///
/// A physical line may hold several `;`-separated records. Counts in the
/// report are per record; `rejected_line_numbers` holds the 1-based physical
/// line of every rejected record.
pub fn load_raw<R: BufRead>(source: R) -> Result<(Vec<RawReading>, IngestReport), IngestError> {
    let mut readings = Vec::new();
    let mut report = IngestReport::default();
    for (idx, line) in source.split(b'\n').enumerate() {
        let line = line?;
        let text = String::from_utf8_lossy(&line);
        for record in text.split(';') {
            if record.trim().is_empty() {
                continue;
            }
            match parse_line(record) {
                Ok(r) => {
                    readings.push(r);
                    report.accepted += 1;
                }
                Err(_) => {
                    report.rejected += 1;
                    report.rejected_line_numbers.push(idx + 1);
                }
            }
        }
    }
    Ok((readings, report))
}

/// Parameters of the synthetic dataset generator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticConfig {
    pub n_users: u32,
    pub windows_per_activity: usize,
    pub sample_rate_hz: f64,
    pub seed: u64,
    /// Samples per window; the generator emits exactly this many per window.
    pub window_size: usize,
}

impl SyntheticConfig {
    pub fn new(n_users: u32, windows_per_activity: usize, sample_rate_hz: f64, seed: u64) -> Self {
        SyntheticConfig {
            n_users,
            windows_per_activity,
            sample_rate_hz,
            seed,
            window_size: crate::windowing::DEFAULT_WINDOW_SIZE,
        }
    }
}

/// Waveform of one activity: per-axis sinusoid amplitude, a shared frequency,
/// a constant offset vector and a noise level.
struct Waveform {
    amplitude: [f64; 3],
    freq_hz: f64,
    offset: [f64; 3],
    noise: f64,
}

const GRAVITY: f64 = 9.81;

fn waveform(activity: Activity) -> Waveform {
    match activity {
        Activity::Walking => Waveform {
            amplitude: [2.0, 4.0, 1.5],
            freq_hz: 1.8,
            offset: [0.0, 8.5, 0.5],
            noise: 0.4,
        },
        Activity::Jogging => Waveform {
            amplitude: [5.0, 9.0, 4.0],
            freq_hz: 2.7,
            offset: [0.0, 7.0, 0.0],
            noise: 0.8,
        },
        Activity::Upstairs => Waveform {
            amplitude: [1.5, 2.5, 2.0],
            freq_hz: 1.2,
            offset: [0.5, 9.0, 1.5],
            noise: 0.4,
        },
        Activity::Downstairs => Waveform {
            amplitude: [2.5, 5.5, 1.0],
            freq_hz: 1.5,
            offset: [0.0, 8.8, -1.0],
            noise: 0.5,
        },
        Activity::Sitting => Waveform {
            amplitude: [0.05, 0.05, 0.05],
            freq_hz: 0.3,
            offset: [1.0, 2.0, GRAVITY],
            noise: 0.08,
        },
        Activity::Standing => Waveform {
            amplitude: [0.05, 0.05, 0.05],
            freq_hz: 0.3,
            offset: [0.5, GRAVITY, 1.5],
            noise: 0.08,
        },
    }
}

fn quantize(v: f64) -> f64 {
    (v * 1e6).round() / 1e6
}

/// Deterministic synthetic dataset: per user, per activity, a contiguous run
/// of `windows_per_activity * window_size` samples.
///
/// Each activity has its own sinusoid (random phase per window) plus seeded
/// Gaussian noise; static activities carry gravity on a single axis. Values are
/// quantized to 1e-6 so the text form round-trips exactly.
pub fn generate_synthetic(config: &SyntheticConfig) -> Vec<RawReading> {
    assert!(config.n_users >= 1, "n_users must be at least 1");
    assert!(config.windows_per_activity >= 1, "windows_per_activity must be at least 1");
    assert!(
        config.sample_rate_hz.is_finite() && config.sample_rate_hz > 0.0,
        "sample_rate_hz must be positive"
    );
    assert!(config.window_size >= 1, "window_size must be at least 1");

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let unit = Normal::new(0.0, 1.0).expect("unit normal");
    let step_ns = (1e9 / config.sample_rate_hz).round() as i64;
    let per_group = config.windows_per_activity * config.window_size;
    let mut out = Vec::with_capacity(config.n_users as usize * NUM_ACTIVITIES * per_group);

    for user in 1..=config.n_users {
        // mild per-user gait variation
        let gain: f64 = rng.random_range(0.9..1.1);
        for (a_idx, &activity) in Activity::ALL.iter().enumerate() {
            let w = waveform(activity);
            let mut t = (user as i64 * NUM_ACTIVITIES as i64 + a_idx as i64) * 1_000_000_000_000;
            for _ in 0..config.windows_per_activity {
                let phase: [f64; 3] = [
                    rng.random_range(0.0..std::f64::consts::TAU),
                    rng.random_range(0.0..std::f64::consts::TAU),
                    rng.random_range(0.0..std::f64::consts::TAU),
                ];
                for _ in 0..config.window_size {
                    let secs = t as f64 * 1e-9;
                    let arg = std::f64::consts::TAU * w.freq_hz * secs;
                    let mut axes = [0.0; 3];
                    for k in 0..3 {
                        let noise: f64 = unit.sample(&mut rng);
                        axes[k] = quantize(
                            w.offset[k] + gain * w.amplitude[k] * (arg + phase[k]).sin() + w.noise * noise,
                        );
                    }
                    out.push(RawReading {
                        user_id: user,
                        activity,
                        timestamp: t,
                        ax: axes[0],
                        ay: axes[1],
                        az: axes[2],
                    });
                    t += step_ns;
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parses_wisdm_record() {
        let r = parse_line("33,Jogging,49105962326000,-0.69,12.68,0.50;").unwrap();
        assert_eq!(
            r,
            RawReading {
                user_id: 33,
                activity: Activity::Jogging,
                timestamp: 49105962326000,
                ax: -0.69,
                ay: 12.68,
                az: 0.50,
            }
        );
    }

    #[test]
    fn parses_without_semicolon() {
        let r = parse_line("1,Standing,0,0.0,0.0,0.0").unwrap();
        assert_eq!(r.user_id, 1);
        assert_eq!(r.activity, Activity::Standing);
        assert_eq!((r.timestamp, r.ax, r.ay, r.az), (0, 0.0, 0.0, 0.0));
        assert!(parse_line("  7,Sitting,5,1,2,3;;  \r").is_ok());
    }

    #[test]
    fn rejects_bad_records() {
        for bad in [
            "1,Flying,0,0,0,0;",
            "1,Walking,0,0,0;",
            "1,Walking,0,0,0,0,0;",
            "1,Walking,0,abc,0,0",
            "1,Walking,0,NaN,0,0",
            "1,Walking,0,inf,0,0",
            "1,Walking,-5,0,0,0",
            "0,Walking,5,0,0,0",
            "11,Walking,1867172313000,4.4,4.4,;",
            ";",
        ] {
            assert!(
                matches!(parse_line(bad), Err(IngestError::MalformedRecord(_))),
                "{bad} should be rejected"
            );
        }
    }

    #[test]
    fn load_counts_rejections() {
        let text = "1,Walking,0,1,2,3;\n1,Walking,50,1,2,3;\n\n1,Walking,x,1,2,3;\n1,Walking,100,1,2,3\n";
        let (readings, report) = load_raw(text.as_bytes()).unwrap();
        assert_eq!(readings.len(), 3);
        assert_eq!(
            report,
            IngestReport { accepted: 3, rejected: 1, rejected_line_numbers: vec![4] }
        );
        assert_eq!(readings.iter().map(|r| r.timestamp).collect::<Vec<_>>(), [0, 50, 100]);
    }

    #[test]
    fn load_empty() {
        let (readings, report) = load_raw(&b""[..]).unwrap();
        assert!(readings.is_empty());
        assert_eq!(report, IngestReport::default());
    }

    #[test]
    fn load_splits_multiple_records_per_line() {
        let text = "1,Walking,0,1,2,3;1,Walking,1,1,2,3;\n2,Sitting,3,0,0,9.8;";
        let (readings, report) = load_raw(text.as_bytes()).unwrap();
        assert_eq!(readings.len(), 3);
        assert_eq!(report.rejected, 0);
    }

    #[test]
    fn synthetic_counts() {
        assert_eq!(generate_synthetic(&SyntheticConfig::new(1, 1, 20.0, 7)).len(), 1200);
        assert_eq!(generate_synthetic(&SyntheticConfig::new(2, 5, 20.0, 1)).len(), 12000);
    }

    #[test]
    fn synthetic_is_deterministic() {
        let a = generate_synthetic(&SyntheticConfig::new(1, 1, 20.0, 7));
        let b = generate_synthetic(&SyntheticConfig::new(1, 1, 20.0, 7));
        assert_eq!(a, b);
        let c = generate_synthetic(&SyntheticConfig::new(1, 1, 20.0, 8));
        assert_ne!(a, c);
    }

    #[test]
    fn synthetic_text_reingests_cleanly() {
        let data = generate_synthetic(&SyntheticConfig::new(2, 2, 20.0, 3));
        let mut buf = Vec::new();
        data.as_slice().write_canonical(&mut buf).unwrap();
        let (back, report) = load_raw(buf.as_slice()).unwrap();
        assert_eq!(report.rejected, 0);
        assert_eq!(back, data);
    }

    fn reading_strategy() -> impl Strategy<Value = RawReading> {
        (
            1u32..1000,
            0usize..NUM_ACTIVITIES,
            0i64..i64::MAX / 2,
            -1e3f64..1e3,
            -1e3f64..1e3,
            -1e3f64..1e3,
        )
            .prop_map(|(user_id, a, timestamp, ax, ay, az)| RawReading {
                user_id,
                activity: Activity::from_index(a).unwrap(),
                timestamp,
                ax,
                ay,
                az,
            })
    }

    proptest! {
        #[test]
        fn record_round_trip(r in reading_strategy()) {
            let back = parse_line(&r.to_string()).unwrap();
            prop_assert_eq!(back.user_id, r.user_id);
            prop_assert_eq!(back.activity, r.activity);
            prop_assert_eq!(back.timestamp, r.timestamp);
            prop_assert!((back.ax - r.ax).abs() <= 1e-6);
            prop_assert!((back.ay - r.ay).abs() <= 1e-6);
            prop_assert!((back.az - r.az).abs() <= 1e-6);
        }

        #[test]
        fn loaded_readings_are_valid(lines in proptest::collection::vec(".{0,40}", 0..20)) {
            let text = lines.join("\n");
            let (readings, report) = load_raw(text.as_bytes()).unwrap();
            prop_assert!(readings.iter().all(RawReading::is_valid));
            prop_assert_eq!(readings.len(), report.accepted);
        }
    }
}
