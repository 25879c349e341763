#![allow(dead_code)]

use std::fs::File;
use std::io::BufReader;
use std::path::PathBuf;

use fogmetry::features::{featurize_all, FeatureConfig, FeatureDataset};
use fogmetry::ingest::{generate_synthetic, load_raw, RawReading, SyntheticConfig};
use fogmetry::windowing::segment;

/// Location of the WISDM v1.1 raw file, if the caller provided one.
pub fn wisdm_path() -> Option<PathBuf> {
    std::env::var_os("FOGMETRY_WISDM_RAW")
        .map(PathBuf::from)
        .filter(|p| p.is_file())
}

pub fn load_wisdm() -> Option<Vec<RawReading>> {
    let path = wisdm_path()?;
    let file = File::open(&path).expect("open WISDM file");
    let (readings, _) = load_raw(BufReader::new(file)).expect("read WISDM file");
    Some(readings)
}

pub fn synthetic_readings(users: u32, windows_per_activity: usize, seed: u64) -> Vec<RawReading> {
    generate_synthetic(&SyntheticConfig::new(users, windows_per_activity, 20.0, seed))
}

pub fn synthetic_features(users: u32, windows_per_activity: usize, seed: u64) -> FeatureDataset {
    let readings = synthetic_readings(users, windows_per_activity, seed);
    featurize_all(&segment(&readings, 200), &FeatureConfig::default())
}

pub fn verdict(id: &str, name: &str, pass: bool, detail: impl AsRef<str>) {
    println!(
        "[acceptance] {id} {name}: {} ({})",
        if pass { "PASS" } else { "FAIL" },
        detail.as_ref()
    );
}

pub fn skipped(id: &str, name: &str, why: &str) {
    println!("[acceptance] {id} {name}: SKIP ({why})");
}
