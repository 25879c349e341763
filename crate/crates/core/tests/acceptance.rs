//! Acceptance suite. Each test prints one `[acceptance]` line; run with
//! `cargo test --test acceptance -- --nocapture` to see them.
//!
//! Criteria that need the WISDM v1.1 raw file read it from
//! `FOGMETRY_WISDM_RAW` and report SKIP when it is not set.

mod common;

use std::time::Instant;

use common::{load_wisdm, skipped, synthetic_features, synthetic_readings, verdict};
use fogmetry::deployment::{
    benchmark_pipeline, measure_payload, transmission_time, BenchmarkConfig, LinkProfile, PlanKind,
};
use fogmetry::evaluation::{cross_validate, cross_validate_with, CvOptions};
use fogmetry::features::{featurize, featurize_all, FeatureConfig, FeatureDataset, FeatureVector, FEATURE_COUNT};
use fogmetry::ingest::{load_raw, Activity, RawReading};
use fogmetry::models::{self, gradient_check, ModelKind, ModelSpec};
use fogmetry::windowing::{segment, trace_stats, Window};
use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEED: u64 = 42;

fn random_window(rng: &mut ChaCha8Rng) -> Window {
    let user_id = rng.random_range(1..40);
    let activity = Activity::from_index(rng.random_range(0..6)).unwrap();
    let style = rng.random_range(0..4);
    let mut t = rng.random_range(0..1_000_000_000i64);
    let readings = (0..200)
        .map(|i| {
            t += rng.random_range(0..100_000_000);
            let mut axis = |scale: f64| match style {
                0 => rng.random_range(-scale..scale),
                1 => 3.0,
                2 => if i == 77 { scale * 50.0 } else { 0.5 },
                _ => (i as f64 * 0.4).sin() * scale + rng.random_range(-0.1..0.1),
            };
            RawReading { user_id, activity, timestamp: t, ax: axis(20.0), ay: axis(5.0), az: axis(1e3) }
        })
        .collect();
    Window::new(readings).unwrap()
}

#[test]
fn c1_feature_cardinality() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut failures = 0;
    for _ in 0..1000 {
        let fv = featurize(&random_window(&mut rng), &FeatureConfig::default());
        let ok = fv.values().len() == FEATURE_COUNT
            && fv.values().iter().all(|v| v.is_finite())
            && (0..3).all(|a| (fv.bins(a).iter().sum::<f64>() - 1.0).abs() <= 1e-9);
        failures += usize::from(!ok);
    }
    let elapsed = start.elapsed().as_secs_f64();
    let pass = failures == 0 && elapsed < 5.0;
    verdict("C1", "feature cardinality", pass, format!("1000 windows, {failures} bad, {elapsed:.2}s"));
    assert!(pass);
}

#[test]
fn c2_wisdm_window_count() {
    let start = Instant::now();
    let Some(readings) = load_wisdm() else {
        skipped("C2", "WISDM window count", "FOGMETRY_WISDM_RAW not set");
        return;
    };
    let windows = segment(&readings, 200);
    let stats = trace_stats(&windows);
    let elapsed = start.elapsed().as_secs_f64();
    let count_ok = (stats.count as f64 - 5418.0).abs() / 5418.0 <= 0.05;
    let mean_ok = (stats.mean_per_user - 150.50).abs() / 150.50 <= 0.10;
    let pass = count_ok && mean_ok && elapsed < 60.0;
    verdict(
        "C2",
        "WISDM window count",
        pass,
        format!(
            "{} windows, mean {:.2}/user, sd {:.2}, {elapsed:.1}s",
            stats.count, stats.mean_per_user, stats.std_per_user
        ),
    );
    assert!(pass);
}

#[test]
fn c3_data_reduction() {
    // property: any synthetic dataset with >= 10 windows shrinks
    let mut runner = TestRunner::new(Config { cases: 24, ..Config::default() });
    let property = runner.run(&(1u32..4, 2usize..6, any::<u64>()), |(users, wpa, seed)| {
        let readings = synthetic_readings(users, wpa, seed);
        let windows = segment(&readings, 200);
        prop_assert!(windows.len() >= 10);
        let ds = featurize_all(&windows, &FeatureConfig::default());
        prop_assert!(measure_payload(&ds) < measure_payload(readings.as_slice()));
        Ok(())
    });
    let synthetic_ok = property.is_ok();

    let wisdm = load_wisdm().map(|readings| {
        let ds = featurize_all(&segment(&readings, 200), &FeatureConfig::default());
        let raw = measure_payload(readings.as_slice());
        let feat = measure_payload(&ds);
        (raw, feat)
    });
    let detail = match wisdm {
        Some((raw, feat)) => format!(
            "WISDM raw {raw} B, features {feat} B ({:.2}%), synthetic property {}",
            feat as f64 / raw as f64 * 100.0,
            if synthetic_ok { "holds" } else { "violated" }
        ),
        None => format!(
            "WISDM absent; synthetic property {}",
            if synthetic_ok { "holds over 24 cases" } else { "violated" }
        ),
    };
    let wisdm_ok = wisdm.is_none_or(|(raw, feat)| feat as f64 <= 0.05 * raw as f64);
    let pass = synthetic_ok && wisdm_ok;
    verdict("C3", "data reduction", pass, detail);
    assert!(pass, "{property:?}");
}

#[test]
fn c4_transmission_model() {
    let t = transmission_time(1_200_000, &LinkProfile::default());
    let exact_ok = (t - 9.6).abs() <= 1e-9;
    let ratio = load_wisdm().map(|readings| {
        let ds = featurize_all(&segment(&readings, 200), &FeatureConfig::default());
        let link = LinkProfile::default();
        transmission_time(measure_payload(readings.as_slice()), &link) / transmission_time(measure_payload(&ds), &link)
    });
    let pass = exact_ok && ratio.is_none_or(|r| r >= 40.0);
    let detail = match ratio {
        Some(r) => format!("t(1.2 MB @ 1 Mbps) = {t} s, WISDM raw/feature ratio {r:.1}x"),
        None => format!("t(1.2 MB @ 1 Mbps) = {t} s; WISDM ratio skipped, file absent"),
    };
    verdict("C4", "transmission model", pass, detail);
    assert!(pass);
}

#[test]
fn c5_accuracy_band() {
    let start = Instant::now();
    let Some(readings) = load_wisdm() else {
        skipped("C5", "accuracy band", "FOGMETRY_WISDM_RAW not set");
        return;
    };
    let ds = featurize_all(&segment(&readings, 200), &FeatureConfig::default());
    let mut accs = Vec::new();
    for kind in ModelKind::ALL {
        let r = cross_validate_with(&ds, &ModelSpec::new(kind, SEED), 10, SEED, CvOptions { parallel: true }).unwrap();
        accs.push((kind, r.overall_accuracy));
    }
    let best = accs.iter().map(|a| a.1).fold(0.0, f64::max);
    let mlp = accs.iter().find(|a| a.0 == ModelKind::Mlp).unwrap().1;
    let elapsed = start.elapsed().as_secs_f64();
    let band_ok = accs.iter().all(|&(_, a)| (0.70..=0.97).contains(&a));
    let mlp_ok = best - mlp <= 0.02;
    let pass = band_ok && mlp_ok && elapsed < 1800.0;
    verdict(
        "C5",
        "accuracy band",
        pass,
        format!(
            "{} | mlp gap {:.3} | {elapsed:.0}s",
            accs.iter().map(|(k, a)| format!("{k} {a:.3}")).collect::<Vec<_>>().join(", "),
            best - mlp
        ),
    );
    assert!(pass);
}

#[test]
fn c6_architecture_ordering() {
    // WISDM when present, otherwise a synthetic set of the same scale
    // (36 users, 25 windows per activity, 1.08M readings)
    let (source, readings) = match load_wisdm() {
        Some(r) => ("WISDM", r),
        None => ("synthetic WISDM-scale", synthetic_readings(36, 25, SEED)),
    };
    let report = benchmark_pipeline(&readings, &BenchmarkConfig::with_defaults(SEED)).unwrap();
    let get = |k: PlanKind| report.architectures.iter().find(|c| c.plan == k).unwrap();
    let (fog, cloud, hybrid) = (get(PlanKind::FogOnly), get(PlanKind::CloudOnly), get(PlanKind::Hybrid));
    let pass = hybrid.t_total_s < cloud.t_total_s && hybrid.t_total_s < fog.t_total_s && fog.bytes_tx == 0;
    verdict(
        "C6",
        "architecture ordering",
        pass,
        format!(
            "{source}: raw {} B, features {} B; totals fog {:.1}s, cloud {:.1}s, hybrid {:.1}s; fog bytes {}",
            report.payloads.raw_bytes,
            report.payloads.feature_bytes,
            fog.t_total_s,
            cloud.t_total_s,
            hybrid.t_total_s,
            fog.bytes_tx
        ),
    );
    assert!(pass);
}

/// Direct product of Gaussian densities times priors, normalized. Shares
/// nothing with the model's log-space path.
fn brute_force_posterior(rows: &[Vec<f64>], labels: &[Activity], x: &[f64]) -> [f64; 6] {
    let n = rows.len() as f64;
    let d = x.len();
    let mut max_var: f64 = 0.0;
    for j in 0..d {
        let m = rows.iter().map(|r| r[j]).sum::<f64>() / n;
        max_var = max_var.max(rows.iter().map(|r| (r[j] - m).powi(2)).sum::<f64>() / n);
    }
    let eps = if max_var > 0.0 { 1e-9 * max_var } else { 1e-9 };
    let mut joint = [0.0; 6];
    for (c, a) in Activity::ALL.iter().enumerate() {
        let members: Vec<&Vec<f64>> = rows.iter().zip(labels).filter(|(_, l)| *l == a).map(|(r, _)| r).collect();
        if members.is_empty() {
            continue;
        }
        let k = members.len() as f64;
        let mut p = k / n;
        for j in 0..d {
            let mu = members.iter().map(|r| r[j]).sum::<f64>() / k;
            let var = members.iter().map(|r| (r[j] - mu).powi(2)).sum::<f64>() / k + eps;
            p *= (-(x[j] - mu).powi(2) / (2.0 * var)).exp() / (2.0 * std::f64::consts::PI * var).sqrt();
        }
        joint[c] = p;
    }
    let total: f64 = joint.iter().sum();
    joint.map(|p| p / total)
}

fn shuffled_labels(ds: &FeatureDataset, seed: u64) -> FeatureDataset {
    let mut labels = ds.labels();
    labels.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    FeatureDataset::new(
        ds.rows
            .iter()
            .zip(labels)
            .map(|(r, l)| FeatureVector::new(r.values().to_vec(), l, r.user_id).unwrap())
            .collect(),
    )
}

#[test]
fn c7_classifier_correctness() {
    let start = Instant::now();
    let mut notes = Vec::new();

    // (a) naive Bayes against the brute-force posterior
    let mut runner = TestRunner::new(Config { cases: 64, ..Config::default() });
    let strategy = proptest::collection::vec((proptest::collection::vec(-3.0f64..3.0, 2), 0usize..3), 30);
    let a = runner
        .run(&(strategy, proptest::collection::vec(-3.0f64..3.0, 2)), |(raw, x)| {
            let rows: Vec<Vec<f64>> = raw.iter().map(|(r, c)| r.iter().map(|v| v + *c as f64).collect()).collect();
            let labels: Vec<Activity> = raw.iter().map(|(_, c)| Activity::from_index(*c).unwrap()).collect();
            let refs: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
            let model = models::fit(&ModelSpec::new(ModelKind::GaussianNB, 0), &refs, &labels).unwrap();
            let got = model.predict(&x).class_scores;
            let want = brute_force_posterior(&rows, &labels, &x);
            for c in 0..6 {
                prop_assert!((got[c] - want[c]).abs() <= 1e-9, "class {}: {} vs {}", c, got[c], want[c]);
            }
            Ok(())
        })
        .is_ok();
    notes.push(format!("(a) nb oracle {}", if a { "ok" } else { "FAILED" }));

    // (b) analytic vs finite-difference gradients on 20 feature rows
    let small = synthetic_features(1, 4, 5);
    let rows: Vec<&[f64]> = small.rows.iter().take(20).map(|r| r.values()).collect();
    let labels: Vec<Activity> = small.rows.iter().take(20).map(|r| r.label).collect();
    let lr_err = gradient_check(&ModelSpec::new(ModelKind::LogisticRegression, 3), &rows, &labels, 1e-5).unwrap();
    let mlp_err = gradient_check(&ModelSpec::new(ModelKind::Mlp, 3), &rows, &labels, 1e-5).unwrap();
    let b = lr_err < 1e-4 && mlp_err < 1e-4;
    notes.push(format!("(b) grad err logreg {lr_err:.1e}, mlp {mlp_err:.1e}"));

    // (c) learnable synthetic set
    let separable = synthetic_features(2, 10, 11);
    let mut c = true;
    let mut accs = Vec::new();
    for kind in ModelKind::ALL {
        let r = cross_validate(&separable, &ModelSpec::new(kind, SEED), 10, SEED).unwrap();
        c &= r.overall_accuracy >= 0.90;
        accs.push(format!("{kind} {:.3}", r.overall_accuracy));
    }
    notes.push(format!("(c) separable {}", accs.join(" ")));

    // (d) chance level once labels carry no signal (720 windows)
    let noise = shuffled_labels(&synthetic_features(6, 20, 13), 17);
    let mut d = true;
    let mut accs = Vec::new();
    for kind in ModelKind::ALL {
        let r = cross_validate_with(&noise, &ModelSpec::new(kind, SEED), 10, SEED, CvOptions { parallel: true }).unwrap();
        d &= (0.10..=0.24).contains(&r.overall_accuracy);
        accs.push(format!("{kind} {:.3}", r.overall_accuracy));
    }
    notes.push(format!("(d) shuffled {}", accs.join(" ")));

    // (e) determinism, including concurrent folds
    let mut e = true;
    for kind in ModelKind::ALL {
        let spec = ModelSpec::new(kind, SEED);
        let m1 = models::train(&spec, &separable).unwrap();
        let m2 = models::train(&spec, &separable).unwrap();
        e &= m1 == m2;
        let seq = cross_validate_with(&separable, &spec, 10, SEED, CvOptions { parallel: false }).unwrap();
        let par = cross_validate_with(&separable, &spec, 10, SEED, CvOptions { parallel: true }).unwrap();
        e &= seq.without_timing() == par.without_timing();
    }
    notes.push(format!("(e) determinism {}", if e { "ok" } else { "FAILED" }));

    let elapsed = start.elapsed().as_secs_f64();
    let pass = a && b && c && d && e && elapsed < 120.0;
    verdict("C7", "classifier correctness", pass, format!("{}; {elapsed:.1}s", notes.join("; ")));
    assert!(pass);
}

#[test]
fn c8_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let raw_path = dir.path().join("synth.txt");
    let code = fogmetry::cli::run(["fogmetry", "synth", "--output", raw_path.to_str().unwrap(), "--seed", "42"]);
    assert_eq!(code, 0);
    let (readings, report) = load_raw(std::io::BufReader::new(std::fs::File::open(&raw_path).unwrap())).unwrap();
    let ingest_ok = report.rejected == 0 && !readings.is_empty();

    let in_memory = featurize_all(&segment(&readings, 200), &FeatureConfig::default());
    let mut first = Vec::new();
    in_memory.write_csv(&mut first).unwrap();
    let loaded = FeatureDataset::read_csv(first.as_slice()).unwrap();
    let mut second = Vec::new();
    loaded.write_csv(&mut second).unwrap();
    let reloaded = FeatureDataset::read_csv(second.as_slice()).unwrap();
    let text_ok = first == second && loaded == reloaded;

    let mut evals_ok = true;
    let mut max_gap: f64 = 0.0;
    for kind in ModelKind::ALL {
        let spec = ModelSpec::new(kind, SEED);
        let a = cross_validate(&loaded, &spec, 10, SEED).unwrap();
        let b = cross_validate(&reloaded, &spec, 10, SEED).unwrap();
        evals_ok &= a.without_timing() == b.without_timing();
        // six-digit rounding may move at most a handful of rows
        let m = cross_validate(&in_memory, &spec, 10, SEED).unwrap();
        max_gap = max_gap.max((m.overall_accuracy - a.overall_accuracy).abs());
    }
    let one_row = 1.0 / loaded.len() as f64 + 1e-12;
    let pass = ingest_ok && text_ok && evals_ok && max_gap <= one_row;
    verdict(
        "C8",
        "round trip",
        pass,
        format!(
            "{} readings re-ingested, {} rejected; csv stable: {text_ok}; reloaded evals identical: {evals_ok}; in-memory vs csv accuracy gap {max_gap:.4}",
            readings.len(),
            report.rejected
        ),
    );
    assert!(pass);
}
