#![allow(dead_code)]

use eerbench::corpus::{FeatureInfo, LabelScheme, Manifest, TrialRecord, MANIFEST_VERSION};
use rand::Rng;

/// Feature-level manifest with `segments(trial)` samples per trial.
pub fn feature_manifest(
    sessions: u32,
    subjects: u32,
    trials: u32,
    classes: usize,
    mut label: impl FnMut(u32, u32, u32) -> usize,
    mut segments: impl FnMut(u32, u32, u32) -> usize,
) -> Manifest {
    let mut records = Vec::new();
    for s in 0..sessions {
        for p in 0..subjects {
            for t in 0..trials {
                let n = segments(s, p, t);
                records.push(TrialRecord {
                    session: s,
                    subject: p,
                    trial: t,
                    n_channels: 2,
                    n_times: n * 5,
                    label: label(s, p, t),
                    ratings: None,
                    duration_s: n as f64,
                    n_segments: Some(n),
                });
            }
        }
    }
    Manifest {
        format_version: MANIFEST_VERSION,
        dataset_name: "fixture".into(),
        n_sessions: sessions,
        n_subjects: subjects,
        trials_per_subject: trials,
        n_channels: 2,
        sampling_rate_hz: 200.0,
        label_scheme: LabelScheme::discrete((0..classes).map(|k| format!("c{k}"))),
        features: Some(FeatureInfo {
            kind: "de".into(),
            bands: vec![[0.5, 4.0], [4.0, 8.0], [8.0, 14.0], [14.0, 30.0], [30.0, 50.0]],
            window_seconds: 1.0,
            overlap_fraction: 0.0,
            smoothing: "lds".into(),
            feature_dim: 5,
            artifact_threshold: None,
            config_hash: "fixture".into(),
        }),
        trials: records,
    }
}

/// `trials` per subject with labels cycling through `classes`.
pub fn cyclic_manifest(sessions: u32, subjects: u32, trials: u32, classes: usize) -> Manifest {
    feature_manifest(sessions, subjects, trials, classes, |_, _, t| t as usize % classes, |_, _, _| 1)
}

pub fn random_manifest(rng: &mut impl Rng) -> Manifest {
    let sessions = rng.random_range(1..=4);
    let subjects = rng.random_range(1..=7);
    let trials = rng.random_range(3..=16);
    let classes = rng.random_range(2..=5);
    let labels: Vec<usize> = (0..sessions * subjects * trials).map(|_| rng.random_range(0..classes)).collect();
    let segs: Vec<usize> = (0..sessions * subjects * trials).map(|_| rng.random_range(1..=4)).collect();
    let at = |s: u32, p: u32, t: u32| ((s * subjects + p) * trials + t) as usize;
    feature_manifest(sessions, subjects, trials, classes, |s, p, t| labels[at(s, p, t)], |s, p, t| segs[at(s, p, t)])
}
