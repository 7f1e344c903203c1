//! Seeded synthetic EEG with class-dependent band-power signatures.
//!
//! Every channel of a trial is a sum of sinusoidal oscillators, a few per
//! frequency band, each drawn in its own slice of the central part of the
//! band and given a random phase. The power given to a band follows
//! the class signature, scaled by deterministic per-subject drift.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::dataset::{CorpusError, RawTrial, SignalMatrix, UniformDataset};
use super::manifest::{LabelScheme, Manifest, TrialRecord, MANIFEST_VERSION};
use crate::preprocess::DEFAULT_BANDS;
use crate::seed::rng_for;

fn default_name() -> String {
    "synthetic".into()
}
fn default_power() -> f64 {
    100.0
}
fn default_oscillators() -> usize {
    3
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    #[serde(default = "default_name")]
    pub dataset_name: String,
    pub n_subjects: u32,
    pub n_sessions: u32,
    pub trials_per_class: u32,
    pub n_channels: usize,
    pub sampling_rate_hz: f64,
    pub trial_seconds: f64,
    /// One row per class: relative power in each of the five default bands.
    pub signatures: Vec<Vec<f64>>,
    /// Standard deviation of the log-normal per-subject amplitude drift.
    pub drift_scale: f64,
    /// Standard deviation of additive white noise (microvolts).
    pub noise_amplitude: f64,
    /// Total oscillator power per channel before drift (microvolts squared).
    #[serde(default = "default_power")]
    pub total_power: f64,
    #[serde(default = "default_oscillators")]
    pub oscillators_per_band: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub class_names: Option<Vec<String>>,
    pub seed: u64,
}

#[derive(Debug, thiserror::Error)]
pub enum SynthError {
    #[error("invalid synthetic config: {0}")]
    Config(String),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
}

impl SynthConfig {
    /// Three classes whose power peaks in alpha, beta and gamma.
    pub fn three_class(n_subjects: u32, n_sessions: u32, trials_per_class: u32, seed: u64) -> Self {
        Self {
            dataset_name: default_name(),
            n_subjects,
            n_sessions,
            trials_per_class,
            n_channels: 62,
            sampling_rate_hz: 200.0,
            trial_seconds: 20.0,
            signatures: vec![
                vec![0.15, 0.15, 0.40, 0.15, 0.15],
                vec![0.15, 0.15, 0.15, 0.40, 0.15],
                vec![0.15, 0.15, 0.15, 0.15, 0.40],
            ],
            drift_scale: 0.1,
            noise_amplitude: 1.0,
            total_power: default_power(),
            oscillators_per_band: default_oscillators(),
            class_names: Some(vec!["alpha".into(), "beta".into(), "gamma".into()]),
            seed,
        }
    }

    pub fn n_classes(&self) -> usize {
        self.signatures.len()
    }

    pub fn trials_per_subject(&self) -> u32 {
        self.trials_per_class * self.n_classes() as u32
    }

    pub fn n_times(&self) -> usize {
        (self.trial_seconds * self.sampling_rate_hz).round() as usize
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        let fail = |m: String| Err(SynthError::Config(m));
        if self.n_subjects == 0 || self.n_sessions == 0 || self.trials_per_class == 0 || self.n_channels == 0 {
            return fail("counts must be positive".into());
        }
        if self.signatures.len() < 2 {
            return fail("at least two class signatures required".into());
        }
        for (c, row) in self.signatures.iter().enumerate() {
            if row.len() != DEFAULT_BANDS.len() {
                return fail(format!("signature {c} has {} entries, expected {}", row.len(), DEFAULT_BANDS.len()));
            }
            if row.iter().any(|&v| !(v >= 0.0)) {
                return fail(format!("signature {c} has a negative entry"));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > 1e-6 {
                return fail(format!("signature {c} sums to {sum}, expected 1"));
            }
        }
        if let Some(names) = &self.class_names {
            if names.len() != self.signatures.len() {
                return fail("class_names length differs from signature count".into());
            }
        }
        let nyquist = self.sampling_rate_hz / 2.0;
        if !(DEFAULT_BANDS.iter().all(|b| b[1] < nyquist)) {
            return fail(format!("sampling rate {} Hz too low for the gamma band", self.sampling_rate_hz));
        }
        if !(self.trial_seconds > 0.0) || self.n_times() < 2 {
            return fail("trial_seconds too short".into());
        }
        if self.oscillators_per_band == 0 {
            return fail("oscillators_per_band must be positive".into());
        }
        if !(self.drift_scale >= 0.0 && self.noise_amplitude >= 0.0 && self.total_power > 0.0) {
            return fail("drift, noise and power must be non-negative".into());
        }
        Ok(())
    }

    /// Whether trials are long enough for windows of `window_seconds`.
    pub fn fits_window(&self, window_seconds: f64) -> bool {
        self.trial_seconds >= window_seconds
    }
}

struct SubjectDrift {
    band: Vec<f64>,
    channel: Vec<f64>,
}

fn subject_drift(cfg: &SynthConfig, subject: u32) -> SubjectDrift {
    let mut rng = rng_for(cfg.seed, &format!("synth/subject/{subject}"));
    let factor = |rng: &mut rand_chacha::ChaCha8Rng| {
        let z: f64 = StandardNormal.sample(rng);
        (cfg.drift_scale * z).exp()
    };
    let band = (0..DEFAULT_BANDS.len()).map(|_| factor(&mut rng)).collect();
    let channel = (0..cfg.n_channels).map(|_| factor(&mut rng)).collect();
    SubjectDrift { band, channel }
}

/// Rounds `freq` to a whole number of cycles over the trial when one fits in
/// `[lo, hi)`. Oscillators in disjoint slots then stay exactly orthogonal, so
/// band powers hold over the trial instead of only on average.
fn snap_to_cycles(freq: f64, lo: f64, hi: f64, seconds: f64) -> f64 {
    let first = (lo * seconds).ceil();
    let last = (hi * seconds).ceil() - 1.0;
    if first > last {
        return freq;
    }
    (freq * seconds).round().clamp(first, last) / seconds
}

fn synth_trial(
    cfg: &SynthConfig,
    drift: &SubjectDrift,
    session: u32,
    subject: u32,
    trial: u32,
    label: usize,
) -> SignalMatrix {
    let mut rng = rng_for(cfg.seed, &format!("synth/trial/{session}/{subject}/{trial}"));
    let n = cfg.n_times();
    let fs = cfg.sampling_rate_hz;
    let k = cfg.oscillators_per_band;
    let mut data = Vec::with_capacity(cfg.n_channels * n);
    let mut row = vec![0.0f64; n];
    for ch in 0..cfg.n_channels {
        row.iter_mut().for_each(|v| *v = 0.0);
        for (b, band) in DEFAULT_BANDS.iter().enumerate() {
            let power = cfg.total_power * cfg.signatures[label][b] * drift.band[b] * drift.channel[ch];
            if power <= 0.0 {
                continue;
            }
            let amplitude = (2.0 * power / k as f64).sqrt();
            let width = band[1] - band[0];
            let slot = 0.6 * width / k as f64;
            for j in 0..k {
                let lo = band[0] + 0.2 * width + j as f64 * slot;
                let freq = snap_to_cycles(rng.random_range(lo..lo + slot), lo, lo + slot, cfg.trial_seconds);
                let phase = rng.random_range(0.0..2.0 * PI);
                let step = 2.0 * PI * freq / fs;
                for (i, v) in row.iter_mut().enumerate() {
                    *v += amplitude * (step * i as f64 + phase).sin();
                }
            }
        }
        if cfg.noise_amplitude > 0.0 {
            for v in row.iter_mut() {
                let z: f64 = StandardNormal.sample(&mut rng);
                *v += cfg.noise_amplitude * z;
            }
        }
        data.extend(row.iter().map(|&v| v as f32));
    }
    SignalMatrix::new(cfg.n_channels, n, data)
}

/// Generates the dataset described by `cfg`; a pure function of `cfg`.
///
/// Trial `t` of every `(session, subject)` carries label `t % n_classes`.
pub fn generate_synthetic(cfg: &SynthConfig) -> Result<UniformDataset, SynthError> {
    cfg.validate()?;
    let n_classes = cfg.n_classes();
    let names = cfg.class_names.clone().unwrap_or_else(|| (0..n_classes).map(|c| format!("class{c}")).collect());
    let n_times = cfg.n_times();
    let mut records = Vec::new();
    let mut trials = Vec::new();
    for session in 0..cfg.n_sessions {
        for subject in 0..cfg.n_subjects {
            let drift = subject_drift(cfg, subject);
            for trial in 0..cfg.trials_per_subject() {
                let label = trial as usize % n_classes;
                records.push(TrialRecord {
                    session,
                    subject,
                    trial,
                    n_channels: cfg.n_channels,
                    n_times,
                    label,
                    ratings: None,
                    duration_s: cfg.trial_seconds,
                    n_segments: None,
                });
                trials.push(RawTrial {
                    key: records.last().unwrap().key(),
                    label,
                    signal: synth_trial(cfg, &drift, session, subject, trial, label),
                });
            }
        }
    }
    let manifest = Manifest {
        format_version: MANIFEST_VERSION,
        dataset_name: cfg.dataset_name.clone(),
        n_sessions: cfg.n_sessions,
        n_subjects: cfg.n_subjects,
        trials_per_subject: cfg.trials_per_subject(),
        n_channels: cfg.n_channels,
        sampling_rate_hz: cfg.sampling_rate_hz,
        label_scheme: LabelScheme::discrete(names),
        features: None,
        trials: records,
    };
    Ok(UniformDataset::new(manifest, trials)?)
}
