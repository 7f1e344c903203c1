use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    band_decompose, bandpass_filter, differential_entropy, lds_smooth, remove_artifacts_pca, BandSet, Periodogram,
    PreprocessError, SegmentLayout, EPS,
};
use crate::corpus::{FeatureInfo, RawTrial, SignalMatrix, TrialKey, TrialRecord, UniformDataset};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureKind {
    De,
    Psd,
    Raw,
}

impl FeatureKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::De => "de",
            Self::Psd => "psd",
            Self::Raw => "raw",
        }
    }
}

impl std::str::FromStr for FeatureKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "de" => Ok(Self::De),
            "psd" => Ok(Self::Psd),
            "raw" => Ok(Self::Raw),
            other => Err(format!("unknown feature kind `{other}` (de, psd, raw)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Smoothing {
    None,
    Lds,
}

impl Smoothing {
    pub fn name(self) -> &'static str {
        match self {
            Self::None => "none",
            Self::Lds => "lds",
        }
    }
}

impl std::str::FromStr for Smoothing {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "none" => Ok(Self::None),
            "lds" => Ok(Self::Lds),
            other => Err(format!("unknown smoothing `{other}` (none, lds)")),
        }
    }
}

fn default_broadband() -> Option<[f64; 2]> {
    Some([0.3, 50.0])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FeatureConfig {
    pub kind: FeatureKind,
    #[serde(default)]
    pub bands: BandSet,
    pub window_seconds: f64,
    #[serde(default)]
    pub overlap_fraction: f64,
    pub smoothing: Smoothing,
    #[serde(default = "default_broadband")]
    pub broadband: Option<[f64; 2]>,
    /// Variance-share threshold for PCA artifact removal; `None` disables it.
    #[serde(default)]
    pub artifact_threshold: Option<f64>,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        Self {
            kind: FeatureKind::De,
            bands: BandSet::default(),
            window_seconds: 1.0,
            overlap_fraction: 0.0,
            smoothing: Smoothing::Lds,
            broadband: default_broadband(),
            artifact_threshold: None,
        }
    }
}

impl FeatureConfig {
    pub fn feature_dim(&self, fs: f64) -> usize {
        match self.kind {
            FeatureKind::De | FeatureKind::Psd => self.bands.len(),
            FeatureKind::Raw => super::window_samples(self.window_seconds, fs),
        }
    }

    pub fn validate(&self, fs: f64) -> Result<(), PreprocessError> {
        let bad = |m: String| Err(PreprocessError::Config(m));
        if !(self.window_seconds > 0.0) || self.window_seconds * fs < 2.0 {
            return bad(format!("window of {} s at {fs} Hz is shorter than 2 samples", self.window_seconds));
        }
        if !(0.0..1.0).contains(&self.overlap_fraction) {
            return bad(format!("overlap_fraction {} outside [0, 1)", self.overlap_fraction));
        }
        if let Some(t) = self.artifact_threshold {
            if !(t > 0.0 && t < 1.0) {
                return bad(format!("artifact threshold {t} outside (0, 1)"));
            }
        }
        if self.kind != FeatureKind::Raw {
            if self.bands.is_empty() {
                return bad("feature extraction needs at least one band".into());
            }
            self.bands.check(fs)?;
            if let Some([lo, hi]) = self.broadband {
                BandSet(vec![[lo, hi]]).check(fs)?;
            }
        }
        Ok(())
    }

    pub fn content_hash(&self) -> String {
        crate::seed::sha256_hex(&serde_json::to_vec(self).expect("feature config serializes"))
    }

    fn info(&self, fs: f64) -> FeatureInfo {
        FeatureInfo {
            kind: self.kind.name().into(),
            bands: if self.kind == FeatureKind::Raw { Vec::new() } else { self.bands.0.clone() },
            window_seconds: self.window_seconds,
            overlap_fraction: self.overlap_fraction,
            smoothing: self.smoothing.name().into(),
            feature_dim: self.feature_dim(fs),
            artifact_threshold: self.artifact_threshold,
            config_hash: self.content_hash(),
        }
    }
}

/// Per-trial features: `n_segments` samples of `channels x feature_dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTensor {
    pub key: TrialKey,
    pub label: usize,
    pub n_segments: usize,
    pub n_channels: usize,
    pub feature_dim: usize,
    /// Channel-major: channel `c`, segment `k`, feature `j` sits at
    /// `c * n_segments * d + k * d + j`, matching the tensor file layout.
    pub data: Vec<f32>,
}

impl FeatureTensor {
    /// Sample `k` as a row-major `channels x feature_dim` block.
    pub fn sample(&self, k: usize) -> Vec<f64> {
        let d = self.feature_dim;
        let stride = self.n_segments * d;
        let mut out = Vec::with_capacity(self.n_channels * d);
        for c in 0..self.n_channels {
            let start = c * stride + k * d;
            out.extend(self.data[start..start + d].iter().map(|&v| v as f64));
        }
        out
    }

    /// Reinterprets a stored trial of a feature dataset.
    pub fn from_trial(trial: &RawTrial, n_segments: usize, feature_dim: usize) -> Self {
        assert_eq!(trial.signal.cols(), n_segments * feature_dim);
        Self {
            key: trial.key,
            label: trial.label,
            n_segments,
            n_channels: trial.signal.channels(),
            feature_dim,
            data: trial.signal.data().to_vec(),
        }
    }

    pub fn into_trial(self) -> RawTrial {
        let cols = self.n_segments * self.feature_dim;
        RawTrial { key: self.key, label: self.label, signal: SignalMatrix::new(self.n_channels, cols, self.data) }
    }
}

/// Runs the configured steps on one trial signal (`channels x T`).
pub fn process_trial(
    signal: &[Vec<f64>],
    fs: f64,
    cfg: &FeatureConfig,
) -> Result<(usize, Vec<Vec<f64>>), PreprocessError> {
    let total = signal.first().map_or(0, Vec::len);
    let layout = SegmentLayout::from_seconds(total, cfg.window_seconds, cfg.overlap_fraction, fs);
    if layout.count == 0 {
        log::warn!("window of {} samples does not fit a trial of {total}; no samples", layout.window);
    }

    if cfg.kind == FeatureKind::Raw {
        let rows = signal
            .iter()
            .map(|row| (0..layout.count).flat_map(|k| row[layout.range(k)].iter().copied()).collect())
            .collect();
        return Ok((layout.count, rows));
    }
    if layout.count == 0 {
        return Ok((0, vec![Vec::new(); signal.len()]));
    }

    let mut x = match cfg.broadband {
        Some([lo, hi]) => bandpass_filter(signal, lo, hi, fs)?,
        None => signal.to_vec(),
    };
    if let Some(threshold) = cfg.artifact_threshold {
        x = remove_artifacts_pca(&x, threshold).signal;
    }
    let parts = band_decompose(&x, &cfg.bands, fs)?;

    let d = cfg.bands.len();
    let n_seg = layout.count;
    let periodogram = (cfg.kind == FeatureKind::Psd).then(|| Periodogram::new(layout.window));
    let mut rows = vec![vec![0.0f64; n_seg * d]; signal.len()];
    for (b, band_signal) in parts.iter().enumerate() {
        let band = cfg.bands.0[b];
        for (c, row) in band_signal.iter().enumerate() {
            let mut series: Vec<f64> = (0..n_seg)
                .map(|k| {
                    let w = &row[layout.range(k)];
                    match &periodogram {
                        Some(pg) => pg.band_power(w, fs, band[0], band[1]).max(EPS).ln(),
                        None => differential_entropy(w),
                    }
                })
                .collect();
            if cfg.smoothing == Smoothing::Lds {
                series = lds_smooth(&series);
            }
            for (k, v) in series.into_iter().enumerate() {
                rows[c][k * d + b] = v;
            }
        }
    }
    Ok((n_seg, rows))
}

/// Turns a raw dataset into a feature dataset with hierarchy
/// `(session, subject, trial, sample)`. Trials are processed in parallel
/// and reassembled in key order; any failing trial fails the run with
/// every error listed.
pub fn run_pipeline(dataset: &UniformDataset, cfg: &FeatureConfig) -> Result<UniformDataset, PreprocessError> {
    if dataset.manifest.features.is_some() {
        return Err(PreprocessError::Config("dataset already holds features".into()));
    }
    let fs = dataset.sampling_rate_hz();
    cfg.validate(fs)?;
    let d = cfg.feature_dim(fs);

    let results: Vec<Result<(TrialRecord, RawTrial), (TrialKey, String)>> = dataset
        .records()
        .collect::<Vec<_>>()
        .par_iter()
        .map(|(record, trial)| {
            let rows = trial.signal.to_rows_f64();
            let (n_seg, feats) = process_trial(&rows, fs, cfg).map_err(|e| (trial.key, e.to_string()))?;
            if let Some(bad) = feats.iter().flatten().find(|v| !v.is_finite()) {
                return Err((trial.key, format!("non-finite feature {bad}")));
            }
            let tensor = FeatureTensor {
                key: trial.key,
                label: trial.label,
                n_segments: n_seg,
                n_channels: rows.len(),
                feature_dim: d,
                data: feats.iter().flat_map(|r| r.iter().map(|&v| v as f32)).collect(),
            };
            let mut rec = (*record).clone();
            rec.n_times = n_seg * d;
            rec.n_segments = Some(n_seg);
            Ok((rec, tensor.into_trial()))
        })
        .collect();

    let mut failures = Vec::new();
    let mut records = Vec::with_capacity(results.len());
    let mut trials = Vec::with_capacity(results.len());
    for r in results {
        match r {
            Ok((rec, trial)) => {
                records.push(rec);
                trials.push(trial);
            }
            Err(e) => failures.push(e),
        }
    }
    if !failures.is_empty() {
        return Err(PreprocessError::Trials(failures));
    }
    let mut manifest = dataset.manifest.clone();
    manifest.trials = records;
    manifest.features = Some(cfg.info(fs));
    Ok(UniformDataset::new(manifest, trials)?)
}
