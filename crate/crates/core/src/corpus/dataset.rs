use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use super::format::{self, FormatError};
use super::manifest::{Manifest, TrialKey, TrialRecord, Violation};

/// Channel-major `channels x columns` f32 matrix, the in-memory mirror of a
/// tensor file.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalMatrix {
    channels: usize,
    cols: usize,
    data: Vec<f32>,
}

impl SignalMatrix {
    pub fn new(channels: usize, cols: usize, data: Vec<f32>) -> Self {
        assert_eq!(data.len(), channels * cols, "signal data does not match {channels}x{cols}");
        Self { channels, cols, data }
    }

    pub fn zeros(channels: usize, cols: usize) -> Self {
        Self::new(channels, cols, vec![0.0; channels * cols])
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            assert_eq!(r.len(), cols, "ragged rows");
            data.extend(r.iter().map(|&v| v as f32));
        }
        Self { channels: rows.len(), cols, data }
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn row(&self, ch: usize) -> &[f32] {
        &self.data[ch * self.cols..(ch + 1) * self.cols]
    }

    pub fn row_mut(&mut self, ch: usize) -> &mut [f32] {
        &mut self.data[ch * self.cols..(ch + 1) * self.cols]
    }

    pub fn to_rows_f64(&self) -> Vec<Vec<f64>> {
        (0..self.channels).map(|c| self.row(c).iter().map(|&v| v as f64).collect()).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

/// One trial: raw signal (microvolts) or, after preprocessing, the stacked
/// per-segment features of the trial.
#[derive(Debug, Clone, PartialEq)]
pub struct RawTrial {
    pub key: TrialKey,
    pub label: usize,
    pub signal: SignalMatrix,
}

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("manifest is invalid: {}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Violation>),
    #[error("trial {key}: {reason}")]
    Corrupt { key: TrialKey, reason: String },
    #[error("trial {key}: {what} mismatch (manifest {manifest}, file {file})")]
    Mismatch { key: TrialKey, what: &'static str, manifest: String, file: String },
    #[error("trial {key}: non-finite value in signal")]
    NonFinite { key: TrialKey },
    #[error("trial set does not match manifest records: {0}")]
    IndexMismatch(String),
    #[error("manifest {path}: {source}")]
    Manifest { path: PathBuf, source: serde_json::Error },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> CorpusError + '_ {
    move |source| CorpusError::Io { path: path.to_path_buf(), source }
}

/// Uniform dataset: manifest plus one tensor per record, held in
/// `(session, subject, trial)` ascending order.
#[derive(Debug, Clone, PartialEq)]
pub struct UniformDataset {
    pub manifest: Manifest,
    pub trials: Vec<RawTrial>,
}

impl UniformDataset {
    /// Builds a dataset, sorting records and trials into iteration order and
    /// checking that both describe the same trial set.
    pub fn new(mut manifest: Manifest, mut trials: Vec<RawTrial>) -> Result<Self, CorpusError> {
        manifest.sort_records();
        trials.sort_by_key(|t| t.key);
        let ds = Self { manifest, trials };
        ds.check_consistency()?;
        Ok(ds)
    }

    pub fn check_consistency(&self) -> Result<(), CorpusError> {
        let violations = self.manifest.validate();
        if !violations.is_empty() {
            return Err(CorpusError::Invalid(violations));
        }
        if self.trials.len() != self.manifest.trials.len() {
            return Err(CorpusError::IndexMismatch(format!(
                "{} trials for {} records",
                self.trials.len(),
                self.manifest.trials.len()
            )));
        }
        for (t, r) in self.trials.iter().zip(&self.manifest.trials) {
            if t.key != r.key() {
                return Err(CorpusError::IndexMismatch(format!("trial {} where record {} expected", t.key, r.key())));
            }
            if t.label != r.label {
                return Err(CorpusError::Mismatch {
                    key: t.key,
                    what: "label",
                    manifest: r.label.to_string(),
                    file: t.label.to_string(),
                });
            }
            if t.signal.channels() != r.n_channels || t.signal.cols() != r.n_times {
                return Err(CorpusError::Mismatch {
                    key: t.key,
                    what: "shape",
                    manifest: format!("{}x{}", r.n_channels, r.n_times),
                    file: format!("{}x{}", t.signal.channels(), t.signal.cols()),
                });
            }
            if !t.signal.is_finite() {
                return Err(CorpusError::NonFinite { key: t.key });
            }
        }
        Ok(())
    }

    pub fn records(&self) -> impl Iterator<Item = (&TrialRecord, &RawTrial)> {
        self.manifest.trials.iter().zip(&self.trials)
    }

    pub fn trial(&self, key: TrialKey) -> Option<&RawTrial> {
        self.trials.binary_search_by_key(&key, |t| t.key).ok().map(|i| &self.trials[i])
    }

    pub fn sampling_rate_hz(&self) -> f64 {
        self.manifest.sampling_rate_hz
    }
}

pub fn trial_path(root: &Path, key: TrialKey) -> PathBuf {
    root.join("data")
        .join(format!("s{}", key.session))
        .join(format!("p{}", key.subject))
        .join(format!("t{}.eer", key.trial))
}

pub const MANIFEST_FILE: &str = "manifest.json";

/// Writes `manifest.json` and one tensor per trial. Invariants are checked
/// before anything touches the disk.
pub fn write_dataset(dataset: &UniformDataset, root: &Path) -> Result<(), CorpusError> {
    dataset.check_consistency()?;
    fs::create_dir_all(root).map_err(io_err(root))?;
    for t in &dataset.trials {
        let path = trial_path(root, t.key);
        let dir = path.parent().expect("trial path has a parent");
        fs::create_dir_all(dir).map_err(io_err(dir))?;
        let bytes = format::encode(t.signal.channels(), t.signal.cols(), t.signal.data());
        fs::write(&path, bytes).map_err(io_err(&path))?;
    }
    let manifest_path = root.join(MANIFEST_FILE);
    let mut json = serde_json::to_string_pretty(&dataset.manifest)
        .map_err(|source| CorpusError::Manifest { path: manifest_path.clone(), source })?;
    json.push('\n');
    fs::write(&manifest_path, json).map_err(io_err(&manifest_path))?;
    Ok(())
}

pub fn read_manifest(root: &Path) -> Result<Manifest, CorpusError> {
    let path = root.join(MANIFEST_FILE);
    let text = fs::read_to_string(&path).map_err(io_err(&path))?;
    let mut manifest: Manifest =
        serde_json::from_str(&text).map_err(|source| CorpusError::Manifest { path: path.clone(), source })?;
    manifest.sort_records();
    Ok(manifest)
}

/// Reads a dataset directory written by [`write_dataset`].
pub fn read_dataset(root: &Path) -> Result<UniformDataset, CorpusError> {
    let manifest = read_manifest(root)?;
    let mut trials = Vec::with_capacity(manifest.trials.len());
    for r in &manifest.trials {
        let key = r.key();
        let path = trial_path(root, key);
        let bytes = fs::read(&path)
            .map_err(|e| CorpusError::Corrupt { key, reason: format!("cannot read {}: {e}", path.display()) })?;
        let (header, values) = format::decode(&bytes).map_err(|e| match e {
            FormatError::Io(e) => CorpusError::Io { path: path.clone(), source: e },
            other => CorpusError::Corrupt { key, reason: other.to_string() },
        })?;
        let (channels, times) = (header.channels as usize, header.times as usize);
        if channels != manifest.n_channels {
            return Err(CorpusError::Mismatch {
                key,
                what: "channels",
                manifest: manifest.n_channels.to_string(),
                file: channels.to_string(),
            });
        }
        if times != r.n_times {
            return Err(CorpusError::Mismatch {
                key,
                what: "time samples",
                manifest: r.n_times.to_string(),
                file: times.to_string(),
            });
        }
        if manifest.features.is_none() {
            let implied = r.duration_s * manifest.sampling_rate_hz;
            if !((times as f64 - implied).abs() <= 1.0) {
                return Err(CorpusError::Mismatch {
                    key,
                    what: "sampling rate",
                    manifest: format!("{} Hz x {} s = {implied:.1} samples", manifest.sampling_rate_hz, r.duration_s),
                    file: format!("{times} samples"),
                });
            }
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(CorpusError::NonFinite { key });
        }
        trials.push(RawTrial { key, label: r.label, signal: SignalMatrix::new(channels, times, values) });
    }
    UniformDataset::new(manifest, trials)
}
