//! Signal preprocessing: broadband filtering, optional PCA artifact removal,
//! five-band decomposition, DE / PSD features per window, optional LDS
//! smoothing across windows, and segmentation into samples.

mod artifact;
mod features;
mod filter;
mod lds;
mod pipeline;
mod segment;

use serde::{Deserialize, Serialize};

use crate::corpus::{CorpusError, TrialKey};

pub use artifact::{remove_artifacts_pca, ArtifactRemoval};
pub use features::{de_feature, differential_entropy, psd_feature, Periodogram, EPS};
pub use filter::{bandpass_filter, Biquad, SosFilter, BUTTER_ORDER};
pub use lds::{lds_smooth, total_variation, PROCESS_NOISE_RATIO};
pub use pipeline::{process_trial, run_pipeline, FeatureConfig, FeatureKind, FeatureTensor, Smoothing};
pub use segment::{segment_trial, step_samples, window_samples, SegmentLayout};

/// delta, theta, alpha, beta, gamma (Hz).
pub const DEFAULT_BANDS: [[f64; 2]; 5] = [[0.5, 4.0], [4.0, 8.0], [8.0, 14.0], [14.0, 30.0], [30.0, 50.0]];

#[derive(Debug, thiserror::Error)]
pub enum PreprocessError {
    #[error("band [{low_hz}, {high_hz}] Hz is not valid at {fs} Hz (need 0 < low < high < fs/2)")]
    InvalidBand { low_hz: f64, high_hz: f64, fs: f64 },
    #[error("signal of {len} samples is shorter than the {min} the filter needs")]
    SignalTooShort { len: usize, min: usize },
    #[error("invalid feature config: {0}")]
    Config(String),
    #[error("{} trial(s) failed: {}", .0.len(), .0.iter().map(|(k, e)| format!("{k}: {e}")).collect::<Vec<_>>().join("; "))]
    Trials(Vec<(TrialKey, String)>),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
}

/// Ordered list of `(low_hz, high_hz)` bands.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BandSet(pub Vec<[f64; 2]>);

impl Default for BandSet {
    fn default() -> Self {
        Self(DEFAULT_BANDS.to_vec())
    }
}

impl BandSet {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64; 2]> {
        self.0.iter()
    }

    pub fn check(&self, fs: f64) -> Result<(), PreprocessError> {
        for &[low_hz, high_hz] in &self.0 {
            if !(low_hz > 0.0 && low_hz < high_hz && high_hz < fs / 2.0) {
                return Err(PreprocessError::InvalidBand { low_hz, high_hz, fs });
            }
        }
        Ok(())
    }

    /// Parses `default` or a comma list like `4-8,8-14`.
    pub fn parse(text: &str) -> Result<Self, PreprocessError> {
        if text.trim() == "default" {
            return Ok(Self::default());
        }
        text.split(',')
            .map(|part| {
                let (lo, hi) = part
                    .trim()
                    .split_once('-')
                    .ok_or_else(|| PreprocessError::Config(format!("band `{part}` is not low-high")))?;
                let parse = |s: &str| {
                    s.trim().parse::<f64>().map_err(|e| PreprocessError::Config(format!("band `{part}`: {e}")))
                };
                Ok([parse(lo)?, parse(hi)?])
            })
            .collect::<Result<Vec<_>, _>>()
            .map(Self)
    }
}

/// One zero-phase bandpass output per band, in band order.
pub fn band_decompose(signal: &[Vec<f64>], bands: &BandSet, fs: f64) -> Result<Vec<Vec<Vec<f64>>>, PreprocessError> {
    bands.check(fs)?;
    bands.iter().map(|&[lo, hi]| bandpass_filter(signal, lo, hi, fs)).collect()
}
