//! Uniform data model, on-disk format and synthetic data.
//!
//! A dataset directory holds `manifest.json` and one tensor file per trial at
//! `data/s{session}/p{subject}/t{trial}.eer` (see [`format`]).

mod dataset;
pub mod format;
mod manifest;
mod synth;

pub use dataset::{
    read_dataset, read_manifest, trial_path, write_dataset, CorpusError, RawTrial, SignalMatrix, UniformDataset,
    MANIFEST_FILE,
};
pub use manifest::{
    validate_manifest, FeatureInfo, LabelKind, LabelScheme, Manifest, TrialKey, TrialRecord, Violation, ViolationKind,
    MANIFEST_VERSION,
};
pub use synth::{generate_synthetic, SynthConfig, SynthError};

#[cfg(test)]
pub(crate) use manifest::grid_manifest;
