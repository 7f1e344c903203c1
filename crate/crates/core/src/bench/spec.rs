use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::BenchError;
use crate::harness::TrainConfig;
use crate::nn::{Hyperparams, ModelTag};
use crate::preprocess::FeatureConfig;
use crate::seed::DEFAULT_SEED;
use crate::split::{MergeOptions, SplitStrategy, TaskKind};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub tag: ModelTag,
    #[serde(default)]
    pub hyper: Hyperparams,
}

impl ModelSpec {
    pub fn new(tag: ModelTag) -> Self {
        Self { tag, hyper: Hyperparams::default() }
    }
}

fn default_seeds() -> Vec<u64> {
    vec![DEFAULT_SEED]
}

/// Everything a benchmark run depends on. Loaded from TOML or JSON; the CLI
/// overrides individual fields with flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSpec {
    pub datasets: Vec<PathBuf>,
    pub tasks: Vec<TaskKind>,
    pub models: Vec<ModelSpec>,
    #[serde(default)]
    pub features: FeatureConfig,
    #[serde(default)]
    pub split: SplitStrategy,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default)]
    pub out: PathBuf,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub merge: MergeOptions,
    /// Preprocessing cache; `<out>/cache` when unset.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cache_dir: Option<PathBuf>,
    /// Worker threads for sub-task training; rayon's default when unset.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
}

impl RunSpec {
    pub fn new(datasets: Vec<PathBuf>, tasks: Vec<TaskKind>, models: Vec<ModelTag>, out: PathBuf) -> Self {
        Self {
            datasets,
            tasks,
            models: models.into_iter().map(ModelSpec::new).collect(),
            features: FeatureConfig::default(),
            split: SplitStrategy::default(),
            train: TrainConfig::default(),
            out,
            seeds: default_seeds(),
            merge: MergeOptions::default(),
            cache_dir: None,
            workers: None,
        }
    }

    /// Reads a spec file; `.json` is parsed as JSON, anything else as TOML.
    pub fn load(path: &Path) -> Result<Self, BenchError> {
        let text = std::fs::read_to_string(path).map_err(BenchError::io(path))?;
        let parsed = if path.extension().is_some_and(|e| e == "json") {
            serde_json::from_str(&text).map_err(|e| e.to_string())
        } else {
            toml::from_str(&text).map_err(|e| e.to_string())
        };
        parsed.map_err(|e| BenchError::Spec(format!("{}: {e}", path.display())))
    }

    pub fn cache_dir(&self) -> PathBuf {
        self.cache_dir.clone().unwrap_or_else(|| self.out.join("cache"))
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        let spec = |m: String| Err(BenchError::Spec(m));
        if self.datasets.is_empty() || self.tasks.is_empty() || self.models.is_empty() {
            return spec("need at least one dataset, task and model".into());
        }
        if self.seeds.is_empty() {
            return spec("seed list is empty".into());
        }
        if self.out.as_os_str().is_empty() {
            return spec("output directory is not set".into());
        }
        if let Some(p) = self.datasets.iter().find(|p| !p.is_dir()) {
            return spec(format!("dataset directory {} does not exist", p.display()));
        }
        if self.workers == Some(0) {
            return spec("workers must be at least 1".into());
        }
        self.split.validate().map_err(|e| BenchError::Spec(e.to_string()))?;
        self.train.validate().map_err(|e| BenchError::Spec(e.to_string()))?;
        Ok(())
    }

    /// Copy without machine-local output locations, as embedded in reports.
    pub fn portable(&self) -> Self {
        Self { out: PathBuf::new(), cache_dir: None, workers: None, ..self.clone() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_fills_defaults() {
        let spec: RunSpec = toml::from_str(
            r#"
            datasets = ["data/synth"]
            tasks = ["subject_dependent", "cross_subject"]
            out = "runs/a"

            [[models]]
            tag = "mlp"
            hyper = { hidden = [32] }

            [[models]]
            tag = "graphconv"

            [train]
            epochs = 5
            "#,
        )
        .unwrap();
        assert_eq!(spec.seeds, vec![2024]);
        assert_eq!(spec.split, SplitStrategy::ratio(0.6, 0.2, 0.2));
        assert_eq!(spec.train.epochs, 5);
        assert_eq!(spec.train.batch_size, TrainConfig::default().batch_size);
        assert_eq!(spec.models[0].hyper.hidden, Some(vec![32]));
        assert_eq!(spec.models[1].tag, ModelTag::GraphConv);
        assert_eq!(spec.features, FeatureConfig::default());
        assert_eq!(spec.cache_dir(), PathBuf::from("runs/a/cache"));
    }

    #[test]
    fn json_round_trip_and_validation() {
        let dir = tempfile::tempdir().unwrap();
        let mut spec =
            RunSpec::new(vec![dir.path().into()], vec![TaskKind::CrossSubject], vec![ModelTag::Mlp], "o".into());
        let back: RunSpec = serde_json::from_str(&serde_json::to_string(&spec).unwrap()).unwrap();
        assert_eq!(back, spec);
        spec.validate().unwrap();
        spec.datasets.push(dir.path().join("missing"));
        assert_eq!(spec.validate().unwrap_err().exit_code(), 1);
        spec.datasets.pop();
        spec.models.clear();
        assert!(spec.validate().is_err());
    }
}
