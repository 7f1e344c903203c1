use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{BenchError, CellOutcome, RankScore, ResultTable, RunSpec};
use crate::harness::write_epoch_log;
use crate::split::{SplitPlan, TaskKind};

pub const REPORT_FILE: &str = "report.json";
pub const RESULTS_FILE: &str = "results.csv";
/// Wall-clock data lives here so the report itself stays reproducible.
pub const TIMING_FILE: &str = "timing.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Software {
    pub name: String,
    pub version: String,
}

impl Software {
    pub fn current() -> Self {
        Self { name: env!("CARGO_PKG_NAME").into(), version: env!("CARGO_PKG_VERSION").into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetProvenance {
    pub name: String,
    pub path: PathBuf,
    /// Hash of the manifest as read from `path`.
    pub manifest_hash: String,
    /// Hash of the feature-level manifest the models were trained on.
    pub features_hash: String,
    /// Feature config hash when features were computed by this run.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub feature_config_hash: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Note {
    pub id: String,
    pub message: String,
}

/// Split plans used for one `(dataset, task, seed)`; one plan per fold for
/// k-fold strategies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitRecord {
    pub dataset: String,
    pub task: TaskKind,
    pub seed: u64,
    pub plans: Vec<SplitPlan>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub software: Software,
    pub spec: RunSpec,
    pub seeds: Vec<u64>,
    pub datasets: Vec<DatasetProvenance>,
    pub table: ResultTable,
    pub rank: RankScore,
    pub splits: Vec<SplitRecord>,
    pub cells: Vec<CellOutcome>,
    pub notes: Vec<Note>,
}

impl BenchmarkReport {
    pub fn failed_cells(&self) -> usize {
        self.cells.iter().filter(|c| c.note.is_some()).count()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CacheEvent {
    pub dataset: String,
    pub path: PathBuf,
    pub hit: bool,
}

/// Sidecar with everything that legitimately differs between reruns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub started_at: String,
    pub wall_seconds: f64,
    pub out: PathBuf,
    pub cache: Vec<CacheEvent>,
    pub subtask_seconds: Vec<(String, f64)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    /// `report.json` plus per-subtask NDJSON epoch logs under `logs/`.
    Json,
    /// `results.csv`, one row per `(dataset, task, model)`.
    Csv,
}

fn path_safe(s: &str) -> String {
    s.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' }).collect()
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), BenchError> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(BenchError::io(dir))?;
    }
    std::fs::write(path, bytes).map_err(BenchError::io(path))
}

/// Writes the requested formats into `dir` and returns the files written.
/// Identical reports produce byte-identical files.
pub fn emit_report(
    report: &BenchmarkReport,
    timing: Option<&Timing>,
    dir: &Path,
    formats: &[ReportFormat],
) -> Result<Vec<PathBuf>, BenchError> {
    let mut written = Vec::new();
    if formats.contains(&ReportFormat::Json) {
        let path = dir.join(REPORT_FILE);
        let mut json = serde_json::to_string_pretty(report).expect("report serializes");
        json.push('\n');
        write(&path, json.as_bytes())?;
        written.push(path);
        for cell in &report.cells {
            for run in &cell.runs {
                let base = dir
                    .join("logs")
                    .join(path_safe(&cell.dataset))
                    .join(cell.task.name())
                    .join(path_safe(&cell.model))
                    .join(format!("seed{}", run.seed));
                for r in &run.results {
                    let path = base.join(format!("{}.ndjson", path_safe(&r.id)));
                    std::fs::create_dir_all(&base).map_err(BenchError::io(&base))?;
                    write_epoch_log(&path, r).map_err(|e| BenchError::Run(format!("{}: {e}", path.display())))?;
                    written.push(path);
                }
            }
        }
    }
    if formats.contains(&ReportFormat::Csv) {
        let path = dir.join(RESULTS_FILE);
        write(&path, report.table.to_csv().as_bytes())?;
        written.push(path);
    }
    if let Some(t) = timing {
        let path = dir.join(TIMING_FILE);
        let mut json = serde_json::to_string_pretty(t).expect("timing serializes");
        json.push('\n');
        write(&path, json.as_bytes())?;
        written.push(path);
    }
    Ok(written)
}
