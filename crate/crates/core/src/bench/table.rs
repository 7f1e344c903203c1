use std::path::Path;

use serde::{Deserialize, Serialize};

use super::BenchError;
use crate::harness::SubtaskResult;

/// One `(dataset, task, model)` cell. Means and standard deviations pool
/// every sub-task of every seed; the `seed_std` columns are the spread of
/// per-seed means. Failed cells carry `None` values and a note id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub dataset: String,
    #[serde(default)]
    pub task: String,
    pub model: String,
    #[serde(default)]
    pub n_subtasks: usize,
    #[serde(default)]
    pub n_seeds: usize,
    #[serde(default, deserialize_with = "csv::invalid_option")]
    pub acc_mean: Option<f64>,
    #[serde(default, deserialize_with = "csv::invalid_option")]
    pub acc_std: Option<f64>,
    #[serde(default, deserialize_with = "csv::invalid_option")]
    pub f1_mean: Option<f64>,
    #[serde(default, deserialize_with = "csv::invalid_option")]
    pub f1_std: Option<f64>,
    #[serde(default, deserialize_with = "csv::invalid_option")]
    pub acc_seed_std: Option<f64>,
    #[serde(default, deserialize_with = "csv::invalid_option")]
    pub f1_seed_std: Option<f64>,
    #[serde(default, deserialize_with = "csv::invalid_option")]
    pub note: Option<String>,
}

impl ResultRow {
    pub fn failed(dataset: &str, task: &str, model: &str, note: &str) -> Self {
        Self {
            dataset: dataset.into(),
            task: task.into(),
            model: model.into(),
            n_subtasks: 0,
            n_seeds: 0,
            acc_mean: None,
            acc_std: None,
            f1_mean: None,
            f1_std: None,
            acc_seed_std: None,
            f1_seed_std: None,
            note: Some(note.into()),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ResultTable {
    pub rows: Vec<ResultRow>,
}

const HEADER: [&str; 13] = [
    "dataset",
    "task",
    "model",
    "n_subtasks",
    "n_seeds",
    "acc_mean",
    "acc_std",
    "f1_mean",
    "f1_std",
    "acc_seed_std",
    "f1_seed_std",
    "note",
    "status",
];

fn cell(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |v| v.to_string())
}

impl ResultTable {
    pub fn sort(&mut self) {
        self.rows.sort_by(|a, b| (&a.dataset, &a.task, &a.model).cmp(&(&b.dataset, &b.task, &b.model)));
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(HEADER).expect("in-memory write");
        for r in &self.rows {
            let status = if r.acc_mean.is_some() { "ok" } else { "failed" };
            w.write_record([
                r.dataset.clone(),
                r.task.clone(),
                r.model.clone(),
                r.n_subtasks.to_string(),
                r.n_seeds.to_string(),
                cell(r.acc_mean),
                cell(r.acc_std),
                cell(r.f1_mean),
                cell(r.f1_std),
                cell(r.acc_seed_std),
                cell(r.f1_seed_std),
                r.note.clone().unwrap_or_default(),
                status.to_string(),
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("flush to memory")).expect("csv is utf-8")
    }

    /// Parses CSV with at least `dataset`, `model`, `acc_mean` and `f1_mean`
    /// columns. Cells that are not numbers (e.g. `NA`) read as missing.
    pub fn from_csv(text: &str) -> Result<Self, BenchError> {
        let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
        let headers = reader.headers().map_err(|e| BenchError::Data(e.to_string()))?.clone();
        for needed in ["dataset", "model", "acc_mean", "f1_mean"] {
            if !headers.iter().any(|h| h == needed) {
                return Err(BenchError::Data(format!("table is missing column `{needed}`")));
            }
        }
        let rows =
            reader.deserialize().collect::<Result<Vec<ResultRow>, _>>().map_err(|e| BenchError::Data(e.to_string()))?;
        Ok(Self { rows })
    }

    pub fn read_csv(path: &Path) -> Result<Self, BenchError> {
        let text = std::fs::read_to_string(path).map_err(BenchError::io(path))?;
        Self::from_csv(&text).map_err(|e| BenchError::Data(format!("{}: {e}", path.display())))
    }
}

/// Population standard deviation; zero for fewer than two values.
pub fn population_std(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt()
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Reduces per-seed sub-task results into a table row. Every seed must have
/// at least one result.
pub fn aggregate(dataset: &str, task: &str, model: &str, per_seed: &[Vec<SubtaskResult>]) -> ResultRow {
    let pooled = |f: fn(&SubtaskResult) -> f64| -> Vec<f64> { per_seed.iter().flatten().map(f).collect() };
    let seed_means = |f: fn(&SubtaskResult) -> f64| -> Vec<f64> {
        per_seed.iter().map(|rs| mean(&rs.iter().map(f).collect::<Vec<_>>())).collect()
    };
    let acc = pooled(|r| r.test_accuracy);
    let f1 = pooled(|r| r.test_f1);
    ResultRow {
        dataset: dataset.into(),
        task: task.into(),
        model: model.into(),
        n_subtasks: per_seed.first().map_or(0, Vec::len),
        n_seeds: per_seed.len(),
        acc_mean: Some(mean(&acc)),
        acc_std: Some(population_std(&acc)),
        f1_mean: Some(mean(&f1)),
        f1_std: Some(population_std(&f1)),
        acc_seed_std: Some(population_std(&seed_means(|r| r.test_accuracy))),
        f1_seed_std: Some(population_std(&seed_means(|r| r.test_f1))),
        note: None,
    }
}
