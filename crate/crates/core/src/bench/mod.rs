//! Benchmark grids, aggregation, rank scoring and report files.
//!
//! A run walks every `(dataset, task, model, seed)` cell, trains each
//! sub-task of the cell's split plan and reduces the results into a
//! [`ResultTable`]. Cells that fail are kept as notes so the rest of the
//! grid still completes.

mod report;
mod run;
mod score;
mod spec;
mod table;

pub use report::{
    emit_report, BenchmarkReport, CacheEvent, Note, ReportFormat, SplitRecord, Timing, REPORT_FILE, RESULTS_FILE,
    TIMING_FILE,
};
pub use run::{run_benchmark, CellOutcome, RunOutput, SeedRun};
pub use score::{rank_score, write_scores, MethodTotal, RankEntry, RankMetric, RankScore, Ranking};
pub use spec::{ModelSpec, RunSpec};
pub use table::{aggregate, population_std, ResultRow, ResultTable};

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("invalid run spec: {0}")]
    Spec(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("run failed: {0}")]
    Run(String),
    #[error("{path}: {source}")]
    Io { path: std::path::PathBuf, source: std::io::Error },
}

impl BenchError {
    /// Process exit status for the CLI.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Usage(_) | Self::Spec(_) => 1,
            Self::Data(_) => 2,
            Self::Run(_) | Self::Io { .. } => 3,
        }
    }

    pub(crate) fn io(path: &std::path::Path) -> impl FnOnce(std::io::Error) -> Self + '_ {
        move |source| Self::Io { path: path.to_path_buf(), source }
    }
}

impl From<crate::corpus::CorpusError> for BenchError {
    fn from(e: crate::corpus::CorpusError) -> Self {
        Self::Data(e.to_string())
    }
}
