//! Newline-delimited JSON epoch logs: one object per epoch followed by one
//! summary object, so a partially written log still yields usable records.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{EpochRecord, HarnessError, SubtaskResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum LogLine {
    Epoch {
        subtask: String,
        #[serde(flatten)]
        record: EpochRecord,
    },
    Summary {
        subtask: String,
        chosen_epoch: usize,
        test_accuracy: f64,
        test_f1: f64,
    },
}

pub fn write_epoch_log(path: &Path, result: &SubtaskResult) -> Result<(), HarnessError> {
    let mut w = BufWriter::new(File::create(path)?);
    let json = |line: &LogLine| serde_json::to_string(line).expect("log line serializes");
    for r in &result.history {
        writeln!(w, "{}", json(&LogLine::Epoch { subtask: result.id.clone(), record: r.clone() }))?;
    }
    let summary = LogLine::Summary {
        subtask: result.id.clone(),
        chosen_epoch: result.chosen_epoch,
        test_accuracy: result.test_accuracy,
        test_f1: result.test_f1,
    };
    writeln!(w, "{}", json(&summary))?;
    w.flush()?;
    Ok(())
}

/// Parses a log, skipping a torn final line.
pub fn read_epoch_log(path: &Path) -> Result<Vec<LogLine>, HarnessError> {
    let mut out = Vec::new();
    for line in BufReader::new(File::open(path)?).lines() {
        let line = line?;
        match serde_json::from_str(&line) {
            Ok(parsed) => out.push(parsed),
            Err(_) => break,
        }
    }
    Ok(out)
}
