use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{BenchError, ResultTable};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RankMetric {
    Accuracy,
    F1,
}

impl RankMetric {
    pub fn name(self) -> &'static str {
        match self {
            Self::Accuracy => "accuracy",
            Self::F1 => "f1",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankEntry {
    pub method: String,
    pub value: f64,
    pub points: f64,
}

/// Points of one `(task, dataset, metric)` ranking, best first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ranking {
    pub task: String,
    pub dataset: String,
    pub metric: RankMetric,
    pub entries: Vec<RankEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodTotal {
    pub task: String,
    pub method: String,
    pub total: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RankScore {
    /// Per task, highest total first; equal totals in name order.
    pub totals: Vec<MethodTotal>,
    pub rankings: Vec<Ranking>,
    pub notes: Vec<String>,
}

impl RankScore {
    pub fn total(&self, task: &str, method: &str) -> Option<f64> {
        self.totals.iter().find(|t| t.task == task && t.method == method).map(|t| t.total)
    }

    pub fn leaderboard<'a>(&'a self, task: &'a str) -> impl Iterator<Item = &'a MethodTotal> + 'a {
        self.totals.iter().filter(move |t| t.task == task)
    }
}

/// Values are compared at two decimals of a percentage.
fn rank_key(value: f64) -> i64 {
    (value * 1e4).round() as i64
}

/// Points `n..=1` by descending value; tied methods share the mean of the
/// points their positions would have received.
fn award(values: &[(String, f64)]) -> Vec<RankEntry> {
    let n = values.len();
    let mut order: Vec<&(String, f64)> = values.iter().collect();
    order.sort_by(|a, b| rank_key(b.1).cmp(&rank_key(a.1)).then_with(|| a.0.cmp(&b.0)));
    let mut out = Vec::with_capacity(n);
    let mut i = 0;
    while i < n {
        let key = rank_key(order[i].1);
        let j = (i..n).find(|&j| rank_key(order[j].1) != key).unwrap_or(n);
        // positions i..j earn n-i down to n-j+1
        let shared = (i..j).map(|p| (n - p) as f64).sum::<f64>() / (j - i) as f64;
        out.extend(order[i..j].iter().map(|(m, v)| RankEntry { method: m.clone(), value: *v, points: shared }));
        i = j;
    }
    out
}

/// Rank-sum scores of every task in `table`: one ranking per
/// `(dataset, metric)`, ranked over all methods seen in the task. A ranking
/// where some method lacks a value is skipped and noted.
pub fn rank_score(table: &ResultTable) -> RankScore {
    let mut tasks: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    let mut cells: BTreeMap<(&str, &str, RankMetric), BTreeMap<&str, Option<f64>>> = BTreeMap::new();
    for r in &table.rows {
        tasks.entry(&r.task).or_default().insert(&r.model);
        for (metric, v) in [(RankMetric::Accuracy, r.acc_mean), (RankMetric::F1, r.f1_mean)] {
            cells.entry((&r.task, &r.dataset, metric)).or_default().insert(&r.model, v.filter(|v| v.is_finite()));
        }
    }
    let mut score = RankScore::default();
    let mut totals: BTreeMap<(&str, &str), f64> = BTreeMap::new();
    for (&task, methods) in &tasks {
        for &m in methods {
            totals.insert((task, m), 0.0);
        }
    }
    for ((task, dataset, metric), values) in &cells {
        let missing: Vec<&str> =
            tasks[task].iter().copied().filter(|m| values.get(m).copied().flatten().is_none()).collect();
        if !missing.is_empty() {
            score.notes.push(format!(
                "ranking {task}/{dataset}/{} skipped: no value for {}",
                metric.name(),
                missing.join(", ")
            ));
            continue;
        }
        let pairs: Vec<(String, f64)> = values.iter().map(|(m, v)| (m.to_string(), v.expect("checked"))).collect();
        let entries = award(&pairs);
        for &m in values.keys() {
            let e = entries.iter().find(|e| e.method == m).expect("every method is awarded");
            *totals.get_mut(&(*task, m)).expect("method registered") += e.points;
        }
        score.rankings.push(Ranking { task: task.to_string(), dataset: dataset.to_string(), metric: *metric, entries });
    }
    score.totals = totals
        .into_iter()
        .map(|((task, method), total)| MethodTotal { task: task.into(), method: method.into(), total })
        .collect();
    score
        .totals
        .sort_by(|a, b| a.task.cmp(&b.task).then(b.total.total_cmp(&a.total)).then_with(|| a.method.cmp(&b.method)));
    score
}

/// `task,method,total,rankings` CSV, leaderboard order.
pub fn write_scores(score: &RankScore, path: &Path) -> Result<(), BenchError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["task", "method", "total", "rankings"]).expect("in-memory write");
    for t in &score.totals {
        let n = score.rankings.iter().filter(|r| r.task == t.task).count();
        w.write_record([t.task.clone(), t.method.clone(), t.total.to_string(), n.to_string()])
            .expect("in-memory write");
    }
    let bytes = w.into_inner().expect("flush to memory");
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(BenchError::io(dir))?;
    }
    std::fs::write(path, bytes).map_err(BenchError::io(path))
}
