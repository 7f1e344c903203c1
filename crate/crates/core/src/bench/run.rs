use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::report::{DatasetProvenance, Software};
use super::{
    aggregate, rank_score, BenchError, BenchmarkReport, CacheEvent, ModelSpec, Note, ResultRow, ResultTable, RunSpec,
    SplitRecord, Timing,
};
use crate::corpus::{read_dataset, read_manifest, write_dataset, UniformDataset};
use crate::harness::{train, SampleStore, SubtaskResult, TrainConfig};
use crate::nn::build_model;
use crate::preprocess::{run_pipeline, FeatureConfig};
use crate::seed::derive_seed;
use crate::split::{kfold_plan, plan_split, resolve, SplitPlan, SplitStrategy, SubtaskSpec, TaskKind};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedRun {
    pub seed: u64,
    pub results: Vec<SubtaskResult>,
}

/// All results of one `(dataset, task, model)` cell. `note` names the note
/// explaining a failure; failed cells keep whatever seeds did complete.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellOutcome {
    pub dataset: String,
    pub task: TaskKind,
    pub model: String,
    pub runs: Vec<SeedRun>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub report: BenchmarkReport,
    pub timing: Timing,
}

struct Prepared {
    provenance: DatasetProvenance,
    store: SampleStore,
    manifest: crate::corpus::Manifest,
}

fn model_label(m: &ModelSpec) -> String {
    match &m.hyper.hidden {
        None => m.tag.name().to_string(),
        Some(h) => {
            let dims: Vec<String> = h.iter().map(ToString::to_string).collect();
            format!("{}-{}", m.tag.name(), dims.join("x"))
        }
    }
}

/// Reads features from the cache or computes and stores them.
fn cached_features(
    raw_path: &Path,
    manifest_hash: &str,
    cfg: &FeatureConfig,
    cache_root: &Path,
) -> Result<(UniformDataset, CacheEvent), BenchError> {
    let cfg_hash = cfg.content_hash();
    let dir = cache_root.join(format!("{}_{}", &manifest_hash[..16], &cfg_hash[..16]));
    let event = |hit| CacheEvent { dataset: raw_path.display().to_string(), path: dir.clone(), hit };
    if let Ok(ds) = read_dataset(&dir) {
        if ds.manifest.features.as_ref().is_some_and(|f| f.config_hash == cfg_hash) {
            log::info!("feature cache hit: {}", dir.display());
            return Ok((ds, event(true)));
        }
    }
    let raw = read_dataset(raw_path)?;
    let features = run_pipeline(&raw, cfg).map_err(|e| BenchError::Data(format!("{}: {e}", raw_path.display())))?;
    let tmp = dir.with_extension(format!("tmp{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&tmp);
    write_dataset(&features, &tmp)?;
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::rename(&tmp, &dir).map_err(BenchError::io(&dir))?;
    Ok((features, event(false)))
}

fn prepare(path: &Path, spec: &RunSpec, name: String) -> Result<(Prepared, Option<CacheEvent>), BenchError> {
    let manifest = read_manifest(path)?;
    let violations = manifest.validate();
    if !violations.is_empty() {
        let text: Vec<String> = violations.iter().map(ToString::to_string).collect();
        return Err(BenchError::Data(format!("{}: {}", path.display(), text.join("; "))));
    }
    let manifest_hash = manifest.content_hash();
    let (features, event, cfg_hash) = if manifest.features.is_some() {
        (read_dataset(path)?, None, None)
    } else {
        let (ds, ev) = cached_features(path, &manifest_hash, &spec.features, &spec.cache_dir())?;
        (ds, Some(ev), Some(spec.features.content_hash()))
    };
    let store = SampleStore::from_dataset(&features).map_err(|e| BenchError::Data(e.to_string()))?;
    let provenance = DatasetProvenance {
        name,
        path: path.to_path_buf(),
        manifest_hash,
        features_hash: features.manifest.content_hash(),
        feature_config_hash: cfg_hash,
    };
    Ok((Prepared { provenance, store, manifest: features.manifest }, event))
}

fn plans_for(
    manifest: &crate::corpus::Manifest,
    task: TaskKind,
    seed: u64,
    spec: &RunSpec,
) -> Result<Vec<SplitPlan>, String> {
    match spec.split {
        SplitStrategy::Kfold { n } => kfold_plan(manifest, task, n, seed, &spec.merge),
        ratio => plan_split(manifest, task, ratio, seed, &spec.merge).map(|p| vec![p]),
    }
    .map_err(|e| e.to_string())
}

type Resolved = Result<Vec<SubtaskSpec>, String>;

struct Job<'a> {
    cell: usize,
    seed_slot: usize,
    seed: u64,
    subtask: &'a SubtaskSpec,
}

/// Runs the whole grid. Data and spec problems abort with an error; failures
/// inside a cell are recorded as notes and the grid carries on.
pub fn run_benchmark(spec: &RunSpec) -> Result<RunOutput, BenchError> {
    spec.validate()?;
    let started_at = chrono::Utc::now().to_rfc3339();
    let clock = Instant::now();

    let mut prepared = Vec::new();
    let mut cache = Vec::new();
    for path in &spec.datasets {
        let base = read_manifest(path)?.dataset_name;
        let taken = prepared.iter().filter(|p: &&Prepared| p.provenance.name.split('#').next() == Some(&base)).count();
        let name = if taken == 0 { base } else { format!("{base}#{}", taken + 1) };
        let (p, event) = prepare(path, spec, name)?;
        cache.extend(event);
        prepared.push(p);
    }

    // one set of resolved sub-tasks per (dataset, task, seed), shared by models
    let mut splits = Vec::new();
    let mut resolved: Vec<Vec<Vec<Resolved>>> = Vec::new();
    for p in &prepared {
        let mut per_task = Vec::new();
        for &task in &spec.tasks {
            let mut per_seed = Vec::new();
            for &seed in &spec.seeds {
                let outcome = plans_for(&p.manifest, task, seed, spec).and_then(|plans| {
                    let mut subtasks = Vec::new();
                    for plan in &plans {
                        subtasks.extend(resolve(plan, &p.manifest).map_err(|e| e.to_string())?);
                    }
                    splits.push(SplitRecord { dataset: p.provenance.name.clone(), task, seed, plans });
                    Ok(subtasks)
                });
                per_seed.push(outcome);
            }
            per_task.push(per_seed);
        }
        resolved.push(per_task);
    }

    let mut cells = Vec::new();
    let mut cell_coords = Vec::new();
    for (di, p) in prepared.iter().enumerate() {
        for (ti, &task) in spec.tasks.iter().enumerate() {
            for (mi, m) in spec.models.iter().enumerate() {
                cells.push(CellOutcome {
                    dataset: p.provenance.name.clone(),
                    task,
                    model: model_label(m),
                    runs: Vec::new(),
                    note: None,
                });
                cell_coords.push((di, ti, mi));
            }
        }
    }

    let mut jobs = Vec::new();
    for (ci, &(di, ti, _)) in cell_coords.iter().enumerate() {
        for (si, &seed) in spec.seeds.iter().enumerate() {
            if let Ok(subtasks) = &resolved[di][ti][si] {
                jobs.extend(subtasks.iter().map(|subtask| Job { cell: ci, seed_slot: si, seed, subtask }));
            }
        }
    }

    let run_job = |job: &Job| -> (Result<SubtaskResult, String>, f64) {
        let (di, _, mi) = cell_coords[job.cell];
        let cell = &cells[job.cell];
        let store = &prepared[di].store;
        let m = &spec.models[mi];
        let t0 = Instant::now();
        let model_seed =
            derive_seed(job.seed, &format!("model/{}/{}/{}/{}", cell.dataset, cell.task, cell.model, job.subtask.id));
        let config = TrainConfig { seed: job.seed, ..spec.train.clone() };
        let outcome = build_model(m.tag, store.channels, store.feature_dim, store.classes, &m.hyper, model_seed)
            .map_err(|e| e.to_string())
            .and_then(|mut model| train(&mut model, job.subtask, store, &config).map_err(|e| e.to_string()));
        (outcome, t0.elapsed().as_secs_f64())
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(spec.workers.unwrap_or(0))
        .build()
        .map_err(|e| BenchError::Run(e.to_string()))?;
    let outcomes: Vec<_> = pool.install(|| jobs.par_iter().map(run_job).collect());

    // single-threaded reduction in job order, which is cell-key order
    let mut per_cell: Vec<Vec<Vec<SubtaskResult>>> = cells.iter().map(|_| vec![Vec::new(); spec.seeds.len()]).collect();
    let mut errors: Vec<Vec<String>> = vec![Vec::new(); cells.len()];
    let mut subtask_seconds = Vec::new();
    for (job, (outcome, secs)) in jobs.iter().zip(outcomes) {
        let cell = &cells[job.cell];
        let key = format!("{}/{}/{}/seed{}/{}", cell.dataset, cell.task, cell.model, job.seed, job.subtask.id);
        subtask_seconds.push((key, secs));
        match outcome {
            Ok(r) => per_cell[job.cell][job.seed_slot].push(r),
            Err(e) => errors[job.cell].push(format!("seed {} subtask {}: {e}", job.seed, job.subtask.id)),
        }
    }
    for (ci, &(di, ti, _)) in cell_coords.iter().enumerate() {
        for (si, &seed) in spec.seeds.iter().enumerate() {
            if let Err(e) = &resolved[di][ti][si] {
                errors[ci].push(format!("seed {seed}: split failed: {e}"));
            }
        }
    }

    let mut notes = Vec::new();
    let mut table = ResultTable::default();
    for (ci, cell) in cells.iter_mut().enumerate() {
        let per_seed = std::mem::take(&mut per_cell[ci]);
        let task = cell.task.name();
        if errors[ci].is_empty() {
            table.rows.push(aggregate(&cell.dataset, task, &cell.model, &per_seed));
        } else {
            let id = format!("n{}", notes.len() + 1);
            let message = format!("{}/{}/{}: {}", cell.dataset, task, cell.model, errors[ci].join("; "));
            log::warn!("{message}");
            notes.push(Note { id: id.clone(), message });
            table.rows.push(ResultRow::failed(&cell.dataset, task, &cell.model, &id));
            cell.note = Some(id);
        }
        cell.runs = spec
            .seeds
            .iter()
            .zip(per_seed)
            .filter(|(_, results)| !results.is_empty())
            .map(|(&seed, results)| SeedRun { seed, results })
            .collect();
    }
    table.sort();
    let rank = rank_score(&table);

    let report = BenchmarkReport {
        software: Software::current(),
        spec: spec.portable(),
        seeds: spec.seeds.clone(),
        datasets: prepared.into_iter().map(|p| p.provenance).collect(),
        table,
        rank,
        splits,
        cells,
        notes,
    };
    let timing = Timing {
        started_at,
        wall_seconds: clock.elapsed().as_secs_f64(),
        out: spec.out.clone(),
        cache,
        subtask_seconds,
    };
    Ok(RunOutput { report, timing })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::{emit_report, ReportFormat, REPORT_FILE, RESULTS_FILE};
    use crate::corpus::{generate_synthetic, SynthConfig};
    use crate::nn::ModelTag;
    use std::path::PathBuf;

    fn tiny_dataset(root: &Path, seed: u64) -> PathBuf {
        let mut cfg = SynthConfig::three_class(3, 1, 3, seed);
        cfg.n_channels = 4;
        cfg.trial_seconds = 4.0;
        let dir = root.join("raw");
        write_dataset(&generate_synthetic(&cfg).unwrap(), &dir).unwrap();
        dir
    }

    fn tiny_spec(data: PathBuf, out: PathBuf) -> RunSpec {
        let mut spec = RunSpec::new(
            vec![data],
            vec![TaskKind::SubjectDependent, TaskKind::CrossSubject],
            ModelTag::ALL.to_vec(),
            out,
        );
        spec.train.epochs = 3;
        spec.train.batch_size = 8;
        spec
    }

    #[test]
    fn grid_is_complete_and_reproducible() {
        let tmp = tempfile::tempdir().unwrap();
        let data = tiny_dataset(tmp.path(), 1);
        let spec = tiny_spec(data, tmp.path().join("a"));
        let first = run_benchmark(&spec).unwrap();
        assert_eq!(first.report.table.rows.len(), 6);
        assert!(first.report.notes.is_empty());
        assert_eq!(first.timing.cache.len(), 1);
        assert!(!first.timing.cache[0].hit);
        for cell in &first.report.cells {
            let n = if cell.task == TaskKind::SubjectDependent { 3 } else { 1 };
            assert_eq!(cell.runs[0].results.len(), n);
            assert!(cell.runs[0].results.iter().all(|r| r.history.len() == 3));
        }
        let files =
            emit_report(&first.report, Some(&first.timing), &spec.out, &[ReportFormat::Json, ReportFormat::Csv])
                .unwrap();
        // report, csv, timing and 3 models x (3 + 1) sub-task logs
        assert_eq!(files.len(), 3 + 12);

        let second = run_benchmark(&spec).unwrap();
        assert!(second.timing.cache[0].hit);
        // wall times are skipped by serialization and differ in memory
        let json = |r: &BenchmarkReport| serde_json::to_string(r).unwrap();
        assert_eq!(json(&second.report), json(&first.report));
        let other = tmp.path().join("b");
        emit_report(&second.report, Some(&second.timing), &other, &[ReportFormat::Json, ReportFormat::Csv]).unwrap();
        for f in [REPORT_FILE, RESULTS_FILE] {
            assert_eq!(std::fs::read(spec.out.join(f)).unwrap(), std::fs::read(other.join(f)).unwrap());
        }
        let csv = std::fs::read_to_string(other.join(RESULTS_FILE)).unwrap();
        assert_eq!(csv.lines().count(), 7);
    }

    #[test]
    fn failed_cell_does_not_abort_grid() {
        let tmp = tempfile::tempdir().unwrap();
        let data = tiny_dataset(tmp.path(), 2);
        let mut spec = tiny_spec(data, tmp.path().join("out"));
        spec.tasks = vec![TaskKind::CrossSession, TaskKind::CrossSubject];
        spec.models = vec![ModelSpec::new(ModelTag::Mlp)];
        spec.seeds = vec![2023, 2024];
        let out = run_benchmark(&spec).unwrap();
        let report = &out.report;
        assert_eq!(report.failed_cells(), 1);
        assert_eq!(report.notes.len(), 1);
        let failed = report.table.rows.iter().find(|r| r.task == "cross_session").unwrap();
        assert_eq!(failed.acc_mean, None);
        assert_eq!(failed.note.as_deref(), Some("n1"));
        let ok = report.table.rows.iter().find(|r| r.task == "cross_subject").unwrap();
        assert_eq!(ok.n_seeds, 2);
        assert!(ok.acc_seed_std.unwrap() >= 0.0);
        // only the cross-subject task has splits on record
        assert_eq!(report.splits.len(), 2);
        assert!(report.rank.notes.iter().any(|n| n.contains("cross_session")));
    }

    #[test]
    fn aggregation_matches_retained_results() {
        let tmp = tempfile::tempdir().unwrap();
        let data = tiny_dataset(tmp.path(), 3);
        let mut spec = tiny_spec(data, tmp.path().join("out"));
        spec.tasks = vec![TaskKind::SubjectDependent];
        spec.seeds = vec![1, 2];
        let report = run_benchmark(&spec).unwrap().report;
        for cell in &report.cells {
            let row = report.table.rows.iter().find(|r| r.model == cell.model).unwrap();
            let accs: Vec<f64> = cell.runs.iter().flat_map(|r| r.results.iter().map(|x| x.test_accuracy)).collect();
            let mean = accs.iter().sum::<f64>() / accs.len() as f64;
            let var = accs.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / accs.len() as f64;
            assert!((row.acc_mean.unwrap() - mean).abs() < 1e-12);
            assert!((row.acc_std.unwrap() - var.sqrt()).abs() < 1e-12);
        }
    }
}
