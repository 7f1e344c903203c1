use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use eerbench::bench::{
    emit_report, rank_score, run_benchmark, write_scores, BenchError, ModelSpec, ReportFormat, ResultTable, RunSpec,
};
use eerbench::corpus::{generate_synthetic, read_dataset, read_manifest, write_dataset, SynthConfig};
use eerbench::harness::EvalPolicy;
use eerbench::nn::ModelTag;
use eerbench::preprocess::{run_pipeline, BandSet, FeatureConfig, FeatureKind, Smoothing};
use eerbench::split::{SplitStrategy, TaskKind};

#[derive(Parser)]
#[command(name = "eerbench", version, about = "EEG emotion recognition benchmark")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
#[allow(clippy::large_enum_variant)]
enum Command {
    /// Generate a synthetic dataset from a TOML or JSON config.
    Synth {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Turn a raw dataset into a feature dataset.
    Preprocess {
        #[arg(long)]
        data: PathBuf,
        #[command(flatten)]
        features: FeatureArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a benchmark grid and write report.json, results.csv and logs.
    Run(RunArgs),
    /// Rank-sum scores from one or more result tables.
    Score {
        #[arg(long, num_args = 1.., required = true)]
        tables: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check a dataset directory against its manifest.
    Validate {
        #[arg(long)]
        data: PathBuf,
    },
}

#[derive(Args, Default)]
struct FeatureArgs {
    /// de, psd or raw
    #[arg(long)]
    feature: Option<FeatureKind>,
    /// `default` or comma-separated `lo-hi` pairs in Hz
    #[arg(long)]
    bands: Option<String>,
    /// Window length in seconds.
    #[arg(long)]
    window: Option<f64>,
    /// Fractional window overlap in [0, 1).
    #[arg(long)]
    overlap: Option<f64>,
    /// none or lds
    #[arg(long)]
    smooth: Option<Smoothing>,
}

impl FeatureArgs {
    fn apply(&self, cfg: &mut FeatureConfig) -> Result<(), BenchError> {
        if let Some(k) = self.feature {
            cfg.kind = k;
        }
        if let Some(b) = &self.bands {
            cfg.bands = BandSet::parse(b).map_err(|e| BenchError::Usage(e.to_string()))?;
        }
        if let Some(w) = self.window {
            cfg.window_seconds = w;
        }
        if let Some(o) = self.overlap {
            cfg.overlap_fraction = o;
        }
        if let Some(s) = self.smooth {
            cfg.smoothing = s;
        }
        Ok(())
    }
}

#[derive(Args)]
struct RunArgs {
    /// Run spec file (TOML, or JSON by extension); flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    data: Vec<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    task: Vec<TaskKind>,
    #[arg(long, value_delimiter = ',', value_parser = parse_tag)]
    model: Vec<ModelTag>,
    #[arg(long, value_delimiter = ',')]
    seed: Vec<u64>,
    /// `0.6,0.2,0.2`, `1:1:1` or `kfold:N`
    #[arg(long)]
    split: Option<SplitStrategy>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    /// best_val_f1, last_epoch or early_plateau
    #[arg(long)]
    policy: Option<EvalPolicy>,
    #[arg(long)]
    workers: Option<usize>,
    #[command(flatten)]
    features: FeatureArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_tag(s: &str) -> Result<ModelTag, String> {
    s.parse().map_err(|e: eerbench::nn::NnError| e.to_string())
}

impl RunArgs {
    fn into_spec(self) -> Result<RunSpec, BenchError> {
        let mut spec = match &self.config {
            Some(path) => RunSpec::load(path)?,
            None => RunSpec::new(Vec::new(), Vec::new(), Vec::new(), PathBuf::new()),
        };
        if !self.data.is_empty() {
            spec.datasets = self.data;
        }
        if !self.task.is_empty() {
            spec.tasks = self.task;
        }
        if !self.model.is_empty() {
            spec.models = self.model.into_iter().map(ModelSpec::new).collect();
        }
        if !self.seed.is_empty() {
            spec.seeds = self.seed;
        }
        if let Some(s) = self.split {
            spec.split = s;
        }
        if let Some(e) = self.epochs {
            spec.train.epochs = e;
        }
        if let Some(b) = self.batch_size {
            spec.train.batch_size = b;
        }
        if let Some(lr) = self.lr {
            spec.train.learning_rate = lr;
        }
        if let Some(p) = self.policy {
            spec.train.policy = p;
        }
        if self.workers.is_some() {
            spec.workers = self.workers;
        }
        if let Some(out) = self.out {
            spec.out = out;
        }
        self.features.apply(&mut spec.features)?;
        Ok(spec)
    }
}

fn load_synth_config(path: &Path) -> Result<SynthConfig, BenchError> {
    let text = std::fs::read_to_string(path).map_err(|e| BenchError::Usage(format!("{}: {e}", path.display())))?;
    let parsed = if path.extension().is_some_and(|e| e == "json") {
        serde_json::from_str(&text).map_err(|e| e.to_string())
    } else {
        toml::from_str(&text).map_err(|e| e.to_string())
    };
    parsed.map_err(|e| BenchError::Spec(format!("{}: {e}", path.display())))
}

fn execute(command: Command) -> Result<(), BenchError> {
    match command {
        Command::Synth { config, out } => {
            let cfg = load_synth_config(&config)?;
            let ds = generate_synthetic(&cfg).map_err(|e| BenchError::Spec(e.to_string()))?;
            write_dataset(&ds, &out)?;
            println!("wrote {} trials to {}", ds.trials.len(), out.display());
        }
        Command::Preprocess { data, features, out } => {
            let mut cfg = FeatureConfig::default();
            features.apply(&mut cfg)?;
            let raw = read_dataset(&data)?;
            let ds = run_pipeline(&raw, &cfg).map_err(|e| BenchError::Data(e.to_string()))?;
            write_dataset(&ds, &out)?;
            println!("wrote features of {} trials to {}", ds.trials.len(), out.display());
        }
        Command::Run(args) => {
            let spec = args.into_spec()?;
            let output = run_benchmark(&spec)?;
            emit_report(&output.report, Some(&output.timing), &spec.out, &[ReportFormat::Json, ReportFormat::Csv])?;
            print!("{}", output.report.table.to_csv());
            for note in &output.report.notes {
                eprintln!("{}: {}", note.id, note.message);
            }
            let failed = output.report.failed_cells();
            if failed > 0 {
                return Err(BenchError::Run(format!("{failed} cell(s) failed; see report notes")));
            }
        }
        Command::Score { tables, out } => {
            let mut table = ResultTable::default();
            for path in &tables {
                table.rows.extend(ResultTable::read_csv(path)?.rows);
            }
            let score = rank_score(&table);
            write_scores(&score, &out)?;
            for note in &score.notes {
                eprintln!("note: {note}");
            }
            for t in &score.totals {
                println!("{}\t{}\t{}", t.task, t.method, t.total);
            }
        }
        Command::Validate { data } => {
            let manifest = read_manifest(&data)?;
            let violations = manifest.validate();
            if !violations.is_empty() {
                for v in &violations {
                    eprintln!("{v}");
                }
                return Err(BenchError::Data(format!("{} violation(s)", violations.len())));
            }
            let ds = read_dataset(&data)?;
            println!("ok: {} trials, {} channels", ds.trials.len(), ds.manifest.n_channels);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
