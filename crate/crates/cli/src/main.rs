use std::path::{Path, PathBuf};
use std::process::ExitCode;

use bushing::config::{ExperimentConfig, ExperimentKind};
use bushing::error::{CliError, Result};
use bushing::experiment;
use bushing::report::{self, Format};
use bushing::snapshot::{Level, Snapshot};
use bushing::{csv_io, MonotonicClock};
use bushing_core::diagnosis::diagnose_inputs;
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "bushing",
    version,
    about = "Incremental DGA bushing fault diagnosis experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Experiment config (TOML).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Seed; overrides the config file.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; overrides the config file.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

#[derive(Subcommand)]
enum Command {
    /// Generate train and validation CSV files.
    GenData(Common),
    /// Compare batch MLP, RBF and SVM classifiers.
    BatchCompare(Common),
    /// Learn++ over five Normal/Faulty databases.
    Incremental(Common),
    /// Learn++ on fault types with a class introduced in a later session.
    NewClass(Common),
    /// Pooled versus class-starved batch MLP.
    BatchBaseline(Common),
    /// Diagnose one CSV row with level-1 and level-2 snapshots.
    Diagnose {
        /// CSV file in the dataset format; labels may be blank.
        #[arg(long)]
        input: PathBuf,
        /// Zero-based data row to diagnose.
        #[arg(long, default_value_t = 0)]
        row: usize,
        #[arg(long)]
        level1: PathBuf,
        #[arg(long)]
        level2: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Summarize a model snapshot.
    InspectModel {
        snapshot: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
}

fn resolve(common: &Common, kind: ExperimentKind) -> Result<ExperimentConfig> {
    let mut cfg = match &common.config {
        Some(path) => {
            let cfg = ExperimentConfig::load(path)?;
            if kind != ExperimentKind::GenData && cfg.kind != kind {
                return Err(CliError::Config(format!(
                    "config kind `{}` does not match command `{}`",
                    cfg.kind.name(),
                    kind.name()
                )));
            }
            cfg
        }
        None => {
            let seed = common.seed.ok_or_else(|| {
                CliError::Config("a seed is required: pass --seed or --config".into())
            })?;
            ExperimentConfig::new(kind, seed)
        }
    };
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &common.out {
        cfg.output_dir = Some(out.clone());
    }
    Ok(cfg)
}

fn emit(format: Format, text: String, json: String) {
    match format {
        Format::Text => print!("{text}"),
        Format::Structured => print!("{json}"),
    }
}

fn run(cli: Cli) -> Result<()> {
    let clock = MonotonicClock::new();
    match cli.command {
        Command::GenData(c) => {
            let cfg = resolve(&c, ExperimentKind::GenData)?;
            let out = cfg.output_dir.clone().unwrap_or_else(|| PathBuf::from("."));
            let data = experiment::run_gen_data(&cfg, &out)?;
            let summary = serde_json::json!({
                "train": out.join("train.csv"),
                "validation": out.join("validation.csv"),
                "train_samples": data.train.len(),
                "validation_samples": data.validation.len(),
            });
            emit(
                c.format,
                format!(
                    "wrote {} training and {} validation samples to {}\n",
                    data.train.len(),
                    data.validation.len(),
                    out.display()
                ),
                report::structured(&summary),
            );
        }
        Command::Incremental(c) => incremental(&c, ExperimentKind::IncrementalLevel1, &clock)?,
        Command::NewClass(c) => incremental(&c, ExperimentKind::IncrementalNewClass, &clock)?,
        Command::BatchCompare(c) => {
            let cfg = resolve(&c, ExperimentKind::BatchCompare)?;
            let r =
                experiment::run_batch_compare(&cfg, &clock, cfg.output_dir.as_deref(), c.format)?;
            emit(
                c.format,
                report::batch_compare_text(&r),
                report::structured(&r),
            );
        }
        Command::BatchBaseline(c) => {
            let cfg = resolve(&c, ExperimentKind::BatchBaseline)?;
            let r =
                experiment::run_batch_baseline(&cfg, &clock, cfg.output_dir.as_deref(), c.format)?;
            emit(c.format, report::baseline_text(&r), report::structured(&r));
        }
        Command::Diagnose {
            input,
            row,
            level1,
            level2,
            format,
        } => {
            let l1 = Snapshot::load(&level1)?;
            let l2 = Snapshot::load(&level2)?;
            if l1.level != Level::Level1 || l2.level != Level::Level2 {
                return Err(CliError::Snapshot(
                    "expected a level-1 and a level-2 snapshot".into(),
                ));
            }
            let records = read_rows(&input)?;
            let rec = records.get(row).ok_or_else(|| {
                CliError::Config(format!("{} has no data row {row}", input.display()))
            })?;
            let x1 = l1.features(&rec.record)?;
            let x2 = l2.features(&rec.record)?;
            let d = diagnose_inputs(&l1, x1.as_slice(), &l2, x2.as_slice())?;
            let json = serde_json::json!({ "sample_id": rec.record.sample_id, "diagnosis": d });
            emit(
                format,
                report::diagnosis_text(&rec.record.sample_id, &d),
                report::structured(&json),
            );
        }
        Command::InspectModel { snapshot, format } => {
            let s = Snapshot::load(&snapshot)?;
            let m = report::model_summary(&s);
            emit(format, report::model_text(&m), report::structured(&m));
        }
    }
    Ok(())
}

fn incremental(c: &Common, kind: ExperimentKind, clock: &MonotonicClock) -> Result<()> {
    let cfg = resolve(c, kind)?;
    let run = experiment::run_incremental(&cfg, clock, cfg.output_dir.as_deref(), c.format)?;
    emit(
        c.format,
        report::session_text(&run.report),
        report::structured(&run.report),
    );
    Ok(())
}

fn read_rows(path: &Path) -> Result<Vec<csv_io::CsvRecord>> {
    let file = std::fs::File::open(path).map_err(|e| CliError::io(path, e))?;
    csv_io::read_records(file)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
