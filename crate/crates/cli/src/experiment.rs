//! Experiment runners: data preparation, incremental Learn++ sessions,
//! batch comparison and the batch baseline.

use std::fs;
use std::path::Path;

use bushing_core::classifier::{Classify, Model};
use bushing_core::datagen::{
    class_filtered_databases, default_signatures, generate_dataset, split_into_databases,
    GeneratorConfig, LabeledRecord,
};
use bushing_core::diagnosis::{
    self, compare_batch_classifiers, Clock, ComparisonRow, MetricsReport,
};
use bushing_core::features::{
    fit_normalizer, normalize, FaultClass, Level1Label, Level2Label, NormalizationParams,
};
use bushing_core::learnpp::{Ensemble, SessionTrace};
use bushing_core::mlp::{self, MlpConfig, TrainingSet};
use serde::{Deserialize, Serialize};

use crate::config::{seeds, sub_seed, ExperimentConfig};
use crate::csv_io;
use crate::error::{CliError, Result};
use crate::snapshot::{Level, Snapshot, SnapshotModel};

pub const REPORT_FORMAT: &str = "bushing-report";
pub const REPORT_VERSION: u32 = 1;

/// Which label a task predicts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Task {
    /// Normal vs Faulty over every sample.
    Level1,
    /// Fault type over Faulty samples only.
    Level2,
}

impl Task {
    pub fn level(self) -> Level {
        match self {
            Task::Level1 => Level::Level1,
            Task::Level2 => Level::Level2,
        }
    }

    pub fn class_names(self) -> Vec<String> {
        match self {
            Task::Level1 => Level1Label::ALL
                .iter()
                .map(|l| l.name().to_string())
                .collect(),
            Task::Level2 => Level2Label::ALL
                .iter()
                .map(|l| l.name().to_string())
                .collect(),
        }
    }

    pub fn classes(self) -> usize {
        match self {
            Task::Level1 => 2,
            Task::Level2 => 3,
        }
    }

    /// Class counted as positive for sensitivity.
    pub fn positive(self) -> usize {
        match self {
            Task::Level1 => Level1Label::Faulty.index(),
            Task::Level2 => Level2Label::UnknownSource.index(),
        }
    }

    pub fn label(self, class: FaultClass) -> Option<usize> {
        match self {
            Task::Level1 => Some(class.level1().index()),
            Task::Level2 => class.level2().map(Level2Label::index),
        }
    }

    pub fn keeps(self, class: FaultClass) -> bool {
        self.label(class).is_some()
    }
}

/// Training and validation records of an experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub train: Vec<LabeledRecord>,
    pub validation: Vec<LabeledRecord>,
}

/// Generates the experiment's records in memory.
pub fn generate(cfg: &ExperimentConfig) -> Result<Dataset> {
    let train_size = cfg.train_size();
    let gen = GeneratorConfig {
        proportions: cfg.proportions()?,
        signatures: default_signatures(),
        samples: train_size + cfg.validation_size(),
        seed: sub_seed(cfg.seed, seeds::GENERATE),
    };
    let all = generate_dataset(&gen)?;
    let split = split_into_databases(&all, &[train_size], sub_seed(cfg.seed, seeds::HOLDOUT))?;
    let train = split.databases.into_iter().next().expect("one database");
    Ok(Dataset {
        train,
        validation: split.remainder,
    })
}

/// Loads the configured CSV files, or generates data when none are set.
pub fn load_or_generate(cfg: &ExperimentConfig) -> Result<Dataset> {
    match (&cfg.data.train, &cfg.data.validation) {
        (Some(t), Some(v)) => {
            cfg.check_paths()?;
            Ok(Dataset {
                train: csv_io::read_labeled(t)?,
                validation: csv_io::read_labeled(v)?,
            })
        }
        _ => generate(cfg),
    }
}

/// Normalized inputs with task labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Encoded {
    pub inputs: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
}

impl Encoded {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

pub fn encode(
    records: &[LabeledRecord],
    params: &NormalizationParams,
    task: Task,
) -> Result<Encoded> {
    let mut inputs = Vec::with_capacity(records.len());
    let mut labels = Vec::with_capacity(records.len());
    for r in records {
        if let Some(y) = task.label(r.class) {
            inputs.push(normalize(&r.record, params)?.to_vec());
            labels.push(y);
        }
    }
    Ok(Encoded { inputs, labels })
}

fn task_records(records: &[LabeledRecord], task: Task) -> Vec<LabeledRecord> {
    records
        .iter()
        .filter(|r| task.keeps(r.class))
        .cloned()
        .collect()
}

fn percent(x: f64) -> f64 {
    100.0 * x
}

/// Rounds seconds to whole milliseconds.
pub fn millis(seconds: f64) -> f64 {
    (seconds * 1000.0).round() / 1000.0
}

/// Accepted-hypothesis summary of one session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoostingSummary {
    pub hypotheses: usize,
    pub discarded: usize,
    /// Mean accuracy of the session's weak hypotheses on its database (%).
    pub mean_weak_accuracy: f64,
    /// Accuracy of the session's composite on its database (%).
    pub composite_accuracy: f64,
}

/// Outcome of an incremental experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionReport {
    pub format: String,
    pub version: u32,
    pub experiment: String,
    pub seed: u64,
    pub classes: Vec<String>,
    pub database_sizes: Vec<usize>,
    /// Classes present in each database.
    pub database_classes: Vec<Vec<String>>,
    pub validation_size: usize,
    /// `accuracy_matrix[s][d]`: accuracy (%) on database `d` after session
    /// `s`, for `d <= s`.
    pub accuracy_matrix: Vec<Vec<f64>>,
    /// Accuracy (%) on the validation set after each session.
    pub validation_accuracy: Vec<f64>,
    /// Mean confidence of the predicted class over correctly classified
    /// validation samples, per session.
    pub mean_correct_confidence: Vec<f64>,
    /// Per session and class: mean confidence over correctly classified
    /// validation samples of that class; `None` when there are none.
    pub class_confidence: Vec<Vec<Option<f64>>>,
    /// Per session and class: validation recall (%); `None` when the class
    /// is absent from the validation set.
    pub class_recall: Vec<Vec<Option<f64>>>,
    pub boosting: Vec<BoostingSummary>,
    /// Wall-clock training seconds per session (machine dependent).
    pub train_seconds: Vec<f64>,
}

/// Everything an incremental run produces.
#[derive(Debug, Clone)]
pub struct IncrementalRun {
    pub report: SessionReport,
    pub traces: Vec<SessionTrace>,
    pub snapshot: Snapshot,
    pub databases: Vec<Encoded>,
    pub validation: Encoded,
    /// Largest deviation of any emitted confidence vector's sum from one.
    pub max_confidence_sum_error: f64,
}

fn task_for(cfg: &ExperimentConfig) -> Task {
    if cfg.kind.is_new_class() {
        Task::Level2
    } else {
        Task::Level1
    }
}

/// Splits the training records into the experiment's databases.
pub fn databases(
    cfg: &ExperimentConfig,
    train: &[LabeledRecord],
) -> Result<Vec<Vec<LabeledRecord>>> {
    let sizes = cfg.database_sizes();
    let seed = sub_seed(cfg.seed, seeds::DATABASES);
    let split = if cfg.kind.is_new_class() {
        class_filtered_databases(train, &cfg.schedule()?, &sizes, seed)?
    } else {
        split_into_databases(train, &sizes, seed)?
    };
    Ok(split.databases)
}

fn accuracy_on(model: &impl Classify, data: &Encoded) -> Result<f64> {
    Ok(bushing_core::classifier::accuracy(
        model,
        &data.inputs,
        &data.labels,
    )?)
}

/// Runs Learn++ over the configured databases. When `out` is given, the
/// ensemble snapshot is written after every session and the report at the
/// end.
pub fn run_incremental<K: Clock + ?Sized>(
    cfg: &ExperimentConfig,
    clock: &K,
    out: Option<&Path>,
    format: crate::report::Format,
) -> Result<IncrementalRun> {
    let task = task_for(cfg);
    let data = load_or_generate(cfg)?;
    let train = task_records(&data.train, task);
    let validation_records = task_records(&data.validation, task);
    if train.is_empty() || validation_records.is_empty() {
        return Err(CliError::Config(
            "no samples for this task in the data".into(),
        ));
    }
    let normalizer = fit_normalizer(
        &train.iter().map(|r| r.record.clone()).collect::<Vec<_>>(),
        cfg.tdcg,
    )?;
    let raw_dbs = databases(cfg, &train)?;
    let dbs: Vec<Encoded> = raw_dbs
        .iter()
        .map(|db| encode(db, &normalizer, task))
        .collect::<Result<_>>()?;
    let validation = encode(&validation_records, &normalizer, task)?;
    let names = task.class_names();
    let classes = task.classes();

    if let Some(dir) = out {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }

    let mut learner = cfg.weak_learner();
    let mut ensemble: Ensemble<Model> =
        Ensemble::new(bushing_core::features::FEATURE_COUNT, classes)?;
    let mut report = SessionReport {
        format: REPORT_FORMAT.into(),
        version: REPORT_VERSION,
        experiment: cfg.kind.name().into(),
        seed: cfg.seed,
        classes: names.clone(),
        database_sizes: dbs.iter().map(Encoded::len).collect(),
        database_classes: dbs
            .iter()
            .map(|db| {
                let mut c: Vec<usize> = db.labels.clone();
                c.sort_unstable();
                c.dedup();
                c.into_iter().map(|i| names[i].clone()).collect()
            })
            .collect(),
        validation_size: validation.len(),
        accuracy_matrix: Vec::new(),
        validation_accuracy: Vec::new(),
        mean_correct_confidence: Vec::new(),
        class_confidence: Vec::new(),
        class_recall: Vec::new(),
        boosting: Vec::new(),
        train_seconds: Vec::new(),
    };
    let mut traces = Vec::new();
    let mut max_sum_error = 0.0f64;
    let mut snapshot = None;

    for (k, db) in dbs.iter().enumerate() {
        let start = clock.now_seconds();
        let trace =
            ensemble.run_session(&mut learner, &db.inputs, &db.labels, &cfg.session_config(k))?;
        report
            .train_seconds
            .push(millis(clock.now_seconds() - start));

        report.accuracy_matrix.push(
            dbs[..=k]
                .iter()
                .map(|d| accuracy_on(&ensemble, d).map(percent))
                .collect::<Result<_>>()?,
        );

        let mut predictions = Vec::with_capacity(validation.len());
        let mut conf_sum = vec![0.0; classes];
        let mut conf_n = vec![0usize; classes];
        for (x, &y) in validation.inputs.iter().zip(&validation.labels) {
            let (c, gamma) = ensemble.classify_with_confidence(x)?;
            max_sum_error = max_sum_error.max((gamma.iter().sum::<f64>() - 1.0).abs());
            if c == y {
                conf_sum[y] += gamma[c];
                conf_n[y] += 1;
            }
            predictions.push(c);
        }
        let m = diagnosis::metrics(&predictions, &validation.labels, classes, task.positive())?;
        report.validation_accuracy.push(percent(m.accuracy));
        let correct: usize = conf_n.iter().sum();
        report.mean_correct_confidence.push(if correct > 0 {
            conf_sum.iter().sum::<f64>() / correct as f64
        } else {
            0.0
        });
        report.class_confidence.push(
            (0..classes)
                .map(|c| (conf_n[c] > 0).then(|| conf_sum[c] / conf_n[c] as f64))
                .collect(),
        );
        report
            .class_recall
            .push(m.recall().into_iter().map(|r| r.map(percent)).collect());
        report.boosting.push(BoostingSummary {
            hypotheses: trace.accepted().count(),
            discarded: trace.steps.len() - trace.accepted().count(),
            mean_weak_accuracy: percent(trace.mean_weak_accuracy()),
            composite_accuracy: percent(trace.composite_accuracy().unwrap_or(0.0)),
        });
        traces.push(trace);

        let snap = Snapshot::new(
            task.level(),
            normalizer.clone(),
            SnapshotModel::Ensemble {
                ensemble: ensemble.clone(),
                weak_learner: learner.clone(),
                session: cfg.session_config(0),
                experiment_seed: cfg.seed,
            },
        );
        if let Some(dir) = out {
            snap.save(&dir.join(format!("ensemble_session{}.json", k + 1)))?;
            snap.save(&dir.join("ensemble.json"))?;
        }
        snapshot = Some(snap);
    }

    if let Some(dir) = out {
        crate::report::write_session_report(dir, &report, format)?;
    }
    Ok(IncrementalRun {
        report,
        traces,
        snapshot: snapshot.expect("at least one database"),
        databases: dbs,
        validation,
        max_confidence_sum_error: max_sum_error,
    })
}

/// Batch MLP/RBF/SVM comparison at both diagnosis levels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchCompareReport {
    pub format: String,
    pub version: u32,
    pub seed: u64,
    pub level1: Vec<ComparisonRow>,
    pub level2: Vec<ComparisonRow>,
}

fn round_timings(rows: &mut [ComparisonRow]) {
    for r in rows {
        r.metrics.train_seconds = millis(r.metrics.train_seconds);
        r.metrics.classify_seconds = millis(r.metrics.classify_seconds);
    }
}

/// Trains the three batch classifiers on level 1 (all samples) and level 2
/// (Faulty samples). Best models are written as snapshots when `out` is
/// given.
pub fn run_batch_compare<K: Clock + ?Sized>(
    cfg: &ExperimentConfig,
    clock: &K,
    out: Option<&Path>,
    format: crate::report::Format,
) -> Result<BatchCompareReport> {
    let data = load_or_generate(cfg)?;
    let settings = cfg.batch_settings();
    let mut levels = Vec::new();
    for task in [Task::Level1, Task::Level2] {
        let train = task_records(&data.train, task);
        let normalizer = fit_normalizer(
            &train.iter().map(|r| r.record.clone()).collect::<Vec<_>>(),
            cfg.tdcg,
        )?;
        let tr = encode(&train, &normalizer, task)?;
        let te = encode(&data.validation, &normalizer, task)?;
        let mut rows = compare_batch_classifiers(
            &tr.inputs,
            &tr.labels,
            &te.inputs,
            &te.labels,
            task.classes(),
            task.positive(),
            &settings,
            clock,
        )?;
        round_timings(&mut rows);
        if let Some(dir) = out {
            fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
            for row in &rows {
                if let Some(model) = &row.model {
                    let snap = Snapshot::new(
                        task.level(),
                        normalizer.clone(),
                        SnapshotModel::Single {
                            model: model.clone(),
                        },
                    );
                    let level = if task == Task::Level1 {
                        "level1"
                    } else {
                        "level2"
                    };
                    snap.save(&dir.join(format!(
                        "{}_{}.json",
                        level,
                        row.classifier.to_lowercase()
                    )))?;
                }
            }
        }
        levels.push(rows);
    }
    let level2 = levels.pop().expect("two levels");
    let level1 = levels.pop().expect("two levels");
    let report = BatchCompareReport {
        format: REPORT_FORMAT.into(),
        version: REPORT_VERSION,
        seed: cfg.seed,
        level1,
        level2,
    };
    if let Some(dir) = out {
        crate::report::write_batch_compare(dir, &report, format)?;
    }
    Ok(report)
}

/// Pooled versus class-starved batch MLP.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineReport {
    pub format: String,
    pub version: u32,
    pub seed: u64,
    pub classes: Vec<String>,
    /// Databases (1-based) the starved model was trained on.
    pub starved_databases: Vec<usize>,
    pub pooled: MetricsReport,
    pub starved: MetricsReport,
}

fn train_mlp<K: Clock + ?Sized>(
    cfg: MlpConfig,
    data: &Encoded,
    classes: usize,
    clock: &K,
) -> Result<(mlp::MlpModel, f64)> {
    let set = TrainingSet::from_labels(data.inputs.clone(), &data.labels, classes)?;
    let start = clock.now_seconds();
    let (model, _) = mlp::train_scg(&cfg, &set)?;
    Ok((model, clock.now_seconds() - start))
}

/// Trains one MLP on every database pooled and one on the early databases
/// that lack some class, and evaluates both on the validation set.
pub fn run_batch_baseline<K: Clock + ?Sized>(
    cfg: &ExperimentConfig,
    clock: &K,
    out: Option<&Path>,
    format: crate::report::Format,
) -> Result<BaselineReport> {
    let task = task_for(cfg);
    let data = load_or_generate(cfg)?;
    let train = task_records(&data.train, task);
    if train.is_empty() {
        return Err(CliError::Config(
            "no samples for this task in the data".into(),
        ));
    }
    let normalizer = fit_normalizer(
        &train.iter().map(|r| r.record.clone()).collect::<Vec<_>>(),
        cfg.tdcg,
    )?;
    let raw_dbs = databases(cfg, &train)?;
    let dbs: Vec<Encoded> = raw_dbs
        .iter()
        .map(|db| encode(db, &normalizer, task))
        .collect::<Result<_>>()?;
    let validation = encode(&data.validation, &normalizer, task)?;
    let classes = task.classes();

    let complete = |db: &Encoded| (0..classes).all(|c| db.labels.contains(&c));
    let mut starved_idx: Vec<usize> = dbs
        .iter()
        .take_while(|db| !complete(db))
        .enumerate()
        .map(|(i, _)| i)
        .collect();
    if starved_idx.is_empty() {
        starved_idx.push(0);
    }
    let join = |idx: &[usize]| Encoded {
        inputs: idx.iter().flat_map(|&i| dbs[i].inputs.clone()).collect(),
        labels: idx.iter().flat_map(|&i| dbs[i].labels.clone()).collect(),
    };
    let pooled_data = join(&(0..dbs.len()).collect::<Vec<_>>());
    let starved_data = join(&starved_idx);

    let mlp_cfg = MlpConfig {
        inputs: bushing_core::features::FEATURE_COUNT,
        outputs: mlp::output_width(classes),
        ..cfg.baseline_mlp()
    };
    let mut results = Vec::new();
    for (name, d) in [("pooled", &pooled_data), ("starved", &starved_data)] {
        let (model, train_seconds) = train_mlp(mlp_cfg.clone(), d, classes, clock)?;
        let mut m = diagnosis::evaluate(
            &model,
            &validation.inputs,
            &validation.labels,
            task.positive(),
            clock,
        )?;
        m.train_seconds = millis(train_seconds);
        m.classify_seconds = millis(m.classify_seconds);
        if let Some(dir) = out {
            fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
            let snap = Snapshot::new(
                task.level(),
                normalizer.clone(),
                SnapshotModel::Single {
                    model: Model::Mlp(model),
                },
            );
            snap.save(&dir.join(format!("baseline_{name}.json")))?;
        }
        results.push(m);
    }
    let starved = results.pop().expect("two models");
    let pooled = results.pop().expect("two models");
    let report = BaselineReport {
        format: REPORT_FORMAT.into(),
        version: REPORT_VERSION,
        seed: cfg.seed,
        classes: task.class_names(),
        starved_databases: starved_idx.iter().map(|i| i + 1).collect(),
        pooled,
        starved,
    };
    if let Some(dir) = out {
        crate::report::write_baseline(dir, &report, format)?;
    }
    Ok(report)
}

/// Writes generated train and validation CSV files.
pub fn run_gen_data(cfg: &ExperimentConfig, out: &Path) -> Result<Dataset> {
    let data = generate(cfg)?;
    fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;
    csv_io::write_labeled(&out.join("train.csv"), &data.train)?;
    csv_io::write_labeled(&out.join("validation.csv"), &data.validation)?;
    Ok(data)
}
