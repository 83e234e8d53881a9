//! Two-level bushing diagnosis and classifier metrics.
//!
//! Level 1 separates Normal from Faulty. Only Faulty samples reach level 2,
//! which names the fault: partial discharge, thermal, or unknown source.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::classifier::{Classify, Model};
use crate::error::{Error, Result};
use crate::features::{FeatureVector, Level1Label, Level2Label};
use crate::mlp::{self, MlpConfig, TrainingSet};
use crate::rbf::{self, RbfConfig, WidthRule};
use crate::svm::{self, Kernel, SvmConfig};

/// Elapsed-time source. Core code never reads a clock on its own.
pub trait Clock {
    fn now_seconds(&self) -> f64;
}

/// Reports zero for every reading.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoClock;

impl Clock for NoClock {
    fn now_seconds(&self) -> f64 {
        0.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnosis {
    pub level1: Level1Label,
    /// Per-class confidence, indexed as [`Level1Label::index`].
    pub level1_confidence: Vec<f64>,
    pub level2: Option<Level2Label>,
    pub level2_confidence: Option<Vec<f64>>,
}

/// Runs level 1 and, for Faulty predictions, level 2.
pub fn diagnose<A: Classify + ?Sized, B: Classify + ?Sized>(
    level1: &A,
    level2: &B,
    x: &FeatureVector,
) -> Result<Diagnosis> {
    diagnose_inputs(level1, x.as_slice(), level2, x.as_slice())
}

/// Like [`diagnose`] for levels whose inputs were normalized separately.
pub fn diagnose_inputs<A: Classify + ?Sized, B: Classify + ?Sized>(
    level1: &A,
    x1: &[f64],
    level2: &B,
    x2: &[f64],
) -> Result<Diagnosis> {
    let (c1, g1) = level1.classify_with_confidence(x1)?;
    let l1 = Level1Label::from_index(c1).ok_or(Error::LabelOutOfRange { label: c1, size: 2 })?;
    let (l2, g2) = match l1 {
        Level1Label::Normal => (None, None),
        Level1Label::Faulty => {
            let (c2, g2) = level2.classify_with_confidence(x2)?;
            let l2 =
                Level2Label::from_index(c2).ok_or(Error::LabelOutOfRange { label: c2, size: 3 })?;
            (Some(l2), Some(g2))
        }
    };
    Ok(Diagnosis {
        level1: l1,
        level1_confidence: g1,
        level2: l2,
        level2_confidence: g2,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub accuracy: f64,
    /// Recall of the positive class; `None` with no positive samples.
    pub sensitivity: Option<f64>,
    /// Recall of the other classes taken together; `None` with no such
    /// samples.
    pub specificity: Option<f64>,
    /// `confusion[actual][predicted]`.
    pub confusion: Vec<Vec<usize>>,
    pub train_seconds: f64,
    pub classify_seconds: f64,
}

impl MetricsReport {
    pub fn total(&self) -> usize {
        self.confusion.iter().flatten().sum()
    }

    /// Per-class recall; `None` for classes absent from the data.
    pub fn recall(&self) -> Vec<Option<f64>> {
        self.confusion
            .iter()
            .enumerate()
            .map(|(c, row)| {
                let n: usize = row.iter().sum();
                (n > 0).then(|| row[c] as f64 / n as f64)
            })
            .collect()
    }
}

/// Metrics from predictions against labels in `0..classes`.
pub fn metrics(
    predictions: &[usize],
    labels: &[usize],
    classes: usize,
    positive: usize,
) -> Result<MetricsReport> {
    if labels.is_empty() {
        return Err(Error::EmptyData);
    }
    if predictions.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: labels.len(),
            actual: predictions.len(),
        });
    }
    if positive >= classes {
        return Err(Error::LabelOutOfRange {
            label: positive,
            size: classes,
        });
    }
    let mut confusion = vec![vec![0usize; classes]; classes];
    for (&p, &y) in predictions.iter().zip(labels) {
        if p >= classes || y >= classes {
            return Err(Error::LabelOutOfRange {
                label: p.max(y),
                size: classes,
            });
        }
        confusion[y][p] += 1;
    }
    let correct: usize = (0..classes).map(|c| confusion[c][c]).sum();
    let pos_total: usize = confusion[positive].iter().sum();
    let neg_total = labels.len() - pos_total;
    let tp = confusion[positive][positive];
    let tn: usize = (0..classes)
        .filter(|&a| a != positive)
        .map(|a| {
            (0..classes)
                .filter(|&p| p != positive)
                .map(|p| confusion[a][p])
                .sum::<usize>()
        })
        .sum();
    Ok(MetricsReport {
        accuracy: correct as f64 / labels.len() as f64,
        sensitivity: (pos_total > 0).then(|| tp as f64 / pos_total as f64),
        specificity: (neg_total > 0).then(|| tn as f64 / neg_total as f64),
        confusion,
        train_seconds: 0.0,
        classify_seconds: 0.0,
    })
}

/// Classifies `inputs`, timing the pass with `clock`.
pub fn evaluate<C: Classify + ?Sized, K: Clock + ?Sized>(
    model: &C,
    inputs: &[Vec<f64>],
    labels: &[usize],
    positive: usize,
    clock: &K,
) -> Result<MetricsReport> {
    if inputs.is_empty() {
        return Err(Error::EmptyData);
    }
    let start = clock.now_seconds();
    let predictions: Vec<usize> = inputs
        .iter()
        .map(|x| model.predict(x))
        .collect::<Result<_>>()?;
    let elapsed = clock.now_seconds() - start;
    let mut report = metrics(&predictions, labels, model.n_classes(), positive)?;
    report.classify_seconds = elapsed;
    Ok(report)
}

/// Model-selection settings for the three batch classifiers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchSettings {
    pub mlp: MlpConfig,
    pub hidden_candidates: Vec<usize>,
    pub rbf: RbfConfig,
    pub center_candidates: Vec<usize>,
    pub width_rules: Vec<WidthRule>,
    pub svm: SvmConfig,
    pub svm_cs: Vec<f64>,
    pub svm_kernels: Vec<Kernel>,
    pub folds: usize,
}

impl Default for BatchSettings {
    fn default() -> Self {
        BatchSettings {
            mlp: MlpConfig {
                max_iterations: 300,
                ..MlpConfig::default()
            },
            hidden_candidates: vec![3, 5, 10],
            rbf: RbfConfig::default(),
            center_candidates: vec![10, 20, 40],
            width_rules: vec![WidthRule::EmVariance, WidthRule::MaxCenterDistance],
            svm: SvmConfig::default(),
            svm_cs: vec![1.0, 10.0],
            svm_kernels: vec![Kernel::Linear, Kernel::Gaussian { width: 0.5 }],
            folds: 3,
        }
    }
}

impl BatchSettings {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.mlp.seed = seed;
        self.rbf.seed = seed;
        self.svm.seed = seed;
        self
    }
}

/// One row of the comparison table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub classifier: String,
    /// Chosen hyperparameters in readable form.
    pub selection: String,
    pub metrics: MetricsReport,
    #[serde(skip)]
    pub model: Option<Model>,
}

/// Trains MLP, RBF and SVM on the same data, each with its own model
/// selection, and evaluates them on the same test set. Training time covers
/// the final fit only.
#[allow(clippy::too_many_arguments)]
pub fn compare_batch_classifiers<K: Clock + ?Sized>(
    train_x: &[Vec<f64>],
    train_y: &[usize],
    test_x: &[Vec<f64>],
    test_y: &[usize],
    classes: usize,
    positive: usize,
    settings: &BatchSettings,
    clock: &K,
) -> Result<Vec<ComparisonRow>> {
    if train_x.is_empty() || test_x.is_empty() {
        return Err(Error::EmptyData);
    }
    let d = train_x[0].len();
    let data = TrainingSet::from_labels(train_x.to_vec(), train_y, classes)?;
    let outputs = mlp::output_width(classes);
    let mut rows = Vec::with_capacity(3);

    let template = MlpConfig {
        inputs: d,
        outputs,
        ..settings.mlp.clone()
    };
    let hidden = mlp::search_hidden_units(
        &template,
        &data,
        &settings.hidden_candidates,
        settings.folds,
    )?
    .best;
    let cfg = MlpConfig { hidden, ..template };
    let start = clock.now_seconds();
    let (model, _) = mlp::train_scg(&cfg, &data)?;
    let train_seconds = clock.now_seconds() - start;
    rows.push(finish(
        "MLP",
        alloc::format!("hidden={hidden}"),
        Model::Mlp(model),
        train_seconds,
        test_x,
        test_y,
        positive,
        clock,
    )?);

    let template = RbfConfig {
        outputs,
        ..settings.rbf.clone()
    };
    let (centers, width_rule) = rbf::search_basis(
        &template,
        &data,
        &settings.center_candidates,
        &settings.width_rules,
        settings.folds,
    )?;
    let cfg = RbfConfig {
        centers,
        width_rule,
        ..template
    };
    let start = clock.now_seconds();
    let model = rbf::train(&cfg, &data)?;
    let train_seconds = clock.now_seconds() - start;
    rows.push(finish(
        "RBF",
        alloc::format!("centers={centers} width={}", width_rule.name()),
        Model::Rbf(model),
        train_seconds,
        test_x,
        test_y,
        positive,
        clock,
    )?);

    let cv = svm::cross_validate(
        train_x,
        train_y,
        classes,
        &settings.svm_cs,
        &settings.svm_kernels,
        settings.folds,
        &settings.svm,
    )?;
    let start = clock.now_seconds();
    let model = svm::train(train_x, train_y, classes, &cv.best)?;
    let train_seconds = clock.now_seconds() - start;
    let selection = alloc::format!("C={} kernel={}", cv.best.c, kernel_name(&cv.best.kernel));
    rows.push(finish(
        "SVM",
        selection,
        Model::Svm(model),
        train_seconds,
        test_x,
        test_y,
        positive,
        clock,
    )?);

    Ok(rows)
}

fn kernel_name(k: &Kernel) -> String {
    match *k {
        Kernel::Linear => "linear".into(),
        Kernel::Polynomial { degree, offset } => {
            alloc::format!("poly(degree={degree},offset={offset})")
        }
        Kernel::Gaussian { width } => alloc::format!("gaussian(width={width})"),
    }
}

#[allow(clippy::too_many_arguments)]
fn finish<K: Clock + ?Sized>(
    name: &str,
    selection: String,
    model: Model,
    train_seconds: f64,
    test_x: &[Vec<f64>],
    test_y: &[usize],
    positive: usize,
    clock: &K,
) -> Result<ComparisonRow> {
    let mut metrics = evaluate(&model, test_x, test_y, positive, clock)?;
    metrics.train_seconds = train_seconds;
    Ok(ComparisonRow {
        classifier: name.into(),
        selection,
        metrics,
        model: Some(model),
    })
}
