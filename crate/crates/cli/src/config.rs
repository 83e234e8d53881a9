//! Experiment configuration files (TOML).
//!
//! Every key except `kind` and `seed` is optional; missing values take the
//! defaults of the experiment kind. Relative data paths resolve against the
//! directory holding the config file.
//!
//! ```toml
//! kind = "incremental-level1"
//! seed = 7
//! output_dir = "out"
//! tdcg = "standard"            # or "exclude-co"
//!
//! [data]                       # generated in memory when paths are absent
//! train = "train.csv"
//! validation = "validation.csv"
//! train_size = 1500
//! validation_size = 4000
//!
//! [generator]
//! proportions = { Normal = 0.5, PartialDischarge = 0.2, Thermal = 0.2, UnknownSource = 0.1 }
//!
//! [databases]
//! sizes = [300, 300, 300, 300, 300]
//! schedule = [["PartialDischarge", "Thermal"], ...]   # new-class only
//!
//! [session]
//! hypotheses = 20
//! tr_fraction = 0.6667
//! max_retries = 1000
//!
//! [weak_learner]
//! hidden = 5
//! max_iterations = 5
//! alpha = 0.01
//!
//! [batch]
//! hidden = 10
//! max_iterations = 300
//! hidden_candidates = [3, 5, 10]
//! center_candidates = [10, 20, 40]
//! rbf_width_rules = ["em-variance", "max-center-distance"]
//! svm_c = [1.0, 10.0]
//! svm_widths = [0.5]
//! folds = 3
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use bushing_core::datagen::default_proportions;
use bushing_core::diagnosis::BatchSettings;
use bushing_core::features::{FaultClass, TdcgVariant};
use bushing_core::learnpp::{MlpLearner, SessionConfig};
use bushing_core::mlp::MlpConfig;
use bushing_core::rbf::WidthRule;
use bushing_core::svm::Kernel;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    GenData,
    BatchCompare,
    IncrementalLevel1,
    IncrementalNewClass,
    BatchBaseline,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::GenData => "gen-data",
            ExperimentKind::BatchCompare => "batch-compare",
            ExperimentKind::IncrementalLevel1 => "incremental-level1",
            ExperimentKind::IncrementalNewClass => "incremental-new-class",
            ExperimentKind::BatchBaseline => "batch-baseline",
        }
    }

    /// Whether the experiment works on Faulty samples with level-2 labels.
    pub fn is_new_class(self) -> bool {
        matches!(
            self,
            ExperimentKind::IncrementalNewClass | ExperimentKind::BatchBaseline
        )
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSection {
    pub train: Option<PathBuf>,
    pub validation: Option<PathBuf>,
    pub train_size: Option<usize>,
    pub validation_size: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorSection {
    pub proportions: Option<BTreeMap<String, f64>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatabaseSection {
    pub sizes: Option<Vec<usize>>,
    pub schedule: Option<Vec<Vec<String>>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SessionSection {
    pub hypotheses: Option<usize>,
    pub tr_fraction: Option<f64>,
    pub max_retries: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeakLearnerSection {
    pub hidden: Option<usize>,
    pub max_iterations: Option<usize>,
    pub alpha: Option<f64>,
    pub error_goal: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BatchSection {
    pub hidden: Option<usize>,
    pub max_iterations: Option<usize>,
    pub hidden_candidates: Option<Vec<usize>>,
    pub center_candidates: Option<Vec<usize>>,
    pub rbf_width_rules: Option<Vec<WidthRule>>,
    pub svm_c: Option<Vec<f64>>,
    pub svm_widths: Option<Vec<f64>>,
    pub folds: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub seed: u64,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub tdcg: TdcgVariant,
    #[serde(default)]
    pub data: DataSection,
    #[serde(default)]
    pub generator: GeneratorSection,
    #[serde(default)]
    pub databases: DatabaseSection,
    #[serde(default)]
    pub session: SessionSection,
    #[serde(default)]
    pub weak_learner: WeakLearnerSection,
    #[serde(default)]
    pub batch: BatchSection,
}

impl ExperimentConfig {
    /// All-default configuration for `kind`.
    pub fn new(kind: ExperimentKind, seed: u64) -> Self {
        ExperimentConfig {
            kind,
            seed,
            output_dir: None,
            tdcg: TdcgVariant::Standard,
            data: DataSection::default(),
            generator: GeneratorSection::default(),
            databases: DatabaseSection::default(),
            session: SessionSection::default(),
            weak_learner: WeakLearnerSection::default(),
            batch: BatchSection::default(),
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut cfg = Self::parse(&text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [
            &mut cfg.data.train,
            &mut cfg.data.validation,
            &mut cfg.output_dir,
        ]
        .into_iter()
        .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Checks everything that can be checked without touching the disk.
    pub fn validate(&self) -> Result<()> {
        self.proportions()?;
        self.schedule()?;
        let sizes = self.database_sizes();
        if sizes.is_empty() || sizes.contains(&0) {
            return Err(CliError::Config(
                "database sizes must be nonempty and positive".into(),
            ));
        }
        if self.data.train.is_some() != self.data.validation.is_some() {
            return Err(CliError::Config(
                "data.train and data.validation must be given together".into(),
            ));
        }
        if self.train_size() == 0 || self.validation_size() == 0 {
            return Err(CliError::Config(
                "train and validation sizes must be positive".into(),
            ));
        }
        if self.kind.is_new_class() && self.schedule()?.len() != sizes.len() {
            return Err(CliError::Config(
                "schedule needs one class list per database".into(),
            ));
        }
        self.session_config(0).validate()?;
        Ok(())
    }

    /// Checks that referenced data files exist.
    pub fn check_paths(&self) -> Result<()> {
        for p in [&self.data.train, &self.data.validation]
            .into_iter()
            .flatten()
        {
            if !p.is_file() {
                return Err(CliError::Config(format!(
                    "data file {} does not exist",
                    p.display()
                )));
            }
        }
        Ok(())
    }

    pub fn train_size(&self) -> usize {
        self.data
            .train_size
            .unwrap_or(if self.kind.is_new_class() { 1000 } else { 1500 })
    }

    pub fn validation_size(&self) -> usize {
        self.data
            .validation_size
            .unwrap_or(if self.kind.is_new_class() { 2000 } else { 4000 })
    }

    pub fn database_sizes(&self) -> Vec<usize> {
        self.databases
            .sizes
            .clone()
            .unwrap_or_else(|| vec![if self.kind.is_new_class() { 200 } else { 300 }; 5])
    }

    /// Generator class mix. New-class experiments default to equal thirds
    /// of the three fault types.
    pub fn proportions(&self) -> Result<Vec<(FaultClass, f64)>> {
        match &self.generator.proportions {
            Some(map) => map
                .iter()
                .map(|(name, &p)| {
                    let class: FaultClass =
                        name.parse().map_err(|e| CliError::Config(format!("{e}")))?;
                    Ok((class, p))
                })
                .collect(),
            None if self.kind.is_new_class() => Ok(vec![
                (FaultClass::PartialDischarge, 1.0 / 3.0),
                (FaultClass::Thermal, 1.0 / 3.0),
                (FaultClass::UnknownSource, 1.0 / 3.0),
            ]),
            None => Ok(default_proportions()),
        }
    }

    /// Allowed classes per database for the new-class experiment: the first
    /// two databases hold PartialDischarge and Thermal only.
    pub fn schedule(&self) -> Result<Vec<Vec<FaultClass>>> {
        match &self.databases.schedule {
            Some(s) => s
                .iter()
                .map(|names| {
                    names
                        .iter()
                        .map(|n| {
                            n.parse::<FaultClass>()
                                .map_err(|e| CliError::Config(format!("{e}")))
                        })
                        .collect()
                })
                .collect(),
            None => {
                let early = vec![FaultClass::PartialDischarge, FaultClass::Thermal];
                let all = vec![
                    FaultClass::PartialDischarge,
                    FaultClass::Thermal,
                    FaultClass::UnknownSource,
                ];
                let n = self.database_sizes().len();
                Ok((0..n)
                    .map(|k| if k < 2 { early.clone() } else { all.clone() })
                    .collect())
            }
        }
    }

    /// Session settings for session `k`; each session draws from its own
    /// seed.
    pub fn session_config(&self, k: usize) -> SessionConfig {
        let d = SessionConfig::default();
        SessionConfig {
            hypotheses: self.session.hypotheses.unwrap_or(d.hypotheses),
            tr_fraction: self.session.tr_fraction.unwrap_or(d.tr_fraction),
            max_retries: self.session.max_retries.unwrap_or(d.max_retries),
            seed: sub_seed(self.seed, 100 + k as u64),
        }
    }

    pub fn weak_learner(&self) -> MlpLearner {
        let d = MlpLearner::default();
        MlpLearner {
            hidden: self.weak_learner.hidden.unwrap_or(d.hidden),
            max_iterations: self.weak_learner.max_iterations.unwrap_or(d.max_iterations),
            alpha: self.weak_learner.alpha.unwrap_or(d.alpha),
            error_goal: self.weak_learner.error_goal.or(d.error_goal),
        }
    }

    /// Fixed MLP used by the batch baseline.
    pub fn baseline_mlp(&self) -> MlpConfig {
        MlpConfig {
            hidden: self.batch.hidden.unwrap_or(10),
            max_iterations: self.batch.max_iterations.unwrap_or(300),
            seed: sub_seed(self.seed, seeds::BASELINE),
            ..MlpConfig::default()
        }
    }

    pub fn batch_settings(&self) -> BatchSettings {
        let d = BatchSettings::default();
        let b = &self.batch;
        let mut kernels = vec![Kernel::Linear];
        match &b.svm_widths {
            Some(ws) => kernels.extend(ws.iter().map(|&width| Kernel::Gaussian { width })),
            None => kernels = d.svm_kernels.clone(),
        }
        BatchSettings {
            mlp: MlpConfig {
                max_iterations: b.max_iterations.unwrap_or(d.mlp.max_iterations),
                ..d.mlp
            },
            hidden_candidates: b.hidden_candidates.clone().unwrap_or(d.hidden_candidates),
            rbf: d.rbf,
            center_candidates: b.center_candidates.clone().unwrap_or(d.center_candidates),
            width_rules: b.rbf_width_rules.clone().unwrap_or(d.width_rules),
            svm: d.svm,
            svm_cs: b.svm_c.clone().unwrap_or(d.svm_cs),
            svm_kernels: kernels,
            folds: b.folds.unwrap_or(d.folds),
        }
        .with_seed(sub_seed(self.seed, seeds::BATCH))
    }
}

/// Tags for deriving independent seeds from the experiment seed.
pub mod seeds {
    pub const GENERATE: u64 = 1;
    pub const HOLDOUT: u64 = 2;
    pub const DATABASES: u64 = 3;
    pub const BASELINE: u64 = 4;
    pub const BATCH: u64 = 5;
}

/// SplitMix64 mix of `seed` and `tag`.
pub fn sub_seed(seed: u64, tag: u64) -> u64 {
    let mut z = seed ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
