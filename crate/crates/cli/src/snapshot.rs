//! JSON model snapshots.
//!
//! A snapshot carries the feature order, the normalizer fitted on the
//! training set and either a single model or a Learn++ ensemble together
//! with the session settings needed to continue training it.

use std::fs;
use std::path::Path;

use bushing_core::classifier::{Classify, Model};
use bushing_core::features::{
    normalize, FeatureVector, GasRecord, NormalizationParams, FEATURE_ORDER,
};
use bushing_core::learnpp::{Ensemble, MlpLearner, SessionConfig};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

pub const FORMAT: &str = "bushing-model";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    Level1,
    Level2,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum SnapshotModel {
    Single {
        model: Model,
    },
    Ensemble {
        ensemble: Ensemble<Model>,
        weak_learner: MlpLearner,
        /// Settings of the first session; later sessions differ only in
        /// seed, derived from `experiment_seed`.
        session: SessionConfig,
        experiment_seed: u64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub format: String,
    pub version: u32,
    pub feature_order: Vec<String>,
    pub level: Level,
    pub normalizer: NormalizationParams,
    pub model: SnapshotModel,
}

impl Snapshot {
    pub fn new(level: Level, normalizer: NormalizationParams, model: SnapshotModel) -> Self {
        Snapshot {
            format: FORMAT.into(),
            version: VERSION,
            feature_order: FEATURE_ORDER.iter().map(|s| s.to_string()).collect(),
            level,
            normalizer,
            model,
        }
    }

    pub fn kind(&self) -> &'static str {
        match &self.model {
            SnapshotModel::Single { model } => model.kind(),
            SnapshotModel::Ensemble { .. } => "learnpp",
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("snapshot serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let snap: Snapshot = serde_json::from_str(text)?;
        if snap.format != FORMAT {
            return Err(CliError::Snapshot(format!(
                "unexpected format tag `{}`",
                snap.format
            )));
        }
        if snap.version != VERSION {
            return Err(CliError::Snapshot(format!(
                "unsupported version {}",
                snap.version
            )));
        }
        if snap
            .feature_order
            .iter()
            .map(String::as_str)
            .ne(FEATURE_ORDER.iter().copied())
        {
            return Err(CliError::Snapshot(
                "feature order differs from this build".into(),
            ));
        }
        Ok(snap)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()).map_err(|e| CliError::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn features(&self, record: &GasRecord) -> Result<FeatureVector> {
        Ok(normalize(record, &self.normalizer)?)
    }
}

impl Classify for Snapshot {
    fn input_dim(&self) -> usize {
        match &self.model {
            SnapshotModel::Single { model } => model.input_dim(),
            SnapshotModel::Ensemble { ensemble, .. } => ensemble.input_dim(),
        }
    }

    fn n_classes(&self) -> usize {
        match &self.model {
            SnapshotModel::Single { model } => model.n_classes(),
            SnapshotModel::Ensemble { ensemble, .. } => ensemble.n_classes(),
        }
    }

    fn predict(&self, x: &[f64]) -> bushing_core::Result<usize> {
        match &self.model {
            SnapshotModel::Single { model } => model.predict(x),
            SnapshotModel::Ensemble { ensemble, .. } => ensemble.predict(x),
        }
    }

    fn classify_with_confidence(&self, x: &[f64]) -> bushing_core::Result<(usize, Vec<f64>)> {
        match &self.model {
            SnapshotModel::Single { model } => model.classify_with_confidence(x),
            SnapshotModel::Ensemble { ensemble, .. } => ensemble.classify_with_confidence(x),
        }
    }
}
