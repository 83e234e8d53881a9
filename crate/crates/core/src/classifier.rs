//! The common classify interface shared by MLP, RBF and SVM models and by the
//! Learn++ ensemble.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mlp::MlpModel;
use crate::rbf::RbfModel;
use crate::svm::SvmClassifier;

pub trait Classify {
    fn input_dim(&self) -> usize;

    /// Size of the label space; predictions lie in `0..n_classes()`.
    fn n_classes(&self) -> usize;

    fn predict(&self, x: &[f64]) -> Result<usize>;

    /// Predicted class with a per-class confidence vector summing to one.
    /// Single models report all confidence on their prediction.
    fn classify_with_confidence(&self, x: &[f64]) -> Result<(usize, Vec<f64>)> {
        let class = self.predict(x)?;
        let mut gamma = vec![0.0; self.n_classes()];
        gamma[class] = 1.0;
        Ok((class, gamma))
    }
}

impl<T: Classify + ?Sized> Classify for &T {
    fn input_dim(&self) -> usize {
        (**self).input_dim()
    }
    fn n_classes(&self) -> usize {
        (**self).n_classes()
    }
    fn predict(&self, x: &[f64]) -> Result<usize> {
        (**self).predict(x)
    }
    fn classify_with_confidence(&self, x: &[f64]) -> Result<(usize, Vec<f64>)> {
        (**self).classify_with_confidence(x)
    }
}

/// Any trained single model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Model {
    Mlp(MlpModel),
    Rbf(RbfModel),
    Svm(SvmClassifier),
}

impl Model {
    pub fn kind(&self) -> &'static str {
        match self {
            Model::Mlp(_) => "mlp",
            Model::Rbf(_) => "rbf",
            Model::Svm(_) => "svm",
        }
    }
}

impl Classify for Model {
    fn input_dim(&self) -> usize {
        match self {
            Model::Mlp(m) => m.input_dim(),
            Model::Rbf(m) => m.input_dim(),
            Model::Svm(m) => m.input_dim(),
        }
    }

    fn n_classes(&self) -> usize {
        match self {
            Model::Mlp(m) => m.n_classes(),
            Model::Rbf(m) => m.n_classes(),
            Model::Svm(m) => m.n_classes(),
        }
    }

    fn predict(&self, x: &[f64]) -> Result<usize> {
        match self {
            Model::Mlp(m) => m.predict(x),
            Model::Rbf(m) => m.predict(x),
            Model::Svm(m) => m.predict(x),
        }
    }
}

/// Fraction of `inputs` whose prediction equals the label.
pub fn accuracy<C: Classify + ?Sized>(
    model: &C,
    inputs: &[Vec<f64>],
    labels: &[usize],
) -> Result<f64> {
    if inputs.is_empty() {
        return Err(Error::EmptyData);
    }
    let mut correct = 0usize;
    for (x, &y) in inputs.iter().zip(labels) {
        correct += usize::from(model.predict(x)? == y);
    }
    Ok(correct as f64 / inputs.len() as f64)
}
