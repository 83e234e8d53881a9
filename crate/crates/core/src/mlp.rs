//! Two-layer perceptron trained by scaled conjugate gradient on a
//! cross-entropy error with weight decay.
//!
//! Hidden units use `tanh`. A single output (`K = 1`) is a logistic sigmoid
//! with the binary cross-entropy; `K > 1` outputs are a softmax with the
//! multiclass cross-entropy. The error is
//!
//! ```text
//! E = beta * CE(data) + alpha / 2 * sum(w^2)
//! ```
//!
//! where the decay sum runs over every non-bias weight. Log arguments are
//! floored at 1e-12.
//!
//! Weights are stored row-major with the bias as the last row: layer 1 is
//! `(d + 1) x N`, layer 2 is `(N + 1) x K`. The flat parameter vector is layer
//! 1 followed by layer 2.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::classifier::Classify;
use crate::cv;
use crate::error::{Error, Result};
use crate::math;
use crate::optim::{minimize_scg, Objective, ScgOptions, ScgReport};
use crate::rng::{self, purpose};

pub(crate) const LOG_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpConfig {
    pub inputs: usize,
    pub hidden: usize,
    pub outputs: usize,
    /// Weight-decay coefficient.
    pub alpha: f64,
    /// Scale of the data term.
    pub beta: f64,
    pub max_iterations: usize,
    pub tolerance: f64,
    pub seed: u64,
}

impl Default for MlpConfig {
    fn default() -> Self {
        MlpConfig {
            inputs: 10,
            hidden: 5,
            outputs: 1,
            alpha: 0.01,
            beta: 1.0,
            max_iterations: 200,
            tolerance: 1e-6,
            seed: 0,
        }
    }
}

impl MlpConfig {
    pub fn validate(&self) -> Result<()> {
        if self.inputs == 0 || self.hidden == 0 || self.outputs == 0 {
            return Err(Error::InvalidConfig(
                "MLP dimensions must be at least 1".into(),
            ));
        }
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return Err(Error::InvalidConfig(
                "weight decay must be non-negative".into(),
            ));
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(Error::InvalidConfig("data scale must be positive".into()));
        }
        Ok(())
    }

    fn layer1_len(&self) -> usize {
        (self.inputs + 1) * self.hidden
    }

    fn layer2_len(&self) -> usize {
        (self.hidden + 1) * self.outputs
    }

    pub fn weight_count(&self) -> usize {
        self.layer1_len() + self.layer2_len()
    }

    fn scg_options(&self) -> ScgOptions {
        ScgOptions {
            max_iterations: self.max_iterations,
            gradient_tolerance: self.tolerance,
            error_goal: None,
        }
    }
}

/// Inputs with 0/1 targets. With one output the target row is a single
/// binary value; otherwise it is one-hot.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainingSet {
    pub inputs: Vec<Vec<f64>>,
    pub targets: Vec<Vec<f64>>,
}

impl TrainingSet {
    /// Encodes integer class labels. Two classes use a single binary target
    /// (class 1 is the positive output); more use one-hot rows.
    pub fn from_labels(inputs: Vec<Vec<f64>>, labels: &[usize], classes: usize) -> Result<Self> {
        if inputs.len() != labels.len() {
            return Err(Error::DimensionMismatch {
                expected: inputs.len(),
                actual: labels.len(),
            });
        }
        let width = output_width(classes);
        let mut targets = Vec::with_capacity(labels.len());
        for &label in labels {
            if label >= classes {
                return Err(Error::LabelOutOfRange {
                    label,
                    size: classes,
                });
            }
            let mut t = vec![0.0; width];
            if width == 1 {
                t[0] = if label == 1 { 1.0 } else { 0.0 };
            } else {
                t[label] = 1.0;
            }
            targets.push(t);
        }
        Ok(TrainingSet { inputs, targets })
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    /// Class labels recovered from the targets.
    pub fn labels(&self) -> Vec<usize> {
        self.targets
            .iter()
            .map(|t| {
                if t.len() == 1 {
                    usize::from(t[0] >= 0.5)
                } else {
                    math::argmax(t)
                }
            })
            .collect()
    }

    fn check(&self, inputs: usize, outputs: usize) -> Result<()> {
        if self.is_empty() {
            return Err(Error::EmptyData);
        }
        if self.targets.len() != self.inputs.len() {
            return Err(Error::DimensionMismatch {
                expected: self.inputs.len(),
                actual: self.targets.len(),
            });
        }
        for (x, t) in self.inputs.iter().zip(&self.targets) {
            if x.len() != inputs {
                return Err(Error::DimensionMismatch {
                    expected: inputs,
                    actual: x.len(),
                });
            }
            if t.len() != outputs {
                return Err(Error::DimensionMismatch {
                    expected: outputs,
                    actual: t.len(),
                });
            }
        }
        Ok(())
    }

    fn subset(&self, idx: &[usize]) -> TrainingSet {
        TrainingSet {
            inputs: idx.iter().map(|&i| self.inputs[i].clone()).collect(),
            targets: idx.iter().map(|&i| self.targets[i].clone()).collect(),
        }
    }
}

/// Output units needed for `classes` mutually exclusive classes.
pub fn output_width(classes: usize) -> usize {
    if classes <= 2 {
        1
    } else {
        classes
    }
}

/// Applies the output nonlinearity in place: sigmoid for one unit, softmax
/// otherwise.
pub(crate) fn activate_outputs(out: &mut [f64]) {
    if out.len() == 1 {
        out[0] = math::sigmoid(out[0]);
    } else {
        let max = out.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for o in out.iter_mut() {
            *o = math::exp(*o - max);
            sum += *o;
        }
        for o in out.iter_mut() {
            *o /= sum;
        }
    }
}

/// Cross-entropy of one activated output row against its targets.
pub(crate) fn cross_entropy(y: &[f64], t: &[f64]) -> f64 {
    if y.len() == 1 {
        let (y, t) = (y[0], t[0]);
        -(t * math::ln(y.max(LOG_FLOOR)) + (1.0 - t) * math::ln((1.0 - y).max(LOG_FLOOR)))
    } else {
        -y.iter()
            .zip(t)
            .map(|(y, t)| t * math::ln(y.max(LOG_FLOOR)))
            .sum::<f64>()
    }
}

/// Class decision from activated outputs.
pub(crate) fn decide(y: &[f64]) -> usize {
    if y.len() == 1 {
        usize::from(y[0] >= 0.5)
    } else {
        math::argmax(y)
    }
}

struct Layout<'a> {
    cfg: &'a MlpConfig,
}

impl Layout<'_> {
    fn split<'w>(&self, w: &'w [f64]) -> (&'w [f64], &'w [f64]) {
        w.split_at(self.cfg.layer1_len())
    }

    fn forward(&self, w: &[f64], x: &[f64], hidden: &mut [f64], out: &mut [f64]) {
        let (d, n, k) = (self.cfg.inputs, self.cfg.hidden, self.cfg.outputs);
        let (w1, w2) = self.split(w);
        for j in 0..n {
            let mut a = w1[d * n + j];
            for i in 0..d {
                a += x[i] * w1[i * n + j];
            }
            hidden[j] = math::tanh(a);
        }
        for c in 0..k {
            let mut a = w2[n * k + c];
            for j in 0..n {
                a += hidden[j] * w2[j * k + c];
            }
            out[c] = a;
        }
        activate_outputs(out);
    }

    fn decay(&self, w: &[f64]) -> f64 {
        let (d, n, k) = (self.cfg.inputs, self.cfg.hidden, self.cfg.outputs);
        let (w1, w2) = self.split(w);
        let s1: f64 = w1[..d * n].iter().map(|v| v * v).sum();
        let s2: f64 = w2[..n * k].iter().map(|v| v * v).sum();
        s1 + s2
    }

    fn error(&self, w: &[f64], data: &TrainingSet) -> f64 {
        let mut hidden = vec![0.0; self.cfg.hidden];
        let mut out = vec![0.0; self.cfg.outputs];
        let mut ce = 0.0;
        for (x, t) in data.inputs.iter().zip(&data.targets) {
            self.forward(w, x, &mut hidden, &mut out);
            ce += cross_entropy(&out, t);
        }
        self.cfg.beta * ce + 0.5 * self.cfg.alpha * self.decay(w)
    }

    fn gradient(&self, w: &[f64], data: &TrainingSet, grad: &mut [f64]) {
        let (d, n, k) = (self.cfg.inputs, self.cfg.hidden, self.cfg.outputs);
        let beta = self.cfg.beta;
        let (_, w2) = self.split(w);
        grad.iter_mut().for_each(|g| *g = 0.0);
        let mut hidden = vec![0.0; n];
        let mut out = vec![0.0; k];
        let mut delta_out = vec![0.0; k];
        let mut delta_hidden = vec![0.0; n];
        let l1 = self.cfg.layer1_len();
        for (x, t) in data.inputs.iter().zip(&data.targets) {
            self.forward(w, x, &mut hidden, &mut out);
            for c in 0..k {
                delta_out[c] = beta * (out[c] - t[c]);
            }
            let g2 = &mut grad[l1..];
            for j in 0..n {
                for c in 0..k {
                    g2[j * k + c] += delta_out[c] * hidden[j];
                }
            }
            for c in 0..k {
                g2[n * k + c] += delta_out[c];
            }
            for j in 0..n {
                let back: f64 = (0..k).map(|c| w2[j * k + c] * delta_out[c]).sum();
                delta_hidden[j] = (1.0 - hidden[j] * hidden[j]) * back;
            }
            let g1 = &mut grad[..l1];
            for i in 0..d {
                for j in 0..n {
                    g1[i * n + j] += delta_hidden[j] * x[i];
                }
            }
            for j in 0..n {
                g1[d * n + j] += delta_hidden[j];
            }
        }
        let alpha = self.cfg.alpha;
        for i in 0..d * n {
            grad[i] += alpha * w[i];
        }
        for i in 0..n * k {
            grad[l1 + i] += alpha * w[l1 + i];
        }
    }
}

struct MlpObjective<'a> {
    layout: Layout<'a>,
    data: &'a TrainingSet,
}

impl Objective for MlpObjective<'_> {
    fn dim(&self) -> usize {
        self.layout.cfg.weight_count()
    }

    fn value(&self, w: &[f64]) -> f64 {
        self.layout.error(w, self.data)
    }

    fn gradient(&self, w: &[f64], grad: &mut [f64]) {
        self.layout.gradient(w, self.data, grad)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    pub config: MlpConfig,
    /// `(inputs + 1) x hidden`, bias row last.
    pub layer1: Vec<f64>,
    /// `(hidden + 1) x outputs`, bias row last.
    pub layer2: Vec<f64>,
}

impl MlpModel {
    pub fn zeros(config: MlpConfig) -> Result<Self> {
        config.validate()?;
        let (l1, l2) = (config.layer1_len(), config.layer2_len());
        Ok(MlpModel {
            config,
            layer1: vec![0.0; l1],
            layer2: vec![0.0; l2],
        })
    }

    pub fn from_weights(config: MlpConfig, layer1: Vec<f64>, layer2: Vec<f64>) -> Result<Self> {
        config.validate()?;
        if layer1.len() != config.layer1_len() {
            return Err(Error::DimensionMismatch {
                expected: config.layer1_len(),
                actual: layer1.len(),
            });
        }
        if layer2.len() != config.layer2_len() {
            return Err(Error::DimensionMismatch {
                expected: config.layer2_len(),
                actual: layer2.len(),
            });
        }
        if layer1.iter().chain(&layer2).any(|w| !w.is_finite()) {
            return Err(Error::NonFinite("MLP weights"));
        }
        Ok(MlpModel {
            config,
            layer1,
            layer2,
        })
    }

    /// Seeded uniform initialization in `[-1/sqrt(fan_in), 1/sqrt(fan_in)]`.
    pub fn random(config: MlpConfig) -> Result<Self> {
        let mut model = Self::zeros(config)?;
        let mut rng = rng::stream(model.config.seed, purpose::INIT);
        let r1 = 1.0 / math::sqrt(model.config.inputs as f64);
        let r2 = 1.0 / math::sqrt(model.config.hidden as f64);
        for w in &mut model.layer1 {
            *w = rng.random_range(-r1..=r1);
        }
        for w in &mut model.layer2 {
            *w = rng.random_range(-r2..=r2);
        }
        Ok(model)
    }

    pub fn weights(&self) -> Vec<f64> {
        let mut w = self.layer1.clone();
        w.extend_from_slice(&self.layer2);
        w
    }

    pub fn set_weights(&mut self, w: &[f64]) {
        let l1 = self.config.layer1_len();
        self.layer1.copy_from_slice(&w[..l1]);
        self.layer2.copy_from_slice(&w[l1..]);
    }

    /// Sum of squared non-bias weights.
    pub fn decay_norm(&self) -> f64 {
        Layout { cfg: &self.config }.decay(&self.weights())
    }

    /// Output probabilities for one input.
    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.config.inputs {
            return Err(Error::DimensionMismatch {
                expected: self.config.inputs,
                actual: x.len(),
            });
        }
        let mut hidden = vec![0.0; self.config.hidden];
        let mut out = vec![0.0; self.config.outputs];
        Layout { cfg: &self.config }.forward(&self.weights(), x, &mut hidden, &mut out);
        Ok(out)
    }

    pub fn error(&self, data: &TrainingSet) -> Result<f64> {
        data.check(self.config.inputs, self.config.outputs)?;
        Ok(Layout { cfg: &self.config }.error(&self.weights(), data))
    }

    /// Analytic gradient of [`MlpModel::error`] in flat-parameter order.
    pub fn gradient(&self, data: &TrainingSet) -> Result<Vec<f64>> {
        data.check(self.config.inputs, self.config.outputs)?;
        let mut g = vec![0.0; self.config.weight_count()];
        Layout { cfg: &self.config }.gradient(&self.weights(), data, &mut g);
        Ok(g)
    }

    pub fn accuracy(&self, data: &TrainingSet) -> Result<f64> {
        let labels = data.labels();
        let mut correct = 0;
        for (x, &y) in data.inputs.iter().zip(&labels) {
            correct += usize::from(self.predict(x)? == y);
        }
        Ok(correct as f64 / data.len() as f64)
    }
}

impl Classify for MlpModel {
    fn input_dim(&self) -> usize {
        self.config.inputs
    }

    fn n_classes(&self) -> usize {
        if self.config.outputs == 1 {
            2
        } else {
            self.config.outputs
        }
    }

    fn predict(&self, x: &[f64]) -> Result<usize> {
        Ok(decide(&self.forward(x)?))
    }
}

/// Trains from a seeded random start. The returned model never has a higher
/// error on `data` than the starting point.
pub fn train_scg(config: &MlpConfig, data: &TrainingSet) -> Result<(MlpModel, ScgReport)> {
    train_with(config, data, config.scg_options())
}

/// Like [`train_scg`], but stops as soon as the regularized error per
/// training sample reaches `goal`.
pub fn train_scg_to_goal(
    config: &MlpConfig,
    data: &TrainingSet,
    goal: f64,
) -> Result<(MlpModel, ScgReport)> {
    if !(goal > 0.0 && goal.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "error goal must be positive, got {goal}"
        )));
    }
    let options = ScgOptions {
        error_goal: Some(goal * data.len() as f64),
        ..config.scg_options()
    };
    train_with(config, data, options)
}

fn train_with(
    config: &MlpConfig,
    data: &TrainingSet,
    options: ScgOptions,
) -> Result<(MlpModel, ScgReport)> {
    config.validate()?;
    data.check(config.inputs, config.outputs)?;
    let mut model = MlpModel::random(config.clone())?;
    let mut w = model.weights();
    let objective = MlpObjective {
        layout: Layout { cfg: config },
        data,
    };
    let report = minimize_scg(&objective, &mut w, &options)?;
    model.set_weights(&w);
    Ok((model, report))
}

/// Mean validation accuracy for each candidate hidden-layer size.
#[derive(Debug, Clone, PartialEq)]
pub struct HiddenUnitSearch {
    pub best: usize,
    pub scores: Vec<(usize, f64)>,
}

/// Exhaustive k-fold search over hidden-layer sizes. The best mean
/// validation accuracy wins; ties go to the smaller size.
pub fn search_hidden_units(
    template: &MlpConfig,
    data: &TrainingSet,
    candidates: &[usize],
    folds: usize,
) -> Result<HiddenUnitSearch> {
    match candidates {
        [] => return Err(Error::EmptyCandidates),
        [only] => {
            return Ok(HiddenUnitSearch {
                best: *only,
                scores: vec![(*only, f64::NAN)],
            })
        }
        _ => {}
    }
    data.check(template.inputs, template.outputs)?;
    let splits = cv::kfold(data.len(), folds, template.seed)?;
    let mut scores = Vec::with_capacity(candidates.len());
    for &hidden in candidates {
        let cfg = MlpConfig {
            hidden,
            ..template.clone()
        };
        let mut total = 0.0;
        for fold in &splits {
            let (model, _) = train_scg(&cfg, &data.subset(&fold.train))?;
            total += model.accuracy(&data.subset(&fold.validation))?;
        }
        scores.push((hidden, total / splits.len() as f64));
    }
    let mut best = scores[0];
    for &s in &scores[1..] {
        if s.1 > best.1 || (s.1 == best.1 && s.0 < best.0) {
            best = s;
        }
    }
    Ok(HiddenUnitSearch {
        best: best.0,
        scores,
    })
}

/// Single-layer network: softmax (or logistic) of an affine map. Used as the
/// output stage of the RBF network, trained with the same SCG optimizer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingleLayerConfig {
    pub inputs: usize,
    pub outputs: usize,
    pub alpha: f64,
    pub beta: f64,
    pub max_iterations: usize,
    pub tolerance: f64,
}

struct SingleLayerObjective<'a> {
    cfg: &'a SingleLayerConfig,
    data: &'a TrainingSet,
}

/// Affine map followed by the output nonlinearity. `w` is `(inputs + 1) x
/// outputs`, bias row last.
pub(crate) fn single_layer_forward(
    w: &[f64],
    inputs: usize,
    outputs: usize,
    x: &[f64],
    out: &mut [f64],
) {
    for c in 0..outputs {
        let mut a = w[inputs * outputs + c];
        for i in 0..inputs {
            a += x[i] * w[i * outputs + c];
        }
        out[c] = a;
    }
    activate_outputs(out);
}

impl Objective for SingleLayerObjective<'_> {
    fn dim(&self) -> usize {
        (self.cfg.inputs + 1) * self.cfg.outputs
    }

    fn value(&self, w: &[f64]) -> f64 {
        let (d, k) = (self.cfg.inputs, self.cfg.outputs);
        let mut out = vec![0.0; k];
        let mut ce = 0.0;
        for (x, t) in self.data.inputs.iter().zip(&self.data.targets) {
            single_layer_forward(w, d, k, x, &mut out);
            ce += cross_entropy(&out, t);
        }
        let decay: f64 = w[..d * k].iter().map(|v| v * v).sum();
        self.cfg.beta * ce + 0.5 * self.cfg.alpha * decay
    }

    fn gradient(&self, w: &[f64], grad: &mut [f64]) {
        let (d, k) = (self.cfg.inputs, self.cfg.outputs);
        grad.iter_mut().for_each(|g| *g = 0.0);
        let mut out = vec![0.0; k];
        for (x, t) in self.data.inputs.iter().zip(&self.data.targets) {
            single_layer_forward(w, d, k, x, &mut out);
            for c in 0..k {
                let delta = self.cfg.beta * (out[c] - t[c]);
                for i in 0..d {
                    grad[i * k + c] += delta * x[i];
                }
                grad[d * k + c] += delta;
            }
        }
        for i in 0..d * k {
            grad[i] += self.cfg.alpha * w[i];
        }
    }
}

/// Trains a single-layer network from zero weights.
pub fn train_single_layer(
    config: &SingleLayerConfig,
    data: &TrainingSet,
) -> Result<(Vec<f64>, ScgReport)> {
    if config.inputs == 0 || config.outputs == 0 {
        return Err(Error::InvalidConfig(
            "single-layer dimensions must be at least 1".into(),
        ));
    }
    data.check(config.inputs, config.outputs)?;
    let mut w = vec![0.0; (config.inputs + 1) * config.outputs];
    let objective = SingleLayerObjective { cfg: config, data };
    let options = ScgOptions {
        max_iterations: config.max_iterations,
        gradient_tolerance: config.tolerance,
        error_goal: None,
    };
    let report = minimize_scg(&objective, &mut w, &options)?;
    Ok((w, report))
}
