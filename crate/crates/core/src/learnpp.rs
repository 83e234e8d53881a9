//! Learn++: incremental learning by an ensemble of weak hypotheses.
//!
//! Each training session draws hypotheses from a weighted distribution over
//! the session's database. A hypothesis is kept only if its weighted error is
//! below one half; its vote weight is `ln(1 / beta)` with `beta = err / (1 -
//! err)`. The running composite of the session's hypotheses reshapes the
//! distribution so later hypotheses focus on instances the composite still
//! gets wrong. The final classifier is a weighted majority over every
//! hypothesis of every session, and the normalized vote shares give a
//! per-class confidence.

use alloc::vec;
use alloc::vec::Vec;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::classifier::{Classify, Model};
use crate::error::{Error, Result};
use crate::math;
use crate::mlp::{self, MlpConfig, TrainingSet};
use crate::rbf::{self, RbfConfig};
use crate::rng::{self, purpose};
use crate::svm::{self, SvmConfig};

/// Smallest error used when forming `beta`, so a perfect hypothesis still
/// has a finite vote.
pub const ERROR_FLOOR: f64 = 1e-10;

/// Composite errors within this distance of one half count as exactly one
/// half. A hypothesis that leaves the composite unchanged scores one half
/// up to rounding, and is kept with `B = 1`.
pub const HALF_TOLERANCE: f64 = 1e-12;

/// Composite acceptance: only an error above one half discards.
pub fn composite_acceptable(err: f64) -> bool {
    err <= 0.5 + HALF_TOLERANCE
}

/// Uniform starting distribution over `m` instances.
pub fn init_distribution(m: usize) -> Result<Vec<f64>> {
    if m == 0 {
        return Err(Error::EmptyData);
    }
    Ok(vec![1.0 / m as f64; m])
}

fn normalize(weights: &[f64]) -> Vec<f64> {
    let total: f64 = weights.iter().sum();
    weights.iter().map(|w| w / total).collect()
}

fn distinct(labels: impl Iterator<Item = usize>) -> usize {
    let mut seen: Vec<usize> = labels.collect();
    seen.sort_unstable();
    seen.dedup();
    seen.len()
}

/// Draws training and testing index sets by weighted sampling with
/// replacement. `TR` has `ceil(tr_fraction * m)` entries and `TE` the rest;
/// both must be nonempty. When `labels` holds two or more classes, each
/// subset must too; draws are repeated up to `max_attempts` times.
pub fn sample_subsets<R: Rng + ?Sized>(
    distribution: &[f64],
    labels: &[usize],
    tr_fraction: f64,
    max_attempts: usize,
    rng: &mut R,
) -> Result<(Vec<usize>, Vec<usize>)> {
    let m = distribution.len();
    if m == 0 {
        return Err(Error::EmptyData);
    }
    if labels.len() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            actual: labels.len(),
        });
    }
    if !(tr_fraction > 0.0 && tr_fraction < 1.0) {
        return Err(Error::InvalidConfig(
            "training fraction must lie in (0, 1)".into(),
        ));
    }
    let tr = math::ceil(tr_fraction * m as f64) as usize;
    if tr == 0 || tr >= m {
        return Err(Error::InsufficientData {
            requested: tr + 1,
            available: m,
        });
    }
    let te = m - tr;
    let index = WeightedIndex::new(distribution).map_err(|_| {
        Error::InvalidConfig("distribution must be non-negative with positive total".into())
    })?;
    let need_two = distinct(labels.iter().copied()) >= 2;
    for _ in 0..max_attempts.max(1) {
        let train: Vec<usize> = (0..tr).map(|_| index.sample(rng)).collect();
        let test: Vec<usize> = (0..te).map(|_| index.sample(rng)).collect();
        if !need_two
            || (distinct(train.iter().map(|&i| labels[i])) >= 2
                && distinct(test.iter().map(|&i| labels[i])) >= 2)
        {
            return Ok((train, test));
        }
    }
    Err(Error::SubsetCoverage(max_attempts.max(1)))
}

/// Distribution mass on the instances a prediction gets wrong.
pub fn weighted_error(predictions: &[usize], labels: &[usize], distribution: &[f64]) -> f64 {
    predictions
        .iter()
        .zip(labels)
        .zip(distribution)
        .filter(|((p, y), _)| p != y)
        .map(|(_, d)| d)
        .sum()
}

/// `err / (1 - err)` with `err` floored at [`ERROR_FLOOR`].
pub fn normalized_error(err: f64) -> f64 {
    let e = err.max(ERROR_FLOOR);
    e / (1.0 - e)
}

/// Trains weak models on integer labels in `0..classes`.
pub trait WeakLearner {
    type Model: Classify;

    fn train(
        &mut self,
        inputs: &[Vec<f64>],
        labels: &[usize],
        classes: usize,
        seed: u64,
    ) -> Result<Self::Model>;
}

/// Small MLP trained by SCG until its mean training cross-entropy reaches
/// `error_goal`, or for at most `max_iterations` steps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpLearner {
    pub hidden: usize,
    pub max_iterations: usize,
    pub alpha: f64,
    #[serde(default)]
    pub error_goal: Option<f64>,
}

impl Default for MlpLearner {
    fn default() -> Self {
        MlpLearner {
            hidden: 5,
            max_iterations: 5,
            alpha: 0.01,
            error_goal: None,
        }
    }
}

impl WeakLearner for MlpLearner {
    type Model = Model;

    fn train(
        &mut self,
        inputs: &[Vec<f64>],
        labels: &[usize],
        classes: usize,
        seed: u64,
    ) -> Result<Model> {
        let data = TrainingSet::from_labels(inputs.to_vec(), labels, classes)?;
        let config = MlpConfig {
            inputs: inputs.first().map_or(0, Vec::len),
            hidden: self.hidden,
            outputs: mlp::output_width(classes),
            alpha: self.alpha,
            beta: 1.0,
            max_iterations: self.max_iterations,
            tolerance: 1e-6,
            seed,
        };
        let trained = match self.error_goal {
            Some(goal) => mlp::train_scg_to_goal(&config, &data, goal)?,
            None => mlp::train_scg(&config, &data)?,
        };
        Ok(Model::Mlp(trained.0))
    }
}

/// RBF network weak learner.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RbfLearner {
    pub config: RbfConfig,
}

impl WeakLearner for RbfLearner {
    type Model = Model;

    fn train(
        &mut self,
        inputs: &[Vec<f64>],
        labels: &[usize],
        classes: usize,
        seed: u64,
    ) -> Result<Model> {
        let data = TrainingSet::from_labels(inputs.to_vec(), labels, classes)?;
        let centers = self.config.centers.min(inputs.len());
        let config = RbfConfig {
            centers,
            outputs: mlp::output_width(classes),
            seed,
            ..self.config.clone()
        };
        Ok(Model::Rbf(rbf::train(&config, &data)?))
    }
}

/// SVM weak learner.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmLearner {
    pub config: SvmConfig,
}

impl WeakLearner for SvmLearner {
    type Model = Model;

    fn train(
        &mut self,
        inputs: &[Vec<f64>],
        labels: &[usize],
        classes: usize,
        seed: u64,
    ) -> Result<Model> {
        let config = SvmConfig {
            seed,
            ..self.config
        };
        Ok(Model::Svm(svm::train(inputs, labels, classes, &config)?))
    }
}

/// One accepted weak model. The model predicts local labels; `classes`
/// maps them to the ensemble's label space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hypothesis<M> {
    pub model: M,
    pub classes: Vec<usize>,
    pub beta: f64,
    pub session: usize,
    pub index: usize,
}

impl<M: Classify> Hypothesis<M> {
    pub fn weight(&self) -> f64 {
        math::ln(1.0 / self.beta)
    }

    pub fn predict(&self, x: &[f64]) -> Result<usize> {
        let local = self.model.predict(x)?;
        self.classes
            .get(local)
            .copied()
            .ok_or(Error::LabelOutOfRange {
                label: local,
                size: self.classes.len(),
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SessionConfig {
    /// Hypotheses generated per session.
    pub hypotheses: usize,
    pub tr_fraction: f64,
    /// Discarded attempts allowed per hypothesis.
    pub max_retries: usize,
    pub seed: u64,
}

impl Default for SessionConfig {
    fn default() -> Self {
        SessionConfig {
            hypotheses: 20,
            tr_fraction: 2.0 / 3.0,
            max_retries: 1000,
            seed: 0,
        }
    }
}

impl SessionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.hypotheses == 0 {
            return Err(Error::InvalidConfig(
                "at least one hypothesis per session".into(),
            ));
        }
        if self.max_retries == 0 {
            return Err(Error::InvalidConfig(
                "at least one retry per hypothesis".into(),
            ));
        }
        if !(self.tr_fraction > 0.0 && self.tr_fraction < 1.0) {
            return Err(Error::InvalidConfig(
                "training fraction must lie in (0, 1)".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Outcome {
    Accepted,
    /// The weak hypothesis alone had error of at least one half.
    RejectedWeak,
    /// The composite including the new hypothesis had error of at least
    /// one half.
    RejectedComposite,
}

/// One training attempt within a session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Step {
    pub outcome: Outcome,
    pub epsilon: f64,
    pub beta: Option<f64>,
    pub composite_error: Option<f64>,
    pub composite_beta: Option<f64>,
    pub distribution_before: Vec<f64>,
    /// Present only for accepted steps.
    pub distribution_after: Option<Vec<f64>>,
    /// Unweighted accuracy on the database.
    pub weak_accuracy: f64,
    pub composite_accuracy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionTrace {
    pub session: usize,
    pub steps: Vec<Step>,
}

impl SessionTrace {
    pub fn accepted(&self) -> impl Iterator<Item = &Step> {
        self.steps.iter().filter(|s| s.outcome == Outcome::Accepted)
    }

    /// Mean unweighted database accuracy of the accepted hypotheses.
    pub fn mean_weak_accuracy(&self) -> f64 {
        let (sum, n) = self
            .accepted()
            .fold((0.0, 0usize), |(s, n), st| (s + st.weak_accuracy, n + 1));
        if n == 0 {
            0.0
        } else {
            sum / n as f64
        }
    }

    /// Database accuracy of the session's final composite.
    pub fn composite_accuracy(&self) -> Option<f64> {
        self.accepted().last().and_then(|s| s.composite_accuracy)
    }
}

/// Weighted-majority decision; ties go to the smallest class.
fn vote<M: Classify>(
    hypotheses: &[Hypothesis<M>],
    x: &[f64],
    label_space: usize,
) -> Result<(usize, Vec<f64>)> {
    let mut votes = vec![0.0; label_space];
    for h in hypotheses {
        let c = h.predict(x)?;
        if c >= label_space {
            return Err(Error::LabelOutOfRange {
                label: c,
                size: label_space,
            });
        }
        votes[c] += h.weight();
    }
    Ok((math::argmax(&votes), votes))
}

/// Every hypothesis of every session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ensemble<M> {
    pub label_space: usize,
    pub inputs: usize,
    pub sessions: Vec<Vec<Hypothesis<M>>>,
}

impl<M: Classify> Ensemble<M> {
    pub fn new(inputs: usize, label_space: usize) -> Result<Self> {
        if label_space < 2 {
            return Err(Error::InvalidConfig(
                "label space needs at least two classes".into(),
            ));
        }
        Ok(Ensemble {
            label_space,
            inputs,
            sessions: Vec::new(),
        })
    }

    pub fn hypotheses(&self) -> impl Iterator<Item = &Hypothesis<M>> {
        self.sessions.iter().flatten()
    }

    pub fn len(&self) -> usize {
        self.sessions.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Classes some hypothesis can predict.
    pub fn known_classes(&self) -> Vec<usize> {
        let mut c: Vec<usize> = self
            .hypotheses()
            .flat_map(|h| h.classes.iter().copied())
            .collect();
        c.sort_unstable();
        c.dedup();
        c
    }

    /// Per-class vote totals over all hypotheses.
    pub fn votes(&self, x: &[f64]) -> Result<Vec<f64>> {
        if self.is_empty() {
            return Err(Error::EmptyEnsemble);
        }
        if x.len() != self.inputs {
            return Err(Error::DimensionMismatch {
                expected: self.inputs,
                actual: x.len(),
            });
        }
        let mut votes = vec![0.0; self.label_space];
        for h in self.hypotheses() {
            votes[h.predict(x)?] += h.weight();
        }
        Ok(votes)
    }

    pub fn classify(&self, x: &[f64]) -> Result<usize> {
        Ok(math::argmax(&self.votes(x)?))
    }

    /// Vote shares per class; sums to one.
    pub fn confidence(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(normalize(&self.votes(x)?))
    }

    /// Trains one session on `inputs`/`labels` (labels in the ensemble's
    /// label space). On error the ensemble is left unchanged.
    pub fn run_session<L: WeakLearner<Model = M>>(
        &mut self,
        learner: &mut L,
        inputs: &[Vec<f64>],
        labels: &[usize],
        config: &SessionConfig,
    ) -> Result<SessionTrace> {
        config.validate()?;
        let m = inputs.len();
        if m == 0 {
            return Err(Error::EmptyData);
        }
        if labels.len() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                actual: labels.len(),
            });
        }
        if let Some(bad) = inputs.iter().find(|x| x.len() != self.inputs) {
            return Err(Error::DimensionMismatch {
                expected: self.inputs,
                actual: bad.len(),
            });
        }
        if let Some(&label) = labels.iter().find(|&&l| l >= self.label_space) {
            return Err(Error::LabelOutOfRange {
                label,
                size: self.label_space,
            });
        }

        let mut classes: Vec<usize> = labels.to_vec();
        classes.sort_unstable();
        classes.dedup();
        let local: Vec<usize> = labels
            .iter()
            .map(|l| classes.binary_search(l).expect("present"))
            .collect();
        if classes.len() < 2 {
            return Err(Error::SingleClass);
        }
        let n_local = classes.len();

        let session = self.sessions.len();
        let mut rng = rng::stream(config.seed, purpose::SESSION);
        let mut weights = vec![1.0; m];
        let mut hypotheses: Vec<Hypothesis<M>> = Vec::with_capacity(config.hypotheses);
        let mut steps = Vec::new();

        while hypotheses.len() < config.hypotheses {
            let mut retries = config.max_retries;
            loop {
                let d = normalize(&weights);
                let (tr, _te) =
                    sample_subsets(&d, labels, config.tr_fraction, config.max_retries, &mut rng)?;
                let xs: Vec<Vec<f64>> = tr.iter().map(|&i| inputs[i].clone()).collect();
                let ys: Vec<usize> = tr.iter().map(|&i| local[i]).collect();
                let seed = rng.random::<u64>();
                let model = learner.train(&xs, &ys, n_local, seed)?;
                let mut h = Hypothesis {
                    model,
                    classes: classes.clone(),
                    beta: 1.0,
                    session,
                    index: hypotheses.len(),
                };

                let predictions: Vec<usize> =
                    inputs.iter().map(|x| h.predict(x)).collect::<Result<_>>()?;
                let epsilon = weighted_error(&predictions, labels, &d);
                let weak_accuracy = accuracy(&predictions, labels);
                let mut step = Step {
                    outcome: Outcome::RejectedWeak,
                    epsilon,
                    beta: None,
                    composite_error: None,
                    composite_beta: None,
                    distribution_before: d.clone(),
                    distribution_after: None,
                    weak_accuracy,
                    composite_accuracy: None,
                };

                if epsilon < 0.5 {
                    h.beta = normalized_error(epsilon);
                    step.beta = Some(h.beta);
                    hypotheses.push(h);
                    let composite: Vec<usize> = inputs
                        .iter()
                        .map(|x| vote(&hypotheses, x, self.label_space).map(|v| v.0))
                        .collect::<Result<_>>()?;
                    let big_e = weighted_error(&composite, labels, &d);
                    step.composite_error = Some(big_e);
                    if composite_acceptable(big_e) {
                        let big_b = normalized_error(big_e.min(0.5));
                        for i in 0..m {
                            if composite[i] == labels[i] {
                                weights[i] *= big_b;
                            }
                        }
                        weights = normalize(&weights);
                        step.outcome = Outcome::Accepted;
                        step.composite_beta = Some(big_b);
                        step.distribution_after = Some(weights.clone());
                        step.composite_accuracy = Some(accuracy(&composite, labels));
                        steps.push(step);
                        break;
                    }
                    hypotheses.pop();
                    step.outcome = Outcome::RejectedComposite;
                }
                steps.push(step);
                if retries == 0 {
                    return Err(Error::WeakLearnerFailed);
                }
                retries -= 1;
            }
        }

        self.sessions.push(hypotheses);
        Ok(SessionTrace { session, steps })
    }
}

fn accuracy(predictions: &[usize], labels: &[usize]) -> f64 {
    let correct = predictions
        .iter()
        .zip(labels)
        .filter(|(p, y)| p == y)
        .count();
    correct as f64 / labels.len() as f64
}

impl<M: Classify> Classify for Ensemble<M> {
    fn input_dim(&self) -> usize {
        self.inputs
    }

    fn n_classes(&self) -> usize {
        self.label_space
    }

    fn predict(&self, x: &[f64]) -> Result<usize> {
        self.classify(x)
    }

    fn classify_with_confidence(&self, x: &[f64]) -> Result<(usize, Vec<f64>)> {
        let votes = self.votes(x)?;
        Ok((math::argmax(&votes), normalize(&votes)))
    }
}
