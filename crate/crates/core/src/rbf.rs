//! Radial-basis-function network with two-stage training.
//!
//! Stage one fits a spherical-covariance Gaussian mixture to the inputs by
//! EM; its means become the basis centers and its standard deviations the
//! widths. Mixing weights are dropped afterwards. Stage two keeps the bases
//! fixed and trains the output layer as a single-layer network with SCG on
//! the cross-entropy error.

use alloc::vec;
use alloc::vec::Vec;

use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::classifier::Classify;
use crate::error::{Error, Result};
use crate::math;
use crate::mlp::{self, output_width, SingleLayerConfig, TrainingSet};
use crate::optim::ScgReport;
use crate::rng::{self, purpose};

/// Gaussian basis `exp(-|x - center|^2 / (2 width^2))`.
pub fn basis(x: &[f64], center: &[f64], width: f64) -> f64 {
    math::exp(-math::squared_distance(x, center) / (2.0 * width * width))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WidthRule {
    /// Per-component standard deviation from the fitted mixture.
    #[default]
    EmVariance,
    /// One shared width `d_max / sqrt(2 n)` from the largest inter-center
    /// distance.
    MaxCenterDistance,
}

impl WidthRule {
    pub fn name(self) -> &'static str {
        match self {
            WidthRule::EmVariance => "em-variance",
            WidthRule::MaxCenterDistance => "max-center-distance",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RbfConfig {
    /// Number of basis functions.
    pub centers: usize,
    /// Output units (1 for two classes).
    pub outputs: usize,
    pub em_max_iterations: usize,
    pub em_tolerance: f64,
    pub seed: u64,
    pub width_rule: WidthRule,
    /// Output-layer weight decay.
    pub alpha: f64,
    pub max_iterations: usize,
    pub tolerance: f64,
}

impl Default for RbfConfig {
    fn default() -> Self {
        RbfConfig {
            centers: 10,
            outputs: 1,
            em_max_iterations: 200,
            em_tolerance: 1e-6,
            seed: 0,
            width_rule: WidthRule::EmVariance,
            alpha: 1e-3,
            max_iterations: 300,
            tolerance: 1e-6,
        }
    }
}

/// Result of the mixture fit.
#[derive(Debug, Clone, PartialEq)]
pub struct EmFit {
    pub centers: Vec<Vec<f64>>,
    pub widths: Vec<f64>,
    pub mixing: Vec<f64>,
    /// Log-likelihood evaluated before each M-step and after the last one.
    pub log_likelihood: Vec<f64>,
}

fn diameter(data: &[Vec<f64>]) -> f64 {
    let mut best = 0.0f64;
    for i in 0..data.len() {
        for j in i + 1..data.len() {
            best = best.max(math::squared_distance(&data[i], &data[j]));
        }
    }
    math::sqrt(best)
}

struct Mixture {
    means: Vec<Vec<f64>>,
    variances: Vec<f64>,
    mixing: Vec<f64>,
}

impl Mixture {
    /// Per-point component log-joint terms and the total log-likelihood.
    fn e_step(&self, data: &[Vec<f64>], resp: &mut [Vec<f64>]) -> f64 {
        let d = data[0].len() as f64;
        let two_pi = 2.0 * core::f64::consts::PI;
        let mut total = 0.0;
        for (x, r) in data.iter().zip(resp.iter_mut()) {
            for (j, rj) in r.iter_mut().enumerate().take(self.means.len()) {
                *rj = if self.mixing[j] > 0.0 {
                    let v = self.variances[j];
                    math::ln(self.mixing[j])
                        - 0.5 * d * math::ln(two_pi * v)
                        - math::squared_distance(x, &self.means[j]) / (2.0 * v)
                } else {
                    f64::NEG_INFINITY
                };
            }
            let lse = math::log_sum_exp(r);
            for v in r.iter_mut() {
                *v = math::exp(*v - lse);
            }
            total += lse;
        }
        total
    }

    fn m_step(&mut self, data: &[Vec<f64>], resp: &[Vec<f64>], variance_floor: f64) {
        let m = data.len();
        let d = data[0].len();
        for j in 0..self.means.len() {
            let nj: f64 = resp.iter().map(|r| r[j]).sum();
            self.mixing[j] = nj / m as f64;
            if nj <= 0.0 {
                continue;
            }
            let mut mean = vec![0.0; d];
            for (x, r) in data.iter().zip(resp) {
                for i in 0..d {
                    mean[i] += r[j] * x[i];
                }
            }
            mean.iter_mut().for_each(|v| *v /= nj);
            let spread: f64 = data
                .iter()
                .zip(resp)
                .map(|(x, r)| r[j] * math::squared_distance(x, &mean))
                .sum();
            self.variances[j] = (spread / (nj * d as f64)).max(variance_floor);
            self.means[j] = mean;
        }
    }
}

/// Fits `config.centers` spherical Gaussians by EM, starting from a seeded
/// random subset of the data. Widths are floored at 1e-3 of the data
/// diameter.
pub fn fit_centers_em(data: &[Vec<f64>], config: &RbfConfig) -> Result<EmFit> {
    if data.is_empty() {
        return Err(Error::EmptyData);
    }
    let n = config.centers;
    if n == 0 {
        return Err(Error::InvalidConfig("RBF needs at least one center".into()));
    }
    if n > data.len() {
        return Err(Error::InsufficientData {
            requested: n,
            available: data.len(),
        });
    }
    let d = data[0].len();
    if let Some(bad) = data.iter().find(|x| x.len() != d) {
        return Err(Error::DimensionMismatch {
            expected: d,
            actual: bad.len(),
        });
    }

    let diam = diameter(data);
    let floor = {
        let s = 1e-3 * diam;
        if s > 0.0 {
            s * s
        } else {
            1e-12
        }
    };
    let mut mean = vec![0.0; d];
    for x in data {
        for i in 0..d {
            mean[i] += x[i];
        }
    }
    mean.iter_mut().for_each(|v| *v /= data.len() as f64);
    let overall = data
        .iter()
        .map(|x| math::squared_distance(x, &mean))
        .sum::<f64>()
        / (data.len() * d) as f64;

    let mut rng = rng::stream(config.seed, purpose::EM);
    let picks = index::sample(&mut rng, data.len(), n).into_vec();
    let mut mixture = Mixture {
        means: picks.iter().map(|&i| data[i].clone()).collect(),
        variances: vec![overall.max(floor); n],
        mixing: vec![1.0 / n as f64; n],
    };

    let mut resp = vec![vec![0.0; n]; data.len()];
    let mut trace = Vec::new();
    let mut previous = mixture.e_step(data, &mut resp);
    trace.push(previous);
    for _ in 0..config.em_max_iterations {
        mixture.m_step(data, &resp, floor);
        let current = mixture.e_step(data, &mut resp);
        trace.push(current);
        if (current - previous).abs() < config.em_tolerance {
            break;
        }
        previous = current;
    }

    let widths = match config.width_rule {
        WidthRule::EmVariance => mixture.variances.iter().map(|&v| math::sqrt(v)).collect(),
        WidthRule::MaxCenterDistance => {
            let dmax = diameter(&mixture.means);
            let w = dmax / math::sqrt(2.0 * n as f64);
            vec![if w > 0.0 { w } else { math::sqrt(floor) }; n]
        }
    };
    Ok(EmFit {
        centers: mixture.means,
        widths,
        mixing: mixture.mixing,
        log_likelihood: trace,
    })
}

/// Basis activations of every input.
pub fn activations(data: &[Vec<f64>], centers: &[Vec<f64>], widths: &[f64]) -> Vec<Vec<f64>> {
    data.iter()
        .map(|x| {
            centers
                .iter()
                .zip(widths)
                .map(|(c, &w)| basis(x, c, w))
                .collect()
        })
        .collect()
}

/// Trains the output layer on fixed bases. Returns `(n + 1) x K` weights,
/// bias row last.
pub fn train_output_layer(
    centers: &[Vec<f64>],
    widths: &[f64],
    data: &TrainingSet,
    config: &RbfConfig,
) -> Result<(Vec<f64>, ScgReport)> {
    if centers.len() != widths.len() || centers.is_empty() {
        return Err(Error::InvalidConfig(
            "centers and widths must be nonempty and aligned".into(),
        ));
    }
    if widths.iter().any(|&w| !(w > 0.0 && w.is_finite())) {
        return Err(Error::InvalidConfig("basis widths must be positive".into()));
    }
    let phi = TrainingSet {
        inputs: activations(&data.inputs, centers, widths),
        targets: data.targets.clone(),
    };
    let slc = SingleLayerConfig {
        inputs: centers.len(),
        outputs: config.outputs,
        alpha: config.alpha,
        beta: 1.0,
        max_iterations: config.max_iterations,
        tolerance: config.tolerance,
    };
    mlp::train_single_layer(&slc, &phi)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RbfModel {
    pub config: RbfConfig,
    pub inputs: usize,
    pub centers: Vec<Vec<f64>>,
    pub widths: Vec<f64>,
    /// `(n + 1) x K`, bias row last.
    pub output: Vec<f64>,
}

impl RbfModel {
    pub fn new(
        config: RbfConfig,
        centers: Vec<Vec<f64>>,
        widths: Vec<f64>,
        output: Vec<f64>,
    ) -> Result<Self> {
        let n = centers.len();
        if n == 0 || widths.len() != n {
            return Err(Error::InvalidConfig(
                "centers and widths must be nonempty and aligned".into(),
            ));
        }
        let inputs = centers[0].len();
        if centers.iter().any(|c| c.len() != inputs) {
            return Err(Error::InvalidConfig("centers differ in dimension".into()));
        }
        if widths.iter().any(|&w| !(w > 0.0 && w.is_finite())) {
            return Err(Error::InvalidConfig("basis widths must be positive".into()));
        }
        if output.len() != (n + 1) * config.outputs {
            return Err(Error::DimensionMismatch {
                expected: (n + 1) * config.outputs,
                actual: output.len(),
            });
        }
        if centers
            .iter()
            .flatten()
            .chain(&widths)
            .chain(&output)
            .any(|v| !v.is_finite())
        {
            return Err(Error::NonFinite("RBF parameters"));
        }
        Ok(RbfModel {
            config,
            inputs,
            centers,
            widths,
            output,
        })
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.inputs {
            return Err(Error::DimensionMismatch {
                expected: self.inputs,
                actual: x.len(),
            });
        }
        let phi: Vec<f64> = self
            .centers
            .iter()
            .zip(&self.widths)
            .map(|(c, &w)| basis(x, c, w))
            .collect();
        let mut out = vec![0.0; self.config.outputs];
        mlp::single_layer_forward(&self.output, phi.len(), self.config.outputs, &phi, &mut out);
        Ok(out)
    }
}

impl Classify for RbfModel {
    fn input_dim(&self) -> usize {
        self.inputs
    }

    fn n_classes(&self) -> usize {
        if self.config.outputs == 1 {
            2
        } else {
            self.config.outputs
        }
    }

    fn predict(&self, x: &[f64]) -> Result<usize> {
        Ok(mlp::decide(&self.forward(x)?))
    }
}

/// Both training stages.
pub fn train(config: &RbfConfig, data: &TrainingSet) -> Result<RbfModel> {
    if data.is_empty() {
        return Err(Error::EmptyData);
    }
    let fit = fit_centers_em(&data.inputs, config)?;
    let (output, _) = train_output_layer(&fit.centers, &fit.widths, data, config)?;
    RbfModel::new(config.clone(), fit.centers, fit.widths, output)
}

/// Picks the basis count and width rule with the best k-fold validation
/// accuracy. Ties go to fewer bases, then to the earlier rule.
pub fn search_basis(
    template: &RbfConfig,
    data: &TrainingSet,
    centers: &[usize],
    rules: &[WidthRule],
    folds: usize,
) -> Result<(usize, WidthRule)> {
    if centers.is_empty() || rules.is_empty() {
        return Err(Error::EmptyCandidates);
    }
    if let ([n], [rule]) = (centers, rules) {
        return Ok((*n, *rule));
    }
    let splits = crate::cv::kfold(data.len(), folds, template.seed)?;
    let labels = data.labels();
    let mut best: Option<(usize, usize, f64)> = None;
    for &n in centers {
        for (r, &rule) in rules.iter().enumerate() {
            let cfg = RbfConfig {
                centers: n,
                width_rule: rule,
                ..template.clone()
            };
            let mut total = 0.0;
            for fold in &splits {
                let sub = TrainingSet {
                    inputs: fold.train.iter().map(|&i| data.inputs[i].clone()).collect(),
                    targets: fold
                        .train
                        .iter()
                        .map(|&i| data.targets[i].clone())
                        .collect(),
                };
                let model = train(&cfg, &sub)?;
                let mut correct = 0;
                for &i in &fold.validation {
                    correct += usize::from(model.predict(&data.inputs[i])? == labels[i]);
                }
                total += correct as f64 / fold.validation.len() as f64;
            }
            let score = total / splits.len() as f64;
            let better = match best {
                None => true,
                Some((bn, br, bs)) => score > bs || (score == bs && (n, r) < (bn, br)),
            };
            if better {
                best = Some((n, r, score));
            }
        }
    }
    let (n, r, _) = best.expect("nonempty");
    Ok((n, rules[r]))
}

/// Output width for `classes` classes, matching the MLP convention.
pub fn outputs_for(classes: usize) -> usize {
    output_width(classes)
}
