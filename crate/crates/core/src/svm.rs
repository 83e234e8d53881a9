//! Soft-margin support vector classification trained with sequential
//! minimal optimization.
//!
//! Binary machines use the decision function `f(x) = sum_i alpha_i y_i
//! k(x_i, x) + b` with labels in {-1, +1}. Problems with more than two
//! classes are handled one-vs-rest, predicting the class whose machine has
//! the largest decision value.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::classifier::Classify;
use crate::cv;
use crate::error::{Error, Result};
use crate::math;
use crate::rng::{self, purpose};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Kernel {
    Linear,
    /// `(x . x' + offset)^degree`
    Polynomial {
        degree: u32,
        offset: f64,
    },
    /// `exp(-|x - x'|^2 / (2 width^2))`
    Gaussian {
        width: f64,
    },
}

impl Kernel {
    pub fn eval(&self, a: &[f64], b: &[f64]) -> f64 {
        match *self {
            Kernel::Linear => math::dot(a, b),
            Kernel::Polynomial { degree, offset } => math::powi(math::dot(a, b) + offset, degree),
            Kernel::Gaussian { width } => {
                math::exp(-math::squared_distance(a, b) / (2.0 * width * width))
            }
        }
    }

    /// Orders kernels from simplest to most flexible for tie-breaking.
    pub fn complexity(&self) -> u8 {
        match self {
            Kernel::Linear => 0,
            Kernel::Polynomial { .. } => 1,
            Kernel::Gaussian { .. } => 2,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Kernel::Linear => Ok(()),
            Kernel::Polynomial { degree, offset } => {
                if degree == 0 || !offset.is_finite() {
                    Err(Error::InvalidConfig(
                        "polynomial kernel needs degree >= 1 and finite offset".into(),
                    ))
                } else {
                    Ok(())
                }
            }
            Kernel::Gaussian { width } => {
                if width > 0.0 && width.is_finite() {
                    Ok(())
                } else {
                    Err(Error::InvalidConfig(
                        "gaussian kernel width must be positive".into(),
                    ))
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvmConfig {
    pub kernel: Kernel,
    /// Box constraint.
    pub c: f64,
    /// KKT violation tolerance.
    pub tolerance: f64,
    /// Cap on successful pair updates.
    pub max_updates: usize,
    pub seed: u64,
}

impl Default for SvmConfig {
    fn default() -> Self {
        SvmConfig {
            kernel: Kernel::Gaussian { width: 0.5 },
            c: 10.0,
            tolerance: 1e-4,
            max_updates: 1_000_000,
            seed: 0,
        }
    }
}

impl SvmConfig {
    pub fn validate(&self) -> Result<()> {
        self.kernel.validate()?;
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::InvalidConfig("C must be positive".into()));
        }
        if !(self.tolerance > 0.0 && self.tolerance.is_finite()) {
            return Err(Error::InvalidConfig(
                "KKT tolerance must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Full dual solution over every training point.
#[derive(Debug, Clone, PartialEq)]
pub struct DualSolution {
    pub alpha: Vec<f64>,
    pub bias: f64,
    pub updates: usize,
}

/// `W(alpha) = sum alpha - 1/2 sum_ij alpha_i alpha_j y_i y_j k(x_i, x_j)`.
pub fn dual_objective(inputs: &[Vec<f64>], y: &[f64], alpha: &[f64], kernel: &Kernel) -> f64 {
    let mut quad = 0.0;
    for i in 0..inputs.len() {
        if alpha[i] == 0.0 {
            continue;
        }
        for j in 0..inputs.len() {
            quad += alpha[i] * alpha[j] * y[i] * y[j] * kernel.eval(&inputs[i], &inputs[j]);
        }
    }
    alpha.iter().sum::<f64>() - 0.5 * quad
}

const ROUND: f64 = 1e-8;
const STEP_EPS: f64 = 1e-12;

struct Smo<'a> {
    k: Vec<f64>,
    m: usize,
    y: &'a [f64],
    c: f64,
    tol: f64,
    alpha: Vec<f64>,
    b: f64,
    /// `f(x_i) - y_i`
    err: Vec<f64>,
    rng: rng::Stream,
    updates: usize,
}

impl Smo<'_> {
    fn kij(&self, i: usize, j: usize) -> f64 {
        self.k[i * self.m + j]
    }

    fn is_free(&self, i: usize) -> bool {
        self.alpha[i] > 0.0 && self.alpha[i] < self.c
    }

    fn violates(&self, i: usize) -> bool {
        let r = self.err[i] * self.y[i];
        (r < -self.tol && self.alpha[i] < self.c) || (r > self.tol && self.alpha[i] > 0.0)
    }

    fn take_step(&mut self, i1: usize, i2: usize) -> bool {
        if i1 == i2 {
            return false;
        }
        let (a1, a2) = (self.alpha[i1], self.alpha[i2]);
        let (y1, y2) = (self.y[i1], self.y[i2]);
        let (e1, e2) = (self.err[i1], self.err[i2]);
        let s = y1 * y2;
        let (lo, hi) = if s < 0.0 {
            ((a2 - a1).max(0.0), (self.c + a2 - a1).min(self.c))
        } else {
            ((a1 + a2 - self.c).max(0.0), (a1 + a2).min(self.c))
        };
        if lo >= hi {
            return false;
        }
        let (k11, k12, k22) = (self.kij(i1, i1), self.kij(i1, i2), self.kij(i2, i2));
        let eta = k11 + k22 - 2.0 * k12;
        let mut a2n = if eta > 0.0 {
            (a2 + y2 * (e1 - e2) / eta).clamp(lo, hi)
        } else {
            // objective along the constraint line at both ends
            let f1 = y1 * e1 - a1 * k11 - s * a2 * k12;
            let f2 = y2 * e2 - s * a1 * k12 - a2 * k22;
            let l1 = a1 + s * (a2 - lo);
            let h1 = a1 + s * (a2 - hi);
            let obj = |a1n: f64, a2n: f64| {
                a1n * f1
                    + a2n * f2
                    + 0.5 * a1n * a1n * k11
                    + 0.5 * a2n * a2n * k22
                    + s * a1n * a2n * k12
            };
            let (lobj, hobj) = (obj(l1, lo), obj(h1, hi));
            if lobj < hobj - STEP_EPS {
                lo
            } else if lobj > hobj + STEP_EPS {
                hi
            } else {
                a2
            }
        };
        if a2n < ROUND {
            a2n = 0.0;
        } else if a2n > self.c - ROUND {
            a2n = self.c;
        }
        if (a2n - a2).abs() < STEP_EPS * (a2n + a2 + STEP_EPS) {
            return false;
        }
        let mut a1n = a1 + s * (a2 - a2n);
        if a1n < ROUND {
            a1n = 0.0;
        } else if a1n > self.c - ROUND {
            a1n = self.c;
        }

        let (d1, d2) = (y1 * (a1n - a1), y2 * (a2n - a2));
        let b1 = self.b - e1 - d1 * k11 - d2 * k12;
        let b2 = self.b - e2 - d1 * k12 - d2 * k22;
        let bn = if a1n > 0.0 && a1n < self.c {
            b1
        } else if a2n > 0.0 && a2n < self.c {
            b2
        } else {
            0.5 * (b1 + b2)
        };
        let db = bn - self.b;
        for i in 0..self.m {
            self.err[i] += d1 * self.kij(i, i1) + d2 * self.kij(i, i2) + db;
        }
        self.alpha[i1] = a1n;
        self.alpha[i2] = a2n;
        self.b = bn;
        self.updates += 1;
        true
    }

    /// Pairs a KKT violator with a second index chosen by a seeded random
    /// start: free multipliers first, then every index, each scanned
    /// cyclically from the random start.
    fn examine(&mut self, i2: usize) -> bool {
        if !self.violates(i2) {
            return false;
        }
        let start = self.rng.random_range(0..self.m);
        for off in 0..self.m {
            let i1 = (start + off) % self.m;
            if self.is_free(i1) && self.take_step(i1, i2) {
                return true;
            }
        }
        let start = self.rng.random_range(0..self.m);
        for off in 0..self.m {
            let i1 = (start + off) % self.m;
            if self.take_step(i1, i2) {
                return true;
            }
        }
        false
    }

    fn run(&mut self, max_updates: usize) {
        let mut examine_all = true;
        loop {
            if self.updates >= max_updates {
                break;
            }
            let mut changed = 0;
            for i in 0..self.m {
                if (examine_all || self.is_free(i)) && self.examine(i) {
                    changed += 1;
                    if self.updates >= max_updates {
                        break;
                    }
                }
            }
            if examine_all {
                if changed == 0 {
                    break;
                }
                examine_all = false;
            } else if changed == 0 {
                examine_all = true;
            }
        }
    }

    /// Recomputes the bias from the current multipliers: the mean over free
    /// support vectors, otherwise the midpoint of the interval allowed by
    /// the bound ones.
    fn settle_bias(&mut self) {
        let g: Vec<f64> = (0..self.m)
            .map(|i| {
                (0..self.m)
                    .map(|j| self.alpha[j] * self.y[j] * self.kij(j, i))
                    .sum()
            })
            .collect();
        let free: Vec<usize> = (0..self.m).filter(|&i| self.is_free(i)).collect();
        let b = if !free.is_empty() {
            free.iter().map(|&i| self.y[i] - g[i]).sum::<f64>() / free.len() as f64
        } else {
            let mut lower = f64::NEG_INFINITY;
            let mut upper = f64::INFINITY;
            for (i, gi) in g.iter().enumerate() {
                let edge = self.y[i] - gi;
                let at_upper = self.alpha[i] >= self.c;
                if (self.y[i] > 0.0) != at_upper {
                    lower = lower.max(edge);
                } else {
                    upper = upper.min(edge);
                }
            }
            match (lower.is_finite(), upper.is_finite()) {
                (true, true) => 0.5 * (lower + upper),
                (true, false) => lower,
                (false, true) => upper,
                (false, false) => 0.0,
            }
        };
        self.b = b;
        for ((e, gi), yi) in self.err.iter_mut().zip(&g).zip(self.y.iter()) {
            *e = gi + b - yi;
        }
    }
}

const POLISH_ROUNDS: usize = 20;

/// Solves the C-SVC dual for labels in {-1, +1}.
pub fn solve_dual(inputs: &[Vec<f64>], y: &[f64], config: &SvmConfig) -> Result<DualSolution> {
    config.validate()?;
    if inputs.is_empty() {
        return Err(Error::EmptyData);
    }
    if inputs.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: inputs.len(),
            actual: y.len(),
        });
    }
    if y.iter().any(|&v| v != 1.0 && v != -1.0) {
        return Err(Error::InvalidConfig(
            "binary SVM labels must be -1 or +1".into(),
        ));
    }
    let m = inputs.len();
    let mut k = vec![0.0; m * m];
    for i in 0..m {
        for j in i..m {
            let v = config.kernel.eval(&inputs[i], &inputs[j]);
            k[i * m + j] = v;
            k[j * m + i] = v;
        }
    }
    if k.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("kernel matrix"));
    }
    let mut smo = Smo {
        k,
        m,
        y,
        c: config.c,
        tol: config.tolerance,
        alpha: vec![0.0; m],
        b: 0.0,
        err: y.iter().map(|v| -v).collect(),
        rng: rng::stream(config.seed, purpose::SMO),
        updates: 0,
    };
    smo.run(config.max_updates);
    smo.settle_bias();
    for _ in 0..POLISH_ROUNDS {
        if !(0..m).any(|i| smo.violates(i)) || smo.updates >= config.max_updates {
            break;
        }
        smo.run(config.max_updates);
        smo.settle_bias();
    }
    Ok(DualSolution {
        alpha: smo.alpha,
        bias: smo.b,
        updates: smo.updates,
    })
}

/// A trained two-class machine keeping only its support vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinarySvm {
    pub kernel: Kernel,
    pub support_vectors: Vec<Vec<f64>>,
    /// `alpha_i y_i` for each support vector.
    pub coefficients: Vec<f64>,
    pub bias: f64,
}

impl BinarySvm {
    pub fn from_solution(
        inputs: &[Vec<f64>],
        y: &[f64],
        kernel: Kernel,
        solution: &DualSolution,
    ) -> Self {
        let mut support_vectors = Vec::new();
        let mut coefficients = Vec::new();
        for i in 0..inputs.len() {
            if solution.alpha[i] > 0.0 {
                support_vectors.push(inputs[i].clone());
                coefficients.push(solution.alpha[i] * y[i]);
            }
        }
        BinarySvm {
            kernel,
            support_vectors,
            coefficients,
            bias: solution.bias,
        }
    }

    pub fn decision(&self, x: &[f64]) -> f64 {
        self.support_vectors
            .iter()
            .zip(&self.coefficients)
            .map(|(sv, c)| c * self.kernel.eval(sv, x))
            .sum::<f64>()
            + self.bias
    }
}

/// Trains one binary machine.
pub fn train_binary(inputs: &[Vec<f64>], y: &[f64], config: &SvmConfig) -> Result<BinarySvm> {
    let solution = solve_dual(inputs, y, config)?;
    Ok(BinarySvm::from_solution(
        inputs,
        y,
        config.kernel,
        &solution,
    ))
}

/// A two-class machine, or one machine per class for more classes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmClassifier {
    pub inputs: usize,
    pub classes: usize,
    pub machines: Vec<BinarySvm>,
}

impl SvmClassifier {
    /// Decision values: one for two classes (positive means class 1), else
    /// one per class.
    pub fn decisions(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.inputs {
            return Err(Error::DimensionMismatch {
                expected: self.inputs,
                actual: x.len(),
            });
        }
        Ok(self.machines.iter().map(|m| m.decision(x)).collect())
    }
}

impl Classify for SvmClassifier {
    fn input_dim(&self) -> usize {
        self.inputs
    }

    fn n_classes(&self) -> usize {
        self.classes
    }

    fn predict(&self, x: &[f64]) -> Result<usize> {
        let d = self.decisions(x)?;
        Ok(if d.len() == 1 {
            usize::from(d[0] >= 0.0)
        } else {
            math::argmax(&d)
        })
    }
}

/// Trains on integer labels in `0..classes`.
pub fn train(
    inputs: &[Vec<f64>],
    labels: &[usize],
    classes: usize,
    config: &SvmConfig,
) -> Result<SvmClassifier> {
    if inputs.is_empty() {
        return Err(Error::EmptyData);
    }
    if inputs.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: inputs.len(),
            actual: labels.len(),
        });
    }
    if let Some(&label) = labels.iter().find(|&&l| l >= classes) {
        return Err(Error::LabelOutOfRange {
            label,
            size: classes,
        });
    }
    if classes < 2 || labels.iter().all(|&l| l == labels[0]) {
        return Err(Error::SingleClass);
    }
    let d = inputs[0].len();
    if let Some(bad) = inputs.iter().find(|x| x.len() != d) {
        return Err(Error::DimensionMismatch {
            expected: d,
            actual: bad.len(),
        });
    }
    let targets = |positive: usize| -> Vec<f64> {
        labels
            .iter()
            .map(|&l| if l == positive { 1.0 } else { -1.0 })
            .collect()
    };
    let machines = if classes == 2 {
        vec![train_binary(inputs, &targets(1), config)?]
    } else {
        (0..classes)
            .map(|c| train_binary(inputs, &targets(c), config))
            .collect::<Result<_>>()?
    };
    Ok(SvmClassifier {
        inputs: d,
        classes,
        machines,
    })
}

/// Mean k-fold validation accuracy for one grid point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridScore {
    pub c: f64,
    pub kernel: Kernel,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrossValidation {
    pub best: SvmConfig,
    pub scores: Vec<GridScore>,
}

/// Grid search over box constraints and kernels. The best mean validation
/// accuracy wins; ties go to the smaller C, then the simpler kernel.
pub fn cross_validate(
    inputs: &[Vec<f64>],
    labels: &[usize],
    classes: usize,
    cs: &[f64],
    kernels: &[Kernel],
    folds: usize,
    template: &SvmConfig,
) -> Result<CrossValidation> {
    if cs.is_empty() || kernels.is_empty() {
        return Err(Error::EmptyCandidates);
    }
    let splits = cv::kfold(inputs.len(), folds, template.seed)?;
    let mut scores = Vec::with_capacity(cs.len() * kernels.len());
    for &kernel in kernels {
        for &c in cs {
            let cfg = SvmConfig {
                kernel,
                c,
                ..*template
            };
            let mut total = 0.0;
            for fold in &splits {
                let xs: Vec<Vec<f64>> = fold.train.iter().map(|&i| inputs[i].clone()).collect();
                let ys: Vec<usize> = fold.train.iter().map(|&i| labels[i]).collect();
                let model = train(&xs, &ys, classes, &cfg)?;
                let mut correct = 0usize;
                for &i in &fold.validation {
                    correct += usize::from(model.predict(&inputs[i])? == labels[i]);
                }
                total += correct as f64 / fold.validation.len() as f64;
            }
            scores.push(GridScore {
                c,
                kernel,
                accuracy: total / splits.len() as f64,
            });
        }
    }
    let mut best = scores[0];
    for s in &scores[1..] {
        let better = s.accuracy > best.accuracy
            || (s.accuracy == best.accuracy
                && (s.c < best.c
                    || (s.c == best.c && s.kernel.complexity() < best.kernel.complexity())));
        if better {
            best = *s;
        }
    }
    Ok(CrossValidation {
        best: SvmConfig {
            kernel: best.kernel,
            c: best.c,
            ..*template
        },
        scores,
    })
}
