//! An eight-instance Learn++ session driven by scripted hypotheses, with
//! its hand-executed trace.

use std::collections::VecDeque;

use bushing_core::classifier::Classify;
use bushing_core::learnpp::{Ensemble, Outcome, SessionConfig, WeakLearner};
use bushing_core::Result;

const TOL: f64 = 1e-12;

/// Looks up the prediction for instance `x[0]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Table(pub Vec<usize>);

impl Classify for Table {
    fn input_dim(&self) -> usize {
        1
    }
    fn n_classes(&self) -> usize {
        3
    }
    fn predict(&self, x: &[f64]) -> Result<usize> {
        Ok(self.0[x[0] as usize])
    }
}

/// Hands out scripted tables in order, ignoring the training sample.
pub struct Scripted(pub VecDeque<Vec<usize>>);

impl WeakLearner for Scripted {
    type Model = Table;

    fn train(&mut self, _: &[Vec<f64>], _: &[usize], _: usize, _: u64) -> Result<Table> {
        Ok(Table(self.0.pop_front().expect("script exhausted")))
    }
}

pub const LABELS: [usize; 8] = [0, 0, 0, 1, 1, 1, 2, 2];

pub const SCRIPT: [[usize; 8]; 7] = [
    [0, 0, 2, 0, 0, 1, 2, 2],
    [0, 0, 0, 0, 1, 1, 2, 2],
    [0, 0, 0, 1, 0, 1, 2, 2],
    [0, 0, 0, 0, 1, 1, 0, 0],
    [0, 0, 0, 0, 2, 1, 1, 2],
    [2, 2, 0, 1, 2, 0, 2, 2],
    [0, 0, 0, 2, 1, 0, 2, 1],
];

/// Expected values of one attempt.
struct Expected {
    outcome: Outcome,
    before: [f64; 8],
    epsilon: f64,
    beta: Option<f64>,
    composite_error: Option<f64>,
    composite_beta: Option<f64>,
    after: Option<[f64; 8]>,
}

const T: f64 = 1.0 / 30.0;
const LATE: [f64; 8] = [T, T, 1.0 / 18.0, 5.0 / 18.0, 0.5, T, T, T];

fn expected() -> Vec<Expected> {
    use Outcome::*;
    let second = [0.1, 0.1, 1.0 / 6.0, 1.0 / 6.0, 1.0 / 6.0, 0.1, 0.1, 0.1];
    let third = [0.06, 0.06, 0.1, 0.5, 0.1, 0.06, 0.06, 0.06];
    vec![
        Expected {
            outcome: Accepted,
            before: [0.125; 8],
            epsilon: 0.375,
            beta: Some(0.6),
            composite_error: Some(0.375),
            composite_beta: Some(0.6),
            after: Some(second),
        },
        Expected {
            outcome: Accepted,
            before: second,
            epsilon: 1.0 / 6.0,
            beta: Some(0.2),
            composite_error: Some(1.0 / 6.0),
            composite_beta: Some(0.2),
            after: Some(third),
        },
        Expected {
            outcome: Accepted,
            before: third,
            epsilon: 0.1,
            beta: Some(1.0 / 9.0),
            composite_error: Some(0.1),
            composite_beta: Some(1.0 / 9.0),
            after: Some(LATE),
        },
        // weak error below one half but composite above: discarded
        Expected {
            outcome: RejectedComposite,
            before: LATE,
            epsilon: 31.0 / 90.0,
            beta: Some(31.0 / 59.0),
            composite_error: Some(7.0 / 9.0),
            composite_beta: None,
            after: None,
        },
        Expected {
            outcome: RejectedWeak,
            before: LATE,
            epsilon: 73.0 / 90.0,
            beta: None,
            composite_error: None,
            composite_beta: None,
            after: None,
        },
        Expected {
            outcome: RejectedWeak,
            before: LATE,
            epsilon: 0.6,
            beta: None,
            composite_error: None,
            composite_beta: None,
            after: None,
        },
        // composite unchanged: error exactly one half, kept with B = 1
        Expected {
            outcome: Accepted,
            before: LATE,
            epsilon: 31.0 / 90.0,
            beta: Some(31.0 / 59.0),
            composite_error: Some(0.5),
            composite_beta: Some(1.0),
            after: Some(LATE),
        },
    ]
}

/// Final vote shares per instance.
pub const CONFIDENCE: [[f64; 3]; 8] = [
    [1.0, 0.0, 0.0],
    [1.0, 0.0, 0.0],
    [0.897032518714247, 0.0, 0.10296748128575299],
    [0.4273830164881449, 0.44289610783327793, 0.12972087567857715],
    [0.545863589119031, 0.4541364108809691, 0.0],
    [0.12972087567857715, 0.8702791243214227, 0.0],
    [0.0, 0.0, 1.0],
    [0.0, 0.12972087567857715, 0.8702791243214227],
];

fn near(what: &str, a: f64, b: f64) -> std::result::Result<(), String> {
    if (a - b).abs() < TOL {
        Ok(())
    } else {
        Err(format!("{what}: {a} vs {b}"))
    }
}

fn near_opt(what: &str, a: Option<f64>, b: Option<f64>) -> std::result::Result<(), String> {
    match (a, b) {
        (Some(a), Some(b)) => near(what, a, b),
        (None, None) => Ok(()),
        _ => Err(format!("{what}: {a:?} vs {b:?}")),
    }
}

fn near_all(what: &str, a: &[f64], b: &[f64]) -> std::result::Result<(), String> {
    if a.len() != b.len() {
        return Err(format!("{what}: length {} vs {}", a.len(), b.len()));
    }
    a.iter()
        .zip(b)
        .enumerate()
        .try_for_each(|(i, (x, y))| near(&format!("{what}[{i}]"), *x, *y))
}

/// Runs the scripted session and compares every step, the kept betas and
/// the final confidences with the hand trace.
pub fn check_scripted_session() -> std::result::Result<(), String> {
    let inputs: Vec<Vec<f64>> = (0..8).map(|i| vec![i as f64]).collect();
    let mut learner = Scripted(SCRIPT.iter().map(|r| r.to_vec()).collect());
    let mut ensemble = Ensemble::new(1, 3).map_err(|e| e.to_string())?;
    let config = SessionConfig {
        hypotheses: 4,
        ..SessionConfig::default()
    };
    let trace = ensemble
        .run_session(&mut learner, &inputs, &LABELS, &config)
        .map_err(|e| e.to_string())?;
    if !learner.0.is_empty() {
        return Err(format!("{} scripted hypotheses unused", learner.0.len()));
    }
    let expected = expected();
    if trace.steps.len() != expected.len() {
        return Err(format!(
            "{} steps, expected {}",
            trace.steps.len(),
            expected.len()
        ));
    }
    for (k, (s, e)) in trace.steps.iter().zip(&expected).enumerate() {
        if s.outcome != e.outcome {
            return Err(format!(
                "step {k}: outcome {:?}, expected {:?}",
                s.outcome, e.outcome
            ));
        }
        near_all(
            &format!("step {k} D before"),
            &s.distribution_before,
            &e.before,
        )?;
        near(&format!("step {k} epsilon"), s.epsilon, e.epsilon)?;
        near_opt(&format!("step {k} beta"), s.beta, e.beta)?;
        near_opt(&format!("step {k} E"), s.composite_error, e.composite_error)?;
        near_opt(&format!("step {k} B"), s.composite_beta, e.composite_beta)?;
        match (&s.distribution_after, &e.after) {
            (Some(a), Some(b)) => near_all(&format!("step {k} D after"), a, b)?,
            (None, None) => {}
            _ => return Err(format!("step {k}: distribution after present mismatch")),
        }
    }
    let betas: Vec<f64> = ensemble.hypotheses().map(|h| h.beta).collect();
    near_all("kept betas", &betas, &[0.6, 0.2, 1.0 / 9.0, 31.0 / 59.0])?;
    for (i, g) in CONFIDENCE.iter().enumerate() {
        let (class, gamma) = ensemble
            .classify_with_confidence(&[i as f64])
            .map_err(|e| e.to_string())?;
        near_all(&format!("confidence {i}"), &gamma, g)?;
        near(&format!("confidence {i} sum"), gamma.iter().sum(), 1.0)?;
        let best = (0..3).fold(0, |b, c| if g[c] > g[b] { c } else { b });
        if class != best {
            return Err(format!("instance {i}: class {class}, expected {best}"));
        }
    }
    Ok(())
}
