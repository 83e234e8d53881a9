//! Central-difference check of the MLP error gradient.

use bushing_core::mlp::{MlpConfig, MlpModel, TrainingSet};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_problem(rng: &mut ChaCha8Rng, seed: u64) -> (MlpModel, TrainingSet) {
    let inputs = rng.random_range(1..=6);
    let hidden = rng.random_range(1..=6);
    let outputs = rng.random_range(1..=4);
    let config = MlpConfig {
        inputs,
        hidden,
        outputs,
        alpha: rng.random_range(0.0..0.5),
        beta: rng.random_range(0.5..2.0),
        max_iterations: 0,
        tolerance: 1e-6,
        seed,
    };
    let n = rng.random_range(3..=12);
    let mut data = TrainingSet::default();
    for _ in 0..n {
        data.inputs
            .push((0..inputs).map(|_| rng.random_range(-1.0..1.0)).collect());
        let mut t = vec![0.0; outputs];
        if outputs == 1 {
            t[0] = f64::from(rng.random_range(0..2u8));
        } else {
            t[rng.random_range(0..outputs)] = 1.0;
        }
        data.targets.push(t);
    }
    let mut model = MlpModel::random(config).unwrap();
    // spread the weights so the tanh units are not all near zero
    let w: Vec<f64> = model
        .weights()
        .iter()
        .map(|_| rng.random_range(-1.5..1.5))
        .collect();
    model.set_weights(&w);
    (model, data)
}

/// Worst relative error between analytic and central-difference gradient
/// components, one entry per random network.
pub fn worst_relative_errors(draws: u64, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h = 1e-5;
    (0..draws)
        .map(|draw| {
            let (mut model, data) = random_problem(&mut rng, draw);
            let analytic = model.gradient(&data).unwrap();
            let w0 = model.weights();
            let mut worst = 0.0f64;
            for i in 0..w0.len() {
                let mut w = w0.clone();
                w[i] = w0[i] + h;
                model.set_weights(&w);
                let up = model.error(&data).unwrap();
                w[i] = w0[i] - h;
                model.set_weights(&w);
                let down = model.error(&data).unwrap();
                let numeric = (up - down) / (2.0 * h);
                let scale = analytic[i].abs().max(numeric.abs()).max(1e-3);
                worst = worst.max((analytic[i] - numeric).abs() / scale);
            }
            worst
        })
        .collect()
}
