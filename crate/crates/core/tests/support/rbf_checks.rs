//! RBF network properties checkable without a reference implementation.

use bushing_core::classifier::accuracy;
use bushing_core::mlp::TrainingSet;
use bushing_core::rbf::{self, RbfConfig, RbfModel};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn blobs(rng: &mut ChaCha8Rng, means: &[[f64; 2]], per: usize, sd: f64) -> Vec<Vec<f64>> {
    let mut out = Vec::new();
    for m in means {
        for _ in 0..per {
            let dx: f64 = StandardNormal.sample(rng);
            let dy: f64 = StandardNormal.sample(rng);
            out.push(vec![m[0] + sd * dx, m[1] + sd * dy]);
        }
    }
    out
}

pub fn twelve_points() -> TrainingSet {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let inputs: Vec<Vec<f64>> = (0..12)
        .map(|_| vec![rng.random_range(0.0..1.0), rng.random_range(0.0..1.0)])
        .collect();
    let labels: Vec<usize> = (0..12).map(|i| i % 3).collect();
    TrainingSet::from_labels(inputs, &labels, 3).unwrap()
}

/// EM on random blob mixtures; every log-likelihood trace must be
/// non-decreasing. Returns the number of traces checked.
pub fn em_log_likelihood_monotone() -> Result<usize, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut checked = 0;
    for run in 0..12u64 {
        let k = 1 + (run as usize % 4);
        let means: Vec<[f64; 2]> = (0..k)
            .map(|_| [rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)])
            .collect();
        let sd = rng.random_range(0.2..1.0);
        let data = blobs(&mut rng, &means, 25, sd);
        for centers in [1, 2, 5, 9] {
            let cfg = RbfConfig {
                centers,
                seed: run,
                ..RbfConfig::default()
            };
            let fit = rbf::fit_centers_em(&data, &cfg).map_err(|e| e.to_string())?;
            if fit.log_likelihood.len() < 2 {
                return Err(format!(
                    "run {run}, {centers} centers: no EM iterations recorded"
                ));
            }
            for pair in fit.log_likelihood.windows(2) {
                if pair[1] - pair[0] < -1e-9 {
                    return Err(format!(
                        "run {run}, {centers} centers: {} -> {}",
                        pair[0], pair[1]
                    ));
                }
            }
            checked += 1;
        }
    }
    Ok(checked)
}

/// One narrow basis on each of twelve training points; the trained network
/// must reproduce every training label. Returns the training accuracy.
pub fn interpolates_twelve_points() -> Result<f64, String> {
    let data = twelve_points();
    let cfg = RbfConfig {
        centers: 12,
        outputs: 3,
        alpha: 0.0,
        max_iterations: 2000,
        tolerance: 1e-10,
        ..RbfConfig::default()
    };
    let widths = vec![0.05; 12];
    let (output, _) =
        rbf::train_output_layer(&data.inputs, &widths, &data, &cfg).map_err(|e| e.to_string())?;
    let model =
        RbfModel::new(cfg, data.inputs.clone(), widths, output).map_err(|e| e.to_string())?;
    let acc = accuracy(&model, &data.inputs, &data.labels()).map_err(|e| e.to_string())?;
    if acc == 1.0 {
        Ok(acc)
    } else {
        Err(format!("training accuracy {acc}"))
    }
}
