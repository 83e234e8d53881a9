//! Brute-force SVM dual optimum for tiny problems.

use bushing_core::svm::{dual_objective, solve_dual, Kernel, SvmConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Solves `a x = b` by Gaussian elimination with partial pivoting.
fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() < 1e-12 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            let (top, bottom) = a.split_at_mut(row);
            for (t, p) in bottom[0][col..].iter_mut().zip(&top[col][col..]) {
                *t -= f * p;
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    Some(x)
}

/// Exact dual optimum by enumerating every assignment of each multiplier to
/// {0, C, free} and solving the equality-constrained stationarity system on
/// the free set.
fn brute_force_dual(inputs: &[Vec<f64>], y: &[f64], kernel: &Kernel, c: f64) -> (Vec<f64>, f64) {
    let m = inputs.len();
    let q: Vec<Vec<f64>> = (0..m)
        .map(|i| {
            (0..m)
                .map(|j| y[i] * y[j] * kernel.eval(&inputs[i], &inputs[j]))
                .collect()
        })
        .collect();
    let mut best: Option<(Vec<f64>, f64)> = None;
    for code in 0..3usize.pow(m as u32) {
        let mut state = vec![0u8; m];
        let mut rest = code;
        for s in state.iter_mut() {
            *s = (rest % 3) as u8;
            rest /= 3;
        }
        let mut alpha: Vec<f64> = state
            .iter()
            .map(|&s| if s == 1 { c } else { 0.0 })
            .collect();
        let free: Vec<usize> = (0..m).filter(|&i| state[i] == 2).collect();
        let bound_balance: f64 = (0..m)
            .filter(|&i| state[i] != 2)
            .map(|i| alpha[i] * y[i])
            .sum();
        if free.is_empty() {
            if bound_balance.abs() > 1e-12 {
                continue;
            }
        } else {
            let f = free.len();
            let mut a = vec![vec![0.0; f + 1]; f + 1];
            let mut b = vec![0.0; f + 1];
            for (r, &i) in free.iter().enumerate() {
                for (s, &j) in free.iter().enumerate() {
                    a[r][s] = q[i][j];
                }
                a[r][f] = y[i];
                a[f][r] = y[i];
                b[r] = 1.0
                    - (0..m)
                        .filter(|&j| state[j] == 1)
                        .map(|j| q[i][j] * c)
                        .sum::<f64>();
            }
            b[f] = -bound_balance;
            let Some(x) = solve(a, b) else { continue };
            if x[..f].iter().any(|&v| v < -1e-12 || v > c + 1e-12) {
                continue;
            }
            for (r, &i) in free.iter().enumerate() {
                alpha[i] = x[r].clamp(0.0, c);
            }
        }
        let value = dual_objective(inputs, y, &alpha, kernel);
        if best.as_ref().is_none_or(|(_, v)| value > *v) {
            best = Some((alpha, value));
        }
    }
    best.expect("alpha = 0 is always feasible")
}

fn instance(rng: &mut ChaCha8Rng, index: usize) -> (Vec<Vec<f64>>, Vec<f64>, Kernel, f64) {
    let m = rng.random_range(3..=6);
    let kernel = match index % 3 {
        0 => Kernel::Gaussian {
            width: rng.random_range(0.5..2.0),
        },
        1 => Kernel::Linear,
        _ => Kernel::Polynomial {
            degree: 2,
            offset: 1.0,
        },
    };
    // as many dimensions as points keeps every Gram matrix nonsingular
    let inputs: Vec<Vec<f64>> = (0..m)
        .map(|_| (0..m).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect();
    let mut y: Vec<f64> = (0..m)
        .map(|_| if rng.random_bool(0.5) { 1.0 } else { -1.0 })
        .collect();
    y[0] = 1.0;
    y[1] = -1.0;
    let c = rng.random_range(0.5..5.0);
    (inputs, y, kernel, c)
}

/// Runs SMO on `count` random problems and compares each against the
/// brute-force optimum and the KKT conditions. Returns the largest
/// objective gap.
pub fn check_instances(count: usize, seed: u64) -> Result<f64, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for index in 0..count {
        let (inputs, y, kernel, c) = instance(&mut rng, index);
        let config = SvmConfig {
            kernel,
            c,
            tolerance: 1e-6,
            seed: index as u64,
            ..SvmConfig::default()
        };
        let solution =
            solve_dual(&inputs, &y, &config).map_err(|e| format!("instance {index}: {e}"))?;
        let (_, oracle) = brute_force_dual(&inputs, &y, &kernel, c);
        let smo = dual_objective(&inputs, &y, &solution.alpha, &kernel);
        worst = worst.max((smo - oracle).abs());
        if (smo - oracle).abs() >= 1e-3 {
            return Err(format!("instance {index}: smo {smo} oracle {oracle}"));
        }

        let tol = 1e-3;
        let balance: f64 = solution.alpha.iter().zip(&y).map(|(a, y)| a * y).sum();
        if balance.abs() >= 1e-9 {
            return Err(format!("instance {index}: sum alpha y = {balance}"));
        }
        for i in 0..inputs.len() {
            let a = solution.alpha[i];
            if !(0.0..=c).contains(&a) {
                return Err(format!("instance {index}: alpha {a} outside [0, {c}]"));
            }
            let f: f64 = (0..inputs.len())
                .map(|j| solution.alpha[j] * y[j] * kernel.eval(&inputs[j], &inputs[i]))
                .sum::<f64>()
                + solution.bias;
            let margin = y[i] * f;
            let holds = if a <= 1e-8 {
                margin >= 1.0 - tol
            } else if a >= c - 1e-8 {
                margin <= 1.0 + tol
            } else {
                (margin - 1.0).abs() <= tol
            };
            if !holds {
                return Err(format!(
                    "instance {index}, point {i}: alpha {a} with margin {margin}"
                ));
            }
        }
    }
    Ok(worst)
}
