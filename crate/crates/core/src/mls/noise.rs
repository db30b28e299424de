//! Stability of the approximant under i.i.d. Gaussian data noise.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::engine::ShapeOperator;
use super::MlsError;

/// Seed of trial `trial`'s noise stream (SplitMix64 finaliser over both words).
pub fn trial_seed(seed: u64, trial: u64) -> u64 {
    let mut z = seed ^ trial.wrapping_add(1).wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Standard normal variates by the Marsaglia polar method.
pub struct PolarGaussian<R> {
    rng: R,
    spare: Option<f64>,
}

impl<R: Rng> PolarGaussian<R> {
    pub fn new(rng: R) -> Self {
        Self { rng, spare: None }
    }

    pub fn sample(&mut self) -> f64 {
        if let Some(s) = self.spare.take() {
            return s;
        }
        loop {
            let u = 2.0 * self.rng.random::<f64>() - 1.0;
            let v = 2.0 * self.rng.random::<f64>() - 1.0;
            let s = u * u + v * v;
            if s > 0.0 && s < 1.0 {
                let f = (-2.0 * s.ln() / s).sqrt();
                self.spare = Some(v * f);
                return u * f;
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseStats {
    /// Mean over trials of `max_x |M f_noisy(x) - f(x)|`.
    pub mean_max_diff: f64,
    /// Sample standard deviation of the same.
    pub std_max_diff: f64,
    /// `max_x |M f(x) - f(x)|` without noise.
    pub clean_max_error: f64,
    /// Mean over trials of `max_x |M f_noisy(x) - M f(x)|`.
    pub mean_noise_diff: f64,
    pub std_noise_diff: f64,
    pub per_trial: Vec<f64>,
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    // Shifted by the first value, so identical inputs give exactly that
    // value and a zero spread.
    let shift = v[0];
    let mean = shift + v.iter().map(|x| x - shift).sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .filter(|d| !d.is_nan())
        .fold(0.0, f64::max)
}

/// Runs `trials` noisy evaluations through a prebuilt operator.
///
/// Trial `t` draws its noise from the stream seeded by `trial_seed(seed, t)`,
/// so results do not depend on scheduling.
pub fn noise_study(
    op: &ShapeOperator,
    clean_values: &[f64],
    target_at_eval: &[f64],
    sigma: f64,
    trials: usize,
    seed: u64,
) -> Result<NoiseStats, MlsError> {
    if trials < 2 {
        return Err(MlsError::InvalidArgument("noise study needs at least 2 trials".into()));
    }
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(MlsError::InvalidArgument(format!("sigma must be >= 0, got {sigma}")));
    }
    if target_at_eval.len() != op.rows().len() {
        return Err(MlsError::DataLength {
            expected: op.rows().len(),
            got: target_at_eval.len(),
        });
    }
    let clean_approx = op.apply(clean_values)?;
    let clean_max_error = max_abs_diff(&clean_approx, target_at_eval);

    let results: Vec<(f64, f64)> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut g = PolarGaussian::new(ChaCha8Rng::seed_from_u64(trial_seed(seed, t as u64)));
            let noisy: Vec<f64> = clean_values.iter().map(|f| f + sigma * g.sample()).collect();
            let approx = op.apply(&noisy).expect("length checked above");
            (
                max_abs_diff(&approx, target_at_eval),
                max_abs_diff(&approx, &clean_approx),
            )
        })
        .collect();
    let per_trial: Vec<f64> = results.iter().map(|r| r.0).collect();
    let noise_only: Vec<f64> = results.iter().map(|r| r.1).collect();
    let (mean_max_diff, std_max_diff) = mean_std(&per_trial);
    let (mean_noise_diff, std_noise_diff) = mean_std(&noise_only);
    Ok(NoiseStats {
        mean_max_diff,
        std_max_diff,
        clean_max_error,
        mean_noise_diff,
        std_noise_diff,
        per_trial,
    })
}
