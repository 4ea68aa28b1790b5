//! Finite-difference check of analytic gradients.

use crate::RandomStream;

/// Denominator floor for the relative error.
pub const RELATIVE_FLOOR: f64 = 1e-6;

/// Central differences at `indices` with step `step * max(1, |theta_i|)`.
/// Returns the largest `|analytic - numeric| / max(|numeric|, floor)`.
pub fn max_relative_error(
    params: &[f64],
    analytic: &[f64],
    indices: &[usize],
    step: f64,
    mut loss: impl FnMut(&[f64]) -> f64,
) -> f64 {
    let mut theta = params.to_vec();
    let mut worst = 0.0f64;
    for &i in indices {
        let h = step * theta[i].abs().max(1.0);
        let orig = theta[i];
        theta[i] = orig + h;
        let up = loss(&theta);
        theta[i] = orig - h;
        let down = loss(&theta);
        theta[i] = orig;
        let numeric = (up - down) / (2.0 * h);
        let rel = (analytic[i] - numeric).abs() / numeric.abs().max(RELATIVE_FLOOR);
        worst = worst.max(rel);
    }
    worst
}

/// `count` distinct indices below `len`, drawn without replacement.
pub fn sample_indices(len: usize, count: usize, rng: &mut RandomStream) -> Vec<usize> {
    let mut all: Vec<usize> = (0..len).collect();
    rng.shuffle(&mut all);
    all.truncate(count.min(len));
    all.sort_unstable();
    all
}
