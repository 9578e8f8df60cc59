//! Central finite-difference oracle. Only ever evaluates forward passes, so
//! it stays independent of the reverse-mode code it checks.

use super::dense::DenseNet;
use crate::error::Result;

pub const FD_STEP: f64 = 1e-6;

/// `|a - n| / max(1e-8, |a| + |n|)`.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / (analytic.abs() + numeric.abs()).max(1e-8)
}

pub fn max_relative_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    assert_eq!(analytic.len(), numeric.len(), "gradient length mismatch");
    analytic
        .iter()
        .zip(numeric)
        .map(|(&a, &n)| relative_error(a, n))
        .fold(0.0, f64::max)
}

/// Central differences of `f` at `point`.
pub fn numeric_gradient(point: &[f64], step: f64, mut f: impl FnMut(&[f64]) -> f64) -> Vec<f64> {
    let mut probe = point.to_vec();
    (0..point.len())
        .map(|i| {
            let orig = probe[i];
            probe[i] = orig + step;
            let up = f(&probe);
            probe[i] = orig - step;
            let down = f(&probe);
            probe[i] = orig;
            (up - down) / (2.0 * step)
        })
        .collect()
}

/// Five-point central differences over a ladder of increasing `steps`. For
/// each component, finds the adjacent pair of steps whose estimates agree
/// best and returns the larger step's estimate. Roundoff makes the smallest
/// steps noisy and kinks make the largest ones jump, so the most stable
/// pair sits between the two.
pub fn numeric_gradient_stable(point: &[f64], steps: &[f64], mut f: impl FnMut(&[f64]) -> f64) -> Vec<f64> {
    assert!(steps.len() >= 2, "need at least two steps");
    let mut probe = point.to_vec();
    let mut estimates = vec![0.0; steps.len()];
    (0..point.len())
        .map(|i| {
            let orig = probe[i];
            for (e, &h) in estimates.iter_mut().zip(steps) {
                let mut at = |d: f64| {
                    probe[i] = orig + d;
                    f(&probe)
                };
                let (p1, m1, p2, m2) = (at(h), at(-h), at(2.0 * h), at(-2.0 * h));
                *e = (8.0 * (p1 - m1) - (p2 - m2)) / (12.0 * h);
            }
            probe[i] = orig;
            let best = (0..steps.len() - 1)
                .min_by(|&a, &b| {
                    let da = (estimates[a] - estimates[a + 1]).abs();
                    let db = (estimates[b] - estimates[b + 1]).abs();
                    da.total_cmp(&db)
                })
                .unwrap_or(0);
            estimates[best + 1]
        })
        .collect()
}

/// Compares backward-pass parameter gradients with central differences.
///
/// `loss` maps the network output to `(L, dL/dy)`. Returns the maximum
/// relative error over all parameters (0 for a parameter-free network).
pub fn grad_check(net: &DenseNet<f64>, loss: impl Fn(&[f64]) -> (f64, Vec<f64>), x: &[f64]) -> Result<f64> {
    if net.param_count() == 0 {
        return Ok(0.0);
    }
    let (y, cache) = net.forward(x)?;
    let (_, dy) = loss(&y);
    let (grads, _) = net.backward(&cache, &dy)?;
    let analytic = grads.flatten();

    let mut probe = net.clone();
    let numeric = numeric_gradient(&net.flatten(), FD_STEP, |params| {
        probe.load_flat(params).expect("same parameter count");
        let out = probe.predict_batch(x, 1).expect("same topology");
        loss(&out).0
    });
    Ok(max_relative_error(&analytic, &numeric))
}
