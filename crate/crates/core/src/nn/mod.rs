//! Dense-network numerical core: forward/backward passes, softmax, Adam and
//! a finite-difference gradient checker.

mod adam;
pub mod checkpoint;
mod dense;
mod gradcheck;
mod real;

pub use adam::{AdamConfig, AdamState};
pub use dense::{Activation, DenseGrads, DenseNet, ForwardCache, Layer, LayerGrad};
pub use gradcheck::{grad_check, max_relative_error, numeric_gradient, numeric_gradient_stable, relative_error};
pub use real::{Precision, Real};

/// Numerically stable softmax (max-subtracted).
pub fn softmax<T: Real>(z: &[T]) -> Vec<T> {
    let mut out = z.to_vec();
    softmax_in_place(&mut out);
    out
}

pub fn softmax_in_place<T: Real>(z: &mut [T]) {
    if z.is_empty() {
        return;
    }
    let max = z.iter().copied().fold(T::neg_infinity(), T::max);
    let mut sum = T::zero();
    for v in z.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    for v in z.iter_mut() {
        *v = *v / sum;
    }
}

/// `z - logsumexp(z)`, computed without overflow.
pub fn log_softmax<T: Real>(z: &[T]) -> Vec<T> {
    if z.is_empty() {
        return Vec::new();
    }
    let max = z.iter().copied().fold(T::neg_infinity(), T::max);
    let lse = max + z.iter().map(|&v| (v - max).exp()).sum::<T>().ln();
    z.iter().map(|&v| v - lse).collect()
}

/// Index of the largest entry; ties resolve to the lowest index.
pub fn argmax<T: PartialOrd + Copy>(values: &[T]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn softmax_of_equal_logits_is_uniform() {
        assert_eq!(softmax(&[0.0f64, 0.0]), vec![0.5, 0.5]);
    }

    #[test]
    fn softmax_two_and_zero() {
        // e^2 / (e^2 + 1) evaluated by hand
        let p = softmax(&[2.0f64, 0.0]);
        assert!((p[0] - 0.8808).abs() < 1e-4);
        assert!((p[1] - 0.1192).abs() < 1e-4);
    }

    #[test]
    fn softmax_survives_huge_logits() {
        let p = softmax(&[1000.0f64, 0.0]);
        assert!(p.iter().all(|v| v.is_finite()));
        assert!((p[0] - 1.0).abs() < 1e-12);
        assert!(p[1] < 1e-300);
    }

    #[test]
    fn log_softmax_agrees_with_softmax() {
        let z = [0.3f64, -1.2, 4.0, 0.0];
        let p = softmax(&z);
        let lp = log_softmax(&z);
        for (a, b) in p.iter().zip(&lp) {
            assert!((a.ln() - b).abs() < 1e-12);
        }
    }

    #[test]
    fn argmax_prefers_first_of_ties() {
        assert_eq!(argmax(&[1.0, 3.0, 3.0]), 1);
        assert_eq!(argmax(&[10.0, 0.0, 0.0, 0.0, 0.0, 0.0]), 0);
    }

    proptest! {
        #[test]
        fn softmax_is_a_distribution(z in prop::collection::vec(-30.0f64..30.0, 1..12)) {
            let p = softmax(&z);
            let sum: f64 = p.iter().sum();
            prop_assert!((sum - 1.0).abs() < 1e-9);
            prop_assert!(p.iter().all(|&v| (0.0..=1.0).contains(&v)));
        }
    }
}
