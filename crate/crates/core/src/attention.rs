//! Multiplicative attention over a variable-length set of intruder vectors.
//!
//! For ownship vector `s` and intruders `h_1..h_n`:
//! `score_i = sᵀ W₁ h_i`, `η = softmax(score)`, `c = Σ η_i h_i`,
//! `k = tanh(W₂ c)`. The encoder output is `[s ‖ k]`, a fixed-length vector
//! regardless of `n`. An empty intruder set yields `c = 0` and `k = 0`.

use rand::Rng;

use crate::error::{ensure_dim, Error, Result};
use crate::nn::{softmax, Real};

/// Learnable attention matrices. `w1` is `[own_dim × intruder_dim]`, `w2` is
/// `[k_dim × intruder_dim]`, both row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct AttentionParams<T> {
    pub own_dim: usize,
    pub intruder_dim: usize,
    pub k_dim: usize,
    pub w1: Vec<T>,
    pub w2: Vec<T>,
}

/// Encoder output for a single observation.
#[derive(Clone, Debug, PartialEq)]
pub struct EncodedState<T> {
    /// Attention vector, each component in (-1, 1).
    pub k: Vec<T>,
    /// `[s ‖ k]`.
    pub concat: Vec<T>,
    /// Attention weights η over the intruders (empty when there are none).
    pub weights: Vec<T>,
    pub context: Vec<T>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AttentionGrads<T> {
    pub w1: Vec<T>,
    pub w2: Vec<T>,
    pub ownship: Vec<T>,
    pub intruders: Vec<Vec<T>>,
}

/// Bilinear score `sᵀ W₁ h` for a row-major `W₁` of shape `[dim(s) × dim(h)]`.
pub fn score<T: Real>(s: &[T], h: &[T], w1: &[T]) -> Result<T> {
    ensure_dim("score weight matrix", s.len() * h.len(), w1.len())?;
    Ok(bilinear(s, h, w1))
}

fn bilinear<T: Real>(s: &[T], h: &[T], w1: &[T]) -> T {
    let cols = h.len();
    let mut total = T::zero();
    for (row, &si) in w1.chunks_exact(cols).zip(s) {
        if si == T::zero() {
            continue;
        }
        let dot: T = row.iter().zip(h).map(|(&w, &hj)| w * hj).sum();
        total += si * dot;
    }
    total
}

/// Softmax of the intruder scores.
pub fn attention_weights<T: Real>(scores: &[T]) -> Vec<T> {
    softmax(scores)
}

/// `Σ η_i h_i`.
pub fn context<T: Real>(weights: &[T], intruders: &[Vec<T>]) -> Result<Vec<T>> {
    ensure_dim("attention weights vs intruders", intruders.len(), weights.len())?;
    let dim = intruders.first().map_or(0, Vec::len);
    let mut c = vec![T::zero(); dim];
    for (&eta, h) in weights.iter().zip(intruders) {
        ensure_dim("intruder vector", dim, h.len())?;
        for (acc, &v) in c.iter_mut().zip(h) {
            *acc += eta * v;
        }
    }
    Ok(c)
}

impl<T: Real> AttentionParams<T> {
    pub fn zeros(own_dim: usize, intruder_dim: usize, k_dim: usize) -> Self {
        Self {
            own_dim,
            intruder_dim,
            k_dim,
            w1: vec![T::zero(); own_dim * intruder_dim],
            w2: vec![T::zero(); k_dim * intruder_dim],
        }
    }

    pub fn glorot<R: Rng + ?Sized>(own_dim: usize, intruder_dim: usize, k_dim: usize, rng: &mut R) -> Self {
        let mut init = |fan_a: usize, fan_b: usize| {
            let limit = (6.0 / (fan_a + fan_b).max(1) as f64).sqrt();
            (0..fan_a * fan_b)
                .map(|_| T::of(rng.random_range(-limit..=limit)))
                .collect::<Vec<_>>()
        };
        let w1 = init(own_dim, intruder_dim);
        let w2 = init(k_dim, intruder_dim);
        Self {
            own_dim,
            intruder_dim,
            k_dim,
            w1,
            w2,
        }
    }

    pub fn output_dim(&self) -> usize {
        self.own_dim + self.k_dim
    }

    pub fn param_count(&self) -> usize {
        self.w1.len() + self.w2.len()
    }

    /// Flattening order: `W₁` row-major, then `W₂` row-major.
    pub fn flatten_into(&self, out: &mut Vec<T>) {
        out.extend_from_slice(&self.w1);
        out.extend_from_slice(&self.w2);
    }

    pub fn load_flat(&mut self, flat: &[T]) -> Result<()> {
        ensure_dim("attention parameters", self.param_count(), flat.len())?;
        let (a, b) = flat.split_at(self.w1.len());
        self.w1.copy_from_slice(a);
        self.w2.copy_from_slice(b);
        Ok(())
    }

    pub fn cast<U: Real>(&self) -> AttentionParams<U> {
        AttentionParams {
            own_dim: self.own_dim,
            intruder_dim: self.intruder_dim,
            k_dim: self.k_dim,
            w1: self.w1.iter().map(|v| U::of(v.f64())).collect(),
            w2: self.w2.iter().map(|v| U::of(v.f64())).collect(),
        }
    }

    pub fn all_finite(&self) -> bool {
        self.w1.iter().chain(&self.w2).all(|v| v.is_finite())
    }

    fn check_inputs(&self, s: &[T], intruders: &[Vec<T>]) -> Result<()> {
        ensure_dim("ownship vector", self.own_dim, s.len())?;
        for h in intruders {
            ensure_dim("intruder vector", self.intruder_dim, h.len())?;
        }
        Ok(())
    }

    pub fn encode(&self, s: &[T], intruders: &[Vec<T>]) -> Result<EncodedState<T>> {
        self.check_inputs(s, intruders)?;
        let (weights, c) = if intruders.is_empty() {
            (Vec::new(), vec![T::zero(); self.intruder_dim])
        } else {
            let scores: Vec<T> = intruders.iter().map(|h| bilinear(s, h, &self.w1)).collect();
            if scores.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("attention scores"));
            }
            let eta = attention_weights(&scores);
            let c = context(&eta, intruders)?;
            (eta, c)
        };
        let k: Vec<T> = self
            .w2
            .chunks_exact(self.intruder_dim)
            .map(|row| row.iter().zip(&c).map(|(&w, &cv)| w * cv).sum::<T>().tanh())
            .collect();
        let mut concat = Vec::with_capacity(self.output_dim());
        concat.extend_from_slice(s);
        concat.extend_from_slice(&k);
        Ok(EncodedState {
            k,
            concat,
            weights,
            context: c,
        })
    }

    /// Pulls `dL/d[s ‖ k]` back through the encoder.
    pub fn backward(
        &self,
        s: &[T],
        intruders: &[Vec<T>],
        encoded: &EncodedState<T>,
        d_concat: &[T],
    ) -> Result<AttentionGrads<T>> {
        self.check_inputs(s, intruders)?;
        ensure_dim("encoder upstream gradient", self.output_dim(), d_concat.len())?;
        ensure_dim("encoded weights", intruders.len(), encoded.weights.len())?;
        let (d_s_direct, d_k) = d_concat.split_at(self.own_dim);
        let dh = self.intruder_dim;

        // u = W₂ c, k = tanh(u)
        let d_u: Vec<T> = d_k
            .iter()
            .zip(&encoded.k)
            .map(|(&g, &k)| g * (T::one() - k * k))
            .collect();
        let mut w2 = vec![T::zero(); self.w2.len()];
        let mut d_c = vec![T::zero(); dh];
        for (r, &gu) in d_u.iter().enumerate() {
            let row = &self.w2[r * dh..(r + 1) * dh];
            let grow = &mut w2[r * dh..(r + 1) * dh];
            for j in 0..dh {
                grow[j] = gu * encoded.context[j];
                d_c[j] += gu * row[j];
            }
        }

        let mut w1 = vec![T::zero(); self.w1.len()];
        let mut ownship = d_s_direct.to_vec();
        let mut d_intruders = Vec::with_capacity(intruders.len());
        if !intruders.is_empty() {
            let eta = &encoded.weights;
            let d_eta: Vec<T> = intruders
                .iter()
                .map(|h| h.iter().zip(&d_c).map(|(&a, &b)| a * b).sum())
                .collect();
            let mean: T = eta.iter().zip(&d_eta).map(|(&e, &d)| e * d).sum();
            // W₁ᵀ s, shared by every intruder's score gradient
            let mut w1t_s = vec![T::zero(); dh];
            for (row, &si) in self.w1.chunks_exact(dh).zip(s) {
                for (acc, &w) in w1t_s.iter_mut().zip(row) {
                    *acc += si * w;
                }
            }
            for ((h, &e), &de) in intruders.iter().zip(eta).zip(&d_eta) {
                let d_score = e * (de - mean);
                let mut d_h: Vec<T> = d_c.iter().map(|&g| e * g).collect();
                if d_score != T::zero() {
                    for (acc, &v) in d_h.iter_mut().zip(&w1t_s) {
                        *acc += d_score * v;
                    }
                    for (i, &si) in s.iter().enumerate() {
                        let grow = &mut w1[i * dh..(i + 1) * dh];
                        let row = &self.w1[i * dh..(i + 1) * dh];
                        let mut w1h = T::zero();
                        for j in 0..dh {
                            grow[j] += d_score * si * h[j];
                            w1h += row[j] * h[j];
                        }
                        ownship[i] += d_score * w1h;
                    }
                }
                d_intruders.push(d_h);
            }
        }
        Ok(AttentionGrads {
            w1,
            w2,
            ownship,
            intruders: d_intruders,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{max_relative_error, numeric_gradient};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn identity2() -> Vec<f64> {
        vec![1.0, 0.0, 0.0, 1.0]
    }

    #[test]
    fn score_examples() {
        assert!((score(&[1.0, 0.0], &[0.3, 0.7], &identity2()).unwrap() - 0.3).abs() < 1e-15);
        assert_eq!(score(&[0.4, -2.0], &[1.5, 0.7], &[0.0; 4]).unwrap(), 0.0);
        assert_eq!(score(&[1.0, 1.0], &[0.5, -0.5], &identity2()).unwrap(), 0.0);
        assert!(score(&[1.0], &[0.5, -0.5], &identity2()).is_err());
    }

    #[test]
    fn weight_examples() {
        assert_eq!(attention_weights(&[3.7f64]), vec![1.0]);
        assert_eq!(attention_weights(&[0.2f64, 0.2]), vec![0.5, 0.5]);
        let w = attention_weights(&[2.0f64.ln(), 0.0]);
        assert!((w[0] - 2.0 / 3.0).abs() < 1e-9);
        assert!((w[1] - 1.0 / 3.0).abs() < 1e-9);
    }

    #[test]
    fn context_examples() {
        let c = context(&[0.5, 0.5], &[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert_eq!(c, vec![0.5, 0.5]);
        let h = vec![0.2, -0.9, 4.0];
        assert_eq!(context(&[1.0], &[h.clone()]).unwrap(), h);
        let same = vec![h.clone(), h.clone(), h.clone()];
        let c: Vec<f64> = context(&[1.0 / 3.0; 3], &same).unwrap();
        for (a, b) in c.iter().zip(&h) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(context(&[1.0], &[h.clone(), h]).is_err());
    }

    #[test]
    fn zero_w2_gives_zero_k() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut p = AttentionParams::<f64>::glorot(3, 2, 2, &mut rng);
        p.w2.iter_mut().for_each(|w| *w = 0.0);
        let e = p.encode(&[1.0, 2.0, 3.0], &[vec![0.5, 0.1], vec![-2.0, 3.0]]).unwrap();
        assert_eq!(e.k, vec![0.0, 0.0]);
    }

    #[test]
    fn empty_intruder_set_gives_zero_attention_vector() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let p = AttentionParams::<f64>::glorot(3, 2, 2, &mut rng);
        let e = p.encode(&[1.0, 2.0, 3.0], &[]).unwrap();
        assert_eq!(e.k, vec![0.0, 0.0]);
        assert_eq!(e.concat, vec![1.0, 2.0, 3.0, 0.0, 0.0]);
        assert!(e.weights.is_empty());
    }

    #[test]
    fn permutation_leaves_k_unchanged() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p = AttentionParams::<f64>::glorot(4, 3, 3, &mut rng);
        let s = [0.3, -0.2, 0.9, 0.1];
        let h = vec![vec![0.1, 0.2, 0.3], vec![-1.0, 0.5, 0.0], vec![0.7, 0.7, -0.4]];
        let rev: Vec<_> = h.iter().rev().cloned().collect();
        let a = p.encode(&s, &h).unwrap();
        let b = p.encode(&s, &rev).unwrap();
        for (x, y) in a.k.iter().zip(&b.k) {
            assert!((x - y).abs() < 1e-12);
        }
        for (x, y) in a.weights.iter().zip(b.weights.iter().rev()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn duplicating_identical_intruders_keeps_context() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let p = AttentionParams::<f64>::glorot(2, 2, 2, &mut rng);
        let h = vec![0.4, -0.6];
        let one = p.encode(&[1.0, 0.5], &[h.clone()]).unwrap();
        let two = p.encode(&[1.0, 0.5], &[h.clone(), h]).unwrap();
        assert_eq!(one.weights, vec![1.0]);
        assert_eq!(two.weights, vec![0.5, 0.5]);
        for (x, y) in one.context.iter().zip(&two.context) {
            assert!((x - y).abs() < 1e-15);
        }
    }

    #[test]
    fn backward_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let p = AttentionParams::<f64>::glorot(3, 4, 4, &mut rng);
        let s = vec![0.5, -1.2, 0.8];
        let h = vec![
            vec![0.3, -0.4, 1.0, 0.2],
            vec![-0.7, 0.9, 0.1, -0.5],
            vec![1.1, 0.0, -0.3, 0.6],
        ];
        // L = Σ_j c_j * concat_j with fixed coefficients
        let coef: Vec<f64> = (0..p.output_dim()).map(|i| 0.3 + 0.17 * i as f64).collect();
        let loss = |p: &AttentionParams<f64>, s: &[f64], h: &[Vec<f64>]| {
            let e = p.encode(s, h).unwrap();
            e.concat.iter().zip(&coef).map(|(a, b)| a * b).sum::<f64>()
        };
        let e = p.encode(&s, &h).unwrap();
        let g = p.backward(&s, &h, &e, &coef).unwrap();

        let mut flat = Vec::new();
        p.flatten_into(&mut flat);
        let mut probe = p.clone();
        let num = numeric_gradient(&flat, 1e-6, |x| {
            probe.load_flat(x).unwrap();
            loss(&probe, &s, &h)
        });
        let mut analytic = g.w1.clone();
        analytic.extend(&g.w2);
        assert!(max_relative_error(&analytic, &num) < 1e-4);

        let num_s = numeric_gradient(&s, 1e-6, |x| loss(&p, x, &h));
        assert!(max_relative_error(&g.ownship, &num_s) < 1e-4);

        for i in 0..h.len() {
            let num_h = numeric_gradient(&h[i], 1e-6, |x| {
                let mut hh = h.clone();
                hh[i] = x.to_vec();
                loss(&p, &s, &hh)
            });
            assert!(max_relative_error(&g.intruders[i], &num_h) < 1e-4);
        }
    }

    proptest! {
        #[test]
        fn k_is_bounded_and_weights_normalized(
            seed in any::<u64>(),
            n in 0usize..6,
            scale in 0.1f64..20.0,
        ) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let p = AttentionParams::<f64>::glorot(3, 3, 3, &mut rng);
            let s: Vec<f64> = (0..3).map(|_| scale * rng.random_range(-1.0..1.0)).collect();
            let h: Vec<Vec<f64>> = (0..n)
                .map(|_| (0..3).map(|_| scale * rng.random_range(-1.0..1.0)).collect())
                .collect();
            let e = p.encode(&s, &h).unwrap();
            prop_assert!(e.k.iter().all(|v| v.abs() <= 1.0));
            if n > 0 {
                let sum: f64 = e.weights.iter().sum();
                prop_assert!((sum - 1.0).abs() < 1e-9);
                prop_assert!(e.weights.iter().all(|&w| w >= 0.0));
            }
        }
    }
}
