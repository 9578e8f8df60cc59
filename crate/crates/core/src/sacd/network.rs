use rand::Rng;

use super::transition::Observation;
use crate::attention::{AttentionParams, EncodedState};
use crate::error::{ensure_dim, Error, Result};
use crate::nn::{Activation, DenseNet, ForwardCache, Real};

/// Attention encoder feeding a dense trunk. Used for the actor (logit head)
/// and for each critic (Q-value head).
///
/// Flat parameter order: `W₁`, `W₂`, then the trunk layers.
#[derive(Clone, Debug, PartialEq)]
pub struct EncodedNet<T> {
    pub encoder: AttentionParams<T>,
    pub trunk: DenseNet<T>,
}

pub struct EncodedCache<T> {
    ownship: Vec<Vec<T>>,
    intruders: Vec<Vec<Vec<T>>>,
    encoded: Vec<EncodedState<T>>,
    trunk: ForwardCache<T>,
}

impl<T> EncodedCache<T> {
    pub fn attention_weights(&self, row: usize) -> &[T] {
        &self.encoded[row].weights
    }
}

fn convert<T: Real>(v: &[f32]) -> Vec<T> {
    v.iter().map(|&x| T::of(x as f64)).collect()
}

impl<T: Real> EncodedNet<T> {
    pub fn new<R: Rng + ?Sized>(
        own_dim: usize,
        intruder_dim: usize,
        k_dim: usize,
        hidden: &[usize],
        outputs: usize,
        rng: &mut R,
    ) -> Result<Self> {
        let encoder = AttentionParams::glorot(own_dim, intruder_dim, k_dim, rng);
        let mut sizes = vec![encoder.output_dim()];
        sizes.extend_from_slice(hidden);
        sizes.push(outputs);
        let mut acts = vec![Activation::Relu; hidden.len()];
        acts.push(Activation::Identity);
        let trunk = DenseNet::new(&sizes, &acts, rng)?;
        Ok(Self { encoder, trunk })
    }

    pub fn output_dim(&self) -> usize {
        self.trunk.output_dim()
    }

    pub fn param_count(&self) -> usize {
        self.encoder.param_count() + self.trunk.param_count()
    }

    pub fn topology(&self) -> String {
        format!(
            "attn{}x{}x{};{}",
            self.encoder.own_dim,
            self.encoder.intruder_dim,
            self.encoder.k_dim,
            self.trunk.topology()
        )
    }

    pub fn from_topology(topology: &str) -> Result<Self> {
        let bad = || Error::Checkpoint(format!("bad network topology '{topology}'"));
        let (attn, trunk) = topology.split_once(';').ok_or_else(bad)?;
        let dims: Vec<usize> = attn
            .strip_prefix("attn")
            .ok_or_else(bad)?
            .split('x')
            .map(|d| d.parse().map_err(|_| bad()))
            .collect::<Result<_>>()?;
        if dims.len() != 3 {
            return Err(bad());
        }
        let encoder = AttentionParams::zeros(dims[0], dims[1], dims[2]);
        let trunk = DenseNet::from_topology(trunk)?;
        ensure_dim("trunk input", encoder.output_dim(), trunk.input_dim())?;
        Ok(Self { encoder, trunk })
    }

    pub fn flatten(&self) -> Vec<T> {
        let mut out = Vec::with_capacity(self.param_count());
        self.flatten_into(&mut out);
        out
    }

    pub fn flatten_into(&self, out: &mut Vec<T>) {
        self.encoder.flatten_into(out);
        self.trunk.flatten_into(out);
    }

    pub fn load_flat(&mut self, flat: &[T]) -> Result<()> {
        ensure_dim("network parameters", self.param_count(), flat.len())?;
        let (enc, trunk) = flat.split_at(self.encoder.param_count());
        self.encoder.load_flat(enc)?;
        self.trunk.load_flat(trunk)
    }

    pub fn blend_from(&mut self, source: &EncodedNet<T>, tau: T) -> Result<()> {
        let mut mine = self.flatten();
        let theirs = source.flatten();
        ensure_dim("blend parameters", mine.len(), theirs.len())?;
        let keep = T::one() - tau;
        for (d, &s) in mine.iter_mut().zip(&theirs) {
            *d = tau * s + keep * *d;
        }
        self.load_flat(&mine)
    }

    pub fn cast<U: Real>(&self) -> EncodedNet<U> {
        EncodedNet {
            encoder: self.encoder.cast(),
            trunk: self.trunk.cast(),
        }
    }

    pub fn all_finite(&self) -> bool {
        self.encoder.all_finite() && self.trunk.all_finite()
    }

    fn encode_rows(&self, batch: &[&Observation]) -> Result<(Vec<T>, Vec<EncodedState<T>>)> {
        let width = self.encoder.output_dim();
        let mut rows = Vec::with_capacity(batch.len() * width);
        let mut encoded = Vec::with_capacity(batch.len());
        for obs in batch {
            let s: Vec<T> = convert(&obs.ownship);
            let h: Vec<Vec<T>> = obs.intruders.iter().map(|v| convert(v)).collect();
            let e = self.encoder.encode(&s, &h)?;
            rows.extend_from_slice(&e.concat);
            encoded.push(e);
        }
        Ok((rows, encoded))
    }

    /// Row-major `[batch × outputs]` without recording a cache.
    pub fn predict(&self, batch: &[&Observation]) -> Result<Vec<T>> {
        let (rows, _) = self.encode_rows(batch)?;
        self.trunk.predict_batch(&rows, batch.len())
    }

    pub fn forward(&self, batch: &[&Observation]) -> Result<(Vec<T>, EncodedCache<T>)> {
        let (rows, encoded) = self.encode_rows(batch)?;
        let (out, trunk) = self.trunk.forward_batch(&rows, batch.len())?;
        let ownship = batch.iter().map(|o| convert(&o.ownship)).collect();
        let intruders = batch
            .iter()
            .map(|o| o.intruders.iter().map(|v| convert(v)).collect())
            .collect();
        Ok((
            out,
            EncodedCache {
                ownship,
                intruders,
                encoded,
                trunk,
            },
        ))
    }

    /// Flat parameter gradient (same order as [`EncodedNet::flatten`]).
    pub fn backward(&self, cache: &EncodedCache<T>, d_out: &[T]) -> Result<Vec<T>> {
        let (trunk_grads, d_rows) = self.trunk.backward(&cache.trunk, d_out)?;
        let width = self.encoder.output_dim();
        let mut w1 = vec![T::zero(); self.encoder.w1.len()];
        let mut w2 = vec![T::zero(); self.encoder.w2.len()];
        for (i, d_row) in d_rows.chunks_exact(width).enumerate() {
            // rows whose attention vector receives no gradient contribute nothing
            if d_row[self.encoder.own_dim..].iter().all(|g| *g == T::zero()) {
                continue;
            }
            let g = self
                .encoder
                .backward(&cache.ownship[i], &cache.intruders[i], &cache.encoded[i], d_row)?;
            for (acc, v) in w1.iter_mut().zip(&g.w1) {
                *acc += *v;
            }
            for (acc, v) in w2.iter_mut().zip(&g.w2) {
                *acc += *v;
            }
        }
        let mut flat = Vec::with_capacity(self.param_count());
        flat.extend_from_slice(&w1);
        flat.extend_from_slice(&w2);
        trunk_grads.flatten_into(&mut flat);
        Ok(flat)
    }
}
