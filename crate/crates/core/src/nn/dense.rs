use std::sync::atomic::{AtomicU64, Ordering};

use rand::Rng;

use super::real::Real;
use crate::error::{ensure_dim, Error, Result};

static NEXT_NET_ID: AtomicU64 = AtomicU64::new(1);

fn fresh_id() -> u64 {
    NEXT_NET_ID.fetch_add(1, Ordering::Relaxed)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Tanh,
    Identity,
}

impl Activation {
    pub fn as_str(self) -> &'static str {
        match self {
            Activation::Relu => "relu",
            Activation::Tanh => "tanh",
            Activation::Identity => "identity",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "relu" => Some(Activation::Relu),
            "tanh" => Some(Activation::Tanh),
            "identity" => Some(Activation::Identity),
            _ => None,
        }
    }

    #[inline]
    fn apply<T: Real>(self, z: T) -> T {
        match self {
            Activation::Relu => z.max(T::zero()),
            Activation::Tanh => z.tanh(),
            Activation::Identity => z,
        }
    }

    /// Derivative evaluated at the pre-activation `z`.
    #[inline]
    fn derivative<T: Real>(self, z: T) -> T {
        match self {
            Activation::Relu => {
                if z > T::zero() {
                    T::one()
                } else {
                    T::zero()
                }
            }
            Activation::Tanh => {
                let t = z.tanh();
                T::one() - t * t
            }
            Activation::Identity => T::one(),
        }
    }
}

/// Affine map followed by an elementwise activation. Weights are `[out × in]`
/// row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Layer<T> {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<T>,
    pub bias: Vec<T>,
    pub activation: Activation,
}

impl<T: Real> Layer<T> {
    pub fn zeros(inputs: usize, outputs: usize, activation: Activation) -> Self {
        Self {
            inputs,
            outputs,
            weights: vec![T::zero(); inputs * outputs],
            bias: vec![T::zero(); outputs],
            activation,
        }
    }

    /// Symmetric uniform init in ±sqrt(6 / (fan_in + fan_out)), zero bias.
    pub fn glorot<R: Rng + ?Sized>(inputs: usize, outputs: usize, activation: Activation, rng: &mut R) -> Self {
        let limit = (6.0 / (inputs + outputs).max(1) as f64).sqrt();
        let weights = (0..inputs * outputs)
            .map(|_| T::of(rng.random_range(-limit..=limit)))
            .collect();
        Self {
            inputs,
            outputs,
            weights,
            bias: vec![T::zero(); outputs],
            activation,
        }
    }

    pub fn identity(dim: usize, activation: Activation) -> Self {
        let mut layer = Self::zeros(dim, dim, activation);
        for i in 0..dim {
            layer.weights[i * dim + i] = T::one();
        }
        layer
    }
}

/// Fully connected feed-forward network.
///
/// Parameters flatten in layer order; within a layer the row-major weight
/// matrix comes first, then the bias vector. Checkpoints rely on this order.
#[derive(Debug)]
pub struct DenseNet<T> {
    layers: Vec<Layer<T>>,
    id: u64,
    generation: u64,
}

impl<T: Clone> Clone for DenseNet<T> {
    fn clone(&self) -> Self {
        Self {
            layers: self.layers.clone(),
            id: fresh_id(),
            generation: 0,
        }
    }
}

impl<T: PartialEq> PartialEq for DenseNet<T> {
    fn eq(&self, other: &Self) -> bool {
        self.layers == other.layers
    }
}

/// Per-layer inputs and pre-activations recorded by a forward pass.
#[derive(Clone, Debug)]
pub struct ForwardCache<T> {
    net_id: u64,
    generation: u64,
    batch: usize,
    inputs: Vec<Vec<T>>,
    pre_activations: Vec<Vec<T>>,
}

impl<T> ForwardCache<T> {
    pub fn batch(&self) -> usize {
        self.batch
    }

    pub fn pre_activations(&self) -> &[Vec<T>] {
        &self.pre_activations
    }

    /// Number of scalars held, for a fixed topology this depends only on the
    /// batch size.
    pub fn footprint(&self) -> usize {
        self.inputs.iter().map(Vec::len).sum::<usize>() + self.pre_activations.iter().map(Vec::len).sum::<usize>()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LayerGrad<T> {
    pub weights: Vec<T>,
    pub bias: Vec<T>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DenseGrads<T> {
    pub layers: Vec<LayerGrad<T>>,
}

impl<T: Real> DenseGrads<T> {
    pub fn flatten(&self) -> Vec<T> {
        let mut out = Vec::new();
        self.flatten_into(&mut out);
        out
    }

    pub fn flatten_into(&self, out: &mut Vec<T>) {
        for layer in &self.layers {
            out.extend_from_slice(&layer.weights);
            out.extend_from_slice(&layer.bias);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weights.iter().chain(&l.bias).all(|g| *g == T::zero()))
    }
}

impl<T: Real> DenseNet<T> {
    pub fn from_layers(layers: Vec<Layer<T>>) -> Result<Self> {
        for pair in layers.windows(2) {
            ensure_dim("layer chaining", pair[0].outputs, pair[1].inputs)?;
        }
        for layer in &layers {
            ensure_dim("layer weights", layer.inputs * layer.outputs, layer.weights.len())?;
            ensure_dim("layer bias", layer.outputs, layer.bias.len())?;
        }
        Ok(Self {
            layers,
            id: fresh_id(),
            generation: 0,
        })
    }

    /// `sizes` lists every width from input to output; one activation per
    /// layer.
    pub fn new<R: Rng + ?Sized>(sizes: &[usize], activations: &[Activation], rng: &mut R) -> Result<Self> {
        if sizes.len() < 2 {
            return Err(Error::Config("a network needs at least one layer".into()));
        }
        ensure_dim("activation count", sizes.len() - 1, activations.len())?;
        let layers = sizes
            .windows(2)
            .zip(activations)
            .map(|(w, &act)| Layer::glorot(w[0], w[1], act, rng))
            .collect();
        Self::from_layers(layers)
    }

    pub fn zeros(sizes: &[usize], activations: &[Activation]) -> Result<Self> {
        if sizes.len() < 2 {
            return Err(Error::Config("a network needs at least one layer".into()));
        }
        ensure_dim("activation count", sizes.len() - 1, activations.len())?;
        let layers = sizes
            .windows(2)
            .zip(activations)
            .map(|(w, &act)| Layer::zeros(w[0], w[1], act))
            .collect();
        Self::from_layers(layers)
    }

    pub fn layers(&self) -> &[Layer<T>] {
        &self.layers
    }

    /// Mutable access to a layer; invalidates outstanding forward caches.
    pub fn layer_mut(&mut self, index: usize) -> &mut Layer<T> {
        self.generation += 1;
        &mut self.layers[index]
    }

    pub fn input_dim(&self) -> usize {
        self.layers.first().map_or(0, |l| l.inputs)
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map_or(0, |l| l.outputs)
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    /// Compact description, e.g. `51x256:relu,256x6:identity`.
    pub fn topology(&self) -> String {
        self.layers
            .iter()
            .map(|l| format!("{}x{}:{}", l.inputs, l.outputs, l.activation.as_str()))
            .collect::<Vec<_>>()
            .join(",")
    }

    pub fn from_topology(topology: &str) -> Result<Self> {
        let mut layers = Vec::new();
        for part in topology.split(',').filter(|p| !p.is_empty()) {
            let bad = || Error::Checkpoint(format!("bad layer spec '{part}'"));
            let (dims, act) = part.split_once(':').ok_or_else(bad)?;
            let (i, o) = dims.split_once('x').ok_or_else(bad)?;
            let inputs = i.parse().map_err(|_| bad())?;
            let outputs = o.parse().map_err(|_| bad())?;
            let act = Activation::parse(act).ok_or_else(bad)?;
            layers.push(Layer::zeros(inputs, outputs, act));
        }
        Self::from_layers(layers)
    }

    pub fn flatten(&self) -> Vec<T> {
        let mut out = Vec::with_capacity(self.param_count());
        self.flatten_into(&mut out);
        out
    }

    pub fn flatten_into(&self, out: &mut Vec<T>) {
        for layer in &self.layers {
            out.extend_from_slice(&layer.weights);
            out.extend_from_slice(&layer.bias);
        }
    }

    /// Overwrites all parameters from a flat slice in checkpoint order.
    pub fn load_flat(&mut self, flat: &[T]) -> Result<()> {
        ensure_dim("flat parameter vector", self.param_count(), flat.len())?;
        let mut offset = 0;
        for layer in &mut self.layers {
            let nw = layer.weights.len();
            layer.weights.copy_from_slice(&flat[offset..offset + nw]);
            offset += nw;
            let nb = layer.bias.len();
            layer.bias.copy_from_slice(&flat[offset..offset + nb]);
            offset += nb;
        }
        self.generation += 1;
        Ok(())
    }

    pub fn all_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weights.iter().chain(&l.bias).all(|v| v.is_finite()))
    }

    /// `self <- tau * source + (1 - tau) * self`.
    pub fn blend_from(&mut self, source: &DenseNet<T>, tau: T) -> Result<()> {
        ensure_dim("blend parameter count", self.param_count(), source.param_count())?;
        let keep = T::one() - tau;
        for (dst, src) in self.layers.iter_mut().zip(&source.layers) {
            for (d, s) in dst.weights.iter_mut().zip(&src.weights) {
                *d = tau * *s + keep * *d;
            }
            for (d, s) in dst.bias.iter_mut().zip(&src.bias) {
                *d = tau * *s + keep * *d;
            }
        }
        self.generation += 1;
        Ok(())
    }

    pub fn cast<U: Real>(&self) -> DenseNet<U> {
        let layers = self
            .layers
            .iter()
            .map(|l| Layer {
                inputs: l.inputs,
                outputs: l.outputs,
                weights: l.weights.iter().map(|w| U::of(w.f64())).collect(),
                bias: l.bias.iter().map(|b| U::of(b.f64())).collect(),
                activation: l.activation,
            })
            .collect();
        DenseNet {
            layers,
            id: fresh_id(),
            generation: 0,
        }
    }

    pub fn forward(&self, x: &[T]) -> Result<(Vec<T>, ForwardCache<T>)> {
        self.forward_batch(x, 1)
    }

    /// Forward pass over a row-major `[batch × input_dim]` matrix.
    pub fn forward_batch(&self, x: &[T], batch: usize) -> Result<(Vec<T>, ForwardCache<T>)> {
        ensure_dim("network input", batch * self.input_dim(), x.len())?;
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut pre_activations = Vec::with_capacity(self.layers.len());
        let mut current = x.to_vec();
        for layer in &self.layers {
            let z = affine(layer, &current, batch);
            let y = z.iter().map(|&v| layer.activation.apply(v)).collect();
            inputs.push(current);
            pre_activations.push(z);
            current = y;
        }
        let cache = ForwardCache {
            net_id: self.id,
            generation: self.generation,
            batch,
            inputs,
            pre_activations,
        };
        Ok((current, cache))
    }

    /// Forward pass without recording a cache.
    pub fn predict_batch(&self, x: &[T], batch: usize) -> Result<Vec<T>> {
        ensure_dim("network input", batch * self.input_dim(), x.len())?;
        let mut current = x.to_vec();
        for layer in &self.layers {
            let mut z = affine(layer, &current, batch);
            for v in &mut z {
                *v = layer.activation.apply(*v);
            }
            current = z;
        }
        Ok(current)
    }

    /// Reverse-mode pass. Returns parameter gradients and `dL/dx`.
    pub fn backward(&self, cache: &ForwardCache<T>, dy: &[T]) -> Result<(DenseGrads<T>, Vec<T>)> {
        if cache.net_id != self.id {
            return Err(Error::StaleCache("cache was produced by a different network"));
        }
        if cache.generation != self.generation {
            return Err(Error::StaleCache("parameters changed since the forward pass"));
        }
        let batch = cache.batch;
        ensure_dim("upstream gradient", batch * self.output_dim(), dy.len())?;

        let mut grads = Vec::with_capacity(self.layers.len());
        let mut upstream = dy.to_vec();
        for (idx, layer) in self.layers.iter().enumerate().rev() {
            let z = &cache.pre_activations[idx];
            let x = &cache.inputs[idx];
            let dz: Vec<T> = upstream
                .iter()
                .zip(z)
                .map(|(&g, &zv)| g * layer.activation.derivative(zv))
                .collect();

            let (nin, nout) = (layer.inputs, layer.outputs);
            let mut dw = vec![T::zero(); nout * nin];
            // dW = dZ^T X
            T::gemm(
                nout,
                batch,
                nin,
                T::one(),
                &dz,
                1,
                nout as isize,
                x,
                nin as isize,
                1,
                T::zero(),
                &mut dw,
                nin as isize,
                1,
            );
            let mut db = vec![T::zero(); nout];
            for row in dz.chunks_exact(nout) {
                for (acc, &g) in db.iter_mut().zip(row) {
                    *acc += g;
                }
            }
            // dX = dZ W
            let mut dx = vec![T::zero(); batch * nin];
            T::gemm(
                batch,
                nout,
                nin,
                T::one(),
                &dz,
                nout as isize,
                1,
                &layer.weights,
                nin as isize,
                1,
                T::zero(),
                &mut dx,
                nin as isize,
                1,
            );
            grads.push(LayerGrad { weights: dw, bias: db });
            upstream = dx;
        }
        grads.reverse();
        Ok((DenseGrads { layers: grads }, upstream))
    }
}

fn affine<T: Real>(layer: &Layer<T>, x: &[T], batch: usize) -> Vec<T> {
    let (nin, nout) = (layer.inputs, layer.outputs);
    let mut z = Vec::with_capacity(batch * nout);
    for _ in 0..batch {
        z.extend_from_slice(&layer.bias);
    }
    // Z += X W^T
    T::gemm(
        batch,
        nin,
        nout,
        T::one(),
        x,
        nin as isize,
        1,
        &layer.weights,
        1,
        nin as isize,
        T::one(),
        &mut z,
        nout as isize,
        1,
    );
    z
}
