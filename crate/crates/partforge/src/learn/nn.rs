//! Minimal dense networks: MLPs with ReLU hidden layers and linear output,
//! explicit backpropagation, and an Adam optimizer.

use ndarray::{Array1, Array2, Axis};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone)]
pub struct Linear {
    /// Weight matrix, shape (in, out).
    pub w: Array2<f32>,
    pub b: Array1<f32>,
}

/// MLP with ReLU on hidden layers and a linear output layer.
#[derive(Debug, Clone)]
pub struct Mlp {
    pub layers: Vec<Linear>,
}

/// Per-layer cache from a forward pass, needed for backprop: the input to
/// each layer (post-activation of the previous one).
pub struct ForwardCache {
    inputs: Vec<Array2<f32>>,
    preacts: Vec<Array2<f32>>,
}

/// Parameter gradients, mirroring [`Mlp::layers`].
pub struct Grads {
    pub layers: Vec<(Array2<f32>, Array1<f32>)>,
}

impl Grads {
    pub fn zeros_like(net: &Mlp) -> Self {
        Self {
            layers: net
                .layers
                .iter()
                .map(|l| (Array2::zeros(l.w.raw_dim()), Array1::zeros(l.b.raw_dim())))
                .collect(),
        }
    }

    pub fn add(&mut self, other: &Grads) {
        for ((w, b), (ow, ob)) in self.layers.iter_mut().zip(&other.layers) {
            *w += ow;
            *b += ob;
        }
    }

    pub fn scale(&mut self, s: f32) {
        for (w, b) in self.layers.iter_mut() {
            *w *= s;
            *b *= s;
        }
    }
}

impl Mlp {
    /// He-initialized network over the given layer sizes.
    pub fn new(sizes: &[usize], rng: &mut ChaCha8Rng) -> Self {
        let layers = sizes
            .windows(2)
            .map(|w| {
                let (fan_in, fan_out) = (w[0], w[1]);
                let std = (2.0 / fan_in as f32).sqrt();
                let weights = Array2::from_shape_fn((fan_in, fan_out), |_| {
                    // Box-Muller from two uniforms
                    let u1: f32 = rng.gen_range(1e-7f32..1.0);
                    let u2: f32 = rng.gen_range(0.0f32..1.0);
                    std * (-2.0 * u1.ln()).sqrt() * (std::f32::consts::TAU * u2).cos()
                });
                Linear { w: weights, b: Array1::zeros(fan_out) }
            })
            .collect();
        Self { layers }
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut s: Vec<usize> = self.layers.iter().map(|l| l.w.nrows()).collect();
        s.push(self.layers.last().unwrap().w.ncols());
        s
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].w.nrows()
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().unwrap().w.ncols()
    }

    /// Forward pass over a batch (rows are samples).
    pub fn forward(&self, x: &Array2<f32>) -> Array2<f32> {
        self.forward_cached(x).0
    }

    pub fn forward_cached(&self, x: &Array2<f32>) -> (Array2<f32>, ForwardCache) {
        let n = self.layers.len();
        let mut inputs = Vec::with_capacity(n);
        let mut preacts = Vec::with_capacity(n);
        let mut h = x.clone();
        for (i, layer) in self.layers.iter().enumerate() {
            inputs.push(h.clone());
            let mut z = h.dot(&layer.w);
            z += &layer.b;
            preacts.push(z.clone());
            h = if i + 1 < n { z.mapv(|v| v.max(0.0)) } else { z };
        }
        (h, ForwardCache { inputs, preacts })
    }

    /// Backprop a gradient on the output; returns parameter grads and the
    /// gradient with respect to the input batch.
    pub fn backward(&self, cache: &ForwardCache, grad_out: &Array2<f32>) -> (Grads, Array2<f32>) {
        let n = self.layers.len();
        let mut grads = Vec::with_capacity(n);
        let mut delta = grad_out.clone();
        for i in (0..n).rev() {
            if i + 1 < n {
                // grad through ReLU of this layer's pre-activation
                delta = &delta * &self.preact_mask(cache, i);
            }
            let gw = cache.inputs[i].t().dot(&delta);
            let gb = delta.sum_axis(Axis(0));
            delta = delta.dot(&self.layers[i].w.t());
            grads.push((gw, gb));
        }
        grads.reverse();
        (Grads { layers: grads }, delta)
    }

    fn preact_mask(&self, cache: &ForwardCache, i: usize) -> Array2<f32> {
        cache.preacts[i].mapv(|v| if v > 0.0 { 1.0 } else { 0.0 })
    }

    pub fn all_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.w.iter().all(|v| v.is_finite()) && l.b.iter().all(|v| v.is_finite()))
    }

    /// Flat parameter views in layer order (w then b), for checkpointing
    /// and finite-difference checks.
    pub fn flatten(&self) -> Vec<f32> {
        let mut out = Vec::new();
        for l in &self.layers {
            out.extend(l.w.iter().copied());
            out.extend(l.b.iter().copied());
        }
        out
    }

    pub fn unflatten(&mut self, flat: &[f32]) {
        let mut at = 0;
        for l in self.layers.iter_mut() {
            for v in l.w.iter_mut() {
                *v = flat[at];
                at += 1;
            }
            for v in l.b.iter_mut() {
                *v = flat[at];
                at += 1;
            }
        }
        assert_eq!(at, flat.len());
    }
}

/// Adam with bias correction; state mirrors the network's layers.
pub struct Adam {
    pub lr: f32,
    pub beta1: f32,
    pub beta2: f32,
    pub eps: f32,
    t: i32,
    m: Vec<(Array2<f32>, Array1<f32>)>,
    v: Vec<(Array2<f32>, Array1<f32>)>,
}

impl Adam {
    pub fn new(net: &Mlp, lr: f32) -> Self {
        let zeros: Vec<(Array2<f32>, Array1<f32>)> = net
            .layers
            .iter()
            .map(|l| (Array2::zeros(l.w.raw_dim()), Array1::zeros(l.b.raw_dim())))
            .collect();
        Self { lr, beta1: 0.9, beta2: 0.999, eps: 1e-8, t: 0, m: zeros.clone(), v: zeros }
    }

    pub fn step(&mut self, net: &mut Mlp, grads: &Grads) {
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t);
        let bc2 = 1.0 - self.beta2.powi(self.t);
        for i in 0..net.layers.len() {
            let (gw, gb) = &grads.layers[i];
            let (mw, mb) = &mut self.m[i];
            let (vw, vb) = &mut self.v[i];
            mw.zip_mut_with(gw, |m, &g| *m = self.beta1 * *m + (1.0 - self.beta1) * g);
            vw.zip_mut_with(gw, |v, &g| *v = self.beta2 * *v + (1.0 - self.beta2) * g * g);
            mb.zip_mut_with(gb, |m, &g| *m = self.beta1 * *m + (1.0 - self.beta1) * g);
            vb.zip_mut_with(gb, |v, &g| *v = self.beta2 * *v + (1.0 - self.beta2) * g * g);
            let lr = self.lr;
            let eps = self.eps;
            ndarray::Zip::from(&mut net.layers[i].w)
                .and(&*mw)
                .and(&*vw)
                .for_each(|p, &m, &v| *p -= lr * (m / bc1) / ((v / bc2).sqrt() + eps));
            ndarray::Zip::from(&mut net.layers[i].b)
                .and(&*mb)
                .and(&*vb)
                .for_each(|p, &m, &v| *p -= lr * (m / bc1) / ((v / bc2).sqrt() + eps));
        }
    }
}
