//! Minimal dense feedforward networks with exact analytic gradients and a
//! bias-corrected adaptive-moment optimizer.
//!
//! Everything is `f64` and row-major. Weights of a layer with `out` units over
//! `in` inputs are stored as an `out x in` matrix; batches are flat
//! `n x dim` buffers. Shapes are validated at the API boundary and any
//! non-finite value produced by a forward pass is reported as an error
//! instead of propagating silently.

use rand::Rng;
use thiserror::Error;

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPS: f64 = 1e-8;

/// Clamp bound for probabilities entering any log-likelihood.
pub const PROB_CLAMP: f64 = 1e-7;

#[derive(Debug, Error)]
pub enum NnError {
    #[error("shape mismatch in {context}: expected {expected}, got {got}")]
    ShapeMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("non-finite value in {0}")]
    NonFinite(String),
    #[error("non-finite gradient in parameter block {0}")]
    NonFiniteGrad(String),
    #[error("empty input to {0}")]
    Empty(&'static str),
    #[error("label must be 0 or 1, got {0}")]
    BadLabel(f64),
}

/// Dense array with an explicit shape over a flat row-major buffer.
#[derive(Debug, Clone, PartialEq)]
pub struct NumArray {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl NumArray {
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self, NnError> {
        let expected: usize = shape.iter().product();
        if expected != data.len() {
            return Err(NnError::ShapeMismatch {
                context: "NumArray::new",
                expected,
                got: data.len(),
            });
        }
        Ok(Self { shape, data })
    }

    pub fn vector(data: Vec<f64>) -> Self {
        let shape = vec![data.len()];
        Self { shape, data }
    }

    pub fn zeros(shape: Vec<usize>) -> Self {
        let len = shape.iter().product();
        Self {
            shape,
            data: vec![0.0; len],
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Tanh,
    Sigmoid,
    Identity,
}

impl Activation {
    #[inline]
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => {
                if z > 0.0 {
                    z
                } else {
                    0.0
                }
            }
            Activation::Tanh => z.tanh(),
            Activation::Sigmoid => 1.0 / (1.0 + (-z).exp()),
            Activation::Identity => z,
        }
    }

    /// Derivative expressed through the activation output `y = f(z)`.
    #[inline]
    pub fn grad_from_output(self, y: f64) -> f64 {
        match self {
            Activation::Relu => {
                if y > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - y * y,
            Activation::Sigmoid => y * (1.0 - y),
            Activation::Identity => 1.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct DenseLayer {
    in_dim: usize,
    out_dim: usize,
    /// `out_dim x in_dim`, row-major.
    w: Vec<f64>,
    b: Vec<f64>,
    act: Activation,
}

impl DenseLayer {
    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    pub fn activation(&self) -> Activation {
        self.act
    }

    pub fn weights(&self) -> &[f64] {
        &self.w
    }

    pub fn biases(&self) -> &[f64] {
        &self.b
    }

    pub fn weights_mut(&mut self) -> &mut [f64] {
        &mut self.w
    }

    pub fn biases_mut(&mut self) -> &mut [f64] {
        &mut self.b
    }
}

/// A chain of dense layers. Consecutive dimensions must match.
#[derive(Debug, Clone)]
pub struct DenseNet {
    layers: Vec<DenseLayer>,
}

impl DenseNet {
    /// Builds a network with `dims = [in, h1, ..., out]` and one activation
    /// per layer. Weights are uniform in `+-1/sqrt(fan_in)`, biases zero.
    pub fn new<R: Rng + ?Sized>(dims: &[usize], acts: &[Activation], rng: &mut R) -> Self {
        assert!(dims.len() >= 2, "need at least one layer");
        assert_eq!(acts.len(), dims.len() - 1, "one activation per layer");
        let mut layers = Vec::with_capacity(acts.len());
        for (l, &act) in acts.iter().enumerate() {
            let (in_dim, out_dim) = (dims[l], dims[l + 1]);
            let bound = 1.0 / (in_dim as f64).sqrt();
            let w = (0..in_dim * out_dim)
                .map(|_| rng.random_range(-bound..bound))
                .collect();
            layers.push(DenseLayer {
                in_dim,
                out_dim,
                w,
                b: vec![0.0; out_dim],
                act,
            });
        }
        Self { layers }
    }

    /// Builds a net from explicit layers; used by tests that pin weights.
    pub fn from_layers(layers: Vec<(Vec<f64>, Vec<f64>, Activation)>, dims: &[usize]) -> Self {
        assert_eq!(layers.len(), dims.len() - 1);
        let layers = layers
            .into_iter()
            .enumerate()
            .map(|(l, (w, b, act))| {
                assert_eq!(w.len(), dims[l] * dims[l + 1]);
                assert_eq!(b.len(), dims[l + 1]);
                DenseLayer {
                    in_dim: dims[l],
                    out_dim: dims[l + 1],
                    w,
                    b,
                    act,
                }
            })
            .collect();
        Self { layers }
    }

    pub fn in_dim(&self) -> usize {
        self.layers[0].in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.layers.last().unwrap().out_dim
    }

    pub fn layers(&self) -> &[DenseLayer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [DenseLayer] {
        &mut self.layers
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.w.len() + l.b.len()).sum()
    }

    /// Forward pass for a single input vector.
    pub fn forward(&self, input: &NumArray) -> Result<NumArray, NnError> {
        let trace = self.forward_batch(input.data(), 1)?;
        Ok(NumArray::vector(trace.output().to_vec()))
    }

    /// Batched forward pass over `n` row-major samples, keeping per-layer
    /// activations for a later backward pass.
    pub fn forward_batch(&self, xs: &[f64], n: usize) -> Result<BatchTrace, NnError> {
        if xs.len() != n * self.in_dim() {
            return Err(NnError::ShapeMismatch {
                context: "forward_batch input",
                expected: n * self.in_dim(),
                got: xs.len(),
            });
        }
        let mut outputs: Vec<Vec<f64>> = Vec::with_capacity(self.layers.len());
        for (l, layer) in self.layers.iter().enumerate() {
            let input: &[f64] = if l == 0 { xs } else { &outputs[l - 1] };
            let mut out = vec![0.0; n * layer.out_dim];
            for i in 0..n {
                let xrow = &input[i * layer.in_dim..(i + 1) * layer.in_dim];
                let orow = &mut out[i * layer.out_dim..(i + 1) * layer.out_dim];
                for (o, slot) in orow.iter_mut().enumerate() {
                    let z = layer.b[o] + dot(&layer.w[o * layer.in_dim..(o + 1) * layer.in_dim], xrow);
                    if !z.is_finite() {
                        return Err(NnError::NonFinite(format!("layer {l} pre-activation")));
                    }
                    *slot = layer.act.apply(z);
                }
            }
            outputs.push(out);
        }
        Ok(BatchTrace {
            n,
            input: xs.to_vec(),
            outputs,
        })
    }

    /// Backward pass for a single sample: gradients of every parameter and of
    /// the input, for a given gradient of the loss wrt the network output.
    pub fn backward(
        &self,
        input: &NumArray,
        output_grad: &NumArray,
    ) -> Result<(Gradients, NumArray), NnError> {
        let trace = self.forward_batch(input.data(), 1)?;
        let (grads, dx) = self.backward_batch(&trace, output_grad.data())?;
        Ok((grads, NumArray::vector(dx)))
    }

    /// Batched backward pass. `out_grad` is `dL/d output`, flat `n x out_dim`;
    /// returns parameter gradients (summed over the batch) and `dL/d input`.
    pub fn backward_batch(
        &self,
        trace: &BatchTrace,
        out_grad: &[f64],
    ) -> Result<(Gradients, Vec<f64>), NnError> {
        let n = trace.n;
        if out_grad.len() != n * self.out_dim() {
            return Err(NnError::ShapeMismatch {
                context: "backward_batch output_grad",
                expected: n * self.out_dim(),
                got: out_grad.len(),
            });
        }
        let mut grads = Gradients::zeros_like(self);
        let mut delta = out_grad.to_vec();
        for l in (0..self.layers.len()).rev() {
            let layer = &self.layers[l];
            let y = &trace.outputs[l];
            // dL/d post-activation -> dL/d pre-activation
            for (d, &yv) in delta.iter_mut().zip(y.iter()) {
                *d *= layer.act.grad_from_output(yv);
            }
            let input: &[f64] = if l == 0 { &trace.input } else { &trace.outputs[l - 1] };
            let g = &mut grads.layers[l];
            let mut dx = vec![0.0; n * layer.in_dim];
            for i in 0..n {
                let drow = &delta[i * layer.out_dim..(i + 1) * layer.out_dim];
                let xrow = &input[i * layer.in_dim..(i + 1) * layer.in_dim];
                let dxrow = &mut dx[i * layer.in_dim..(i + 1) * layer.in_dim];
                for (o, &d) in drow.iter().enumerate() {
                    if d != 0.0 {
                        axpy(d, &layer.w[o * layer.in_dim..(o + 1) * layer.in_dim], dxrow);
                        axpy(d, xrow, &mut g.dw[o * layer.in_dim..(o + 1) * layer.in_dim]);
                        g.db[o] += d;
                    }
                }
            }
            delta = dx;
        }
        Ok((grads, delta))
    }
}

/// Cached activations from a batched forward pass.
#[derive(Debug, Clone)]
pub struct BatchTrace {
    n: usize,
    input: Vec<f64>,
    /// Post-activations of each layer, flat `n x out_dim`.
    outputs: Vec<Vec<f64>>,
}

impl BatchTrace {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn output(&self) -> &[f64] {
        self.outputs.last().unwrap()
    }
}

#[derive(Debug, Clone)]
pub struct LayerGrads {
    pub dw: Vec<f64>,
    pub db: Vec<f64>,
}

/// Parameter gradients shaped like a [`DenseNet`].
#[derive(Debug, Clone)]
pub struct Gradients {
    pub layers: Vec<LayerGrads>,
}

impl Gradients {
    pub fn zeros_like(net: &DenseNet) -> Self {
        let layers = net
            .layers
            .iter()
            .map(|l| LayerGrads {
                dw: vec![0.0; l.w.len()],
                db: vec![0.0; l.b.len()],
            })
            .collect();
        Self { layers }
    }

    pub fn scale(&mut self, c: f64) {
        for l in &mut self.layers {
            for v in l.dw.iter_mut().chain(l.db.iter_mut()) {
                *v *= c;
            }
        }
    }
}

/// Bias-corrected adaptive-moment optimizer state for one network.
#[derive(Debug, Clone)]
pub struct AdamState {
    /// One (m, v) pair per parameter block, blocks ordered
    /// `layer0.w, layer0.b, layer1.w, ...`.
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
    step: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamState {
    pub fn new(net: &DenseNet) -> Self {
        let mut m = Vec::new();
        for l in &net.layers {
            m.push(vec![0.0; l.w.len()]);
            m.push(vec![0.0; l.b.len()]);
        }
        let v = m.clone();
        Self {
            m,
            v,
            step: 0,
            beta1: ADAM_BETA1,
            beta2: ADAM_BETA2,
            eps: ADAM_EPS,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// One optimizer step over every parameter block of `net`.
    /// `grads` are gradients of the loss being minimized.
    pub fn step(&mut self, net: &mut DenseNet, grads: &Gradients, lr: f64) -> Result<(), NnError> {
        assert!(lr >= 0.0, "learning rate must be non-negative");
        for (l, g) in grads.layers.iter().enumerate() {
            for (name, block) in [("weights", &g.dw), ("biases", &g.db)] {
                if block.iter().any(|x| !x.is_finite()) {
                    return Err(NnError::NonFiniteGrad(format!("layer{l}.{name}")));
                }
            }
        }
        self.step += 1;
        let t = self.step;
        for (l, g) in grads.layers.iter().enumerate() {
            let layer = &mut net.layers[l];
            adam_update(
                &mut layer.w,
                &g.dw,
                &mut self.m[2 * l],
                &mut self.v[2 * l],
                t,
                lr,
                self.beta1,
                self.beta2,
                self.eps,
            );
            adam_update(
                &mut layer.b,
                &g.db,
                &mut self.m[2 * l + 1],
                &mut self.v[2 * l + 1],
                t,
                lr,
                self.beta1,
                self.beta2,
                self.eps,
            );
        }
        Ok(())
    }
}

/// The adaptive-moment update kernel on one parameter block.
#[allow(clippy::too_many_arguments)]
pub fn adam_update(
    params: &mut [f64],
    grads: &[f64],
    m: &mut [f64],
    v: &mut [f64],
    t: u64,
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
) {
    assert_eq!(params.len(), grads.len());
    let bc1 = 1.0 - beta1.powi(t as i32);
    let bc2 = 1.0 - beta2.powi(t as i32);
    for i in 0..params.len() {
        let g = grads[i];
        m[i] = beta1 * m[i] + (1.0 - beta1) * g;
        v[i] = beta2 * v[i] + (1.0 - beta2) * g * g;
        let m_hat = m[i] / bc1;
        let v_hat = v[i] / bc2;
        params[i] -= lr * m_hat / (v_hat.sqrt() + eps);
    }
}

/// `target <- tau * source + (1 - tau) * target`, elementwise over all params.
pub fn soft_update(target: &mut DenseNet, source: &DenseNet, tau: f64) {
    assert_eq!(target.layers.len(), source.layers.len());
    for (t, s) in target.layers.iter_mut().zip(source.layers.iter()) {
        assert_eq!(t.w.len(), s.w.len(), "soft_update shape mismatch");
        for (tv, sv) in t.w.iter_mut().zip(s.w.iter()) {
            *tv = tau * sv + (1.0 - tau) * *tv;
        }
        for (tv, sv) in t.b.iter_mut().zip(s.b.iter()) {
            *tv = tau * sv + (1.0 - tau) * *tv;
        }
    }
}

/// Mean squared error and its gradient wrt `pred`.
pub fn mse_loss(pred: &[f64], target: &[f64]) -> Result<(f64, Vec<f64>), NnError> {
    if pred.is_empty() {
        return Err(NnError::Empty("mse_loss"));
    }
    if pred.len() != target.len() {
        return Err(NnError::ShapeMismatch {
            context: "mse_loss",
            expected: pred.len(),
            got: target.len(),
        });
    }
    let n = pred.len() as f64;
    let mut loss = 0.0;
    let mut grad = vec![0.0; pred.len()];
    for i in 0..pred.len() {
        let d = pred[i] - target[i];
        loss += d * d;
        grad[i] = 2.0 * d / n;
    }
    Ok((loss / n, grad))
}

/// Binary cross-entropy over probabilities, clamped to `[1e-7, 1-1e-7]`,
/// and its gradient wrt `prob`.
pub fn bce_loss(prob: &[f64], label: &[f64]) -> Result<(f64, Vec<f64>), NnError> {
    if prob.is_empty() {
        return Err(NnError::Empty("bce_loss"));
    }
    if prob.len() != label.len() {
        return Err(NnError::ShapeMismatch {
            context: "bce_loss",
            expected: prob.len(),
            got: label.len(),
        });
    }
    let n = prob.len() as f64;
    let mut loss = 0.0;
    let mut grad = vec![0.0; prob.len()];
    for i in 0..prob.len() {
        let y = label[i];
        if y != 0.0 && y != 1.0 {
            return Err(NnError::BadLabel(y));
        }
        let p = prob[i].clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
        loss -= y * p.ln() + (1.0 - y) * (1.0 - p).ln();
        grad[i] = (-y / p + (1.0 - y) / (1.0 - p)) / n;
    }
    Ok((loss / n, grad))
}

/// Per-sample mean-over-dims squared errors for a flat `n x dim` batch,
/// plus the gradient of the batch-mean loss wrt `pred`.
pub fn mse_rows(pred: &[f64], target: &[f64], n: usize) -> (Vec<f64>, Vec<f64>) {
    assert_eq!(pred.len(), target.len());
    assert_eq!(pred.len() % n, 0);
    let dim = pred.len() / n;
    let mut rows = vec![0.0; n];
    let mut grad = vec![0.0; pred.len()];
    let scale = 1.0 / (n as f64 * dim as f64);
    for i in 0..n {
        let mut acc = 0.0;
        for k in 0..dim {
            let idx = i * dim + k;
            let d = pred[idx] - target[idx];
            acc += d * d;
            grad[idx] = 2.0 * d * scale;
        }
        rows[i] = acc / dim as f64;
    }
    (rows, grad)
}

/// Per-sample binary cross-entropies (single output per sample), plus the
/// gradient of the batch-mean loss wrt `prob`.
pub fn bce_rows(prob: &[f64], label: &[f64]) -> Result<(Vec<f64>, Vec<f64>), NnError> {
    let n = prob.len();
    let mut rows = vec![0.0; n];
    let mut grad = vec![0.0; n];
    for i in 0..n {
        let y = label[i];
        if y != 0.0 && y != 1.0 {
            return Err(NnError::BadLabel(y));
        }
        let p = prob[i].clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
        rows[i] = -(y * p.ln() + (1.0 - y) * (1.0 - p).ln());
        grad[i] = (-y / p + (1.0 - y) / (1.0 - p)) / n as f64;
    }
    Ok((rows, grad))
}

/// Compares analytic parameter gradients against central finite differences
/// (`h = 1e-5`) for an arbitrary differentiable loss on the network output.
///
/// Returns the max over parameters of
/// `|analytic - numeric| / max(|analytic|, |numeric|, 1e-8)`.
pub fn gradient_check<L>(net: &DenseNet, input: &NumArray, loss: L) -> f64
where
    L: Fn(&[f64]) -> (f64, Vec<f64>),
{
    let h = 1e-5;
    let trace = net.forward_batch(input.data(), 1).expect("forward");
    let (_, out_grad) = loss(trace.output());
    let (analytic, _) = net.backward_batch(&trace, &out_grad).expect("backward");

    let eval = |net: &DenseNet| -> f64 {
        let t = net.forward_batch(input.data(), 1).expect("forward");
        loss(t.output()).0
    };

    let mut max_rel = 0.0f64;
    let mut probe = net.clone();
    for l in 0..net.layers.len() {
        for (is_bias, count) in [(false, net.layers[l].w.len()), (true, net.layers[l].b.len())] {
            for i in 0..count {
                let a = if is_bias {
                    analytic.layers[l].db[i]
                } else {
                    analytic.layers[l].dw[i]
                };
                fn slot(p: &mut DenseNet, l: usize, i: usize, is_bias: bool) -> &mut f64 {
                    if is_bias {
                        &mut p.layers[l].b[i]
                    } else {
                        &mut p.layers[l].w[i]
                    }
                }
                let orig = *slot(&mut probe, l, i, is_bias);
                *slot(&mut probe, l, i, is_bias) = orig + h;
                let up = eval(&probe);
                *slot(&mut probe, l, i, is_bias) = orig - h;
                let down = eval(&probe);
                *slot(&mut probe, l, i, is_bias) = orig;
                let numeric = (up - down) / (2.0 * h);
                let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-8);
                max_rel = max_rel.max(rel);
            }
        }
    }
    max_rel
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut ca = a.chunks_exact(4);
    let mut cb = b.chunks_exact(4);
    let (mut s0, mut s1, mut s2, mut s3) = (0.0, 0.0, 0.0, 0.0);
    for (x, y) in (&mut ca).zip(&mut cb) {
        s0 += x[0] * y[0];
        s1 += x[1] * y[1];
        s2 += x[2] * y[2];
        s3 += x[3] * y[3];
    }
    let mut s = (s0 + s1) + (s2 + s3);
    for (x, y) in ca.remainder().iter().zip(cb.remainder()) {
        s += x * y;
    }
    s
}

#[inline]
fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x.iter()) {
        *yi += alpha * xi;
    }
}
