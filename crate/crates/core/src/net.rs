//! Dense ReLU networks with an output truncation level, reverse-mode
//! gradients for squared error, seeded initialization and input dropout.

use alloc::vec;
use alloc::vec::Vec;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, config, Error, Result};
use crate::matrix::{axpy, dot};
use crate::rng::{rng, Rng};

/// `sign(z)·min(|z|, m)`.
#[inline]
pub fn truncate(z: f64, m: f64) -> f64 {
    if z > m {
        m
    } else if z < -m {
        -m
    } else {
        z
    }
}

#[inline]
fn relu(z: f64) -> f64 {
    if z > 0.0 {
        z
    } else {
        0.0
    }
}

/// One affine map `z = W·a + b`, weights stored row-major (outputs × inputs).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub outputs: usize,
    pub inputs: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Layer {
    pub fn zeros(outputs: usize, inputs: usize) -> Self {
        Layer {
            outputs,
            inputs,
            weights: vec![0.0; outputs * inputs],
            bias: vec![0.0; outputs],
        }
    }

    pub fn from_rows(rows: &[Vec<f64>], bias: Vec<f64>) -> Result<Self> {
        let inputs = rows.first().map_or(0, |r| r.len());
        check_len("layer bias", rows.len(), bias.len())?;
        let mut weights = Vec::with_capacity(rows.len() * inputs);
        for r in rows {
            check_len("layer row", inputs, r.len())?;
            weights.extend_from_slice(r);
        }
        Ok(Layer {
            outputs: rows.len(),
            inputs,
            weights,
            bias,
        })
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.weights[i * self.inputs..(i + 1) * self.inputs]
    }

    #[inline]
    pub fn w(&self, i: usize, j: usize) -> f64 {
        self.weights[i * self.inputs + j]
    }

    #[inline]
    pub fn set_w(&mut self, i: usize, j: usize, v: f64) {
        self.weights[i * self.inputs + j] = v;
    }

    fn apply(&self, a: &[f64], z: &mut [f64]) {
        for (i, zi) in z.iter_mut().enumerate() {
            *zi = self.bias[i] + dot(self.row(i), a);
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.weights.iter().chain(&self.bias).fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Weight initialization scheme.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum InitScheme {
    /// Weights uniform on ±sqrt(6 / fan_in), biases zero.
    FanInUniform,
    Zeros,
}

/// Network `x ↦ T_M(A_{L+1} ∘ σ ∘ … ∘ σ ∘ A_1(x))` with `L = layers.len() - 1`
/// hidden layers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DenseReluNet {
    pub layers: Vec<Layer>,
    #[serde(with = "crate::serde_inf")]
    pub truncation: f64,
    #[serde(with = "crate::serde_inf")]
    pub weight_bound: f64,
}

/// Per-sample activations kept for the backward pass.
#[derive(Clone, Debug, Default)]
pub struct Tape {
    /// `acts[0]` is the input, `acts[l]` the output of hidden layer `l`.
    acts: Vec<Vec<f64>>,
    /// Pre-activations of every layer including the output layer.
    pre: Vec<Vec<f64>>,
    out: Vec<f64>,
    delta: Vec<f64>,
    delta_prev: Vec<f64>,
}

impl Tape {
    pub fn output(&self) -> &[f64] {
        &self.out
    }
}

/// Gradient with the same shapes as the network parameters, stored as
/// blocks in the order of [`DenseReluNet::param_blocks_mut`].
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients {
    pub blocks: Vec<Vec<f64>>,
}

impl Gradients {
    pub fn weights(&self, layer: usize) -> &[f64] {
        &self.blocks[2 * layer]
    }

    pub fn bias(&self, layer: usize) -> &[f64] {
        &self.blocks[2 * layer + 1]
    }

    pub fn max_abs(&self) -> f64 {
        self.blocks.iter().flatten().fold(0.0, |m, v| m.max(v.abs()))
    }
}

impl DenseReluNet {
    pub fn new(layers: Vec<Layer>, truncation: f64) -> Result<Self> {
        if layers.is_empty() {
            return config("network needs at least one affine layer");
        }
        if !(truncation > 0.0) {
            return config("truncation level must be positive");
        }
        for l in &layers {
            check_len("layer weights", l.outputs * l.inputs, l.weights.len())?;
            check_len("layer bias", l.outputs, l.bias.len())?;
        }
        for w in layers.windows(2) {
            check_len("layer input width", w[0].outputs, w[1].inputs)?;
        }
        Ok(DenseReluNet {
            layers,
            truncation,
            weight_bound: f64::INFINITY,
        })
    }

    /// Seeded initialization for the given width vector
    /// `[input, hidden_1, …, hidden_L, output]`.
    pub fn init(widths: &[usize], seed: u64, scheme: InitScheme) -> Result<Self> {
        if widths.len() < 2 {
            return config("width vector needs an input and an output entry");
        }
        if widths.contains(&0) {
            return config("all widths must be positive");
        }
        let mut r = rng(seed);
        let layers = widths
            .windows(2)
            .map(|w| {
                let mut l = Layer::zeros(w[1], w[0]);
                if scheme == InitScheme::FanInUniform {
                    let a = libm::sqrt(6.0 / w[0] as f64);
                    for v in l.weights.iter_mut() {
                        *v = r.gen_range(-a..=a);
                    }
                }
                l
            })
            .collect();
        DenseReluNet::new(layers, f64::INFINITY)
    }

    pub fn with_truncation(mut self, m: f64) -> Self {
        self.truncation = m;
        self
    }

    /// Number of hidden layers.
    pub fn depth(&self) -> usize {
        self.layers.len() - 1
    }

    pub fn widths(&self) -> Vec<usize> {
        let mut w = vec![self.layers[0].inputs];
        w.extend(self.layers.iter().map(|l| l.outputs));
        w
    }

    /// Largest hidden width (0 for a purely affine net).
    pub fn width(&self) -> usize {
        self.layers[..self.depth()].iter().map(|l| l.outputs).max().unwrap_or(0)
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].inputs
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].outputs
    }

    pub fn max_abs_weight(&self) -> f64 {
        self.layers.iter().fold(0.0, |m, l| m.max(l.max_abs()))
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    pub fn new_tape(&self) -> Tape {
        let mut acts = vec![vec![0.0; self.input_dim()]];
        acts.extend(self.layers[..self.depth()].iter().map(|l| vec![0.0; l.outputs]));
        let widest = self.widths().into_iter().max().unwrap_or(0);
        Tape {
            acts,
            pre: self.layers.iter().map(|l| vec![0.0; l.outputs]).collect(),
            out: vec![0.0; self.output_dim()],
            delta: Vec::with_capacity(widest),
            delta_prev: Vec::with_capacity(widest),
        }
    }

    /// Checked evaluation.
    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len("network input", self.input_dim(), x.len())?;
        let mut tape = self.new_tape();
        Ok(self.eval(x, &mut tape).to_vec())
    }

    /// Evaluation recording activations in `tape`; `x` must have the input width.
    pub fn eval<'t>(&self, x: &[f64], tape: &'t mut Tape) -> &'t [f64] {
        debug_assert_eq!(x.len(), self.input_dim());
        tape.acts[0].copy_from_slice(x);
        let depth = self.depth();
        for (l, layer) in self.layers.iter().enumerate() {
            let (before, after) = tape.acts.split_at_mut(l + 1);
            let pre = &mut tape.pre[l];
            layer.apply(&before[l], pre);
            if l < depth {
                for (a, &z) in after[0].iter_mut().zip(pre.iter()) {
                    *a = relu(z);
                }
            }
        }
        let m = self.truncation;
        for (o, &z) in tape.out.iter_mut().zip(&tape.pre[depth]) {
            *o = truncate(z, m);
        }
        &tape.out
    }

    /// Accumulate `∂(out_grad · output)/∂θ` into the parameter blocks `grads`
    /// (weights then bias per layer) using the
    /// activations of the last `eval` on `tape`. When `input_grad` is given the
    /// gradient with respect to the input is written (not accumulated) there.
    pub fn backprop(&self, tape: &mut Tape, out_grad: &[f64], grads: &mut [Vec<f64>], input_grad: Option<&mut [f64]>) {
        let depth = self.depth();
        let m = self.truncation;
        tape.delta.clear();
        tape.delta.extend(
            out_grad
                .iter()
                .zip(&tape.pre[depth])
                .map(|(&g, &z)| if z.abs() < m { g } else { 0.0 }),
        );
        let want_input = input_grad.is_some();
        for l in (0..=depth).rev() {
            let layer = &self.layers[l];
            let a = &tape.acts[l];
            let (gw, gb) = grads[2 * l..2 * l + 2].split_at_mut(1);
            let (gw, gb) = (&mut gw[0], &mut gb[0]);
            for (i, &d) in tape.delta.iter().enumerate() {
                if d != 0.0 {
                    gb[i] += d;
                    axpy(d, a, &mut gw[i * layer.inputs..(i + 1) * layer.inputs]);
                }
            }
            if l == 0 && !want_input {
                break;
            }
            tape.delta_prev.clear();
            tape.delta_prev.resize(layer.inputs, 0.0);
            for (i, &d) in tape.delta.iter().enumerate() {
                if d != 0.0 {
                    axpy(d, layer.row(i), &mut tape.delta_prev);
                }
            }
            if l > 0 {
                for (dp, &z) in tape.delta_prev.iter_mut().zip(&tape.pre[l - 1]) {
                    if z <= 0.0 {
                        *dp = 0.0;
                    }
                }
            }
            core::mem::swap(&mut tape.delta, &mut tape.delta_prev);
        }
        if let Some(ig) = input_grad {
            ig.copy_from_slice(&tape.delta);
        }
    }

    pub fn zero_grads(&self) -> Gradients {
        Gradients {
            blocks: self.param_blocks().iter().map(|b| vec![0.0; b.len()]).collect(),
        }
    }

    /// Mean squared error over the batch and its gradient. For vector
    /// outputs the per-sample loss is the summed squared error.
    pub fn backward(&self, batch: &[(Vec<f64>, Vec<f64>)]) -> Result<(f64, Gradients)> {
        if batch.is_empty() {
            return config("empty batch");
        }
        let mut grads = self.zero_grads();
        let mut tape = self.new_tape();
        let scale = 1.0 / batch.len() as f64;
        let mut loss = 0.0;
        let mut g = vec![0.0; self.output_dim()];
        for (x, y) in batch {
            check_len("network input", self.input_dim(), x.len())?;
            check_len("network target", self.output_dim(), y.len())?;
            let out = self.eval(x, &mut tape);
            for k in 0..g.len() {
                let e = out[k] - y[k];
                loss += e * e * scale;
                g[k] = 2.0 * e * scale;
            }
            self.backprop(&mut tape, &g, &mut grads.blocks, None);
        }
        Ok((loss, grads))
    }

    /// Parameter blocks in a fixed order: for each layer its weights then its bias.
    pub fn param_blocks_mut(&mut self) -> Vec<&mut [f64]> {
        let mut v: Vec<&mut [f64]> = Vec::with_capacity(2 * self.layers.len());
        for l in self.layers.iter_mut() {
            v.push(&mut l.weights);
            v.push(&mut l.bias);
        }
        v
    }

    pub fn param_blocks(&self) -> Vec<&[f64]> {
        let mut v: Vec<&[f64]> = Vec::with_capacity(2 * self.layers.len());
        for l in &self.layers {
            v.push(&l.weights);
            v.push(&l.bias);
        }
        v
    }

    /// Clamp every parameter into `[-B, B]` when the bound is finite.
    pub fn clamp_to_bound(&mut self) {
        let b = self.weight_bound;
        if b.is_finite() {
            for blk in self.param_blocks_mut() {
                for v in blk.iter_mut() {
                    *v = v.clamp(-b, b);
                }
            }
        }
    }
}

/// Zero each entry with probability `rate` and scale survivors by `1/(1-rate)`.
pub fn apply_input_dropout(x: &[f64], rate: f64, rng: &mut Rng) -> Result<Vec<f64>> {
    let mut out = x.to_vec();
    dropout_in_place(&mut out, rate, rng)?;
    Ok(out)
}

pub fn dropout_in_place(x: &mut [f64], rate: f64, rng: &mut Rng) -> Result<()> {
    if !(0.0..1.0).contains(&rate) {
        return Err(Error::Config(alloc::format!("dropout rate {rate} outside [0, 1)")));
    }
    if rate == 0.0 {
        return Ok(());
    }
    let keep = 1.0 / (1.0 - rate);
    for v in x.iter_mut() {
        if rng.gen::<f64>() < rate {
            *v = 0.0;
        } else {
            *v *= keep;
        }
    }
    Ok(())
}
