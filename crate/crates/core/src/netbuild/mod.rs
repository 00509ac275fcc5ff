//! Hand-constructed ReLU networks. Every constructor returns a [`BuiltNet`]
//! carrying the depth, width and weight magnitude it promises; the promise is
//! checked before the net is handed out.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{config, Error, Result};
use crate::net::{DenseReluNet, Layer};

mod arith;
pub mod audit;
mod fit;

pub use arith::{build_mid, build_multiply, extend_by_mid};
pub use fit::{build_index_creator, fit_piecewise_linear, fit_points_1d, index_cell_good};

/// A network plus the size bounds its construction guarantees.
#[derive(Clone, Debug, PartialEq)]
pub struct BuiltNet {
    pub net: DenseReluNet,
    pub declared_depth: usize,
    pub declared_width: usize,
    pub declared_max_weight: f64,
    pub name: String,
}

impl BuiltNet {
    /// Wrap a net, checking the declaration.
    pub fn new(
        net: DenseReluNet,
        declared_depth: usize,
        declared_width: usize,
        declared_max_weight: f64,
        name: impl Into<String>,
    ) -> Result<Self> {
        let b = BuiltNet {
            net,
            declared_depth,
            declared_width,
            declared_max_weight,
            name: name.into(),
        };
        b.check()?;
        Ok(b)
    }

    /// Declaration equal to the measured values.
    pub fn measured(net: DenseReluNet, name: impl Into<String>) -> Self {
        BuiltNet {
            declared_depth: net.depth(),
            declared_width: net.width(),
            declared_max_weight: net.max_abs_weight(),
            net,
            name: name.into(),
        }
    }

    /// Largest parameter count a net of the declared depth and width can have.
    pub fn declared_params(&self) -> usize {
        let (l, n) = (self.declared_depth, self.declared_width);
        let (d_in, d_out) = (self.net.input_dim(), self.net.output_dim());
        if l == 0 {
            return (d_in + 1) * d_out;
        }
        (d_in + 1) * n + (l - 1) * (n + 1) * n + (n + 1) * d_out
    }

    /// Every violated bound, as human-readable strings.
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        if self.net.depth() > self.declared_depth {
            v.push(format!(
                "{}: depth {} exceeds declared {}",
                self.name,
                self.net.depth(),
                self.declared_depth
            ));
        }
        if self.net.width() > self.declared_width {
            v.push(format!(
                "{}: width {} exceeds declared {}",
                self.name,
                self.net.width(),
                self.declared_width
            ));
        }
        let w = self.net.max_abs_weight();
        if w > self.declared_max_weight * (1.0 + 1e-12) + 1e-12 {
            v.push(format!(
                "{}: max weight {w} exceeds declared {}",
                self.name, self.declared_max_weight
            ));
        }
        if self.net.param_count() > self.declared_params() {
            v.push(format!(
                "{}: {} parameters exceed the {} allowed by the declared shape",
                self.name,
                self.net.param_count(),
                self.declared_params()
            ));
        }
        v
    }

    pub fn check(&self) -> Result<()> {
        match self.violations().into_iter().next() {
            None => Ok(()),
            Some(m) => Err(Error::Contract(m)),
        }
    }

    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        let mut tape = self.net.new_tape();
        self.net.eval(x, &mut tape).to_vec()
    }

    pub fn eval1(&self, x: f64) -> f64 {
        self.eval(&[x])[0]
    }
}

fn require_untruncated(net: &DenseReluNet) -> Result<()> {
    if net.truncation.is_finite() {
        config("constructions need untruncated nets (M = ∞)")
    } else {
        Ok(())
    }
}

fn assemble(layers: Vec<Layer>) -> DenseReluNet {
    DenseReluNet::new(layers, f64::INFINITY).expect("constructed layers are consistent")
}

/// Pad to exactly `target_depth` hidden layers of width `target_width`
/// without changing the computed function. Extra layers are identity maps
/// inserted after the first hidden layer (its outputs are nonnegative, so
/// the ReLU passes them through); extra units get zero weights in and out.
/// An affine net first gets the hidden pair `σ(z), σ(-z)`.
pub fn pad(net: &DenseReluNet, target_depth: usize, target_width: usize) -> Result<BuiltNet> {
    pad_built(&BuiltNet::measured(net.clone(), "net"), target_depth, target_width)
}

pub fn pad_built(b: &BuiltNet, target_depth: usize, target_width: usize) -> Result<BuiltNet> {
    let net = &b.net;
    require_untruncated(net)?;
    let depth = net.depth();
    let needs_split = depth == 0 && target_depth > 0;
    let min_width = if needs_split { 2 * net.output_dim() } else { net.width() };
    if target_depth < depth || target_width < min_width {
        return config(format!(
            "cannot pad depth {depth} / width {min_width} down to {target_depth} / {target_width}"
        ));
    }
    let mut layers = net.layers.clone();
    if needs_split {
        let a = layers.pop().expect("one affine layer");
        let d = a.outputs;
        let mut hidden = Layer::zeros(2 * d, a.inputs);
        for i in 0..d {
            for j in 0..a.inputs {
                hidden.set_w(i, j, a.w(i, j));
                hidden.set_w(d + i, j, -a.w(i, j));
            }
            hidden.bias[i] = a.bias[i];
            hidden.bias[d + i] = -a.bias[i];
        }
        let mut out = Layer::zeros(d, 2 * d);
        for i in 0..d {
            out.set_w(i, i, 1.0);
            out.set_w(i, d + i, -1.0);
        }
        layers = vec![hidden, out];
    }
    let current = layers.len() - 1;
    if target_depth > current {
        let w1 = layers[0].outputs;
        let mut ident = Layer::zeros(w1, w1);
        for i in 0..w1 {
            ident.set_w(i, i, 1.0);
        }
        for _ in current..target_depth {
            layers.insert(1, ident.clone());
        }
    }
    // widen hidden layers
    for l in 0..target_depth {
        let extra = target_width - layers[l].outputs;
        if extra == 0 {
            continue;
        }
        let inputs = layers[l].inputs;
        layers[l].weights.extend(core::iter::repeat_n(0.0, extra * inputs));
        layers[l].bias.extend(core::iter::repeat_n(0.0, extra));
        layers[l].outputs += extra;
        let next = &mut layers[l + 1];
        let mut w = Vec::with_capacity(next.outputs * target_width);
        for i in 0..next.outputs {
            w.extend_from_slice(next.row(i));
            w.extend(core::iter::repeat_n(0.0, extra));
        }
        next.weights = w;
        next.inputs = target_width;
    }
    BuiltNet::new(
        assemble(layers),
        target_depth,
        target_width,
        b.declared_max_weight.max(1.0),
        format!("pad({})", b.name),
    )
}

/// `g ∘ f`, merging f's output map with g's input map so the depth is the sum.
pub fn compose(f: &DenseReluNet, g: &DenseReluNet) -> Result<BuiltNet> {
    compose_built(&BuiltNet::measured(f.clone(), "f"), &BuiltNet::measured(g.clone(), "g"))
}

pub fn compose_built(f: &BuiltNet, g: &BuiltNet) -> Result<BuiltNet> {
    require_untruncated(&f.net)?;
    require_untruncated(&g.net)?;
    let d2 = f.net.output_dim();
    if g.net.input_dim() != d2 {
        return Err(Error::Shape {
            what: "composition inner dimension",
            expected: d2,
            found: g.net.input_dim(),
        });
    }
    let fl = f.net.layers.last().expect("nonempty");
    let gl = &g.net.layers[0];
    let mut merged = Layer::zeros(gl.outputs, fl.inputs);
    for i in 0..gl.outputs {
        let mut b = gl.bias[i];
        for k in 0..d2 {
            let c = gl.w(i, k);
            if c == 0.0 {
                continue;
            }
            b += c * fl.bias[k];
            for j in 0..fl.inputs {
                merged.weights[i * fl.inputs + j] += c * fl.w(k, j);
            }
        }
        merged.bias[i] = b;
    }
    let mut layers: Vec<Layer> = f.net.layers[..f.net.depth()].to_vec();
    layers.push(merged);
    layers.extend_from_slice(&g.net.layers[1..]);
    let a = gl.max_abs();
    let c = fl.max_abs().max(1.0);
    let merged_bound = (d2 as f64 + 1.0) * a * c;
    BuiltNet::new(
        assemble(layers),
        f.declared_depth + g.declared_depth,
        f.declared_width.max(g.declared_width).max(d2),
        f.declared_max_weight.max(g.declared_max_weight).max(merged_bound),
        format!("{}∘{}", g.name, f.name),
    )
}

/// Run nets side by side; net `k` reads the input coordinates `wiring[k]` and
/// the outputs are concatenated. Nets are first padded to a common depth.
pub fn parallelize(nets: &[BuiltNet], wiring: &[Vec<usize>], input_dim: usize) -> Result<BuiltNet> {
    if nets.is_empty() || nets.len() != wiring.len() {
        return config("parallelize needs one wiring list per net");
    }
    for (k, (n, w)) in nets.iter().zip(wiring).enumerate() {
        if w.len() != n.net.input_dim() {
            return Err(Error::Shape {
                what: "wiring list length",
                expected: n.net.input_dim(),
                found: w.len(),
            });
        }
        if let Some(&bad) = w.iter().find(|&&i| i >= input_dim) {
            return config(format!("wiring of net {k} addresses input {bad} >= {input_dim}"));
        }
    }
    let depth = nets.iter().map(|n| n.net.depth()).max().unwrap_or(0);
    let padded: Vec<BuiltNet> = nets
        .iter()
        .map(|n| {
            let w = if n.net.depth() == 0 && depth > 0 {
                2 * n.net.output_dim()
            } else {
                n.net.width()
            };
            pad_built(n, depth, w)
        })
        .collect::<Result<_>>()?;
    let mut layers = Vec::with_capacity(depth + 1);
    for l in 0..=depth {
        let outs: usize = padded.iter().map(|n| n.net.layers[l].outputs).sum();
        let ins: usize = if l == 0 {
            input_dim
        } else {
            padded.iter().map(|n| n.net.layers[l].inputs).sum()
        };
        let mut layer = Layer::zeros(outs, ins);
        let (mut r0, mut c0) = (0usize, 0usize);
        for (n, w) in padded.iter().zip(wiring) {
            let src = &n.net.layers[l];
            for i in 0..src.outputs {
                layer.bias[r0 + i] = src.bias[i];
                for j in 0..src.inputs {
                    let col = if l == 0 { w[j] } else { c0 + j };
                    layer.weights[(r0 + i) * ins + col] += src.w(i, j);
                }
            }
            r0 += src.outputs;
            c0 += src.inputs;
        }
        layers.push(layer);
    }
    let width: usize = padded.iter().map(|n| n.declared_width).sum();
    let weight = padded.iter().map(|n| n.declared_max_weight).fold(0.0, f64::max);
    let names: Vec<&str> = nets.iter().map(|n| n.name.as_str()).collect();
    BuiltNet::new(
        assemble(layers),
        depth,
        width,
        weight,
        format!("par({})", names.join(",")),
    )
}

/// `x ↦ net(x + offset)`.
pub fn shift_input(b: &BuiltNet, offset: &[f64]) -> Result<BuiltNet> {
    if offset.len() != b.net.input_dim() {
        return Err(Error::Shape {
            what: "shift offset",
            expected: b.net.input_dim(),
            found: offset.len(),
        });
    }
    let mut net = b.net.clone();
    let l0 = &mut net.layers[0];
    for i in 0..l0.outputs {
        let mut s = 0.0;
        for (j, o) in offset.iter().enumerate() {
            s += l0.w(i, j) * o;
        }
        l0.bias[i] += s;
    }
    let l1: f64 = offset.iter().map(|v| v.abs()).sum();
    BuiltNet::new(
        net,
        b.declared_depth,
        b.declared_width,
        b.declared_max_weight * (1.0 + l1),
        format!("shift({})", b.name),
    )
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GadgetKind {
    Identity,
    Abs,
    Min2,
    Max2,
}

/// One-hidden-layer nets for x, |x|, min(x, y) and max(x, y).
pub fn gadget(kind: GadgetKind) -> BuiltNet {
    let (l1, l2, name) = match kind {
        GadgetKind::Identity => (
            Layer::from_rows(&[vec![1.0], vec![-1.0]], vec![0.0; 2]),
            Layer::from_rows(&[vec![1.0, -1.0]], vec![0.0]),
            "identity",
        ),
        GadgetKind::Abs => (
            Layer::from_rows(&[vec![1.0], vec![-1.0]], vec![0.0; 2]),
            Layer::from_rows(&[vec![1.0, 1.0]], vec![0.0]),
            "abs",
        ),
        GadgetKind::Min2 | GadgetKind::Max2 => {
            let s = if kind == GadgetKind::Min2 { -0.5 } else { 0.5 };
            (
                Layer::from_rows(
                    &[vec![1.0, 1.0], vec![-1.0, -1.0], vec![1.0, -1.0], vec![-1.0, 1.0]],
                    vec![0.0; 4],
                ),
                Layer::from_rows(&[vec![0.5, -0.5, s, s]], vec![0.0]),
                if kind == GadgetKind::Min2 { "min2" } else { "max2" },
            )
        }
    };
    let net = assemble(vec![l1.expect("static"), l2.expect("static")]);
    let width = net.width();
    BuiltNet::new(net, 1, width, 1.0, name).expect("gadgets meet their bounds")
}
