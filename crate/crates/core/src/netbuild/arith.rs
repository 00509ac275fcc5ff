use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::{assemble, compose_built, parallelize, shift_input, BuiltNet};
use crate::error::{config, Error, Result};
use crate::net::Layer;

/// Median of three inputs, as `x1 + x2 + x3 − max − min` with the pairwise
/// max/min of (x1, x2) in the first layer and the comparisons against x3 in
/// the second.
pub fn build_mid() -> BuiltNet {
    let l1 = Layer::from_rows(
        &[
            vec![1.0, 1.0, 0.0],
            vec![-1.0, -1.0, 0.0],
            vec![1.0, -1.0, 0.0],
            vec![-1.0, 1.0, 0.0],
            vec![0.0, 0.0, 1.0],
            vec![0.0, 0.0, -1.0],
        ],
        vec![0.0; 6],
    )
    .expect("static");
    // in terms of the first-layer units u1..u6
    let max12 = [0.5, -0.5, 0.5, 0.5, 0.0, 0.0];
    let min12 = [0.5, -0.5, -0.5, -0.5, 0.0, 0.0];
    let x3 = [0.0, 0.0, 0.0, 0.0, 1.0, -1.0];
    let sum = [1.0, -1.0, 0.0, 0.0, 1.0, -1.0];
    let lin =
        |a: &[f64; 6], ca: f64, b: &[f64; 6], cb: f64| -> Vec<f64> { (0..6).map(|i| ca * a[i] + cb * b[i]).collect() };
    let rows = vec![
        lin(&max12, 1.0, &x3, 1.0),
        lin(&max12, -1.0, &x3, -1.0),
        lin(&max12, 1.0, &x3, -1.0),
        lin(&max12, -1.0, &x3, 1.0),
        lin(&min12, 1.0, &x3, 1.0),
        lin(&min12, -1.0, &x3, -1.0),
        lin(&min12, 1.0, &x3, -1.0),
        lin(&min12, -1.0, &x3, 1.0),
        sum.to_vec(),
        sum.iter().map(|v| -v).collect(),
    ];
    let l2 = Layer::from_rows(&rows, vec![0.0; 10]).expect("static");
    // S − max(max12, x3) − min(min12, x3)
    let out = Layer::from_rows(
        &[vec![-0.5, 0.5, -0.5, -0.5, -0.5, 0.5, 0.5, 0.5, 1.0, -1.0]],
        vec![0.0],
    )
    .expect("static");
    BuiltNet::new(assemble(vec![l1, l2, out]), 2, 14, 1.0, "mid").expect("mid meets its bounds")
}

/// Product network on `[a, b]²` with depth `L` and width at most `9N + 1`.
///
/// With `D = b − a`, `s = (x + y − 2a)/(2D)` and `t = |x − y|/D` in `[0, 1]`,
/// `xy = D²s² − D²t²/4 + a(x + y − 2a) + a²`. Each square is approximated by
/// `z − Σ_k N^{−2k} I(z_k)` where `z_0 = z`, `z_{k+1}` folds `z_k` with an
/// `N`-tooth zigzag and `I` interpolates `z(1 − z)` on the grid `j/N`; the
/// error after `L` levels is at most `N^{−2L}/4`. Every level costs one
/// hidden layer of `N` hinges per square plus a running-sum unit.
pub fn build_multiply(n: usize, depth: usize, a: f64, b: f64) -> Result<BuiltNet> {
    if !(a < b) {
        return config(format!("multiply needs a < b, got [{a}, {b}]"));
    }
    if n == 0 || depth == 0 {
        return config("multiply needs N, L >= 1");
    }
    let d = b - a;
    let nf = n as f64;
    // zigzag and interpolant coefficients on the hinges σ(z − j/N), j = 0..N−1
    let fold: Vec<f64> = (0..n)
        .map(|j| {
            if j == 0 {
                nf
            } else if j % 2 == 1 {
                -2.0 * nf
            } else {
                2.0 * nf
            }
        })
        .collect();
    let interp: Vec<f64> = (0..n)
        .map(|j| if j == 0 { 1.0 - 1.0 / nf } else { -2.0 / nf })
        .collect();

    // Layer 1 units: s-hinges (n), t-hinge pairs (2n), carry (1).
    let mut l1 = Layer::zeros(3 * n + 1, 2);
    for j in 0..n {
        let c = j as f64 / nf;
        l1.set_w(j, 0, 0.5 / d);
        l1.set_w(j, 1, 0.5 / d);
        l1.bias[j] = -a / d - c;
        for (q, sgn) in [1.0, -1.0].into_iter().enumerate() {
            let u = n + 2 * j + q;
            l1.set_w(u, 0, sgn / d);
            l1.set_w(u, 1, -sgn / d);
            l1.bias[u] = -c;
        }
    }
    let carry1 = 3 * n;
    l1.set_w(carry1, 0, 1.0);
    l1.set_w(carry1, 1, 1.0);
    l1.bias[carry1] = -2.0 * a;

    // A chain's state in the current layer: hinge j as a combination of units,
    // and the running sum R as a combination of units.
    type Combo = Vec<(usize, f64)>;
    struct Chain {
        hinges: Vec<Combo>,
        sum: Combo,
    }
    let s_chain = Chain {
        hinges: (0..n).map(|j| vec![(j, 1.0)]).collect(),
        sum: vec![(0, 1.0)],
    };
    let t_chain = Chain {
        hinges: (0..n).map(|j| vec![(n + 2 * j, 1.0), (n + 2 * j + 1, 1.0)]).collect(),
        sum: vec![(n, 1.0), (n + 1, 1.0)],
    };
    let mut chains = [s_chain, t_chain];
    let mut carry = carry1;
    let mut layers = vec![l1];
    let mut width_in = 3 * n + 1;
    let fold_combo = |c: &Chain, coef: &[f64], scale: f64| -> Combo {
        let mut out = Vec::new();
        for (h, &k) in c.hinges.iter().zip(coef) {
            for &(u, w) in h {
                out.push((u, scale * k * w));
            }
        }
        out
    };
    for level in 0..depth - 1 {
        let scale = libm::pow(nf, -2.0 * level as f64);
        let units = 2 * (n + 1) + 1;
        let mut layer = Layer::zeros(units, width_in);
        let mut next: Vec<Chain> = Vec::with_capacity(2);
        for (ci, c) in chains.iter().enumerate() {
            let base = ci * (n + 1);
            let z = fold_combo(c, &fold, 1.0);
            let mut hinges = Vec::with_capacity(n);
            for j in 0..n {
                for &(u, w) in &z {
                    layer.weights[(base + j) * width_in + u] += w;
                }
                layer.bias[base + j] = -(j as f64) / nf;
                hinges.push(vec![(base + j, 1.0)]);
            }
            let r = base + n;
            for &(u, w) in &c.sum {
                layer.weights[r * width_in + u] += w;
            }
            for (u, w) in fold_combo(c, &interp, -scale) {
                layer.weights[r * width_in + u] += w;
            }
            next.push(Chain {
                hinges,
                sum: vec![(r, 1.0)],
            });
        }
        let cu = 2 * (n + 1);
        layer.set_w(cu, carry, 1.0);
        carry = cu;
        chains = [next.remove(0), next.remove(0)];
        layers.push(layer);
        width_in = units;
    }
    let scale = libm::pow(nf, -2.0 * (depth - 1) as f64);
    let mut out = Layer::zeros(1, width_in);
    for (c, coef) in chains.iter().zip([d * d, -d * d / 4.0]) {
        for &(u, w) in &c.sum {
            out.weights[u] += coef * w;
        }
        for (u, w) in fold_combo(c, &interp, -scale * coef) {
            out.weights[u] += w;
        }
    }
    out.weights[carry] += a;
    out.bias[0] = a * a;
    layers.push(out);

    let ab = a.abs() + b.abs();
    let lemma = 3.0 * nf * nf * (ab * ab).max(1.0);
    let first_layer = (1.0 / d).max(a.abs() / d + 1.0);
    BuiltNet::new(assemble(layers), depth, 9 * n + 1, lemma.max(first_layer), "multiply")
}

/// `φ_{j+1}(x) = mid(φ_j(x − Δe_j), φ_j(x), φ_j(x + Δe_j))` for `j = 1..d`,
/// starting from `φ_0 = g`.
pub fn extend_by_mid(g: &BuiltNet, d: usize, delta: f64) -> Result<BuiltNet> {
    if g.net.input_dim() != d {
        return Err(Error::Shape {
            what: "extend_by_mid input dimension",
            expected: d,
            found: g.net.input_dim(),
        });
    }
    if g.net.output_dim() != 1 {
        return config("extend_by_mid needs a scalar-output net");
    }
    let mid = build_mid();
    let all: Vec<usize> = (0..d).collect();
    let mut phi = g.clone();
    for j in 0..d {
        let mut e = vec![0.0; d];
        e[j] = -delta;
        let left = shift_input(&phi, &e)?;
        e[j] = delta;
        let right = shift_input(&phi, &e)?;
        let triple = parallelize(&[left, phi.clone(), right], &[all.clone(), all.clone(), all.clone()], d)?;
        phi = compose_built(&triple, &mid)?;
    }
    phi.name = format!("extend_by_mid({})", g.name);
    Ok(phi)
}
