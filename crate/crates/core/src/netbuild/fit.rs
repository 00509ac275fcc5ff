use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::{assemble, parallelize, BuiltNet};
use crate::error::{config, Error, Result};
use crate::net::Layer;

fn check_unit_points(xs: &[f64], ys: Option<&[f64]>) -> Result<()> {
    for (i, &x) in xs.iter().enumerate() {
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::Input(format!("knot {i} at x = {x} lies outside [0, 1]")));
        }
    }
    if let Some(ys) = ys {
        for (i, &y) in ys.iter().enumerate() {
            if !(0.0..=1.0).contains(&y) {
                return Err(Error::Input(format!("value {i} = {y} lies outside [0, 1]")));
            }
        }
    }
    Ok(())
}

/// Output bias and hinge weights of the interpolant
/// `g(x) = y_0 + Σ_j w_j σ(x − x_{j−1})`, j = 1..N.
fn hinge_coefficients(xs: &[f64], ys: &[f64]) -> (f64, Vec<f64>) {
    let slopes: Vec<f64> = (1..xs.len())
        .map(|i| (ys[i] - ys[i - 1]) / (xs[i] - xs[i - 1]))
        .collect();
    let w = (0..slopes.len())
        .map(|j| if j == 0 { slopes[0] } else { slopes[j] - slopes[j - 1] })
        .collect();
    (ys[0], w)
}

/// Depth-1 net through the points, linear between consecutive knots.
pub fn fit_piecewise_linear(points: &[(f64, f64)]) -> Result<BuiltNet> {
    if points.len() < 2 {
        return config("piecewise-linear fit needs at least two points");
    }
    let xs: Vec<f64> = points.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1).collect();
    for i in 1..xs.len() {
        if !(xs[i] > xs[i - 1]) {
            return Err(Error::Input(format!(
                "knots must be strictly increasing (x[{}] = {}, x[{}] = {})",
                i - 1,
                xs[i - 1],
                i,
                xs[i]
            )));
        }
    }
    check_unit_points(&xs, None)?;
    let n = xs.len() - 1;
    let (b0, w) = hinge_coefficients(&xs, &ys);
    let hidden = Layer {
        outputs: n,
        inputs: 1,
        weights: vec![1.0; n],
        bias: xs[..n].iter().map(|x| -x).collect(),
    };
    let out = Layer {
        outputs: 1,
        inputs: n,
        weights: w,
        bias: vec![b0],
    };
    let max_slope = (1..xs.len())
        .map(|i| ((ys[i] - ys[i - 1]) / (xs[i] - xs[i - 1])).abs())
        .fold(0.0, f64::max);
    BuiltNet::new(
        assemble(vec![hidden, out]),
        1,
        n,
        (2.0 * max_slope).max(b0.abs()).max(1.0),
        "piecewise_linear",
    )
}

/// Three-hidden-layer exact fit of `N1·N2` points with gaps at least `delta`.
///
/// The first layer holds hinges at the first and last point of each block of
/// `N2` consecutive points. A base interpolant through those block ends is
/// carried by an identity pair; for every interior offset `k` of a block a
/// positive and a negative hat (each the min of a rising and a falling ramp)
/// corrects the residual at point `jN2 + k` of every block at once.
pub fn fit_points_1d(points: &[(f64, f64)], n1: usize, n2: usize, delta: f64) -> Result<BuiltNet> {
    if n1 < 2 || n2 < 2 {
        return config("point fitting needs N1, N2 >= 2");
    }
    if points.len() != n1 * n2 {
        return Err(Error::Shape {
            what: "number of fitted points",
            expected: n1 * n2,
            found: points.len(),
        });
    }
    if !(delta > 0.0) {
        return config("gap delta must be positive");
    }
    let xs: Vec<f64> = points.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1).collect();
    check_unit_points(&xs, Some(&ys))?;
    for i in 1..xs.len() {
        if xs[i] - xs[i - 1] < delta * (1.0 - 1e-9) {
            return Err(Error::Input(format!(
                "points {} and {i} are closer than delta = {delta}",
                i - 1
            )));
        }
    }

    // knot indices: both ends of every block
    let knots: Vec<usize> = (0..n1).flat_map(|j| [j * n2, (j + 1) * n2 - 1]).collect();
    let kx: Vec<f64> = knots.iter().map(|&i| xs[i]).collect();
    let nh = kx.len() - 1;
    let hinge = |x: f64| -> Vec<f64> { kx[..nh].iter().map(|&k| (x - k).max(0.0)).collect() };
    let combine = |b: f64, w: &[f64], h: &[f64]| -> f64 { b + w.iter().zip(h).map(|(a, c)| a * c).sum::<f64>() };

    let l1 = Layer {
        outputs: nh,
        inputs: 1,
        weights: vec![1.0; nh],
        bias: kx[..nh].iter().map(|x| -x).collect(),
    };

    let base_y: Vec<f64> = knots.iter().map(|&i| ys[i]).collect();
    let (b0, w0) = hinge_coefficients(&kx, &base_y);

    let m = n2 - 2;
    let w2 = 4 * m + 2;
    let w3 = 8 * m + 2;
    let mut l2 = Layer::zeros(w2, nh);
    let mut l3 = Layer::zeros(w3, w2);
    let mut out = Layer::zeros(1, w3);

    let set_unit = |l2: &mut Layer, unit: usize, b: f64, w: &[f64], sign: f64| {
        l2.bias[unit] = sign * b;
        for (j, &c) in w.iter().enumerate() {
            l2.set_w(unit, j, sign * c);
        }
    };
    // base interpolant carried as σ(g0) − σ(−g0)
    set_unit(&mut l2, 4 * m, b0, &w0, 1.0);
    set_unit(&mut l2, 4 * m + 1, b0, &w0, -1.0);
    l3.set_w(8 * m, 4 * m, 1.0);
    l3.set_w(8 * m + 1, 4 * m + 1, 1.0);
    out.set_w(0, 8 * m, 1.0);
    out.set_w(0, 8 * m + 1, -1.0);

    for k in 1..=m {
        for (s, sign) in [1.0f64, -1.0].into_iter().enumerate() {
            let mut rise = Vec::with_capacity(kx.len());
            let mut fall = Vec::with_capacity(kx.len());
            for j in 0..n1 {
                let i = j * n2 + k;
                let resid = ys[i] - combine(b0, &w0, &hinge(xs[i]));
                let r = (sign * resid).max(0.0);
                let up = r / (xs[i] - xs[i - 1]);
                let down = r / (xs[i + 1] - xs[i]);
                for &e in &[xs[j * n2], xs[(j + 1) * n2 - 1]] {
                    rise.push(up * (e - xs[i - 1]));
                    fall.push(down * (xs[i + 1] - e));
                }
            }
            let (br, wr) = hinge_coefficients(&kx, &rise);
            let (bf, wf) = hinge_coefficients(&kx, &fall);
            let ur = 4 * (k - 1) + 2 * s;
            let uf = ur + 1;
            set_unit(&mut l2, ur, br, &wr, 1.0);
            set_unit(&mut l2, uf, bf, &wf, 1.0);
            // min(a, b) = ½(σ(a+b) − σ(−a−b) − σ(a−b) − σ(b−a))
            let base = 8 * (k - 1) + 4 * s;
            let pattern = [(1.0, 1.0), (-1.0, -1.0), (1.0, -1.0), (-1.0, 1.0)];
            let coef = [0.5, -0.5, -0.5, -0.5];
            for (q, (ca, cb)) in pattern.into_iter().enumerate() {
                l3.set_w(base + q, ur, ca);
                l3.set_w(base + q, uf, cb);
                out.set_w(0, base + q, sign * coef[q]);
            }
        }
    }
    let net = assemble(vec![l1, l2, l3, out]);
    let width = nh.max(w2).max(w3);
    BuiltNet::new(net, 3, width, 4.0 / (delta * delta), "fit_points_1d")
}

/// Largest integer `t` with `t^d <= n`.
fn integer_root(n: usize, d: usize) -> usize {
    let mut t = 0usize;
    while (t + 1).checked_pow(d as u32).is_some_and(|v| v <= n) {
        t += 1;
    }
    t
}

/// Whether `x` lies in the good region of cell `l` of the `K`-grid: each
/// coordinate satisfies `l_j/K <= x_j <= (l_j+1)/K − Δ`, the `− Δ` dropped
/// for the last cell.
pub fn index_cell_good(x: &[f64], l: &[usize], k: usize, delta: f64) -> bool {
    let kf = k as f64;
    x.iter().zip(l).all(|(&xj, &lj)| {
        let lo = lj as f64 / kf;
        let hi = (lj + 1) as f64 / kf - if lj + 1 < k { delta } else { 0.0 };
        lo <= xj && xj <= hi
    })
}

/// Net mapping each point of the good region of cell `l` to `l/K`
/// coordinatewise, with `K = ⌊N^{1/d}⌋²`.
pub fn build_index_creator(d: usize, n: usize, delta: f64) -> Result<BuiltNet> {
    if d == 0 {
        return config("index creator needs d >= 1");
    }
    let t = integer_root(n, d);
    if t == 0 {
        return config("index creator needs N >= 1");
    }
    let k = t * t;
    if !(delta > 0.0 && delta <= 1.0 / (3.0 * k as f64)) {
        return config(format!("delta {delta} outside (0, 1/(3K)] with K = {k}"));
    }
    let declared_width = 16 * n * d;
    let bound = 4.0 / (delta * delta);
    if t == 1 {
        // a single cell: the constant 0
        let net = assemble(vec![
            Layer::zeros(1, d),
            Layer::zeros(1, 1),
            Layer::zeros(1, 1),
            Layer::zeros(d, 1),
        ]);
        return BuiltNet::new(net, 3, declared_width, bound, "index_creator");
    }
    let kf = k as f64;
    let mut pts = Vec::with_capacity(2 * k);
    for c in 0..k {
        let v = c as f64 / kf;
        let hi = if c + 1 == k { 1.0 } else { (c + 1) as f64 / kf - delta };
        pts.push((v, v));
        pts.push((hi, v));
    }
    let step = fit_points_1d(&pts, t, 2 * t, delta)?;
    let copies = vec![step; d];
    let wiring: Vec<Vec<usize>> = (0..d).map(|j| vec![j]).collect();
    let par = parallelize(&copies, &wiring, d)?;
    BuiltNet::new(par.net, 3, declared_width, bound, "index_creator")
}
