//! Contract audit: build every construction over a parameter grid and compare
//! declared bounds with measured values.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::{
    build_index_creator, build_mid, build_multiply, compose_built, extend_by_mid, fit_piecewise_linear, fit_points_1d,
    gadget, index_cell_good, pad_built, parallelize, BuiltNet, GadgetKind,
};
use crate::error::Result;
use crate::rng::{rng, tag_seed};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AuditGrid {
    pub seed: u64,
    pub gadgets: bool,
    pub mid: bool,
    /// Number of knots minus one for random piecewise-linear fits.
    pub piecewise_segments: Vec<usize>,
    /// `(N1, N2, δ)`.
    pub points_1d: Vec<(usize, usize, f64)>,
    /// `(d, N, Δ)`.
    pub index_creator: Vec<(usize, usize, f64)>,
    /// `(N, L, a, b)`.
    pub multiply: Vec<(usize, usize, f64, f64)>,
    /// `(d, Δ)` applied to a random piecewise-constant-ish net.
    pub extend_by_mid: Vec<(usize, f64)>,
    /// Declare one layer fewer than built for every multiply net.
    pub faulty_multiply: bool,
}

impl Default for AuditGrid {
    fn default() -> Self {
        AuditGrid {
            seed: 0,
            gadgets: true,
            mid: true,
            piecewise_segments: vec![1, 4, 16],
            points_1d: vec![(2, 2, 0.1), (4, 4, 0.05), (3, 5, 0.02)],
            index_creator: vec![(1, 2, 1.0 / 12.0), (1, 4, 1.0 / 48.0), (2, 16, 1.0 / 48.0)],
            multiply: vec![
                (2, 1, -1.0, 1.0),
                (4, 3, -1.0, 1.0),
                (3, 2, 0.0, 2.0),
                (5, 2, -3.0, 0.5),
            ],
            extend_by_mid: vec![(1, 0.05), (2, 0.05)],
            faulty_multiply: false,
        }
    }
}

impl AuditGrid {
    pub fn empty() -> Self {
        AuditGrid {
            seed: 0,
            gadgets: false,
            mid: false,
            piecewise_segments: Vec::new(),
            points_1d: Vec::new(),
            index_creator: Vec::new(),
            multiply: Vec::new(),
            extend_by_mid: Vec::new(),
            faulty_multiply: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditRow {
    pub construction: String,
    pub quantity: String,
    pub declared: f64,
    pub measured: f64,
    pub ok: bool,
}

fn row(construction: &str, quantity: &str, declared: f64, measured: f64) -> AuditRow {
    AuditRow {
        construction: construction.into(),
        quantity: quantity.into(),
        declared,
        measured,
        ok: measured <= declared * (1.0 + 1e-12) + 1e-12,
    }
}

fn shape_rows(label: &str, b: &BuiltNet, out: &mut Vec<AuditRow>) {
    out.push(row(label, "depth", b.declared_depth as f64, b.net.depth() as f64));
    out.push(row(label, "width", b.declared_width as f64, b.net.width() as f64));
    out.push(row(label, "max_weight", b.declared_max_weight, b.net.max_abs_weight()));
    out.push(row(
        label,
        "params",
        b.declared_params() as f64,
        b.net.param_count() as f64,
    ));
}

fn sorted_uniform(r: &mut crate::rng::Rng, n: usize, min_gap: f64) -> Vec<f64> {
    // n points in [0, 1] with consecutive gaps of at least min_gap
    let slack = 1.0 - min_gap * (n - 1) as f64;
    let mut u: Vec<f64> = (0..n).map(|_| r.gen::<f64>() * slack).collect();
    u.sort_by(f64::total_cmp);
    u.iter().enumerate().map(|(i, v)| v + i as f64 * min_gap).collect()
}

/// Audit every construction in the grid. Rows come out in grid order.
pub fn run_audit(grid: &AuditGrid) -> Result<Vec<AuditRow>> {
    let mut out = Vec::new();
    let mut r = rng(tag_seed(grid.seed, "netbuild-audit"));

    if grid.gadgets {
        for (kind, f) in [
            (GadgetKind::Identity, (|v: &[f64]| v[0]) as fn(&[f64]) -> f64),
            (GadgetKind::Abs, |v: &[f64]| v[0].abs()),
            (GadgetKind::Min2, |v: &[f64]| v[0].min(v[1])),
            (GadgetKind::Max2, |v: &[f64]| v[0].max(v[1])),
        ] {
            let g = gadget(kind);
            let label = g.name.clone();
            shape_rows(&label, &g, &mut out);
            let dim = g.net.input_dim();
            let mut err: f64 = 0.0;
            for _ in 0..200 {
                let x: Vec<f64> = (0..dim).map(|_| r.gen_range(-10.0..10.0)).collect();
                err = err.max((g.eval(&x)[0] - f(&x)).abs());
            }
            out.push(row(&label, "max_abs_error", 1e-12, err));
        }
    }

    if grid.mid {
        let m = build_mid();
        shape_rows("mid", &m, &mut out);
        let mut err: f64 = 0.0;
        for _ in 0..1000 {
            let mut x = [r.gen_range(-5.0..5.0), r.gen_range(-5.0..5.0), r.gen_range(-5.0..5.0)];
            let y = m.eval(&x)[0];
            x.sort_by(f64::total_cmp);
            err = err.max((y - x[1]).abs());
        }
        out.push(row("mid", "max_abs_error", 1e-12, err));
    }

    for &segs in &grid.piecewise_segments {
        let xs = sorted_uniform(&mut r, segs + 1, 1e-3);
        let pts: Vec<(f64, f64)> = xs.iter().map(|&x| (x, r.gen_range(-1.0..1.0))).collect();
        let b = fit_piecewise_linear(&pts)?;
        let label = format!("piecewise_linear[n={segs}]");
        shape_rows(&label, &b, &mut out);
        let err = pts.iter().map(|&(x, y)| (b.eval1(x) - y).abs()).fold(0.0, f64::max);
        out.push(row(&label, "knot_error", 1e-10, err));
    }

    for &(n1, n2, delta) in &grid.points_1d {
        let xs = sorted_uniform(&mut r, n1 * n2, delta);
        let pts: Vec<(f64, f64)> = xs.iter().map(|&x| (x, r.gen::<f64>())).collect();
        let b = fit_points_1d(&pts, n1, n2, delta)?;
        let label = format!("points_1d[n1={n1},n2={n2},delta={delta}]");
        shape_rows(&label, &b, &mut out);
        let err = pts.iter().map(|&(x, y)| (b.eval1(x) - y).abs()).fold(0.0, f64::max);
        out.push(row(&label, "knot_error", 1e-8, err));
        let first = b.net.layers[0].max_abs();
        let last = b.net.layers.last().map(|l| l.max_abs()).unwrap_or(0.0);
        out.push(row(&label, "outer_layer_weight", 1.0, first.max(last)));
    }

    for &(d, n, delta) in &grid.index_creator {
        let b = build_index_creator(d, n, delta)?;
        let label = format!("index_creator[d={d},n={n},delta={delta}]");
        shape_rows(&label, &b, &mut out);
        let mut t = 1;
        while (t + 1usize).pow(d as u32) <= n {
            t += 1;
        }
        let k = t * t;
        let mut err: f64 = 0.0;
        for _ in 0..200 * d {
            let l: Vec<usize> = (0..d).map(|_| r.gen_range(0..k)).collect();
            let x: Vec<f64> = l
                .iter()
                .map(|&lj| {
                    let lo = lj as f64 / k as f64;
                    let hi = (lj + 1) as f64 / k as f64 - if lj + 1 < k { delta } else { 0.0 };
                    lo + r.gen::<f64>() * (hi - lo)
                })
                .collect();
            debug_assert!(index_cell_good(&x, &l, k, delta));
            let y = b.eval(&x);
            for (yj, lj) in y.iter().zip(&l) {
                err = err.max((yj - *lj as f64 / k as f64).abs());
            }
        }
        out.push(row(&label, "good_region_error", 1e-8, err));
    }

    for &(n, depth, a, bnd) in &grid.multiply {
        let mut b = build_multiply(n, depth, a, bnd)?;
        if grid.faulty_multiply {
            b.declared_depth = depth.saturating_sub(1);
        }
        let label = format!("multiply[n={n},l={depth},a={a},b={bnd}]");
        shape_rows(&label, &b, &mut out);
        let grid_n = 41;
        let mut err: f64 = 0.0;
        for i in 0..grid_n {
            for j in 0..grid_n {
                let x = a + (bnd - a) * i as f64 / (grid_n - 1) as f64;
                let y = a + (bnd - a) * j as f64 / (grid_n - 1) as f64;
                err = err.max((b.eval(&[x, y])[0] - x * y).abs());
            }
        }
        let bound = 6.0 * (bnd - a) * (bnd - a) * libm::pow(n as f64, -(depth as f64));
        out.push(row(&label, "sup_error", bound, err));
    }

    for &(d, delta) in &grid.extend_by_mid {
        // a step in the first coordinate, nudged to be linear over a narrow gap
        let step = fit_piecewise_linear(&[(0.0, 0.0), (0.5 - delta / 4.0, 0.0), (0.5, 1.0), (1.0, 1.0)])?;
        let wide = pad_built(&step, 1, 4)?;
        let mut wiring = vec![vec![0usize]];
        let mut nets = vec![wide];
        for j in 1..d {
            // zero-valued pieces keep every coordinate wired
            let zero = fit_piecewise_linear(&[(0.0, 0.0), (1.0, 0.0)])?;
            nets.push(pad_built(&zero, 1, 4)?);
            wiring.push(vec![j]);
        }
        let par = parallelize(&nets, &wiring, d)?;
        let mut sum = crate::net::Layer::zeros(1, d);
        for j in 0..d {
            sum.set_w(0, j, 1.0);
        }
        let adder = BuiltNet::measured(super::assemble(vec![sum]), "sum");
        let g = compose_built(&par, &adder)?;
        let phi = extend_by_mid(&g, d, delta)?;
        let label = format!("extend_by_mid[d={d},delta={delta}]");
        shape_rows(&label, &phi, &mut out);
        let mut err: f64 = 0.0;
        for _ in 0..200 {
            let mut x: Vec<f64> = (0..d).map(|_| r.gen::<f64>()).collect();
            // stay a full shift away from the gap and the boundary
            x[0] = if r.gen::<bool>() {
                r.gen_range(1.5 * delta..0.5 - 1.5 * delta)
            } else {
                r.gen_range(0.5 + 1.5 * delta..1.0)
            };
            let want = if x[0] < 0.5 { 0.0 } else { 1.0 };
            err = err.max((phi.eval(&x)[0] - want).abs());
        }
        out.push(row(&label, "good_region_error", 1e-9, err));
    }

    Ok(out)
}
