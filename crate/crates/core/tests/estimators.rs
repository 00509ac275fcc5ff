use fastnn_core::estimators::*;
use fastnn_core::factor::{estimate_dpm_pca, DgpSpec, DiversifiedProjection, FactorDgp, FastKind, Law, RegressionFn};
use fastnn_core::rng::{rng, Rng as CoreRng};
use fastnn_core::train::{train, Learner, TrainConfig, TrainData, TrainReport};
use fastnn_core::{Dataset, Error, RowMatrix};
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::Rng;

fn mse(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>() / a.len() as f64
}

fn small_arch() -> Arch {
    Arch {
        depth: 2,
        width: 16,
        ..Arch::default()
    }
}

fn quick(epochs: usize, seed: u64) -> TrainConfig {
    TrainConfig {
        epochs,
        seed,
        ..TrainConfig::default()
    }
}

struct Split {
    train: Dataset,
    valid: Dataset,
    test: Dataset,
    w: DiversifiedProjection,
}

fn split(spec: DgpSpec, seed: u64, n: usize, n_valid: usize, n_test: usize, n1: usize) -> Split {
    let dgp = FactorDgp::new(spec, seed).unwrap();
    let un = dgp.generate(n1, "unlabeled");
    Split {
        train: dgp.generate(n, "train"),
        valid: dgp.generate(n_valid, "valid"),
        test: dgp.generate(n_test, "test-0"),
        w: estimate_dpm_pca(&un.x, 10.min(n1)).unwrap(),
    }
}

fn gaussian_matrix(r: &mut CoreRng, n: usize, p: usize) -> RowMatrix {
    RowMatrix::from_fn(n, p, |_, _| {
        let u: f64 = r.gen::<f64>().max(1e-300);
        let v: f64 = r.gen();
        (-2.0 * u.ln()).sqrt() * (2.0 * std::f64::consts::PI * v).cos()
    })
}

// ---- clipped L1 ----

#[test]
fn clipped_l1_examples() {
    assert_eq!(clipped_l1(0.0, 0.01), 0.0);
    assert!((clipped_l1(0.005, 0.01) - 0.5).abs() < 1e-15);
    assert_eq!(clipped_l1(0.02, 0.01), 1.0);
    assert!((clipped_l1_subgrad(0.005, 0.01) - 100.0).abs() < 1e-9);
    assert_eq!(clipped_l1_subgrad(0.02, 0.01), 0.0);
    assert!((clipped_l1_subgrad(-0.005, 0.01) + 100.0).abs() < 1e-9);
    assert_eq!(clipped_l1_subgrad(0.0, 0.01), 0.0);
}

#[test]
fn clipped_l1_config_checks() {
    assert!(ClippedL1Config { lambda: 0.1, tau: 0.0 }.validate().is_err());
    assert!(ClippedL1Config { lambda: -1.0, tau: 0.1 }.validate().is_err());
    let t = ClippedL1Config::theory(1000, 500);
    assert!((t.lambda - (500.0f64 * 1000.0).ln() / 1000.0).abs() < 1e-15);
    assert!((t.tau - 1.0 / (500.0 * 1000f64.sqrt())).abs() < 1e-18);
    let d = ClippedL1Config::default();
    assert_eq!((d.lambda, d.tau), (1e-2, 1e-2));
    assert_eq!(FastNnConfig::default().n_sel, 10);
}

proptest! {
    #[test]
    fn clipped_l1_in_unit_interval(x in -10.0f64..10.0, tau in 1e-4f64..5.0) {
        let v = clipped_l1(x, tau);
        prop_assert!((0.0..=1.0).contains(&v));
    }

    #[test]
    fn subgrad_matches_difference_quotient(frac in 0.05f64..0.95, neg in any::<bool>(), tau in 1e-3f64..1.0) {
        let x = if neg { -frac * tau } else { frac * tau };
        let h = 1e-6 * tau;
        let fd = (clipped_l1(x + h, tau) - clipped_l1(x - h, tau)) / (2.0 * h);
        prop_assert!((fd - clipped_l1_subgrad(x, tau)).abs() <= 1e-6 / tau);
    }
}

// ---- neural estimators ----

#[test]
fn far_nn_on_null_design_never_worse_than_start() {
    let spec = DgpSpec {
        noise_var: 0.0,
        ..DgpSpec::null_case(50)
    };
    let s = split(spec, 3, 100, 40, 10, 30);
    let arch = Arch {
        zero_output: false,
        ..small_arch()
    };
    let (_, rep) = fit_far_nn(&s.train, &s.valid, &s.w, &arch, &quick(20, 1)).unwrap();
    assert!(rep.best_valid_loss <= rep.initial_valid_loss);
    assert!(rep.valid_history.len() == 20);
}

#[test]
fn far_nn_rejects_empty_sets() {
    let s = split(DgpSpec::additive(30), 1, 50, 10, 10, 20);
    let empty = s.valid.subset(&[]);
    let err = fit_far_nn(&s.train, &empty, &s.w, &small_arch(), &quick(2, 0)).unwrap_err();
    assert!(matches!(err, Error::Config(_)));
}

#[test]
fn far_nn_beats_vanilla_on_factor_design() {
    let s = split(DgpSpec::additive(1000), 11, 500, 150, 2000, 50);
    assert_eq!(s.w.rbar(), 10);
    let cfg = quick(60, 11);
    let arch = Arch::default();
    let (far, _) = fit_far_nn(&s.train, &s.valid, &s.w, &arch, &cfg).unwrap();
    let van = fit_baseline_nn(BaselineKind::Vanilla, &s.train, &s.valid, None, &arch, &cfg, &[]).unwrap();
    let truth = s.test.truth().unwrap();
    let e_far = mse(&far.predict(&s.test).unwrap(), truth);
    let e_van = mse(&van.model.predict(&s.test).unwrap(), truth);
    assert!(e_far <= 0.5 * e_van, "far {e_far} vanilla {e_van}");
}

#[test]
fn oracle_needs_latent_truth() {
    let s = split(DgpSpec::additive(20), 1, 30, 10, 10, 20);
    let plain = Dataset::new(s.train.x.clone(), s.train.y.clone()).unwrap();
    let err = fit_baseline_nn(
        BaselineKind::Oracle,
        &plain,
        &s.valid,
        None,
        &small_arch(),
        &quick(1, 0),
        &[],
    );
    assert_eq!(err.unwrap_err(), Error::MissingTruth);
    let err = fit_baseline_nn(
        BaselineKind::NnJoint,
        &s.train,
        &s.valid,
        None,
        &small_arch(),
        &quick(1, 0),
        &[],
    );
    assert!(matches!(err.unwrap_err(), Error::Config(_)));
}

#[test]
fn oracle_on_noiseless_additive_design() {
    // the additive components are random, so take the median over three draws
    let mut errs: Vec<f64> = [5u64, 6, 7]
        .iter()
        .map(|&seed| {
            let spec = DgpSpec {
                noise_var: 0.0,
                ..DgpSpec::additive(20)
            };
            let s = split(spec, seed, 2000, 300, 2000, 20);
            let fit = fit_baseline_nn(
                BaselineKind::Oracle,
                &s.train,
                &s.valid,
                None,
                &Arch::default(),
                &quick(100, seed),
                &[],
            )
            .unwrap();
            mse(&fit.model.predict(&s.test).unwrap(), s.test.truth().unwrap())
        })
        .collect();
    errs.sort_by(f64::total_cmp);
    assert!(errs[1] <= 1e-2, "oracle test mse {errs:?}");
}

#[test]
fn oracle_uses_important_idiosyncratics() {
    let s = split(DgpSpec::fast(30, FastKind::Linear), 1, 40, 10, 10, 20);
    let fit = fit_baseline_nn(
        BaselineKind::Oracle,
        &s.train,
        &s.valid,
        None,
        &small_arch(),
        &quick(1, 0),
        &[],
    )
    .unwrap();
    let BaselineModel::Net(m) = &fit.model else { panic!() };
    assert_eq!(m.input, InputKind::FactorsAndIdio);
    assert_eq!(m.net.input_dim(), 4 + 5);
    let fit = fit_baseline_nn(
        BaselineKind::OracleFactor,
        &s.train,
        &s.valid,
        None,
        &small_arch(),
        &quick(1, 0),
        &[],
    )
    .unwrap();
    let BaselineModel::Net(m) = &fit.model else { panic!() };
    assert_eq!(m.net.input_dim(), 4);
}

#[test]
fn nn_joint_without_training_equals_far_nn_start() {
    let s = split(DgpSpec::additive(60), 2, 80, 20, 30, 30);
    let cfg = quick(0, 9);
    let arch = Arch {
        zero_output: false,
        ..small_arch()
    };
    let (far, _) = fit_far_nn(&s.train, &s.valid, &s.w, &arch, &cfg).unwrap();
    let joint = fit_baseline_nn(BaselineKind::NnJoint, &s.train, &s.valid, Some(&s.w), &arch, &cfg, &[]).unwrap();
    let a = far.predict(&s.test).unwrap();
    let b = joint.model.predict(&s.test).unwrap();
    for (x, y) in a.iter().zip(&b) {
        assert!((x - y).abs() <= 1e-12 * (1.0 + x.abs()));
    }
}

#[test]
fn nn_joint_moves_the_projection() {
    let s = split(DgpSpec::additive(40), 2, 80, 20, 30, 30);
    let joint = fit_baseline_nn(
        BaselineKind::NnJoint,
        &s.train,
        &s.valid,
        Some(&s.w),
        &small_arch(),
        &quick(5, 1),
        &[],
    )
    .unwrap();
    let BaselineModel::Joint(m) = &joint.model else {
        panic!()
    };
    if joint.report.best_epoch > 0 {
        assert_ne!(m.w, s.w.w);
    }
}

#[test]
fn dropout_rate_zero_is_plain_training() {
    let s = split(DgpSpec::additive(30), 4, 60, 20, 20, 20);
    let cfg = quick(5, 2);
    let plain = fit_baseline_nn(
        BaselineKind::Vanilla,
        &s.train,
        &s.valid,
        None,
        &small_arch(),
        &cfg,
        &[],
    )
    .unwrap();
    let drop = fit_baseline_nn(
        BaselineKind::DropoutVanilla,
        &s.train,
        &s.valid,
        None,
        &small_arch(),
        &cfg,
        &[0.0],
    )
    .unwrap();
    assert_eq!(plain.model, drop.model);
    assert_eq!(drop.dropout, 0.0);
}

#[test]
fn dropout_grid_keeps_best_validation_rate() {
    let s = split(DgpSpec::additive(30), 4, 60, 20, 20, 20);
    let cfg = quick(3, 2);
    let grid = [0.0, 0.5, 0.9];
    let best = fit_baseline_nn(
        BaselineKind::DropoutVanilla,
        &s.train,
        &s.valid,
        None,
        &small_arch(),
        &cfg,
        &grid,
    )
    .unwrap();
    for &r in &grid {
        let one = fit_baseline_nn(
            BaselineKind::DropoutVanilla,
            &s.train,
            &s.valid,
            None,
            &small_arch(),
            &cfg,
            &[r],
        )
        .unwrap();
        assert!(best.report.best_valid_loss <= one.report.best_valid_loss);
    }
    assert!(grid.contains(&best.dropout));
    assert!(fit_baseline_nn(
        BaselineKind::DropoutJoint,
        &s.train,
        &s.valid,
        Some(&s.w),
        &small_arch(),
        &cfg,
        &[]
    )
    .is_err());
    assert_eq!(DROPOUT_GRID, [0.0, 0.3, 0.5, 0.6, 0.7, 0.8, 0.9]);
}

#[test]
fn predictions_bounded_by_truncation() {
    let s = split(DgpSpec::additive(30), 6, 80, 20, 200, 20);
    let mut big = s.train.clone();
    for v in big.y.iter_mut() {
        *v *= 100.0;
    }
    let arch = Arch {
        truncation: 0.5,
        ..small_arch()
    };
    let (m, _) = fit_far_nn(&big, &s.valid, &s.w, &arch, &quick(10, 0)).unwrap();
    assert!(m.predict(&s.test).unwrap().iter().all(|v| v.abs() <= 0.5));
}

#[test]
fn fits_are_deterministic() {
    let s = split(DgpSpec::fast(40, FastKind::Linear), 8, 60, 20, 20, 20);
    let fast = FastNnConfig::default();
    let a = fit_fast_nn(&s.train, &s.valid, &s.w, &small_arch(), &fast, &quick(3, 4)).unwrap();
    let b = fit_fast_nn(&s.train, &s.valid, &s.w, &small_arch(), &fast, &quick(3, 4)).unwrap();
    assert_eq!(a, b);
    let c = fit_fast_nn(&s.train, &s.valid, &s.w, &small_arch(), &fast, &quick(3, 5)).unwrap();
    assert_ne!(a.0, c.0);
}

// ---- FAST-NN ----

#[test]
fn fast_nn_theta_starts_inside_penalized_zone() {
    let s = split(DgpSpec::fast(40, FastKind::Linear), 1, 30, 10, 10, 20);
    let m = fast_nn_init(&s.w, &small_arch(), &FastNnConfig::default(), &quick(1, 0)).unwrap();
    assert_eq!((m.theta.rows, m.theta.cols), (40, 10));
    assert_eq!(m.net.input_dim(), s.w.rbar() + 10);
    assert!(m.theta.data.iter().all(|t| t.abs() <= 0.005));
    assert!(m.penalty.value(&m.theta.data).is_finite());
    let bad = FastNnConfig {
        n_sel: 0,
        ..FastNnConfig::default()
    };
    assert!(fast_nn_init(&s.w, &small_arch(), &bad, &quick(1, 0)).is_err());
}

#[test]
fn fast_nn_prediction_formula() {
    let s = split(DgpSpec::fast(30, FastKind::Linear), 2, 40, 10, 5, 20);
    let (m, _) = fit_fast_nn(
        &s.train,
        &s.valid,
        &s.w,
        &small_arch(),
        &FastNnConfig::default(),
        &quick(2, 0),
    )
    .unwrap();
    let pred = m.predict(&s.test).unwrap();
    for i in 0..s.test.len() {
        let x = s.test.x.row(i);
        let mut input = s.w.surrogate(x).unwrap();
        for k in 0..m.n_sel() {
            let z: f64 = (0..x.len()).map(|j| m.theta.get(j, k) * x[j]).sum();
            input.push(m.selection_gain * z.clamp(-m.truncation, m.truncation));
        }
        let direct = m.net.forward(&input).unwrap()[0];
        assert!((direct - pred[i]).abs() < 1e-12);
    }
}

/// FAST-NN with the penalty hooks removed.
#[derive(Clone)]
struct Unpenalized(FastNnModel);

impl Learner for Unpenalized {
    type Scratch = <FastNnModel as Learner>::Scratch;
    fn scratch(&self) -> Self::Scratch {
        self.0.scratch()
    }
    fn params_mut(&mut self) -> Vec<&mut [f64]> {
        self.0.params_mut()
    }
    fn zero_grads(&self) -> Vec<Vec<f64>> {
        Learner::zero_grads(&self.0)
    }
    fn predict_one(&self, d: &TrainData<'_>, i: usize, s: &mut Self::Scratch) -> f64 {
        self.0.predict_one(d, i, s)
    }
    fn accumulate(
        &self,
        d: &TrainData<'_>,
        i: usize,
        scale: f64,
        dropout: Option<(f64, &mut CoreRng)>,
        grads: &mut [Vec<f64>],
        s: &mut Self::Scratch,
    ) -> f64 {
        self.0.accumulate(d, i, scale, dropout, grads, s)
    }
}

#[test]
fn fast_nn_with_zero_lambda_follows_unpenalized_trajectory() {
    let s = split(DgpSpec::fast(30, FastKind::Linear), 3, 60, 20, 5, 20);
    let fast = FastNnConfig {
        penalty: ClippedL1Config { lambda: 0.0, tau: 1e-2 },
        ..FastNnConfig::default()
    };
    let cfg = quick(4, 6);
    let (m, rep): (FastNnModel, TrainReport) =
        fit_fast_nn(&s.train, &s.valid, &s.w, &small_arch(), &fast, &cfg).unwrap();
    let init = fast_nn_init(&s.w, &small_arch(), &fast, &cfg).unwrap();
    let ft = s.w.surrogate_matrix(&s.train.x).unwrap();
    let fv = s.w.surrogate_matrix(&s.valid.x).unwrap();
    let td = TrainData {
        x: &s.train.x,
        aux: Some(&ft),
        y: &s.train.y,
    };
    let vd = TrainData {
        x: &s.valid.x,
        aux: Some(&fv),
        y: &s.valid.y,
    };
    let (u, urep) = train(Unpenalized(init), &td, &vd, &cfg).unwrap();
    assert_eq!(m, u.0);
    assert_eq!(rep.valid_history, urep.valid_history);
}

#[test]
fn fast_nn_huge_lambda_keeps_theta_small() {
    let s = split(DgpSpec::fast(50, FastKind::Linear), 4, 200, 50, 10, 30);
    let fast = FastNnConfig {
        penalty: ClippedL1Config { lambda: 1e6, tau: 1e-2 },
        ..FastNnConfig::default()
    };
    let (m, _) = fit_fast_nn(&s.train, &s.valid, &s.w, &small_arch(), &fast, &quick(10, 1)).unwrap();
    let biggest = m.theta.max_abs();
    assert!(biggest <= 0.5 * 1e-2, "max |theta| = {biggest}");
}

#[test]
fn fast_nn_selects_true_coordinates() {
    let s = split(DgpSpec::fast(200, FastKind::Linear), 21, 1000, 300, 2000, 100);
    let (m, rep) = fit_fast_nn(
        &s.train,
        &s.valid,
        &s.w,
        &Arch::default(),
        &FastNnConfig::default(),
        &quick(60, 21),
    )
    .unwrap();
    assert!(rep.best_valid_loss <= rep.initial_valid_loss);
    let rm = m.row_max();
    let mut nulls = rm[5..].to_vec();
    nulls.sort_by(f64::total_cmp);
    let q95 = nulls[(0.95 * nulls.len() as f64) as usize];
    assert!(rm[..5].iter().all(|&v| v > q95), "true {:?} q95 {q95}", &rm[..5]);
}

// ---- FANAM ----

#[test]
fn fanam_with_frozen_coefficients_is_factor_regression() {
    let s = split(DgpSpec::fanam(30), 2, 80, 20, 30, 20);
    let cfg = quick(5, 3);
    let mut init = fanam_init(&s.train, &s.w, &small_arch(), &Arch::component(), 0.1, &cfg).unwrap();
    init.freeze_beta = true;
    let (m, _) = fit_fanam_from(init, &s.train, &s.valid, &cfg).unwrap();
    assert!(m.beta.iter().all(|&b| b == 0.0));
    let pred = m.predict(&s.test).unwrap();
    for i in 0..s.test.len() {
        let f = s.w.surrogate(s.test.x.row(i)).unwrap();
        let g0 = m.factor_net.forward(&f).unwrap()[0];
        assert!((g0 - pred[i]).abs() < 1e-12);
    }
}

#[test]
fn fanam_prediction_formula() {
    let s = split(DgpSpec::fanam(20), 3, 80, 20, 10, 20);
    let (m, _) = fit_fanam(
        &s.train,
        &s.valid,
        &s.w,
        &small_arch(),
        &Arch::component(),
        0.0,
        &quick(3, 1),
    )
    .unwrap();
    let pred = m.predict(&s.test).unwrap();
    for i in 0..s.test.len() {
        let x = s.test.x.row(i);
        let f = s.w.surrogate(x).unwrap();
        let mut v = m.factor_net.forward(&f).unwrap()[0];
        for j in 0..x.len() {
            let r = x[j] - (0..f.len()).map(|k| m.v.get(j, k) * f[k]).sum::<f64>();
            v += m.beta[j] * m.components[j].forward(&[r]).unwrap()[0];
        }
        assert!((v - pred[i]).abs() < 1e-10);
    }
}

#[test]
fn fanam_residualizers_are_least_squares() {
    let s = split(DgpSpec::fanam(15), 4, 60, 10, 5, 20);
    let f = s.w.surrogate_matrix(&s.train.x).unwrap();
    let v = residualizers(&s.train.x, &f).unwrap();
    // normal equations: Fᵀ(x_j − F v_j) = 0
    for j in 0..15 {
        for k in 0..f.cols {
            let g: f64 = (0..f.rows)
                .map(|i| {
                    f.get(i, k) * (s.train.x.get(i, j) - (0..f.cols).map(|c| f.get(i, c) * v.get(j, c)).sum::<f64>())
                })
                .sum();
            assert!(g.abs() < 1e-6, "normal equation {j},{k}: {g}");
        }
    }
}

#[test]
fn fanam_huge_lambda_zeroes_coefficients() {
    let s = split(DgpSpec::fanam(30), 5, 150, 40, 10, 20);
    let (m, _) = fit_fanam(
        &s.train,
        &s.valid,
        &s.w,
        &small_arch(),
        &Arch::component(),
        1e6,
        &quick(10, 2),
    )
    .unwrap();
    let l1: f64 = m.beta.iter().map(|b| b.abs()).sum();
    assert!(l1 <= 1e-3, "l1 {l1}");
}

#[test]
fn fanam_beats_pcr_on_sparse_additive_design() {
    let s = split(DgpSpec::fanam(100), 7, 500, 150, 2000, 50);
    let (m, rep) = fit_fanam(
        &s.train,
        &s.valid,
        &s.w,
        &Arch::default(),
        &Arch::component(),
        0.1,
        &quick(60, 7),
    )
    .unwrap();
    assert!(rep.best_valid_loss <= rep.initial_valid_loss);
    let pcr = fit_pcr_validated(&s.train, &s.valid, 10).unwrap();
    let truth = s.test.truth().unwrap();
    let e_fanam = mse(&m.predict(&s.test).unwrap(), truth);
    let e_pcr = mse(&pcr.predict(&s.test.x).unwrap(), truth);
    assert!(e_fanam < e_pcr, "fanam {e_fanam} pcr {e_pcr}");
}

// ---- min-l2 ----

#[test]
fn min_l2_examples() {
    let x = RowMatrix::from_rows(&[vec![1.0, 0.0]]).unwrap();
    let f = fit_min_l2(&x, &[2.0]).unwrap();
    assert!((f.beta[0] - 2.0).abs() < 1e-12 && f.beta[1].abs() < 1e-12);
    let x = RowMatrix::from_rows(&[vec![1.0, 1.0]]).unwrap();
    let f = fit_min_l2(&x, &[2.0]).unwrap();
    assert!((f.beta[0] - 1.0).abs() < 1e-12 && (f.beta[1] - 1.0).abs() < 1e-12);
    assert_eq!(f.intercept, 0.0);
    let tall = RowMatrix::zeros(3, 2);
    assert!(matches!(fit_min_l2(&tall, &[0.0; 3]), Err(Error::Config(_))));
}

#[test]
fn min_l2_interpolates_with_minimal_norm() {
    let mut r = rng(17);
    let (n, p) = (20, 40);
    let x = gaussian_matrix(&mut r, n, p);
    let y: Vec<f64> = (0..n).map(|_| r.gen::<f64>() * 4.0 - 2.0).collect();
    let f = fit_min_l2(&x, &y).unwrap();
    let fitted = f.predict(&x).unwrap();
    assert!(fitted.iter().zip(&y).all(|(a, b)| (a - b).abs() <= 1e-8));
    // null-space projector I − X⁺X from an SVD pseudo-inverse
    let d = DMatrix::from_row_slice(n, p, &x.data);
    let proj = DMatrix::<f64>::identity(p, p) - d.clone().pseudo_inverse(1e-12).unwrap() * &d;
    let norm = |v: &[f64]| v.iter().map(|a| a * a).sum::<f64>().sqrt();
    let base = norm(&f.beta);
    for _ in 0..100 {
        let g = nalgebra::DVector::from_fn(p, |_, _| r.gen::<f64>() * 2.0 - 1.0);
        let z = &proj * g;
        let moved: Vec<f64> = f.beta.iter().zip(z.iter()).map(|(b, z)| b + z).collect();
        assert!(base <= norm(&moved) + 1e-12);
        // the perturbation keeps the interpolation
        assert!((&d * z).amax() < 1e-8);
    }
}

// ---- Lasso ----

#[test]
fn lasso_zero_above_lambda_max() {
    let mut r = rng(3);
    let x = gaussian_matrix(&mut r, 50, 8);
    let y: Vec<f64> = (0..50).map(|i| x.get(i, 0) * 2.0 + r.gen::<f64>()).collect();
    let opts = LassoOptions::default();
    let lmax = lasso_lambda_max(&x, &y, &opts).unwrap();
    let f = fit_lasso(&x, &y, lmax * 1.0001, &opts).unwrap();
    assert!(f.beta.iter().all(|&b| b == 0.0));
    let mean = y.iter().sum::<f64>() / 50.0;
    assert!((f.intercept - mean).abs() < 1e-12);
    let f = fit_lasso(&x, &y, lmax * 0.5, &opts).unwrap();
    assert!(f.beta.iter().any(|&b| b != 0.0));
}

#[test]
fn lasso_orthonormal_design_without_penalty_is_ols() {
    // columns orthogonal with ‖X_j‖² = n
    let n = 8;
    let h = [
        [1.0, 1.0, 1.0, 1.0],
        [1.0, -1.0, 1.0, -1.0],
        [1.0, 1.0, -1.0, -1.0],
        [1.0, -1.0, -1.0, 1.0],
    ];
    let x = RowMatrix::from_fn(n, 3, |i, j| h[i % 4][j + 1] * if i < 4 { 1.0 } else { -1.0 });
    let y = [0.3, -1.2, 2.0, 0.7, 1.1, -0.4, 0.0, 0.9];
    let opts = LassoOptions {
        standardize: false,
        intercept: false,
        ..LassoOptions::default()
    };
    let f = fit_lasso(&x, &y, 0.0, &opts).unwrap();
    for j in 0..3 {
        let ols: f64 = (0..n).map(|i| x.get(i, j) * y[i]).sum::<f64>() / n as f64;
        assert!((f.beta[j] - ols).abs() < 1e-10);
    }
    // with a penalty each coefficient is soft-thresholded
    let f = fit_lasso(&x, &y, 0.2, &opts).unwrap();
    for j in 0..3 {
        let ols: f64 = (0..n).map(|i| x.get(i, j) * y[i]).sum::<f64>() / n as f64;
        assert!((f.beta[j] - soft_threshold(ols, 0.2)).abs() < 1e-10);
    }
}

#[test]
fn lasso_one_dimensional_closed_form() {
    let x = RowMatrix::from_rows(&[vec![1.0], vec![2.0], vec![-0.5], vec![3.0]]).unwrap();
    let y = [1.0, 2.5, 0.2, 2.0];
    let opts = LassoOptions {
        standardize: false,
        intercept: false,
        ..LassoOptions::default()
    };
    let xy: f64 = (0..4).map(|i| x.get(i, 0) * y[i]).sum::<f64>() / 4.0;
    let xx: f64 = (0..4).map(|i| x.get(i, 0).powi(2)).sum::<f64>() / 4.0;
    for lam in [0.0, 0.3, 1.0, 5.0] {
        let f = fit_lasso(&x, &y, lam, &opts).unwrap();
        assert!((f.beta[0] - soft_threshold(xy, lam) / xx).abs() < 1e-12);
    }
}

#[test]
fn lasso_kkt_on_random_instances() {
    let mut r = rng(99);
    for t in 0..20 {
        let (n, p) = (30 + t, 10 + 3 * t);
        let x = gaussian_matrix(&mut r, n, p);
        let y: Vec<f64> = (0..n)
            .map(|i| x.get(i, 0) - 0.5 * x.get(i, 1) + r.gen::<f64>() - 0.5)
            .collect();
        let raw = LassoOptions {
            standardize: false,
            intercept: false,
            ..LassoOptions::default()
        };
        let lmax = lasso_lambda_max(&x, &y, &raw).unwrap();
        let f = fit_lasso(&x, &y, 0.1 * lmax, &raw).unwrap();
        assert!(f.converged);
        let k = lasso_kkt_residual(&x, &y, &f).unwrap();
        assert!(k <= 1e-6, "instance {t}: kkt {k}");
        let std = fit_lasso(&x, &y, 0.1 * lmax, &LassoOptions::default()).unwrap();
        assert!(std.converged && std.kkt_residual <= 1e-6);
    }
}

#[test]
fn lasso_flags_non_convergence() {
    let mut r = rng(4);
    let x = gaussian_matrix(&mut r, 20, 30);
    let y: Vec<f64> = (0..20).map(|_| r.gen::<f64>()).collect();
    let opts = LassoOptions {
        max_sweeps: 1,
        ..LassoOptions::default()
    };
    let f = fit_lasso(&x, &y, 1e-4, &opts).unwrap();
    assert!(!f.converged);
    assert!(fit_lasso(&x, &y, -1.0, &opts).is_err());
}

#[test]
fn lasso_path_matches_cold_starts() {
    let mut r = rng(5);
    let x = gaussian_matrix(&mut r, 40, 12);
    let y: Vec<f64> = (0..40).map(|i| 2.0 * x.get(i, 3) + r.gen::<f64>()).collect();
    let opts = LassoOptions::default();
    let grid = lambda_grid(lasso_lambda_max(&x, &y, &opts).unwrap(), 5, 1e-2);
    assert_eq!(grid.len(), 5);
    let path = lasso_path(&x, &y, &grid, &opts).unwrap();
    for (l, warm) in grid.iter().zip(&path) {
        let cold = fit_lasso(&x, &y, *l, &opts).unwrap();
        for (a, b) in warm.beta.iter().zip(&cold.beta) {
            assert!((a - b).abs() < 1e-6);
        }
    }
}

// ---- PCR and farm-lite ----

#[test]
fn pcr_with_all_components_matches_score_regression() {
    let mut r = rng(8);
    let (n, p) = (12, 30);
    let x = gaussian_matrix(&mut r, n, p);
    let y: Vec<f64> = (0..n).map(|_| r.gen::<f64>() * 2.0).collect();
    let f = fit_pcr(&x, &y, n).unwrap();
    // least squares of the centered response on the centered covariates
    let mut means = vec![0.0; p];
    for i in 0..n {
        for j in 0..p {
            means[j] += x.get(i, j) / n as f64;
        }
    }
    let xc = DMatrix::from_fn(n, p, |i, j| x.get(i, j) - means[j]);
    let ym = y.iter().sum::<f64>() / n as f64;
    let yc = nalgebra::DVector::from_fn(n, |i, _| y[i] - ym);
    let fitted = &xc * (xc.clone().pseudo_inverse(1e-10).unwrap() * &yc);
    let pred = f.predict(&x).unwrap();
    for i in 0..n {
        assert!((pred[i] - ym - fitted[i]).abs() < 1e-8);
    }
    assert!(matches!(fit_pcr(&x, &y, n + 1), Err(Error::Config(_))));
}

#[test]
fn pcr_rank_one_recovery() {
    let mut r = rng(12);
    let (n, p) = (25, 15);
    let a: Vec<f64> = (0..n).map(|_| r.gen::<f64>() * 2.0 - 1.0).collect();
    let b: Vec<f64> = (0..p).map(|_| r.gen::<f64>() * 2.0 - 1.0).collect();
    let x = RowMatrix::from_fn(n, p, |i, j| a[i] * b[j]);
    let beta: Vec<f64> = (0..p).map(|j| (j as f64 - 7.0) / 5.0).collect();
    let y: Vec<f64> = (0..n)
        .map(|i| 1.5 + (0..p).map(|j| x.get(i, j) * beta[j]).sum::<f64>())
        .collect();
    let f = fit_pcr(&x, &y, 1).unwrap();
    let pred = f.predict(&x).unwrap();
    assert!(pred.iter().zip(&y).all(|(a, b)| (a - b).abs() <= 1e-8));
}

#[test]
fn pcr_on_noise_explains_little() {
    let mut r = rng(13);
    let (n, p) = (200, 50);
    let x = gaussian_matrix(&mut r, n, p);
    let y: Vec<f64> = (0..n).map(|_| r.gen::<f64>() - 0.5).collect();
    let f = fit_pcr(&x, &y, 5).unwrap();
    let pred = f.predict(&x).unwrap();
    let m = y.iter().sum::<f64>() / n as f64;
    let sst: f64 = y.iter().map(|v| (v - m).powi(2)).sum();
    let sse: f64 = pred.iter().zip(&y).map(|(a, b)| (a - b).powi(2)).sum();
    assert!(1.0 - sse / sst <= 0.1);
    assert_eq!(fit_pcr(&x, &y, 0).unwrap().beta, vec![0.0; p]);
}

#[test]
fn farm_lite_limits() {
    let mut r = rng(14);
    let (n, p) = (60, 20);
    let x = gaussian_matrix(&mut r, n, p);
    let y: Vec<f64> = (0..n)
        .map(|i| x.get(i, 0) + 0.3 * x.get(i, 5) + r.gen::<f64>())
        .collect();
    let opts = LassoOptions::default();
    let pcr = fit_pcr(&x, &y, 3).unwrap();
    let farm = fit_farm_lite(&x, &y, 3, 1e9, &opts).unwrap();
    for (a, b) in farm.beta.iter().zip(&pcr.beta) {
        assert!((a - b).abs() < 1e-10);
    }
    assert!((farm.intercept - pcr.intercept).abs() < 1e-10);
    let lasso = fit_lasso(&x, &y, 0.05, &opts).unwrap();
    let farm = fit_farm_lite(&x, &y, 0, 0.05, &opts).unwrap();
    for (a, b) in farm.beta.iter().zip(&lasso.beta) {
        assert!((a - b).abs() < 1e-8);
    }
    assert!((farm.intercept - lasso.intercept).abs() < 1e-8);
    assert_eq!(farm.method, LinearMethod::FarmLite);
}

#[test]
fn farm_lite_competitive_on_factor_plus_sparse_design() {
    // factor design whose response also depends linearly on two idiosyncratics
    let mut total = [0.0f64; 3];
    for seed in 0..20u64 {
        let spec = DgpSpec {
            regression: RegressionFn::Fast1,
            r: 4,
            factor_law: Law::Uniform { half_width: 1.0 },
            ..DgpSpec::additive(60)
        };
        let dgp = FactorDgp::new(spec, seed).unwrap();
        let tr = dgp.generate(150, "train");
        let va = dgp.generate(50, "valid");
        let te = dgp.generate(500, "test-0");
        let opts = LassoOptions::default();
        let truth = te.truth().unwrap();
        let farm = fit_farm_lite_validated(&tr, &va, 6, &opts).unwrap();
        let pcr = fit_pcr_validated(&tr, &va, 6).unwrap();
        let lasso = fit_lasso_validated(&tr, &va, &opts).unwrap();
        total[0] += mse(&farm.predict(&te.x).unwrap(), truth);
        total[1] += mse(&pcr.predict(&te.x).unwrap(), truth);
        total[2] += mse(&lasso.predict(&te.x).unwrap(), truth);
    }
    assert!(
        total[0] <= 1.1 * total[1].min(total[2]),
        "farm {} pcr {} lasso {}",
        total[0],
        total[1],
        total[2]
    );
}

// ---- serialization ----

#[test]
fn fitted_models_round_trip_through_json() {
    let s = split(DgpSpec::fast(20, FastKind::Linear), 1, 40, 10, 10, 20);
    let (fast, _) = fit_fast_nn(
        &s.train,
        &s.valid,
        &s.w,
        &small_arch(),
        &FastNnConfig::default(),
        &quick(1, 0),
    )
    .unwrap();
    let (fanam, _) = fit_fanam(
        &s.train,
        &s.valid,
        &s.w,
        &small_arch(),
        &Arch::component(),
        0.1,
        &quick(1, 0),
    )
    .unwrap();
    let (far, _) = fit_far_nn(&s.train, &s.valid, &s.w, &small_arch(), &quick(1, 0)).unwrap();
    let joint = fit_baseline_nn(
        BaselineKind::NnJoint,
        &s.train,
        &s.valid,
        Some(&s.w),
        &small_arch(),
        &quick(1, 0),
        &[],
    )
    .unwrap();
    let lin = fit_lasso(&s.train.x, &s.train.y, 0.1, &LassoOptions::default()).unwrap();
    let models = [
        FittedModel::Fast(fast),
        FittedModel::Fanam(fanam),
        FittedModel::Net(far),
        joint.model.into(),
        FittedModel::Linear(lin),
    ];
    for m in models {
        let text = serde_json::to_string(&m).unwrap();
        let back: FittedModel = serde_json::from_str(&text).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.predict(&s.test).unwrap(), m.predict(&s.test).unwrap());
        assert_eq!(m.input_dim(), Some(20));
    }
}

#[test]
fn model_rejects_wrong_width() {
    let s = split(DgpSpec::additive(20), 1, 40, 10, 10, 20);
    let lin = FittedModel::Linear(fit_pcr(&s.train.x, &s.train.y, 2).unwrap());
    let narrow = Dataset::new(s.test.x.select_cols(&[0, 1, 2]), s.test.y.clone()).unwrap();
    assert!(matches!(lin.predict(&narrow), Err(Error::Shape { .. })));
}
