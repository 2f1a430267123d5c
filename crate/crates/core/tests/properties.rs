use nalgebra::{dmatrix, dvector, DMatrix, DVector};
use proptest::prelude::*;

use spukf_core::diagnostics::relative_difference;
use spukf_core::filters::{kalman_update, FilterConfig, FilterKind, StateEstimate};
use spukf_core::models::{
    propagate_mean, state_transition_matrix, CountingDynamics, FnDynamics, JacobianMode,
    LinearDynamics, LinearMeasurement,
};
use spukf_core::numerics::{cholesky_factor, default_fd_steps, fd_jacobian, matrix_exp, rk4_propagate};
use spukf_core::unscented::{
    generate_sigma_points, generate_simplex_sigma_points, ut_covariance, ut_cross_covariance,
    ut_mean,
};

fn spd(n: usize, entries: &[f64]) -> DMatrix<f64> {
    let b = DMatrix::from_iterator(n, n, entries.iter().copied());
    &b * b.transpose() + DMatrix::identity(n, n) * 0.1
}

fn spd_strategy(max_n: usize) -> impl Strategy<Value = DMatrix<f64>> {
    (1..=max_n).prop_flat_map(|n| {
        prop::collection::vec(-1.0f64..1.0, n * n).prop_map(move |v| spd(n, &v))
    })
}

fn square_strategy(n: usize, bound: f64) -> impl Strategy<Value = DMatrix<f64>> {
    prop::collection::vec(-1.0f64..1.0, n * n).prop_map(move |v| {
        let a = DMatrix::from_vec(n, n, v);
        let norm = a.norm();
        if norm > 0.0 {
            a * (bound / norm)
        } else {
            a
        }
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn cholesky_recomposes(p in spd_strategy(12), scale in 0.1f64..10.0) {
        let l = cholesky_factor(&p, scale).unwrap();
        prop_assert!(relative_difference(&(&l * l.transpose()), &(&p * scale)) < 1e-10);
        for i in 0..l.nrows() {
            for j in (i + 1)..l.ncols() {
                prop_assert_eq!(l[(i, j)], 0.0);
            }
        }
    }

    #[test]
    fn expm_semigroup(
        n in 1usize..6,
        raw in prop::collection::vec(-1.0f64..1.0, 36),
        norm in 0.0f64..5.0,
        t1 in -1.0f64..1.0,
        t2 in -1.0f64..1.0,
    ) {
        let mut a = DMatrix::from_iterator(n, n, raw.into_iter().take(n * n));
        let f = a.norm();
        if f > 0.0 {
            a *= norm / f;
        }
        let lhs = matrix_exp(&a, t1).unwrap() * matrix_exp(&a, t2).unwrap();
        let rhs = matrix_exp(&a, t1 + t2).unwrap();
        prop_assert!(relative_difference(&lhs, &rhs) < 1e-9);
    }

    #[test]
    fn expm_blockwise(a in square_strategy(2, 3.0), b in square_strategy(3, 3.0), t in 0.1f64..2.0) {
        let mut big = DMatrix::zeros(5, 5);
        big.view_mut((0, 0), (2, 2)).copy_from(&a);
        big.view_mut((2, 2), (3, 3)).copy_from(&b);
        let e = matrix_exp(&big, t).unwrap();
        let ea = matrix_exp(&a, t).unwrap();
        let eb = matrix_exp(&b, t).unwrap();
        prop_assert!((e.view((0, 0), (2, 2)) - &ea).amax() <= 1e-12 * ea.amax().max(1.0));
        prop_assert!((e.view((2, 2), (3, 3)) - &eb).amax() <= 1e-12 * eb.amax().max(1.0));
        prop_assert!(e.view((0, 2), (2, 3)).amax() == 0.0);
    }

    #[test]
    fn standard_weights_and_moments(p in spd_strategy(8), kappa in 0.0f64..3.0) {
        let n = p.nrows();
        let mu = DVector::from_fn(n, |i, _| i as f64 - 1.5);
        let s = generate_sigma_points(&mu, &p, kappa).unwrap();
        prop_assert_eq!(s.len(), 2 * n + 1);
        prop_assert!((s.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        for i in 1..=n {
            prop_assert_eq!(&s.offsets[i + n], &-&s.offsets[i]);
        }
        for (pt, off) in s.points.iter().zip(&s.offsets) {
            prop_assert!((pt - (&mu + off)).amax() <= 1e-15 * pt.amax().max(1.0));
        }
        let m = s.mean().unwrap();
        prop_assert!((&m - &mu).norm() <= 1e-10 * mu.norm().max(1.0));
        prop_assert!(relative_difference(&s.covariance(&m).unwrap(), &p) < 1e-10);
    }

    #[test]
    fn simplex_weights_and_moments(p in spd_strategy(8), w0 in 0.0f64..0.95) {
        let n = p.nrows();
        let mu = DVector::from_fn(n, |i, _| 2.0 * i as f64);
        let s = generate_simplex_sigma_points(&mu, &p, w0).unwrap();
        prop_assert_eq!(s.len(), n + 2);
        prop_assert!((s.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let m = s.mean().unwrap();
        prop_assert!((&m - &mu).norm() <= 1e-10 * mu.norm().max(1.0));
        prop_assert!(relative_difference(&s.covariance(&m).unwrap(), &p) < 1e-10);
    }

    #[test]
    fn affine_maps_are_exact(p in spd_strategy(5), raw in prop::collection::vec(-2.0f64..2.0, 40)) {
        let n = p.nrows();
        let m = 3;
        let a = DMatrix::from_iterator(m, n, raw.iter().copied().take(m * n));
        let b = DVector::from_iterator(m, raw.iter().rev().copied().take(m));
        let mu = DVector::from_fn(n, |i, _| 0.3 * i as f64);
        let expected_cov = &a * &p * a.transpose();
        let expected_mean = &a * &mu + &b;
        for set in [
            generate_sigma_points(&mu, &p, 3.0 - n as f64 + 0.5).unwrap(),
            generate_simplex_sigma_points(&mu, &p, 0.5).unwrap(),
        ] {
            let z: Vec<_> = set.points.iter().map(|y| &a * y + &b).collect();
            let zm = ut_mean(&z, &set.weights).unwrap();
            let zc = ut_covariance(&z, &set.weights, &zm).unwrap();
            prop_assert!((&zm - &expected_mean).norm() <= 1e-10 * expected_mean.norm().max(1.0));
            prop_assert!(relative_difference(&zc, &expected_cov) < 1e-10);
        }
    }

    #[test]
    fn covariance_output_symmetric(p in spd_strategy(6)) {
        let n = p.nrows();
        let s = generate_sigma_points(&DVector::zeros(n), &p, 1.0).unwrap();
        let z: Vec<_> = s.points.iter().map(|y| y.map(|v| v.sin() * 3.0 + v * v)).collect();
        let zm = ut_mean(&z, &s.weights).unwrap();
        let c = ut_covariance(&z, &s.weights, &zm).unwrap();
        prop_assert!((&c - c.transpose()).amax() <= 1e-14 * c.amax().max(1.0));
    }

    #[test]
    fn update_never_increases_trace(
        p in spd_strategy(4),
        h in prop::collection::vec(-1.0f64..1.0, 8),
        r in 0.01f64..10.0,
    ) {
        let n = p.nrows();
        let hm = DMatrix::from_iterator(2, n, h.into_iter().take(2 * n));
        let pyz = &p * hm.transpose();
        let s = &hm * &pyz + DMatrix::identity(2, 2) * r;
        let pred = spukf_core::PredictedMoments {
            t: 0.0,
            state_mean: DVector::zeros(n),
            state_cov: p.clone(),
            meas_mean: DVector::zeros(2),
            innovation_cov: s,
            cross_cov: pyz,
            sigma_points: None,
        };
        let post = kalman_update(&pred, &dvector![0.5, -0.3]).unwrap();
        prop_assert!(post.cov.trace() <= p.trace() * (1.0 + 1e-12));
        prop_assert!(post.is_well_formed());
    }
}

#[test]
fn rk4_observed_order_is_four() {
    let a = dmatrix![0.0, 1.0, 0.0; -4.0, -0.2, 1.0; 0.5, 0.0, -1.0];
    let y0 = dvector![1.0, 0.0, -0.5];
    let dt = 2.0;
    let exact = matrix_exp(&a, dt).unwrap() * &y0;
    let err = |h: usize| (rk4_propagate(|_, y| &a * y, &y0, 0.0, dt, h).unwrap() - &exact).norm();
    for h in [8, 16, 32] {
        let order = (err(h) / err(2 * h)).log2();
        assert!((3.7..=4.3).contains(&order), "h = {h}: order {order}");
    }
}

#[test]
fn fd_error_shrinks_then_plateaus() {
    // Cubic test function with a known Jacobian.
    let f = |x: &DVector<f64>| dvector![x[0].powi(3) + x[0] * x[1], 2.0 * x[1] * x[1] - x[0]];
    let y = dvector![1.7, -0.4];
    let exact = dmatrix![3.0 * y[0] * y[0] + y[1], y[0]; -1.0, 4.0 * y[1]];
    let err = |h: f64| (fd_jacobian(f, &y, &DVector::from_element(2, h)).unwrap() - &exact).amax();
    let coarse = err(1e-1);
    let mid = err(1e-4);
    let tiny = err(1e-13);
    assert!(mid < coarse * 1e-4);
    assert!(tiny > mid);
    let default = fd_jacobian(f, &y, &default_fd_steps(&y)).unwrap();
    assert!(relative_difference(&default, &exact) < 1e-5);
}

/// Probabilists' Gauss–Hermite expectation of `g(mu + L xi)` over `xi ~ N(0, I)`.
fn gauss_hermite_mean(g: impl Fn(&DVector<f64>) -> f64, mu: &DVector<f64>, p: &DMatrix<f64>) -> f64 {
    let nodes = [
        0.0,
        0.958_572_464_613_818_5,
        -0.958_572_464_613_818_5,
        2.020_182_870_456_085_6,
        -2.020_182_870_456_085_6,
    ];
    let weights = [
        0.945_308_720_482_941_9,
        0.393_619_323_152_241_2,
        0.393_619_323_152_241_2,
        0.019_953_242_059_045_91,
        0.019_953_242_059_045_91,
    ];
    let n = mu.len();
    let l = p.clone().cholesky().unwrap().l();
    let norm = std::f64::consts::PI.sqrt().powi(n as i32);
    let mut total = 0.0;
    let count = nodes.len().pow(n as u32);
    for mut idx in 0..count {
        let mut xi = DVector::zeros(n);
        let mut w = 1.0;
        for k in 0..n {
            let i = idx % nodes.len();
            idx /= nodes.len();
            xi[k] = nodes[i] * 2f64.sqrt();
            w *= weights[i];
        }
        total += w * g(&(mu + &l * xi));
    }
    total / norm
}

#[test]
fn quadratic_mean_matches_gauss_hermite() {
    let a = dmatrix![2.0, 0.5, -0.3; 0.5, 1.0, 0.2; -0.3, 0.2, 3.0];
    let b = dvector![0.1, -1.0, 0.4];
    let g = |y: &DVector<f64>| 0.5 * (y.transpose() * &a * y)[0] + b.dot(y) + 2.0;
    let mu = dvector![0.5, -1.0, 2.0];
    let p = dmatrix![1.0, 0.2, 0.0; 0.2, 0.5, 0.1; 0.0, 0.1, 2.0];
    let oracle = gauss_hermite_mean(g, &mu, &p);
    let closed = g(&mu) + 0.5 * (&p * &a).trace();
    assert!((oracle - closed).abs() < 1e-10 * closed.abs());

    let s = generate_sigma_points(&mu, &p, 0.0).unwrap();
    let z: Vec<_> = s.points.iter().map(|y| dvector![g(y)]).collect();
    let ut = ut_mean(&z, &s.weights).unwrap()[0];
    assert!((ut - oracle).abs() < 1e-10 * oracle.abs());
}

#[test]
fn cross_covariance_of_linear_measurement() {
    let p = dmatrix![2.0, 0.3; 0.3, 1.0];
    let c = dmatrix![1.0, -2.0];
    let s = generate_sigma_points(&dvector![1.0, 1.0], &p, 1.0).unwrap();
    let z: Vec<_> = s.points.iter().map(|y| &c * y).collect();
    let ym = s.mean().unwrap();
    let zm = ut_mean(&z, &s.weights).unwrap();
    let pyz = ut_cross_covariance(&s.points, &z, &ym, &zm, &s.weights).unwrap();
    assert!((pyz - &p * c.transpose()).amax() < 1e-14);
}

#[test]
fn linear_flow_difference_is_transition_times_offset() {
    let a = dmatrix![-0.1, 1.0; -1.0, -0.1];
    let m = LinearDynamics {
        a,
        q: DMatrix::zeros(2, 2),
    };
    let y = dvector![1.0, 2.0];
    let delta = dvector![0.3, -0.7];
    let dt = 0.1;
    let h = 16;
    let diff = propagate_mean(&m, &(&y + &delta), 0.0, dt, h).unwrap()
        - propagate_mean(&m, &y, 0.0, dt, h).unwrap();
    let phi = state_transition_matrix(&m, &y, 0.0, dt, JacobianMode::Analytic).unwrap();
    let lin = &phi * &delta;
    assert!((diff - &lin).norm() <= 1e-9 * lin.norm());
}

#[test]
fn propagation_semigroup() {
    let m = FnDynamics::new(
        2,
        |_, y| dvector![y[1], -y[0].sin()],
        DMatrix::zeros(2, 2),
    );
    let y = dvector![1.0, 0.0];
    let twice = propagate_mean(&m, &propagate_mean(&m, &y, 0.0, 0.5, 8).unwrap(), 0.5, 0.5, 8).unwrap();
    let once = propagate_mean(&m, &y, 0.0, 1.0, 16).unwrap();
    assert!((twice - once).norm() < 1e-14);
}

fn random_stable_system(seed: u64) -> (LinearDynamics, LinearMeasurement, StateEstimate) {
    // Small deterministic LCG keeps this test free of extra dependencies.
    let mut state = seed;
    let mut next = move || {
        state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        ((state >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
    };
    let n = 4;
    let skew = DMatrix::from_fn(n, n, |_, _| next());
    let a = (&skew - skew.transpose()) * 0.5 - DMatrix::identity(n, n) * 0.2;
    let q = spd(n, &(0..n * n).map(|_| 0.1 * next()).collect::<Vec<_>>()) * 0.01;
    let c = DMatrix::from_fn(2, n, |_, _| next());
    let r = spd(2, &(0..4).map(|_| next()).collect::<Vec<_>>());
    let p0 = spd(n, &(0..n * n).map(|_| next()).collect::<Vec<_>>());
    let x0 = DVector::from_fn(n, |_, _| 3.0 * next());
    (
        LinearDynamics { a, q },
        LinearMeasurement { c, r },
        StateEstimate::new(0.0, x0, p0),
    )
}

#[test]
fn linear_systems_make_all_filters_agree() {
    let (dynm, meas, init) = random_stable_system(7);
    let cfg = FilterConfig {
        substeps: 4,
        ..FilterConfig::for_state_dim(4)
    };
    let dt = 0.1;
    let zs: Vec<DVector<f64>> = (0..100)
        .map(|k| dvector![(k as f64 * 0.3).sin(), (k as f64 * 0.17).cos()])
        .collect();
    let run = |kind: FilterKind| {
        let mut est = init.clone();
        let mut out = Vec::new();
        for z in &zs {
            est = kind.step(&dynm, &meas, &est, z, dt, &cfg).unwrap();
            out.push(est.clone());
        }
        out
    };
    let reference = run(FilterKind::Ekf);
    for kind in [FilterKind::Ukf, FilterKind::Ssukf, FilterKind::Spukf, FilterKind::Espukf] {
        for (a, b) in run(kind).iter().zip(&reference) {
            assert!((&a.mean - &b.mean).norm() <= 1e-8 * b.mean.norm().max(1.0), "{kind} {} {}", (&a.mean - &b.mean).norm(), b.mean.norm());
            assert!(relative_difference(&a.cov, &b.cov) <= 1e-8, "{kind}");
        }
    }
}

struct Reentry3;

fn reentry_counting() -> CountingDynamics<FnDynamics> {
    let lam = 5e-5;
    CountingDynamics::new(
        FnDynamics::new(
            3,
            move |_, x| dvector![-x[1], -(-lam * x[0]).exp() * x[1] * x[1] * x[2], 0.0],
            DMatrix::identity(3, 3) * 1e-30,
        )
        .with_jacobian(move |_, x| {
            let e = (-lam * x[0]).exp();
            dmatrix![
                0.0, -1.0, 0.0;
                lam * e * x[1] * x[1] * x[2], -2.0 * e * x[1] * x[2], -e * x[1] * x[1];
                0.0, 0.0, 0.0
            ]
        }),
    )
}

impl Reentry3 {
    fn estimate() -> StateEstimate {
        StateEstimate::new(
            0.0,
            dvector![300000.0, 20000.0, 3e-5],
            DMatrix::from_diagonal(&dvector![1e6, 4e6, 1e-4]),
        )
    }
}

#[test]
fn evaluation_counts_per_prediction() {
    let meas = LinearMeasurement {
        c: dmatrix![1.0, 0.0, 0.0],
        r: dmatrix![1e4],
    };
    let n = 3;
    for h in [1usize, 2, 4] {
        let cfg = FilterConfig {
            substeps: h,
            ..FilterConfig::for_state_dim(n)
        };
        let model = reentry_counting();
        let est = Reentry3::estimate();
        let expect = [
            (FilterKind::Ukf, 4 * h * (2 * n + 1), 0),
            (FilterKind::Ssukf, 4 * h * (n + 2), 0),
            (FilterKind::Spukf, 4 * h, 1),
            (FilterKind::Espukf, 4 * h, 2 * n + 1),
            (FilterKind::Ekf, 4 * h, 1),
        ];
        for (kind, derivs, jacs) in expect {
            model.reset();
            kind.predict(&model, &meas, &est, 0.5, &cfg).unwrap();
            assert_eq!(model.derivative_calls(), derivs, "{kind} h={h}");
            assert_eq!(model.jacobian_calls(), jacs, "{kind} h={h}");
        }
    }
}
