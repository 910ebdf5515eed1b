mod common;

use merr::diffops::{apply_hessian, directional_dd, eig2x2, eig_sym2, mirror_index, roughness_image, Direction};
use merr::multires::{InterpFilter, ResampleOp};
use merr::regularizers::{build_guide, grad_reg_merr, msda_weights, reg_lp, reg_merr, reg_msda, reg_schatten};
use merr::solver::{cost_gradient, eval_cost, RegKind, SolveSpec};
use merr::{Image, RegParams};
use nalgebra::{DVector, Matrix2};
use proptest::prelude::*;
use rand::Rng;

fn dense_apply(m: &nalgebra::DMatrix<f64>, u: &Image) -> Vec<f64> {
    (m * DVector::from_column_slice(u.data())).as_slice().to_vec()
}

#[test]
fn mirror_boundary_matches_reference() {
    for n in 1..7 {
        for i in -20isize..20 {
            assert_eq!(mirror_index(i, n), common::reflect(i, n), "i={i} n={n}");
        }
    }
}

#[test]
fn hessian_matches_dense_stencils() {
    let mut rng = common::rng(11);
    for n in [3, 5, 8] {
        let u = common::random_image(n, &mut rng, -1.0, 1.0);
        let [dxx, dyy, dxy] = common::dense_hessian(n);
        let hess = apply_hessian(&u).unwrap();
        for (got, m) in [(&hess.dxx, &dxx), (&hess.dyy, &dyy), (&hess.dxy, &dxy)] {
            let want = dense_apply(m, &u);
            for (a, b) in got.data().iter().zip(&want) {
                assert!((a - b).abs() < 1e-13);
            }
        }
    }
}

#[test]
fn eigen_agrees_with_nalgebra() {
    let mut rng = common::rng(12);
    for _ in 0..5000 {
        let scale = 10f64.powi(rng.random_range(-3..4));
        let (a, b, c) = (rng.random_range(-1.0..1.0) * scale, rng.random_range(-1.0..1.0) * scale, rng.random_range(-1.0..1.0) * scale);
        let e = eig_sym2(a, b, c);
        let ev = Matrix2::new(a, b, b, c).symmetric_eigen().eigenvalues;
        let (hi, lo) = (ev[0].max(ev[1]), ev[0].min(ev[1]));
        assert!((e.lam1 - hi).abs() <= 1e-10 * scale.max(1.0));
        assert!((e.lam2 - lo).abs() <= 1e-10 * scale.max(1.0));
        assert!(e.lam1 >= e.lam2);
    }
}

#[test]
fn eigen_special_matrices() {
    let e = eig_sym2(2.0, 0.0, 2.0);
    assert_eq!((e.lam1, e.lam2), (2.0, 2.0));
    assert_eq!(e.e1, [1.0, 0.0]);
    assert_eq!(e.e2, [0.0, 1.0]);
    let e = eig_sym2(0.0, 0.0, 0.0);
    assert_eq!((e.lam1, e.lam2), (0.0, 0.0));
    let e = eig_sym2(-1.0, 0.0, 3.0);
    assert_eq!((e.lam1, e.lam2), (3.0, -1.0));
    assert!((e.e1[0].abs()) < 1e-15 && (e.e1[1] - 1.0).abs() < 1e-15);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn eigenvectors_are_orthonormal_and_reconstruct(a in -1e3f64..1e3, b in -1e3f64..1e3, c in -1e3f64..1e3) {
        let e = eig_sym2(a, b, c);
        let dot = |u: [f64; 2], v: [f64; 2]| u[0] * v[0] + u[1] * v[1];
        let s = a.abs().max(b.abs()).max(c.abs()).max(1.0);
        prop_assert!((dot(e.e1, e.e1) - 1.0).abs() < 1e-12);
        prop_assert!((dot(e.e2, e.e2) - 1.0).abs() < 1e-12);
        prop_assert!(dot(e.e1, e.e2).abs() < 1e-12);
        let r = |i: usize, j: usize| e.lam1 * e.e1[i] * e.e1[j] + e.lam2 * e.e2[i] * e.e2[j];
        prop_assert!((r(0, 0) - a).abs() < 1e-12 * s);
        prop_assert!((r(0, 1) - b).abs() < 1e-12 * s);
        prop_assert!((r(1, 1) - c).abs() < 1e-12 * s);
    }

    #[test]
    fn first_component_sign_is_canonical(a in -5f64..5., b in -5f64..5., c in -5f64..5.) {
        let e = eig_sym2(a, b, c);
        for v in [e.e1, e.e2] {
            prop_assert!(v[0] > 0.0 || (v[0] == 0.0 && v[1] >= 0.0));
        }
    }
}

#[test]
fn trace_identity_on_images() {
    let mut rng = common::rng(13);
    for _ in 0..10 {
        let u = common::random_image(17, &mut rng, -1.0, 1.0);
        let hess = apply_hessian(&u).unwrap();
        let eig = eig2x2(&hess);
        let d1 = directional_dd(&u, &eig, Direction::First).unwrap();
        let d2 = directional_dd(&u, &eig, Direction::Second).unwrap();
        let d12 = directional_dd(&u, &eig, Direction::Cross).unwrap();
        for i in 0..u.grid().len() {
            let trace = hess.dxx.data()[i] + hess.dyy.data()[i];
            assert!((d1.data()[i] + d2.data()[i] - trace).abs() < 1e-10);
            assert!((d1.data()[i] - eig.lam1.data()[i]).abs() < 1e-10);
            assert!(d12.data()[i].abs() < 1e-10);
        }
    }
}

#[test]
fn penalties_match_dense_oracles() {
    let mut rng = common::rng(14);
    let n = 9;
    let [dxx, dyy, dxy] = common::dense_hessian(n);
    let u = common::random_image(n, &mut rng, 0.0, 1.0);
    let v = common::smooth_image(n, &mut rng);
    let (a, b, c) = (dense_apply(&dxx, &u), dense_apply(&dyy, &u), dense_apply(&dxy, &u));
    let e: Vec<f64> = (0..n * n).map(|i| a[i] * a[i] + b[i] * b[i] + 2.0 * c[i] * c[i]).collect();
    let rough = roughness_image(&u).unwrap();
    for i in 0..n * n {
        assert!((rough.data()[i] - e[i]).abs() < 1e-12);
    }
    let quad: f64 = e.iter().sum();
    assert!((reg_lp(&u, 2.0).unwrap() - quad).abs() < 1e-10 * quad);
    let l1: f64 = e.iter().map(|x| x.sqrt()).sum();
    assert!((reg_lp(&u, 1.0).unwrap() - l1).abs() < 1e-10 * l1);

    let w = msda_weights(&v, 0.5, 1e-6).unwrap();
    let want: f64 = (0..n * n).map(|i| w[i] * e[i].powf(0.7)).sum();
    assert!((reg_msda(&u, &v, 0.5, 0.7, 1e-6).unwrap() - want).abs() < 1e-10 * want);

    // Schatten-1: sum of |eigenvalues|
    let s1: f64 = (0..n * n)
        .map(|i| {
            let ev = Matrix2::new(a[i], c[i], c[i], b[i]).symmetric_eigen().eigenvalues;
            ev[0].abs() + ev[1].abs()
        })
        .sum();
    assert!((reg_schatten(&u, 1.0).unwrap() - s1).abs() < 1e-9 * s1);
}

#[test]
fn entropic_penalty_matches_its_definition() {
    let mut rng = common::rng(15);
    let n = 12;
    let u = common::random_image(n, &mut rng, 0.0, 1.0);
    let v = common::smooth_image(n, &mut rng);
    let params = RegParams { q: 0.8, ..RegParams::default() };
    let guide = build_guide(&v, &params).unwrap();
    let hv = apply_hessian(&v).unwrap();
    let hu = apply_hessian(&u).unwrap();
    let mut want = 0.0;
    for i in 0..n * n {
        let sym = Matrix2::new(hv.dxx.data()[i], hv.dxy.data()[i], hv.dxy.data()[i], hv.dyy.data()[i]);
        let es = sym.symmetric_eigen();
        let (k1, k2) = if es.eigenvalues[0] >= es.eigenvalues[1] { (0, 1) } else { (1, 0) };
        let (l1, l2) = (es.eigenvalues[k1], es.eigenvalues[k2]);
        let (e1, e2) = (es.eigenvectors.column(k1), es.eigenvectors.column(k2));
        let hu_i = Matrix2::new(hu.dxx.data()[i], hu.dxy.data()[i], hu.dxy.data()[i], hu.dyy.data()[i]);
        let d1 = (e1.transpose() * hu_i * e1)[0];
        let d2 = (e2.transpose() * hu_i * e2)[0];
        let d12 = (e1.transpose() * hu_i * e2)[0];
        let (a1, a2) = (1e-6 + l1.abs(), 1e-6 + l2.abs());
        want += (d1 - l1).powi(2) / a1.powf(0.8) + (d2 - l2).powi(2) / a2.powf(0.8) + d12 * d12 / (a1.powf(0.4) * a2.powf(0.4));
    }
    let got = reg_merr(&u, &guide).unwrap();
    assert!((got - want).abs() < 1e-8 * want, "{got} vs {want}");
}

#[test]
fn guide_is_a_zero_of_its_penalty() {
    let mut rng = common::rng(16);
    for q in [0.5, 0.9, 1.0] {
        let params = RegParams { q, ..RegParams::default() };
        for _ in 0..5 {
            let v = common::random_image(20, &mut rng, 0.0, 1.0);
            let guide = build_guide(&v, &params).unwrap();
            assert!(reg_merr(&v, &guide).unwrap() < 1e-10);
        }
    }
}

fn fd_check(f: &dyn Fn(&Image) -> f64, grad: &Image, u: &Image, seed: u64) {
    let mut rng = common::rng(seed);
    let h = 1e-5;
    for _ in 0..5 {
        let dir = common::random_image(u.width(), &mut rng, -1.0, 1.0);
        let shift = |s: f64| Image::from_fn(u.grid(), |x, y| u.get(x, y) + s * dir.get(x, y));
        let fd = (f(&shift(h)) - f(&shift(-h))) / (2.0 * h);
        let an: f64 = grad.data().iter().zip(dir.data()).map(|(g, d)| g * d).sum();
        assert!((fd - an).abs() <= 1e-5 * an.abs().max(1e-8), "fd {fd} vs analytic {an}");
    }
}

#[test]
fn entropic_gradient_matches_finite_differences() {
    let mut rng = common::rng(17);
    let params = RegParams { q: 0.9, ..RegParams::default() };
    let v = common::smooth_image(16, &mut rng);
    let guide = build_guide(&v, &params).unwrap();
    let u = common::random_image(16, &mut rng, 0.0, 1.0);
    let g = grad_reg_merr(&u, &guide).unwrap();
    fd_check(&|x| reg_merr(x, &guide).unwrap(), &g, &u, 18);
}

#[test]
fn full_cost_gradient_through_an_upsampler() {
    let mut rng = common::rng(19);
    let params = RegParams { lambda: 0.3, q: 0.9, bound_m: 2.0, ..RegParams::default() };
    let v = common::smooth_image(16, &mut rng);
    let h = common::random_image(16, &mut rng, 0.0, 1.0);
    let c = Image::from_fn(h.grid(), |_, _| if rng.random_bool(0.4) { rng.random_range(0.5..1.0) } else { 0.0 });
    let data = common::measurement(h, c);
    for kind in [RegKind::Quadratic, RegKind::Merr] {
        let spec = SolveSpec::on_data_grid(data.clone(), kind, params)
            .unwrap()
            .with_guide(build_guide(&v, &params).unwrap())
            .with_upsampler(ResampleOp::new(12, 16, InterpFilter::LinearSpline).unwrap());
        let u = common::random_image(12, &mut rng, 0.0, 1.0);
        let g = cost_gradient(&u, &spec).unwrap();
        fd_check(&|x| eval_cost(x, &spec).unwrap().total, &g, &u, 20);
    }
}

#[test]
fn nonsmooth_gradient_is_refused() {
    let mut rng = common::rng(21);
    let h = common::random_image(8, &mut rng, 0.0, 1.0);
    let data = common::measurement(h.clone(), Image::constant(h.grid(), 1.0));
    let spec = SolveSpec::on_data_grid(data, RegKind::Lp, RegParams::default()).unwrap();
    assert!(cost_gradient(&h, &spec).is_err());
}
