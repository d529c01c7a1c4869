use framelet::conv::{circular_convolve, conv_circular};
use framelet::hankel::{circulant, lift, lift_extended, unlift, unlift_extended, HankelView};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn signal(max_n: usize) -> impl Strategy<Value = DVector<f64>> {
    prop::collection::vec(-10.0f64..10.0, 1..=max_n).prop_map(DVector::from_vec)
}

fn signal_and_d(max_n: usize) -> impl Strategy<Value = (DVector<f64>, usize)> {
    signal(max_n).prop_flat_map(|f| {
        let n = f.len();
        (Just(f), 1..=n)
    })
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}

fn max_rel(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let scale = a.amax().max(b.amax()).max(1.0);
    (a - b).amax() / scale
}

fn unit(n: usize, k: usize) -> DVector<f64> {
    DVector::from_fn(n, |i, _| if i == k { 1.0 } else { 0.0 })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn unlift_inverts_lift((f, d) in signal_and_d(24)) {
        let back = unlift(&lift(&f, d).unwrap());
        prop_assert!((back - &f).amax() <= 1e-12 * f.amax().max(1.0));
    }

    #[test]
    fn lifted_units_are_orthonormal(n in 1usize..16, seed in any::<u64>()) {
        let d = (seed as usize % n) + 1;
        let e: Vec<DMatrix<f64>> = (0..n).map(|k| lift(&unit(n, k), d).unwrap() / (d as f64).sqrt()).collect();
        for k in 0..n {
            for l in 0..n {
                let ip = e[k].dot(&e[l]);
                let expected = if k == l { 1.0 } else { 0.0 };
                prop_assert!((ip - expected).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn unlift_reads_unit_inner_products((f, d) in signal_and_d(12), seed in any::<u64>()) {
        let n = f.len();
        let b = DMatrix::from_fn(n, d, |i, j| ((seed.wrapping_add((i * 31 + j * 7) as u64) % 1000) as f64 - 500.0) / 50.0);
        let out = unlift(&b);
        for k in 0..n {
            let ek = lift(&unit(n, k), d).unwrap() / (d as f64).sqrt();
            prop_assert!(rel(out[k], ek.dot(&b) / (d as f64).sqrt()) <= 1e-12);
        }
    }

    #[test]
    fn bilinear_form_on_lift((f, d) in signal_and_d(20), seed in any::<u64>()) {
        let n = f.len();
        let u = DVector::from_fn(n, |i, _| ((seed >> (i % 48)) & 0xff) as f64 / 64.0 - 2.0);
        let v = DVector::from_fn(d, |j, _| ((seed >> ((j * 5) % 48)) & 0x3f) as f64 / 16.0 - 2.0);
        let lhs = (u.transpose() * lift(&f, d).unwrap() * &v)[0];
        let mut rhs = 0.0;
        for i in 0..n {
            for j in 0..d {
                rhs += u[i] * f[(i + j) % n] * v[j];
            }
        }
        prop_assert!(rel(lhs, rhs) <= 1e-12);
    }

    #[test]
    fn lifted_inner_product_is_convolution((f, d) in signal_and_d(20), seed in any::<u64>()) {
        // ⟨H_d(f), u vᵀ⟩ = ⟨f, u ⊛ v⟩ with ⊛ the circular convolution
        let n = f.len();
        let u = DVector::from_fn(n, |i, _| (((seed.rotate_left(i as u32 * 3)) & 0xff) as f64) / 32.0 - 4.0);
        let v = DVector::from_fn(d, |j, _| (((seed.rotate_right(j as u32 * 7)) & 0xff) as f64) / 32.0 - 4.0);
        let lhs = lift(&f, d).unwrap().dot(&(&u * v.transpose()));
        let mut uv = DVector::zeros(n);
        for k in 0..n {
            for j in 0..d {
                uv[k] += u[(k + n - j) % n] * v[j];
            }
        }
        prop_assert!(rel(lhs, f.dot(&uv)) <= 1e-12);
        let conv = circular_convolve(&u, &v).unwrap();
        prop_assert!((conv - &uv).amax() <= 1e-12 * uv.amax().max(1.0));
    }

    #[test]
    fn unlift_of_outer_product((f, d) in signal_and_d(16)) {
        // unlift(x yᵀ) = (1/d)(x ⊛ y)
        let n = f.len();
        let y = DVector::from_fn(d, |j, _| 1.0 + j as f64 * 0.25);
        let lhs = unlift(&(&f * y.transpose()));
        let mut expected = DVector::zeros(n);
        for k in 0..n {
            for j in 0..d {
                expected[k] += f[(k + n - j) % n] * y[j] / d as f64;
            }
        }
        prop_assert!((lhs - expected).amax() <= 1e-12 * f.amax().max(1.0));
    }

    #[test]
    fn lift_factors_through_circulant((f, d) in signal_and_d(16), taps in prop::collection::vec(-3.0f64..3.0, 1..6)) {
        let n = f.len();
        prop_assume!(taps.len() <= n);
        let h = DVector::from_vec(taps);
        let y = conv_circular(&f, &h).unwrap();
        let lhs = lift(&y, d).unwrap();
        let rhs = lift(&f, n).unwrap() * circulant(&h, d, n).unwrap();
        prop_assert!(max_rel(&lhs, &rhs) <= 1e-12);
        let mut oracle = DVector::zeros(n);
        for k in 0..n {
            for (j, hj) in h.iter().enumerate() {
                oracle[k] += f[(k + j) % n] * hj;
            }
        }
        prop_assert!((y - oracle).amax() <= 1e-12 * f.amax().max(1.0) * 3.0 * 6.0);
    }

    #[test]
    fn lift_and_unlift_are_linear((f, d) in signal_and_d(16), a in -3.0f64..3.0, b in -3.0f64..3.0) {
        let n = f.len();
        let g = DVector::from_fn(n, |i, _| (i as f64 * 0.7).sin());
        let lhs = lift(&(&f * a + &g * b), d).unwrap();
        let rhs = lift(&f, d).unwrap() * a + lift(&g, d).unwrap() * b;
        prop_assert!(max_rel(&lhs, &rhs) <= 1e-12);
        let x = DMatrix::from_fn(n, d, |i, j| (i * d + j) as f64 * 0.1);
        let y = DMatrix::from_fn(n, d, |i, j| ((i + 2 * j) % 5) as f64);
        let lin = unlift(&(&x * a + &y * b));
        let parts = unlift(&x) * a + unlift(&y) * b;
        prop_assert!((lin - parts).amax() <= 1e-12 * 10.0);
    }

    #[test]
    fn lift_then_unlift_is_an_orthogonal_projection((f, d) in signal_and_d(12), seed in any::<u64>()) {
        let n = f.len();
        let b = DMatrix::from_fn(n, d, |i, j| (((seed >> ((i + j) % 40)) & 0xfff) as f64) / 512.0 - 4.0);
        let proj = lift(&unlift(&b), d).unwrap();
        // idempotent, and the residual is orthogonal to every lifted signal
        prop_assert!(max_rel(&lift(&unlift(&proj), d).unwrap(), &proj) <= 1e-12);
        let resid = &b - &proj;
        prop_assert!(resid.dot(&lift(&f, d).unwrap()).abs() <= 1e-10 * (b.norm() * f.norm()).max(1.0));
    }

    #[test]
    fn extended_lift_round_trip(n in 2usize..16, p in 1usize..4, seed in any::<u64>()) {
        let d = (seed as usize % n) + 1;
        let z = DMatrix::from_fn(n, p, |i, j| (((seed >> ((i * p + j) % 50)) & 0xff) as f64) - 128.0);
        let h = lift_extended(&z, d).unwrap();
        for ch in 0..p {
            let block = h.columns(ch * d, d).into_owned();
            prop_assert_eq!(block, lift(&z.column(ch).into_owned(), d).unwrap());
        }
        prop_assert!(max_rel(&unlift_extended(&h, p).unwrap(), &z) <= 1e-12);
    }

    #[test]
    fn implicit_view_products((f, d) in signal_and_d(20)) {
        let n = f.len();
        let view = HankelView::new(f.as_slice(), d).unwrap();
        let dense = lift(&f, d).unwrap();
        let v: Vec<f64> = (0..d).map(|j| j as f64 - 1.5).collect();
        let u: Vec<f64> = (0..n).map(|i| (i % 3) as f64).collect();
        let mv = view.mul_vec(&v).unwrap() - &dense * DVector::from_vec(v);
        let tv = view.tr_mul_vec(&u).unwrap() - dense.transpose() * DVector::from_vec(u);
        prop_assert!(mv.amax() <= 1e-12 * f.amax().max(1.0) * d as f64);
        prop_assert!(tv.amax() <= 1e-12 * f.amax().max(1.0) * n as f64);
    }
}
