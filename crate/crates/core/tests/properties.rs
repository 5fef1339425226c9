use num_complex::Complex64;
use proptest::prelude::*;

use pdiae::pd::{pd_encode, EncoderParams};
use pdiae::scattering::{born_adjoint, born_forward, Medium, Measurement, ScatterGeometry};
use pdiae::spectral::{fft_forward, fft_inverse, pad, resample, truncate, Interp};
use pdiae::tensor::ParamStore;
use pdiae::training::{avg_relative_error, MinMax};
use pdiae::{ComplexGrid, Initializer, Spectrum};

fn complex_vec(n: usize) -> impl Strategy<Value = Vec<Complex64>> {
    prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), n).prop_map(|v| v.into_iter().map(|(a, b)| Complex64::new(a, b)).collect())
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x * y.conj()).sum()
}

fn max_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// Samples a trigonometric polynomial with centered coefficients `c` on `s` points.
fn trig_poly(c: &[Complex64], s: usize) -> ComplexGrid {
    let half = (c.len() / 2) as i64;
    ComplexGrid::from_fn(vec![s], |x| {
        c.iter()
            .enumerate()
            .map(|(j, &cj)| cj * Complex64::from_polar(1.0, std::f64::consts::TAU * (j as i64 - half) as f64 * x[0]))
            .sum()
    })
    .unwrap()
}

fn grid_sizes() -> impl Strategy<Value = usize> {
    prop_oneof![Just(8usize), Just(12), Just(16), Just(31), Just(64), Just(100), Just(256)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn fft_roundtrip_1d((s, v) in grid_sizes().prop_flat_map(|s| (Just(s), complex_vec(s)))) {
        let g = ComplexGrid::new(vec![s], v).unwrap();
        let back = fft_inverse(&fft_forward(&g), &[s]).unwrap();
        prop_assert!(max_diff(g.values(), back.values()) < 1e-10);
    }

    #[test]
    fn fft_roundtrip_2d_and_parseval(
        (a, b, v) in (prop_oneof![Just(8usize), Just(17), Just(64)], prop_oneof![Just(8usize), Just(30), Just(64)])
            .prop_flat_map(|(a, b)| (Just(a), Just(b), complex_vec(a * b)))
    ) {
        let g = ComplexGrid::new(vec![a, b], v).unwrap();
        let sp = fft_forward(&g);
        let back = fft_inverse(&sp, &[a, b]).unwrap();
        prop_assert!(max_diff(g.values(), back.values()) < 1e-10);
        let lhs: f64 = sp.coeffs().iter().map(|c| c.norm_sqr()).sum();
        let rhs: f64 = g.values().iter().map(|c| c.norm_sqr()).sum::<f64>() / (a * b) as f64;
        prop_assert!((lhs - rhs).abs() < 1e-10 * rhs.max(1.0));
    }

    #[test]
    fn pad_truncate_adjoint(u in complex_vec(6), v in complex_vec(16)) {
        let u = Spectrum::new(vec![6], u).unwrap();
        let v = Spectrum::new(vec![16], v).unwrap();
        let lhs = dot(pad(&u, &[16]).unwrap().coeffs(), v.coeffs());
        let rhs = dot(u.coeffs(), truncate(&v, &[6]).unwrap().coeffs());
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn band_limited_spectra_agree_across_grids(c in complex_vec(7), s1 in 12usize..40, s2 in 40usize..90) {
        // Degree 3 < m/2 with m = 8.
        let a = truncate(&fft_forward(&trig_poly(&c, s1)), &[8]).unwrap();
        let b = truncate(&fft_forward(&trig_poly(&c, s2)), &[8]).unwrap();
        prop_assert!(max_diff(a.coeffs(), b.coeffs()) < 1e-11);
    }

    #[test]
    fn spectral_resample_up_down(c in complex_vec(9), s in 16usize..48) {
        let g = trig_poly(&c, s);
        let up = resample(&g, &[3 * s], Interp::Spectral).unwrap();
        let down = resample(&up, &[s], Interp::Spectral).unwrap();
        prop_assert!(max_diff(g.values(), down.values()) < 1e-11);
    }

    #[test]
    fn pd_encode_linear_and_invariant(
        c1 in complex_vec(11),
        c2 in complex_vec(11),
        alpha in -2.0..2.0f64,
        beta in -2.0..2.0f64,
        seed in 0u64..1000,
    ) {
        let mut store = ParamStore::new();
        let enc = EncoderParams::new(&mut store, &mut Initializer::new(seed), "enc", &[12], 3);
        let (a, b) = (trig_poly(&c1, 32), trig_poly(&c2, 32));
        let mix = ComplexGrid::new(
            vec![32],
            a.values().iter().zip(b.values()).map(|(x, y)| alpha * x + beta * y).collect(),
        )
        .unwrap();
        let (ea, eb, em) = (
            pd_encode(&a, &enc, &store).unwrap(),
            pd_encode(&b, &enc, &store).unwrap(),
            pd_encode(&mix, &enc, &store).unwrap(),
        );
        let want: Vec<Complex64> = ea.values().iter().zip(eb.values()).map(|(x, y)| alpha * x + beta * y).collect();
        prop_assert!(max_diff(em.values(), &want) < 1e-12);
        for s in [64, 128] {
            let e = pd_encode(&trig_poly(&c1, s), &enc, &store).unwrap();
            prop_assert!(max_diff(e.values(), ea.values()) < 1e-9);
        }
    }

    #[test]
    fn normalize_roundtrip(v in complex_vec(40)) {
        let g = ComplexGrid::new(vec![40], v).unwrap();
        let s = MinMax::of_grids([&g]).unwrap();
        let back = s.denormalize_grid(&s.normalize_grid(&g));
        prop_assert!(max_diff(g.values(), back.values()) < 1e-14);
    }

    #[test]
    fn relative_error_scale_invariant(t in complex_vec(16), p in complex_vec(16), gamma in prop_oneof![-50.0..-0.01f64, 0.01..50.0f64]) {
        let re = |v: &[Complex64], k: f64| ComplexGrid::new(vec![16], v.iter().map(|z| Complex64::new(k * z.re, 0.0)).collect()).unwrap();
        let err = |k: f64| {
            let pred = re(&p, k);
            avg_relative_error(|_, _| Ok(vec![pred.clone()]), &[(re(&t, k), re(&t, k))], &[vec![16]]).unwrap().mean
        };
        prop_assert!((err(1.0) - err(gamma)).abs() < 1e-14);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn born_linear_and_adjoint(
        e1 in prop::collection::vec(-1.0..1.0f64, 64),
        e2 in prop::collection::vec(-1.0..1.0f64, 64),
        lam in complex_vec(64),
        alpha in -2.0..2.0f64,
        beta in -2.0..2.0f64,
    ) {
        let geom = ScatterGeometry::new(8, 8, 2.0 * std::f64::consts::PI).unwrap();
        let med = |v: Vec<f64>| Medium { n_y: 8, values: v };
        let f1 = born_forward(&med(e1.clone()), &geom).unwrap();
        let f2 = born_forward(&med(e2.clone()), &geom).unwrap();
        let mix = born_forward(&med(e1.iter().zip(&e2).map(|(a, b)| alpha * a + beta * b).collect()), &geom).unwrap();
        let want: Vec<Complex64> = f1.values.iter().zip(&f2.values).map(|(a, b)| alpha * a + beta * b).collect();
        let scale = want.iter().map(|z| z.norm()).fold(1.0, f64::max);
        prop_assert!(max_diff(&mix.values, &want) < 1e-12 * scale);

        let lam = Measurement { n_dir: 8, values: lam };
        let adj = born_adjoint(&lam, &geom).unwrap();
        // Inner products with the quadrature weights the adjoint is defined under.
        let lhs = dot(&f1.values, &lam.values) * geom.angle_step().powi(2);
        let rhs: Complex64 = e1.iter().zip(&adj).map(|(e, a)| e * a.conj()).sum::<Complex64>() * geom.cell_area();
        let bound = 1e-8 * (f1.values.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt())
            * lam.values.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        prop_assert!((lhs - rhs).norm() <= bound.max(1e-300));
    }
}

mod tape {
    use super::*;
    use pdiae::tensor::{grad_check_graph, GradCheck, RealArray, Tape};

    fn store(a: Vec<f64>, b: Vec<f64>) -> ParamStore {
        let mut s = ParamStore::new();
        s.add("a", RealArray::new(vec![2, 3, 2], a).unwrap(), true);
        s.add("b", RealArray::new(vec![3, 2], b).unwrap(), true);
        s
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn composite_graph_gradients(
            a in prop::collection::vec(-1.0..1.0f64, 12),
            b in prop::collection::vec(-1.0..1.0f64, 6),
        ) {
            let s = store(a, b);
            let report = grad_check_graph(&s, &GradCheck::default(), |t, st| {
                let ids: Vec<_> = st.ids().collect();
                let (a, b) = (t.param(st, ids[0]), t.param(st, ids[1]));
                let prod = t.cmul_suffix(a, b)?;
                let th = t.tanh(prod)?;
                let sp = t.spec_forward(th, &[3])?;
                let back = t.spec_inverse(sp, &[3])?;
                let mixed = t.mul(back, a)?;
                let sq = t.mul(mixed, mixed)?;
                t.sum(sq)
            })
            .unwrap();
            prop_assert!(report.max_rel_err < 1e-4, "{}", report.max_rel_err);
        }

        #[test]
        fn replay_is_bit_identical(a in prop::collection::vec(-1.0..1.0f64, 12), b in prop::collection::vec(-1.0..1.0f64, 6)) {
            let s = store(a, b);
            let mut t = Tape::new();
            let ids: Vec<_> = s.ids().collect();
            let (x, y) = (t.param(&s, ids[0]), t.param(&s, ids[1]));
            let p = t.cmul_suffix(x, y).unwrap();
            let q = t.relu(p).unwrap();
            let _ = t.sum(q).unwrap();
            let first = t.replay(&s).unwrap();
            let second = t.replay(&s).unwrap();
            let bits = |v: &[RealArray]| v.iter().flat_map(|r| r.data().iter().map(|x| x.to_bits()).collect::<Vec<_>>()).collect::<Vec<_>>();
            prop_assert_eq!(bits(&first), bits(&second));
        }
    }
}
