//! Property tests for the model invariants: semigroup structure of the
//! transition matrices, characteristic-function symmetries, quantile
//! monotonicity, and metric identities.

use proptest::prelude::*;

use pisim_core::metrics::{kappa, omega, TerminalSample};
use pisim_core::regime::{transition_matrix, RegimeModel};
use pisim_core::retdist::CharFn;

/// Random irreducible generator with matching regime parameters.
fn arb_model(h: usize) -> impl Strategy<Value = RegimeModel> {
    let rates = prop::collection::vec(0.05f64..3.0, h * (h - 1));
    let mus = prop::collection::vec(-0.5f64..0.5, h);
    let sigmas = prop::collection::vec(0.05f64..0.6, h);
    (rates, mus, sigmas).prop_map(move |(rates, mus, sigmas)| {
        let mut q = vec![0.0; h * h];
        let mut it = rates.into_iter();
        for i in 0..h {
            let mut row_sum = 0.0;
            for j in 0..h {
                if i != j {
                    let r = it.next().unwrap();
                    q[i * h + j] = r;
                    row_sum += r;
                }
            }
            q[i * h + i] = -row_sum;
        }
        RegimeModel::new(q, mus, sigmas, None).expect("valid random model")
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn chapman_kolmogorov(model in arb_model(2), a in 0.01f64..2.0, b in 0.01f64..2.0) {
        let pa = transition_matrix(&model, a).unwrap();
        let pb = transition_matrix(&model, b).unwrap();
        let pab = transition_matrix(&model, a + b).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let composed: f64 = (0..2).map(|k| pa.get(i, k) * pb.get(k, j)).sum();
                prop_assert!((pab.get(i, j) - composed).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn transition_rows_stochastic(model in arb_model(3), dt in 1e-6f64..5.0) {
        let p = transition_matrix(&model, dt).unwrap();
        for i in 0..3 {
            let sum: f64 = p.row(i).iter().sum();
            prop_assert!((sum - 1.0).abs() < 1e-10);
            prop_assert!(p.row(i).iter().all(|&x| (0.0..=1.0).contains(&x)));
        }
    }

    #[test]
    fn char_fn_normalization_and_symmetry(
        model in arb_model(2),
        t in 0.01f64..2.0,
        theta in 0.0f64..80.0,
    ) {
        let cf = CharFn::new(&model, t).unwrap();
        let at_zero = cf.eval(0.0).unwrap();
        prop_assert!((at_zero.re - 1.0).abs() < 1e-12);
        prop_assert!(at_zero.im.abs() < 1e-12);

        let plus = cf.eval(theta).unwrap();
        let minus = cf.eval(-theta).unwrap();
        prop_assert!((plus - minus.conj()).norm() < 1e-12);
        prop_assert!(plus.norm() <= 1.0 + 1e-9);
    }

    #[test]
    fn quantiles_monotone(model in arb_model(2), t in 0.05f64..1.5) {
        let dist = CharFn::new(&model, t)
            .unwrap()
            .build_distribution(1 << 10, 14.0)
            .unwrap();
        let mut prev = f64::NEG_INFINITY;
        for i in 1..20 {
            let q = dist.quantile(i as f64 / 20.0).unwrap();
            prop_assert!(q >= prev);
            prev = q;
        }
    }

    #[test]
    fn omega_kappa_identity_and_translation(
        values in prop::collection::vec(50.0f64..150.0, 4..40),
        offset in -20.0f64..20.0,
        threshold in 80.0f64..120.0,
    ) {
        let s = TerminalSample::new(values.clone(), 100.0, 100.0, 0.04, 1.0).unwrap();
        let om = omega(&s, threshold);
        let k1 = kappa(&s, 1, threshold);
        if om.is_finite() && k1.is_finite() {
            prop_assert!((k1 - (om - 1.0)).abs() < 1e-9 * (1.0 + om.abs()));
        }

        // Translating values and threshold together leaves omega fixed.
        let shifted: Vec<f64> = values.iter().map(|v| v + offset).collect();
        let s2 = TerminalSample::new(shifted, 100.0, 100.0, 0.04, 1.0).unwrap();
        let om2 = omega(&s2, threshold + offset);
        if om.is_finite() && om2.is_finite() {
            prop_assert!((om - om2).abs() < 1e-9 * (1.0 + om.abs()));
        } else {
            prop_assert_eq!(om.is_infinite(), om2.is_infinite());
        }
    }
}
