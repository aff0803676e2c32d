use proptest::prelude::*;
use qkdnet::keyrate::{decoy_estimate, key_rate, simulate_observables, transmittance, QkdSystemParams};

fn channel() -> impl Strategy<Value = (QkdSystemParams, f64)> {
    (
        0.0f64..140.0,
        0.18f64..0.25,
        0.03f64..0.2,
        0.002f64..0.05,
        1e-7f64..1e-5,
        0.3f64..0.7,
        0.05f64..0.2,
        any::<bool>(),
    )
        .prop_map(|(len, alpha, eta_bob, e_det, y0, mu, nu, finite_key)| {
            let p = QkdSystemParams {
                alpha,
                eta_bob,
                e_det,
                y0,
                mu,
                nu,
                finite_key,
                ..QkdSystemParams::reference()
            };
            (p, len)
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    // Single-photon yield of the channel model is y0 + eta; its errors are
    // background errors plus misalignment on the transmitted photon.
    #[test]
    fn decoy_bounds_contain_the_true_single_photon_values((p, len) in channel()) {
        let eta = transmittance(len, &p);
        let y1 = p.y0 + eta;
        let q1 = y1 * p.mu * (-p.mu).exp();
        let e1 = (p.e0 * p.y0 + p.e_det * eta) / y1;
        let obs = simulate_observables(len, &p);
        if let Ok(est) = decoy_estimate(&obs, &p) {
            prop_assert!(est.q1_lower <= q1 * (1.0 + 1e-9), "Q1^L {} > Q1 {}", est.q1_lower, q1);
            prop_assert!(est.e1_upper >= e1 * (1.0 - 1e-9), "e1^U {} < e1 {}", est.e1_upper, e1);
        }
    }

    #[test]
    fn finite_key_never_beats_asymptotic((p, len) in channel()) {
        let finite = key_rate(len, &p.clone().with_finite_key(true));
        let asym = key_rate(len, &p.with_finite_key(false));
        prop_assert!(finite <= asym * (1.0 + 1e-12));
        prop_assert!(finite >= 0.0);
    }
}

#[test]
fn reference_rate_stays_zero_past_its_cutoff() {
    for finite in [true, false] {
        let p = QkdSystemParams::reference().with_finite_key(finite);
        let rates: Vec<f64> = (0..=1500).map(|i| key_rate(i as f64 / 10.0, &p)).collect();
        let cutoff = rates.iter().position(|&r| r == 0.0).expect("rate reaches zero by 150 km");
        assert!(rates[..cutoff].iter().all(|&r| r > 0.0));
        assert!(rates[cutoff..].iter().all(|&r| r == 0.0));
        assert!(rates.windows(2).all(|w| w[1] <= w[0]));
    }
}
