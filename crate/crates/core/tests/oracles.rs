//! Taylor coefficients from the recursions against closed forms and against
//! exact generating-function coefficients of the process.

use gwi_core::series_alg::tail_coefficients;
use gwi_core::*;
use proptest::prelude::*;

fn reference_models() -> Vec<Model> {
    [(0.3, 0.5), (0.4, 0.5), (0.5, 0.7)]
        .iter()
        .map(|&(p1, q0)| Model::quadratic(p1, q0).unwrap())
        .collect()
}

#[test]
fn closed_forms_for_p1_03() {
    let m = Model::quadratic(0.3, 0.5).unwrap();
    let tc = tail_coefficients(&m, 8);
    assert_eq!(tc.g.coeff(1), 1.0);
    assert!((tc.g.coeff(2) + 10.0 / 3.0).abs() < 1e-12);
    assert_eq!(tc.h.coeff(0), 1.0);
    assert!((tc.h.coeff(1) - 10.0 / 7.0).abs() < 1e-12);
    assert_eq!(tc.a.coeff(0), 1.0);
    assert!((tc.a.coeff(1) + 100.0 / 21.0).abs() < 1e-12);
}

#[test]
fn first_coefficients_match_closed_forms() {
    for m in reference_models() {
        let tc = tail_coefficients(&m, 4);
        let (p1, p2, q0, q1) = (m.p1, m.p.coeff(2), m.q0, m.q.coeff(1));
        let g2 = -p2 / (p1 * (1.0 - p1));
        let h1 = q1 / (q0 * (1.0 - p1));
        assert!((tc.g.coeff(2) - g2).abs() < 1e-12);
        assert!((tc.h.coeff(1) - h1).abs() < 1e-12);
        assert!((tc.a.coeff(1) - (g2 - h1)).abs() < 1e-12);
    }
}

#[test]
fn schroder_coefficients_from_rare_events() {
    // p₁^{−t} [zⁿ] P_t(z) = [zⁿ](Φ + g₂ p₁ᵗ Φ² + O(p₁²ᵗ)), Φ by reverting Φ⁻¹
    for m in reference_models() {
        let g = phi_inv_coeffs(&m, 8);
        let phi = g.reversion().unwrap();
        let phi2 = phi.mul(&phi);
        let no_imm = validate_model(m.p.coeffs(), &[1.0]).unwrap();
        for t in [30, 60] {
            let p_t = no_imm.imm_pgf_coeffs(t, 8);
            let scale = m.p1.powi(-(t as i32));
            for n in 1..=8 {
                let bias = g.coeff(2) * m.p1.powi(t as i32) * phi2.coeff(n);
                assert!(
                    (scale * p_t[n] - bias - phi.coeff(n)).abs() < 1e-8,
                    "t = {t}, n = {n}"
                );
            }
        }
        // with the bias left in, deep iteration alone reaches the tolerance
        let p_60 = no_imm.imm_pgf_coeffs(60, 8);
        for n in 1..=8 {
            assert!(
                (m.p1.powi(-60) * p_60[n] - phi.coeff(n)).abs() < 1e-8,
                "n = {n}"
            );
        }
    }
}

#[test]
fn immigration_ratios_match_the_series_product() {
    // (p₁q₀)^{−t} P(X_t = n) → [zⁿ] Φ(z)Ψ(z), with Ψ = (Ψ∘Φ⁻¹)∘Φ
    for m in reference_models() {
        let tc = tail_coefficients(&m, 6);
        let phi = tc.g.reversion().unwrap();
        let phipsi = phi.mul(&tc.h.compose(&phi).unwrap());
        let ratios = rare_event_ratios(&m, 30, 6);
        for n in 0..=6 {
            assert!((ratios[n] - phipsi.coeff(n)).abs() < 1e-6, "n = {n}");
        }
    }
}

#[test]
fn rare_event_ratios_converge() {
    let m = Model::quadratic(0.3, 0.5).unwrap();
    let a = rare_event_ratios(&m, 25, 12);
    let b = rare_event_ratios(&m, 30, 12);
    for n in 0..=12 {
        assert!((a[n] - b[n]).abs() < 1e-6, "n = {n}: {} vs {}", a[n], b[n]);
    }
}

#[test]
fn a_coefficients_grow_at_most_geometrically() {
    for m in reference_models() {
        let a = a_coeffs(&m, 30);
        let rate = (1..=30)
            .map(|n| a.coeff(n).abs().ln() / n as f64)
            .fold(f64::NEG_INFINITY, f64::max);
        assert!(rate.is_finite() && rate < 5.0, "rate {rate}");
    }
}

#[test]
fn no_immigration_leaves_a_equal_to_g_over_z() {
    let m = validate_model(&[0.0, 0.3, 0.7], &[1.0]).unwrap();
    let tc = tail_coefficients(&m, 10);
    for n in 1..=10 {
        assert_eq!(tc.h.coeff(n), 0.0);
        assert!((tc.a.coeff(n - 1) - tc.g.coeff(n)).abs() <= 1e-12 * tc.g.coeff(n).abs().max(1.0));
    }
}

fn model_strategy() -> impl Strategy<Value = Model> {
    (0.05f64..0.95, 0.0f64..1.0, 0.05f64..1.0, 0.0f64..1.0).prop_map(|(p1, split, q0, q_split)| {
        let rest = 1.0 - p1;
        let q_rest = 1.0 - q0;
        validate_model(
            &[0.0, p1, rest * split, rest * (1.0 - split)],
            &[q0, q_rest * q_split, q_rest * (1.0 - q_split)],
        )
        .unwrap()
    })
}

fn abs(s: &TruncatedSeries) -> TruncatedSeries {
    TruncatedSeries::new(s.coeffs().iter().map(|c| c.abs()).collect(), s.order())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn a_times_z_h_reproduces_g(m in model_strategy()) {
        let n = 12;
        let tc = tail_coefficients(&m, n);
        let z = TruncatedSeries::identity(n);
        let lhs = tc.a.mul(&z.mul(&tc.h));
        // cancellation scale: the same product on absolute values
        let scale = abs(&tc.a).mul(&z.mul(&abs(&tc.h)));
        for k in 0..=n {
            prop_assert!((lhs.coeff(k) - tc.g.coeff(k)).abs() <= 1e-12 * (1.0 + scale.coeff(k)));
        }
    }

    #[test]
    fn phi_inverse_conjugates_p(m in model_strategy()) {
        // G(p₁z) = P(G(z)) coefficientwise
        let n = 10;
        let g = phi_inv_coeffs(&m, n);
        let scaled: Vec<f64> = g.coeffs().iter().enumerate().map(|(k, c)| c * m.p1.powi(k as i32)).collect();
        let p = TruncatedSeries::new(m.p.coeffs().to_vec(), n);
        let composed = p.compose(&g).unwrap();
        let scale = TruncatedSeries::new(m.p.coeffs().to_vec(), n).compose(&abs(&g)).unwrap();
        for k in 0..=n {
            prop_assert!((composed.coeff(k) - scaled[k]).abs() <= 1e-12 * (1.0 + scale.coeff(k)));
        }
    }

    #[test]
    fn reversion_round_trips(m in model_strategy()) {
        let n = 10;
        let g = phi_inv_coeffs(&m, n);
        let phi = g.reversion().unwrap();
        let id = g.compose(&phi).unwrap();
        let scale = abs(&g).compose(&abs(&phi)).unwrap();
        for k in 0..=n {
            let want = if k == 1 { 1.0 } else { 0.0 };
            prop_assert!((id.coeff(k) - want).abs() <= 1e-12 * (1.0 + scale.coeff(k)));
        }
    }
}
