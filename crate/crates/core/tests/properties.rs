#![allow(clippy::needless_range_loop)]

use std::f64::consts::PI;

use approx::assert_abs_diff_eq;
use diqkd_core::eve::{
    char_poly_coefficients, eve_conditional_state_q, EveConditionalState, MeasurementAngle,
};
use diqkd_core::hermitian::{hermitian4_eigh, Matrix4};
use diqkd_core::{
    binary_entropy, chsh_score, error_correction_term, eve_info_bound, h_q,
    joint_outcome_distribution, key_rate, BellDiagonalWeights, ChshScore, ChshSettings,
    DetectionModel, EcVariant, MeasurementSetting, NoiseChoice, NoiseParam, ParameterPoint,
    Probability, ProtocolSpec, ProtocolVariant, SourceKind, SourcePoint, SqueezedSourceParams,
    TSIRELSON,
};
use num_complex::Complex64;
use proptest::prelude::*;

fn h(p: f64) -> f64 {
    if p <= 0.0 || p >= 1.0 {
        return 0.0;
    }
    -p * p.log2() - (1.0 - p) * (1.0 - p).log2()
}

fn weights() -> impl Strategy<Value = BellDiagonalWeights> {
    prop::array::uniform4(0.001f64..1.0).prop_map(|w| {
        let total: f64 = w.iter().sum();
        let [a, b, c, d] = w.map(|x| x / total);
        BellDiagonalWeights::new([a.max(b), a.min(b), c.max(d), c.min(d)]).unwrap()
    })
}

fn source() -> impl Strategy<Value = SqueezedSourceParams> {
    (0.0f64..0.85, 0.0f64..0.85, 1u32..=4)
        .prop_map(|(t, tb, n)| SqueezedSourceParams::from_tanh(t, tb, n).unwrap())
}

fn setting() -> impl Strategy<Value = MeasurementSetting> {
    (0.0f64..PI, -PI..PI).prop_map(|(angle, phase)| MeasurementSetting { angle, phase })
}

// Determinant of a real square matrix by partial-pivot elimination.
fn det(mut m: Vec<Vec<f64>>) -> f64 {
    let n = m.len();
    let mut d = 1.0;
    for k in 0..n {
        let piv = (k..n)
            .max_by(|&a, &b| m[a][k].abs().total_cmp(&m[b][k].abs()))
            .unwrap();
        if m[piv][k] == 0.0 {
            return 0.0;
        }
        if piv != k {
            m.swap(piv, k);
            d = -d;
        }
        d *= m[k][k];
        for i in k + 1..n {
            let f = m[i][k] / m[k][k];
            for j in k..n {
                m[i][j] -= f * m[k][j];
            }
        }
    }
    d
}

// Sum of the principal minors of order `k`.
fn principal_minor_sum(m: &[[f64; 4]; 4], k: usize) -> f64 {
    (0u32..16)
        .filter(|mask| mask.count_ones() as usize == k)
        .map(|mask| {
            let idx: Vec<usize> = (0..4).filter(|i| mask & (1 << i) != 0).collect();
            det(idx
                .iter()
                .map(|&i| idx.iter().map(|&j| m[i][j]).collect())
                .collect())
        })
        .sum()
}

fn real_part(s: &EveConditionalState) -> [[f64; 4]; 4] {
    let mut out = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            assert_eq!(s.0[i][j].im, 0.0);
            out[i][j] = s.0[i][j].re;
        }
    }
    out
}

fn sorted(mut v: [f64; 4]) -> [f64; 4] {
    v.sort_by(f64::total_cmp);
    v
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn h_q_is_symmetric(z in 0.0f64..=1.0, q in 0.001f64..=1.0) {
        let a = h_q(Probability::new(z).unwrap(), q).unwrap();
        let b = h_q(Probability::new(1.0 - z).unwrap(), q).unwrap();
        prop_assert!((a - b).abs() <= 1e-12);
    }

    #[test]
    fn h_q_is_concave(z1 in 0.0f64..=1.0, z2 in 0.0f64..=1.0, t in 0.0f64..=1.0, q in 0.001f64..=1.0) {
        let f = |z: f64| h_q(Probability::new(z).unwrap(), q).unwrap();
        let mid = f(t * z1 + (1.0 - t) * z2);
        prop_assert!(mid >= t * f(z1) + (1.0 - t) * f(z2) - 1e-10);
    }

    #[test]
    fn char_poly_matches_principal_minors(l in weights(), q in 0.01f64..=1.0, c in -1.0f64..=1.0) {
        let st = eve_conditional_state_q(&l, q, MeasurementAngle::from_c(c).unwrap(), true);
        let m = real_part(&st);
        let [a0, a1, a2] = char_poly_coefficients(&l, q, c);
        prop_assert!((principal_minor_sum(&m, 1) - 1.0).abs() <= 1e-10);
        prop_assert!((principal_minor_sum(&m, 2) - a2).abs() <= 1e-10);
        prop_assert!((principal_minor_sum(&m, 3) + a1).abs() <= 1e-10);
        prop_assert!((principal_minor_sum(&m, 4) - a0).abs() <= 1e-10);
    }

    #[test]
    fn both_outcomes_share_a_spectrum(l in weights(), q in 0.01f64..=1.0, phi in 0.0f64..PI) {
        let plus = eve_conditional_state_q(&l, q, MeasurementAngle(phi), true).eigenvalues().unwrap();
        let minus = eve_conditional_state_q(&l, q, MeasurementAngle(phi), false).eigenvalues().unwrap();
        for (a, b) in sorted(plus).iter().zip(sorted(minus)) {
            prop_assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn angle_enters_through_cos_two_phi(l in weights(), q in 0.01f64..=1.0, phi in 0.0f64..PI) {
        let a = eve_conditional_state_q(&l, q, MeasurementAngle(phi), true).entropy().unwrap();
        let b = eve_conditional_state_q(&l, q, MeasurementAngle(PI - phi), true).entropy().unwrap();
        prop_assert!((a - b).abs() <= 1e-12);
    }

    #[test]
    fn eigendecomposition_reconstructs(entries in prop::collection::vec(-1.0f64..1.0, 16)) {
        let mut m: Matrix4 = [[Complex64::new(0.0, 0.0); 4]; 4];
        for i in 0..4 {
            m[i][i] = Complex64::new(entries[4 * i + i], 0.0);
            for j in i + 1..4 {
                let z = Complex64::new(entries[4 * i + j], entries[4 * j + i]);
                m[i][j] = z;
                m[j][i] = z.conj();
            }
        }
        let e = hermitian4_eigh(&m);
        let mut worst = 0.0f64;
        for i in 0..4 {
            for j in 0..4 {
                let mut r = Complex64::new(0.0, 0.0);
                for k in 0..4 {
                    r += e.vectors[i][k] * e.values[k] * e.vectors[j][k].conj();
                }
                worst = worst.max((r - m[i][j]).norm());
            }
        }
        prop_assert!(worst < 1e-10, "reconstruction error {}", worst);
    }

    #[test]
    fn density_spectrum_sums_to_one(l in weights(), q in 0.01f64..=1.0, c in -1.0f64..=1.0) {
        let st = eve_conditional_state_q(&l, q, MeasurementAngle::from_c(c).unwrap(), true);
        let sum: f64 = st.eigenvalues().unwrap().iter().sum();
        prop_assert!((sum - 1.0).abs() < 1e-10);
    }

    #[test]
    fn no_signalling(src in source(), eta in 0.3f64..=1.0, a in setting(), b1 in setting(), b2 in setting()) {
        let det = DetectionModel::uniform(eta).unwrap();
        let alice = |b| joint_outcome_distribution(&src, &det, a, b).unwrap().alice_marginal();
        let (m1, m2) = (alice(b1), alice(b2));
        for (x, y) in m1.iter().zip(&m2) {
            prop_assert!((x - y).abs() <= 1e-10);
        }
        let bob = |a| joint_outcome_distribution(&src, &det, a, b1).unwrap().bob_marginal();
        let (n1, n2) = (bob(a), bob(b2));
        for (x, y) in n1.iter().zip(&n2) {
            prop_assert!((x - y).abs() <= 1e-10);
        }
    }

    #[test]
    fn four_valued_key_never_costs_more(src in source(), eta in 0.3f64..=1.0, a0 in setting(), b1 in setting()) {
        let det = DetectionModel::uniform(eta).unwrap();
        let d = joint_outcome_distribution(&src, &det, a0, b1).unwrap();
        let four = d.error_correction_term(NoiseParam::ZERO, EcVariant::FourValued);
        let binary = d.error_correction_term(NoiseParam::ZERO, EcVariant::Binary);
        prop_assert!(four <= binary + 1e-12);
        prop_assert!((binary - h(d.qber(NoiseParam::ZERO))).abs() <= 1e-12);
    }
}

#[test]
fn bound_is_monotone_on_a_grid() {
    let n = 50;
    let s_at = |i: usize| 2.0 + (TSIRELSON - 2.0) * i as f64 / (n - 1) as f64;
    let p_at = |j: usize| 0.5 * j as f64 / n as f64;
    let bound = |i, j| {
        eve_info_bound(
            ChshScore::new(s_at(i)).unwrap(),
            NoiseParam::new(p_at(j)).unwrap(),
        )
        .unwrap()
    };
    for i in 0..n {
        for j in 0..n {
            let v = bound(i, j);
            if i + 1 < n {
                assert!(bound(i + 1, j) <= v + 1e-12, "S step at {i},{j}");
            }
            if j + 1 < n {
                assert!(bound(i, j + 1) <= v + 1e-12, "p step at {i},{j}");
            }
        }
    }
}

#[test]
fn one_minus_bound_is_convex_in_s() {
    let n = 201;
    for p in [0.0, 0.05, 0.15, 0.3, 0.45] {
        let f: Vec<f64> = (0..n)
            .map(|i| {
                let s = 2.0 + (TSIRELSON - 2.0) * i as f64 / (n - 1) as f64;
                1.0 - eve_info_bound(ChshScore::new(s).unwrap(), NoiseParam::new(p).unwrap())
                    .unwrap()
            })
            .collect();
        for w in f.windows(3) {
            assert!(w[0] - 2.0 * w[1] + w[2] >= -1e-12, "p = {p}");
        }
    }
}

#[test]
fn random_sources_respect_tsirelson() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
    let mut angle = || MeasurementSetting::planar(rng.random_range(0.0..PI));
    let settings: Vec<ChshSettings> = (0..1000)
        .map(|_| ChshSettings {
            a1: angle(),
            a2: angle(),
            b1: angle(),
            b2: angle(),
        })
        .collect();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(8);
    for s in &settings {
        let src = SqueezedSourceParams::from_tanh(
            rng.random_range(0.0..0.9),
            rng.random_range(0.0..0.9),
            rng.random_range(1..=8),
        )
        .unwrap();
        let det = DetectionModel::uniform(rng.random_range(0.0..=1.0)).unwrap();
        let v = chsh_score(&src, &det, s).unwrap().value();
        assert!(v.abs() <= TSIRELSON + 1e-9, "S = {v}");
    }
}

#[test]
fn error_correction_limits() {
    let src = SqueezedSourceParams::from_tanh(0.5, 0.3, 2).unwrap();
    let (a, b) = (
        MeasurementSetting::planar(0.4),
        MeasurementSetting::planar(1.2),
    );
    for variant in [EcVariant::FourValued, EcVariant::Binary] {
        for p in [0.0, 0.1, 0.3] {
            let np = NoiseParam::new(p).unwrap();
            let blind = error_correction_term(
                &src,
                &DetectionModel::uniform(0.0).unwrap(),
                a,
                b,
                np,
                variant,
            )
            .unwrap();
            assert_abs_diff_eq!(blind, h(p), epsilon = 1e-12);
        }
        let half = error_correction_term(
            &src,
            &DetectionModel::uniform(0.9).unwrap(),
            a,
            b,
            NoiseParam::new(0.5).unwrap(),
            variant,
        )
        .unwrap();
        assert_abs_diff_eq!(half, 1.0, epsilon = 1e-12);
    }
}

#[test]
fn rate_formula_example() {
    // S = 2.5 without noise and a 5% error rate
    let eve = eve_info_bound(ChshScore::new(2.5).unwrap(), NoiseParam::ZERO).unwrap();
    let ec = binary_entropy(Probability::new(0.05).unwrap());
    let r = 1.0 - eve - ec;
    assert_abs_diff_eq!(eve, h(0.875), epsilon = 1e-12);
    assert_abs_diff_eq!(r, 0.1700, epsilon = 5e-5);
}

#[test]
fn noisy_at_zero_noise_equals_four_valued_protocol() {
    let mut pt = ParameterPoint::ideal_qubit();
    pt.source = SourcePoint::Spdc(SqueezedSourceParams::from_tanh(0.4, 0.25, 3).unwrap());
    for eta in [0.8, 0.9, 1.0] {
        let noisy = ProtocolSpec::new(ProtocolVariant::NoisyPreprocessing, SourceKind::Spdc)
            .with_noise(NoiseChoice::Fixed(NoiseParam::ZERO));
        let ma = ProtocolSpec::new(ProtocolVariant::Ma12, SourceKind::Spdc);
        let pir = ProtocolSpec::new(ProtocolVariant::Pironio09, SourceKind::Spdc);
        let (rn, rm, rp) = (
            key_rate(&noisy, &pt, eta).unwrap(),
            key_rate(&ma, &pt, eta).unwrap(),
            key_rate(&pir, &pt, eta).unwrap(),
        );
        assert_eq!(rn.rate, rm.rate);
        assert!(rm.rate >= rp.rate - 1e-12);
    }
}
