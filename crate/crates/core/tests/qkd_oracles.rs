use approx::assert_relative_eq;
use proptest::prelude::*;

use ipa_sim::qkd::*;
use ipa_sim::Execution;

/// Photon number after Eve's beam splitter, by explicit sum over the
/// photons she received.
fn thinned_poisson_brute(n: u64, mean: f64, p: f64) -> f64 {
    let mut pk = (-mean).exp();
    let mut total = 0.0;
    for k in 0..400u64 {
        if k > 0 {
            pk *= mean / k as f64;
        }
        if k < n {
            continue;
        }
        let mut c = 1.0;
        for j in 0..n {
            c *= (k - j) as f64 / (j + 1) as f64;
        }
        total += pk * c * p.powi(n as i32) * (1.0 - p).powi((k - n) as i32);
    }
    total
}

#[test]
fn pns_distribution_matches_thinning() {
    let mut worst = 0.0f64;
    for i in 1..=50 {
        let mu_e = 0.1 * i as f64;
        for j in 1..=20 {
            let p = 0.05 * j as f64;
            for n in 0..=10 {
                let brute = thinned_poisson_brute(n, mu_e, p);
                let fast = pns_photon_distribution(n, mu_e, p, 1.0);
                worst = worst.max(((fast - brute) / brute).abs());
            }
        }
    }
    assert!(worst < 1e-9, "worst relative error {worst}");
}

#[test]
fn pns_distribution_without_resend() {
    assert_eq!(pns_photon_distribution(0, 3.0, 0.0, 0.6), 1.0);
    assert_eq!(pns_photon_distribution(2, 3.0, 0.0, 0.6), 0.0);
}

fn scenarios() -> Vec<(QkdScenario, f64)> {
    let base = QkdScenario::default();
    vec![
        (
            QkdScenario {
                distance_km: 0.0,
                ..base.clone()
            },
            3.0,
        ),
        (
            QkdScenario {
                distance_km: 10.0,
                ..base.clone()
            },
            6.0,
        ),
        (
            QkdScenario {
                distance_km: 25.0,
                mu: 0.5,
                ..base.clone()
            },
            8.0,
        ),
        (
            QkdScenario {
                distance_km: 5.0,
                eta_b: 0.4,
                ..base.clone()
            },
            2.0,
        ),
        (
            QkdScenario {
                distance_km: 40.0,
                mu: 0.8,
                nu: 0.2,
                ..base
            },
            10.0,
        ),
    ]
}

#[test]
fn success_probability_sum_matches_closed_form() {
    for (s, m) in scenarios() {
        let a = AttackParams::undetectable(&s, m).unwrap();
        let t = attack_success_probability(&s, &a);
        let c = attack_success_probability_closed(&s, &a);
        assert!(
            (t.value - c).abs() <= 1e-12 + t.tail_bound,
            "{} vs {c}",
            t.value
        );
        assert!(t.tail_bound < 1e-12);
    }
}

#[test]
fn success_probability_matches_monte_carlo() {
    for (k, (s, m)) in scenarios().into_iter().enumerate() {
        let a = AttackParams::undetectable(&s, m).unwrap();
        let exact = attack_success_probability_closed(&s, &a);
        let (est, se) =
            attack_success_monte_carlo(&s, &a, 1_000_000, 11 + k as u64, Execution::default())
                .unwrap();
        assert!(
            (est - exact).abs() <= 3.0 * se,
            "scenario {k}: {est} +- {se} vs {exact}"
        );
    }
}

#[test]
fn monte_carlo_independent_of_execution() {
    let (s, m) = scenarios().remove(1);
    let a = AttackParams::undetectable(&s, m).unwrap();
    let seq = attack_success_monte_carlo(&s, &a, 200_000, 5, Execution::Sequential).unwrap();
    let par = attack_success_monte_carlo(&s, &a, 200_000, 5, Execution::Parallel).unwrap();
    assert_eq!(seq, par);
}

#[test]
fn decoy_bounds_are_sound_and_tight() {
    for d in [0.0, 20.0, 50.0, 80.0] {
        let s = QkdScenario {
            distance_km: d,
            ..QkdScenario::default()
        };
        let eta = s.eta();
        let q_mu = gain(s.mu, eta, s.y0);
        let e_mu = qber(s.mu, eta, s.y0, s.e0, s.e_det);
        let q_nu = gain(s.nu, eta, s.y0);
        let e_nu = qber(s.nu, eta, s.y0, s.e0, s.e_det);
        let b = decoy_bounds(&s, q_mu, e_mu, q_nu, e_nu);
        let o = oracle_single_photon(&s, eta);
        assert!(
            b.y1 <= o.y1 * (1.0 + 1e-12),
            "{d} km: y1 {} > {}",
            b.y1,
            o.y1
        );
        assert!(b.e1 >= o.e1 * (1.0 - 1e-12));
        assert!(b.y1 > 0.85 * o.y1, "{d} km: bound too loose");
    }
}

#[test]
fn binary_entropy_shape() {
    assert_eq!(binary_entropy(0.0), 0.0);
    assert_eq!(binary_entropy(1.0), 0.0);
    assert_relative_eq!(binary_entropy(0.5), 1.0);
    assert_relative_eq!(
        binary_entropy(0.11),
        binary_entropy(0.89),
        max_relative = 1e-12
    );
}

#[test]
fn actual_rate_never_exceeds_estimate() {
    let grid = distance_grid(150.0, 5.0).unwrap();
    let m: Vec<f64> = (0..=24).map(|k| 0.5 * k as f64).collect();
    for r in sweep_key_rates(&QkdScenario::default(), &m, &grid, Execution::default()).unwrap() {
        assert!(r.r_actual <= r.r_est);
        if r.m_db == 0.0 {
            assert_eq!(r.r_actual, r.r_est);
        }
    }
}

#[test]
fn actual_rate_falls_with_magnification() {
    let s = QkdScenario {
        distance_km: 20.0,
        ..QkdScenario::default()
    };
    let rates: Vec<f64> = (0..=20)
        .map(|k| evaluate(&s, 0.5 * k as f64).unwrap().r_actual_raw)
        .collect();
    assert!(rates.windows(2).all(|w| w[1] <= w[0] + 1e-18));
}

#[test]
fn threshold_rejects_bad_range() {
    let grid = distance_grid(50.0, 5.0).unwrap();
    let s = QkdScenario::default();
    assert!(matches!(
        zero_key_threshold(&s, (0.0, 3.0), &grid, 1e-3, Execution::default()),
        Err(ipa_sim::Error::NonBracketing { .. })
    ));
    assert!(matches!(
        zero_key_threshold(&s, (5.0, 2.0), &grid, 1e-3, Execution::default()),
        Err(ipa_sim::Error::NonBracketing { .. })
    ));
}

#[test]
fn threshold_is_where_key_vanishes() {
    let grid = distance_grid(150.0, 1.0).unwrap();
    let s = QkdScenario::default();
    let th = zero_key_threshold(&s, (0.0, 15.0), &grid, 1e-3, Execution::default()).unwrap();
    assert!(best_actual_rate(&s, th.m_db, &grid, Execution::default()).unwrap() <= 0.0);
    assert!(best_actual_rate(&s, th.m_db - 2e-3, &grid, Execution::default()).unwrap() > 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn resend_probability_hides_the_attack(
        mu in 0.05f64..1.5,
        nu_frac in 0.05f64..0.95,
        distance in 0.0f64..200.0,
        alpha in 0.15f64..0.4,
        eta_b in 0.01f64..1.0,
        y0 in 0.0f64..1e-4,
        m_db in 0.0f64..20.0,
    ) {
        let s = QkdScenario { mu, nu: mu * nu_frac, distance_km: distance, alpha_fiber: alpha, eta_b, y0, ..QkdScenario::default() };
        let a = AttackParams::undetectable(&s, m_db).unwrap();
        for mpn in [s.mu, s.nu] {
            let honest = gain(mpn, s.eta(), s.y0);
            let attacked = attacked_gain(mpn, a.m_linear, a.p_resend, s.eta_b, s.y0);
            prop_assert!((honest - attacked).abs() < 1e-12);
        }
    }

    #[test]
    fn tail_bound_dominates_dropped_mass(mean in 0.0f64..30.0, extra in 0u64..40) {
        let n = truncation_for(mean, 20) + extra;
        let dropped: f64 = (n + 1..n + 400).map(|k| poisson_pmf(k, mean)).sum();
        prop_assert!(dropped <= poisson_tail_bound(n, mean) * (1.0 + 1e-12));
    }
}
