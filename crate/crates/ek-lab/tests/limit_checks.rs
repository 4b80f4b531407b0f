//! Sequence-limit behaviour at desk scale: power-law perturbation sums
//! against their analytic limits, two-parameter paths, dependence gaps and
//! the prime zeta oracle.

use ek_lab::family::FamilySpec;
use ek_lab::kahan::KahanSum;
use ek_lab::limits::{log_dependence, lz_limit_study, prime_zeta, prime_zeta_partial};
use ek_lab::pmf::make_pmf;

#[test]
fn power_law_sums_approach_their_limits() {
    // The summed perturbation at p = 2 tends to 1/2^s - 1/2; the finite-n
    // bias scales like n^(1-s), so at n = 1e6 only exponents comfortably
    // above 1 are close.
    let n = 1_000_000u64;
    for (s, tol) in [(2.0, 1e-5), (1.5, 2e-3)] {
        let pmf = make_pmf(&FamilySpec::Zipf { s }, n).unwrap();
        let eps = pmf.epsilon_multiple_sum(2).unwrap();
        let limit = 0.5f64.powf(s) - 0.5;
        assert!(
            (eps - limit).abs() <= tol,
            "s={s}: {eps} vs {limit} (tol {tol})"
        );
    }

    // Regression anchor for the slow regime: at s = 1.1 the bias at n = 1e6
    // is still about 1e-2 (it decays like n^(-0.1)).
    let pmf = make_pmf(&FamilySpec::Zipf { s: 1.1 }, n).unwrap();
    let eps = pmf.epsilon_multiple_sum(2).unwrap();
    let limit = 0.5f64.powf(1.1) - 0.5;
    let bias = (eps - limit).abs();
    assert!(
        (bias - 1.0418e-2).abs() < 2e-4,
        "s=1.1 finite-size bias moved: {bias}"
    );
}

#[test]
fn two_parameter_path_shrinks_toward_zero() {
    let path = [(0.9, 1.1), (0.99, 1.01), (0.999, 1.001)];
    let study = lz_limit_study(&path, 100_000, 2).unwrap();
    assert!(study.eps_strictly_decreasing);
    let expected = [-0.15495201, -0.07632537, -0.05029801];
    for (point, expect) in study.points.iter().zip(expected) {
        assert!(
            (point.eps_sum_p - expect).abs() < 1e-6,
            "{} vs {expect}",
            point.eps_sum_p
        );
        assert!(point.within_bound_chain);
        assert!(point.ks > 0.0 && point.ks < 1.0);
    }
}

#[test]
fn two_parameter_corners_match_closed_forms() {
    let n = 1_000_000u64;
    // alpha = 1 reduces to the logarithmic law whose multiple-sum limit has
    // a closed form; at s = 0.99 the series has fully converged by n = 1e6.
    let pmf = make_pmf(
        &FamilySpec::LogZeta {
            s: 0.99,
            alpha: 1.0,
        },
        n,
    )
    .unwrap();
    let eps = pmf.epsilon_multiple_sum(2).unwrap();
    let closed = 0.5 * (1.0 - 0.99f64 * 0.99).ln() / (1.0f64 - 0.99).ln() - 0.5;
    assert!((eps - closed).abs() < 1e-10, "{eps} vs {closed}");

    // s = 1 reduces to the power law with exponent alpha.
    let pmf = make_pmf(&FamilySpec::LogZeta { s: 1.0, alpha: 2.0 }, n).unwrap();
    let eps = pmf.epsilon_multiple_sum(2).unwrap();
    assert!((eps - (-0.25)).abs() < 2e-3, "{eps} vs -0.25");
}

#[test]
fn dependence_gap_shrinks_toward_independence() {
    let schedule = [0.9, 0.99, 0.999];
    let gaps: Vec<f64> = schedule
        .iter()
        .map(|&s| log_dependence(s, 2, 3).unwrap().gap.abs())
        .collect();
    assert!(gaps[0] > gaps[1] && gaps[1] > gaps[2], "{gaps:?}");

    // Each closed form matches direct series summation, including the
    // slowest point of the schedule.
    for &s in &schedule {
        let d = log_dependence(s, 2, 3).unwrap();
        let series = |divisor: u64| -> f64 {
            let mut acc = KahanSum::new();
            let norm = -1.0 / (-s).ln_1p();
            let mut l = 1u64;
            loop {
                let term = norm * (s.ln() * (divisor * l) as f64).exp() / (divisor * l) as f64;
                if term < 1e-18 {
                    break;
                }
                acc.add(term);
                l += 1;
            }
            acc.value()
        };
        assert!((d.marginal_p - series(2)).abs() < 1e-10);
        assert!((d.marginal_q - series(3)).abs() < 1e-10);
        assert!((d.joint - series(6)).abs() < 1e-10);
    }
}

#[test]
fn prime_zeta_certificate_survives_doubling() {
    let pz = prime_zeta(2.0, 1e-8).unwrap();
    let at_cutoff = prime_zeta_partial(2.0, pz.cutoff);
    let doubled = prime_zeta_partial(2.0, pz.cutoff * 2);
    assert_eq!(pz.value, at_cutoff);
    assert!((doubled - at_cutoff).abs() < pz.tail_bound);
    assert!((doubled - 0.4522474200).abs() < 1e-8);
}
