//! Sequence-indexed studies: prime zeta means, zeta-parameter schedules,
//! logarithmic dependence gaps, two-parameter limit paths, and the
//! zeroed-primes negative control.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::constraints::{check_c4, check_c5, check_c6, C6Trend, DEFAULT_TREND_TOL, PASS_SLACK};
use crate::error::{Error, Result};
use crate::family::FamilySpec;
use crate::kahan::KahanSum;
use crate::moments::{mean_ratio, standardized_cdf};
use crate::pmf::make_pmf;
use crate::primes::{build_omega_table, for_each_prime, is_prime_u64, sieve_primes};

/// Largest prime cutoff the direct summation will stream through.
pub const PRIME_ZETA_CUTOFF_CAP: u64 = 1 << 27;

/// Result of a prime zeta evaluation: the partial sum over primes up to
/// `cutoff` together with the analytic bound on the discarded tail.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct PrimeZeta {
    pub value: f64,
    pub cutoff: u64,
    pub tail_bound: f64,
}

/// Upper bound on `sum_{p > cutoff} p^(-s)` via the integral
/// `int_cutoff^inf t^(-s)/ln t dt <= cutoff^(1-s) / ((s-1) ln cutoff)`.
pub fn prime_zeta_tail_bound(s: f64, cutoff: u64) -> f64 {
    let n = cutoff as f64;
    n.powf(1.0 - s) / ((s - 1.0) * n.ln())
}

/// Direct compensated partial sum `sum_{p <= cutoff} p^(-s)`; the building
/// block of the two-cutoff self-consistency oracle.
pub fn prime_zeta_partial(s: f64, cutoff: u64) -> f64 {
    let mut acc = KahanSum::new();
    for_each_prime(cutoff, |p| acc.add((-s * (p as f64).ln()).exp()));
    acc.value()
}

fn prime_zeta_required_cutoff(s: f64, abs_tol: f64) -> Option<u64> {
    let mut cutoff = 64u64;
    loop {
        if prime_zeta_tail_bound(s, cutoff) < abs_tol {
            return Some(cutoff);
        }
        if cutoff >= PRIME_ZETA_CUTOFF_CAP {
            return None;
        }
        cutoff = (cutoff * 2).min(PRIME_ZETA_CUTOFF_CAP);
    }
}

/// `sum_p p^(-s)` over all primes, certified to `abs_tol` absolute error.
///
/// Direct summation up to a cutoff chosen so the analytic tail bound drops
/// below `abs_tol`. Near `s = 1` the tail decays like `cutoff^(1-s)` and no
/// feasible cutoff certifies tight tolerances; that case reports the best
/// achievable bound instead of silently returning an uncertified value.
pub fn prime_zeta(s: f64, abs_tol: f64) -> Result<PrimeZeta> {
    if !(s.is_finite() && s > 1.0) {
        return Err(Error::Domain(format!(
            "prime zeta diverges for s <= 1, got s={s}"
        )));
    }
    if !(abs_tol.is_finite() && abs_tol >= 1e-12) {
        return Err(Error::Domain(format!(
            "abs_tol must be >= 1e-12, got {abs_tol}"
        )));
    }
    let cutoff = prime_zeta_required_cutoff(s, abs_tol).ok_or(Error::ToleranceUnachievable {
        s,
        abs_tol,
        cutoff_cap: PRIME_ZETA_CUTOFF_CAP,
        achievable: prime_zeta_tail_bound(s, PRIME_ZETA_CUTOFF_CAP),
    })?;
    Ok(PrimeZeta {
        value: prime_zeta_partial(s, cutoff),
        cutoff,
        tail_bound: prime_zeta_tail_bound(s, cutoff),
    })
}

/// One row of a [`SequenceStudy`].
#[derive(Debug, Clone, Serialize)]
pub struct SequenceRow {
    pub j: u64,
    pub a: f64,
    pub s: f64,
    pub alpha: f64,
    /// Mean factor count of the untruncated law, with its certified error.
    pub mu: f64,
    pub mu_abs_err: f64,
    /// Truncation point `min(max(floor(e^(e^mu)), 2), n_cap)`.
    pub n_j: u64,
    pub capped: bool,
    pub minimal_c: f64,
    pub minimal_d: f64,
    pub pass_c: bool,
    pub pass_d: bool,
    pub eps_sum_p: f64,
    pub ks: f64,
    pub mean_ratio: f64,
}

/// Study of a parameter schedule driving a family of laws on the naturals
/// toward the uniform regime.
#[derive(Debug, Clone, Serialize)]
pub struct SequenceStudy {
    pub p: u64,
    pub n_cap: u64,
    pub mu_strictly_increasing: bool,
    pub rows: Vec<SequenceRow>,
}

/// For each `a_j` in the (increasing) schedule, take the power-law
/// distribution with exponent `s_j = 1 + 1/a_j`, compute its mean factor
/// count `mu_j = sum_p p^(-s_j)` with a certified error bound, derive the
/// truncation point `n_j = min(max(floor(e^(e^mu_j)), 2), n_cap)`, and run
/// the constraint checks plus a standardized CDF study at `(s_j, n_j)`.
///
/// `mu_j` is requested at 1e-8 absolute error; where the direct summation
/// cannot certify that (exponents near 1), the best bound achievable at the
/// summation cap is used and recorded per row.
pub fn zeta_sequence_study(
    a_schedule: &[f64],
    n_cap: u64,
    p: u64,
    max_k: u32,
) -> Result<SequenceStudy> {
    if a_schedule.is_empty() {
        return Err(Error::Schedule("a schedule must be nonempty".into()));
    }
    for w in a_schedule.windows(2) {
        if w[0] >= w[1] {
            return Err(Error::Schedule(
                "a schedule must be strictly increasing".into(),
            ));
        }
    }
    if a_schedule[0] <= 0.0 {
        return Err(Error::Schedule("a values must be positive".into()));
    }
    if n_cap < 1000 {
        return Err(Error::Domain(format!("n_cap must be >= 1000, got {n_cap}")));
    }
    if !is_prime_u64(p) {
        return Err(Error::NotPrime(p));
    }

    // One streaming pass accumulates every exponent's partial sum.
    let params: Vec<(f64, u64)> = a_schedule
        .iter()
        .map(|&a| {
            let s = 1.0 + 1.0 / a;
            let cutoff = prime_zeta_required_cutoff(s, 1e-8).unwrap_or(PRIME_ZETA_CUTOFF_CAP);
            (s, cutoff)
        })
        .collect();
    let max_cutoff = params.iter().map(|&(_, c)| c).max().unwrap();
    let mut sums = vec![KahanSum::new(); params.len()];
    for_each_prime(max_cutoff, |prime| {
        let ln_p = (prime as f64).ln();
        for (idx, &(s, cutoff)) in params.iter().enumerate() {
            if prime <= cutoff {
                sums[idx].add((-s * ln_p).exp());
            }
        }
    });

    let mut rows = Vec::with_capacity(params.len());
    let mut tables: BTreeMap<u64, _> = BTreeMap::new();
    for (idx, &(s, cutoff)) in params.iter().enumerate() {
        let mu = sums[idx].value();
        let mu_abs_err = prime_zeta_tail_bound(s, cutoff);

        let inner = mu.exp();
        let (n_j, capped) = if inner > 700.0 {
            (n_cap, true)
        } else {
            let raw = inner.exp();
            if raw >= n_cap as f64 {
                (n_cap, true)
            } else {
                ((raw.floor() as u64).max(2), false)
            }
        };
        if n_j < p.max(3) {
            return Err(Error::Schedule(format!(
                "a_{} = {} gives n_j = {n_j} < max(p, 3); too small to host the checks",
                idx + 1,
                a_schedule[idx]
            )));
        }

        let spec = FamilySpec::Zipf { s };
        let pmf = make_pmf(&spec, n_j)?;
        let (primes, omega) = tables
            .entry(n_j)
            .or_insert_with(|| (sieve_primes(n_j), build_omega_table(n_j, None)));
        let primes = primes.as_ref().map_err(clone_err)?;
        let omega = omega.as_ref().map_err(clone_err)?;

        let c4 = check_c4(&pmf, 1.0, primes)?;
        let c5 = check_c5(&pmf, 1.0, max_k, primes)?;
        let eps_sum_p = pmf.epsilon_multiple_sum(p)?;
        let study = standardized_cdf(&pmf, omega)?;
        let ratio = mean_ratio(&pmf, omega)?;

        rows.push(SequenceRow {
            j: (idx + 1) as u64,
            a: a_schedule[idx],
            s,
            alpha: 1.0,
            mu,
            mu_abs_err,
            n_j,
            capped,
            minimal_c: c4.minimal_c,
            minimal_d: c5.minimal_d,
            pass_c: c4.all_pass(),
            pass_d: c5.all_pass(),
            eps_sum_p,
            ks: study.ks,
            mean_ratio: ratio,
        });
    }

    let mu_strictly_increasing = rows.windows(2).all(|w| w[0].mu < w[1].mu);
    Ok(SequenceStudy {
        p,
        n_cap,
        mu_strictly_increasing,
        rows,
    })
}

fn clone_err(e: &Error) -> Error {
    Error::Domain(e.to_string())
}

/// Divisibility dependence of a logarithmic-series law: the probability of
/// the joint event "divisible by p and q" against the product of the
/// marginals.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct DependenceGap {
    pub s: f64,
    pub p: u64,
    pub q: u64,
    pub marginal_p: f64,
    pub marginal_q: f64,
    pub joint: f64,
    pub gap: f64,
}

/// Closed forms `P(A_d) = ln(1 - s^d) / (d ln(1 - s))` for the logarithmic
/// law with parameter `s in (0, 1)`; the gap `joint - marginal*marginal`
/// vanishes only as `s` approaches 1.
pub fn log_dependence(s: f64, p: u64, q: u64) -> Result<DependenceGap> {
    if !(s.is_finite() && s > 0.0 && s < 1.0) {
        return Err(Error::Domain(format!(
            "logarithmic parameter must satisfy 0 < s < 1, got {s}"
        )));
    }
    if !is_prime_u64(p) {
        return Err(Error::NotPrime(p));
    }
    if !is_prime_u64(q) {
        return Err(Error::NotPrime(q));
    }
    if p == q {
        return Err(Error::Domain(format!("p and q must be distinct, got {p}")));
    }
    let marginal = |d: u64| -> f64 {
        let s_d = (d as f64 * s.ln()).exp();
        (-s_d).ln_1p() / (d as f64 * (-s).ln_1p())
    };
    let marginal_p = marginal(p);
    let marginal_q = marginal(q);
    // Applied to d = pq this is exactly 1/(pq) * ln(1 - s^(pq)) / ln(1 - s).
    let joint = marginal(p * q);
    let gap = joint - marginal_p * marginal_q;
    Ok(DependenceGap {
        s,
        p,
        q,
        marginal_p,
        marginal_q,
        joint,
        gap,
    })
}

/// One `(s, alpha)` point of a [`lz_limit_study`].
#[derive(Debug, Clone, Copy, Serialize)]
pub struct LzPoint {
    pub s: f64,
    pub alpha: f64,
    pub eps_sum_p: f64,
    /// The per-point bound `1/p^alpha` of the chain
    /// `eps_sum <= 1/p^alpha <= 1/p`.
    pub alpha_bound: f64,
    pub within_bound_chain: bool,
    pub ks: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct LzStudy {
    pub n: u64,
    pub p: u64,
    pub points: Vec<LzPoint>,
    /// True when |eps_sum| strictly decreases along the path.
    pub eps_strictly_decreasing: bool,
}

/// Walk a path of `(s, alpha)` parameters for the two-parameter power-series
/// family at a fixed truncation point, recording the summed perturbation at
/// `p`, the bound chain, and the standardized KS distance.
pub fn lz_limit_study(path: &[(f64, f64)], n: u64, p: u64) -> Result<LzStudy> {
    if path.is_empty() {
        return Err(Error::Schedule("parameter path must be nonempty".into()));
    }
    if n < 1000 {
        return Err(Error::Domain(format!("study needs n >= 1000, got {n}")));
    }
    if !is_prime_u64(p) {
        return Err(Error::NotPrime(p));
    }
    let omega = build_omega_table(n, None)?;
    let mut points = Vec::with_capacity(path.len());
    for &(s, alpha) in path {
        let spec = FamilySpec::LogZeta { s, alpha };
        let pmf = make_pmf(&spec, n)?;
        let eps_sum_p = pmf.epsilon_multiple_sum(p)?;
        let alpha_bound = (p as f64).powf(-alpha);
        let study = standardized_cdf(&pmf, &omega)?;
        points.push(LzPoint {
            s,
            alpha,
            eps_sum_p,
            alpha_bound,
            within_bound_chain: eps_sum_p <= alpha_bound + PASS_SLACK
                && alpha_bound <= 1.0 / p as f64 + PASS_SLACK,
            ks: study.ks,
        });
    }
    let eps_strictly_decreasing = points
        .windows(2)
        .all(|w| w[0].eps_sum_p.abs() > w[1].eps_sum_p.abs());
    Ok(LzStudy {
        n,
        p,
        points,
        eps_strictly_decreasing,
    })
}

/// The negative control: zero the multiples of `p` and watch the summed
/// perturbation at `p` settle at `-1/p` instead of vanishing.
pub fn nonexample_control(schedule: &[u64], p: u64) -> Result<C6Trend> {
    check_c6(
        &FamilySpec::ZeroedAtPrimes(vec![p]),
        p,
        schedule,
        DEFAULT_TREND_TOL,
    )
}
