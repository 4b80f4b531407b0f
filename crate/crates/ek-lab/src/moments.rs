//! Moments of the independent-indicator model, weighted moments of the
//! truncated factor-count statistic, and standardized CDF studies against
//! the normal law.
//!
//! The model is a sum `S` of independent indicators, one per prime
//! `p <= cutoff`, each equal to 1 with probability `1/p`. Its moments are
//! computed by dynamic programming over the primes. The matching empirical
//! quantity is `E[g^r]` where `g(m)` counts distinct prime factors of `m`
//! up to the cutoff and the expectation runs over a truncated distribution.
//! The gap between the two moment sets is the quantity that must shrink as
//! the truncation point grows.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::family::FamilySpec;
use crate::kahan::KahanSum;
use crate::normal::normal_cdf;
use crate::pmf::{make_pmf, TruncatedPmf};
use crate::primes::{alpha_n, build_omega_table, prime_reciprocal_sums, sieve_primes, OmegaTable};

/// Largest supported moment order; the DP is quadratic in this.
pub const R_MAX_BUDGET: usize = 16;

/// Exact binomial coefficients up to `C(r_max, k)` in floating point
/// (all values are far below 2^53).
fn binomial_table(r_max: usize) -> Vec<Vec<f64>> {
    let mut table = vec![vec![0.0; r_max + 1]; r_max + 1];
    for r in 0..=r_max {
        table[r][0] = 1.0;
        for k in 1..=r {
            table[r][k] = table[r - 1][k - 1] + if k < r { table[r - 1][k] } else { 0.0 };
        }
    }
    table
}

/// Raw moments `E[S^r]` for `r = 1..=r_max` of the sum of independent
/// indicators with means `1/p` over the given primes.
///
/// Uses `E[(S+X)^r] = E[S^r] + (1/p) * sum_{k<r} C(r,k) E[S^k]`, which is
/// exact because the indicator's powers all equal the indicator itself.
pub fn bernoulli_model_moments(primes: &[u64], r_max: usize) -> Result<Vec<f64>> {
    if r_max == 0 || r_max > R_MAX_BUDGET {
        return Err(Error::Domain(format!(
            "moment order must lie in 1..={R_MAX_BUDGET}, got {r_max}"
        )));
    }
    let binom = binomial_table(r_max);
    let mut moments: Vec<KahanSum> = vec![KahanSum::new(); r_max + 1];
    moments[0].add(1.0);
    for &p in primes {
        let inv_p = 1.0 / p as f64;
        let mut next = moments.clone();
        for r in (1..=r_max).rev() {
            let mut acc = 0.0;
            for k in 0..r {
                acc += binom[r][k] * moments[k].value();
            }
            next[r].add(inv_p * acc);
        }
        moments = next;
    }
    Ok(moments[1..].iter().map(|m| m.value()).collect())
}

/// Weighted moments `E[g^r]` for `r = 1..=r_max`, where `g(m)` is the table
/// count and the expectation is over the given distribution.
pub fn weighted_g_moments(pmf: &TruncatedPmf, g: &OmegaTable, r_max: usize) -> Result<Vec<f64>> {
    if r_max == 0 || r_max > R_MAX_BUDGET {
        return Err(Error::Domain(format!(
            "moment order must lie in 1..={R_MAX_BUDGET}, got {r_max}"
        )));
    }
    if g.limit() != pmf.n() {
        return Err(Error::Mismatch(format!(
            "count table limit {} must equal the distribution's n = {}",
            g.limit(),
            pmf.n()
        )));
    }
    let mut acc: Vec<KahanSum> = vec![KahanSum::new(); r_max];
    for m in 1..=pmf.n() {
        let w = pmf.pmf_unchecked(m);
        let gv = f64::from(g.count(m));
        if gv == 0.0 {
            continue;
        }
        let mut power = 1.0;
        for slot in acc.iter_mut() {
            power *= gv;
            slot.add(w * power);
        }
    }
    Ok(acc.iter().map(|s| s.value()).collect())
}

/// Model and weighted moments at one truncation point, with their gaps.
#[derive(Debug, Clone, Serialize)]
pub struct MomentTable {
    pub n: u64,
    pub cutoff: u64,
    pub model: Vec<f64>,
    pub weighted: Vec<f64>,
    pub gaps: Vec<f64>,
}

/// For each `n` in the schedule: set the prime cutoff to `floor(alpha_n)`,
/// build the restricted count table, and compare model moments against
/// weighted moments order by order.
pub fn moment_gap_study(
    spec: &FamilySpec,
    schedule: &[u64],
    r_max: usize,
) -> Result<Vec<MomentTable>> {
    for w in schedule.windows(2) {
        if w[0] >= w[1] {
            return Err(Error::Schedule(
                "schedule must be strictly increasing".into(),
            ));
        }
    }
    let mut out = Vec::with_capacity(schedule.len());
    for &n in schedule {
        let alpha = alpha_n(n)?;
        let cutoff = if alpha >= n as f64 {
            n
        } else {
            (alpha.floor() as u64).max(1)
        };
        let table = sieve_primes(cutoff)?;
        let sums = prime_reciprocal_sums(cutoff);
        // The binomial bridge between the centered and uncentered gaps uses
        // the model mean staying below the threshold; true for all n >= 3
        // but asserted rather than assumed.
        assert!(
            sums.b <= alpha,
            "model mean {} exceeded the threshold {alpha} at n = {n}",
            sums.b
        );
        let g = build_omega_table(n, Some(cutoff))?;
        let pmf = make_pmf(spec, n)?;
        let model = bernoulli_model_moments(table.primes(), r_max)?;
        let weighted = weighted_g_moments(&pmf, &g, r_max)?;
        let gaps = model
            .iter()
            .zip(&weighted)
            .map(|(m, w)| (m - w).abs())
            .collect();
        out.push(MomentTable {
            n,
            cutoff,
            model,
            weighted,
            gaps,
        });
    }
    Ok(out)
}

/// One jump of a standardized empirical CDF.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct JumpPoint {
    pub x: f64,
    pub cumulative: f64,
}

/// Standardized factor-count CDF with its Kolmogorov–Smirnov distance to
/// the standard normal.
#[derive(Debug, Clone, Serialize)]
pub struct StandardizedStudy {
    pub n: u64,
    pub center: f64,
    pub scale: f64,
    pub jumps: Vec<JumpPoint>,
    pub ks: f64,
}

/// Group the distribution's mass by factor count, standardize the counts by
/// `center`/`scale`, and take the exact supremum distance to the normal CDF
/// over jump points (evaluating both one-sided limits of the step CDF).
pub fn standardized_cdf_centered(
    pmf: &TruncatedPmf,
    omega: &OmegaTable,
    center: f64,
    scale: f64,
) -> Result<StandardizedStudy> {
    let n = pmf.n();
    if n < 3 {
        return Err(Error::Domain(format!(
            "standardized study needs n >= 3, got {n}"
        )));
    }
    if omega.limit() != n {
        return Err(Error::Mismatch(format!(
            "count table limit {} must equal the distribution's n = {n}",
            omega.limit()
        )));
    }
    if !(scale.is_finite() && scale > 0.0) {
        return Err(Error::Domain(format!(
            "scale must be positive, got {scale}"
        )));
    }

    let mut buckets: Vec<KahanSum> = vec![KahanSum::new(); 256];
    let mut top = 0usize;
    for m in 1..=n {
        let w = usize::from(omega.count(m));
        buckets[w].add(pmf.pmf_unchecked(m));
        top = top.max(w);
    }

    let mut jumps = Vec::with_capacity(top + 1);
    let mut cumulative = KahanSum::new();
    for (w, bucket) in buckets.iter().enumerate().take(top + 1) {
        let mass = bucket.value();
        // Counts attained only by zero-probability integers produce no jump.
        if mass == 0.0 {
            continue;
        }
        cumulative.add(mass);
        jumps.push(JumpPoint {
            x: (w as f64 - center) / scale,
            cumulative: cumulative.value(),
        });
    }

    let ks = ks_against_normal(&jumps);
    Ok(StandardizedStudy {
        n,
        center,
        scale,
        jumps,
        ks,
    })
}

/// [`standardized_cdf_centered`] with the classical centering
/// `center = log log n`, `scale = sqrt(log log n)`. Requires an
/// unrestricted count table.
pub fn standardized_cdf(pmf: &TruncatedPmf, omega: &OmegaTable) -> Result<StandardizedStudy> {
    if omega.cutoff().is_some() {
        return Err(Error::Mismatch(
            "classical centering expects the unrestricted count table".into(),
        ));
    }
    let loglog = (pmf.n() as f64).ln().ln();
    if loglog <= 0.0 {
        return Err(Error::Domain(format!(
            "log log n must be positive, got n = {}",
            pmf.n()
        )));
    }
    standardized_cdf_centered(pmf, omega, loglog, loglog.sqrt())
}

fn ks_against_normal(jumps: &[JumpPoint]) -> f64 {
    let mut sup = 0.0f64;
    let mut before = 0.0;
    for j in jumps {
        let phi = normal_cdf(j.x);
        sup = sup
            .max((j.cumulative - phi).abs())
            .max((before - phi).abs());
        before = j.cumulative;
    }
    sup
}

/// Exact supremum distance between two right-continuous step CDFs given by
/// their jump points.
pub fn ks_between_steps(a: &[JumpPoint], b: &[JumpPoint]) -> f64 {
    let mut ia = 0;
    let mut ib = 0;
    let mut fa = 0.0f64;
    let mut fb = 0.0f64;
    let mut sup = 0.0f64;
    while ia < a.len() || ib < b.len() {
        let xa = a.get(ia).map_or(f64::INFINITY, |j| j.x);
        let xb = b.get(ib).map_or(f64::INFINITY, |j| j.x);
        let x = xa.min(xb);
        sup = sup.max((fa - fb).abs());
        if xa == x {
            fa = a[ia].cumulative;
            ia += 1;
        }
        if xb == x {
            fb = b[ib].cumulative;
            ib += 1;
        }
        sup = sup.max((fa - fb).abs());
    }
    sup
}

/// `E[omega]` under the distribution, from the unrestricted count table.
pub fn expected_omega(pmf: &TruncatedPmf, omega: &OmegaTable) -> Result<f64> {
    if omega.limit() != pmf.n() {
        return Err(Error::Mismatch(format!(
            "count table limit {} must equal the distribution's n = {}",
            omega.limit(),
            pmf.n()
        )));
    }
    let mut acc = KahanSum::new();
    for m in 1..=pmf.n() {
        let c = omega.count(m);
        if c > 0 {
            acc.add(pmf.pmf_unchecked(m) * f64::from(c));
        }
    }
    Ok(acc.value())
}

/// `E[omega] / log log n`, the mean ratio that tends to one along admissible
/// families (slowly: the drift term decays like 1 / log log n).
pub fn mean_ratio(pmf: &TruncatedPmf, omega: &OmegaTable) -> Result<f64> {
    let n = pmf.n();
    if n < 3 {
        return Err(Error::Domain(format!("mean ratio needs n >= 3, got {n}")));
    }
    let loglog = (n as f64).ln().ln();
    Ok(expected_omega(pmf, omega)? / loglog)
}
