//! Truncated distributions on `{1, ..., n}` viewed as perturbations of the
//! uniform law.
//!
//! Every distribution here is exposed through the same decomposition
//! `pmf(i) = 1/n + epsilon(i)`, which forces `sum_i epsilon(i) = 0` and
//! `epsilon(i) in [-1/n, 1 - 1/n]`. The central quantity downstream is the
//! perturbation summed over the multiples of a divisor,
//! `sum_{l <= floor(n/d)} epsilon(l*d)`; families with a closed form for that
//! sum (harmonic, zipf, geometric, ...) evaluate it without looping over
//! multiples, and the generic path is kept alongside as a cross-check.
//!
//! Power terms (`i^(-s)`, `s^i`, `s^i / i^alpha`) are evaluated in exp-log
//! form, good to about 1e-13 relative per term even for parameters next to
//! their limits; every sum with more than a handful of terms is compensated.
//!
//! | family        | pmf(i)                                  | normalizer        |
//! |---------------|------------------------------------------|-------------------|
//! | uniform       | 1/n                                      | n                 |
//! | harmonic      | 1/(i * H_n)                              | H_n               |
//! | zipf(s)       | i^(-s) / Z                               | Z = sum j^(-s)    |
//! | logarithmic(s)| (s^i / i) / Z                            | Z = sum s^j / j   |
//! | geometric(s)  | s^i / Z                                  | Z = s(1-s^n)/(1-s)|
//! | logzeta(s,a)  | (s^i / i^a) / Z                          | Z = sum s^j / j^a |
//! | convex        | weighted sum of components (lazy)        | 1                 |
//! | reflect       | 2/n - inner(i)                           | 1                 |
//! | zeroed[P]     | uniform off the multiples of P           | survivor count    |
//! | pushforward   | unit-interval integrals of a density     | total integral    |

use crate::error::{Error, Result};
use crate::family::{DensityGrid, FamilySpec, CONVEX_WEIGHT_TOL};
use crate::kahan::KahanSum;

/// Absolute slack when checking the reflection hypothesis `|eps| <= 1/n`.
pub const REFLECT_SLACK: f64 = 1e-15;

/// A probability mass function on `{1, ..., n}` with family metadata.
#[derive(Debug, Clone)]
pub struct TruncatedPmf {
    spec: FamilySpec,
    n: u64,
    normalizer: f64,
    kind: Kind,
}

#[derive(Debug, Clone)]
enum Kind {
    Uniform,
    Harmonic,
    Zipf { s: f64 },
    Logarithmic { ln_s: f64 },
    Geometric { ln_s: f64 },
    LogZeta { ln_s: f64, alpha: f64 },
    Convex(Vec<(f64, TruncatedPmf)>),
    Reflect(Box<TruncatedPmf>),
    Zeroed { primes: Vec<u64> },
    Masses(Vec<f64>),
}

/// Build the truncation of `spec` on `{1, ..., n}`.
pub fn make_pmf(spec: &FamilySpec, n: u64) -> Result<TruncatedPmf> {
    spec.validate()?;
    if n < 2 {
        return Err(Error::Domain(format!("truncation needs n >= 2, got n={n}")));
    }
    let nf = n as f64;
    match spec {
        FamilySpec::Uniform => Ok(TruncatedPmf {
            spec: spec.clone(),
            n,
            normalizer: nf,
            kind: Kind::Uniform,
        }),
        FamilySpec::Harmonic => {
            let h_n = kahan_series(n, |j| 1.0 / j as f64);
            Ok(TruncatedPmf {
                spec: spec.clone(),
                n,
                normalizer: h_n,
                kind: Kind::Harmonic,
            })
        }
        FamilySpec::Zipf { s } => {
            let s = *s;
            let z = kahan_series(n, |j| (j as f64).powf(-s));
            Ok(TruncatedPmf {
                spec: spec.clone(),
                n,
                normalizer: z,
                kind: Kind::Zipf { s },
            })
        }
        FamilySpec::Logarithmic { s } => {
            let ln_s = (s - 1.0).ln_1p();
            let z = kahan_series_decaying(n, |j| (j as f64 * ln_s).exp() / j as f64);
            Ok(TruncatedPmf {
                spec: spec.clone(),
                n,
                normalizer: z,
                kind: Kind::Logarithmic { ln_s },
            })
        }
        FamilySpec::Geometric { s } => {
            let ln_s = (s - 1.0).ln_1p();
            // s (1 - s^n) / (1 - s), via expm1 to keep s near 1 accurate.
            let z = s * (-(nf * ln_s).exp_m1()) / (1.0 - s);
            Ok(TruncatedPmf {
                spec: spec.clone(),
                n,
                normalizer: z,
                kind: Kind::Geometric { ln_s },
            })
        }
        FamilySpec::LogZeta { s, alpha } => {
            let alpha = *alpha;
            let ln_s = (s - 1.0).ln_1p();
            let z = if ln_s == 0.0 {
                kahan_series(n, |j| (j as f64).powf(-alpha))
            } else {
                kahan_series_decaying(n, |j| (j as f64 * ln_s - alpha * (j as f64).ln()).exp())
            };
            Ok(TruncatedPmf {
                spec: spec.clone(),
                n,
                normalizer: z,
                kind: Kind::LogZeta { ln_s, alpha },
            })
        }
        FamilySpec::Convex(parts) => {
            let built: Result<Vec<(f64, TruncatedPmf)>> = parts
                .iter()
                .map(|(w, part)| make_pmf(part, n).map(|p| (*w, p)))
                .collect();
            convex_combine(built?)
        }
        FamilySpec::Reflect(inner) => reflect(make_pmf(inner, n)?),
        FamilySpec::ZeroedAtPrimes(ps) => zeroed_at_primes(n, ps),
        FamilySpec::Pushforward { .. } => Err(Error::Domain(
            "pushforward distributions carry no rebuildable spec; \
             construct them with ceiling_pushforward or from_weights"
                .into(),
        )),
    }
}

/// Mix distributions sharing the same `n`; weights must be nonnegative and
/// sum to one. The result evaluates components lazily, so closed-form
/// multiple sums of the parts stay available.
pub fn convex_combine(parts: Vec<(f64, TruncatedPmf)>) -> Result<TruncatedPmf> {
    if parts.is_empty() {
        return Err(Error::Domain("convex combination needs parts".into()));
    }
    let n = parts[0].1.n;
    let mut total = 0.0;
    for (w, part) in &parts {
        if !w.is_finite() || *w < 0.0 {
            return Err(Error::Domain(format!(
                "convex weights must be nonnegative, got {w}"
            )));
        }
        if part.n != n {
            return Err(Error::Mismatch(format!(
                "convex components must share n, got {} and {n}",
                part.n
            )));
        }
        total += w;
    }
    if (total - 1.0).abs() > CONVEX_WEIGHT_TOL {
        return Err(Error::Domain(format!(
            "convex weights must sum to 1 within {CONVEX_WEIGHT_TOL}, got {total}"
        )));
    }
    let spec = FamilySpec::Convex(
        parts
            .iter()
            .map(|(w, part)| (*w, part.spec.clone()))
            .collect(),
    );
    Ok(TruncatedPmf {
        spec,
        n,
        normalizer: 1.0,
        kind: Kind::Convex(parts),
    })
}

/// Negate the perturbation: the result has `epsilon'(i) = -epsilon(i)`.
///
/// Requires `|epsilon(i)| <= 1/n` for every `i`; the first violating index
/// is reported otherwise.
pub fn reflect(inner: TruncatedPmf) -> Result<TruncatedPmf> {
    let n = inner.n;
    let inv_n = 1.0 / n as f64;
    for i in 1..=n {
        let eps = inner.pmf_unchecked(i) - inv_n;
        if eps.abs() > inv_n + REFLECT_SLACK {
            return Err(Error::ReflectionHypothesis {
                index: i,
                epsilon: eps,
                n,
            });
        }
    }
    Ok(TruncatedPmf {
        spec: FamilySpec::Reflect(Box::new(inner.spec.clone())),
        n,
        normalizer: 1.0,
        kind: Kind::Reflect(Box::new(inner)),
    })
}

/// Uniform mass on the integers in `{1, ..., n}` that no prime in `ps`
/// divides; zero on the rest.
pub fn zeroed_at_primes(n: u64, ps: &[u64]) -> Result<TruncatedPmf> {
    if n < 2 {
        return Err(Error::Domain(format!("truncation needs n >= 2, got n={n}")));
    }
    let mut primes = ps.to_vec();
    primes.sort_unstable();
    primes.dedup();
    if primes.len() != ps.len() {
        return Err(Error::Domain("zeroed prime set has duplicates".into()));
    }
    let spec = FamilySpec::ZeroedAtPrimes(primes.clone());
    spec.validate()?;
    for &p in &primes {
        if p > n {
            return Err(Error::Domain(format!(
                "zeroed prime {p} exceeds the truncation point {n}"
            )));
        }
    }
    let survivors = count_coprime(&primes, n);
    debug_assert!(survivors >= 1, "1 is never divisible by a prime");
    Ok(TruncatedPmf {
        spec,
        n,
        normalizer: survivors as f64,
        kind: Kind::Zeroed { primes },
    })
}

/// Integer law of `ceil(X)` for a continuous variable `X` on `(0, n]` with
/// the sampled density: `pmf(i)` is the density mass on `(i-1, i]`
/// (composite Simpson per unit interval) divided by the total mass.
pub fn ceiling_pushforward(density: &DensityGrid) -> Result<TruncatedPmf> {
    from_weights(density.interval_masses())
}

impl TruncatedPmf {
    /// Normalize arbitrary nonnegative per-integer weights into a pmf.
    pub fn from_weights(weights: Vec<f64>) -> Result<TruncatedPmf> {
        from_weights(weights)
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn spec(&self) -> &FamilySpec {
        &self.spec
    }

    /// Family normalizing constant (see the module table). Families without
    /// a natural constant report 1.
    pub fn normalizer(&self) -> f64 {
        self.normalizer
    }

    /// Probability of `i`, for `i` in `1..=n`.
    pub fn pmf(&self, i: u64) -> Result<f64> {
        self.check_index(i)?;
        Ok(self.pmf_unchecked(i))
    }

    /// Perturbation from uniform at `i`: `pmf(i) - 1/n`.
    pub fn epsilon(&self, i: u64) -> Result<f64> {
        self.check_index(i)?;
        Ok(self.pmf_unchecked(i) - 1.0 / self.n as f64)
    }

    /// `sum_{l=1}^{floor(n/d)} pmf(l*d)`, by closed form where the family
    /// has one, falling back to the loop over multiples otherwise.
    pub fn multiple_pmf_sum(&self, d: u64) -> Result<f64> {
        self.check_index(d)?;
        Ok(self.multiple_sum_inner(d, false))
    }

    /// Same sum, always looping over the multiples. Kept public so the two
    /// routes can be compared; they must agree to about 1e-12 relative.
    pub fn multiple_pmf_sum_generic(&self, d: u64) -> Result<f64> {
        self.check_index(d)?;
        Ok(self.multiple_sum_inner(d, true))
    }

    /// `sum_{l=1}^{floor(n/d)} epsilon(l*d) = multiple_pmf_sum(d) - floor(n/d)/n`.
    pub fn epsilon_multiple_sum(&self, d: u64) -> Result<f64> {
        let m = self.n / d;
        Ok(self.multiple_pmf_sum(d)? - m as f64 / self.n as f64)
    }

    /// Total mass `sum_i pmf(i)` (compensated); 1 up to rounding.
    pub fn total_mass(&self) -> f64 {
        let mut acc = KahanSum::new();
        for i in 1..=self.n {
            acc.add(self.pmf_unchecked(i));
        }
        acc.value()
    }

    /// Largest `|epsilon(i)|` over the support.
    pub fn max_abs_epsilon(&self) -> f64 {
        let inv_n = 1.0 / self.n as f64;
        let mut sup = 0.0f64;
        for i in 1..=self.n {
            sup = sup.max((self.pmf_unchecked(i) - inv_n).abs());
        }
        sup
    }

    fn check_index(&self, i: u64) -> Result<()> {
        if i < 1 || i > self.n {
            Err(Error::IndexOutOfRange {
                index: i,
                n: self.n,
            })
        } else {
            Ok(())
        }
    }

    #[inline]
    pub(crate) fn pmf_unchecked(&self, i: u64) -> f64 {
        let nf = self.n as f64;
        match &self.kind {
            Kind::Uniform => 1.0 / nf,
            Kind::Harmonic => 1.0 / (i as f64 * self.normalizer),
            Kind::Zipf { s } => (i as f64).powf(-s) / self.normalizer,
            Kind::Logarithmic { ln_s } => (i as f64 * ln_s).exp() / (i as f64) / self.normalizer,
            Kind::Geometric { ln_s } => (i as f64 * ln_s).exp() / self.normalizer,
            Kind::LogZeta { ln_s, alpha } => {
                (i as f64 * ln_s - alpha * (i as f64).ln()).exp() / self.normalizer
            }
            Kind::Convex(parts) => parts
                .iter()
                .map(|(w, part)| w * part.pmf_unchecked(i))
                .sum(),
            Kind::Reflect(inner) => 2.0 / nf - inner.pmf_unchecked(i),
            Kind::Zeroed { primes } => {
                if primes.iter().any(|&p| i.is_multiple_of(p)) {
                    0.0
                } else {
                    1.0 / self.normalizer
                }
            }
            Kind::Masses(masses) => masses[(i - 1) as usize],
        }
    }

    fn multiple_sum_inner(&self, d: u64, force_generic: bool) -> f64 {
        let m = self.n / d;
        if force_generic {
            return self.multiple_sum_loop(d, m);
        }
        match &self.kind {
            Kind::Uniform => m as f64 / self.n as f64,
            Kind::Harmonic => kahan_series(m, |l| 1.0 / l as f64) / (d as f64 * self.normalizer),
            Kind::Zipf { s } => {
                let partial = kahan_series(m, |l| (l as f64).powf(-s));
                (d as f64).powf(-s) * partial / self.normalizer
            }
            Kind::Logarithmic { ln_s } => {
                let ln_sd = d as f64 * ln_s;
                let partial = kahan_series_decaying(m, |l| (l as f64 * ln_sd).exp() / l as f64);
                partial / (d as f64 * self.normalizer)
            }
            Kind::Geometric { ln_s } => {
                let ln_sd = d as f64 * ln_s;
                // s^d (1 - s^(d m)) / (1 - s^d)
                let num = ln_sd.exp() * (-(m as f64 * ln_sd).exp_m1());
                let den = -ln_sd.exp_m1();
                num / den / self.normalizer
            }
            Kind::LogZeta { ln_s, alpha } => {
                let ln_sd = d as f64 * ln_s;
                let partial = if ln_sd == 0.0 {
                    kahan_series(m, |l| (l as f64).powf(-alpha))
                } else {
                    kahan_series_decaying(m, |l| (l as f64 * ln_sd - alpha * (l as f64).ln()).exp())
                };
                (d as f64).powf(-alpha) * partial / self.normalizer
            }
            Kind::Convex(parts) => {
                let mut acc = KahanSum::new();
                for (w, part) in parts {
                    acc.add(w * part.multiple_sum_inner(d, false));
                }
                acc.value()
            }
            Kind::Reflect(inner) => {
                2.0 * m as f64 / self.n as f64 - inner.multiple_sum_inner(d, false)
            }
            Kind::Zeroed { primes } => {
                if primes.iter().any(|&p| d.is_multiple_of(p)) {
                    0.0
                } else {
                    // p | l*d iff p | l once p does not divide d.
                    count_coprime(primes, m) as f64 / self.normalizer
                }
            }
            Kind::Masses(_) => self.multiple_sum_loop(d, m),
        }
    }

    fn multiple_sum_loop(&self, d: u64, m: u64) -> f64 {
        let mut acc = KahanSum::new();
        for l in 1..=m {
            acc.add(self.pmf_unchecked(l * d));
        }
        acc.value()
    }
}

fn from_weights(weights: Vec<f64>) -> Result<TruncatedPmf> {
    let n = weights.len() as u64;
    if n < 2 {
        return Err(Error::Domain(format!(
            "a pmf needs at least 2 weights, got {n}"
        )));
    }
    let mut total = KahanSum::new();
    for (idx, &w) in weights.iter().enumerate() {
        if !w.is_finite() || w < 0.0 {
            return Err(Error::Domain(format!(
                "weights must be finite and nonnegative, got {w} at index {idx}"
            )));
        }
        total.add(w);
    }
    let total = total.value();
    if total <= 0.0 {
        return Err(Error::Domain("total mass must be positive".into()));
    }
    let masses = weights.into_iter().map(|w| w / total).collect();
    Ok(TruncatedPmf {
        spec: FamilySpec::Pushforward { n },
        n,
        normalizer: total,
        kind: Kind::Masses(masses),
    })
}

/// `sum_{j=1}^{n} term(j)`, compensated.
fn kahan_series(n: u64, term: impl Fn(u64) -> f64) -> f64 {
    let mut acc = KahanSum::new();
    for j in 1..=n {
        acc.add(term(j));
    }
    acc.value()
}

/// Same, for eventually-underflowing positive terms: stops once a term is
/// exactly zero (all later terms of the decaying series are zero too).
fn kahan_series_decaying(n: u64, term: impl Fn(u64) -> f64) -> f64 {
    let mut acc = KahanSum::new();
    for j in 1..=n {
        let t = term(j);
        if t == 0.0 {
            break;
        }
        acc.add(t);
    }
    acc.value()
}

/// Integers in `1..=bound` not divisible by any prime in `primes`, by
/// inclusion-exclusion over subsets.
fn count_coprime(primes: &[u64], bound: u64) -> u64 {
    let k = primes.len();
    debug_assert!(k <= 32);
    let mut total: i64 = 0;
    for mask in 0u32..(1u32 << k) {
        let mut prod: u128 = 1;
        let mut overflow = false;
        for (idx, &p) in primes.iter().enumerate() {
            if mask >> idx & 1 == 1 {
                prod *= u128::from(p);
                if prod > u128::from(bound) {
                    overflow = true;
                    break;
                }
            }
        }
        if overflow {
            continue;
        }
        let term = (u128::from(bound) / prod) as i64;
        if mask.count_ones() % 2 == 0 {
            total += term;
        } else {
            total -= term;
        }
    }
    debug_assert!(total >= 0);
    total as u64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::family::parse_family;

    fn pmf(text: &str, n: u64) -> TruncatedPmf {
        make_pmf(&parse_family(text).unwrap(), n).unwrap()
    }

    fn close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
    }

    #[test]
    fn uniform_values() {
        let u = pmf("uniform", 10);
        assert_eq!(u.pmf(3).unwrap(), 0.1);
        assert_eq!(u.epsilon(7).unwrap(), 0.0);
        assert_eq!(u.multiple_pmf_sum(2).unwrap(), 0.5);
        assert_eq!(u.epsilon_multiple_sum(2).unwrap(), 0.0);
    }

    #[test]
    fn harmonic_values() {
        // H_10 = 7381/2520.
        let h = pmf("harmonic", 10);
        let h10 = 7381.0 / 2520.0;
        close(h.normalizer(), h10, 1e-15);
        close(h.pmf(1).unwrap(), 1.0 / h10, 1e-15);
        close(h.pmf(1).unwrap(), 0.3414172, 1e-7);
        close(h.epsilon(1).unwrap(), 1.0 / h10 - 0.1, 1e-15);

        // H_5 = 137/60; sum over multiples of 2 is H_5 / (2 H_10) = 2877/7381.
        let expect = (137.0 / 60.0) / (2.0 * h10);
        close(h.multiple_pmf_sum(2).unwrap(), expect, 1e-15);
        close(h.multiple_pmf_sum(2).unwrap(), 0.3897846, 1e-7);
        close(h.epsilon_multiple_sum(2).unwrap(), expect - 0.5, 1e-15);
        close(h.epsilon_multiple_sum(2).unwrap(), -0.1102154, 1e-7);
    }

    #[test]
    fn zipf_values() {
        // Z = 1 + 1/4 + 1/9 + 1/16 + 1/25 = 5269/3600.
        let z = pmf("zipf(s=2)", 5);
        let z5 = 5269.0 / 3600.0;
        close(z.normalizer(), z5, 1e-14);
        close(z.pmf(1).unwrap(), 3600.0 / 5269.0, 1e-14);
        close(z.pmf(1).unwrap(), 0.6832416, 1e-7);
        // Multiples of 2: (1/4 + 1/16) / Z = 1125/5269.
        close(z.multiple_pmf_sum(2).unwrap(), 0.3125 / z5, 1e-14);
        close(z.multiple_pmf_sum(2).unwrap(), 1125.0 / 5269.0, 1e-14);
        close(z.multiple_pmf_sum(2).unwrap(), 0.2135130, 1e-7);
    }

    #[test]
    fn geometric_values() {
        // s = 1/2, n = 3: Z = 7/8, pmf(1) = 4/7.
        let g = pmf("geometric(s=0.5)", 3);
        close(g.normalizer(), 0.875, 1e-15);
        close(g.epsilon(1).unwrap(), 0.5 / 0.875 - 1.0 / 3.0, 1e-15);
        close(g.epsilon(1).unwrap(), 0.238095, 1e-6);
    }

    #[test]
    fn logarithmic_against_direct_sum() {
        let l = pmf("logarithmic(s=0.5)", 20);
        let z: f64 = (1..=20).map(|j| 0.5f64.powi(j) / j as f64).sum();
        close(l.normalizer(), z, 1e-15);
        close(l.pmf(3).unwrap(), (0.125 / 3.0) / z, 1e-15);
    }

    #[test]
    fn logzeta_reduces_to_special_cases() {
        let n = 50;
        let lz = pmf("logzeta(s=1,alpha=1)", n);
        let h = pmf("harmonic", n);
        let log = pmf("logarithmic(s=0.7)", n);
        let lz_log = pmf("logzeta(s=0.7,alpha=1)", n);
        let zipf = pmf("zipf(s=1.3)", n);
        let lz_zipf = pmf("logzeta(s=1,alpha=1.3)", n);
        for i in [1u64, 2, 7, 49, 50] {
            close(lz.pmf(i).unwrap(), h.pmf(i).unwrap(), 1e-14);
            close(lz_log.pmf(i).unwrap(), log.pmf(i).unwrap(), 1e-14);
            close(lz_zipf.pmf(i).unwrap(), zipf.pmf(i).unwrap(), 1e-14);
        }
    }

    #[test]
    fn convex_values() {
        let c = pmf("convex[0.5:harmonic; 0.5:uniform]", 10);
        close(c.pmf(1).unwrap(), 0.5 * 2520.0 / 7381.0 + 0.05, 1e-15);
        let c3 = pmf("convex[0.3:harmonic; 0.7:uniform]", 10);
        close(c3.pmf(1).unwrap(), 0.3 * 2520.0 / 7381.0 + 0.07, 1e-15);

        // Degenerate mixtures collapse to their single component.
        let lone = pmf("convex[1:harmonic]", 10);
        let h = pmf("harmonic", 10);
        for i in 1..=10 {
            close(lone.pmf(i).unwrap(), h.pmf(i).unwrap(), 1e-16);
        }
        let uu = pmf("convex[0.5:uniform; 0.5:uniform]", 10);
        for i in 1..=10 {
            close(uu.pmf(i).unwrap(), 0.1, 1e-16);
        }
    }

    #[test]
    fn convex_rejects_mismatched_n() {
        let a = pmf("uniform", 10);
        let b = pmf("uniform", 12);
        assert!(matches!(
            convex_combine(vec![(0.5, a), (0.5, b)]),
            Err(Error::Mismatch(_))
        ));
    }

    #[test]
    fn zeroed_values() {
        let z = zeroed_at_primes(10, &[2]).unwrap();
        assert_eq!(z.pmf(3).unwrap(), 0.2);
        assert_eq!(z.pmf(4).unwrap(), 0.0);
        assert_eq!(z.epsilon_multiple_sum(2).unwrap(), -0.5);

        let z5 = zeroed_at_primes(5, &[5]).unwrap();
        for i in 1..=4 {
            assert_eq!(z5.pmf(i).unwrap(), 0.25);
        }
        assert_eq!(z5.pmf(5).unwrap(), 0.0);

        assert!(matches!(
            zeroed_at_primes(10, &[9]),
            Err(Error::NotPrime(9))
        ));
        assert!(zeroed_at_primes(10, &[11]).is_err());

        // Two primes: survivors of {2,3} in 1..=12 are {1,5,7,11}.
        let z23 = zeroed_at_primes(12, &[2, 3]).unwrap();
        assert_eq!(z23.normalizer(), 4.0);
        assert_eq!(z23.pmf(5).unwrap(), 0.25);
        assert_eq!(z23.pmf(6).unwrap(), 0.0);
    }

    #[test]
    fn reflection_examples() {
        // Uniform is the fixed point.
        let r = reflect(pmf("uniform", 10)).unwrap();
        for i in 1..=10 {
            assert_eq!(r.pmf(i).unwrap(), 0.1);
        }

        // Alternating +-1/(2n) perturbation flips sign under reflection.
        let n = 10usize;
        let weights: Vec<f64> = (1..=n)
            .map(|i| {
                let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
                1.0 / n as f64 + sign / (2.0 * n as f64 * n as f64)
            })
            .collect();
        let synth = TruncatedPmf::from_weights(weights).unwrap();
        let refl = reflect(synth.clone()).unwrap();
        for i in 1..=n as u64 {
            close(refl.epsilon(i).unwrap(), -synth.epsilon(i).unwrap(), 1e-16);
        }
        // Reflecting twice returns the original values.
        let back = reflect(refl).unwrap();
        for i in 1..=n as u64 {
            close(back.pmf(i).unwrap(), synth.pmf(i).unwrap(), 1e-15);
        }

        // Harmonic at n=10 has epsilon(1) ~ 0.24 > 1/10: hypothesis fails at i=1.
        match reflect(pmf("harmonic", 10)) {
            Err(Error::ReflectionHypothesis { index, .. }) => assert_eq!(index, 1),
            other => panic!("expected hypothesis violation, got {other:?}"),
        }
    }

    #[test]
    fn pushforward_examples() {
        // Constant density gives the uniform law.
        let grid = DensityGrid::from_fn(10, 16, |_| 3.0).unwrap();
        let u = ceiling_pushforward(&grid).unwrap();
        for i in 1..=10 {
            close(u.pmf(i).unwrap(), 0.1, 1e-15);
        }

        // density(t) = t on (0,10]: pmf(i) = (2i-1)/100 exactly.
        let grid = DensityGrid::from_fn(10, 16, |t| t).unwrap();
        let tri = ceiling_pushforward(&grid).unwrap();
        for i in 1..=10u64 {
            close(tri.pmf(i).unwrap(), (2 * i - 1) as f64 / 100.0, 1e-15);
        }

        // Mass only on (0,1]: a point mass at 1.
        let grid = DensityGrid::from_fn(10, 16, |t| if t < 1.0 { 1.0 } else { 0.0 }).unwrap();
        let point = ceiling_pushforward(&grid).unwrap();
        assert_eq!(point.pmf(1).unwrap(), 1.0);
        for i in 2..=10 {
            assert_eq!(point.pmf(i).unwrap(), 0.0);
        }

        // Zero density is rejected.
        let grid = DensityGrid::from_fn(4, 16, |_| 0.0).unwrap();
        assert!(ceiling_pushforward(&grid).is_err());
    }

    #[test]
    fn closed_and_generic_sums_agree() {
        for (text, n) in [
            ("harmonic", 101u64),
            ("zipf(s=1.5)", 101),
            ("geometric(s=0.9)", 101),
            ("logarithmic(s=0.8)", 101),
            ("logzeta(s=0.95,alpha=1.2)", 101),
            ("zeroed[2,5]", 101),
            ("convex[0.4:harmonic; 0.6:zipf(s=2)]", 101),
        ] {
            let p = pmf(text, n);
            for d in [1u64, 2, 3, 7, 50, 101] {
                let closed = p.multiple_pmf_sum(d).unwrap();
                let generic = p.multiple_pmf_sum_generic(d).unwrap();
                let scale = closed.abs().max(1e-300);
                assert!(
                    ((closed - generic) / scale).abs() < 1e-12,
                    "{text} d={d}: closed={closed} generic={generic}"
                );
            }
        }
    }

    #[test]
    fn geometric_approaches_uniform_as_s_rises() {
        let n = 200;
        let sups: Vec<f64> = [0.9, 0.99, 0.999]
            .iter()
            .map(|&s| {
                make_pmf(&FamilySpec::Geometric { s }, n)
                    .unwrap()
                    .max_abs_epsilon()
            })
            .collect();
        assert!(sups[0] > sups[1] && sups[1] > sups[2], "{sups:?}");
    }

    #[test]
    fn index_errors() {
        let u = pmf("uniform", 10);
        assert!(matches!(
            u.pmf(0),
            Err(Error::IndexOutOfRange { index: 0, n: 10 })
        ));
        assert!(u.pmf(11).is_err());
        assert!(u.multiple_pmf_sum(0).is_err());
        assert!(u.multiple_pmf_sum(11).is_err());
        assert!(make_pmf(&FamilySpec::Uniform, 1).is_err());
    }

    #[test]
    fn normalization_and_epsilon_identity() {
        for n in [10u64, 1000] {
            for text in [
                "uniform",
                "harmonic",
                "zipf(s=1.01)",
                "logarithmic(s=0.9)",
                "geometric(s=0.5)",
                "logzeta(s=0.9,alpha=1.1)",
                "convex[0.25:harmonic; 0.75:zipf(s=1.5)]",
                "zeroed[2,3]",
            ] {
                let p = pmf(text, n);
                close(p.total_mass(), 1.0, 1e-12);
                let mut eps_sum = KahanSum::new();
                let inv_n = 1.0 / n as f64;
                for i in 1..=n {
                    let e = p.epsilon(i).unwrap();
                    assert!(
                        e >= -inv_n - 1e-15 && e <= 1.0 - inv_n + 1e-15,
                        "{text} n={n} i={i}"
                    );
                    eps_sum.add(e);
                }
                close(eps_sum.value(), 0.0, 1e-12);
            }
        }
    }
}
