//! Prime tables, distinct-prime-factor counts and prime reciprocal sums.
//!
//! Everything downstream (constraint checks, moment studies, CDF studies)
//! sums over primes or over per-integer factor counts, so this module is the
//! performance-sensitive backbone:
//!
//! * [`sieve_primes`]: segmented sieve of Eratosthenes producing the sorted
//!   list of primes up to a limit.
//! * [`build_omega_table`]: per-integer count of distinct prime factors,
//!   optionally restricted to primes below a cutoff. Built one cache-sized
//!   segment at a time; segments are independent so construction parallelises
//!   with bit-identical results.
//! * [`alpha_n`]: the threshold `n^(1/log log n)` separating the small-prime
//!   range (where factor counts are modelled by independent indicators) from
//!   the large-prime range (whose total contribution is negligible).
//! * [`prime_reciprocal_sums`]: `sum 1/p` and `sum (1/p)(1 - 1/p)` up to a
//!   cutoff, the mean and variance of the independent indicator model.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kahan::KahanSum;

/// Hard budget for any single in-memory table.
pub const MEMORY_BUDGET_BYTES: u64 = 2 << 30;

/// Segment length for sieving, sized to stay within L2 cache.
const SEGMENT_LEN: usize = 1 << 20;

/// Sorted table of all primes up to `limit`.
#[derive(Debug, Clone)]
pub struct PrimeTable {
    limit: u64,
    primes: Vec<u64>,
}

impl PrimeTable {
    pub fn limit(&self) -> u64 {
        self.limit
    }

    pub fn primes(&self) -> &[u64] {
        &self.primes
    }

    pub fn count(&self) -> usize {
        self.primes.len()
    }

    /// Primes `p <= bound`.
    pub fn primes_upto(&self, bound: u64) -> &[u64] {
        let end = self.primes.partition_point(|&p| p <= bound);
        &self.primes[..end]
    }

    /// Primes in the half-open real range `(lo, hi]`.
    pub fn primes_between(&self, lo: f64, hi: u64) -> &[u64] {
        let start = self.primes.partition_point(|&p| (p as f64) <= lo);
        let end = self.primes.partition_point(|&p| p <= hi);
        &self.primes[start.min(end)..end]
    }

    pub fn contains(&self, x: u64) -> bool {
        self.primes.binary_search(&x).is_ok()
    }
}

/// Distinct-prime-factor counts for `1..=limit`.
///
/// With `cutoff = None`, `count(m)` is the number of distinct primes dividing
/// `m`. With `cutoff = Some(b)`, only primes `p <= b` are counted, which is
/// the truncated statistic the moment machinery controls.
#[derive(Debug, Clone)]
pub struct OmegaTable {
    limit: u64,
    cutoff: Option<u64>,
    counts: Vec<u8>,
}

impl OmegaTable {
    pub fn limit(&self) -> u64 {
        self.limit
    }

    pub fn cutoff(&self) -> Option<u64> {
        self.cutoff
    }

    /// Count for `m`; `m` must lie in `1..=limit`.
    #[inline]
    pub fn count(&self, m: u64) -> u8 {
        self.counts[m as usize]
    }

    /// Raw counts, indexed by integer (index 0 is unused and zero).
    pub fn counts(&self) -> &[u8] {
        &self.counts
    }

    /// Rebuild from raw parts (used by the binary cache loader).
    pub(crate) fn from_raw(limit: u64, cutoff: Option<u64>, counts: Vec<u8>) -> Self {
        debug_assert_eq!(counts.len() as u64, limit + 1);
        OmegaTable {
            limit,
            cutoff,
            counts,
        }
    }
}

/// Prime reciprocal sums up to `cutoff`: `b = sum 1/p` and
/// `a2 = sum (1/p)(1 - 1/p)`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct PrimeSums {
    pub cutoff: u64,
    pub b: f64,
    pub a2: f64,
}

fn isqrt(n: u64) -> u64 {
    if n == 0 {
        return 0;
    }
    let mut r = (n as f64).sqrt() as u64;
    while (r as u128) * (r as u128) > n as u128 {
        r -= 1;
    }
    while ((r + 1) as u128) * ((r + 1) as u128) <= n as u128 {
        r += 1;
    }
    r
}

/// Trial-division primality for parameter validation.
pub fn is_prime_u64(x: u64) -> bool {
    if x < 2 {
        return false;
    }
    if x.is_multiple_of(2) {
        return x == 2;
    }
    let mut d = 3u64;
    while d * d <= x {
        if x.is_multiple_of(d) {
            return false;
        }
        d += 2;
    }
    true
}

/// Dense sieve for small limits; used to seed the segmented passes.
fn small_sieve(limit: u64) -> Vec<u64> {
    if limit < 2 {
        return Vec::new();
    }
    let limit = limit as usize;
    let mut composite = vec![false; limit + 1];
    let mut primes = Vec::new();
    for i in 2..=limit {
        if !composite[i] {
            primes.push(i as u64);
            let mut j = i * i;
            while j <= limit {
                composite[j] = true;
                j += i;
            }
        }
    }
    primes
}

/// Stream every prime `<= limit` in ascending order without storing them.
pub fn for_each_prime<F: FnMut(u64)>(limit: u64, mut f: F) {
    if limit < 2 {
        return;
    }
    let sq = isqrt(limit);
    let base = small_sieve(sq);
    for &p in &base {
        f(p);
    }
    let mut flags = vec![false; SEGMENT_LEN];
    let mut lo = sq + 1;
    while lo <= limit {
        let hi = (lo + SEGMENT_LEN as u64 - 1).min(limit);
        let len = (hi - lo + 1) as usize;
        flags[..len].fill(false);
        for &p in &base {
            let mut m = lo.div_ceil(p) * p;
            while m <= hi {
                flags[(m - lo) as usize] = true;
                m += p;
            }
        }
        for (i, &c) in flags[..len].iter().enumerate() {
            if !c {
                f(lo + i as u64);
            }
        }
        lo = hi + 1;
    }
}

/// All primes `<= limit`, deterministic.
pub fn sieve_primes(limit: u64) -> Result<PrimeTable> {
    let estimate = if limit >= 16 {
        ((limit as f64) / (limit as f64).ln() * 1.2) as u64 + 16
    } else {
        8
    };
    let required = estimate * 8;
    if required > MEMORY_BUDGET_BYTES {
        return Err(Error::Resource {
            what: "prime table",
            required_bytes: required,
            budget_bytes: MEMORY_BUDGET_BYTES,
        });
    }
    let mut primes = Vec::with_capacity(estimate as usize);
    for_each_prime(limit, |p| primes.push(p));
    Ok(PrimeTable { limit, primes })
}

/// Build the distinct-prime-factor table for `1..=limit`.
///
/// One pass per sieving prime increments every multiple inside a segment.
/// Primes above `sqrt(limit)` are never strided: after dividing the sieving
/// primes out of each integer, whatever remains (> 1) is the unique large
/// prime factor and is credited directly when it does not exceed the cutoff.
pub fn build_omega_table(limit: u64, cutoff: Option<u64>) -> Result<OmegaTable> {
    if limit < 1 {
        return Err(Error::Domain("omega table limit must be >= 1".into()));
    }
    if let Some(b) = cutoff {
        if b < 1 || b > limit {
            return Err(Error::Domain(format!(
                "omega cutoff must lie in 1..=limit, got cutoff={b}, limit={limit}"
            )));
        }
    }
    let required = limit + 1;
    if required > MEMORY_BUDGET_BYTES {
        return Err(Error::Resource {
            what: "omega table",
            required_bytes: required,
            budget_bytes: MEMORY_BUDGET_BYTES,
        });
    }

    let bound = cutoff.unwrap_or(limit);
    let sq = isqrt(limit);
    let base = small_sieve(bound.min(sq));
    // When the cutoff exceeds sqrt(limit) there can be one prime factor
    // larger than every sieving prime; track cofactors to credit it.
    let credit_large = bound > sq;

    let mut counts = vec![0u8; (limit + 1) as usize];
    counts[1..]
        .par_chunks_mut(SEGMENT_LEN)
        .enumerate()
        .for_each(|(chunk_idx, chunk)| {
            let lo = 1 + (chunk_idx * SEGMENT_LEN) as u64;
            let hi = lo + chunk.len() as u64 - 1;
            let mut remaining: Vec<u64> = if credit_large {
                (lo..=hi).collect()
            } else {
                Vec::new()
            };
            for &p in &base {
                let mut m = lo.div_ceil(p) * p;
                while m <= hi {
                    let off = (m - lo) as usize;
                    chunk[off] += 1;
                    if credit_large {
                        let r = &mut remaining[off];
                        while (*r).is_multiple_of(p) {
                            *r /= p;
                        }
                    }
                    m += p;
                }
            }
            if credit_large {
                for (off, &r) in remaining.iter().enumerate() {
                    if r > 1 && r <= bound {
                        chunk[off] += 1;
                    }
                }
            }
        });

    Ok(OmegaTable {
        limit,
        cutoff,
        counts,
    })
}

/// The small/large prime threshold `n^(1 / log log n)`.
///
/// Defined for `n >= 3` so that `log log n > 0`. For small `n` the value
/// exceeds `n` itself, making the large-prime range empty; callers treat
/// that as an empty scan rather than an error.
pub fn alpha_n(n: u64) -> Result<f64> {
    if n < 3 {
        return Err(Error::Domain(format!(
            "alpha_n requires n >= 3 (log log n must be positive), got n={n}"
        )));
    }
    let x = n as f64;
    Ok((x.ln() / x.ln().ln()).exp())
}

/// `b = sum_{p <= cutoff} 1/p` and `a2 = sum_{p <= cutoff} (1/p)(1 - 1/p)`,
/// both compensated. Streams the primes, so memory stays flat.
pub fn prime_reciprocal_sums(cutoff: u64) -> PrimeSums {
    let mut b = KahanSum::new();
    let mut a2 = KahanSum::new();
    for_each_prime(cutoff, |p| {
        let inv = 1.0 / p as f64;
        b.add(inv);
        a2.add(inv * (1.0 - inv));
    });
    PrimeSums {
        cutoff,
        b: b.value(),
        a2: a2.value(),
    }
}
