//! Verification of the three constraints that define the admissible class of
//! perturbed-uniform distributions:
//!
//! * **C4**: for every prime `p` above the threshold `alpha_n`, the
//!   perturbation summed over multiples of `p` stays below `C/p`.
//! * **C5**: for every squarefree product `d` of distinct primes at most
//!   `alpha_n` (with `d <= n`), the summed perturbation stays below `D/n`.
//! * **C6**: for a fixed prime `p`, the summed perturbation vanishes as
//!   `n` grows.
//!
//! C4 and C5 are decided exactly at a given `n` (up to a fixed floating-point
//! slack); C6 is a true limit, so [`check_c6`] reports a verdict from a
//! three-point trend rule that is stated openly in the report.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::family::FamilySpec;
use crate::pmf::{make_pmf, TruncatedPmf};
use crate::primes::{alpha_n, is_prime_u64, sieve_primes, PrimeTable};

/// Absolute slack applied to every inequality so float summation noise
/// cannot flip an analytically tight bound.
pub const PASS_SLACK: f64 = 1e-12;

/// Default tail tolerance for the C6 trend verdict.
pub const DEFAULT_TREND_TOL: f64 = 1e-2;

/// Default cap on enumerated C5 entries.
pub const DEFAULT_ENTRY_CAP: usize = 1_000_000;

/// Grid cap for [`uniform_scan`].
pub const DEFAULT_GRID_CAP: usize = 4096;

#[derive(Debug, Clone, Serialize)]
pub struct C4Entry {
    pub p: u64,
    pub eps_sum: f64,
    pub bound: f64,
    pub pass: bool,
}

/// Per-prime results of the large-prime check.
#[derive(Debug, Clone, Serialize)]
pub struct C4Report {
    pub n: u64,
    pub alpha: f64,
    /// The asserted constant the entries were checked against.
    pub c: f64,
    pub entries: Vec<C4Entry>,
    /// Smallest constant that would make every entry pass: the supremum of
    /// `p * eps_sum`, floored at zero.
    pub minimal_c: f64,
}

impl C4Report {
    pub fn failures(&self) -> usize {
        self.entries.iter().filter(|e| !e.pass).count()
    }

    pub fn all_pass(&self) -> bool {
        self.failures() == 0
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct C5Entry {
    pub d: u64,
    pub k: u32,
    pub eps_sum: f64,
    pub bound: f64,
    pub pass: bool,
}

/// Per-divisor results of the small-prime-product check.
#[derive(Debug, Clone, Serialize)]
pub struct C5Report {
    pub n: u64,
    pub alpha: f64,
    pub d_const: f64,
    pub max_k: u32,
    pub entries: Vec<C5Entry>,
    /// Supremum of `n * eps_sum`, floored at zero.
    pub minimal_d: f64,
    /// Set when `max_k` or the entry cap cut off deeper products.
    pub truncated: bool,
}

impl C5Report {
    pub fn failures(&self) -> usize {
        self.entries.iter().filter(|e| !e.pass).count()
    }

    pub fn all_pass(&self) -> bool {
        self.failures() == 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TrendVerdict {
    ConvergingToZero,
    Nonvanishing,
    Inconclusive,
}

/// Values of the summed perturbation at a fixed prime along a growing
/// schedule of truncation points.
#[derive(Debug, Clone, Serialize)]
pub struct C6Trend {
    pub p: u64,
    pub schedule: Vec<u64>,
    pub values: Vec<f64>,
    pub tail_magnitude: f64,
    pub tol: f64,
    pub verdict: TrendVerdict,
}

/// Check the large-prime constraint with constant `c` over the primes in
/// `(alpha_n, n]`. An empty range yields an empty report with
/// `minimal_c = 0`.
pub fn check_c4(pmf: &TruncatedPmf, c: f64, primes: &PrimeTable) -> Result<C4Report> {
    check_c4_inner(pmf, c, primes, false)
}

/// Diagnostic variant scanning all primes `p <= n`, not only the range the
/// constraint quantifies over.
pub fn check_c4_all_primes(pmf: &TruncatedPmf, c: f64, primes: &PrimeTable) -> Result<C4Report> {
    check_c4_inner(pmf, c, primes, true)
}

fn check_c4_inner(
    pmf: &TruncatedPmf,
    c: f64,
    primes: &PrimeTable,
    all_primes: bool,
) -> Result<C4Report> {
    let n = pmf.n();
    if n < 3 {
        return Err(Error::Domain(format!(
            "constraint checks need n >= 3, got {n}"
        )));
    }
    if primes.limit() < n {
        return Err(Error::Mismatch(format!(
            "prime table covers only {} < n = {n}",
            primes.limit()
        )));
    }
    // An infinite constant turns the check into pure reporting.
    if c.is_nan() || c < 0.0 {
        return Err(Error::Domain(format!("constant C must be >= 0, got {c}")));
    }
    let alpha = alpha_n(n)?;
    let range = if all_primes {
        primes.primes_upto(n)
    } else {
        primes.primes_between(alpha, n)
    };
    let mut entries = Vec::with_capacity(range.len());
    let mut minimal = 0.0f64;
    for &p in range {
        let eps_sum = pmf.epsilon_multiple_sum(p)?;
        let bound = c / p as f64;
        minimal = minimal.max(p as f64 * eps_sum);
        entries.push(C4Entry {
            p,
            eps_sum,
            bound,
            pass: eps_sum <= bound + PASS_SLACK,
        });
    }
    Ok(C4Report {
        n,
        alpha,
        c,
        entries,
        minimal_c: minimal,
    })
}

/// Check the small-prime-product constraint with constant `d_const`,
/// enumerating squarefree products of at most `max_k` distinct primes
/// `<= alpha_n` depth-first, bounded by `d <= n`.
pub fn check_c5(
    pmf: &TruncatedPmf,
    d_const: f64,
    max_k: u32,
    primes: &PrimeTable,
) -> Result<C5Report> {
    check_c5_with_cap(pmf, d_const, max_k, primes, DEFAULT_ENTRY_CAP)
}

/// [`check_c5`] with an explicit entry budget; exceeding it returns the
/// partial report with the `truncated` flag set.
pub fn check_c5_with_cap(
    pmf: &TruncatedPmf,
    d_const: f64,
    max_k: u32,
    primes: &PrimeTable,
    entry_cap: usize,
) -> Result<C5Report> {
    let n = pmf.n();
    if n < 3 {
        return Err(Error::Domain(format!(
            "constraint checks need n >= 3, got {n}"
        )));
    }
    if primes.limit() < n {
        return Err(Error::Mismatch(format!(
            "prime table covers only {} < n = {n}",
            primes.limit()
        )));
    }
    if d_const.is_nan() || d_const < 0.0 {
        return Err(Error::Domain(format!(
            "constant D must be >= 0, got {d_const}"
        )));
    }
    if max_k == 0 {
        return Err(Error::Domain("max_k must be >= 1".into()));
    }
    let alpha = alpha_n(n)?;
    let pool_bound = if alpha >= n as f64 {
        n
    } else {
        alpha.floor() as u64
    };
    let pool = primes.primes_upto(pool_bound);
    let bound = d_const / n as f64;

    let mut driver = C5Driver {
        pmf,
        n,
        pool,
        max_k,
        entry_cap,
        bound,
        entries: Vec::new(),
        minimal: 0.0,
        truncated: false,
    };
    driver.visit(0, 1, 0)?;
    let mut entries = driver.entries;
    entries.sort_unstable_by_key(|e| e.d);
    Ok(C5Report {
        n,
        alpha,
        d_const,
        max_k,
        entries,
        minimal_d: driver.minimal,
        truncated: driver.truncated,
    })
}

struct C5Driver<'a> {
    pmf: &'a TruncatedPmf,
    n: u64,
    pool: &'a [u64],
    max_k: u32,
    entry_cap: usize,
    bound: f64,
    entries: Vec<C5Entry>,
    minimal: f64,
    truncated: bool,
}

impl C5Driver<'_> {
    /// Extend the squarefree product `d` (depth `k`) with primes from
    /// `pool[start..]`. Returns `false` once the entry budget is exhausted.
    fn visit(&mut self, start: usize, d: u64, k: u32) -> Result<bool> {
        for (offset, &p) in self.pool[start..].iter().enumerate() {
            let idx = start + offset;
            let next = match d.checked_mul(p) {
                Some(v) if v <= self.n => v,
                // Pool is ascending, so every later extension is larger.
                _ => break,
            };
            if self.entries.len() >= self.entry_cap {
                self.truncated = true;
                return Ok(false);
            }
            let eps_sum = self.pmf.epsilon_multiple_sum(next)?;
            self.minimal = self.minimal.max(self.n as f64 * eps_sum);
            self.entries.push(C5Entry {
                d: next,
                k: k + 1,
                eps_sum,
                bound: self.bound,
                pass: eps_sum <= self.bound + PASS_SLACK,
            });
            if k + 1 < self.max_k {
                if !self.visit(idx + 1, next, k + 1)? {
                    return Ok(false);
                }
            } else if let Some(&q) = self.pool.get(idx + 1) {
                // Depth limit reached: note when a deeper product would
                // still fit under n.
                if next.checked_mul(q).is_some_and(|v| v <= self.n) {
                    self.truncated = true;
                }
            }
        }
        Ok(true)
    }
}

/// Evaluate the summed perturbation at prime `p` along `schedule` and apply
/// the three-point trend rule:
///
/// * converging-to-zero: the last three magnitudes strictly decrease (or are
///   all exactly zero) and the tail magnitude is at most `tol`;
/// * nonvanishing: the last three values agree within 10% of a common
///   nonzero value;
/// * inconclusive otherwise.
pub fn check_c6(spec: &FamilySpec, p: u64, schedule: &[u64], tol: f64) -> Result<C6Trend> {
    if !is_prime_u64(p) {
        return Err(Error::NotPrime(p));
    }
    if schedule.len() < 3 {
        return Err(Error::Schedule(format!(
            "trend rule needs at least 3 points, got {}",
            schedule.len()
        )));
    }
    for w in schedule.windows(2) {
        if w[0] >= w[1] {
            return Err(Error::Schedule(
                "schedule must be strictly increasing".into(),
            ));
        }
    }
    if schedule[0] < p.max(2) {
        return Err(Error::Schedule(format!(
            "every schedule point must be >= max(p, 2) = {}",
            p.max(2)
        )));
    }
    if !(tol.is_finite() && tol > 0.0) {
        return Err(Error::Domain(format!(
            "trend tolerance must be > 0, got {tol}"
        )));
    }

    let mut values = Vec::with_capacity(schedule.len());
    for &n in schedule {
        let pmf = make_pmf(spec, n)?;
        values.push(pmf.epsilon_multiple_sum(p)?);
    }
    let tail_magnitude = values.last().unwrap().abs();
    let verdict = trend_verdict(&values, tol);
    Ok(C6Trend {
        p,
        schedule: schedule.to_vec(),
        values,
        tail_magnitude,
        tol,
        verdict,
    })
}

fn trend_verdict(values: &[f64], tol: f64) -> TrendVerdict {
    let k = values.len();
    let (a, b, c) = (values[k - 3], values[k - 2], values[k - 1]);
    let tail = c.abs();
    let all_zero = a == 0.0 && b == 0.0 && c == 0.0;
    let strictly_decreasing = a.abs() > b.abs() && b.abs() > c.abs();
    if tail <= tol && (strictly_decreasing || all_zero) {
        return TrendVerdict::ConvergingToZero;
    }
    let mean = (a + b + c) / 3.0;
    if mean != 0.0
        && (a - mean).abs() <= 0.1 * mean.abs()
        && (b - mean).abs() <= 0.1 * mean.abs()
        && (c - mean).abs() <= 0.1 * mean.abs()
    {
        return TrendVerdict::Nonvanishing;
    }
    TrendVerdict::Inconclusive
}

#[derive(Debug, Clone, Serialize)]
pub struct UniformScanPoint {
    pub j: u64,
    pub n: u64,
    pub minimal_c: f64,
    pub minimal_d: f64,
    pub pass_c: bool,
    pub pass_d: bool,
    pub eps_sum_p: f64,
}

/// Grid scan of a family indexed by `j` over truncation points `n`.
#[derive(Debug, Clone, Serialize)]
pub struct UniformScan {
    pub p: u64,
    pub c: f64,
    pub d: f64,
    pub points: Vec<UniformScanPoint>,
    pub sup_minimal_c: f64,
    pub sup_minimal_d: f64,
    /// True when the asserted `(C, D)` pair dominates every grid point:
    /// the every-`(j, n)` uniformity property at grid scale.
    pub dominated: bool,
    /// Per `n`: the smallest schedule label `j` from which on every later
    /// `j` passes at that `n`, if any. This is the empirical index
    /// threshold of the eventually-uniform property.
    pub per_n_threshold: Vec<(u64, Option<u64>)>,
    /// Per `j`: the summed perturbation at `p` for the largest `n` in the
    /// schedule, a finite stand-in for the inner limit of the iterated
    /// double limit.
    pub limit_values: Vec<(u64, f64)>,
    /// True when the magnitudes of `limit_values` strictly decrease in `j`.
    pub limit_trend_decreasing: bool,
    /// Set when the grid cap cut the scan short.
    pub truncated: bool,
}

/// Run [`check_c4`] and [`check_c5`] at every `(j, n)` grid point of a
/// family generator, recording whether the single `(c, d)` pair dominates
/// the grid and how the summed perturbation at `p` trends in `j`.
pub fn uniform_scan(
    family: impl Fn(u64) -> FamilySpec,
    j_schedule: &[u64],
    n_schedule: &[u64],
    p: u64,
    c: f64,
    d: f64,
    max_k: u32,
) -> Result<UniformScan> {
    if j_schedule.is_empty() || n_schedule.is_empty() {
        return Err(Error::Schedule("scan schedules must be nonempty".into()));
    }
    for w in n_schedule.windows(2) {
        if w[0] >= w[1] {
            return Err(Error::Schedule(
                "n schedule must be strictly increasing".into(),
            ));
        }
    }
    if !is_prime_u64(p) {
        return Err(Error::NotPrime(p));
    }
    if n_schedule[0] < p.max(3) {
        return Err(Error::Schedule(format!(
            "every n must be >= max(p, 3) = {}",
            p.max(3)
        )));
    }
    let n_max = *n_schedule.last().unwrap();
    let table = sieve_primes(n_max)?;

    let mut points = Vec::new();
    let mut truncated = false;
    let mut limit_values = Vec::with_capacity(j_schedule.len());
    'outer: for &j in j_schedule {
        let spec = family(j);
        for &n in n_schedule {
            if points.len() >= DEFAULT_GRID_CAP {
                truncated = true;
                break 'outer;
            }
            let pmf = make_pmf(&spec, n)?;
            let c4 = check_c4(&pmf, c, &table)?;
            let c5 = check_c5(&pmf, d, max_k, &table)?;
            let eps_sum_p = pmf.epsilon_multiple_sum(p)?;
            points.push(UniformScanPoint {
                j,
                n,
                minimal_c: c4.minimal_c,
                minimal_d: c5.minimal_d,
                pass_c: c4.all_pass(),
                pass_d: c5.all_pass(),
                eps_sum_p,
            });
            if n == n_max {
                limit_values.push((j, eps_sum_p));
            }
        }
    }

    let sup_minimal_c = points.iter().map(|pt| pt.minimal_c).fold(0.0, f64::max);
    let sup_minimal_d = points.iter().map(|pt| pt.minimal_d).fold(0.0, f64::max);
    let dominated = !truncated && points.iter().all(|pt| pt.pass_c && pt.pass_d);

    let per_n_threshold = n_schedule
        .iter()
        .map(|&n| {
            let passes: Vec<(u64, bool)> = points
                .iter()
                .filter(|pt| pt.n == n)
                .map(|pt| (pt.j, pt.pass_c && pt.pass_d))
                .collect();
            let mut threshold = None;
            for &(j, ok) in passes.iter().rev() {
                if ok {
                    threshold = Some(j);
                } else {
                    break;
                }
            }
            (n, threshold)
        })
        .collect();

    let limit_trend_decreasing =
        limit_values.len() >= 2 && limit_values.windows(2).all(|w| w[0].1.abs() > w[1].1.abs());

    Ok(UniformScan {
        p,
        c,
        d,
        points,
        sup_minimal_c,
        sup_minimal_d,
        dominated,
        per_n_threshold,
        limit_values,
        limit_trend_decreasing,
        truncated,
    })
}
