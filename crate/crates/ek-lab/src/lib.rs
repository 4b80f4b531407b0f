//! Numerical laboratory for Erdős–Kac-type limit behaviour of the
//! distinct-prime-factor count under perturbed uniform distributions.
//!
//! A distribution on `{1, ..., n}` is written as `1/n + epsilon(i)`. Three
//! constraints on the perturbations carve out the class of laws whose
//! factor-count statistic is asymptotically normal with mean and variance
//! `log log n`: a large-prime bound (C4), a bound over squarefree products
//! of small primes (C5), and a per-prime vanishing limit (C6). This crate
//! provides:
//!
//! * sieve kernels for prime tables and distinct-factor counts ([`primes`]);
//! * the distribution families expressed through their perturbations
//!   ([`family`], [`pmf`]);
//! * exact constraint checks with minimal-constant reports ([`constraints`]);
//! * the indicator-model moment machinery, standardized CDFs and
//!   Kolmogorov–Smirnov distances ([`moments`]);
//! * sequence-limit studies: prime zeta means, parameter schedules,
//!   dependence gaps and the zeroed-primes negative control ([`limits`]);
//! * a binary table cache and deterministic CSV/JSON emitters ([`cache`],
//!   [`report`]).

pub mod cache;
pub mod constraints;
pub mod error;
pub mod family;
pub mod kahan;
pub mod limits;
pub mod moments;
pub mod normal;
pub mod pmf;
pub mod primes;
pub mod report;

pub use error::{Error, Result};
pub use family::{parse_family, DensityGrid, FamilySpec};
pub use kahan::KahanSum;
pub use normal::normal_cdf;
pub use pmf::{
    ceiling_pushforward, convex_combine, make_pmf, reflect, zeroed_at_primes, TruncatedPmf,
};
pub use primes::{
    alpha_n, build_omega_table, prime_reciprocal_sums, sieve_primes, OmegaTable, PrimeSums,
    PrimeTable,
};
