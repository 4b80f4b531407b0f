//! Family specifications for truncated distributions on `{1, ..., n}` and
//! their flat text form.
//!
//! # Grammar
//!
//! ```text
//! spec    := "uniform" | "harmonic"
//!          | "zipf(s=NUM)" | "logarithmic(s=NUM)" | "geometric(s=NUM)"
//!          | "logzeta(s=NUM,alpha=NUM)"
//!          | "convex[" NUM ":" spec (";" NUM ":" spec)* "]"
//!          | "reflect[" spec "]"
//!          | "zeroed[" INT ("," INT)* "]"
//! ```
//!
//! Whitespace between tokens is ignored. Printing a family yields the
//! canonical form (weights and parameters in shortest round-trip notation,
//! zeroed primes ascending); parsing the canonical form reproduces the value
//! exactly.
//! Ceiling-pushforward distributions are built from a [`DensityGrid`] handle
//! and have no text form.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::primes::is_prime_u64;

/// Convex weights must sum to one within this tolerance.
pub const CONVEX_WEIGHT_TOL: f64 = 1e-12;

/// Upper bound on the zeroed prime set (subset enumeration is exponential).
pub const MAX_ZEROED_PRIMES: usize = 16;

#[derive(Debug, Clone, PartialEq)]
pub enum FamilySpec {
    /// `1/n` everywhere.
    Uniform,
    /// `1/(i * H_n)` with `H_n` the n-th harmonic number.
    Harmonic,
    /// `i^(-s) / sum_j j^(-s)`, `s > 0`.
    Zipf { s: f64 },
    /// `(s^i / i) / sum_j s^j / j`, `0 < s < 1`.
    Logarithmic { s: f64 },
    /// `s^i / sum_j s^j`, `0 < s < 1`.
    Geometric { s: f64 },
    /// `(s^i / i^alpha) / sum_j s^j / j^alpha`, `0 < s <= 1`, `alpha >= 1`.
    /// Truncations are well defined at `s = alpha = 1` (the harmonic case).
    LogZeta { s: f64, alpha: f64 },
    /// Weighted mixture of component families sharing the same `n`.
    Convex(Vec<(f64, FamilySpec)>),
    /// Negated perturbation: `2/n - inner(i)`. Requires the inner family's
    /// perturbations to lie in `[-1/n, 1/n]`.
    Reflect(Box<FamilySpec>),
    /// Uniform mass on the integers not divisible by any listed prime.
    ZeroedAtPrimes(Vec<u64>),
    /// Integer law of the ceiling of a continuous variable; carries only the
    /// truncation point because the density handle is consumed when the
    /// distribution is built.
    Pushforward { n: u64 },
}

impl FamilySpec {
    pub fn name(&self) -> &'static str {
        match self {
            FamilySpec::Uniform => "uniform",
            FamilySpec::Harmonic => "harmonic",
            FamilySpec::Zipf { .. } => "zipf",
            FamilySpec::Logarithmic { .. } => "logarithmic",
            FamilySpec::Geometric { .. } => "geometric",
            FamilySpec::LogZeta { .. } => "logzeta",
            FamilySpec::Convex(_) => "convex",
            FamilySpec::Reflect(_) => "reflect",
            FamilySpec::ZeroedAtPrimes(_) => "zeroed",
            FamilySpec::Pushforward { .. } => "pushforward",
        }
    }

    /// Check every parameter bound. Constructors call this before any
    /// numerical work.
    pub fn validate(&self) -> Result<()> {
        match self {
            FamilySpec::Uniform | FamilySpec::Harmonic | FamilySpec::Pushforward { .. } => Ok(()),
            FamilySpec::Zipf { s } => {
                if s.is_finite() && *s > 0.0 {
                    Ok(())
                } else {
                    Err(Error::Domain(format!("zipf requires s > 0, got s={s}")))
                }
            }
            FamilySpec::Logarithmic { s } => {
                if s.is_finite() && *s > 0.0 && *s < 1.0 {
                    Ok(())
                } else {
                    Err(Error::Domain(format!(
                        "logarithmic requires 0 < s < 1, got s={s}"
                    )))
                }
            }
            FamilySpec::Geometric { s } => {
                if s.is_finite() && *s > 0.0 && *s < 1.0 {
                    Ok(())
                } else {
                    Err(Error::Domain(format!(
                        "geometric requires 0 < s < 1, got s={s}"
                    )))
                }
            }
            FamilySpec::LogZeta { s, alpha } => {
                if !(s.is_finite() && *s > 0.0 && *s <= 1.0) {
                    return Err(Error::Domain(format!(
                        "logzeta requires 0 < s <= 1, got s={s}"
                    )));
                }
                if !(alpha.is_finite() && *alpha >= 1.0) {
                    return Err(Error::Domain(format!(
                        "logzeta requires alpha >= 1, got alpha={alpha}"
                    )));
                }
                Ok(())
            }
            FamilySpec::Convex(parts) => {
                if parts.is_empty() {
                    return Err(Error::Domain("convex combination needs parts".into()));
                }
                let mut total = 0.0;
                for (w, part) in parts {
                    if !w.is_finite() || *w < 0.0 {
                        return Err(Error::Domain(format!(
                            "convex weights must be nonnegative, got {w}"
                        )));
                    }
                    total += w;
                    part.validate()?;
                }
                if (total - 1.0).abs() > CONVEX_WEIGHT_TOL {
                    return Err(Error::Domain(format!(
                        "convex weights must sum to 1 within {CONVEX_WEIGHT_TOL}, got {total}"
                    )));
                }
                Ok(())
            }
            FamilySpec::Reflect(inner) => inner.validate(),
            FamilySpec::ZeroedAtPrimes(ps) => {
                if ps.is_empty() {
                    return Err(Error::Domain("zeroed prime set must be nonempty".into()));
                }
                if ps.len() > MAX_ZEROED_PRIMES {
                    return Err(Error::Domain(format!(
                        "zeroed prime set capped at {MAX_ZEROED_PRIMES} primes, got {}",
                        ps.len()
                    )));
                }
                for window in ps.windows(2) {
                    if window[0] >= window[1] {
                        return Err(Error::Domain(
                            "zeroed primes must be strictly ascending and distinct".into(),
                        ));
                    }
                }
                for &p in ps {
                    if !is_prime_u64(p) {
                        return Err(Error::NotPrime(p));
                    }
                }
                Ok(())
            }
        }
    }
}

impl fmt::Display for FamilySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FamilySpec::Uniform => write!(f, "uniform"),
            FamilySpec::Harmonic => write!(f, "harmonic"),
            FamilySpec::Zipf { s } => write!(f, "zipf(s={s})"),
            FamilySpec::Logarithmic { s } => write!(f, "logarithmic(s={s})"),
            FamilySpec::Geometric { s } => write!(f, "geometric(s={s})"),
            FamilySpec::LogZeta { s, alpha } => write!(f, "logzeta(s={s},alpha={alpha})"),
            FamilySpec::Convex(parts) => {
                write!(f, "convex[")?;
                for (idx, (w, part)) in parts.iter().enumerate() {
                    if idx > 0 {
                        write!(f, "; ")?;
                    }
                    write!(f, "{w}:{part}")?;
                }
                write!(f, "]")
            }
            FamilySpec::Reflect(inner) => write!(f, "reflect[{inner}]"),
            FamilySpec::ZeroedAtPrimes(ps) => {
                write!(f, "zeroed[")?;
                for (idx, p) in ps.iter().enumerate() {
                    if idx > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{p}")?;
                }
                write!(f, "]")
            }
            FamilySpec::Pushforward { n } => write!(f, "pushforward(n={n})"),
        }
    }
}

impl FromStr for FamilySpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut parser = Parser {
            bytes: s.as_bytes(),
            pos: 0,
        };
        let spec = parser.spec()?;
        parser.skip_ws();
        if parser.pos != parser.bytes.len() {
            return Err(parser.err("trailing input after family spec"));
        }
        spec.validate()?;
        Ok(spec)
    }
}

/// Parse the flat text form of a family. Same as `text.parse()`.
pub fn parse_family(text: &str) -> Result<FamilySpec> {
    text.parse()
}

struct Parser<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn err(&self, msg: impl Into<String>) -> Error {
        Error::Parse {
            position: self.pos,
            message: msg.into(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.bytes.get(self.pos).copied()
    }

    fn eat(&mut self, expected: u8) -> Result<()> {
        if self.peek() == Some(expected) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.err(format!("expected '{}'", expected as char)))
        }
    }

    fn ident(&mut self) -> Result<&'a str> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.bytes.len()
            && (self.bytes[self.pos].is_ascii_alphabetic() || self.bytes[self.pos] == b'_')
        {
            self.pos += 1;
        }
        if self.pos == start {
            return Err(self.err("expected a name"));
        }
        Ok(std::str::from_utf8(&self.bytes[start..self.pos]).expect("ascii"))
    }

    fn number(&mut self) -> Result<f64> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.bytes.len()
            && matches!(
                self.bytes[self.pos],
                b'0'..=b'9' | b'.' | b'+' | b'-' | b'e' | b'E'
            )
        {
            self.pos += 1;
        }
        let text = std::str::from_utf8(&self.bytes[start..self.pos]).expect("ascii");
        text.parse::<f64>().map_err(|_| {
            self.pos = start;
            self.err(format!("expected a number, got '{text}'"))
        })
    }

    fn integer(&mut self) -> Result<u64> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        let text = std::str::from_utf8(&self.bytes[start..self.pos]).expect("ascii");
        text.parse::<u64>().map_err(|_| {
            self.pos = start;
            self.err("expected an integer")
        })
    }

    /// `key=value` pairs inside parentheses, in any order.
    fn params(&mut self) -> Result<Vec<(&'a str, f64)>> {
        self.eat(b'(')?;
        let mut out = Vec::new();
        loop {
            let key = self.ident()?;
            self.eat(b'=')?;
            let value = self.number()?;
            out.push((key, value));
            match self.peek() {
                Some(b',') => {
                    self.pos += 1;
                }
                Some(b')') => {
                    self.pos += 1;
                    return Ok(out);
                }
                _ => return Err(self.err("expected ',' or ')' in parameter list")),
            }
        }
    }

    fn take_param(&self, params: &[(&str, f64)], key: &str, family: &str) -> Result<f64> {
        params
            .iter()
            .find(|(k, _)| *k == key)
            .map(|(_, v)| *v)
            .ok_or_else(|| self.err(format!("{family} requires parameter '{key}'")))
    }

    fn check_keys(&self, params: &[(&str, f64)], allowed: &[&str]) -> Result<()> {
        for (k, _) in params {
            if !allowed.contains(k) {
                return Err(self.err(format!("unknown parameter '{k}'")));
            }
        }
        Ok(())
    }

    fn spec(&mut self) -> Result<FamilySpec> {
        let name = self.ident()?;
        match name {
            "uniform" => Ok(FamilySpec::Uniform),
            "harmonic" => Ok(FamilySpec::Harmonic),
            "zipf" | "logarithmic" | "geometric" => {
                let params = self.params()?;
                self.check_keys(&params, &["s"])?;
                let s = self.take_param(&params, "s", name)?;
                Ok(match name {
                    "zipf" => FamilySpec::Zipf { s },
                    "logarithmic" => FamilySpec::Logarithmic { s },
                    _ => FamilySpec::Geometric { s },
                })
            }
            "logzeta" => {
                let params = self.params()?;
                self.check_keys(&params, &["s", "alpha"])?;
                let s = self.take_param(&params, "s", name)?;
                let alpha = self.take_param(&params, "alpha", name)?;
                Ok(FamilySpec::LogZeta { s, alpha })
            }
            "convex" => {
                self.eat(b'[')?;
                let mut parts = Vec::new();
                loop {
                    let w = self.number()?;
                    self.eat(b':')?;
                    let part = self.spec()?;
                    parts.push((w, part));
                    match self.peek() {
                        Some(b';') => {
                            self.pos += 1;
                        }
                        Some(b']') => {
                            self.pos += 1;
                            return Ok(FamilySpec::Convex(parts));
                        }
                        _ => return Err(self.err("expected ';' or ']' in convex parts")),
                    }
                }
            }
            "reflect" => {
                self.eat(b'[')?;
                let inner = self.spec()?;
                self.eat(b']')?;
                Ok(FamilySpec::Reflect(Box::new(inner)))
            }
            "zeroed" => {
                self.eat(b'[')?;
                let mut primes = Vec::new();
                loop {
                    primes.push(self.integer()?);
                    match self.peek() {
                        Some(b',') => {
                            self.pos += 1;
                        }
                        Some(b']') => {
                            self.pos += 1;
                            primes.sort_unstable();
                            return Ok(FamilySpec::ZeroedAtPrimes(primes));
                        }
                        _ => return Err(self.err("expected ',' or ']' in prime list")),
                    }
                }
            }
            other => Err(self.err(format!("unknown family '{other}'"))),
        }
    }
}

/// Sampled nonnegative density on `(0, n]`, the input handle for
/// ceiling-pushforward distributions.
///
/// Values are given on the uniform grid `t = j / points_per_unit` for
/// `j = 0..=n*points_per_unit`, at least 16 points per unit interval and an
/// even count per interval so composite Simpson applies.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityGrid {
    n: u64,
    points_per_unit: u32,
    values: Vec<f64>,
}

impl DensityGrid {
    pub fn new(n: u64, points_per_unit: u32, values: Vec<f64>) -> Result<Self> {
        if n < 2 {
            return Err(Error::Domain(format!(
                "density grid needs n >= 2, got n={n}"
            )));
        }
        if points_per_unit < 16 || !points_per_unit.is_multiple_of(2) {
            return Err(Error::Domain(format!(
                "density grid needs an even points_per_unit >= 16, got {points_per_unit}"
            )));
        }
        let expected = n * u64::from(points_per_unit) + 1;
        if expected * 8 > crate::primes::MEMORY_BUDGET_BYTES {
            return Err(Error::Resource {
                what: "density grid",
                required_bytes: expected * 8,
                budget_bytes: crate::primes::MEMORY_BUDGET_BYTES,
            });
        }
        if values.len() as u64 != expected {
            return Err(Error::Mismatch(format!(
                "density grid expects {expected} samples for n={n}, got {}",
                values.len()
            )));
        }
        for (j, &v) in values.iter().enumerate() {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::Domain(format!(
                    "density must be finite and nonnegative, got {v} at sample {j}"
                )));
            }
        }
        Ok(DensityGrid {
            n,
            points_per_unit,
            values,
        })
    }

    /// Sample `f` on the grid; `f` is evaluated at `t = 0` as well (its value
    /// there only enters the first Simpson panel).
    pub fn from_fn(n: u64, points_per_unit: u32, f: impl Fn(f64) -> f64) -> Result<Self> {
        let count = n
            .checked_mul(u64::from(points_per_unit))
            .and_then(|c| c.checked_add(1))
            .ok_or_else(|| Error::Domain("density grid too large".into()))?;
        let h = 1.0 / f64::from(points_per_unit);
        let values = (0..count).map(|j| f(j as f64 * h)).collect();
        Self::new(n, points_per_unit, values)
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn points_per_unit(&self) -> u32 {
        self.points_per_unit
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Composite Simpson integral of the density over each unit interval
    /// `(i-1, i]`, in order `i = 1..=n`.
    pub(crate) fn interval_masses(&self) -> Vec<f64> {
        let k = self.points_per_unit as usize;
        let h = 1.0 / f64::from(self.points_per_unit);
        let mut masses = Vec::with_capacity(self.n as usize);
        for i in 0..self.n as usize {
            let base = i * k;
            let window = &self.values[base..=base + k];
            let mut acc = window[0] + window[k];
            for (off, &v) in window.iter().enumerate().take(k).skip(1) {
                acc += if off % 2 == 1 { 4.0 * v } else { 2.0 * v };
            }
            masses.push(acc * h / 3.0);
        }
        masses
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_simple_families() {
        assert_eq!(parse_family("uniform").unwrap(), FamilySpec::Uniform);
        assert_eq!(parse_family(" harmonic ").unwrap(), FamilySpec::Harmonic);
        assert_eq!(
            parse_family("zipf(s=1.01)").unwrap(),
            FamilySpec::Zipf { s: 1.01 }
        );
        assert_eq!(
            parse_family("logzeta(alpha=1.1, s=0.9)").unwrap(),
            FamilySpec::LogZeta { s: 0.9, alpha: 1.1 }
        );
    }

    #[test]
    fn parse_structured_families() {
        let spec = parse_family("convex[0.3:harmonic; 0.7:uniform]").unwrap();
        assert_eq!(
            spec,
            FamilySpec::Convex(vec![
                (0.3, FamilySpec::Harmonic),
                (0.7, FamilySpec::Uniform)
            ])
        );
        assert_eq!(
            parse_family("reflect[geometric(s=0.999)]").unwrap(),
            FamilySpec::Reflect(Box::new(FamilySpec::Geometric { s: 0.999 }))
        );
        assert_eq!(
            parse_family("zeroed[3,2]").unwrap(),
            FamilySpec::ZeroedAtPrimes(vec![2, 3])
        );
    }

    #[test]
    fn canonical_round_trip() {
        let specs = [
            "uniform",
            "harmonic",
            "zipf(s=1.5)",
            "logarithmic(s=0.5)",
            "geometric(s=0.999)",
            "logzeta(s=0.9,alpha=1.1)",
            "convex[0.3:harmonic; 0.7:uniform]",
            "convex[0.5:zipf(s=2); 0.5:reflect[geometric(s=0.99)]]",
            "zeroed[2,3,5]",
        ];
        for text in specs {
            let spec = parse_family(text).unwrap();
            assert_eq!(spec.to_string(), text, "canonical print of {text}");
            assert_eq!(parse_family(&spec.to_string()).unwrap(), spec);
        }
    }

    #[test]
    fn parse_errors_carry_position() {
        match parse_family("zipf(s=)") {
            Err(Error::Parse { position, .. }) => assert_eq!(position, 7),
            other => panic!("expected parse error, got {other:?}"),
        }
        assert!(parse_family("wat").is_err());
        assert!(parse_family("zipf(t=1.5)").is_err());
        assert!(parse_family("uniform junk").is_err());
        assert!(parse_family("convex[0.3:harmonic 0.7:uniform]").is_err());
    }

    #[test]
    fn validation_bounds() {
        assert!(parse_family("zipf(s=0)").is_err());
        assert!(parse_family("logarithmic(s=1)").is_err());
        assert!(parse_family("geometric(s=1.2)").is_err());
        assert!(parse_family("logzeta(s=1.2,alpha=1)").is_err());
        assert!(parse_family("logzeta(s=1,alpha=0.9)").is_err());
        // The harmonic corner of the two-parameter family is allowed for
        // truncations.
        assert!(parse_family("logzeta(s=1,alpha=1)").is_ok());
        assert!(parse_family("convex[0.3:uniform; 0.3:harmonic]").is_err());
        assert!(matches!(parse_family("zeroed[4]"), Err(Error::NotPrime(4))));
        assert!(parse_family("zeroed[2,2]").is_err());
    }

    #[test]
    fn density_grid_validation() {
        assert!(DensityGrid::from_fn(10, 16, |_| 1.0).is_ok());
        assert!(DensityGrid::from_fn(10, 15, |_| 1.0).is_err());
        assert!(DensityGrid::from_fn(10, 16, |t| t - 5.0).is_err());
        assert!(DensityGrid::new(10, 16, vec![1.0; 3]).is_err());
        assert!(DensityGrid::from_fn(1, 16, |_| 1.0).is_err());
    }

    #[test]
    fn simpson_is_exact_for_quadratics() {
        let grid = DensityGrid::from_fn(4, 16, |t| t * t).unwrap();
        let masses = grid.interval_masses();
        for (i, &m) in masses.iter().enumerate() {
            let a = i as f64;
            let b = a + 1.0;
            let exact = (b * b * b - a * a * a) / 3.0;
            assert!((m - exact).abs() < 1e-13, "interval {i}: {m} vs {exact}");
        }
    }
}
