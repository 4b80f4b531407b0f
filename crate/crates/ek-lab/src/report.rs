//! Deterministic text output: CSV emitters for the report types, a JSON
//! summary envelope, and a plain-text gnuplot script emitter.
//!
//! CSV uses `.` decimals and no locale; floats carry 17 significant digits
//! so a reader recovers the exact bit pattern.

use std::io::Write;

use crate::constraints::{C4Report, C5Report, C6Trend, UniformScan};
use crate::error::Result;
use crate::limits::{DependenceGap, LzStudy, SequenceStudy};
use crate::moments::{MomentTable, StandardizedStudy};
use crate::normal::normal_cdf;
use crate::pmf::TruncatedPmf;

/// Schema tag stamped on every JSON summary document.
pub const JSON_SCHEMA: &str = "ek-lab/1";

/// Round-trip float formatting: 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Shared column layout of the two constraint checks.
pub const CHECK_CSV_HEADER: &str = "n,d_or_p,k,eps_sum,bound,pass";

pub fn write_c4_csv<W: Write>(report: &C4Report, out: &mut W) -> Result<()> {
    writeln!(out, "{CHECK_CSV_HEADER}")?;
    for e in &report.entries {
        writeln!(
            out,
            "{},{},1,{},{},{}",
            report.n,
            e.p,
            fmt_f64(e.eps_sum),
            fmt_f64(e.bound),
            e.pass
        )?;
    }
    Ok(())
}

pub fn write_c5_csv<W: Write>(report: &C5Report, out: &mut W) -> Result<()> {
    writeln!(out, "{CHECK_CSV_HEADER}")?;
    for e in &report.entries {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            report.n,
            e.d,
            e.k,
            fmt_f64(e.eps_sum),
            fmt_f64(e.bound),
            e.pass
        )?;
    }
    Ok(())
}

pub fn write_c6_csv<W: Write>(trend: &C6Trend, out: &mut W) -> Result<()> {
    writeln!(out, "n,p,eps_sum")?;
    for (n, v) in trend.schedule.iter().zip(&trend.values) {
        writeln!(out, "{},{},{}", n, trend.p, fmt_f64(*v))?;
    }
    Ok(())
}

pub fn write_moments_csv<W: Write>(tables: &[MomentTable], out: &mut W) -> Result<()> {
    writeln!(out, "n,cutoff,r,model_moment,weighted_moment,gap")?;
    for t in tables {
        for (idx, ((m, w), g)) in t.model.iter().zip(&t.weighted).zip(&t.gaps).enumerate() {
            writeln!(
                out,
                "{},{},{},{},{},{}",
                t.n,
                t.cutoff,
                idx + 1,
                fmt_f64(*m),
                fmt_f64(*w),
                fmt_f64(*g)
            )?;
        }
    }
    Ok(())
}

pub fn write_cdf_csv<W: Write>(study: &StandardizedStudy, out: &mut W) -> Result<()> {
    writeln!(out, "x,empirical_cdf,normal_cdf,diff")?;
    for j in &study.jumps {
        let phi = normal_cdf(j.x);
        writeln!(
            out,
            "{},{},{},{}",
            fmt_f64(j.x),
            fmt_f64(j.cumulative),
            fmt_f64(phi),
            fmt_f64(j.cumulative - phi)
        )?;
    }
    Ok(())
}

pub fn write_sequence_csv<W: Write>(study: &SequenceStudy, out: &mut W) -> Result<()> {
    writeln!(
        out,
        "j,s,alpha,mu,n_j,capped,minimal_C,minimal_D,eps_sum_p,ks,mean_ratio"
    )?;
    for r in &study.rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            r.j,
            fmt_f64(r.s),
            fmt_f64(r.alpha),
            fmt_f64(r.mu),
            r.n_j,
            r.capped,
            fmt_f64(r.minimal_c),
            fmt_f64(r.minimal_d),
            fmt_f64(r.eps_sum_p),
            fmt_f64(r.ks),
            fmt_f64(r.mean_ratio)
        )?;
    }
    Ok(())
}

pub fn write_lz_csv<W: Write>(study: &LzStudy, out: &mut W) -> Result<()> {
    writeln!(out, "s,alpha,eps_sum_p,alpha_bound,within_bound,ks")?;
    for p in &study.points {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            fmt_f64(p.s),
            fmt_f64(p.alpha),
            fmt_f64(p.eps_sum_p),
            fmt_f64(p.alpha_bound),
            p.within_bound_chain,
            fmt_f64(p.ks)
        )?;
    }
    Ok(())
}

pub fn write_dependence_csv<W: Write>(gaps: &[DependenceGap], out: &mut W) -> Result<()> {
    writeln!(out, "s,p,q,marginal_p,marginal_q,joint,gap")?;
    for g in gaps {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            fmt_f64(g.s),
            g.p,
            g.q,
            fmt_f64(g.marginal_p),
            fmt_f64(g.marginal_q),
            fmt_f64(g.joint),
            fmt_f64(g.gap)
        )?;
    }
    Ok(())
}

pub fn write_scan_csv<W: Write>(scan: &UniformScan, out: &mut W) -> Result<()> {
    writeln!(out, "j,n,minimal_C,minimal_D,pass_C,pass_D,eps_sum_p")?;
    for p in &scan.points {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            p.j,
            p.n,
            fmt_f64(p.minimal_c),
            fmt_f64(p.minimal_d),
            p.pass_c,
            p.pass_d,
            fmt_f64(p.eps_sum_p)
        )?;
    }
    Ok(())
}

pub fn write_pmf_csv<W: Write>(pmf: &TruncatedPmf, out: &mut W) -> Result<()> {
    writeln!(out, "i,pmf,epsilon")?;
    for i in 1..=pmf.n() {
        writeln!(
            out,
            "{},{},{}",
            i,
            fmt_f64(pmf.pmf(i)?),
            fmt_f64(pmf.epsilon(i)?)
        )?;
    }
    Ok(())
}

/// Gnuplot script plotting an `x,empirical_cdf,normal_cdf,diff` CSV. Plain
/// text; any plotting tool can consume the CSV directly instead.
pub fn write_gnuplot_script<W: Write>(csv_name: &str, title: &str, out: &mut W) -> Result<()> {
    writeln!(out, "set datafile separator ','")?;
    writeln!(out, "set key left top")?;
    writeln!(out, "set title '{title}'")?;
    writeln!(out, "set xlabel 'standardized value'")?;
    writeln!(out, "set ylabel 'CDF'")?;
    writeln!(
        out,
        "plot '{csv_name}' every ::1 using 1:2 with steps title 'empirical', \\"
    )?;
    writeln!(
        out,
        "     '{csv_name}' every ::1 using 1:3 with lines title 'normal'"
    )?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constraints::check_c4;
    use crate::family::FamilySpec;
    use crate::pmf::make_pmf;
    use crate::primes::sieve_primes;

    #[test]
    fn float_format_round_trips() {
        for x in [0.5, 1.0 / 3.0, -1.2345678901234567e-9, 1e300] {
            let s = fmt_f64(x);
            assert_eq!(s.parse::<f64>().unwrap(), x, "{s}");
        }
    }

    #[test]
    fn csv_output_is_deterministic() {
        let table = sieve_primes(500).unwrap();
        let pmf = make_pmf(&FamilySpec::Harmonic, 500).unwrap();
        let report = check_c4(&pmf, 1.0, &table).unwrap();
        let mut a = Vec::new();
        let mut b = Vec::new();
        write_c4_csv(&report, &mut a).unwrap();
        write_c4_csv(&report, &mut b).unwrap();
        assert_eq!(a, b);
        let text = String::from_utf8(a).unwrap();
        assert!(text.starts_with("n,d_or_p,k,eps_sum,bound,pass\n"));
        assert_eq!(text.lines().count(), report.entries.len() + 1);
    }
}
