//! `ek`, the command-line driver for the ek-lab studies.
//!
//! Every run executes one study, writes its CSV/JSON outputs into the output
//! directory, and finishes with a `manifest.json` recording the parsed
//! configuration, artifact version, wall time, digests of every sieve cache
//! file touched, and the list of output files.
//!
//! Exit status: 0 on success, 2 when a user-asserted constraint check
//! failed (or the negative control confirmed a non-vanishing trend), 1 on
//! operational errors.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use ek_lab::cache::{cache_file_name, file_sha256_hex, read_omega_cache, write_omega_cache};
use ek_lab::constraints::{check_c4, check_c5_with_cap, check_c6, TrendVerdict};
use ek_lab::limits::{log_dependence, lz_limit_study, zeta_sequence_study};
use ek_lab::moments::{mean_ratio, moment_gap_study, standardized_cdf, standardized_cdf_centered};
use ek_lab::primes::{alpha_n, prime_reciprocal_sums, OmegaTable};
use ek_lab::report::{
    fmt_f64, write_c4_csv, write_c5_csv, write_c6_csv, write_cdf_csv, write_dependence_csv,
    write_gnuplot_script, write_lz_csv, write_moments_csv, write_pmf_csv, write_sequence_csv,
    JSON_SCHEMA,
};
use ek_lab::{build_omega_table, make_pmf, parse_family, sieve_primes};

#[derive(Parser, Debug, Serialize, Deserialize)]
#[command(
    name = "ek",
    version,
    about = "Factor-count statistics under perturbed uniform laws"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Worker thread cap (default: available parallelism).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Directory holding binary sieve caches.
    #[arg(long, global = true, env = "EK_CACHE_DIR", default_value = "ek-cache")]
    cache_dir: PathBuf,

    /// Directory receiving CSV/JSON outputs and the run manifest.
    #[arg(long, global = true, default_value = "ek-out")]
    out_dir: PathBuf,
}

#[derive(Subcommand, Debug, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum Command {
    /// Build (or verify) a cached factor-count table.
    Sieve(SieveArgs),
    /// Tabulate a distribution: one CSV row per integer.
    Pmf(PmfArgs),
    /// Run the large-prime and small-prime-product constraint checks.
    Check(CheckArgs),
    /// Model-vs-weighted moment gaps along an n schedule.
    Moments(MomentsArgs),
    /// Standardized factor-count CDF and its KS distance to the normal law.
    Cdf(CdfArgs),
    /// Sequence-limit studies: zeta schedules, two-parameter paths,
    /// dependence gaps.
    Limits(LimitsArgs),
    /// Negative control: zero a prime's multiples and watch the trend.
    Control(ControlArgs),
}

#[derive(clap::Args, Debug, Serialize, Deserialize)]
struct SieveArgs {
    #[arg(long)]
    limit: u64,
    /// Count only primes up to this bound (default: unrestricted).
    #[arg(long)]
    cutoff: Option<u64>,
}

#[derive(clap::Args, Debug, Serialize, Deserialize)]
struct PmfArgs {
    /// Family text, e.g. `harmonic` or `convex[0.3:harmonic; 0.7:uniform]`.
    #[arg(long)]
    family: String,
    #[arg(long)]
    n: u64,
}

#[derive(clap::Args, Debug, Serialize, Deserialize)]
struct CheckArgs {
    #[arg(long)]
    family: String,
    #[arg(long)]
    n: u64,
    /// Assert the large-prime constant; failures then exit with status 2.
    #[arg(long = "C")]
    c: Option<f64>,
    /// Assert the product constant; failures then exit with status 2.
    #[arg(long = "D")]
    d: Option<f64>,
    /// Deepest product of distinct primes to enumerate.
    #[arg(long, default_value_t = 4)]
    max_k: u32,
    /// Entry budget for the product enumeration.
    #[arg(long, default_value_t = 1_000_000)]
    entry_cap: usize,
}

#[derive(clap::Args, Debug, Serialize, Deserialize)]
struct MomentsArgs {
    #[arg(long)]
    family: String,
    /// Comma-separated truncation points, ascending.
    #[arg(long, value_delimiter = ',')]
    schedule: Vec<u64>,
    #[arg(long, default_value_t = 3)]
    r_max: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum Centering {
    /// Center at log log n, scale by its square root.
    Loglog,
    /// Center at the indicator-model mean, scale by the model deviation.
    Model,
}

#[derive(clap::Args, Debug, Serialize, Deserialize)]
struct CdfArgs {
    #[arg(long)]
    family: String,
    #[arg(long)]
    n: u64,
    #[arg(long, value_enum, default_value_t = Centering::Loglog)]
    centering: Centering,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum StudyKind {
    /// Power-law exponents s_j = 1 + 1/a_j along an a schedule.
    Zeta,
    /// A path of (s, alpha) points for the two-parameter family.
    Lz,
    /// Divisibility dependence gaps of the logarithmic family.
    Dependence,
}

#[derive(clap::Args, Debug, Serialize, Deserialize)]
struct LimitsArgs {
    #[arg(long, value_enum)]
    study: StudyKind,
    /// zeta: comma-separated increasing a values.
    #[arg(long, value_delimiter = ',')]
    a_schedule: Vec<f64>,
    /// zeta: cap on the derived truncation points.
    #[arg(long, default_value_t = 10_000_000)]
    n_cap: u64,
    /// Reference prime for perturbation sums.
    #[arg(long, default_value_t = 2)]
    p: u64,
    /// zeta: product-check depth.
    #[arg(long, default_value_t = 4)]
    max_k: u32,
    /// lz: comma-separated `s:alpha` points, e.g. `0.9:1.1,0.99:1.01`.
    #[arg(long)]
    path: Option<String>,
    /// lz: truncation point.
    #[arg(long)]
    n: Option<u64>,
    /// dependence: comma-separated s values in (0, 1).
    #[arg(long, value_delimiter = ',')]
    s_schedule: Vec<f64>,
    /// dependence: the second prime.
    #[arg(long, default_value_t = 3)]
    q: u64,
}

#[derive(clap::Args, Debug, Serialize, Deserialize)]
struct ControlArgs {
    #[arg(long, default_value_t = 2)]
    p: u64,
    /// Comma-separated truncation points, ascending, at least three.
    #[arg(long, value_delimiter = ',')]
    schedule: Vec<u64>,
    /// Tail tolerance of the trend verdict.
    #[arg(long, default_value_t = 1e-2)]
    tol: f64,
}

#[derive(Serialize)]
struct CacheDigest {
    path: String,
    sha256: String,
}

#[derive(Serialize)]
struct RunManifest<'a> {
    schema: &'static str,
    artifact_version: &'static str,
    command: &'a str,
    config: serde_json::Value,
    wall_time_seconds: f64,
    cache_digests: &'a [CacheDigest],
    outputs: &'a [String],
}

/// Output-directory bookkeeping shared by all commands.
struct Run {
    out_dir: PathBuf,
    cache_dir: PathBuf,
    outputs: Vec<String>,
    digests: Vec<CacheDigest>,
    started: Instant,
}

impl Run {
    fn new(cli: &Cli) -> anyhow::Result<Self> {
        fs::create_dir_all(&cli.out_dir)
            .with_context(|| format!("creating output directory {}", cli.out_dir.display()))?;
        Ok(Run {
            out_dir: cli.out_dir.clone(),
            cache_dir: cli.cache_dir.clone(),
            outputs: Vec::new(),
            digests: Vec::new(),
            started: Instant::now(),
        })
    }

    fn writer(&mut self, name: &str) -> anyhow::Result<BufWriter<File>> {
        let path = self.out_dir.join(name);
        let file = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
        self.outputs.push(name.to_string());
        Ok(BufWriter::new(file))
    }

    fn write_json(&mut self, name: &str, value: &impl Serialize) -> anyhow::Result<()> {
        let mut out = self.writer(name)?;
        serde_json::to_writer_pretty(&mut out, value)?;
        out.write_all(b"\n")?;
        Ok(())
    }

    /// Load a cached table, verifying its digest, or build and cache it.
    fn omega(&mut self, limit: u64, cutoff: Option<u64>) -> anyhow::Result<OmegaTable> {
        let path = self.cache_dir.join(cache_file_name(limit, cutoff));
        if path.exists() {
            let table = read_omega_cache(&path)
                .with_context(|| format!("loading cache {}", path.display()))?;
            if table.limit() != limit || table.cutoff() != cutoff {
                bail!(
                    "cache {} holds limit={} cutoff={:?}, expected limit={limit} cutoff={cutoff:?}",
                    path.display(),
                    table.limit(),
                    table.cutoff()
                );
            }
            self.record_digest(&path)?;
            return Ok(table);
        }
        let table = build_omega_table(limit, cutoff)?;
        let sha256 = write_omega_cache(&path, &table)?;
        self.digests.push(CacheDigest {
            path: path.display().to_string(),
            sha256,
        });
        Ok(table)
    }

    fn record_digest(&mut self, path: &Path) -> anyhow::Result<()> {
        self.digests.push(CacheDigest {
            path: path.display().to_string(),
            sha256: file_sha256_hex(path)?,
        });
        Ok(())
    }

    fn finish(mut self, command: &str, config: serde_json::Value) -> anyhow::Result<()> {
        let manifest = RunManifest {
            schema: JSON_SCHEMA,
            artifact_version: env!("CARGO_PKG_VERSION"),
            command,
            config,
            wall_time_seconds: self.started.elapsed().as_secs_f64(),
            cache_digests: &self.digests,
            outputs: &self.outputs,
        };
        let path = self.out_dir.join("manifest.json");
        let file = File::create(&path)?;
        let mut out = BufWriter::new(file);
        serde_json::to_writer_pretty(&mut out, &manifest)?;
        out.write_all(b"\n")?;
        self.outputs.push("manifest.json".to_string());
        Ok(())
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0u8,
                _ => 1u8,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<u8> {
    if let Some(threads) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .context("configuring the worker pool")?;
    }
    let config = serde_json::to_value(&cli)?;
    let mut run = Run::new(&cli)?;
    let (name, code) = match &cli.command {
        Command::Sieve(args) => ("sieve", cmd_sieve(&mut run, args)?),
        Command::Pmf(args) => ("pmf", cmd_pmf(&mut run, args)?),
        Command::Check(args) => ("check", cmd_check(&mut run, args)?),
        Command::Moments(args) => ("moments", cmd_moments(&mut run, args)?),
        Command::Cdf(args) => ("cdf", cmd_cdf(&mut run, args)?),
        Command::Limits(args) => ("limits", cmd_limits(&mut run, args)?),
        Command::Control(args) => ("control", cmd_control(&mut run, args)?),
    };
    run.finish(name, config)?;
    Ok(code)
}

fn cmd_sieve(run: &mut Run, args: &SieveArgs) -> anyhow::Result<u8> {
    let table = run.omega(args.limit, args.cutoff)?;
    let digest = run
        .digests
        .last()
        .map(|d| d.sha256.clone())
        .unwrap_or_default();
    run.write_json(
        "summary.json",
        &serde_json::json!({
            "schema": JSON_SCHEMA,
            "command": "sieve",
            "limit": table.limit(),
            "cutoff": table.cutoff(),
            "sha256": digest,
        }),
    )?;
    println!(
        "sieve: limit={} cutoff={:?} cached under {}",
        table.limit(),
        table.cutoff(),
        run.cache_dir.display()
    );
    Ok(0)
}

fn cmd_pmf(run: &mut Run, args: &PmfArgs) -> anyhow::Result<u8> {
    let spec = parse_family(&args.family)?;
    let pmf = make_pmf(&spec, args.n)?;
    let mut csv = run.writer("pmf.csv")?;
    write_pmf_csv(&pmf, &mut csv)?;
    csv.flush()?;
    run.write_json(
        "summary.json",
        &serde_json::json!({
            "schema": JSON_SCHEMA,
            "command": "pmf",
            "family": spec.to_string(),
            "n": args.n,
            "normalizer": pmf.normalizer(),
            "total_mass": pmf.total_mass(),
        }),
    )?;
    println!(
        "pmf: family={spec} n={} total_mass={}",
        args.n,
        fmt_f64(pmf.total_mass())
    );
    Ok(0)
}

fn cmd_check(run: &mut Run, args: &CheckArgs) -> anyhow::Result<u8> {
    let spec = parse_family(&args.family)?;
    let pmf = make_pmf(&spec, args.n)?;
    let primes = sieve_primes(args.n)?;
    let c4 = check_c4(&pmf, args.c.unwrap_or(f64::INFINITY), &primes)?;
    let c5 = check_c5_with_cap(
        &pmf,
        args.d.unwrap_or(f64::INFINITY),
        args.max_k,
        &primes,
        args.entry_cap,
    )?;

    let mut csv = run.writer("check_c4.csv")?;
    write_c4_csv(&c4, &mut csv)?;
    csv.flush()?;
    let mut csv = run.writer("check_c5.csv")?;
    write_c5_csv(&c5, &mut csv)?;
    csv.flush()?;

    run.write_json(
        "summary.json",
        &serde_json::json!({
            "schema": JSON_SCHEMA,
            "command": "check",
            "family": spec.to_string(),
            "n": args.n,
            "alpha": c4.alpha,
            "asserted_c": args.c,
            "asserted_d": args.d,
            "minimal_c": c4.minimal_c,
            "minimal_d": c5.minimal_d,
            "c4_entries": c4.entries.len(),
            "c4_failures": c4.failures(),
            "c5_entries": c5.entries.len(),
            "c5_failures": c5.failures(),
            "c5_truncated": c5.truncated,
            "max_k": args.max_k,
        }),
    )?;

    let asserted_failure =
        (args.c.is_some() && !c4.all_pass()) || (args.d.is_some() && !c5.all_pass());
    println!(
        "check: family={spec} n={} minimal_C={} minimal_D={} failures={}+{}",
        args.n,
        fmt_f64(c4.minimal_c),
        fmt_f64(c5.minimal_d),
        c4.failures(),
        c5.failures()
    );
    Ok(if asserted_failure { 2 } else { 0 })
}

fn cmd_moments(run: &mut Run, args: &MomentsArgs) -> anyhow::Result<u8> {
    let spec = parse_family(&args.family)?;
    let tables = moment_gap_study(&spec, &args.schedule, args.r_max)?;
    let mut csv = run.writer("moments.csv")?;
    write_moments_csv(&tables, &mut csv)?;
    csv.flush()?;
    run.write_json(
        "summary.json",
        &serde_json::json!({
            "schema": JSON_SCHEMA,
            "command": "moments",
            "family": spec.to_string(),
            "schedule": args.schedule,
            "r_max": args.r_max,
            "tables": tables,
        }),
    )?;
    println!("moments: family={spec} points={}", tables.len());
    Ok(0)
}

fn cmd_cdf(run: &mut Run, args: &CdfArgs) -> anyhow::Result<u8> {
    let spec = parse_family(&args.family)?;
    let pmf = make_pmf(&spec, args.n)?;
    let (study, center_label, ratio) = match args.centering {
        Centering::Loglog => {
            let omega = run.omega(args.n, None)?;
            let study = standardized_cdf(&pmf, &omega)?;
            let ratio = mean_ratio(&pmf, &omega)?;
            (study, "loglog", Some(ratio))
        }
        Centering::Model => {
            let alpha = alpha_n(args.n)?;
            let cutoff = (alpha.floor() as u64).clamp(1, args.n);
            let omega = run.omega(args.n, Some(cutoff))?;
            let sums = prime_reciprocal_sums(cutoff);
            let study = standardized_cdf_centered(&pmf, &omega, sums.b, sums.a2.sqrt())?;
            (study, "model", None)
        }
    };

    let mut csv = run.writer("cdf.csv")?;
    write_cdf_csv(&study, &mut csv)?;
    csv.flush()?;
    let mut gp = run.writer("cdf.gp")?;
    write_gnuplot_script("cdf.csv", &format!("{spec} at n={}", args.n), &mut gp)?;
    gp.flush()?;

    run.write_json(
        "summary.json",
        &serde_json::json!({
            "schema": JSON_SCHEMA,
            "command": "cdf",
            "family": spec.to_string(),
            "n": args.n,
            "centering": center_label,
            "center": study.center,
            "scale": study.scale,
            "ks": study.ks,
            "jump_points": study.jumps.len(),
            "mean_ratio": ratio,
        }),
    )?;
    println!(
        "cdf: family={spec} n={} ks={} ({} jumps)",
        args.n,
        fmt_f64(study.ks),
        study.jumps.len()
    );
    Ok(0)
}

fn parse_lz_path(text: &str) -> anyhow::Result<Vec<(f64, f64)>> {
    let mut out = Vec::new();
    for part in text.split(',') {
        let (s, alpha) = part
            .split_once(':')
            .with_context(|| format!("path point '{part}' is not of the form s:alpha"))?;
        out.push((
            s.trim()
                .parse::<f64>()
                .with_context(|| format!("bad s in '{part}'"))?,
            alpha
                .trim()
                .parse::<f64>()
                .with_context(|| format!("bad alpha in '{part}'"))?,
        ));
    }
    Ok(out)
}

fn cmd_limits(run: &mut Run, args: &LimitsArgs) -> anyhow::Result<u8> {
    match args.study {
        StudyKind::Zeta => {
            if args.a_schedule.is_empty() {
                bail!("--study zeta requires --a-schedule");
            }
            let study = zeta_sequence_study(&args.a_schedule, args.n_cap, args.p, args.max_k)?;
            let mut csv = run.writer("limits_zeta.csv")?;
            write_sequence_csv(&study, &mut csv)?;
            csv.flush()?;
            run.write_json(
                "summary.json",
                &serde_json::json!({
                    "schema": JSON_SCHEMA,
                    "command": "limits",
                    "study": "zeta",
                    "p": study.p,
                    "n_cap": study.n_cap,
                    "mu_strictly_increasing": study.mu_strictly_increasing,
                    "rows": study.rows,
                }),
            )?;
            println!(
                "limits zeta: {} rows, mu strictly increasing: {}",
                study.rows.len(),
                study.mu_strictly_increasing
            );
        }
        StudyKind::Lz => {
            let path_text = args
                .path
                .as_deref()
                .context("--study lz requires --path s:alpha,...")?;
            let n = args.n.context("--study lz requires --n")?;
            let path = parse_lz_path(path_text)?;
            let study = lz_limit_study(&path, n, args.p)?;
            let mut csv = run.writer("limits_lz.csv")?;
            write_lz_csv(&study, &mut csv)?;
            csv.flush()?;
            run.write_json(
                "summary.json",
                &serde_json::json!({
                    "schema": JSON_SCHEMA,
                    "command": "limits",
                    "study": "lz",
                    "n": study.n,
                    "p": study.p,
                    "eps_strictly_decreasing": study.eps_strictly_decreasing,
                    "points": study.points,
                }),
            )?;
            println!(
                "limits lz: {} points, |eps| strictly decreasing: {}",
                study.points.len(),
                study.eps_strictly_decreasing
            );
        }
        StudyKind::Dependence => {
            if args.s_schedule.is_empty() {
                bail!("--study dependence requires --s-schedule");
            }
            let gaps: Result<Vec<_>, _> = args
                .s_schedule
                .iter()
                .map(|&s| log_dependence(s, args.p, args.q))
                .collect();
            let gaps = gaps?;
            let mut csv = run.writer("dependence.csv")?;
            write_dependence_csv(&gaps, &mut csv)?;
            csv.flush()?;
            let decreasing = gaps.windows(2).all(|w| w[0].gap.abs() > w[1].gap.abs());
            run.write_json(
                "summary.json",
                &serde_json::json!({
                    "schema": JSON_SCHEMA,
                    "command": "limits",
                    "study": "dependence",
                    "p": args.p,
                    "q": args.q,
                    "gap_strictly_decreasing": decreasing,
                    "gaps": gaps,
                }),
            )?;
            println!(
                "limits dependence: {} points, |gap| strictly decreasing: {decreasing}",
                gaps.len()
            );
        }
    }
    Ok(0)
}

fn cmd_control(run: &mut Run, args: &ControlArgs) -> anyhow::Result<u8> {
    let trend = check_c6(
        &ek_lab::FamilySpec::ZeroedAtPrimes(vec![args.p]),
        args.p,
        &args.schedule,
        args.tol,
    )?;
    let mut csv = run.writer("control.csv")?;
    write_c6_csv(&trend, &mut csv)?;
    csv.flush()?;
    run.write_json(
        "summary.json",
        &serde_json::json!({
            "schema": JSON_SCHEMA,
            "command": "control",
            "p": trend.p,
            "schedule": trend.schedule,
            "values": trend.values,
            "tail_magnitude": trend.tail_magnitude,
            "verdict": trend.verdict,
        }),
    )?;
    println!(
        "control: p={} tail={} verdict={:?}",
        trend.p,
        fmt_f64(trend.tail_magnitude),
        trend.verdict
    );
    Ok(if trend.verdict == TrendVerdict::Nonvanishing {
        2
    } else {
        0
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn round_trip(argv: &[&str]) {
        let cli = Cli::try_parse_from(argv).unwrap();
        let text = serde_json::to_string(&cli).unwrap();
        let back: Cli = serde_json::from_str(&text).unwrap();
        assert_eq!(serde_json::to_string(&back).unwrap(), text, "{argv:?}");
    }

    #[test]
    fn config_round_trips_through_its_text_form() {
        round_trip(&[
            "ek", "check", "--family", "harmonic", "--n", "100000", "--C", "1", "--D", "1",
            "--max-k", "4",
        ]);
        round_trip(&[
            "ek",
            "control",
            "--p",
            "2",
            "--schedule",
            "1000,10000,100000",
        ]);
        round_trip(&[
            "ek",
            "cdf",
            "--family",
            "zipf(s=1.01)",
            "--n",
            "10000",
            "--centering",
            "model",
        ]);
        round_trip(&[
            "ek",
            "limits",
            "--study",
            "zeta",
            "--a-schedule",
            "1,2,4,8",
            "--n-cap",
            "10000000",
        ]);
        round_trip(&["ek", "sieve", "--limit", "1000000", "--cutoff", "1000"]);
    }

    #[test]
    fn lz_path_parsing() {
        assert_eq!(
            parse_lz_path("0.9:1.1,0.99:1.01").unwrap(),
            vec![(0.9, 1.1), (0.99, 1.01)]
        );
        assert!(parse_lz_path("0.9-1.1").is_err());
    }
}
