//! Command-line front end.

use std::fs;
use std::io::Write;
use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use num_rational::BigRational;
use serde_json::Value;

use asnp_core::arith::{is_prime_u64, parse_rational};
use asnp_core::polygon::NewtonPolygon;

use crate::experiments::{polygon_from_json, Experiment, Family, ZetaMethod};
use crate::record::{ExperimentRecord, RecordStore};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_MISMATCH: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "asnp", version, about = "Newton polygons of Artin-Schreier curves and exponential sums")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Append records to this JSON-lines file; records already in it are replayed.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Write the polygons of the run as CSV.
    #[arg(long, global = true)]
    pub csv: Option<PathBuf>,
    /// Write the polygons of the run as SVG.
    #[arg(long, global = true)]
    pub svg: Option<PathBuf>,
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Recompute even when the output file already holds the record.
    #[arg(long, global = true)]
    pub no_cache: bool,
}

#[derive(Debug, Args)]
pub struct PolyArgs {
    /// Coefficients a1,...,ad of f (rationals num/den allowed).
    #[arg(long, allow_hyphen_values = true)]
    pub f: String,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Theorem {
    #[value(name = "sameNP")]
    SameNp,
    Main,
    OneParam,
    Counterexample2,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum DworkKind {
    Key2,
    Transform,
    Leading,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Asymptotic generic Newton polygons, one record per prime.
    Gnp {
        #[arg(long)]
        d: usize,
        #[arg(long)]
        p: Option<u64>,
        /// Inclusive prime range, e.g. 5..100.
        #[arg(long)]
        p_range: Option<String>,
        #[arg(long, value_enum, default_value = "full")]
        family: Family,
        /// Also run every degree 2..=d.
        #[arg(long)]
        sweep: bool,
    },
    /// Check a theorem instance; exits 2 on disagreement.
    Verify {
        #[arg(value_enum)]
        theorem: Theorem,
        /// Coefficients a1,...,ad; for one-param, the single value a.
        #[arg(long, allow_hyphen_values = true)]
        f: Option<String>,
        #[arg(long)]
        d: Option<usize>,
        #[arg(long)]
        p: Option<u64>,
        #[arg(long)]
        p_range: Option<String>,
        #[arg(long, default_value_t = 1)]
        b: usize,
        #[arg(long, default_value_t = 1)]
        ell: usize,
    },
    /// Membership in the ordinarity locus and a height bound.
    Membership {
        #[command(flatten)]
        poly: PolyArgs,
    },
    /// L-polynomial of αf over F_{p^b}.
    Lfun {
        #[command(flatten)]
        poly: PolyArgs,
        #[arg(long)]
        p: u64,
        #[arg(long, default_value_t = 1)]
        b: usize,
        /// α in F_p (default 1).
        #[arg(long, allow_hyphen_values = true)]
        alpha: Option<String>,
        /// Run every α in F_{p^b}^*.
        #[arg(long, conflicts_with = "alpha")]
        alpha_scan: bool,
    },
    /// Zeta function of y^{p^ell} - y = f(x) over F_{p^b}.
    Zeta {
        #[command(flatten)]
        poly: PolyArgs,
        #[arg(long)]
        p: u64,
        #[arg(long, default_value_t = 1)]
        b: usize,
        #[arg(long, default_value_t = 1)]
        ell: usize,
        #[arg(long, value_enum, default_value = "both")]
        method: ZetaMethod,
    },
    /// Dwork-side checks.
    Dwork {
        #[arg(value_enum)]
        check: DworkKind,
        #[arg(long)]
        d: Option<usize>,
        #[arg(long)]
        p: u64,
        /// Matrix size for the transform check.
        #[arg(long, default_value_t = 3)]
        t: usize,
        /// Number of random matrices for the transform check.
        #[arg(long, default_value_t = 100)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

/// Usage problems detected after parsing.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage<T>(msg: impl Into<String>) -> Result<T> {
    Err(UsageError(msg.into()).into())
}

pub fn parse_coeffs(s: &str) -> Result<Vec<BigRational>> {
    let out: Result<Vec<_>, _> = s.split(',').map(parse_rational).collect();
    match out {
        Ok(v) if !v.is_empty() => Ok(v),
        Ok(_) => usage("empty coefficient list"),
        Err(e) => usage(e),
    }
}

/// `a..b`, `a-b` or a single number; keeps the primes.
pub fn parse_p_range(s: &str) -> Result<Vec<u64>> {
    let (lo, hi) = match s.split_once("..").or_else(|| s.split_once('-')) {
        Some((a, b)) => (a.trim().parse::<u64>(), b.trim().trim_start_matches('=').parse::<u64>()),
        None => (s.trim().parse(), s.trim().parse()),
    };
    match (lo, hi) {
        (Ok(lo), Ok(hi)) if lo <= hi => Ok((lo..=hi).filter(|&q| is_prime_u64(q)).collect()),
        _ => usage(format!("invalid prime range {s:?}")),
    }
}

fn primes(p: Option<u64>, range: &Option<String>) -> Result<Vec<u64>> {
    match (p, range) {
        (Some(p), None) if is_prime_u64(p) => Ok(vec![p]),
        (Some(p), None) => usage(format!("p = {p} is not prime")),
        (None, Some(r)) => parse_p_range(r),
        (Some(_), Some(_)) => usage("give either --p or --p-range"),
        (None, None) => usage("--p or --p-range is required"),
    }
}

/// Expands a parsed command into the experiments it runs.
pub fn plan(cmd: &Command) -> Result<Vec<Experiment>> {
    Ok(match cmd {
        Command::Gnp { d, p, p_range, family, sweep } => {
            let degrees: Vec<usize> = if *sweep { (2..=*d).collect() } else { vec![*d] };
            if *d < 2 {
                return usage("need d >= 2");
            }
            let ps = primes(*p, p_range)?;
            let mut out = Vec::new();
            for &d in &degrees {
                for &p in &ps {
                    if d as u64 % p != 0 {
                        out.push(Experiment::Gnp { d, p, family: *family });
                    }
                }
            }
            out
        }
        Command::Verify { theorem, f, d, p, p_range, b, ell } => match theorem {
            Theorem::Counterexample2 => vec![Experiment::Counterexample2],
            Theorem::SameNp | Theorem::Main => {
                let Some(f) = f else { return usage("--f is required") };
                let f = parse_coeffs(f)?;
                primes(*p, p_range)?
                    .into_iter()
                    .map(|p| match theorem {
                        Theorem::SameNp => Experiment::SameNp { f: f.clone(), p, b: *b },
                        _ => Experiment::Main { f: f.clone(), p, b: *b, ell: *ell },
                    })
                    .collect()
            }
            Theorem::OneParam => {
                let Some(d) = d else { return usage("--d is required") };
                let Some(f) = f else { return usage("--f a is required") };
                let a = match parse_coeffs(f)?.as_slice() {
                    [a] => a.clone(),
                    _ => return usage("one-param takes a single value --f a"),
                };
                primes(*p, p_range)?.into_iter().map(|p| Experiment::OneParam { d: *d, a: a.clone(), p }).collect()
            }
        },
        Command::Membership { poly } => vec![Experiment::Membership { f: parse_coeffs(&poly.f)? }],
        Command::Lfun { poly, p, b, alpha, alpha_scan } => {
            let alpha = match (alpha, alpha_scan) {
                (_, true) => None,
                (Some(a), false) => Some(parse_rational(a).map_err(UsageError)?),
                (None, false) => Some(BigRational::from_integer(1.into())),
            };
            vec![Experiment::Lfun { f: parse_coeffs(&poly.f)?, p: *p, b: *b, alpha }]
        }
        Command::Zeta { poly, p, b, ell, method } => {
            vec![Experiment::Zeta { f: parse_coeffs(&poly.f)?, p: *p, b: *b, ell: *ell, method: *method }]
        }
        Command::Dwork { check, d, p, t, count, seed } => match check {
            DworkKind::Transform => vec![Experiment::Transform { p: *p, t: *t, count: *count, seed: *seed }],
            DworkKind::Key2 | DworkKind::Leading => {
                let Some(d) = d else { return usage("--d is required") };
                match check {
                    DworkKind::Key2 => vec![Experiment::Key2 { d: *d, p: *p }],
                    _ => vec![Experiment::Leading { d: *d, p: *p }],
                }
            }
        },
    })
}

fn collect_plots(records: &[ExperimentRecord]) -> Vec<(String, NewtonPolygon)> {
    let mut out = Vec::new();
    for rec in records {
        if let Some(Value::Object(m)) = rec.result.get("plots") {
            for (label, v) in m {
                if let Some(np) = polygon_from_json(v) {
                    out.push((label.clone(), np));
                }
            }
        }
    }
    out
}

fn write_plots(common: &Common, records: &[ExperimentRecord]) -> Result<()> {
    if common.csv.is_none() && common.svg.is_none() {
        return Ok(());
    }
    let plots = collect_plots(records);
    if let Some(path) = &common.csv {
        let mut s = String::new();
        for (label, np) in &plots {
            s.push_str(&format!("# {label}\n"));
            s.push_str(&np.to_csv());
        }
        fs::write(path, s).with_context(|| format!("writing {}", path.display()))?;
    }
    if let Some(path) = &common.svg {
        let refs: Vec<(&str, &NewtonPolygon)> = plots.iter().map(|(l, np)| (l.as_str(), np)).collect();
        fs::write(path, NewtonPolygon::to_svg(&refs)).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

/// Runs a parsed command, writing JSON lines to `stdout`. Returns the exit code.
pub fn execute(cli: &Cli, stdout: &mut dyn Write) -> Result<i32> {
    if let Some(n) = cli.common.threads {
        if n == 0 {
            return usage("--threads must be positive");
        }
        // A second call in the same process keeps the first pool.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let experiments = plan(&cli.command)?;
    let mut store = match &cli.common.out {
        Some(path) => RecordStore::open(path)?,
        None => RecordStore::ephemeral(),
    };
    let mut records = Vec::with_capacity(experiments.len());
    let mut mismatch = false;
    for e in experiments {
        let (rec, _) = store.get_or_run(e.kind(), e.params(), !cli.common.no_cache, || e.run())?;
        writeln!(stdout, "{}", serde_json::to_string(&rec)?)?;
        mismatch |= rec.mismatch;
        records.push(rec);
    }
    write_plots(&cli.common, &records)?;
    Ok(if mismatch { EXIT_MISMATCH } else { EXIT_OK })
}

/// Entry point shared by the binary and the tests: parses `args`
/// (including the program name) and maps every failure to an exit code.
pub fn run_with_args<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = write!(stderr, "{e}");
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match execute(&cli, stdout) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e:#}");
            EXIT_USAGE
        }
    }
}
