//! `ez`: Epstein zeta values, sweeps and verification suites from the shell.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use ezeta::epstein::{EvalOptions, EvalResult, Evaluator};
use ezeta::exec::{set_exec, Exec};
use ezeta::forms::{load_form, random_diagonal_form};
use ezeta::harness::{self, VerifyOptions};
use ezeta::lattice::{count_below, representation_counts, DEFAULT_BUDGET};
use ezeta::specfun::{parse_complex, selftest};
use ezeta::theta::{max_step, theta_fourth_moment_with, ThetaMomentRecord};
use ezeta::Error;

#[derive(Parser)]
#[command(name = "ez", version, about = "Epstein zeta functions of positive-definite quadratic forms")]
struct Cli {
    /// JSON file with optional "precision", "budget" and "workers".
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads (1 selects the sequential path).
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Evaluate E(Z, s); prints re,im,abs,err,points.
    Eval(EvalArgs),
    /// Critical-line sweep to CSV t,re,im,abs,err,lambda.
    Sweep(SweepArgs),
    /// ∫₀^X |E(Z, 1/2 + it)|² dt.
    Meansquare(MeanSquareArgs),
    /// ∫_R^{2R} |θ(Z, 1/T + iτ)|⁴ dτ.
    ThetaMoment(ThetaArgs),
    /// Run an invariant suite and print a JSON report.
    Verify(VerifyArgs),
    /// Seeded random diagonal form as JSON.
    RandomForm(RandomFormArgs),
    /// Lattice point utilities.
    #[command(subcommand)]
    Lattice(LatticeCmd),
    #[command(subcommand, hide = true)]
    Specfun(SpecfunCmd),
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    form: PathBuf,
    #[arg(long, allow_hyphen_values = true)]
    s: String,
    #[arg(long, default_value = "gamma", value_parser = ["gamma", "direct", "afe"])]
    method: String,
    #[arg(long)]
    prec: Option<u32>,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    form: PathBuf,
    #[arg(long)]
    t0: f64,
    #[arg(long)]
    t1: f64,
    #[arg(long)]
    step: f64,
    /// Output file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct MeanSquareArgs {
    #[arg(long)]
    form: PathBuf,
    #[arg(long = "X")]
    x: f64,
    /// Defaults to 0.25/k.
    #[arg(long)]
    step: Option<f64>,
}

#[derive(Args)]
struct ThetaArgs {
    #[arg(long)]
    form: PathBuf,
    #[arg(long = "T")]
    t: f64,
    #[arg(long = "R")]
    r: f64,
    /// Defaults to 0.1/(T ln(T + 2)).
    #[arg(long)]
    step: Option<f64>,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    suite: String,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    dmax: Option<u64>,
    #[arg(long)]
    cases: Option<usize>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(Args)]
struct RandomFormArgs {
    #[arg(long)]
    k: usize,
    #[arg(long, default_value_t = 1.0)]
    lo: f64,
    #[arg(long, default_value_t = 2.0)]
    hi: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum LatticeCmd {
    /// Number of nonzero x with Q(x) ≤ R.
    Count {
        #[arg(long)]
        form: PathBuf,
        #[arg(long)]
        radius: f64,
    },
    /// r_k(n) for 1 ≤ n ≤ N as CSV n,count.
    Reps {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        n: usize,
    },
}

#[derive(Subcommand)]
enum SpecfunCmd {
    Selftest {
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct Config {
    precision: Option<u32>,
    budget: Option<f64>,
    workers: Option<usize>,
}

/// Exit status: 1 for numeric failures, 2 for usage errors.
enum Failure {
    Numeric(String),
    Usage(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::UnknownSuite(_)
            | Error::Parse(_)
            | Error::Io(_)
            | Error::NotSymmetric(_)
            | Error::NotPositiveDefinite { .. }
            | Error::BadDimension(_)
            | Error::Dimension { .. }
            | Error::BadK(_)
            | Error::StepTooCoarse { .. }
            | Error::RegimeError(_) => Failure::Usage(e.to_string()),
            _ => Failure::Numeric(e.to_string()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

type Out = Result<(), Failure>;

fn load_config(path: Option<&Path>) -> Result<Config, Failure> {
    let Some(p) = path else { return Ok(Config::default()) };
    let text = std::fs::read_to_string(p).map_err(|e| Failure::Usage(format!("{}: {e}", p.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::Usage(format!("{}: {e}", p.display())))
}

fn setup_workers(n: usize) -> Out {
    if n == 0 {
        return Err(Failure::Usage("--workers must be at least 1".into()));
    }
    if n == 1 {
        set_exec(Exec::Sequential);
        return Ok(());
    }
    set_exec(Exec::Parallel);
    #[cfg(feature = "parallel")]
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| Failure::Usage(e.to_string()))?;
    Ok(())
}

fn writer(out: Option<&Path>) -> Result<Box<dyn Write>, Failure> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn run(cli: Cli) -> Out {
    let cfg = load_config(cli.config.as_deref())?;
    if let Some(n) = cli.workers.or(cfg.workers) {
        setup_workers(n)?;
    }
    let base = EvalOptions {
        precision: cfg.precision.unwrap_or(15),
        budget: cfg.budget.unwrap_or(DEFAULT_BUDGET),
        ..Default::default()
    };
    match cli.cmd {
        Cmd::Eval(a) => {
            let q = load_form(&a.form)?;
            let s = parse_complex(&a.s)?;
            let precision = a.prec.unwrap_or(base.precision);
            let ev = Evaluator::new(EvalOptions { precision, ..base });
            let r: EvalResult = match a.method.as_str() {
                "gamma" => ev.evaluate(&q, s)?,
                "direct" => ev.evaluate_direct(&q, s, 10f64.powi(3 - precision as i32))?,
                _ => {
                    if s.re != 0.5 {
                        return Err(Failure::Usage(format!("--method afe needs Re s = 1/2, got {}", s.re)));
                    }
                    ev.evaluate_afe(&q, s.im)?
                }
            };
            println!("{:e},{:e},{:e},{:e},{}", r.value.re, r.value.im, r.value.norm(), r.err, r.points);
        }
        Cmd::Sweep(a) => {
            let q = load_form(&a.form)?;
            let ev = Evaluator::new(base);
            let rows = harness::sweep_critical_line_with(&ev, &q, a.t0, a.t1, a.step)?;
            let mut w = writer(a.out.as_deref())?;
            harness::write_sweep_csv(&mut w, &rows)?;
            w.flush()?;
            let failed = rows.iter().filter(|r| r.failed()).count();
            if failed > 0 {
                return Err(Failure::Numeric(format!("{failed} of {} rows failed", rows.len())));
            }
        }
        Cmd::Meansquare(a) => {
            let q = load_form(&a.form)?;
            let step = a.step.unwrap_or(harness::mean_square_max_step(q.k()));
            let ev = Evaluator::new(base);
            let v = harness::mean_square_with(&ev, &q, a.x, step)?;
            println!("X,step,integral");
            println!("{},{},{:e}", a.x, step, v);
        }
        Cmd::ThetaMoment(a) => {
            let q = load_form(&a.form)?;
            let step = a.step.unwrap_or(max_step(a.t));
            let ev = Evaluator::new(base);
            let rec = theta_fourth_moment_with(&q, a.t, a.r, step, ev.opts.precision, ev.cache())?;
            println!("{}", ThetaMomentRecord::CSV_HEADER);
            println!("{}", rec.csv_row());
        }
        Cmd::Verify(a) => {
            let ev = Evaluator::new(base);
            let opts = VerifyOptions { k: a.k, dmax: a.dmax, cases: a.cases, seed: a.seed };
            let rep = harness::verify_with(&ev, &a.suite, &opts)?;
            println!("{}", serde_json::to_string(&rep).map_err(|e| Failure::Numeric(e.to_string()))?);
            for f in &rep.failures {
                eprintln!("FAIL {f}");
            }
            if !rep.all_passed() {
                return Err(Failure::Numeric(format!("{} of {} cases passed", rep.passed, rep.cases)));
            }
        }
        Cmd::RandomForm(a) => {
            let q = random_diagonal_form(a.k, a.lo, a.hi, a.seed)?;
            let mut w = writer(a.out.as_deref())?;
            writeln!(w, "{}", q.to_json())?;
            w.flush()?;
        }
        Cmd::Lattice(LatticeCmd::Count { form, radius }) => {
            let q = load_form(&form)?;
            println!("{}", count_below(&q, radius, base.budget)?);
        }
        Cmd::Lattice(LatticeCmd::Reps { k, n }) => {
            let r = representation_counts(k, n)?;
            let mut w = writer(None)?;
            writeln!(w, "n,count")?;
            for i in 1..=n {
                writeln!(w, "{i},{}", r.r(i))?;
            }
            w.flush()?;
        }
        Cmd::Specfun(SpecfunCmd::Selftest { seed }) => {
            let cases = selftest(seed);
            let mut bad = 0;
            for c in &cases {
                let tag = if c.passed() { "ok" } else { "FAIL" };
                if !c.passed() {
                    bad += 1;
                }
                println!("{tag} {} residual={:e} tol={:e}", c.name, c.residual, c.tol);
            }
            if bad > 0 {
                return Err(Failure::Numeric(format!("{bad} of {} checks failed", cases.len())));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Numeric(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
    }
}
