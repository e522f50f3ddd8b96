use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use gauss_rdp::ecsq::{design_ecsq, trace_de_curve};
use gauss_rdp::oracle::GridSpec;
use gauss_rdp::sweep::{figure_preset, format_value, point_report, write_csv, Selector, SweepConfig, SweepVariable};
use gauss_rdp::talagrand::refined_talagrand_sweep;
use gauss_rdp::verify::{run_suite, Suite, VerifyOptions};
use gauss_rdp::{Error, GaussianSource, Measure, RdpQuery};

const THREADS_ENV: &str = "GAUSS_RDP_THREADS";

#[derive(Parser)]
#[command(name = "gauss-rdp", version, about = "Gaussian rate-distortion-perception bounds")]
struct Cli {
    /// Worker threads (default: machine parallelism; GAUSS_RDP_THREADS overrides)
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate every bound at one query and print a CSV row
    Bound(BoundArgs),
    /// Sweep one parameter and write a CSV curve
    Sweep(SweepArgs),
    /// Run a property/oracle suite
    Verify(VerifyArgs),
    /// Design an entropy-constrained scalar quantizer or trace the hull
    Ecsq(EcsqArgs),
    /// Check the transportation inequalities on random mixtures
    Talagrand(TalagrandArgs),
}

#[derive(Args, Clone)]
struct SourceArgs {
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    mean: f64,
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    var: f64,
}

impl SourceArgs {
    fn source(&self) -> Result<GaussianSource, Error> {
        GaussianSource::new(self.mean, self.var)
    }
}

#[derive(Args, Clone)]
struct QueryArgs {
    #[command(flatten)]
    source: SourceArgs,
    /// Rate R in nats (accepts `inf`)
    #[arg(long, default_value = "0", allow_hyphen_values = true)]
    rate: f64,
    /// Common randomness rate Rc in nats (accepts `inf`)
    #[arg(long, default_value = "0", allow_hyphen_values = true)]
    common: f64,
    /// Perception budget P (accepts `inf`)
    #[arg(long, default_value = "0", allow_hyphen_values = true)]
    perception: f64,
    #[arg(long, default_value = "w2")]
    measure: Measure,
    /// Divide distortions by the source variance
    #[arg(long)]
    normalize: bool,
    /// Output file (default: standard output)
    #[arg(long)]
    out: Option<PathBuf>,
}

impl QueryArgs {
    fn query(&self) -> Result<RdpQuery, Error> {
        RdpQuery::from_f64(
            self.source.source()?,
            self.rate,
            self.common,
            self.perception,
            self.measure,
        )
    }
}

#[derive(Args)]
struct BoundArgs {
    #[command(flatten)]
    query: QueryArgs,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    query: QueryArgs,
    /// Use a built-in figure preset (2 to 6)
    #[arg(long)]
    figure: Option<u8>,
    /// Swept variable: R, Rc, P, theta or lambda
    #[arg(long)]
    variable: Option<SweepVariable>,
    #[arg(long, allow_hyphen_values = true)]
    from: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    to: Option<f64>,
    #[arg(long, default_value_t = 201)]
    points: usize,
    /// Comma-separated output columns
    #[arg(long, value_delimiter = ',')]
    select: Vec<Selector>,
    /// Level budget for lambda sweeps
    #[arg(long, default_value_t = 8)]
    n_max: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, default_value = "all")]
    suite: Suite,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Random mixtures for the transportation suite
    #[arg(long, default_value_t = 1000)]
    trials: usize,
}

#[derive(Args)]
struct EcsqArgs {
    #[command(flatten)]
    source: SourceArgs,
    /// Lagrange multiplier for a single design
    #[arg(long, default_value_t = 0.1, allow_hyphen_values = true)]
    lambda: f64,
    #[arg(long, default_value_t = 8)]
    n_max: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Trace the hull over a geometric multiplier schedule instead
    #[arg(long)]
    trace: bool,
    #[arg(long, default_value_t = 0.005)]
    lambda_min: f64,
    #[arg(long, default_value_t = 5.0)]
    lambda_max: f64,
    #[arg(long, default_value_t = 40)]
    lambdas: usize,
    #[arg(long)]
    normalize: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TalagrandArgs {
    #[command(flatten)]
    source: SourceArgs,
    #[arg(long, default_value_t = 1000)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

enum Failure {
    Lib(Error),
    Io(io::Error),
    Verification(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Io(e)
    }
}

fn open_out(path: &Option<PathBuf>) -> io::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn configure_threads(flag: Option<usize>) -> Result<(), Failure> {
    let from_env = match std::env::var(THREADS_ENV) {
        Ok(v) => Some(
            v.trim()
                .parse::<usize>()
                .map_err(|_| Error::Usage(format!("{THREADS_ENV} must be a positive integer, got '{v}'")))?,
        ),
        Err(_) => None,
    };
    if let Some(n) = from_env.or(flag) {
        if n == 0 {
            return Err(Error::Usage("thread count must be positive".into()).into());
        }
        // a second initialisation only happens in tests; ignore it
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

fn cmd_bound(a: &BoundArgs) -> Result<(), Failure> {
    let q = a.query.query()?;
    let (header, row) = point_report(&q, a.query.normalize)?;
    let mut out = open_out(&a.query.out)?;
    writeln!(out, "{}", header.join(","))?;
    writeln!(out, "{}", row.join(","))?;
    out.flush()?;
    Ok(())
}

fn cmd_sweep(a: &SweepArgs) -> Result<(), Failure> {
    let mut cfg = match a.figure {
        Some(f) => {
            if a.variable.is_some() || !a.select.is_empty() {
                return Err(Error::Usage("--figure cannot be combined with --variable or --select".into()).into());
            }
            figure_preset(f)?
        }
        None => {
            let variable = a
                .variable
                .ok_or_else(|| Error::Usage("sweep needs --figure or --variable".into()))?;
            let (from, to) = match (a.from, a.to) {
                (Some(f), Some(t)) => (f, t),
                _ => return Err(Error::Usage("--variable needs --from and --to".into()).into()),
            };
            let mut cfg = SweepConfig::new(
                variable,
                GridSpec::new(from, to, a.points)?,
                a.query.query()?,
                a.select.clone(),
            )?;
            cfg.n_max = a.n_max;
            cfg.seed = a.seed;
            cfg
        }
    };
    cfg.normalize = a.query.normalize;
    let rows = cfg.run()?;
    let mut out = open_out(&a.query.out)?;
    write_csv(&mut out, &cfg.header(), &rows)?;
    out.flush()?;
    Ok(())
}

fn cmd_verify(a: &VerifyArgs) -> Result<(), Failure> {
    let outcomes = run_suite(
        a.suite,
        VerifyOptions {
            seed: a.seed,
            trials: a.trials,
        },
    )?;
    let mut out = io::stdout().lock();
    let mut failed = Vec::new();
    for o in &outcomes {
        let status = if o.passed { "PASS" } else { "FAIL" };
        writeln!(out, "{status}  {:<10} {:<62} {}", o.suite, o.name, o.detail)?;
        if !o.passed {
            failed.push(format!("{}: {}", o.suite, o.name));
        }
    }
    let passed = outcomes.len() - failed.len();
    writeln!(out, "{passed}/{} checks passed", outcomes.len())?;
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Verification(format!("failed checks: {}", failed.join("; "))))
    }
}

fn cmd_ecsq(a: &EcsqArgs) -> Result<(), Failure> {
    let src = a.source.source()?;
    let scale = if a.normalize { src.variance() } else { 1.0 };
    let mut out = open_out(&a.out)?;
    if a.trace {
        if a.lambdas < 2 || !(a.lambda_min > 0.0 && a.lambda_max > a.lambda_min) {
            return Err(Error::Usage("trace needs 0 < --lambda-min < --lambda-max and --lambdas >= 2".into()).into());
        }
        let ratio = (a.lambda_max / a.lambda_min).powf(1.0 / (a.lambdas - 1) as f64);
        let sched: Vec<f64> = (0..a.lambdas).map(|i| a.lambda_min * ratio.powi(i as i32)).collect();
        let hull = trace_de_curve(&src, &sched, a.n_max)?;
        let rows: Vec<Vec<Option<f64>>> = hull.iter().map(|&(h, d)| vec![Some(h), Some(d / scale)]).collect();
        write_csv(&mut out, &["entropy".into(), "distortion".into()], &rows)?;
    } else {
        let design = design_ecsq(&src, a.lambda, a.n_max, a.seed)?;
        let q = &design.quantizer;
        writeln!(out, "cell,lower,upper,level,probability")?;
        for i in 0..q.len() {
            let lo = if i == 0 {
                f64::NEG_INFINITY
            } else {
                q.boundaries()[i - 1]
            };
            let hi = q.boundaries().get(i).copied().unwrap_or(f64::INFINITY);
            writeln!(
                out,
                "{i},{},{},{},{}",
                format_value(lo),
                format_value(hi),
                format_value(q.levels()[i]),
                format_value(q.probabilities()[i])
            )?;
        }
        eprintln!(
            "distortion {} entropy {} cost {} iterations {}",
            format_value(design.metrics.distortion / scale),
            format_value(design.metrics.entropy),
            format_value(design.metrics.lagrangian_cost),
            design.cost_trace.len()
        );
    }
    out.flush()?;
    Ok(())
}

fn cmd_talagrand(a: &TalagrandArgs) -> Result<(), Failure> {
    let src = a.source.source()?;
    let reports = refined_talagrand_sweep(&src, a.trials, a.seed)?;
    let mut out = open_out(&a.out)?;
    writeln!(
        out,
        "trial,components,w2sq,w2sq_err,kl,kl_err,rhs_refined,rhs_original,holds_refined,holds_original"
    )?;
    let mut violations = 0;
    for (i, (d, r)) in reports.iter().enumerate() {
        if !(r.holds_refined && r.holds_original) {
            violations += 1;
        }
        writeln!(
            out,
            "{i},{},{},{},{},{},{},{},{},{}",
            d.components().len(),
            format_value(r.w2sq.value),
            format_value(r.w2sq.abs_error_bound),
            format_value(r.kl.value),
            format_value(r.kl.abs_error_bound),
            format_value(r.rhs_refined),
            format_value(r.rhs_original),
            r.holds_refined,
            r.holds_original
        )?;
    }
    out.flush()?;
    if violations > 0 {
        return Err(Failure::Verification(format!(
            "{violations} of {} trials violate an inequality",
            a.trials
        )));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configure_threads(cli.threads).and_then(|_| match &cli.command {
        Command::Bound(a) => cmd_bound(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Ecsq(a) => cmd_ecsq(a),
        Command::Talagrand(a) => cmd_talagrand(a),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Lib(e @ Error::Usage(_))) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(Failure::Lib(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
        Err(Failure::Io(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
        Err(Failure::Verification(msg)) => {
            eprintln!("{msg}");
            ExitCode::from(1)
        }
    }
}
