//! Command-line front end: `solve`, `bench` and `list`.

pub mod problem_file;
pub mod report;

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};

use crate::adaptive::{self, MarkSignal, Settings, Termination};
use crate::error::{Error, Result};
use crate::problem::ProblemSpec;
use crate::problems;

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "POLYSINC_OUT_DIR";

#[derive(Parser, Debug)]
#[command(name = "polysinc", version, about = "Adaptive piecewise Poly-Sinc solver for linear ODEs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Solve a built-in or file-defined problem and write report and plot data.
    Solve(SolveArgs),
    /// Run built-in benchmarks and print a comparison table.
    Bench(BenchArgs),
    /// List built-in problems.
    List,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum SignalArg {
    Residual,
    ExactError,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Format {
    /// Human-readable summary.
    #[default]
    Text,
    /// The full report as JSON.
    Json,
    /// The residual history as CSV.
    Csv,
}

#[derive(clap::Args, Debug)]
pub struct SolveArgs {
    /// Built-in problem id.
    #[arg(long, conflicts_with = "file", required_unless_present = "file")]
    pub problem: Option<String>,
    /// Problem file (TOML).
    #[arg(long)]
    pub file: Option<PathBuf>,
    /// Sinc half-count N; each partition has m = 2N + 1 points.
    #[arg(long = "N", visible_alias = "n", short = 'N')]
    pub n: Option<usize>,
    /// Stopping threshold for the mean residual norm.
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long, default_value_t = 30)]
    pub max_iter: usize,
    #[arg(long, value_enum, default_value = "residual")]
    pub mark_signal: SignalArg,
    /// Quadrature half-count for per-partition residual norms.
    #[arg(long, default_value_t = crate::quadrature::DEFAULT_QUAD_HALF_COUNT)]
    pub nq: usize,
    /// Use the published stopping threshold instead of the double-precision default.
    #[arg(long)]
    pub paper_eps: bool,
    /// Multiplier for delta in the bound fit (defaults to the problem's setting, else 1).
    #[arg(long)]
    pub delta_scale: Option<f64>,
    /// Output directory (default: $POLYSINC_OUT_DIR or ./polysinc-out).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "text")]
    pub format: Format,
}

#[derive(clap::Args, Debug)]
pub struct BenchArgs {
    /// Comma-separated problem ids (default: all).
    #[arg(long, value_delimiter = ',')]
    pub only: Vec<String>,
    /// Write each problem's outputs under this directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Use the published stopping thresholds.
    #[arg(long)]
    pub paper_eps: bool,
    /// Number of worker threads.
    #[arg(long, default_value_t = 4)]
    pub jobs: usize,
}

/// A problem ready to run, with its default settings.
struct Resolved {
    id: Option<String>,
    spec: ProblemSpec,
    echo: Vec<(String, String)>,
    n: usize,
    eps: f64,
    delta_scale: f64,
}

fn resolve(args: &SolveArgs) -> Result<Resolved> {
    let mut r = if let Some(id) = &args.problem {
        let e = problems::builtin(id)?;
        let eps = if args.paper_eps { e.reference.published_eps_stop } else { e.reference.eps_stop };
        Resolved {
            id: Some(e.id.to_string()),
            spec: e.spec,
            echo: Vec::new(),
            n: e.reference.n,
            eps,
            delta_scale: e.reference.delta_scale,
        }
    } else {
        let path = args.file.as_ref().expect("clap requires --problem or --file");
        let d = problem_file::load_problem(path)?;
        Resolved { id: d.name, spec: d.spec, echo: d.echo, n: 2, eps: 1e-6, delta_scale: 1.0 }
    };
    if let Some(n) = args.n {
        r.n = n;
    }
    if let Some(eps) = args.eps {
        r.eps = eps;
    }
    if let Some(ds) = args.delta_scale {
        r.delta_scale = ds;
    }
    Ok(r)
}

fn default_out_dir() -> PathBuf {
    std::env::var_os(OUT_DIR_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("polysinc-out"))
}

fn exit_code(t: Termination) -> i32 {
    match t {
        Termination::ThresholdMet => 0,
        Termination::MaxIterations | Termination::Stagnation => 2,
    }
}

/// Outcome of one solve, used by both subcommands.
struct Outcome {
    report: report::RunReport,
    csv: String,
}

fn solve_and_write(r: &Resolved, settings: &Settings, out: Option<&Path>) -> Result<Outcome> {
    let start = Instant::now();
    let run = adaptive::run(&r.spec, settings)?;
    let elapsed = start.elapsed().as_secs_f64();
    let echo = report::echo(r.id.as_deref(), &r.spec, &r.echo);
    let rep = report::build_report(echo, &r.spec, &run, r.delta_scale, elapsed)?;
    if let Some(dir) = out {
        report::write_outputs(dir, &rep, &run, &r.spec)?;
    }
    Ok(Outcome { report: rep, csv: report::residuals_csv(&run) })
}

fn text_summary(rep: &report::RunReport) -> String {
    let f = &rep.final_summary;
    let mut s = format!(
        "{}: {:?} after {} iterations, |S| = {}, K = {}, mean residual {:.3e}",
        rep.problem.id.as_deref().unwrap_or("problem"),
        rep.termination,
        f.iterations,
        f.points,
        f.partitions,
        f.final_mean
    );
    if let Some(e) = f.errors {
        s += &format!(", L2 error {:.3e}, sup error {:.3e}", e.l2, e.sup);
    }
    if let Some(fit) = rep.bound_fit {
        s += &format!(", fit lambda {:.3}", fit.lambda);
    }
    s
}

fn cmd_solve(args: &SolveArgs) -> Result<i32> {
    let r = resolve(args)?;
    let mut settings = Settings::new(r.n, r.eps);
    settings.max_iter = args.max_iter;
    settings.nq = args.nq;
    settings.mark_signal = match args.mark_signal {
        SignalArg::Residual => MarkSignal::Residual,
        SignalArg::ExactError => MarkSignal::ExactError,
    };
    let out = args.out.clone().unwrap_or_else(default_out_dir);
    let o = solve_and_write(&r, &settings, Some(&out))?;
    match args.format {
        Format::Text => println!("{}\noutputs written to {}", text_summary(&o.report), out.display()),
        Format::Json => println!("{}", serde_json::to_string_pretty(&o.report).expect("serializable")),
        Format::Csv => print!("{}", o.csv),
    }
    Ok(exit_code(o.report.termination))
}

fn sci(v: f64) -> String {
    format!("{v:.2e}")
}

fn cmd_bench(args: &BenchArgs) -> Result<i32> {
    let ids: Vec<String> = if args.only.is_empty() {
        problems::IDS.iter().map(|s| s.to_string()).collect()
    } else {
        args.only.clone()
    };
    let entries: Vec<Result<problems::BenchmarkEntry>> = ids.iter().map(|id| problems::builtin(id)).collect();
    let jobs = args.jobs.max(1);
    let mut results: Vec<Option<Result<report::RunReport>>> = (0..ids.len()).map(|_| None).collect();
    let next = std::sync::atomic::AtomicUsize::new(0);
    let slots = std::sync::Mutex::new(&mut results);
    std::thread::scope(|scope| {
        for _ in 0..jobs.min(ids.len()) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                if i >= ids.len() {
                    break;
                }
                let res = match &entries[i] {
                    Err(e) => Err(Error::InvalidArgument(e.to_string())),
                    Ok(e) => {
                        let eps = if args.paper_eps { e.reference.published_eps_stop } else { e.reference.eps_stop };
                        let r = Resolved {
                            id: Some(e.id.to_string()),
                            spec: e.spec.clone(),
                            echo: Vec::new(),
                            n: e.reference.n,
                            eps,
                            delta_scale: e.reference.delta_scale,
                        };
                        let out = args.out.as_ref().map(|d| d.join(e.id));
                        solve_and_write(&r, &Settings::new(r.n, r.eps), out.as_deref()).map(|o| o.report)
                    }
                };
                slots.lock().expect("no panics while holding the lock")[i] = Some(res);
            });
        }
    });

    println!(
        "{:<16} {:>2} {:>8} {:>4} {:>6} {:>9} {:>9} {:>6} {:<14} | {:>4} {:>6} {:>9}",
        "id", "m", "eps", "k", "|S|", "L2 err", "sup err", "lambda", "termination", "k*", "|S|*", "err*"
    );
    let mut failed = false;
    for (i, id) in ids.iter().enumerate() {
        match results[i].take().expect("every slot filled") {
            Ok(rep) => {
                let f = &rep.final_summary;
                let (l2, sup) = f.errors.map(|e| (sci(e.l2), sci(e.sup))).unwrap_or(("-".into(), "-".into()));
                let lam = rep.bound_fit.map(|b| format!("{:.3}", b.lambda)).unwrap_or_else(|| "-".into());
                let reference = problems::builtin(id).expect("ran").reference;
                println!(
                    "{:<16} {:>2} {:>8} {:>4} {:>6} {:>9} {:>9} {:>6} {:<14} | {:>4} {:>6} {:>9}",
                    id,
                    rep.settings.m,
                    sci(rep.settings.eps_stop),
                    f.iterations,
                    f.points,
                    l2,
                    sup,
                    lam,
                    format!("{:?}", rep.termination),
                    reference.published_iterations,
                    reference.published_points,
                    format!("{}({})", sci(reference.published_error), reference.published_error_norm),
                );
            }
            Err(e) => {
                failed = true;
                println!("{id:<16} FAILED: {e}");
            }
        }
    }
    Ok(if failed { 2 } else { 0 })
}

fn cmd_list() -> i32 {
    for id in problems::IDS {
        let e = problems::builtin(id).expect("registered");
        println!("{:<16} m={} eps={:e}  {}", e.id, 2 * e.reference.n + 1, e.reference.eps_stop, e.description);
    }
    0
}

/// Runs the CLI with the given arguments and returns the process exit code.
pub fn run_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let result = match &cli.command {
        Command::Solve(a) => cmd_solve(a),
        Command::Bench(a) => cmd_bench(a),
        Command::List => Ok(cmd_list()),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

/// Entry point used by the binary.
pub fn main() -> i32 {
    run_with(std::env::args_os())
}
