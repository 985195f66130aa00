use clap::{Args, Parser, Subcommand, ValueEnum};
use rayq_core::linalg::io::{write_binary, write_text};
use rayq_core::problems::{ProblemFamily, ProblemSpec};
use rayq_harness::aggregate::{aggregate, Metric};
use rayq_harness::bench::{bench_to_target, loglog_slope, write_bench_csv, BenchConfig};
use rayq_harness::plot::{Plot, Series};
use rayq_harness::trace_csv::ingest_external_trace;
use rayq_harness::{reproduce_figure, run_experiment, ExperimentConfig, HarnessError, ProblemConfig, Result, Scale, SolverSpec};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

/// Zeroth-order Rayleigh quotient maximization: experiments and benchmarks.
#[derive(Parser)]
#[command(name = "rayq", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a problem pair and write A and B.
    Gen(GenArgs),
    /// Run seeded trials and write traces, aggregates and plots.
    Run(RunArgs),
    /// Reproduce one of the figures (fig2..fig7).
    Repro(ReproArgs),
    /// Time to reach a target relative quotient error on ill-conditioned pairs.
    Bench(BenchArgs),
    /// Aggregate externally produced trace CSVs.
    Ingest(IngestArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Binary,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    family: String,
    #[arg(long)]
    dim: usize,
    #[arg(long)]
    q: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory; receives A.txt and B.txt, or pair.bin.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

#[derive(Args)]
struct RunArgs {
    /// JSON experiment file; flags given here override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    family: Option<String>,
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    q: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    iters: Option<usize>,
    /// Repeatable, e.g. `szo:m=10`, `rga`, `zorga:variant=armijo,m=100`.
    #[arg(long = "solver")]
    solvers: Vec<String>,
    /// Sample count for solvers that do not set `m` themselves.
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    target_rqe: Option<f64>,
    #[arg(long)]
    time_budget: Option<f64>,
    #[arg(long)]
    record_every: Option<usize>,
    #[arg(long)]
    track_sin_b2: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ReproArgs {
    id: String,
    #[arg(long, default_value = "desk")]
    scale: String,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, value_delimiter = ',', default_values_t = vec![50, 100, 200])]
    dim: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_values_t = vec![100])]
    m: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_values_t = vec![1.0])]
    q: Vec<f64>,
    #[arg(long, default_value_t = 10)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.01)]
    target_rqe: f64,
    /// CSV destination; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct IngestArgs {
    /// Trace CSV files; each becomes one series labeled by its file stem.
    #[arg(required = true)]
    traces: Vec<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

fn gen(args: GenArgs) -> Result<()> {
    let mut spec = ProblemSpec::new(ProblemFamily::parse(&args.family)?, args.dim, args.seed);
    spec.q = args.q;
    let p = spec.generate()?;
    std::fs::create_dir_all(&args.out)?;
    match args.format {
        Format::Text => {
            for (name, m) in [("A.txt", &p.a), ("B.txt", &p.b)] {
                write_text(std::io::BufWriter::new(std::fs::File::create(args.out.join(name))?), m)?;
            }
        }
        Format::Binary => {
            let mut w = std::io::BufWriter::new(std::fs::File::create(args.out.join("pair.bin"))?);
            write_binary(&mut w, &p.a)?;
            write_binary(&mut w, &p.b)?;
            w.flush()?;
        }
    }
    Ok(())
}

fn experiment_config(args: RunArgs) -> Result<ExperimentConfig> {
    let missing = |what: &str| HarnessError::Usage(format!("--{what} is required without --config"));
    let mut cfg = match &args.config {
        Some(path) => ExperimentConfig::from_json_file(path)?,
        None => {
            let problem = ProblemConfig { family: args.family.clone().ok_or_else(|| missing("family"))?, dim: args.dim.ok_or_else(|| missing("dim"))?, q: None, length_scale: None, interval: None };
            ExperimentConfig::new(problem, Vec::new(), 50, 1000, 0, args.out.clone().ok_or_else(|| missing("out"))?)
        }
    };
    if let Some(f) = args.family {
        cfg.problem.family = f;
    }
    if let Some(d) = args.dim {
        cfg.problem.dim = d;
    }
    if args.q.is_some() {
        cfg.problem.q = args.q;
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(t) = args.trials {
        cfg.trials = t;
    }
    if let Some(i) = args.iters {
        cfg.max_iters = i;
    }
    if !args.solvers.is_empty() {
        let m = args.m.unwrap_or(1);
        cfg.solvers = args.solvers.iter().map(|s| SolverSpec::parse_with_default(s, m)).collect::<Result<_>>()?;
    } else if cfg.solvers.is_empty() {
        cfg.solvers = vec![SolverSpec::Szo { m: args.m.unwrap_or(1) }];
    }
    if args.target_rqe.is_some() {
        cfg.target_rqe = args.target_rqe;
    }
    if args.time_budget.is_some() {
        cfg.time_budget_s = args.time_budget;
    }
    if let Some(r) = args.record_every {
        cfg.record_every = r;
    }
    cfg.track_sin_b2 |= args.track_sin_b2;
    if let Some(o) = args.out {
        cfg.output = o;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(args: RunArgs) -> Result<()> {
    let cfg = experiment_config(args)?;
    let rep = run_experiment(&cfg)?;
    for (o, agg) in rep.outcomes.iter().zip(&rep.aggregates) {
        let rqe = agg.final_summary(Metric::Rqe).map_or(f64::NAN, |s| s.median);
        println!("{:<28} final median RQE {rqe:.3e}", o.spec.to_string());
    }
    println!("wrote {}", rep.output.display());
    Ok(())
}

fn repro(args: ReproArgs) -> Result<bool> {
    let scale: Scale = args.scale.parse()?;
    let rep = reproduce_figure(&args.id, scale, &args.out, args.seed)?;
    println!("{}: {} files under {}", args.id, rep.files.len(), args.out.join(&args.id).display());
    for c in &rep.checks {
        println!("[{}] {} {}", if c.passed { "ok" } else { "MISMATCH" }, c.name, c.detail);
    }
    Ok(rep.checks.iter().all(|c| c.passed))
}

fn bench(args: BenchArgs) -> Result<()> {
    let mut cfg = BenchConfig::new(args.dim, args.m, args.q, args.trials, args.seed);
    cfg.target_rqe = args.target_rqe;
    let rows = bench_to_target(&cfg)?;
    match &args.out {
        Some(p) => write_bench_csv(std::io::BufWriter::new(std::fs::File::create(p)?), &rows)?,
        None => write_bench_csv(std::io::stdout().lock(), &rows)?,
    }
    for &m in &cfg.ms {
        for &q in &cfg.qs {
            let pts: Vec<(f64, f64)> = rows.iter().filter(|r| r.m == m && r.q == q && r.median_s > 0.0).map(|r| (r.d as f64, r.median_s)).collect();
            if pts.len() >= 2 {
                eprintln!("m={m} q={q}: time ~ d^{:.2}", loglog_slope(&pts));
            }
        }
    }
    Ok(())
}

fn stem(p: &Path) -> String {
    p.file_stem().map_or_else(|| "trace".into(), |s| s.to_string_lossy().into_owned())
}

fn ingest(args: IngestArgs) -> Result<()> {
    std::fs::create_dir_all(&args.out)?;
    let mut plot = Plot::new("ingested traces", "iteration", "mean rqe");
    for path in &args.traces {
        let traces = ingest_external_trace(path)?;
        let agg = aggregate(&traces);
        let name = stem(path);
        agg.write_csv(std::io::BufWriter::new(std::fs::File::create(args.out.join(format!("{name}_aggregate.csv")))?))?;
        plot = plot.with(Series::new(name, agg.series(Metric::Rqe, |s| s.mean).into_iter().map(|(k, _, y)| (k as f64, y)).collect()));
    }
    std::fs::write(args.out.join("rqe.svg"), plot.to_svg())?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let result = match cli.command {
        Command::Gen(a) => gen(a),
        Command::Run(a) => run(a),
        Command::Repro(a) => repro(a).map(|_| ()),
        Command::Bench(a) => bench(a),
        Command::Ingest(a) => ingest(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("rayq: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
