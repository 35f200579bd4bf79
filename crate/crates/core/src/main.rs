use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use wjl::generators::{gen_pair, read_sparse_csv, write_sparse_csv, SparseSpec};
use wjl::harness::{self, Experiment, ExperimentConfig, RowFilter, Scale};
use wjl::projection::{rho, rho_pairwise, ProjectionMatrix, ReducedVector};
use wjl::sketch::{plan_sketch, SketchConfig, StreamMode, StreamSketch};
use wjl::{Error, Result};

#[derive(Parser)]
#[command(name = "wjl", version, about = "Weighted Johnson-Lindenstrauss projections and streaming sketches")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a sparse (x, w) pair as `index,value` CSV files.
    Gen(GenArgs),
    /// Project a sparse vector to k complex dimensions (WJLR file).
    Reduce(ReduceArgs),
    /// Estimate a squared weighted norm from two reductions or two sketches.
    Estimate(EstimateArgs),
    /// Build a streaming sketch of a sparse vector (WJLS file).
    Sketch(SketchArgs),
    /// Fixed pair, fresh matrix per trial.
    Fig1(ExperimentArgs),
    /// Fixed matrix and weights, fresh x per trial.
    Fig2(ExperimentArgs),
    /// Support overlap 2 versus 10.
    Fig3(ExperimentArgs),
    /// Support sizes 10, 30 and 100.
    Fig4(ExperimentArgs),
    /// Empirical success rate of planned sketches.
    SketchEval(ExperimentArgs),
    /// Implementation-versus-oracle equivalence checks.
    Verify(ExperimentArgs),
    /// Histogram of one CSV column as SVG.
    Plot(PlotArgs),
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    d: usize,
    /// Nonzeros of x (and of w unless --l-w is given).
    #[arg(long)]
    l: usize,
    #[arg(long)]
    l_w: Option<usize>,
    #[arg(long)]
    l_overlap: usize,
    #[arg(long, default_value_t = 1.0)]
    norm: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory for `x.csv` and `w.csv`.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ReduceArgs {
    /// Sparse `index,value` CSV.
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    d: usize,
    #[arg(long)]
    k: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Also write the scaled coordinates as `index,re,im` CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct EstimateArgs {
    /// Reduction or sketch of x.
    #[arg(long)]
    x: PathBuf,
    /// Reduction or sketch of w.
    #[arg(long)]
    w: PathBuf,
    /// Reduction of y: estimates the weighted distance between x and y.
    #[arg(long)]
    y: Option<PathBuf>,
}

#[derive(Args)]
struct SketchArgs {
    /// Sparse `index,value` CSV.
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, requires = "m")]
    r: Option<usize>,
    #[arg(long, requires = "r")]
    m: Option<usize>,
    #[arg(long, default_value_t = 0.3)]
    epsilon: f64,
    #[arg(long, default_value_t = 0.05)]
    delta: f64,
    /// Distortion bound used for planning m.
    #[arg(long, default_value_t = 1.0)]
    distortion: f64,
    #[arg(long, value_enum, default_value_t = Mode::Timestep)]
    mode: Mode,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum Mode {
    Timestep,
    Turnstile,
}

#[derive(Args)]
struct ExperimentArgs {
    /// JSON experiment configuration; flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Scale::Paper)]
    scale: Scale,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    d: Option<usize>,
    /// Reduced dimensions, comma separated.
    #[arg(long, value_delimiter = ',')]
    k: Option<Vec<usize>>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    l: Option<usize>,
    #[arg(long)]
    l_overlap: Option<usize>,
    /// Sketch accuracy targets, comma separated.
    #[arg(long, value_delimiter = ',')]
    epsilon: Option<Vec<f64>>,
    /// Sketch failure probabilities, comma separated.
    #[arg(long, value_delimiter = ',')]
    delta: Option<Vec<f64>>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (0 uses all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Add a wall_time_ms column (outputs are then not reproducible).
    #[arg(long)]
    timings: bool,
    /// Skip SVG histograms.
    #[arg(long)]
    no_plots: bool,
}

#[derive(Args)]
struct PlotArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value = "estimate")]
    column: String,
    #[arg(long, default_value_t = harness::DEFAULT_BINS)]
    bins: usize,
    #[arg(long)]
    out: PathBuf,
    /// Only rows of this arm.
    #[arg(long)]
    arm: Option<String>,
    /// Only rows with this k.
    #[arg(long)]
    k: Option<usize>,
}

fn build_config(experiment: Experiment, args: &ExperimentArgs) -> Result<ExperimentConfig> {
    let mut cfg = match &args.config {
        Some(path) => ExperimentConfig::from_json_file(path)?,
        None => ExperimentConfig::preset(experiment, args.scale),
    };
    cfg.experiment = experiment;
    if let Some(seed) = args.seed {
        cfg.master_seed = seed;
    }
    if let Some(d) = args.d {
        cfg.spec.d = d;
        cfg.sketch.pair_spec.d = cfg.sketch.pair_spec.d.min(d);
    }
    if let Some(k) = &args.k {
        cfg.k_list = k.clone();
    }
    if let Some(trials) = args.trials {
        cfg.trials = trials;
        cfg.sketch.sketch_trials = trials;
    }
    if let Some(l) = args.l {
        cfg.spec.l_x = l;
        cfg.spec.l_w = l;
    }
    if let Some(overlap) = args.l_overlap {
        cfg.spec.l_overlap = overlap;
    }
    if let Some(eps) = &args.epsilon {
        cfg.sketch.epsilons = eps.clone();
    }
    if let Some(delta) = &args.delta {
        cfg.sketch.deltas = delta.clone();
    }
    if let Some(out) = &args.out {
        cfg.out_dir = out.clone();
    }
    if let Some(threads) = args.threads {
        cfg.threads = threads;
    }
    cfg.record_timings |= args.timings;
    cfg.validate()?;
    Ok(cfg)
}

fn read_sparse(path: &Path, d: Option<usize>) -> Result<Vec<(usize, f64)>> {
    read_sparse_csv(BufReader::new(File::open(path)?), d)
}

fn cmd_gen(args: &GenArgs) -> Result<()> {
    let spec = SparseSpec {
        norm_x: args.norm,
        ..SparseSpec::new(args.d, args.l, args.l_w.unwrap_or(args.l), args.l_overlap, args.seed)
    };
    let pair = gen_pair(&spec)?;
    std::fs::create_dir_all(&args.out)?;
    write_sparse_csv(BufWriter::new(File::create(args.out.join("x.csv"))?), pair.x())?;
    write_sparse_csv(BufWriter::new(File::create(args.out.join("w.csv"))?), pair.w())?;
    let summary = serde_json::json!({
        "spec": spec,
        "weighted_sq_norm": pair.weighted_sq_norm(),
        "distortion": pair.distortion().ok(),
    });
    println!("{summary}");
    Ok(())
}

fn cmd_reduce(args: &ReduceArgs) -> Result<()> {
    let x = read_sparse(&args.input, Some(args.d))?;
    let g = ProjectionMatrix::sample(args.d, args.k, args.seed)?.reduce_sparse(&x)?;
    let mut out = BufWriter::new(File::create(&args.out)?);
    g.write_to(&mut out)?;
    out.flush()?;
    if let Some(csv) = &args.csv {
        g.write_csv(BufWriter::new(File::create(csv)?))?;
    }
    Ok(())
}

enum Summary {
    Reduced(ReducedVector),
    Sketch(StreamSketch),
}

fn load_summary(path: &Path) -> Result<Summary> {
    let mut bytes = Vec::new();
    File::open(path)?.read_to_end(&mut bytes)?;
    match bytes.get(..4) {
        Some(m) if m == ReducedVector::MAGIC => Ok(Summary::Reduced(ReducedVector::from_bytes(&bytes)?)),
        Some(m) if m == StreamSketch::MAGIC => Ok(Summary::Sketch(StreamSketch::from_bytes(&bytes)?)),
        _ => Err(Error::Format(format!("{} is neither a WJLR nor a WJLS file", path.display()))),
    }
}

fn cmd_estimate(args: &EstimateArgs) -> Result<()> {
    let x = load_summary(&args.x)?;
    let w = load_summary(&args.w)?;
    let y = args.y.as_deref().map(load_summary).transpose()?;
    let value = match (x, w, y) {
        (Summary::Reduced(gx), Summary::Reduced(gw), None) => rho(&gx, &gw)?,
        (Summary::Reduced(gx), Summary::Reduced(gw), Some(Summary::Reduced(gy))) => rho_pairwise(&gx, &gy, &gw)?,
        (Summary::Sketch(sx), Summary::Sketch(sw), None) => StreamSketch::estimate(&sx, &sw)?.value,
        (Summary::Sketch(_), Summary::Sketch(_), Some(_)) => {
            return Err(Error::InvalidParameter("sketches do not support distance queries".into()))
        }
        _ => return Err(Error::InvalidParameter("x, w (and y) must all be reductions or all be sketches".into())),
    };
    println!("{value}");
    Ok(())
}

fn cmd_sketch(args: &SketchArgs) -> Result<()> {
    let entries = read_sparse(&args.input, None)?;
    let (r, m) = match (args.r, args.m) {
        (Some(r), Some(m)) => (r, m),
        _ => {
            let dims = plan_sketch(args.epsilon, args.delta, args.distortion)?;
            (dims.r, dims.m)
        }
    };
    let mode = match args.mode {
        Mode::Timestep => StreamMode::Timestep,
        Mode::Turnstile => StreamMode::Turnstile,
    };
    let mut sketch = StreamSketch::new(SketchConfig::new(r, m, args.seed, mode)?);
    sketch.update_sparse(&entries)?;
    let mut out = BufWriter::new(File::create(&args.out)?);
    sketch.write_to(&mut out)?;
    out.flush()?;
    println!("{}", serde_json::json!({"r": r, "m": m, "bytes": StreamSketch::encoded_len(r, m)}));
    Ok(())
}

fn cmd_experiment(experiment: Experiment, args: &ExperimentArgs) -> Result<ExitCode> {
    let cfg = build_config(experiment, args)?;
    if experiment == Experiment::Verify {
        let report = harness::run_verify(&cfg)?;
        let path = report.write(&cfg.out_dir)?;
        for c in &report.checks {
            let status = if c.passed { "ok" } else { "FAILED" };
            println!("{:<20} {status:<6} cases={} max_error={:e}", c.name, c.cases, c.max_error);
        }
        println!("wrote {}", path.display());
        return Ok(if report.passed() { ExitCode::SUCCESS } else { ExitCode::from(1) });
    }
    let report = harness::run_experiment(&cfg)?;
    let paths = if args.no_plots {
        report.write(&cfg.out_dir)?
    } else {
        harness::write_outputs(&report, &cfg.out_dir)?
    };
    for s in &report.summaries {
        println!(
            "{:<32} k={:<7} n={:<5} mean={:<12.6} std={:<12.6} truth={:.6}",
            s.arm, s.k, s.n, s.mean_estimate, s.std_estimate, s.mean_true_value
        );
    }
    for p in paths {
        println!("wrote {}", p.display());
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_plot(args: &PlotArgs) -> Result<()> {
    let filter = RowFilter { arm: args.arm.clone(), k: args.k };
    let hist = harness::render_histogram(&args.input, &args.column, args.bins, &args.out, &filter)?;
    println!("{} values in {} bins over [{}, {}]", hist.counts.iter().sum::<usize>(), hist.counts.len(), hist.lo, hist.hi);
    Ok(())
}

fn run(cli: Cli) -> Result<ExitCode> {
    let ok = |r: Result<()>| r.map(|_| ExitCode::SUCCESS);
    match cli.command {
        Command::Gen(a) => ok(cmd_gen(&a)),
        Command::Reduce(a) => ok(cmd_reduce(&a)),
        Command::Estimate(a) => ok(cmd_estimate(&a)),
        Command::Sketch(a) => ok(cmd_sketch(&a)),
        Command::Fig1(a) => cmd_experiment(Experiment::Fig1, &a),
        Command::Fig2(a) => cmd_experiment(Experiment::Fig2, &a),
        Command::Fig3(a) => cmd_experiment(Experiment::Fig3, &a),
        Command::Fig4(a) => cmd_experiment(Experiment::Fig4, &a),
        Command::SketchEval(a) => cmd_experiment(Experiment::SketchEval, &a),
        Command::Verify(a) => cmd_experiment(Experiment::Verify, &a),
        Command::Plot(a) => ok(cmd_plot(&a)),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
