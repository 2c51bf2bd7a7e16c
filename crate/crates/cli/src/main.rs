use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;
use serde::Serialize;

use tilepath::bench::{run_sweep, Ensemble, ExperimentConfig, Method, Sweep};
use tilepath::decoders::{iht_warm, lasso_supports, omp, plasso_supports};
use tilepath::io::{read_matrix, read_vector};
use tilepath::lasso_path::Variant;
use tilepath::selection::{
    largest_supports, oracle_closest, rank_supports, regress, symmetric_difference,
};
use tilepath::tiling::{build, export_json, export_svg, SvgOptions};
use tilepath::transform::{decompose, Problem};
use tilepath::Error;

/// Exit status for usage, build and method failures.
const EXIT_FAILURE: u8 = 1;
/// Exit status for unreadable inputs and unwritable outputs.
const EXIT_IO: u8 = 2;
/// `bench` fails when any method errors on more than this fraction of trials.
const MAX_ERROR_RATE: f64 = 0.1;

#[derive(Parser, Debug)]
#[command(
    name = "tilepath",
    version,
    about = "Support tilings for sparse unmixing and their benchmarks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Compute the support tiling of (A, y) and export it.
    Tiling(TilingArgs),
    /// Run one decoder on (A, y) and print the chosen support.
    Solve(SolveArgs),
    /// Run a benchmark sweep on synthetic problems.
    Bench(BenchArgs),
}

#[derive(Args, Debug)]
struct InputArgs {
    /// Measurement matrix, CSV or TPTH binary.
    #[arg(long)]
    matrix: PathBuf,
    /// Datum vector, one row or one column.
    #[arg(long)]
    datum: PathBuf,
}

#[derive(Args, Debug)]
struct TilingParams {
    #[arg(long, default_value_t = 1e-6)]
    beta_min: f64,
    #[arg(long, default_value_t = 100.0)]
    beta_max: f64,
    #[arg(long, value_enum, default_value_t = VariantArg::Lasso)]
    variant: VariantArg,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum VariantArg {
    Lasso,
    Lars,
}

impl From<VariantArg> for Variant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::Lasso => Variant::Lasso,
            VariantArg::Lars => Variant::Lars,
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Svg,
    Csv,
}

impl Format {
    fn extension(self) -> &'static str {
        match self {
            Format::Json => "json",
            Format::Svg => "svg",
            Format::Csv => "csv",
        }
    }
}

#[derive(Args, Debug)]
struct TilingArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    params: TilingParams,
    /// Deepest support size to resolve.
    #[arg(long)]
    s_max: usize,
    /// Output path; the extension is replaced per format.
    #[arg(long, default_value = "tiling.json")]
    out: PathBuf,
    /// Any of json, svg.
    #[arg(long, value_enum, value_delimiter = ',', default_value = "json")]
    format: Vec<Format>,
    /// Boundary samples per segment.
    #[arg(long, default_value_t = 64)]
    resolution: usize,
    /// Outline tiles with this support in the SVG, e.g. 0,3,7.
    #[arg(long, value_delimiter = ',')]
    highlight: Option<Vec<usize>>,
}

#[derive(Args, Debug)]
struct SolveArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    params: TilingParams,
    /// True sparse component u, for reporting the symmetric difference.
    #[arg(long)]
    truth: Option<PathBuf>,
    /// One of omp, iht, lasso, plasso, mp-rank, mp-all.
    #[arg(long)]
    method: String,
    /// Support size given to the decoder.
    #[arg(long = "s-max", alias = "s")]
    s: usize,
    /// Also write the result as JSON.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct BenchArgs {
    /// gaussian, circulant or gamma-gaussian.
    #[arg(long, default_value = "gaussian")]
    ensemble: String,
    #[arg(long, default_value_t = 60)]
    m: usize,
    #[arg(long, default_value_t = 250)]
    n: usize,
    #[arg(long, default_value_t = 6)]
    s: usize,
    #[arg(long, default_value_t = 1.5)]
    c_min: f64,
    #[arg(long, default_value_t = 5.0)]
    c_max: f64,
    #[arg(long, default_value_t = 0.2)]
    v_amplitude: f64,
    #[arg(long, default_value_t = 0.02)]
    sigma: f64,
    #[arg(long, default_value_t = 1e-6)]
    beta_min: f64,
    #[arg(long, default_value_t = 100.0)]
    beta_max: f64,
    /// Methods to run; all when omitted. Repeat or separate with commas.
    #[arg(long, value_delimiter = ',')]
    method: Vec<String>,
    /// support-size, dimension, noise or fixed-beta.
    #[arg(long, default_value = "support-size")]
    sweep: String,
    /// Sweep values; defaults to the configured s.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    values: Vec<f64>,
    #[arg(long, default_value_t = 20)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads; 0 uses all cores.
    #[arg(long, default_value_t = 0)]
    workers: usize,
    /// Record wall times; outputs are then no longer reproducible.
    #[arg(long)]
    timings: bool,
    #[arg(long, default_value = "bench.csv")]
    out: PathBuf,
    /// Any of csv, json.
    #[arg(long, value_enum, value_delimiter = ',', default_value = "csv")]
    format: Vec<Format>,
}

enum Failure {
    Usage(String),
    Run(Error),
    Threshold(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Run(e)
    }
}

type CmdResult = Result<(), Failure>;

fn with_extension(out: &Path, format: Format) -> PathBuf {
    out.with_extension(format.extension())
}

fn write_output(path: &Path, contents: &str) -> Result<(), Error> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, contents)?;
    info!("wrote {}", path.display());
    Ok(())
}

fn load_problem(input: &InputArgs) -> Result<Problem, Error> {
    let a = read_matrix(&input.matrix)?;
    let y = read_vector(&input.datum)?;
    Problem::new(a, y)
}

fn cmd_tiling(args: &TilingArgs) -> CmdResult {
    if let Some(f) = args.format.iter().find(|f| **f == Format::Csv) {
        return Err(Failure::Usage(format!(
            "tiling cannot be written as {}",
            f.extension()
        )));
    }
    let problem = load_problem(&args.input)?;
    let start = Instant::now();
    let bt = decompose(&problem)?;
    let range = (args.params.beta_min, args.params.beta_max);
    let graph = build(&bt, range, args.s_max, args.params.variant.into())?;
    let elapsed = start.elapsed().as_secs_f64();
    for &format in &args.format {
        let path = with_extension(&args.out, format);
        let text = match format {
            Format::Json => export_json(&graph, args.resolution)?.to_json()?,
            _ => export_svg(
                &graph,
                &SvgOptions {
                    resolution: args.resolution,
                    highlight: args.highlight.clone(),
                    ..Default::default()
                },
            )?,
        };
        write_output(&path, &text)?;
    }
    println!("tiles: {}", graph.tile_count());
    for (size, supports) in graph.supports_by_size() {
        println!("size {size}: {} distinct supports", supports.len());
    }
    println!("wall time: {elapsed:.3}s");
    Ok(())
}

#[derive(Serialize)]
struct SolveReport {
    method: String,
    s: usize,
    support: Vec<usize>,
    coefficients: Vec<f64>,
    candidates: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    symmetric_difference: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    success: Option<bool>,
}

/// Closest candidate to the truth when known, otherwise the last (largest) one.
fn pick(candidates: &[Vec<usize>], truth: Option<&[usize]>) -> Result<Vec<usize>, Error> {
    match truth {
        Some(t) => oracle_closest(candidates, t),
        None => candidates
            .last()
            .cloned()
            .ok_or_else(|| Error::Precondition("no candidate supports".into())),
    }
}

fn cmd_solve(args: &SolveArgs) -> CmdResult {
    let method: Method = args
        .method
        .parse()
        .map_err(|_| Failure::Usage(format!("unknown method '{}'", args.method)))?;
    let mut problem = load_problem(&args.input)?;
    if let Some(path) = &args.truth {
        problem = problem.with_true_signal(read_vector(path)?)?;
    }
    let truth = problem.truth().map(|t| t.support());
    let s = args.s;
    let (support, candidates) = match method {
        Method::Omp => (omp(&problem, s)?.supports.remove(0), 1),
        Method::L1Iht => (iht_warm(&problem, s)?.supports.remove(0), 1),
        Method::Lasso | Method::PLasso => {
            let r = if method == Method::Lasso {
                lasso_supports(&problem, s)?
            } else {
                plasso_supports(&problem, s)?
            };
            (pick(&r.supports, truth.as_deref())?, r.supports.len())
        }
        Method::MpRank | Method::MpAll => {
            let bt = decompose(&problem)?;
            let range = (args.params.beta_min, args.params.beta_max);
            let graph = build(&bt, range, s, args.params.variant.into())?;
            if method == Method::MpRank {
                let (size, cands) = largest_supports(&graph, s)?;
                (rank_supports(&problem, &cands, size)?.chosen, cands.len())
            } else {
                let Some(t) = truth.as_deref() else {
                    return Err(Failure::Usage("mp-all needs --truth".into()));
                };
                let all: Vec<Vec<usize>> =
                    graph.supports_by_size().into_values().flatten().collect();
                (oracle_closest(&all, t)?, all.len())
            }
        }
    };
    let coefficients = regress(&problem, &support)
        .map(|(u, _)| u.iter().copied().collect())
        .unwrap_or_default();
    let sd = truth.as_deref().map(|t| symmetric_difference(&support, t));
    let report = SolveReport {
        method: method.label().into(),
        s,
        support,
        coefficients,
        candidates,
        symmetric_difference: sd,
        success: sd.map(|d| d == 0),
    };
    println!("method: {}", report.method);
    println!("support: {:?}", report.support);
    println!("coefficients: {:?}", report.coefficients);
    if let Some(d) = report.symmetric_difference {
        println!("symmetric difference: {d}");
        println!("success: {}", d == 0);
    }
    if let Some(path) = &args.out {
        write_output(
            path,
            &serde_json::to_string_pretty(&report).map_err(Error::from)?,
        )?;
    }
    Ok(())
}

fn cmd_bench(args: &BenchArgs) -> CmdResult {
    let ensemble: Ensemble = args
        .ensemble
        .parse()
        .map_err(|e: Error| Failure::Usage(e.to_string()))?;
    let sweep: Sweep = args
        .sweep
        .parse()
        .map_err(|e: Error| Failure::Usage(e.to_string()))?;
    let methods = if args.method.is_empty() {
        match sweep {
            Sweep::FixedBeta => vec![Method::MpAll],
            _ => Method::ALL.to_vec(),
        }
    } else {
        args.method
            .iter()
            .map(|m| {
                m.parse()
                    .map_err(|_| Failure::Usage(format!("unknown method '{m}'")))
            })
            .collect::<Result<Vec<Method>, Failure>>()?
    };
    if let Some(f) = args.format.iter().find(|f| **f == Format::Svg) {
        return Err(Failure::Usage(format!(
            "bench results cannot be written as {}",
            f.extension()
        )));
    }
    let config = ExperimentConfig {
        ensemble,
        m: args.m,
        n: args.n,
        s: args.s,
        c_min: args.c_min,
        c_max: args.c_max,
        v_amplitude: args.v_amplitude,
        sigma: args.sigma,
        trials: args.trials,
        seed: args.seed,
        beta_range: (args.beta_min, args.beta_max),
        methods,
        fixed_beta: None,
        workers: args.workers,
        include_timings: args.timings,
    };
    let values = if args.values.is_empty() {
        match sweep {
            Sweep::SupportSize => vec![args.s as f64],
            Sweep::Dimension => vec![args.n as f64],
            Sweep::Noise => vec![args.sigma],
            Sweep::FixedBeta => {
                return Err(Failure::Usage("fixed-beta sweep needs --values".into()))
            }
        }
    } else {
        args.values.clone()
    };
    let start = Instant::now();
    let result = run_sweep(&config, sweep, &values)?;
    for &format in &args.format {
        let text = match format {
            Format::Json => result.to_json()?,
            _ => result.to_csv(),
        };
        write_output(&with_extension(&args.out, format), &text)?;
    }
    print!("{}", result.pivot_table());
    println!("wall time: {:.3}s", start.elapsed().as_secs_f64());
    let rate = result.max_error_rate();
    if rate > MAX_ERROR_RATE {
        return Err(Failure::Threshold(format!(
            "a method errored on {:.0}% of trials (limit {:.0}%)",
            100.0 * rate,
            100.0 * MAX_ERROR_RATE
        )));
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("TILEPATH_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_FAILURE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match &cli.command {
        Command::Tiling(a) => cmd_tiling(a),
        Command::Solve(a) => cmd_solve(a),
        Command::Bench(a) => cmd_bench(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}\n\nFor more information, try 'tilepath --help'.");
            ExitCode::from(EXIT_FAILURE)
        }
        Err(Failure::Run(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_io() { EXIT_IO } else { EXIT_FAILURE })
        }
        Err(Failure::Threshold(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_FAILURE)
        }
    }
}
