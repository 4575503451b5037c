use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hashlat::bench::{emit_csv, emit_json, fit_slope, load_plan, run_experiment_into, Summary};
use hashlat::{corpus, next_prime, oracle, Error, FilterEstimator, Params, RngStream, StreamKey, Window};
use serde_json::json;

#[derive(Parser)]
#[command(name = "hashlat", version, about = "Hashed lattice filter integration")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment plan and write records.csv and summary.json.
    Benchmark(BenchmarkArgs),
    /// One median estimate of a named integrand.
    Integrate(IntegrateArgs),
    /// Report the mass of a truncated window.
    VerifyWindow(WindowArgs),
    /// Run the brute-force checks on small instances.
    Oracle,
    /// Primality helpers.
    Prime {
        /// Print the smallest prime >= X.
        #[arg(long, value_name = "X")]
        next: u64,
    },
}

#[derive(Args)]
struct BenchmarkArgs {
    /// Plan JSON, or a summary.json from an earlier run.
    #[arg(long)]
    plan: PathBuf,
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Exit with status 3 unless the fit meets the thresholds.
    #[arg(long)]
    check: bool,
    #[arg(long, allow_negative_numbers = true)]
    max_slope: Option<f64>,
    #[arg(long)]
    min_r2: Option<f64>,
}

#[derive(Args)]
struct IntegrateArgs {
    #[arg(long)]
    function: String,
    #[arg(long)]
    dim: usize,
    #[arg(long = "N")]
    modulus: u64,
    #[arg(long = "L")]
    half_width: usize,
    #[arg(long)]
    r: f64,
    #[arg(long, default_value_t = 63)]
    t: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct WindowArgs {
    #[arg(long = "L")]
    half_width: usize,
    #[arg(long)]
    r: f64,
    #[arg(long = "N")]
    modulus: u64,
}

enum Failure {
    Error(Error),
    Check(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Error(e)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Benchmark(args) => benchmark(args),
        Command::Integrate(args) => integrate(args),
        Command::VerifyWindow(args) => verify_window(args),
        Command::Oracle => run_oracle(),
        Command::Prime { next } => next_prime(next).map(|p| println!("{p}")).map_err(Failure::from),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Check(msg)) => {
            eprintln!("check failed: {msg}");
            ExitCode::from(3)
        }
        Err(Failure::Error(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_validation() { 2 } else { 1 })
        }
    }
}

fn benchmark(args: BenchmarkArgs) -> Result<(), Failure> {
    let plan = load_plan(&args.plan)?;
    std::fs::create_dir_all(&args.out).map_err(|source| Error::Io { path: args.out.clone(), source })?;
    let csv_path = args.out.join("records.csv");
    let mut records = Vec::new();
    if let Err(e) = run_experiment_into(&plan, &mut records) {
        emit_csv(&records, &csv_path)?;
        eprintln!("wrote {} completed records to {}", records.len(), csv_path.display());
        return Err(e.into());
    }
    emit_csv(&records, &csv_path)?;
    let fit = fit_slope(&records);
    let summary = Summary::new(&plan, &records, fit.as_ref().ok().copied())?;
    emit_json(&summary, args.out.join("summary.json"))?;
    for level in &summary.levels {
        println!("k={:<3} M={:<8} mse={:.3e}", level.k, level.sample_size, level.mean_sq_error);
    }
    match &fit {
        Ok(f) => println!("slope={:.3} r2={:.3} (k={}..{})", f.slope, f.r_squared, f.k_min, f.k_max),
        Err(e) => println!("no slope: {e}"),
    }
    if args.check {
        let f = fit.map_err(Failure::from)?;
        if let Some(max) = args.max_slope {
            if f.slope > max {
                return Err(Failure::Check(format!("slope {:.3} > {max}", f.slope)));
            }
        }
        if let Some(min) = args.min_r2 {
            if f.r_squared < min {
                return Err(Failure::Check(format!("r2 {:.3} < {min}", f.r_squared)));
            }
        }
    }
    Ok(())
}

fn integrate(args: IntegrateArgs) -> Result<(), Failure> {
    let params = Params::new(args.dim, args.modulus, args.half_width, args.r, args.t, args.seed)?;
    let f = corpus(&args.function, args.dim, args.seed)?;
    let estimator = FilterEstimator::new(params.clone())?;
    let est = estimator.median_estimate(&*f, &RngStream::new(args.seed, StreamKey::new(0, 0, 0)))?;
    let exact = f.exact_integral();
    let out = json!({
        "function": args.function,
        "estimate_re": est.value.re,
        "estimate_im": est.value.im,
        "exact_re": exact.map(|c| c.re),
        "exact_im": exact.map(|c| c.im),
        "sq_error": exact.map(|c| (est.value - c).norm_sqr()),
        "M": params.sample_size(),
        "evaluations": est.evaluations,
        "window_mass": estimator.window().mass(),
    });
    println!("{}", serde_json::to_string_pretty(&out).expect("plain JSON value"));
    Ok(())
}

fn verify_window(args: WindowArgs) -> Result<(), Failure> {
    let params = Params::new(1, args.modulus, args.half_width, args.r, 1, 0)?;
    let window = Window::new(args.half_width, args.r, args.modulus)?;
    let out = json!({
        "L": args.half_width,
        "r": args.r,
        "N": args.modulus,
        "mass": window.mass(),
        "mass_minus_one": oracle::window_mass_deficit(args.half_width, args.r),
        "epsilon": params.window_epsilon(),
    });
    println!("{}", serde_json::to_string_pretty(&out).expect("plain JSON value"));
    Ok(())
}

fn run_oracle() -> Result<(), Failure> {
    let checks = oracle::run_suite();
    for c in &checks {
        println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    let failed = checks.iter().filter(|c| !c.passed).count();
    if failed > 0 {
        return Err(Failure::Check(format!("{failed} oracle checks failed")));
    }
    Ok(())
}
