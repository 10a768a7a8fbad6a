//! `haar-greedy`: greedy m-term Haar approximation reports and property suites.
//!
//! Single-function mode compares the greedy error with the best m-term error:
//!
//! ```text
//! haar-greedy --input f.json --p 2 --m 2
//! haar-greedy --d 2 --level 2 --seed 1 --p 2 --m 3
//! ```
//!
//! Suite mode runs a randomized verification suite:
//!
//! ```text
//! haar-greedy --suite theorem1 --trials 1000 --seed 7
//! ```
//!
//! Exit status: 0 success, 1 inequality violation, 2 malformed input or
//! unknown suite, 3 oracle limits exceeded, 4 solver failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use haar_greedy::cli::{
    exit, exit_code, random_function, read_input, render, run_approx, run_suite, ApproxOptions, SuiteOptions,
};
use haar_greedy::oracle::{Schedule, DEFAULT_TOL};
use haar_greedy::Error;

#[derive(Debug, Parser)]
#[command(
    name = "haar-greedy",
    version,
    about = "Greedy Haar approximation in L^p with verified error bounds"
)]
struct Args {
    /// Exponent p of the L^p norm (1 < p < inf).
    #[arg(long, default_value_t = 2.0)]
    p: f64,

    /// Number of terms m.
    #[arg(long, default_value_t = 1)]
    m: usize,

    /// Input file: JSON {"d", "J", "values"} or CSV with one value per line.
    #[arg(long)]
    input: Option<PathBuf>,

    /// Dimension d (CSV input and random functions).
    #[arg(long)]
    d: Option<usize>,

    /// Grid level J for a random function when no input file is given.
    #[arg(long)]
    level: Option<u32>,

    /// Skip the best m-term oracle.
    #[arg(long)]
    no_oracle: bool,

    /// Run a property suite instead of a single report.
    #[arg(long, value_name = "NAME")]
    suite: Option<String>,

    /// Trials for --suite.
    #[arg(long, default_value_t = 100)]
    trials: usize,

    /// Seed for random functions and suites.
    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Relative first-order tolerance of the oracle's inner solver.
    #[arg(long, default_value_t = DEFAULT_TOL)]
    tol: f64,

    /// Worker threads; 1 runs serially. Output does not depend on it.
    #[arg(long)]
    threads: Option<usize>,

    /// Add wall-clock timings to the report (makes output run-dependent).
    #[arg(long)]
    timings: bool,
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) if e.use_stderr() => {
            let _ = e.print();
            return ExitCode::from(exit::BAD_INPUT as u8);
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
    };
    let code = match run(&args) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("haar-greedy: {e}");
            exit_code(&e)
        }
    };
    ExitCode::from(code as u8)
}

fn run(args: &Args) -> Result<i32, Error> {
    if !(args.tol.is_finite() && args.tol > 0.0) {
        return Err(Error::Input(format!("--tol must be positive, got {}", args.tol)));
    }
    let schedule = match args.threads {
        Some(0) => return Err(Error::Input("--threads must be at least 1".into())),
        Some(1) => Schedule::Serial,
        Some(n) => {
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global()
                .map_err(|e| Error::InvalidArgument(e.to_string()))?;
            Schedule::Parallel
        }
        None => Schedule::Parallel,
    };

    if let Some(name) = &args.suite {
        let opts = SuiteOptions {
            trials: args.trials,
            seed: args.seed,
            tol: args.tol,
            schedule,
        };
        let summary = run_suite(name, &opts)?;
        print!("{}", render(&summary.to_json()));
        if !summary.passed() {
            eprintln!("haar-greedy: {} violations in suite {name}", summary.violations.len());
            return Ok(exit::VIOLATION);
        }
        return Ok(exit::OK);
    }

    let input = match (&args.input, args.level) {
        (Some(path), None) => read_input(path, args.d)?,
        (None, Some(level)) => random_function(args.d.unwrap_or(1), level, args.seed)?,
        (Some(_), Some(_)) => return Err(Error::Input("--input and --level are exclusive".into())),
        (None, None) => return Err(Error::Input("give --input PATH, --level J, or --suite NAME".into())),
    };
    let opts = ApproxOptions {
        p: args.p,
        m: args.m,
        oracle: !args.no_oracle,
        tol: args.tol,
        schedule,
        timings: args.timings,
    };
    let report = run_approx(&input, &opts)?;
    print!("{}", render(&report.to_json()));
    if report.is_violation() {
        eprintln!("haar-greedy: greedy bound violated");
        return Ok(exit::VIOLATION);
    }
    Ok(exit::OK)
}
