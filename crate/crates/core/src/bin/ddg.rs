use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use ddg_core::harness::{run_convergence, Beta1, InitMode, Problem, RunConfig};
use ddg_core::{par, Execution};

/// Convergence study of the DDG scheme on a manufactured problem.
#[derive(Debug, Parser)]
#[command(name = "ddg", version)]
struct Cli {
    /// burgers2d | sinflux2d | heat
    #[arg(long, default_value = "burgers2d")]
    problem: Problem,
    /// Polynomial degree.
    #[arg(long, default_value_t = 2)]
    k: usize,
    /// Comma-separated, doubling mesh sizes.
    #[arg(long, value_delimiter = ',', default_value = "4,8,16,32")]
    n_list: Vec<usize>,
    #[arg(long, default_value_t = 12.0)]
    beta0: f64,
    /// A number, a fraction like 1/4, or "auto" for 1/(2k(k+1)).
    #[arg(long, default_value = "auto")]
    beta1: Beta1,
    /// dt = cfl * h^2; per-degree default when omitted.
    #[arg(long)]
    cfl: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    t_final: f64,
    /// l2 | pih | corrected:p (default corrected:min(1, k-1)).
    #[arg(long)]
    init: Option<InitMode>,
    /// CSV output path; a full-precision copy is written next to it.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (0 = all cores, 1 = sequential).
    #[arg(long, default_value_t = 0)]
    threads: usize,
    /// Check the problem's residual identity before running.
    #[arg(long)]
    verify: bool,
}

fn full_path(out: &std::path::Path) -> PathBuf {
    let stem = out.file_stem().and_then(|s| s.to_str()).unwrap_or("table");
    out.with_file_name(format!("{stem}.full.csv"))
}

fn run(cli: Cli) -> ddg_core::Result<()> {
    let exec = if cli.threads == 1 { Execution::Sequential } else { Execution::Parallel };
    if cli.threads > 1 && !par::set_threads(cli.threads) {
        log::warn!("thread pool already initialized; --threads ignored");
    }
    let cfg = RunConfig {
        problem: cli.problem,
        k: cli.k,
        n_list: cli.n_list,
        beta0: cli.beta0,
        beta1: cli.beta1,
        cfl: cli.cfl,
        t_final: cli.t_final,
        init: cli.init,
        verify: cli.verify,
        exec,
    };
    let report = run_convergence(&cfg)?;
    print!("{}", report.to_text_table());
    if let Some(out) = cli.out {
        std::fs::write(&out, report.to_csv())?;
        std::fs::write(full_path(&out), report.to_csv_full())?;
        log::info!("wrote {}", out.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
