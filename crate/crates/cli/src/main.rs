//! Command-line front-end: adaptive runs and the refinement eigenstudy.

mod config;
mod run;

use anyhow::Context;
use avem_core::adaptivity::RunStatus;
use avem_core::analysis_oracles::table1_csv;
use clap::{Args, Parser, Subcommand};
use config::RunConfig;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "avem", version, about = "Adaptive virtual elements on meshes with hanging nodes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the adaptive loop on a mesh and problem file.
    Run(RunArgs),
    /// Computable constants of the analysis.
    Oracle(OracleArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Mesh file (vertices / triangles blocks).
    mesh: PathBuf,
    /// Problem file (A, c, f blocks).
    problem: PathBuf,
    /// key=value file; flags given on the command line take precedence.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    theta: Option<f64>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    lambda_cap: Option<u32>,
    /// Uniform bisection levels for inconsistency-dominated elements, or `auto`.
    #[arg(long)]
    m: Option<String>,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    zeta: Option<f64>,
    /// Skip the fine reference solve; the error column is then zero.
    #[arg(long)]
    no_reference: bool,
}

#[derive(Args)]
struct OracleArgs {
    /// Largest eigenvalue of the refinement defect for k = 2, 3 and m = 1, 2.
    #[arg(long)]
    table1: bool,
    /// Highest degree in the table.
    #[arg(long, default_value_t = 3)]
    max_k: usize,
    #[arg(long, default_value_t = 2)]
    levels: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn merged_config(a: &RunArgs) -> anyhow::Result<RunConfig> {
    let mut cfg = match &a.config {
        Some(p) => RunConfig::from_file(p)?,
        None => RunConfig::default(),
    };
    let flags: [(&str, Option<String>); 11] = [
        ("k", a.k.map(|v| v.to_string())),
        ("gamma", a.gamma.map(|v| v.to_string())),
        ("theta", a.theta.map(|v| v.to_string())),
        ("eps", a.eps.map(|v| v.to_string())),
        ("lambda_cap", a.lambda_cap.map(|v| v.to_string())),
        ("m", a.m.clone()),
        ("max_iters", a.max_iters.map(|v| v.to_string())),
        ("threads", a.threads.map(|v| v.to_string())),
        ("out", a.out.as_ref().map(|p| p.display().to_string())),
        ("beta", a.beta.map(|v| v.to_string())),
        ("zeta", a.zeta.map(|v| v.to_string())),
    ];
    for (key, value) in flags {
        if let Some(v) = value {
            cfg.apply(key, &v).with_context(|| format!("flag --{}", key.replace('_', "-")))?;
        }
    }
    if a.no_reference {
        cfg.reference = false;
    }
    Ok(cfg)
}

fn run_command(a: &RunArgs) -> ExitCode {
    let cfg = match merged_config(a).and_then(|c| c.validate().map(|_| c)) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(1);
        }
    };
    if let Some(n) = cfg.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: thread pool: {e}");
            return ExitCode::from(1);
        }
    }
    match run::run(&cfg, &a.mesh, &a.problem) {
        Ok(outcome) => {
            println!(
                "{} iterations, eta^2 + psi^2 = {:.6e}",
                outcome.iterations, outcome.final_estimator
            );
            if let Some(s) = &outcome.summary {
                if !s.alpha.is_empty() {
                    println!("max alpha_hat = {:.4}, geometric mean = {:.4}", s.max, s.geometric_mean);
                }
            }
            match outcome.status {
                RunStatus::Converged => ExitCode::SUCCESS,
                RunStatus::IterationCap => {
                    eprintln!("iteration cap reached before eps = {:e}", cfg.eps);
                    ExitCode::from(3)
                }
            }
        }
        Err(f) => {
            eprintln!("error: {:#}", f.error());
            ExitCode::from(f.exit_code() as u8)
        }
    }
}

fn oracle_command(a: &OracleArgs) -> ExitCode {
    if !a.table1 {
        eprintln!("error: nothing to do (try --table1)");
        return ExitCode::from(1);
    }
    let degrees: Vec<usize> = (2..=a.max_k).collect();
    let csv = match table1_csv(&degrees, a.levels) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    print!("{csv}");
    if let Some(dir) = &a.out {
        let path = dir.join("table1.csv");
        if let Err(e) = std::fs::create_dir_all(dir).and_then(|_| std::fs::write(&path, &csv)) {
            eprintln!("error: writing {}: {e}", path.display());
            return ExitCode::from(1);
        }
    }
    ExitCode::SUCCESS
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match &cli.command {
        Command::Run(a) => run_command(a),
        Command::Oracle(a) => oracle_command(a),
    }
}
