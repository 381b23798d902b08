use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use vsheet::harness::{
    bundled_scenario, emit_results, evaluate, load_scenario, run_scenario, run_suite,
};
use vsheet::quadrature::nan_max;
use vsheet::Result;

/// Vortex-sheet equilibrium laboratory.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario file and write report.json and sweep.csv.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Override the grid as `N_ALPHAxN_ETA`.
        #[arg(long, value_parser = parse_resolution)]
        resolution: Option<(usize, usize)>,
        /// Override the sweep, e.g. `0.04,0.02,0.01`.
        #[arg(long, value_delimiter = ',')]
        eps: Option<Vec<f64>>,
    },
    /// Run the bundled suite and check every acceptance criterion.
    Verify,
    /// Print the rate table of a bundled scenario.
    Sweep {
        #[arg(long)]
        scenario: String,
        #[arg(long, value_enum, default_value_t = Param::Eps)]
        param: Param,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Param {
    Eps,
}

fn parse_resolution(s: &str) -> std::result::Result<(usize, usize), String> {
    let (a, b) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("expected NxM, got `{s}`"))?;
    let parse = |t: &str| t.trim().parse::<usize>().map_err(|e| format!("`{t}`: {e}"));
    Ok((parse(a)?, parse(b)?))
}

fn init_threads() {
    if let Some(n) = std::env::var("VSHEET_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
    {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            log::warn!("threads={n} error=\"{e}\"");
        }
    }
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Run {
            config,
            out,
            resolution,
            eps,
        } => {
            let mut spec = load_scenario(&config)?;
            if let Some((na, ne)) = resolution {
                spec.resolution.n_alpha_closed = na;
                spec.resolution.n_alpha_open = na;
                spec.resolution.n_eta = ne;
            }
            if let Some(eps) = eps {
                spec.eps_sweep = eps;
            }
            spec.validate()?;
            let artifact = run_scenario(&spec)?;
            for p in emit_results(&artifact, &out)? {
                println!("{}", p.display());
            }
            println!("verdict: {:?}", artifact.verdict.verdict);
            Ok(true)
        }
        Command::Verify => {
            let arts = run_suite()?;
            for a in &arts {
                println!("{:<28} {:?}", a.scenario.name, a.verdict.verdict);
            }
            let outcomes = evaluate(&arts)?;
            for o in &outcomes {
                println!("{o}");
            }
            Ok(outcomes.iter().all(|o| o.passed))
        }
        Command::Sweep { scenario, param } => {
            let Param::Eps = param;
            let art = run_scenario(&bundled_scenario(&scenario)?)?;
            println!(
                "{:>10} {:>14} {:>14} {:>14} {:>12}",
                "eps", "I_eps", "I_tilde", "J_eps", "defect_lin"
            );
            for o in &art.sweep {
                match &o.point {
                    Some(p) => println!(
                        "{:>10.4e} {:>14.6e} {:>14.6e} {:>14.6e} {:>12.4e}",
                        o.epsilon,
                        p.report.i_eps,
                        p.report.i_tilde,
                        p.report.j_eps,
                        p.linearity.iter().map(|l| l.max_defect).fold(0.0, nan_max)
                    ),
                    None => println!(
                        "{:>10.4e} error: {}",
                        o.epsilon,
                        o.error.as_deref().unwrap_or("?")
                    ),
                }
            }
            for f in &art.fits {
                match f.fit {
                    Some(r) => println!(
                        "fit {:<26} exponent {:>8.4} r2 {:.4}",
                        f.quantity, r.exponent, r.r_squared
                    ),
                    None => println!(
                        "fit {:<26} {}",
                        f.quantity,
                        f.error.as_deref().unwrap_or("?")
                    ),
                }
            }
            println!("verdict: {:?}", art.verdict.verdict);
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .format_target(false)
        .init();
    init_threads();
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            log::error!("error=\"{e}\"");
            ExitCode::FAILURE
        }
    }
}
