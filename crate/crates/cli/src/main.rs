//! `fracconst`: minimization, sweeps and inequality checks for the
//! fractional Neumann embedding quotient.
//!
//! Exit status: 0 success, 1 verification failure, 2 usage error,
//! 3 numerical failure.

mod commands;
mod config;
mod grid;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use commands::{Failure, Run};
use config::{Settings, SolverOverrides};

#[derive(Parser)]
#[command(name = "fracconst", version, about = "Constancy of minimizers of the fractional Neumann quotient")]
struct Cli {
    /// TOML file with base settings; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory for CSV/JSON artifacts and manifest.json [default: out]
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Worker threads [default: available parallelism]
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Seed for random multistart points.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Default)]
struct DomainArgs {
    /// Unit-box dimension [default: 1]
    #[arg(long = "n")]
    n: Option<usize>,
    /// Highest cosine index per axis.
    #[arg(long)]
    modes: Option<usize>,
    /// Quadrature nodes per axis [default: max(4 modes, 20)]
    #[arg(long)]
    nodes: Option<usize>,
    /// Spectral data JSON to use instead of the unit box.
    #[arg(long)]
    data: Option<PathBuf>,
}

#[derive(Args, Default)]
struct SolverArgs {
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long)]
    tol_grad: Option<f64>,
    #[arg(long)]
    random_starts: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Multistart minimization at one (s, q, eps).
    Minimize {
        #[command(flatten)]
        domain: DomainArgs,
        #[command(flatten)]
        solver: SolverArgs,
        /// Fractional order [default: 0.5]
        #[arg(long)]
        s: Option<f64>,
        #[arg(long)]
        q: Option<f64>,
        #[arg(long)]
        eps: Option<f64>,
    },
    /// Minimum and local verdict along a line of eps at fixed q.
    Bifurcation {
        #[command(flatten)]
        domain: DomainArgs,
        #[command(flatten)]
        solver: SolverArgs,
        #[arg(long)]
        s: Option<f64>,
        #[arg(long)]
        q: Option<f64>,
        /// Absolute eps values, `lo:hi:count` or a list.
        #[arg(long)]
        eps_grid: Option<String>,
        /// Multiples of the local threshold [default: 0.5:1.5:11]
        #[arg(long)]
        ratio_grid: Option<String>,
    },
    /// Global-constancy verdict over a (q, eps) grid.
    Phase {
        #[command(flatten)]
        domain: DomainArgs,
        #[command(flatten)]
        solver: SolverArgs,
        #[arg(long)]
        s: Option<f64>,
        /// [default: 2.5:6:8]
        #[arg(long)]
        q_grid: Option<String>,
        /// Absolute eps values, or `auto` for 0.25..1.5 times the local threshold.
        #[arg(long)]
        eps_grid: Option<String>,
    },
    /// Bisection for the global constancy threshold at each q.
    BigE {
        #[command(flatten)]
        domain: DomainArgs,
        #[command(flatten)]
        solver: SolverArgs,
        #[arg(long)]
        s: Option<f64>,
        /// [default: 3:6:4]
        #[arg(long)]
        q_grid: Option<String>,
        /// Bracket width relative to the local threshold [default: 0.02]
        #[arg(long)]
        tol_rel: Option<f64>,
        /// Absolute cap on the bracket.
        #[arg(long)]
        eps_max: Option<f64>,
    },
    /// Quotient of corner bubbles at the critical exponent.
    Bubble {
        #[arg(long = "n")]
        n: Option<usize>,
        /// [default: 0.25]
        #[arg(long)]
        s: Option<f64>,
        /// [default: 0.4,0.2,0.1,0.05]
        #[arg(long)]
        widths: Option<String>,
        /// Bubble center, comma separated [default: origin corner]
        #[arg(long, value_delimiter = ',')]
        center: Option<Vec<f64>>,
    },
    /// Check every link of the Gamma-function inequality chain.
    VerifyIneq {
        #[arg(long)]
        n_max: Option<usize>,
        #[arg(long)]
        s_step: Option<f64>,
    },
    /// Write unit-box spectral data to JSON.
    MakeDomain {
        #[arg(long = "n")]
        n: Option<usize>,
        #[arg(long)]
        modes: Option<usize>,
        #[arg(long)]
        nodes: Option<usize>,
        /// [default: <out-dir>/domain.json]
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

fn with_domain(mut s: Settings, d: DomainArgs) -> Settings {
    s.n = d.n;
    s.modes = d.modes;
    s.nodes = d.nodes;
    s.data = d.data;
    s
}

fn with_solver(mut s: Settings, o: SolverArgs) -> Settings {
    if o.max_iters.is_some() || o.tol_grad.is_some() || o.random_starts.is_some() {
        s.solver = Some(SolverOverrides {
            max_iters: o.max_iters,
            tol_grad: o.tol_grad,
            n_random_starts: o.random_starts,
            ..Default::default()
        });
    }
    s
}

/// The command name and the settings given on the command line.
fn flag_settings(cli: Cli) -> (&'static str, Settings, Option<PathBuf>) {
    let base = Settings {
        seed: cli.seed,
        threads: cli.threads,
        out_dir: cli.out_dir,
        ..Default::default()
    };
    let (name, settings) = match cli.command {
        Command::Minimize { domain, solver, s, q, eps } => {
            let st = with_solver(with_domain(base, domain), solver);
            ("minimize", Settings { s, q, eps, ..st })
        }
        Command::Bifurcation {
            domain,
            solver,
            s,
            q,
            eps_grid,
            ratio_grid,
        } => {
            let st = with_solver(with_domain(base, domain), solver);
            (
                "bifurcation",
                Settings {
                    s,
                    q,
                    eps_grid,
                    ratio_grid,
                    ..st
                },
            )
        }
        Command::Phase {
            domain,
            solver,
            s,
            q_grid,
            eps_grid,
        } => {
            let st = with_solver(with_domain(base, domain), solver);
            ("phase", Settings { s, q_grid, eps_grid, ..st })
        }
        Command::BigE {
            domain,
            solver,
            s,
            q_grid,
            tol_rel,
            eps_max,
        } => {
            let st = with_solver(with_domain(base, domain), solver);
            (
                "big-e",
                Settings {
                    s,
                    q_grid,
                    tol_rel,
                    eps_max,
                    ..st
                },
            )
        }
        Command::Bubble { n, s, widths, center } => (
            "bubble",
            Settings {
                n,
                s,
                widths,
                center,
                ..base
            },
        ),
        Command::VerifyIneq { n_max, s_step } => ("verify-ineq", Settings { n_max, s_step, ..base }),
        Command::MakeDomain { n, modes, nodes, output } => (
            "make-domain",
            Settings {
                n,
                modes,
                nodes,
                output,
                ..base
            },
        ),
    };
    (name, settings, cli.config)
}

fn execute(name: &str, run: &mut Run) -> Result<(), Failure> {
    match name {
        "minimize" => commands::minimize(run),
        "bifurcation" => commands::bifurcation(run),
        "phase" => commands::phase(run),
        "big-e" => commands::big_e(run),
        "bubble" => commands::bubble(run),
        "verify-ineq" => commands::verify_ineq(run),
        "make-domain" => commands::make_domain(run),
        other => Err(Failure::Usage(format!("unknown command {other}"))),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (name, flags, config) = flag_settings(cli);
    let settings = match config.as_deref().map(Settings::load).transpose() {
        Ok(file) => file.unwrap_or_default().overlay(&flags),
        Err(e) => {
            eprintln!("usage error: {e}");
            return ExitCode::from(2);
        }
    };
    if let Some(threads) = settings.threads {
        if threads == 0 {
            eprintln!("usage error: `threads` must be positive");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
            eprintln!("numerical failure: cannot start worker pool: {e}");
            return ExitCode::from(3);
        }
    }

    let start = Instant::now();
    let mut run = Run::new(name, settings);
    let outcome = execute(name, &mut run);
    if let Err(Failure::Usage(m)) = &outcome {
        eprintln!("usage error: {m}");
        return ExitCode::from(2);
    }
    if let Err(f @ Failure::Numerical(_)) = &outcome {
        run.manifest.partial = true;
        run.manifest.notes.push(f.to_string());
    }
    run.manifest.wall_time_seconds = start.elapsed().as_secs_f64();
    let manifest = run.write_manifest();
    match (outcome, manifest) {
        (Ok(()), Ok(())) => ExitCode::SUCCESS,
        (Err(f), _) | (Ok(()), Err(f)) => {
            eprintln!("{f}");
            ExitCode::from(f.exit_code())
        }
    }
}
