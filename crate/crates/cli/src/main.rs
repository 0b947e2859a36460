use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use makino_cli::commands::{self, CorpusSource, StaticTest};
use makino_cli::config::parse_config;
use makino_cli::{resolve, threads_from_env, CliError};
use makino_core::ineq_lab::{IneqParams, InequalityKind};
use makino_core::wsobolev::WeightedNormSpec;

/// Euler-Poisson-Makino simulations and weighted Sobolev norm tools.
#[derive(Parser)]
#[command(name = "makino", version)]
struct Cli {
    /// Directory that all relative paths refer to.
    #[arg(long, global = true, default_value = ".")]
    workdir: PathBuf,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Time-evolve a configured initial state and record diagnostics.
    Simulate {
        /// INI run configuration.
        #[arg(long, conflicts_with = "manifest", required_unless_present = "manifest")]
        config: Option<PathBuf>,
        /// Rerun the configuration recorded in a manifest.
        #[arg(long)]
        manifest: Option<PathBuf>,
    },
    /// Print the dyadic shell breakdown of a dumped field.
    Norm(NormArgs),
    /// Measure one inequality over a corpus of fields.
    CheckIneq(CheckArgs),
    /// Solve Poisson's equation for a dumped density.
    Poisson {
        #[arg(long)]
        density: PathBuf,
        /// Potential dump; the gradient goes to `<stem>_grad.<ext>`.
        #[arg(long)]
        out: PathBuf,
        /// Density decay exponent assumed beyond a radial grid.
        #[arg(long, default_value_t = 5.0)]
        tail_exponent: f64,
    },
    /// Convergence table of the static solution under grid refinement.
    StaticTest {
        #[arg(long, default_value_t = 1.0)]
        a: f64,
        /// Comma-separated radial grid sizes.
        #[arg(long, value_delimiter = ',', default_values_t = [512, 1024, 2048])]
        resolutions: Vec<usize>,
        #[arg(long, default_value_t = 64.0)]
        extent: f64,
        #[arg(long, default_value_t = 0.5)]
        t_end: f64,
        #[arg(long, default_value_t = 0.4)]
        cfl: f64,
        /// Weight of the `L^2_delta` drift.
        #[arg(long, default_value_t = -1.2, allow_hyphen_values = true)]
        delta: f64,
    },
}

#[derive(Args)]
struct NormArgs {
    #[arg(long)]
    field: PathBuf,
    #[arg(long)]
    s: f64,
    #[arg(long, allow_hyphen_values = true)]
    delta: f64,
    #[arg(long, default_value_t = 10)]
    jmax: usize,
    #[arg(long, default_value_t = 64)]
    shell_n: usize,
}

#[derive(Args)]
struct CheckArgs {
    /// Inequality name, e.g. `multiplication` or `power-mass`.
    #[arg(long)]
    kind: InequalityKind,
    #[arg(long, default_value_t = 2.6)]
    s: f64,
    #[arg(long, default_value_t = -1.2, allow_hyphen_values = true)]
    delta: f64,
    /// Nonlinearity exponent; defaults to `2/(gamma-1)`.
    #[arg(long, conflicts_with = "gamma")]
    beta: Option<f64>,
    #[arg(long, default_value_t = 1.2)]
    gamma: f64,
    /// `builtin` or a directory of field dumps.
    #[arg(long, default_value = "builtin")]
    corpus: String,
    #[arg(long, default_value_t = 10)]
    jmax: usize,
    #[arg(long, default_value_t = 64)]
    shell_n: usize,
}

fn run(cli: Cli, out: &mut dyn Write) -> Result<(), CliError> {
    let wd = cli.workdir;
    match cli.command {
        Command::Simulate { config, manifest } => {
            let threads = threads_from_env()?;
            match (config, manifest) {
                (Some(c), _) => commands::simulate(&parse_config(&resolve(&wd, c))?, &wd, threads, out),
                (None, Some(m)) => commands::simulate_from_manifest(&resolve(&wd, m), &wd, threads, out),
                (None, None) => unreachable!("clap requires one of --config and --manifest"),
            }
        }
        Command::Norm(a) => {
            let spec = WeightedNormSpec::new(a.s, a.delta)
                .with_j_max(a.jmax)
                .with_shell_n(a.shell_n);
            commands::norm(&resolve(&wd, a.field), &spec, out)
        }
        Command::CheckIneq(a) => {
            let mut params = match a.beta {
                Some(beta) => IneqParams::new(a.s, a.delta, beta),
                None => IneqParams::from_gamma(a.gamma, a.s, a.delta)?,
            };
            params.norm = params.norm.with_j_max(a.jmax).with_shell_n(a.shell_n);
            let dir = resolve(&wd, &a.corpus);
            let corpus = if a.corpus == "builtin" {
                CorpusSource::Builtin
            } else {
                CorpusSource::Dir(&dir)
            };
            commands::check_ineq(a.kind, &params, corpus, out)
        }
        Command::Poisson {
            density,
            out: target,
            tail_exponent,
        } => commands::poisson(&resolve(&wd, density), &resolve(&wd, target), tail_exponent, out),
        Command::StaticTest {
            a,
            resolutions,
            extent,
            t_end,
            cfl,
            delta,
        } => {
            let t = StaticTest {
                a,
                resolutions,
                extent,
                t_end,
                cfl,
                delta,
            };
            commands::static_test(&t, out).map(|_| ())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    match run(cli, &mut lock) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let _ = lock.flush();
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
