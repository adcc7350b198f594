use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use qtomo_cli::commands;
use qtomo_cli::config::RunConfig;
use qtomo_cli::validate::{run_suites, Suite};
use qtomo_core::schemes::SymmetrizationScheme;
use qtomo_core::Error;

#[derive(Parser)]
#[command(
    name = "qtomo",
    version,
    about = "Symplectic tomography under linear quantization"
)]
struct Cli {
    /// Worker threads (default: QTOMO_THREADS, else all cores)
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the moments σ_0..σ_K of a scheme, optionally G(s)
    Scheme {
        #[arg(long, default_value = "weyl")]
        name: String,
        /// Read a custom [scheme] section from this config instead
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 8)]
        moments: usize,
        #[arg(long = "g", num_args = 1.., allow_negative_numbers = true)]
        g_at: Vec<f64>,
    },
    /// Export the trajectory, ψ_n and ρ at state.time
    States {
        #[arg(long)]
        config: PathBuf,
    },
    /// Scheme Wigner function and Fourier image at state.time
    Wigner {
        #[arg(long)]
        config: PathBuf,
    },
    /// Symplectic tomogram and characteristic function at state.time
    Tomogram {
        #[arg(long)]
        config: PathBuf,
    },
    /// Evolve the scheme's θ-family from t = 0
    Evolve {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run acceptance criteria
    Validate {
        #[arg(long, default_value = "all")]
        suite: String,
    },
}

enum Failure {
    Usage(Error),
    Runtime(Error),
    Validation,
}

fn is_usage(e: &Error) -> bool {
    matches!(
        e,
        Error::Config(_)
            | Error::Parse(_)
            | Error::Drive(_)
            | Error::InvalidScheme(_)
            | Error::ThetaOutOfRange(_)
            | Error::DegenerateGrid(_)
    )
}

fn classify(e: Error) -> Failure {
    if is_usage(&e) {
        Failure::Usage(e)
    } else {
        Failure::Runtime(e)
    }
}

fn json_escape(s: &str) -> String {
    s.chars()
        .flat_map(|c| match c {
            '"' => "\\\"".chars().collect::<Vec<_>>(),
            '\\' => "\\\\".chars().collect(),
            '\n' => "\\n".chars().collect(),
            c if (c as u32) < 0x20 => format!("\\u{:04x}", c as u32).chars().collect(),
            c => vec![c],
        })
        .collect()
}

fn run(cli: Cli) -> Result<(), Failure> {
    let print_written = |files: Vec<PathBuf>| {
        for f in files {
            println!("{}", f.display());
        }
    };
    match cli.command {
        Command::Scheme {
            name,
            config,
            moments,
            g_at,
        } => {
            let scheme = match config {
                Some(path) => RunConfig::load(&path).map_err(classify)?.scheme,
                None => SymmetrizationScheme::builtin(&name).map_err(classify)?,
            };
            print!("{}", commands::scheme_report(&scheme, moments, &g_at));
        }
        Command::States { config } => {
            let cfg = RunConfig::load(&config).map_err(classify)?;
            print_written(commands::states(&cfg).map_err(classify)?);
        }
        Command::Wigner { config } => {
            let cfg = RunConfig::load(&config).map_err(classify)?;
            print_written(commands::wigner(&cfg).map_err(classify)?);
        }
        Command::Tomogram { config } => {
            let cfg = RunConfig::load(&config).map_err(classify)?;
            print_written(commands::tomogram(&cfg).map_err(classify)?);
        }
        Command::Evolve { config } => {
            let cfg = RunConfig::load(&config).map_err(classify)?;
            print_written(commands::evolve(&cfg).map_err(classify)?);
        }
        Command::Validate { suite } => {
            let suites = Suite::parse_list(&suite)
                .ok_or_else(|| Failure::Usage(Error::Config(format!("unknown suite `{suite}`"))))?;
            let report = run_suites(&suites, |c| print!("{c}"));
            let failed = report.iter().filter(|c| !c.passed()).count();
            println!(
                "{} of {} criteria passed",
                report.len() - failed,
                report.len()
            );
            if failed > 0 {
                return Err(Failure::Validation);
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let threads = cli.threads.or_else(|| {
        std::env::var("QTOMO_THREADS")
            .ok()
            .and_then(|v| v.trim().parse().ok())
    });
    let pool = match rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
    {
        Ok(p) => p,
        Err(e) => {
            eprintln!(
                "{{\"error\":\"usage\",\"message\":\"{}\"}}",
                json_escape(&e.to_string())
            );
            return ExitCode::from(2);
        }
    };
    match pool.install(|| run(cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Validation) => ExitCode::from(1),
        Err(Failure::Usage(e)) => {
            eprintln!(
                "{{\"error\":\"config\",\"message\":\"{}\"}}",
                json_escape(&e.to_string())
            );
            ExitCode::from(2)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!(
                "{{\"error\":\"runtime\",\"message\":\"{}\"}}",
                json_escape(&e.to_string())
            );
            ExitCode::from(1)
        }
    }
}
