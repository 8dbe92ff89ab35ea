mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

use config::{Family, Overrides, RunConfig};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Numerical(String),
    #[error("{0}")]
    Io(String),
}

impl From<ternary_ok::Error> for CliError {
    fn from(e: ternary_ok::Error) -> Self {
        if e.is_validation() {
            CliError::Validation(e.to_string())
        } else {
            CliError::Numerical(e.to_string())
        }
    }
}

impl From<ternary_ok::pattern::PatternError> for CliError {
    fn from(e: ternary_ok::pattern::PatternError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io(_) => 1,
        }
    }
}

/// Ground states of the one-dimensional ternary Ohta-Kawasaki energy.
#[derive(Debug, Parser)]
#[command(name = "ternary-ok", version)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// JSON run configuration; flags override its fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Volume fractions a,b,c.
    #[arg(long, global = true, value_parser = parse_triple, allow_hyphen_values = true)]
    omega: Option<[f64; 3]>,
    /// Interfacial tensions c12,c13,c23.
    #[arg(long, global = true, value_parser = parse_triple, allow_hyphen_values = true)]
    tensions: Option<[f64; 3]>,
    /// Long-range matrix family: ren, ohta, blend or general.
    #[arg(long, global = true)]
    family: Option<Family>,
    /// Long-range strength.
    #[arg(long, global = true, allow_hyphen_values = true)]
    gamma: Option<f64>,
    #[arg(long, global = true)]
    csv: Option<PathBuf>,
    #[arg(long, global = true)]
    svg: Option<PathBuf>,
    #[arg(long, global = true)]
    json: Option<PathBuf>,
    /// Worker threads; defaults to the machine parallelism.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Energy of one pattern, at given, uniform or optimized widths.
    Energy {
        #[arg(long)]
        pattern: String,
        #[arg(long, conflicts_with_all = ["widths", "optimize"])]
        uniform: bool,
        #[arg(long, value_delimiter = ',', conflicts_with = "optimize", allow_hyphen_values = true)]
        widths: Option<Vec<f64>>,
        #[arg(long)]
        optimize: bool,
    },
    /// Optimal widths of a pattern, or of its best repetition count.
    Optimize {
        #[arg(long)]
        pattern: String,
        /// Also try repetitions 1..=N of the pattern.
        #[arg(long)]
        repeats: Option<usize>,
    },
    /// Exhaustive search over all patterns up to a length.
    Search {
        #[arg(long, default_value_t = 12)]
        max_len: usize,
    },
    /// Winner map of the candidate set over a simplex section.
    Phasediag {
        #[arg(long, value_enum, default_value_t = SectionArg::Omega)]
        section: SectionArg,
        #[arg(long, default_value_t = ternary_ok::phasediag::DEFAULT_RESOLUTION)]
        resolution: usize,
    },
    /// Admissibility check, canonical representative and pairwise decomposition.
    Matrix {
        #[arg(long)]
        check: bool,
        #[arg(long)]
        canonicalize: bool,
        #[arg(long)]
        decompose: bool,
        /// Pairwise coefficients f12,f13,f23 instead of the configured matrix.
        #[arg(long, value_parser = parse_triple, allow_hyphen_values = true)]
        f: Option<[f64; 3]>,
        #[arg(long, default_value_t = ternary_ok::interaction::ADMISSIBILITY_TOL)]
        tol: f64,
    },
    /// Brute-force charged-ball arrangements.
    Balls {
        #[arg(long, value_enum)]
        mode: BallsMode,
        #[arg(long)]
        n: usize,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SectionArg {
    Omega,
    Tension,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum BallsMode {
    Binary,
    Ternary,
    ConjectureSweep,
}

fn parse_triple(s: &str) -> Result<[f64; 3], String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|x| x.trim().parse::<f64>().map_err(|e| format!("{x:?}: {e}")))
        .collect::<Result<_, _>>()?;
    v.try_into().map_err(|v: Vec<f64>| format!("expected 3 comma-separated numbers, got {}", v.len()))
}

fn run(cli: Cli) -> Result<ExitCode, CliError> {
    let c = &cli.common;
    let mut config = RunConfig::load(c.config.as_deref())?;
    config.apply(&Overrides {
        omega: c.omega,
        tensions: c.tensions,
        family: c.family,
        gamma: c.gamma,
        csv_path: c.csv.clone(),
        svg_path: c.svg.clone(),
        json_path: c.json.clone(),
    });
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = c.threads {
        if n == 0 {
            return Err(CliError::Validation("--threads must be at least 1".into()));
        }
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| CliError::Io(e.to_string()))?;
    pool.install(|| match cli.command {
        Command::Energy { pattern, uniform, widths, optimize: _ } => {
            let mode = match (uniform, widths) {
                (true, _) => commands::WidthMode::Uniform,
                (false, Some(w)) => commands::WidthMode::Given(w),
                (false, None) => commands::WidthMode::Optimized,
            };
            commands::energy(&config, &pattern, mode)
        }
        Command::Optimize { pattern, repeats } => commands::optimize(&config, &pattern, repeats),
        Command::Search { max_len } => commands::search(&config, max_len),
        Command::Phasediag { section, resolution } => commands::phasediag(&config, section, resolution),
        Command::Matrix { check, canonicalize, decompose, f, tol } => {
            commands::matrix(&config, commands::MatrixOps { check, canonicalize, decompose }, f, tol)
        }
        Command::Balls { mode, n } => commands::balls(&config, mode, n),
    })
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
