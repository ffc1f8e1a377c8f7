use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use kapranov_cli::{run, Command, RunOptions, THREADS_ENV};

#[derive(Parser)]
#[command(name = "kapranov", about = "Kapranov Leibniz-infinity algebras over the rationals")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    /// Instance document (JSON).
    #[arg(long, global = true)]
    input: Option<PathBuf>,
    #[arg(long, global = true)]
    max_arity: Option<usize>,
    /// Cohomological degree for `cohomology`.
    #[arg(long, global = true, allow_hyphen_values = true)]
    degree: Option<i32>,
    /// Write the report here instead of standard output.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    /// Worker threads; overrides KAPRANOV_THREADS.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Add wall-clock time to the report (breaks byte-identical output).
    #[arg(long, global = true)]
    timing: bool,
}

#[derive(Subcommand, Clone, Copy)]
enum Cmd {
    /// Structural checks: Jacobi, d² = 0, ∂² = 0, derivation compatibility.
    Validate,
    /// Atiyah cocycle, class vanishing and flat connections.
    Atiyah,
    /// Kapranov bracket tables up to --max-arity.
    Brackets,
    /// Leibniz-infinity identities up to --max-arity.
    CheckLeibniz,
    /// Functorial, connection-change and trivialization morphisms.
    Morphism,
    /// Splitting homotopy and the induced isomorphism (Lie pairs).
    Homotopy,
    /// Cohomology of B and its induced bracket.
    Cohomology,
}

impl From<Cmd> for Command {
    fn from(c: Cmd) -> Self {
        match c {
            Cmd::Validate => Command::Validate,
            Cmd::Atiyah => Command::Atiyah,
            Cmd::Brackets => Command::Brackets,
            Cmd::CheckLeibniz => Command::CheckLeibniz,
            Cmd::Morphism => Command::Morphism,
            Cmd::Homotopy => Command::Homotopy,
            Cmd::Cohomology => Command::Cohomology,
        }
    }
}

fn threads(cli: &Cli) -> Result<Option<usize>, String> {
    if let Some(k) = cli.threads {
        return Ok(Some(k));
    }
    match std::env::var(THREADS_ENV) {
        Ok(v) => v.trim().parse().map(Some).map_err(|_| format!("{THREADS_ENV} must be a positive integer")),
        Err(_) => Ok(None),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match threads(&cli) {
        Ok(Some(0)) => {
            eprintln!("error: thread count must be positive");
            return ExitCode::from(2);
        }
        Ok(Some(k)) => {
            if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(k).build_global() {
                eprintln!("error: {e}");
                return ExitCode::from(2);
            }
        }
        Ok(None) => {}
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    let Some(input) = &cli.input else {
        eprintln!("error: --input is required");
        return ExitCode::from(2);
    };
    let text = match std::fs::read_to_string(input) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", input.display());
            return ExitCode::from(2);
        }
    };
    let start = Instant::now();
    let opts = RunOptions { max_arity: cli.max_arity, degree: cli.degree };
    let mut report = match run(cli.command.into(), &text, &opts) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    if cli.timing {
        report.timing_ms = Some(start.elapsed().as_millis() as u64);
    }
    let json = report.to_json();
    match &cli.output {
        Some(p) => {
            if let Err(e) = std::fs::write(p, &json) {
                eprintln!("error: cannot write {}: {e}", p.display());
                return ExitCode::from(2);
            }
        }
        None => print!("{json}"),
    }
    if report.passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
