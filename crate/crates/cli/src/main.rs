//! `steklov` — run and validate Steklov-spectrum experiment configs.
//!
//! Exit codes: 0 all checks passed; 1 a hard check failed; 2 the
//! computation errored (report still written); 3 the config was rejected;
//! 4 an I/O failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use steklov_cli::runner::write_output;
use steklov_cli::{execute, parse_config};

#[derive(Parser)]
#[command(
    name = "steklov",
    about = "Steklov spectra and boundary-perturbation experiments on planar domains",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a JSON config and write result files.
    Run {
        /// Path to the JSON config.
        config: PathBuf,
        /// Output directory (overrides the config's `output.path`).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Suppress the console summary; files are still written.
        #[arg(long)]
        quiet: bool,
    },
    /// Parse and validate a config, printing its normalized form.
    Validate {
        /// Path to the JSON config.
        config: PathBuf,
    },
}

const EXIT_CHECK_FAILED: u8 = 1;
const EXIT_COMPUTE_ERROR: u8 = 2;
const EXIT_BAD_CONFIG: u8 = 3;
const EXIT_IO_ERROR: u8 = 4;

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Run { config, out, quiet } => run(&config, out.as_deref(), quiet),
        Command::Validate { config } => validate(&config),
    }
}

fn read_config(path: &std::path::Path) -> Result<String, ExitCode> {
    std::fs::read_to_string(path).map_err(|e| {
        eprintln!("cannot read config {}: {e}", path.display());
        ExitCode::from(EXIT_IO_ERROR)
    })
}

fn run(config_path: &std::path::Path, out: Option<&std::path::Path>, quiet: bool) -> ExitCode {
    let text = match read_config(config_path) {
        Ok(t) => t,
        Err(code) => return code,
    };
    let config = match parse_config(&text) {
        Ok(c) => c,
        Err(e) => {
            eprint!("{e}");
            eprintln!("{}", e.to_value());
            return ExitCode::from(EXIT_BAD_CONFIG);
        }
    };

    let out_dir = out
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(&config.output.path));
    let result = execute(&config);

    let written = match write_output(&result, &out_dir) {
        Ok(paths) => paths,
        Err(e) => {
            eprintln!("cannot write results under {}: {e}", out_dir.display());
            return ExitCode::from(EXIT_IO_ERROR);
        }
    };

    if !quiet {
        // Ignore write failures (e.g. a closed pipe): console output is a
        // courtesy; the files and the exit code are the contract.
        use std::io::Write as _;
        let stdout = std::io::stdout();
        let mut out = stdout.lock();
        let _ = writeln!(
            out,
            "{} on {} nodes (basis order {})",
            result.report.experiment, config.curve.n_nodes, config.basis_order
        );
        for line in result.report.console_lines() {
            let _ = writeln!(out, "{line}");
        }
        for path in &written {
            let _ = writeln!(out, "wrote {}", path.display());
        }
    }

    if result.report.error.is_some() {
        ExitCode::from(EXIT_COMPUTE_ERROR)
    } else if result.report.all_checks_passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_CHECK_FAILED)
    }
}

fn validate(config_path: &std::path::Path) -> ExitCode {
    let text = match read_config(config_path) {
        Ok(t) => t,
        Err(code) => return code,
    };
    match parse_config(&text) {
        Ok(config) => {
            use std::io::Write as _;
            let _ = writeln!(
                std::io::stdout(),
                "{}",
                serde_json::to_string_pretty(&config.to_value()).expect("config echo serializes")
            );
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprint!("{e}");
            eprintln!("{}", e.to_value());
            ExitCode::from(EXIT_BAD_CONFIG)
        }
    }
}
