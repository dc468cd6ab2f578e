mod config;
mod output;
mod scenarios;
mod tasks;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{CommandFactory, Parser, Subcommand};

use config::{parse_scenario, Scenario};

const EXIT_USAGE: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERIC: u8 = 3;
const EXIT_IO: u8 = 4;

#[derive(Parser)]
#[command(name = "nhjump", version, about = "Quantum-jump corrections to non-Hermitian dynamics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file or a bundled scenario by name.
    Run {
        config: String,
        /// Output directory, overriding the scenario's `output`.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// List the bundled scenarios.
    List,
    /// Parse a scenario and build its models without running the task.
    Validate { config: String },
}

fn load(arg: &str) -> Result<Scenario, ExitCode> {
    let path = Path::new(arg);
    let (src, default_name) = if path.is_file() {
        match std::fs::read_to_string(path) {
            Ok(s) => (
                s,
                path.file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_else(|| "scenario".into()),
            ),
            Err(e) => {
                eprintln!("error: cannot read {arg}: {e}");
                return Err(ExitCode::from(EXIT_IO));
            }
        }
    } else if let Some(s) = scenarios::bundled(arg) {
        (s.to_string(), arg.to_string())
    } else {
        eprintln!("error: no scenario file or bundled scenario named `{arg}`");
        return Err(ExitCode::from(EXIT_CONFIG));
    };
    parse_scenario(&src, &default_name).map_err(|e| {
        eprintln!("error: {arg}: {e}");
        ExitCode::from(EXIT_CONFIG)
    })
}

fn numeric_failure(e: nhjump_core::Error) -> ExitCode {
    eprintln!("{}: {e}", e.name());
    ExitCode::from(EXIT_NUMERIC)
}

fn configure_threads() {
    if let Some(n) = std::env::var("NHJUMP_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&n| n > 0)
    {
        // Fails only if a global pool already exists.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

fn run(arg: &str, output: Option<PathBuf>) -> ExitCode {
    let sc = match load(arg) {
        Ok(s) => s,
        Err(code) => return code,
    };
    let outcome = match tasks::run(&sc) {
        Ok(o) => o,
        Err(e) => return numeric_failure(e),
    };
    let dir = output.unwrap_or_else(|| sc.output.clone());
    match output::write_outcome(&dir, &sc, &outcome) {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: writing {}: {e}", dir.display());
            ExitCode::from(EXIT_IO)
        }
    }
}

fn validate(arg: &str) -> ExitCode {
    let sc = match load(arg) {
        Ok(s) => s,
        Err(code) => return code,
    };
    match tasks::dry_run(&sc) {
        Ok(()) => {
            println!("ok: {} ({} / {})", sc.name, sc.model.kind().as_str(), sc.task.as_str());
            ExitCode::SUCCESS
        }
        Err(e) => numeric_failure(e),
    }
}

fn main() -> ExitCode {
    if std::env::args_os().len() <= 1 {
        eprintln!("{}", Cli::command().render_help());
        return ExitCode::from(EXIT_USAGE);
    }
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    configure_threads();
    match cli.command {
        Command::Run { config, output } => run(&config, output),
        Command::List => {
            for (name, src) in scenarios::BUNDLED {
                println!("{name:<10} {}", scenarios::description(src));
            }
            ExitCode::SUCCESS
        }
        Command::Validate { config } => validate(&config),
    }
}
