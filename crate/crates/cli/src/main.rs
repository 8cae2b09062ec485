//! `vdconf`: compile configuration models and run interactive sessions.
//!
//! Exit codes: 0 success, 1 check failure (fuzz), 2 I/O or parse error,
//! 3 invalid assignment.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "vdconf", version, about = "BDD-based interactive configurator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Compile a model file into an artifact.
    Compile {
        model: PathBuf,
        #[arg(short = 'o', long = "output")]
        output: PathBuf,
    },
    /// Print valid domains after applying `name=value` assignments in order.
    Domains {
        artifact: PathBuf,
        assignments: Vec<String>,
    },
    /// Interactive configuration on the terminal.
    Interact { artifact: PathBuf },
    /// Graph sizes and per-variable traversal costs.
    Stats { artifact: PathBuf },
    /// Write the solution BDD as Graphviz.
    ExportDot {
        artifact: PathBuf,
        #[arg(short = 'o', long = "output")]
        output: PathBuf,
    },
    /// Differential test against brute-force enumeration on random models.
    Fuzz(commands::FuzzArgs),
    /// Run the HTTP session service.
    Serve {
        artifact: PathBuf,
        #[arg(long)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        /// Idle session lifetime in seconds.
        #[arg(long, default_value_t = 1800)]
        session_ttl: u64,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Compile { model, output } => commands::compile(&model, &output),
        Command::Domains {
            artifact,
            assignments,
        } => commands::domains(&artifact, &assignments),
        Command::Interact { artifact } => commands::interact(&artifact),
        Command::Stats { artifact } => commands::stats(&artifact),
        Command::ExportDot { artifact, output } => commands::export_dot(&artifact, &output),
        Command::Fuzz(args) => commands::fuzz(&args),
        Command::Serve {
            artifact,
            port,
            host,
            session_ttl,
        } => commands::serve(&artifact, &host, port, session_ttl),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(e.exit_code())
        }
    }
}
