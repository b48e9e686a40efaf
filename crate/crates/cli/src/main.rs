use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use ifgen::widgets::Screen;
use ifgen_cli::config::Overrides;
use ifgen_cli::data::Database;
use ifgen_cli::explain::{cmd_explain, load_spec};
use ifgen_cli::generate::{cmd_generate, GenerateArgs};
use ifgen_cli::serve::{serve, AppState};
use ifgen_cli::CliError;

/// Generate interactive interfaces from SQL query logs.
#[derive(Parser)]
#[command(name = "ifgen", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Search for an interface that expresses every query in LOG.
    Generate(Generate),
    /// Print the cost breakdown of SPEC against LOG.
    Explain {
        spec: PathBuf,
        log: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Serve SPEC over HTTP for the interface frontend.
    Serve {
        spec: PathBuf,
        /// JSON file of tables to run queries against.
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long, default_value_t = 8080)]
        port: u16,
    },
}

#[derive(Args)]
struct Generate {
    log: PathBuf,
    /// Cost-model TOML, optionally with a [search] table.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Screen size as WxH.
    #[arg(long)]
    screen: Option<Screen>,
    /// Wall-clock budget in seconds.
    #[arg(long)]
    budget: Option<f64>,
    #[arg(long)]
    iterations: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Random widget assignments per reward evaluation.
    #[arg(long)]
    k: Option<usize>,
    /// UCT exploration constant.
    #[arg(long)]
    c: Option<f64>,
    /// Write the InterfaceSpec here instead of stdout.
    #[arg(long, short)]
    out: Option<PathBuf>,
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Write the search trace as JSON lines.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Rerun the search recorded in a manifest.
    #[arg(long)]
    replay: Option<PathBuf>,
    /// Print the cost breakdown to stderr.
    #[arg(long)]
    explain: bool,
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.cmd {
        Cmd::Generate(g) => {
            let args = GenerateArgs {
                log: g.log,
                config: g.config,
                overrides: Overrides {
                    screen: g.screen,
                    budget: g.budget,
                    iterations: g.iterations,
                    seed: g.seed,
                    k: g.k,
                    c: g.c,
                },
                out: g.out,
                manifest: g.manifest,
                trace: g.trace,
                replay: g.replay,
                explain: g.explain,
            };
            cmd_generate(&args).map(|_| ())
        }
        Cmd::Explain { spec, log, config } => cmd_explain(&spec, &log, config.as_deref()).map(|_| ()),
        Cmd::Serve { spec, data, port } => {
            let spec = load_spec(&spec)?;
            spec.validate()
                .map_err(|e| CliError::Inexpressible(format!("invalid spec: {e}")))?;
            let data = data.as_deref().map(Database::load).transpose()?;
            let rt = tokio::runtime::Runtime::new().map_err(|e| CliError::Internal(e.to_string()))?;
            rt.block_on(serve(AppState::new(spec, data), port))
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
