mod artifacts;
mod commands;
mod config;
mod error;

use std::net::SocketAddr;
use std::path::PathBuf;
use std::time::Duration;

use clap::{Parser, Subcommand};
use solidarity_core::prompt::{PromptFormat, ShotMode};
use solidarity_core::taxonomy::TargetGroup;

use crate::commands::{AnnotateOptions, ServeArgs};
use crate::config::RunConfig;
use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(name = "solidarity", version, about = "Classify (anti-)solidarity framing in parliamentary protocols")]
struct Cli {
    /// Run configuration (TOML).
    #[arg(long, global = true, default_value = "solidarity.toml")]
    config: PathBuf,
    #[arg(long, global = true, value_parser = parse_target)]
    target: Option<TargetGroup>,
    /// one-step | two-step
    #[arg(long, global = true, value_parser = parse_format)]
    format: Option<PromptFormat>,
    /// zero | few
    #[arg(long, global = true, value_parser = parse_mode)]
    mode: Option<ShotMode>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

fn parse_target(s: &str) -> Result<TargetGroup, String> {
    s.parse().map_err(|e: solidarity_core::taxonomy::LabelError| e.to_string())
}

fn parse_format(s: &str) -> Result<PromptFormat, String> {
    s.parse()
}

fn parse_mode(s: &str) -> Result<ShotMode, String> {
    s.parse()
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse protocol XML into sentence rows.
    Ingest,
    /// Find keyword instances with their context windows.
    Extract,
    /// Label instances with the configured model backend.
    Annotate {
        /// Render prompts to disk without contacting the backend.
        #[arg(long)]
        dry_run: bool,
        /// Only the first N instances.
        #[arg(long)]
        limit: Option<usize>,
        #[arg(long)]
        run_id: Option<String>,
    },
    /// Score a run against gold labels.
    Evaluate {
        #[arg(long)]
        run: Option<String>,
        #[arg(long)]
        gold: Option<PathBuf>,
    },
    /// Decade shares per label, optionally correlated with another run.
    Trends {
        #[arg(long)]
        run: Option<String>,
        #[arg(long)]
        compare: Option<String>,
    },
    /// Keyword-subset stability of the trends.
    Stability {
        #[arg(long)]
        run: Option<String>,
    },
    /// Combined summary of all runs, evaluations and trend files.
    Report {
        #[arg(long)]
        gold: Option<PathBuf>,
    },
    /// Run the annotation service.
    Serve {
        #[arg(long)]
        port: Option<u16>,
        /// Journal directory.
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        instances: Option<PathBuf>,
        #[arg(long = "static")]
        static_dir: Option<PathBuf>,
    },
    /// Write consensus and per-annotator gold files from a service journal.
    ExportGold {
        #[arg(long)]
        data: Option<PathBuf>,
    },
    /// Local chat-completions stand-in that answers deterministically.
    #[command(hide = true)]
    MockBackend {
        #[arg(long, default_value_t = 0)]
        port: u16,
    },
}

fn runtime() -> Result<tokio::runtime::Runtime, CliError> {
    tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(|e| CliError::Config(format!("cannot start runtime: {e}")))
}

fn print_manifest(m: &artifacts::StageManifest) {
    println!("{}", serde_json::to_string_pretty(m).expect("manifest serializes"));
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Command::MockBackend { port } = cli.command {
        let rt = runtime()?;
        return rt.block_on(async move {
            let addr = SocketAddr::from(([127, 0, 0, 1], port));
            let server = solidarity_llm::mock::MockServer::bind(addr, solidarity_llm::mock::hash_labeler(), Duration::ZERO)
                .await
                .map_err(|e| CliError::Config(format!("bind {addr}: {e}")))?;
            println!("{}", serde_json::json!({ "listening": server.base_url() }));
            let _ = tokio::signal::ctrl_c().await;
            Ok(())
        });
    }

    let mut cfg = RunConfig::load(&cli.config)?;
    if let Some(t) = cli.target {
        cfg.target = t;
    }
    if let Some(f) = cli.format {
        cfg.prompt.format = f;
    }
    if let Some(m) = cli.mode {
        cfg.prompt.mode = m;
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    cfg.validate()?;

    match cli.command {
        Command::Ingest => print_manifest(&commands::ingest(&cfg)?),
        Command::Extract => print_manifest(&commands::extract(&cfg)?),
        Command::Annotate { dry_run, limit, run_id } => {
            if run_id.is_some() {
                cfg.prompt.run_id = run_id;
            }
            let opts = AnnotateOptions { dry_run, limit };
            print_manifest(&runtime()?.block_on(commands::annotate(&cfg, &opts))?);
        }
        Command::Evaluate { run, gold } => {
            let run = run.unwrap_or_else(|| cfg.run_id());
            print_manifest(&commands::evaluate(&cfg, &run, gold.as_deref())?);
        }
        Command::Trends { run, compare } => {
            let run = run.unwrap_or_else(|| cfg.run_id());
            print_manifest(&commands::trends(&cfg, &run, compare.as_deref())?);
        }
        Command::Stability { run } => {
            let run = run.unwrap_or_else(|| cfg.run_id());
            print_manifest(&commands::stability(&cfg, &run)?);
        }
        Command::Report { gold } => {
            commands::report(&cfg, gold.as_deref())?;
        }
        Command::Serve { port, data, instances, static_dir } => {
            let host: std::net::IpAddr = cfg
                .service
                .host
                .parse()
                .map_err(|_| CliError::Config(format!("service.host: invalid address {:?}", cfg.service.host)))?;
            let args = ServeArgs {
                addr: SocketAddr::new(host, port.unwrap_or(cfg.service.port)),
                data_dir: data.unwrap_or_else(|| cfg.resolve(&cfg.service.data_dir)),
                instances: instances.unwrap_or_else(|| commands::instances_path(&cfg)),
                static_dir: static_dir.or_else(|| cfg.service.static_dir.as_ref().map(|d| cfg.resolve(d))),
            };
            runtime()?.block_on(commands::serve(&cfg, args))?;
        }
        Command::ExportGold { data } => {
            let dir = data.unwrap_or_else(|| cfg.resolve(&cfg.service.data_dir));
            print_manifest(&commands::export_gold(&cfg, &dir)?);
        }
        Command::MockBackend { .. } => unreachable!("handled above"),
    }
    Ok(())
}

fn main() {
    tracing_subscriber::fmt()
        .with_writer(std::io::stderr)
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "warn".into()),
        )
        .init();

    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion) => {
            let _ = e.print();
            std::process::exit(0);
        }
        Err(e) => {
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("invalid arguments").trim_start_matches("error: ");
            eprintln!("{}", CliError::Usage(first.to_string()).to_json_line());
            std::process::exit(1);
        }
    };
    if let Err(e) = run(cli) {
        eprintln!("{}", e.to_json_line());
        std::process::exit(e.exit_code());
    }
}
